import csv
import io
import json
import math

import pytest

from wedgefriction.cli import FRICTION_HEADER, fmt_number, main, to_json
from wedgefriction.config import build_config, load_config
from wedgefriction.errors import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_friction_curve_csv(capsys):
    code, out, _ = run(capsys, "friction-curve", "--velocity", "0,0.5", "--times", "0,1,10")
    assert code == 0
    lines = out.split("\n")
    assert lines[0] == "V,t,F0,g,g_inf,delta_g,F_total"
    assert "\r" not in out and out.endswith("\n")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 6
    for row in rows[:3]:
        assert all(float(row[h]) == 0.0 for h in FRICTION_HEADER[2:])


def test_csv_and_json_encode_identical_numbers(capsys):
    args = ("friction-curve", "--velocity", "0.25,1", "--times", "0.5,3")
    _, csv_out, _ = run(capsys, *args, "--format", "csv")
    _, json_out, _ = run(capsys, *args, "--format", "json")
    doc = json.loads(json_out)
    assert set(doc) == {"meta", "data"}
    assert doc["meta"]["seed"] == 20240611
    rows = list(csv.DictReader(io.StringIO(csv_out)))
    for c_row, j_row in zip(rows, doc["data"]["rows"]):
        for h in FRICTION_HEADER:
            assert float(c_row[h]) == j_row[h]


def test_numbers_round_trip():
    for x in (0.1, 1 / 3, math.pi, 1e-300, 2.5e17):
        assert float(fmt_number(x)) == x
    assert json.loads(to_json({"a": [0.1, None, True], "b": "x\"y"})) == {"a": [0.1, None, True], "b": 'x"y'}


def test_output_file_is_byte_stable(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        code, _, _ = run(capsys, "oracle-compare", "--velocity", "0,0.5", "--times", "10", "--samples", "20000", "--output", str(p), "--format", "json")
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_oracle_compare_reports_z_scores(capsys):
    code, out, _ = run(capsys, "oracle-compare", "--velocity", "0,0.5", "--times", "10", "--samples", "100000")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["V"]) for r in rows] == [0.0, 0.5]
    assert all(abs(float(r["z_score"])) <= 3 for r in rows)


def test_decay_study(capsys):
    code, out, _ = run(capsys, "decay-study")
    assert code == 0
    row = json.loads(out)["data"]["rows"][0]
    assert -5.3 <= row["exponent"] <= -4.7
    code, out, _ = run(capsys, "decay-study", "--synthetic", "7")
    assert code == 0
    assert json.loads(out)["data"]["rows"][0]["exponent"] == pytest.approx(-5.0, abs=1e-6)


def test_decay_study_fails_outside_the_band(tmp_path, capsys):
    cfg = tmp_path / "band.yaml"
    cfg.write_text("decay:\n  exponent_band: [-3.0, -2.0]\n")
    code, _, _ = run(capsys, "decay-study", "--config", str(cfg), "--synthetic", "7")
    assert code == 4


def test_empty_time_grid_is_a_config_error(capsys):
    code, _, err = run(capsys, "decay-study", "--t-points", "0")
    assert code == 2
    code, _, err = run(capsys, "friction-curve", "--times", "")
    assert code == 2 and "grid.times" in err


def test_stationary_check(capsys):
    code, _, err = run(capsys, "stationary-check")
    assert code == 0
    assert "no stationary velocity: PASS" in err


def test_limiting_velocity(capsys):
    code, out, _ = run(capsys, "limiting-velocity", "--energy", "0.1")
    assert code == 0
    row = json.loads(out)["data"]["rows"][0]
    assert row["v_bar_inf"] > 0
    assert abs(row["residual"]) <= 1e-10 * 0.1


def test_unbounded_velocity_is_a_numerical_failure(tmp_path, capsys):
    cfg = tmp_path / "cap.yaml"
    cfg.write_text("limit.v_cap: 1.0\nlimit.energies: [1000.0]\n")
    code, _, _ = run(capsys, "limiting-velocity", "--config", str(cfg))
    assert code == 3


def test_unknown_key_is_named(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("wedge:\n  theta_degrees: 60\n")
    code, _, err = run(capsys, "friction-curve", "--config", str(cfg))
    assert code == 2 and "wedge.theta_degrees" in err


def test_degrees_are_rejected(capsys):
    code, _, err = run(capsys, "friction-curve", "--theta", "60")
    assert code == 2 and "wedge.theta" in err


def test_malformed_values(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("gas.beta: hot\n")
    code, _, err = run(capsys, "friction-curve", "--config", str(cfg))
    assert code == 2 and "gas.beta" in err
    cfg.write_text("- not a mapping\n")
    code, _, _ = run(capsys, "friction-curve", "--config", str(cfg))
    assert code == 2


def test_flags_override_file(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("wedge:\n  theta: 1.2\n  length: 2.0\nmc.seed: 5\n")
    loaded = load_config(cfg, {"wedge.theta": 1.3})
    assert loaded.wedge.theta == 1.3 and loaded.wedge.length == 2.0 and loaded.mc.seed == 5


def test_build_config_rejects_non_integer_counts():
    with pytest.raises(ConfigError) as err:
        build_config({"mc.n_samples": 1.5})
    assert err.value.key == "mc.n_samples"
