"""Command-line studies of wedge friction in a free gas.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 a checked property failed.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import __version__
from .asymptotics import (
    fit_decay_exponent,
    solve_limiting_velocity,
    stationarity_obstruction_scan,
)
from .config import load_config
from .errors import (
    ConfigError,
    DomainError,
    EstimationError,
    MultipleRecollisionError,
    NonMonotoneError,
    ObstructionViolation,
    QuadratureConvergenceError,
    UnboundedVelocityError,
)
from .friction import friction_breakdown
from .geometry import T_to_time
from .oracle import estimate_friction_mc

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ASSERT = 0, 2, 3, 4

FRICTION_HEADER = ("V", "t", "F0", "g", "g_inf", "delta_g", "F_total")


def fmt_number(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        return "null"
    return format(float(x), ".17g")


def to_json(obj, indent=0) -> str:
    # json.dumps would print floats with repr; numbers here always use .17g
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'
    if isinstance(obj, (bool, int, float)):
        return fmt_number(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{to_json(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt_number(row[h]) for h in header) for row in rows]
    return "\n".join(lines) + "\n"


class Report:
    def __init__(self, header, rows, summary=None, passed=True):
        self.header = header
        self.rows = rows
        self.summary = summary or {}
        self.passed = passed

    def render(self, fmt, meta) -> str:
        if fmt == "csv":
            return to_csv(self.header, self.rows)
        data = {"rows": self.rows}
        data.update(self.summary)
        return to_json({"meta": meta, "data": data}) + "\n"


def cmd_friction_curve(cfg) -> Report:
    rows = []
    for V in cfg.velocity_grid((0.0, 0.25, 0.5, 1.0)):
        for t in cfg.time_grid():
            b = friction_breakdown(V, t, cfg.wedge, cfg.gas, cfg.quadrature)
            rows.append(
                dict(V=V, t=t, F0=b.f0, g=b.g, g_inf=b.g_inf, delta_g=b.delta_g, F_total=b.fv_total)
            )
    return Report(FRICTION_HEADER, rows)


def cmd_decay_study(cfg) -> Report:
    cfg.check_window()
    lo, hi = cfg.exponent_band
    delta_g = None
    if cfg.synthetic_amplitude is not None:
        amp = cfg.synthetic_amplitude

        def delta_g(t):
            return amp / (1.0 + t) ** 5

    rows = []
    for V in cfg.velocity_grid((0.5,)):
        fit = fit_decay_exponent(
            V, cfg.wedge, cfg.gas, cfg.t_min, cfg.t_max, cfg.t_points, cfg.quadrature, delta_g
        )
        rows.append(
            dict(
                V=V,
                exponent=fit.exponent,
                log_intercept=fit.log_intercept,
                r_squared=fit.r_squared,
                c_lower=fit.c_lower,
                c_upper=fit.c_upper,
                time_offset=fit.time_offset,
                t_first=fit.t_grid[0],
                t_last=fit.t_grid[-1],
                n_points=len(fit.t_grid),
                in_band=lo <= fit.exponent <= hi,
            )
        )
    passed = all(r["in_band"] for r in rows)
    header = tuple(rows[0])
    summary = {"window": [cfg.t_min, cfg.t_max], "exponent_band": [lo, hi], "passed": passed}
    return Report(header, rows, summary, passed)


def cmd_oracle_compare(cfg) -> Report:
    rows = []
    for V in cfg.velocity_grid((0.0, 0.5, 1.0)):
        for t in cfg.time_grid((1.0, 10.0, 100.0)):
            quad = friction_breakdown(V, t, cfg.wedge, cfg.gas, cfg.quadrature).fv_total
            mc = estimate_friction_mc(V, t, cfg.wedge, cfg.gas, cfg.mc, cfg.workers)
            rows.append(
                dict(V=V, t=t, quadrature=quad, mc_mean=mc.mean, mc_stderr=mc.std_error, z_score=mc.z_score(quad))
            )
    passed = all(abs(r["z_score"]) <= 3 for r in rows)
    header = ("V", "t", "quadrature", "mc_mean", "mc_stderr", "z_score")
    return Report(header, rows, {"passed": passed}, passed)


def cmd_stationary_check(cfg) -> Report:
    Vs = cfg.velocity_grid((0.0, 0.1, 0.5, 1.0, 2.0))
    Ts = cfg.T_values
    if not Ts:
        raise ConfigError("T grid is empty", key="grid.T_values")
    report = stationarity_obstruction_scan(cfg.wedge, cfg.gas, Vs, Ts, cfg.quadrature, check_fd=True)
    rows = []
    for V, row, fd_row in zip(report.V_grid, report.derivative, report.fd_derivative):
        for T, x, fd in zip(report.T_grid, row, fd_row):
            rows.append(dict(V=V, T=T, t=T_to_time(cfg.wedge, T), d_delta_g_dT=x, finite_difference=fd))
    summary = {
        "summary": report.summary,
        "zero_velocity_excluded": report.zero_velocity_excluded,
        "max_fd_rel_error": report.max_fd_rel_error,
        "passed": report.passed,
    }
    header = ("V", "T", "t", "d_delta_g_dT", "finite_difference")
    return Report(header, rows, summary, report.passed)


def cmd_limiting_velocity(cfg) -> Report:
    if not cfg.energies:
        raise ConfigError("energy list is empty", key="limit.energies")
    rows = []
    for E in cfg.energies:
        if not E > 0:
            raise ConfigError("energies must be positive", key="limit.energies")
        full = solve_limiting_velocity(E, cfg.wedge, cfg.gas, cfg.quadrature, cfg.v_cap)
        plain = solve_limiting_velocity(E, cfg.wedge, cfg.gas, cfg.quadrature, cfg.v_cap, include_recollision=False)
        rows.append(
            dict(
                E=E,
                v_bar_inf=full.v_bar_inf,
                v_inf_without_recollision=plain.v_bar_inf,
                residual=full.residual,
                bracket_lo=full.bracket[0],
                bracket_hi=full.bracket[1],
            )
        )
    ordered = sorted(rows, key=lambda r: r["E"])
    monotone = all(a["v_bar_inf"] <= b["v_bar_inf"] for a, b in zip(ordered, ordered[1:]))
    residual_ok = all(abs(r["residual"]) <= 1e-10 * r["E"] for r in rows)
    passed = monotone and residual_ok
    header = tuple(rows[0])
    return Report(header, rows, {"monotone_in_E": monotone, "passed": passed}, passed)


COMMANDS = {
    "friction-curve": (cmd_friction_curve, "csv"),
    "decay-study": (cmd_decay_study, "json"),
    "oracle-compare": (cmd_oracle_compare, "csv"),
    "stationary-check": (cmd_stationary_check, "json"),
    "limiting-velocity": (cmd_limiting_velocity, "json"),
}


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML file of dotted keys")
    common.add_argument("--theta", type=float, help="wedge half-angle in radians")
    common.add_argument("--length", type=float, help="arm length")
    common.add_argument("--beta", type=float, help="inverse temperature")
    common.add_argument("--rho", type=float, help="gas density")
    common.add_argument("--velocity", type=_float_list, help="comma-separated body velocities")
    common.add_argument("--times", type=_float_list, help="comma-separated times (overrides the window)")
    common.add_argument("--t-min", type=float)
    common.add_argument("--t-max", type=float)
    common.add_argument("--t-points", type=int)
    common.add_argument("--energy", type=_float_list, help="comma-separated applied forces")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--synthetic", type=float, metavar="A", help="fit A/(1+t)^5 instead of quadrature")
    common.add_argument("--output", metavar="PATH")
    common.add_argument("--format", choices=("csv", "json"))

    parser = argparse.ArgumentParser(prog="wedgefriction", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, _) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=func.__name__.replace("cmd_", "").replace("_", " "))
    return parser


FLAG_KEYS = {
    "theta": "wedge.theta",
    "length": "wedge.length",
    "beta": "gas.beta",
    "rho": "gas.rho",
    "velocity": "grid.velocities",
    "times": "grid.times",
    "t_min": "grid.t_min",
    "t_max": "grid.t_max",
    "t_points": "grid.t_points",
    "energy": "limit.energies",
    "samples": "mc.n_samples",
    "seed": "mc.seed",
    "workers": "mc.workers",
    "synthetic": "decay.synthetic_amplitude",
    "output": "output.path",
    "format": "output.format",
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {key: getattr(args, flag) for flag, key in FLAG_KEYS.items() if getattr(args, flag) is not None}
    func, default_format = COMMANDS[args.command]
    try:
        cfg = load_config(args.config, overrides)
        report = func(cfg)
    except (ConfigError, DomainError) as exc:
        key = getattr(exc, "key", None)
        print(f"config error{f' [{key}]' if key else ''}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ObstructionViolation, NonMonotoneError, AssertionError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (
        QuadratureConvergenceError,
        EstimationError,
        UnboundedVelocityError,
        MultipleRecollisionError,
        FloatingPointError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    fmt = cfg.output_format or default_format
    meta = {"command": args.command, "version": __version__, "seed": cfg.mc.seed, "config": cfg.echo()}
    text = report.render(fmt, meta)
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if "summary" in report.summary:
        print(report.summary["summary"], file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_ASSERT
