"""Study configuration: a YAML file of flat dotted keys plus CLI overrides.

Nested mappings are flattened, so ``wedge: {theta: 1.0}`` and
``wedge.theta: 1.0`` are the same key.  Unknown keys are rejected.  Angles
are radians only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np
import yaml

from .errors import ConfigError
from .friction import GasState, QuadratureSpec
from .geometry import WedgeConfig
from .oracle import McSpec


def _real(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}", key=key)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key}: expected a finite number", key=key)
    return value


def _integer(key, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}", key=key)
    return value


def _reals(key, value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{key}: expected a list of numbers", key=key)
    return tuple(_real(key, x) for x in value)


def _band(key, value):
    lo, hi = _reals(key, value) if isinstance(value, (list, tuple)) and len(value) == 2 else (None, None)
    if lo is None or not lo < hi:
        raise ConfigError(f"{key}: expected [low, high] with low < high", key=key)
    return (lo, hi)


def _text(choices=None):
    def parse(key, value):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string", key=key)
        if choices and value not in choices:
            raise ConfigError(f"{key}: expected one of {', '.join(choices)}", key=key)
        return value

    return parse


KEYS = {
    "wedge.theta": _real,
    "wedge.length": _real,
    "gas.rho": _real,
    "gas.beta": _real,
    "quadrature.rel_tol": _real,
    "quadrature.abs_tol": _real,
    "quadrature.velocity_cutoff_sigmas": _real,
    "quadrature.eta_panels": _integer,
    "quadrature.velocity_panels": _integer,
    "quadrature.order": _integer,
    "quadrature.max_refinements": _integer,
    "mc.n_samples": _integer,
    "mc.seed": _integer,
    "mc.stratify_eta": _integer,
    "mc.workers": _integer,
    "grid.velocities": _reals,
    "grid.times": _reals,
    "grid.t_min": _real,
    "grid.t_max": _real,
    "grid.t_points": _integer,
    "grid.T_values": _reals,
    "decay.exponent_band": _band,
    "decay.synthetic_amplitude": _real,
    "limit.energies": _reals,
    "limit.v_cap": _real,
    "output.path": _text(),
    "output.format": _text(("csv", "json")),
}


@dataclass(frozen=True)
class StudyConfig:
    wedge: WedgeConfig = WedgeConfig(theta=math.pi / 3)
    gas: GasState = GasState()
    quadrature: QuadratureSpec = QuadratureSpec()
    mc: McSpec = McSpec()
    workers: int = 1
    velocities: tuple | None = None
    times: tuple | None = None
    t_min: float = 2.0
    t_max: float = 50.0
    t_points: int = 16
    T_values: tuple = (0.05, 0.1, 0.5, 1.0)
    exponent_band: tuple = (-5.3, -4.7)
    energies: tuple = (0.05, 0.1, 0.2)
    v_cap: float = 50.0
    output_path: str | None = None
    output_format: str | None = None
    synthetic_amplitude: float | None = None

    def velocity_grid(self, default):
        grid = self.velocities if self.velocities is not None else tuple(default)
        if not grid:
            raise ConfigError("velocity grid is empty", key="grid.velocities")
        if any(V < 0 for V in grid):
            raise ConfigError("velocities must be non-negative", key="grid.velocities")
        return grid

    def time_grid(self, default=None):
        """Explicit ``grid.times`` if set, else ``default`` if given, else a
        log-spaced grid on ``[t_min, t_max]``."""
        if self.times is not None:
            grid = self.times
        elif default is not None:
            grid = tuple(default)
        else:
            self.check_window()
            if self.t_points < 1:
                raise ConfigError("t_points must be at least 1", key="grid.t_points")
            grid = tuple(float(t) for t in np.geomspace(self.t_min, self.t_max, self.t_points))
        if not grid:
            raise ConfigError("time grid is empty", key="grid.times")
        if any(t < 0 for t in grid):
            raise ConfigError("times must be non-negative", key="grid.times")
        return grid

    def check_window(self):
        if not 0 < self.t_min < self.t_max:
            raise ConfigError("need 0 < t_min < t_max", key="grid.t_min")

    def echo(self) -> dict:
        """Plain-data view of the effective configuration, keyed like the file."""
        flat = {f"wedge.{k}": v for k, v in asdict(self.wedge).items()}
        flat.update({f"gas.{k}": v for k, v in asdict(self.gas).items()})
        flat.update({f"quadrature.{k}": v for k, v in asdict(self.quadrature).items()})
        flat.update({f"mc.{k}": v for k, v in asdict(self.mc).items()})
        flat.update(
            {
                "mc.workers": self.workers,
                "grid.velocities": None if self.velocities is None else list(self.velocities),
                "grid.times": None if self.times is None else list(self.times),
                "grid.t_min": self.t_min,
                "grid.t_max": self.t_max,
                "grid.t_points": self.t_points,
                "grid.T_values": list(self.T_values),
                "decay.exponent_band": list(self.exponent_band),
                "decay.synthetic_amplitude": self.synthetic_amplitude,
                "limit.energies": list(self.energies),
                "limit.v_cap": self.v_cap,
                "output.format": self.output_format,
            }
        )
        return flat


def flatten(mapping, prefix=""):
    flat = {}
    for key, value in mapping.items():
        if not isinstance(key, str):
            raise ConfigError(f"config keys must be strings, got {key!r}", key=str(key))
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def load_yaml(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}", key="--config") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}", key="--config") from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of keys to values", key="--config")
    return flatten(raw)


def build_config(values: dict, base: StudyConfig = StudyConfig()) -> StudyConfig:
    """Apply flat dotted ``values`` on top of ``base``, validating each key."""
    parsed = {}
    for key, value in values.items():
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}", key=key)
        parsed[key] = KEYS[key](key, value)

    def section(obj, prefix):
        updates = {k.split(".", 1)[1]: v for k, v in parsed.items() if k.startswith(prefix + ".")}
        return replace(obj, **updates) if updates else obj

    mc_values = {k: v for k, v in parsed.items() if k != "mc.workers"}
    parsed_mc = {k.split(".", 1)[1]: v for k, v in mc_values.items() if k.startswith("mc.")}
    top = {
        "grid.velocities": "velocities",
        "grid.times": "times",
        "grid.t_min": "t_min",
        "grid.t_max": "t_max",
        "grid.t_points": "t_points",
        "grid.T_values": "T_values",
        "decay.exponent_band": "exponent_band",
        "decay.synthetic_amplitude": "synthetic_amplitude",
        "limit.energies": "energies",
        "limit.v_cap": "v_cap",
        "output.path": "output_path",
        "output.format": "output_format",
        "mc.workers": "workers",
    }
    return replace(
        base,
        wedge=section(base.wedge, "wedge"),
        gas=section(base.gas, "gas"),
        quadrature=section(base.quadrature, "quadrature"),
        mc=replace(base.mc, **parsed_mc) if parsed_mc else base.mc,
        **{attr: parsed[key] for key, attr in top.items() if key in parsed},
    )


def load_config(path=None, overrides: dict | None = None) -> StudyConfig:
    """File values first, then ``overrides`` (CLI flags win)."""
    values = load_yaml(path) if path else {}
    values.update(overrides or {})
    return build_config(values)
