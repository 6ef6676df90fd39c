"""Long-time behaviour of the recollision correction.

* ``fit_decay_exponent`` measures the power law of ``delta_g(V, t)`` and the
  constants of the ``(1+t)**-5`` sandwich on a grid.
* ``stationarity_obstruction_scan`` checks ``d(delta_g)/dT > 0`` (so ``g``
  keeps changing in time and no constant velocity balances a constant force).
* ``solve_limiting_velocity`` solves ``E = F0(V) + g_inf(V)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, NonMonotoneError, ObstructionViolation, UnboundedVelocityError
from .friction import (
    DEFAULT_SPEC,
    GasState,
    QuadratureSpec,
    delta_g_direct,
    dg_dT,
    friction_f0,
    friction_g,
    friction_g_inf,
)
from .geometry import T_to_time, WedgeConfig


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    log_intercept: float
    r_squared: float
    time_offset: float


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    log_intercept: float
    r_squared: float
    t_grid: list
    c_lower: float
    c_upper: float
    time_offset: float = 0.0
    window: tuple = (math.nan, math.nan)
    truncated: bool = False


@dataclass(frozen=True)
class LimitingVelocity:
    v_bar_inf: float
    residual: float
    bracket: tuple
    E: float = math.nan
    include_recollision: bool = True


@dataclass
class StationarityReport:
    V_grid: list
    T_grid: list
    derivative: list
    fd_derivative: list | None = None
    zero_velocity_rows: list = field(default_factory=list)
    zero_velocity_residual: float = math.nan

    @property
    def zero_velocity_excluded(self) -> bool:
        """V̄ = 0 cannot be stationary: F0(0) = g(0, t) = 0 leaves E unbalanced."""
        return self.zero_velocity_residual > 0

    @property
    def passed(self) -> bool:
        rows = [
            row for V, row in zip(self.V_grid, self.derivative) if V > 0
        ]
        return self.zero_velocity_excluded and all(x > 0 for row in rows for x in row)

    @property
    def max_fd_rel_error(self) -> float:
        if self.fd_derivative is None:
            return math.nan
        worst = 0.0
        for V, row, fd_row in zip(self.V_grid, self.derivative, self.fd_derivative):
            if V > 0:
                worst = max(worst, *(abs(fd - x) / abs(x) for x, fd in zip(row, fd_row)))
        return worst

    @property
    def summary(self) -> str:
        return f"no stationary velocity: {'PASS' if self.passed else 'FAIL'}"


def fit_power_law(t, y, offset_bounds=None) -> PowerLawFit:
    """Least-squares fit of ``log y = p log(t + t0) + q``.

    For each trial offset ``t0`` the fit is an ordinary log-log regression;
    ``t0`` is chosen to minimise its residual, so ``C (t + t0)**p`` is
    recovered exactly whatever the offset.
    """
    t = np.asarray(t, dtype=float)
    ly = np.log(np.asarray(y, dtype=float))
    if offset_bounds is None:
        offset_bounds = (-0.5 * t.min(), t.max())

    def regress(t0):
        x = np.log(t + t0)
        slope, intercept = np.polyfit(x, ly, 1)
        resid = ly - (slope * x + intercept)
        return slope, intercept, float(resid @ resid)

    best = minimize_scalar(
        lambda t0: regress(t0)[2], bounds=offset_bounds, method="bounded", options={"xatol": 1e-12}
    )
    t0 = float(best.x)
    slope, intercept, rss = regress(t0)
    tss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), min(max(r2, 0.0), 1.0), t0)


def sandwich_constants(values, t) -> tuple:
    """``min`` and ``max`` of ``delta_g * (1 + t)**5`` over the grid."""
    scaled = np.asarray(values, dtype=float) * (1.0 + np.asarray(t, dtype=float)) ** 5
    return float(scaled.min()), float(scaled.max())


def fit_decay_exponent(
    V: float,
    cfg: WedgeConfig,
    gas: GasState,
    t_min: float = 2.0,
    t_max: float = 50.0,
    n_points: int = 16,
    spec: QuadratureSpec = DEFAULT_SPEC,
    delta_g: Callable[[float], float] | None = None,
) -> DecayFit:
    """Fit the decay of ``delta_g(V, t)`` on a log-spaced window.

    ``delta_g`` replaces the quadrature with any callable of ``t`` (used to
    inject synthetic laws).  Points at or below the quadrature noise floor
    are dropped from the large-``t`` end and the fit reports the usable grid.
    """
    if not (0 < t_min < t_max):
        raise DomainError("need 0 < t_min < t_max")
    if n_points < 8:
        raise DomainError("need at least 8 grid points")
    if delta_g is None:
        if not V > 0:
            raise DomainError("delta_g vanishes identically at V = 0; need V > 0")

        def delta_g(t):
            return delta_g_direct(V, t, cfg, gas, spec)

    grid = np.geomspace(t_min, t_max, n_points)
    values = np.array([delta_g(float(t)) for t in grid])
    floor = 10 * spec.abs_tol
    usable = np.flatnonzero(values <= floor)
    stop = usable[0] if usable.size else len(grid)
    if stop < 3:
        raise DomainError(f"delta_g is below the noise floor {floor:g} from t={grid[stop]:g} on")
    grid, values = grid[:stop], values[:stop]

    fit = fit_power_law(grid, values)
    c_lower, c_upper = sandwich_constants(values, grid)
    return DecayFit(
        exponent=fit.exponent,
        log_intercept=fit.log_intercept,
        r_squared=fit.r_squared,
        t_grid=[float(t) for t in grid],
        c_lower=c_lower,
        c_upper=c_upper,
        time_offset=fit.time_offset,
        window=(float(t_min), float(t_max)),
        truncated=stop < n_points,
    )


def delta_g_of_T(V: float, T: float, cfg: WedgeConfig, gas: GasState, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    return delta_g_direct(V, T_to_time(cfg, T), cfg, gas, spec)


def centered_difference(V, T, cfg, gas, spec=DEFAULT_SPEC, rel_step=1e-3) -> float:
    h = rel_step * T
    return (delta_g_of_T(V, T + h, cfg, gas, spec) - delta_g_of_T(V, T - h, cfg, gas, spec)) / (2 * h)


def stationarity_obstruction_scan(
    cfg: WedgeConfig,
    gas: GasState,
    V_grid,
    T_grid,
    spec: QuadratureSpec = DEFAULT_SPEC,
    E: float = 1.0,
    check_fd: bool = False,
) -> StationarityReport:
    """Evaluate ``d(delta_g)/dT`` on a grid and require it strictly positive
    for every ``V > 0``; rows with ``V = 0`` vanish identically and are
    reported separately together with the force balance at ``V = 0``."""
    V_grid = [float(V) for V in V_grid]
    T_grid = [float(T) for T in T_grid]
    if any(V < 0 for V in V_grid) or any(not T > 0 for T in T_grid):
        raise DomainError("velocities must be non-negative and T values positive")
    if not E > 0:
        raise DomainError("E must be positive")

    derivative = [[dg_dT(V, T, cfg, gas, spec) for T in T_grid] for V in V_grid]
    fd = None
    if check_fd:
        fd = [
            [centered_difference(V, T, cfg, gas, spec) if V > 0 else 0.0 for T in T_grid]
            for V in V_grid
        ]
    t_probe = [T_to_time(cfg, T) for T in T_grid]
    zero_residual = min(
        E - friction_f0(0.0, cfg, gas, spec) - friction_g(0.0, t, cfg, gas, spec) for t in t_probe
    )
    report = StationarityReport(
        V_grid=V_grid,
        T_grid=T_grid,
        derivative=derivative,
        fd_derivative=fd,
        zero_velocity_rows=[i for i, V in enumerate(V_grid) if V == 0],
        zero_velocity_residual=zero_residual,
    )
    bad = [
        (V, T, x)
        for V, row in zip(V_grid, derivative)
        if V > 0
        for T, x in zip(T_grid, row)
        if not x > 0
    ]
    if bad:
        raise ObstructionViolation("d(delta_g)/dT is not strictly positive", bad)
    return report


def solve_limiting_velocity(
    E: float,
    cfg: WedgeConfig,
    gas: GasState,
    spec: QuadratureSpec = DEFAULT_SPEC,
    v_cap: float = 50.0,
    include_recollision: bool = True,
    xtol: float = 1e-13,
    monotone_points: int = 8,
) -> LimitingVelocity:
    """Root of ``h(V) = E - F0(V) - g_inf(V)`` from ``V = 0`` upwards.

    The bracket starts at ``[0, 0.25]`` and doubles until ``h`` changes sign;
    ``h`` must be strictly decreasing across it.  With
    ``include_recollision=False`` the plain balance ``E = F0(V)`` is solved.
    """
    if not (math.isfinite(E) and E > 0):
        raise DomainError("E must be positive")

    def h(V):
        value = E - friction_f0(V, cfg, gas, spec)
        if include_recollision:
            value -= friction_g_inf(V, cfg, gas, spec)
        return value

    lo, hi = 0.0, 0.25
    h_hi = h(hi)
    while h_hi > 0:
        if hi >= v_cap:
            raise UnboundedVelocityError(f"no sign change of E - F0 - g_inf for V <= {v_cap}")
        lo, hi = hi, min(2 * hi, v_cap)
        h_hi = h(hi)

    probe = np.linspace(0.0, hi, monotone_points + 1)
    h_probe = np.array([E] + [h(float(V)) for V in probe[1:]])
    if np.any(np.diff(h_probe) >= 0):
        raise NonMonotoneError(f"E - F0 - g_inf is not strictly decreasing on [0, {hi}]")
    lo = float(probe[np.flatnonzero(h_probe > 0)[-1]])

    if h_hi == 0:
        root = hi
    else:
        root = brentq(h, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    return LimitingVelocity(
        v_bar_inf=float(root),
        residual=float(h(root)),
        bracket=(lo, hi),
        E=float(E),
        include_recollision=include_recollision,
    )
