"""Wedge geometry, elastic reflection and the backward ray trace.

The body is two segments of length ``L`` leaving the vertex at angles
``±theta`` to the x axis, hollow side facing the direction of motion.
Everything here works in the body frame with the vertex at the origin;
body-frame velocities are written ``vp = v - V x̂``.

Functions accept scalars or numpy arrays.  Velocities are arrays whose last
axis has length 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation, DomainError, MultipleRecollisionError

Vec2 = np.ndarray

X_HAT = np.array([1.0, 0.0])


def vec2(x: float, y: float) -> Vec2:
    return np.array([float(x), float(y)])


@dataclass(frozen=True)
class WedgeConfig:
    """Half-angle ``theta`` (radians) and arm length ``length``."""

    theta: float
    length: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.pi / 4 <= self.theta < math.pi / 2):
            raise ConfigError(
                f"theta={self.theta!r} must lie in [pi/4, pi/2) radians", key="wedge.theta"
            )
        if not (math.isfinite(self.length) and self.length > 0):
            raise ConfigError(f"length={self.length!r} must be positive", key="wedge.length")

    @property
    def upper_arm(self) -> Vec2:
        return vec2(math.cos(self.theta), math.sin(self.theta))

    @property
    def lower_arm(self) -> Vec2:
        return vec2(math.cos(self.theta), -math.sin(self.theta))


@dataclass(frozen=True)
class FrameVectors:
    n_hat: Vec2
    p_hat: Vec2
    p_perp_hat: Vec2
    phi: float


@dataclass(frozen=True)
class RegionBounds:
    """Slopes of the rotated recollision wedge ``a*w1 < w2 < b*w1`` and the
    deficit threshold ``w1 <= threshold``.

    ``b`` is ``math.inf`` at the vertex (``eta == 0``), where the upper slope
    is unbounded.
    """

    a: float
    b: float
    threshold: float

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.b)


@dataclass(frozen=True)
class TraceResult:
    recollided: bool
    v0: Vec2
    recollision_point_eta: float | None = None


def time_to_T(cfg: WedgeConfig, t):
    """Map elapsed time to the small parameter ``T = sin(2θ)/t`` (``t=0 -> inf``)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        T = math.sin(2 * cfg.theta) / t
    return T if T.ndim else float(T)


def T_to_time(cfg: WedgeConfig, T):
    T = np.asarray(T, dtype=float)
    with np.errstate(divide="ignore"):
        t = math.sin(2 * cfg.theta) / T
    return t if t.ndim else float(t)


def frame_vectors(cfg: WedgeConfig) -> FrameVectors:
    s, c = math.sin(cfg.theta), math.cos(cfg.theta)
    return FrameVectors(
        n_hat=vec2(s, -c),
        p_hat=vec2(s, c),
        p_perp_hat=vec2(-c, s),
        phi=math.pi / 2 - cfg.theta,
    )


def _check_eta(cfg: WedgeConfig, eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(~np.isfinite(eta)) or np.any(eta < 0) or np.any(eta > cfg.length):
        raise DomainError(f"eta must lie in [0, {cfg.length}]")
    return eta


def psi_hat(cfg: WedgeConfig, eta) -> Vec2:
    """Unit normal to the chord from ``R(eta)`` to the lower tip ``Q``, on the
    ``n_hat`` side."""
    eta = _check_eta(cfg, eta)
    L, th = cfg.length, cfg.theta
    raw = np.stack([(eta + L) * math.sin(th), (L - eta) * math.cos(th)], axis=-1)
    return raw / np.linalg.norm(raw, axis=-1, keepdims=True)


def reflect(v, V_body, N_hat) -> Vec2:
    """Elastic bounce off a wall with unit normal ``N_hat`` moving at ``V_body x̂``.

    The normal component becomes ``2 V_N - v_N`` with ``V_N = V_body (N_hat·x̂)``;
    the tangential component is kept.  The map is its own inverse.
    """
    v = np.asarray(v, dtype=float)
    N_hat = np.asarray(N_hat, dtype=float)
    V_body = np.asarray(V_body, dtype=float)
    v_N = np.sum(v * N_hat, axis=-1)
    V_N = V_body * N_hat[..., 0]
    return v + ((2 * V_N - 2 * v_N)[..., None]) * N_hat


def precollision_speed_sq(v, V_body, cfg: WedgeConfig):
    """``|v0|^2 = v^2 - 4 V_p (v - V x̂)·p_hat`` for a particle that bounced once
    off the lower arm before reaching the upper one."""
    v = np.asarray(v, dtype=float)
    V_body = np.asarray(V_body, dtype=float)
    p = frame_vectors(cfg).p_hat
    V_p = V_body * math.sin(cfg.theta)
    vp_p = v[..., 0] * p[0] + v[..., 1] * p[1] - V_body * p[0]
    out = np.sum(v * v, axis=-1) - 4.0 * V_p * vp_p
    return out if np.ndim(out) else float(out)


def region_bounds(cfg: WedgeConfig, eta: float, t: float) -> RegionBounds:
    if t <= 0:
        raise DomainError("t must be positive")
    eta = float(_check_eta(cfg, eta))
    s2, c2 = math.sin(2 * cfg.theta), math.cos(2 * cfg.theta)
    a = math.tan(2 * cfg.theta - math.pi / 2)
    b = math.inf if eta == 0 else (cfg.length - eta * c2) / (eta * s2)
    return RegionBounds(a=a, b=b, threshold=eta * s2 / t)


def in_recollision_region(cfg: WedgeConfig, eta, t, v, V_body):
    """Membership of ``v`` (lab frame) in the recollision region at ``R(eta)``.

    True iff ``vp·n < 0``, ``vp·psi > 0`` and ``vp·p >= eta sin(2θ)/t``.
    For ``t <= 0`` the region is empty.
    """
    eta = _check_eta(cfg, eta)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be non-negative")
    fv = frame_vectors(cfg)
    vp = np.asarray(v, dtype=float) - np.asarray(V_body, dtype=float)[..., None] * X_HAT
    psi = psi_hat(cfg, eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        threshold = np.where(t > 0, eta * math.sin(2 * cfg.theta) / np.where(t > 0, t, 1.0), np.inf)
    inside = (
        (vp @ fv.n_hat < 0)
        & (np.sum(vp * psi, axis=-1) > 0)
        & (vp @ fv.p_hat >= threshold)
        & (t > 0)
    )
    return inside if np.ndim(inside) else bool(inside)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def trace_batch(cfg: WedgeConfig, eta, v, V_body, t):
    """Vectorised backward ray trace from impacts on the upper arm.

    Each sample is a particle reaching ``R(eta)`` at time ``t`` with lab
    velocity ``v``.  Its body-frame path is followed backwards as a straight
    line and intersected with the lower-arm segment; on a hit within the
    elapsed time the velocity is reflected back to its initial value.  No use
    is made of the analytic region inequalities.

    Returns ``(hit, v0, lam)`` where ``lam`` is the arm coordinate of the
    bounce on the lower arm (``nan`` without a hit).
    """
    eta = np.asarray(eta, dtype=float)
    v = np.atleast_2d(np.asarray(v, dtype=float))
    V = np.broadcast_to(np.asarray(V_body, dtype=float), eta.shape)
    t = np.broadcast_to(np.asarray(t, dtype=float), eta.shape)
    L = cfg.length
    e_up, e_lo = cfg.upper_arm, cfg.lower_arm
    p_hat = frame_vectors(cfg).p_hat

    vp = v - V[..., None] * X_HAT
    d = -vp
    R = eta[..., None] * e_up
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = _cross(e_lo, d)
        s = _cross(R, e_lo) / denom
        lam = _cross(R, d) / denom
    # the vertex belongs to both arms and has no normal; rays through it
    # (grazing paths along an arm) are not bounces
    hit = (denom != 0) & (s > 0) & (s <= t) & (lam > 1e-12 * L) & (lam <= L)

    v0 = v.copy()
    if np.any(hit):
        v0[hit] = reflect(v[hit], V[hit], p_hat)
        _assert_single_bounce(cfg, lam[hit], v0[hit] - V[hit][:, None] * X_HAT, t[hit] - s[hit])
    return hit, v0, np.where(hit, lam, np.nan)


def _assert_single_bounce(cfg, lam, v0p, t_left):
    # From the lower-arm bounce point, continue backwards towards the upper arm.
    P = lam[:, None] * cfg.lower_arm
    d0 = -v0p
    e_up = cfg.upper_arm
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = _cross(e_up, d0)
        s0 = _cross(P, e_up) / denom
        mu = _cross(P, d0) / denom
    second = (denom != 0) & (s0 > 1e-12) & (s0 <= t_left) & (mu > 1e-12 * cfg.length) & (mu <= cfg.length)
    if np.any(second):
        raise MultipleRecollisionError(
            f"{int(second.sum())} traced paths bounce twice at theta={cfg.theta!r}"
        )


def backward_trace(cfg: WedgeConfig, eta: float, v, V_body: float, t: float) -> TraceResult:
    """Follow one incoming particle back from ``R(eta)`` to time zero."""
    if t <= 0:
        raise DomainError("t must be positive")
    if V_body < 0:
        raise DomainError("V_body must be non-negative")
    eta = float(_check_eta(cfg, eta))
    v = np.asarray(v, dtype=float)
    vp = v - V_body * X_HAT
    if not vp @ frame_vectors(cfg).n_hat < 0:
        raise ContractViolation("velocity is not incoming on the hollow face (vp·n >= 0)")
    hit, v0, lam = trace_batch(cfg, np.array([eta]), v[None, :], V_body, t)
    if hit[0]:
        return TraceResult(True, v0[0], float(lam[0]))
    return TraceResult(False, v.copy(), None)
