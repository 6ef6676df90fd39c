"""Friction functionals of a wedge held at constant velocity, by quadrature.

The total friction is ``F^V(t) = F0(V) + g(V, t)``: the recollision-free drag
plus a time-dependent correction carried by particles that bounced once off
the lower arm before striking the upper one.  ``g`` grows to ``g_inf(V)`` and
the deficit ``delta_g = g_inf - g`` vanishes as ``t**-5``.

The recollision integrals are evaluated in the rotated velocity frame
``w = (vp·p_hat, vp·p_perp_hat)``, where the region at arm coordinate ``eta``
is the wedge ``a*w1 < w2 < b(eta)*w1``, cut by ``w1 >= T*eta`` with
``T = sin(2θ)/t``.  An independent polar evaluation in raw body-frame
velocities is provided for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .gauss import panel_edges, panel_rule, refine
from .geometry import WedgeConfig, time_to_T


@dataclass(frozen=True)
class GasState:
    rho: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        for name in ("rho", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name}={value!r} must be positive", key=f"gas.{name}")

    @property
    def k(self) -> float:
        return self.rho * self.beta / math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and base resolution of the nested Gauss-Legendre scheme.

    Each refinement level doubles the panel count in every dimension; two
    successive levels must agree to ``max(abs_tol, rel_tol*|I|)``.
    """

    rel_tol: float = 1e-11
    abs_tol: float = 1e-16
    velocity_cutoff_sigmas: float = 6.0
    eta_panels: int = 2
    velocity_panels: int = 2
    order: int = 16
    max_refinements: int = 4

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigError("quadrature tolerances must be positive", key="quadrature.rel_tol")
        if not self.velocity_cutoff_sigmas >= 4:
            raise ConfigError(
                "velocity_cutoff_sigmas must be at least 4", key="quadrature.velocity_cutoff_sigmas"
            )
        for name in ("eta_panels", "velocity_panels", "order", "max_refinements"):
            value = getattr(self, name)
            if not (isinstance(value, int) and value >= 1):
                raise ConfigError(f"{name} must be a positive integer", key=f"quadrature.{name}")

    def cutoff(self, V: float, beta: float) -> float:
        """Largest velocity magnitude kept in the integrals."""
        return abs(V) + self.velocity_cutoff_sigmas / math.sqrt(beta)

    def agreement_tol(self, scale: float) -> float:
        """Slack allowed between two independently converged integrals."""
        return 100 * (self.abs_tol + self.rel_tol * abs(scale))


@dataclass(frozen=True)
class FrictionBreakdown:
    V: float
    t: float
    f0: float
    g: float
    g_inf: float
    delta_g: float

    @property
    def fv_total(self) -> float:
        return self.f0 + self.g


DEFAULT_SPEC = QuadratureSpec()


def _prefactor(cfg: WedgeConfig, gas: GasState) -> float:
    # two arms, momentum transfer 2 (vp·n), normal's x component sin(theta)
    return 4.0 * gas.k * math.sin(cfg.theta)


def _check_velocity(V: float) -> float:
    if not (math.isfinite(V) and V >= 0):
        raise DomainError(f"V={V!r}: recollision terms are defined for V >= 0 only")
    return float(V)


def _check_time(t: float) -> float:
    if not (t >= 0):
        raise DomainError(f"t={t!r} must be non-negative")
    return float(t)


class _RotatedIntegrand:
    """Recollision integrand in the rotated frame, Gaussian factor included:

    ``(w·n_w)^2 exp(-β|w + V_w|^2) (exp(4 β V_p w1) - 1)``
    """

    def __init__(self, V, cfg, gas, spec):
        th = cfg.theta
        self.L = cfg.length
        self.beta = gas.beta
        self.s2, self.c2 = math.sin(2 * th), math.cos(2 * th)
        self.a = math.tan(2 * th - math.pi / 2)
        self.n1, self.n2 = -self.c2, -self.s2
        self.c1, self.c2v = V * math.sin(th), -V * math.cos(th)
        self.W = spec.cutoff(V, gas.beta)

    def b(self, eta):
        return (self.L - eta * self.c2) / (eta * self.s2)

    def __call__(self, w1, w2):
        beta = self.beta
        # exp(-β(w1-c1)^2) - exp(-β(w1+c1)^2), written without cancellation
        radial = 2.0 * np.exp(-beta * (w1 * w1 + self.c1 * self.c1)) * np.sinh(2 * beta * self.c1 * w1)
        return (self.n1 * w1 + self.n2 * w2) ** 2 * np.exp(-beta * (w2 + self.c2v) ** 2) * radial


def _wedge_integral(V, cfg, gas, spec, w1_range, what):
    """``∫ deta ∫ dw1 ∫_{a w1}^{b w1} dw2`` over the rotated recollision wedge,
    with ``w1`` limited per ``eta`` by ``w1_range(eta) -> (lo, hi)``."""
    f = _RotatedIntegrand(V, cfg, gas, spec)
    W = f.W
    w1_kink_a = W / f.a if f.a > 0 else math.inf

    def evaluate(level):
        n_eta = spec.eta_panels * 2**level
        n_vel = spec.velocity_panels * 2**level
        chunks = []
        for e0, e1 in panel_edges(0.0, f.L, n_eta):
            eta, w_eta = panel_rule(e0, e1, 1, spec.order)
            lo, hi = w1_range(eta)
            lo, hi = np.clip(lo, 0.0, W), np.clip(hi, 0.0, W)
            # split w1 where the w2 range hits the cutoff (b*w1 = W, a*w1 = W)
            w1_kink_b = W / f.b(eta)
            pieces = (
                (lo, np.minimum(hi, w1_kink_b)),
                (np.maximum(lo, w1_kink_b), np.minimum(hi, w1_kink_a)),
            )
            inner_eta = 0.0
            for p_lo, p_hi in pieces:
                w1, w_w1 = panel_rule(p_lo, p_hi, n_vel, spec.order)
                top = np.minimum(f.b(eta)[:, None] * w1, W)
                bot = np.minimum(f.a * w1, top)
                w2, w_w2 = panel_rule(bot, top, n_vel, spec.order)
                vals = f(w1[..., None], w2)
                inner_eta = inner_eta + np.sum(np.sum(vals * w_w2, axis=-1) * w_w1, axis=-1)
            chunks.append(float(np.sum(inner_eta * w_eta)))
        return math.fsum(chunks)

    value = refine(evaluate, spec.rel_tol, spec.abs_tol, spec.max_refinements, what)
    return _prefactor(cfg, gas) * value


def friction_f0(V: float, cfg: WedgeConfig, gas: GasState, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Recollision-free drag ``F0(V)``, by 2D quadrature over the two half
    planes ``vp·n < 0`` (front, pushes back) and ``vp·n > 0`` (rear).

    Integrates in the frame ``u = v·n``, ``s = v·n_perp``; odd in ``V``.
    """
    if not math.isfinite(V):
        raise DomainError("V must be finite")
    if V == 0:
        return 0.0
    beta = gas.beta
    c = V * math.sin(cfg.theta)
    U = spec.cutoff(V, beta)

    def evaluate(level):
        n = spec.velocity_panels * 2**level
        s, w_s = panel_rule(-U, U, 2 * n, spec.order)
        gauss_s = np.exp(-beta * s * s)
        total = []
        for sign, lo, hi in ((1.0, -U, c), (-1.0, c, U)):
            u, w_u = panel_rule(lo, hi, n, spec.order)
            vals = ((u - c) ** 2 * np.exp(-beta * u * u))[:, None] * gauss_s[None, :]
            total.append(sign * float(np.sum((vals @ w_s) * w_u)))
        return total[0] + total[1]

    value = refine(evaluate, spec.rel_tol, spec.abs_tol, spec.max_refinements, "F0")
    return _prefactor(cfg, gas) * cfg.length * value


def friction_g_inf(V: float, cfg: WedgeConfig, gas: GasState, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Long-time limit of the recollision correction (no time cut)."""
    V = _check_velocity(V)
    if V == 0:
        return 0.0
    W = spec.cutoff(V, gas.beta)
    return _wedge_integral(
        V, cfg, gas, spec, lambda eta: (np.zeros_like(eta), np.full_like(eta, W)), "g_inf"
    )


def friction_g(V: float, t: float, cfg: WedgeConfig, gas: GasState, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Recollision correction ``g(V, t)``: the wedge cut to ``w1 >= T*eta``."""
    V, t = _check_velocity(V), _check_time(t)
    if V == 0 or t == 0:
        return 0.0
    T = time_to_T(cfg, t)
    W = spec.cutoff(V, gas.beta)
    return _wedge_integral(
        V, cfg, gas, spec, lambda eta: (T * eta, np.full_like(eta, W)), "g"
    )


def delta_g_direct(V: float, t: float, cfg: WedgeConfig, gas: GasState, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Deficit ``g_inf - g`` integrated directly over ``0 <= w1 <= T*eta``."""
    V, t = _check_velocity(V), _check_time(t)
    if V == 0:
        return 0.0
    if t == 0:
        return friction_g_inf(V, cfg, gas, spec)
    T = time_to_T(cfg, t)
    return _wedge_integral(V, cfg, gas, spec, lambda eta: (np.zeros_like(eta), T * eta), "delta_g")


def delta_g_raw(V: float, t: float, cfg: WedgeConfig, gas: GasState, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Deficit evaluated in polar coordinates on unrotated body-frame velocities.

    At ``R(eta)`` the recollision directions are the angles between the upper
    arm (``alpha = theta``) and the chord from the lower tip ``Q``; the
    deficit keeps speeds ``r`` with ``r sin(alpha + theta) <= eta sin(2θ)/t``.
    ``t = 0`` gives ``g_inf``.
    """
    V, t = _check_velocity(V), _check_time(t)
    if V == 0:
        return 0.0
    th, L, beta = cfg.theta, cfg.length, gas.beta
    sin_t, cos_t = math.sin(th), math.cos(th)
    n_hat = np.array([sin_t, -cos_t])
    p_hat = np.array([sin_t, cos_t])
    V_p = V * sin_t
    Rcut = spec.cutoff(V, beta)

    def integrand(alpha, r):
        ux, uy = np.cos(alpha)[..., None], np.sin(alpha)[..., None]
        vx, vy = r * ux, r * uy
        along_n = vx * n_hat[0] + vy * n_hat[1]
        along_p = vx * p_hat[0] + vy * p_hat[1]
        gauss = np.exp(-beta * ((vx + V) ** 2 + vy**2))
        return r * along_n**2 * gauss * np.expm1(4 * beta * V_p * along_p)

    def evaluate(level):
        n_eta = spec.eta_panels * 2**level
        n_vel = spec.velocity_panels * 2**level
        chunks = []
        for e0, e1 in panel_edges(0.0, L, n_eta):
            eta, w_eta = panel_rule(e0, e1, 1, spec.order)
            # u = pi - theta - alpha runs from the chord to Q (u_q) up to the arm
            u_q = math.pi - th - np.arctan2((eta + L) * sin_t, (eta - L) * cos_t)
            u_arm = math.pi - 2 * th
            if t == 0:
                thr = np.full_like(eta, np.inf)
                u_star = np.full_like(eta, u_arm)
            else:
                thr = eta * math.sin(2 * th) / t
                u_star = np.clip(np.arcsin(np.minimum(thr / Rcut, 1.0)), u_q, u_arm)
            total = 0.0
            # below u_star the speed cutoff binds, above it the time cut; r_max
            # varies on the scale of u itself, so integrate in z = log(u)
            for u_lo, u_hi, capped in ((u_q, u_star, True), (u_star, np.full_like(eta, u_arm), False)):
                z, w_z = panel_rule(np.log(u_lo), np.log(u_hi), n_vel, spec.order)
                u = np.exp(z)
                alpha = math.pi - th - u
                if capped:
                    r_hi = np.full_like(u, Rcut)
                else:
                    r_hi = np.minimum(thr[:, None] / np.sin(u), Rcut)
                r, w_r = panel_rule(0.0, r_hi, n_vel, spec.order)
                inner = np.sum(integrand(alpha, r) * w_r, axis=-1)
                total = total + np.sum(inner * u * w_z, axis=-1)
            chunks.append(float(np.sum(total * w_eta)))
        return math.fsum(chunks)

    value = refine(evaluate, spec.rel_tol, spec.abs_tol, spec.max_refinements, "delta_g (polar)")
    return _prefactor(cfg, gas) * value


def dg_dT(V: float, T: float, cfg: WedgeConfig, gas: GasState, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``d(delta_g)/dT = -dg/dT`` at fixed ``V``, with ``T = sin(2θ)/t``.

    Differentiating the ``w1 <= T*eta`` cut leaves a line integral along
    ``w1 = eta*T`` weighted by ``eta``.
    """
    V = _check_velocity(V)
    if not (math.isfinite(T) and T > 0):
        raise DomainError(f"T={T!r} must be positive")
    if V == 0:
        return 0.0
    f = _RotatedIntegrand(V, cfg, gas, spec)

    def evaluate(level):
        n_eta = spec.eta_panels * 2**level
        n_vel = spec.velocity_panels * 2**level
        eta, w_eta = panel_rule(0.0, f.L, n_eta, spec.order)
        w1 = eta * T
        top = np.minimum(f.b(eta) * w1, f.W)
        bot = np.minimum(f.a * w1, top)
        w2, w_w2 = panel_rule(bot, top, n_vel, spec.order)
        inner = np.sum(f(w1[:, None], w2) * w_w2, axis=-1)
        return float(np.sum(eta * inner * w_eta))

    value = refine(evaluate, spec.rel_tol, spec.abs_tol, spec.max_refinements, "d(delta_g)/dT")
    return _prefactor(cfg, gas) * value


def friction_total(V: float, t: float, cfg: WedgeConfig, gas: GasState, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``F^V(t) = F0(V) + g(V, t)``."""
    return friction_f0(V, cfg, gas, spec) + friction_g(V, t, cfg, gas, spec)


def friction_breakdown(V: float, t: float, cfg: WedgeConfig, gas: GasState, spec: QuadratureSpec = DEFAULT_SPEC) -> FrictionBreakdown:
    """All four functionals at ``(V, t)``, with their mutual invariants checked."""
    V, t = _check_velocity(V), _check_time(t)
    f0 = friction_f0(V, cfg, gas, spec)
    g_inf = friction_g_inf(V, cfg, gas, spec)
    g = friction_g(V, t, cfg, gas, spec)
    delta = g_inf if t == 0 else delta_g_direct(V, t, cfg, gas, spec)
    tol = spec.agreement_tol(g_inf)
    if g < 0 or g > g_inf + tol or abs(delta - (g_inf - g)) > tol:
        raise AssertionError(
            f"inconsistent breakdown at V={V}, t={t}: g={g!r}, g_inf={g_inf!r}, delta_g={delta!r}"
        )
    return FrictionBreakdown(V=V, t=t, f0=f0, g=g, g_inf=g_inf, delta_g=delta)
