"""Monte Carlo estimate of the friction by backward particle tracing.

Impacts ``(eta, v)`` on the upper arm are sampled with ``eta`` stratified on
``[0, L]`` and ``v`` drawn from the equilibrium Maxwellian or, with equal
probability, from its mirror image under the lower-arm bounce.  The initial
velocity ``v0`` of each impact is found by tracing the particle backwards
against the lower arm (``geometry.trace_batch``); the analytic recollision
region is never consulted here except in ``region_agreement_audit``, which
compares the two on purpose.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, EstimationError
from .friction import GasState
from .geometry import (
    X_HAT,
    WedgeConfig,
    frame_vectors,
    in_recollision_region,
    psi_hat,
    reflect,
    trace_batch,
)


@dataclass(frozen=True)
class McSpec:
    n_samples: int = 1_000_000
    seed: int = 20240611
    stratify_eta: int = 64

    def __post_init__(self):
        if not (isinstance(self.n_samples, int) and self.n_samples >= 1):
            raise ConfigError("n_samples must be a positive integer", key="mc.n_samples")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer", key="mc.seed")
        if not (isinstance(self.stratify_eta, int) and self.stratify_eta >= 1):
            raise ConfigError("stratify_eta must be a positive integer", key="mc.stratify_eta")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_effective: int

    def z_score(self, reference: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == reference else math.copysign(math.inf, self.mean - reference)
        return (self.mean - reference) / self.std_error


@dataclass(frozen=True)
class AuditReport:
    n_samples: int
    n_excluded: int
    n_recollisions: int
    n_disagreements: int

    @property
    def disagreement_ratio(self) -> float:
        compared = self.n_samples - self.n_excluded
        return self.n_disagreements / compared if compared else 0.0


def _stratum_sizes(n_samples: int, strata: int):
    base, extra = divmod(n_samples, strata)
    return [base + (1 if i < extra else 0) for i in range(strata)]


def _generators(seed: int, strata: int):
    # Philox is counter based; one spawned stream per stratum keeps results
    # independent of how strata are scheduled.
    children = np.random.SeedSequence(seed).spawn(strata)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def _stratum_moments(cfg, gas, V, t, lo, hi, size, rng):
    beta = gas.beta
    p_hat = frame_vectors(cfg).p_hat
    eta = rng.uniform(lo, hi, size)
    u = rng.normal(0.0, math.sqrt(0.5 / beta), (size, 2))
    mirrored = rng.random(size) < 0.5
    v = np.where(mirrored[:, None], reflect(u, V, p_hat), u)
    mirror = reflect(v, V, p_hat)
    vp_n = (v - V * X_HAT) @ frame_vectors(cfg).n_hat
    _, v0, _ = trace_batch(cfg, eta, v, V, t)
    # proposal: even mixture of the Maxwellian and its image under the
    # lower-arm bounce (a unit-Jacobian involution), so f0(v0)/q <= 2
    log_q = np.logaddexp(-beta * np.sum(v * v, axis=1), -beta * np.sum(mirror * mirror, axis=1)) - math.log(2.0)
    log_w = -beta * np.sum(v0 * v0, axis=1) - log_q
    # rear impacts (vp·n > 0) push the body forward
    x = -np.sign(vp_n) * vp_n * vp_n * np.exp(log_w)
    var = float(np.var(x, ddof=1)) if size > 1 else 0.0
    return float(np.mean(x)), var


def estimate_friction_mc(
    V: float,
    t: float,
    cfg: WedgeConfig,
    gas: GasState,
    mc: McSpec = McSpec(),
    workers: int = 1,
) -> McEstimate:
    """Unbiased stratified estimate of ``F^V(t)`` with its standard error.

    ``F = 4 rho L sin(theta) E_q[-sign(vp·n) (vp·n)^2 f0(v0)/q(v)]`` with
    ``eta ~ U[0, L]`` and ``q`` the Maxwellian/mirrored-Maxwellian mixture.
    Strata are equal-width slices of ``[0, L]``; ``workers`` only changes
    scheduling, never the result.
    """
    if not (math.isfinite(V) and V >= 0):
        raise DomainError("V must be non-negative")
    if not t >= 0:
        raise DomainError("t must be non-negative")
    strata = mc.stratify_eta
    sizes = _stratum_sizes(mc.n_samples, strata)
    for i, size in enumerate(sizes):
        if size == 0:
            raise EstimationError(f"stratum {i} received no samples", stratum=i)
    edges = np.linspace(0.0, cfg.length, strata + 1)
    rngs = _generators(mc.seed, strata)

    def run(i):
        return _stratum_moments(cfg, gas, V, t, edges[i], edges[i + 1], sizes[i], rngs[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            moments = list(pool.map(run, range(strata)))
    else:
        moments = [run(i) for i in range(strata)]

    scale = 4.0 * gas.rho * cfg.length * math.sin(cfg.theta)
    mean = math.fsum(m for m, _ in moments) / strata
    var = math.fsum(s2 / n for (_, s2), n in zip(moments, sizes)) / strata**2
    return McEstimate(mean=scale * mean, std_error=scale * math.sqrt(var), n_effective=sum(sizes))


def region_agreement_audit(
    cfg: WedgeConfig,
    V: float | None,
    t: float | None,
    n_samples: int,
    seed: int,
    eps: float = 1e-9,
    gas: GasState = GasState(),
) -> AuditReport:
    """Compare the analytic recollision region with the backward trace.

    ``eta`` is uniform on ``[0, L]`` and ``v`` Maxwellian.  ``V`` and ``t``
    are held fixed when given; ``None`` draws them per sample (``V`` uniform
    on ``[0, 2]``, ``t`` log-uniform on ``[1e-2, 1e2]``).  Samples within
    ``eps`` of any region boundary are excluded from the comparison.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    eta = rng.uniform(0.0, cfg.length, n_samples)
    v = rng.normal(0.0, math.sqrt(0.5 / gas.beta), (n_samples, 2))
    Vs = rng.uniform(0.0, 2.0, n_samples) if V is None else np.full(n_samples, float(V))
    ts = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), n_samples)) if t is None else np.full(n_samples, float(t))

    analytic = in_recollision_region(cfg, eta, ts, v, Vs)
    traced, _, _ = trace_batch(cfg, eta, v, Vs, ts)

    fv = frame_vectors(cfg)
    vp = v - Vs[:, None] * X_HAT
    with np.errstate(divide="ignore"):
        threshold = np.where(ts > 0, eta * math.sin(2 * cfg.theta) / np.where(ts > 0, ts, 1.0), np.inf)
    near = (
        (np.abs(vp @ fv.n_hat) < eps)
        | (np.abs(np.sum(vp * psi_hat(cfg, eta), axis=1)) < eps)
        | (np.abs(vp @ fv.p_hat - threshold) < eps)
    )
    disagree = (analytic != traced) & ~near
    return AuditReport(
        n_samples=n_samples,
        n_excluded=int(near.sum()),
        n_recollisions=int((traced & ~near).sum()),
        n_disagreements=int(disagree.sum()),
    )
