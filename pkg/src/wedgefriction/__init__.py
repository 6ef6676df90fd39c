"""Friction on a wedge-shaped body moving through a collisionless gas."""

__version__ = "0.1.0"

from .asymptotics import (
    DecayFit,
    LimitingVelocity,
    StationarityReport,
    fit_decay_exponent,
    solve_limiting_velocity,
    stationarity_obstruction_scan,
)
from .friction import (
    FrictionBreakdown,
    GasState,
    QuadratureSpec,
    delta_g_direct,
    delta_g_raw,
    dg_dT,
    friction_breakdown,
    friction_f0,
    friction_g,
    friction_g_inf,
    friction_total,
)
from .geometry import WedgeConfig, backward_trace, in_recollision_region, reflect, region_bounds
from .oracle import McEstimate, McSpec, estimate_friction_mc, region_agreement_audit
