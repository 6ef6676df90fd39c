import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wedgefriction.errors import ConfigError, ContractViolation, DomainError
from wedgefriction.geometry import (
    WedgeConfig,
    X_HAT,
    backward_trace,
    frame_vectors,
    in_recollision_region,
    precollision_speed_sq,
    psi_hat,
    reflect,
    region_bounds,
    time_to_T,
    T_to_time,
    trace_batch,
)
from wedgefriction.oracle import region_agreement_audit

thetas = st.floats(min_value=math.pi / 4, max_value=1.55)
finite = st.floats(min_value=-5, max_value=5, allow_nan=False)
speeds = st.floats(min_value=0, max_value=3)


def test_config_validation():
    with pytest.raises(ConfigError) as err:
        WedgeConfig(theta=60.0)
    assert err.value.key == "wedge.theta"
    with pytest.raises(ConfigError):
        WedgeConfig(theta=0.5)
    with pytest.raises(ConfigError):
        WedgeConfig(theta=math.pi / 2)
    with pytest.raises(ConfigError):
        WedgeConfig(theta=1.0, length=0.0)


def test_frame_vectors_at_known_angles():
    fv = frame_vectors(WedgeConfig(math.pi / 4))
    h = math.sqrt(2) / 2
    assert np.allclose(fv.n_hat, [h, -h], atol=1e-15)
    assert np.allclose(fv.p_hat, [h, h], atol=1e-15)
    fv = frame_vectors(WedgeConfig(math.pi / 3))
    assert np.allclose(fv.n_hat, [math.sqrt(3) / 2, -0.5], atol=1e-15)


@given(thetas)
def test_frame_vectors_are_orthonormal(theta):
    fv = frame_vectors(WedgeConfig(theta))
    for u in (fv.n_hat, fv.p_hat, fv.p_perp_hat):
        assert abs(np.linalg.norm(u) - 1) < 1e-15
    assert abs(fv.p_hat @ fv.p_perp_hat) < 1e-15


def test_psi_hat_examples():
    cfg = WedgeConfig(math.pi / 3)
    assert np.allclose(psi_hat(cfg, 0.0), frame_vectors(cfg).p_hat, atol=1e-15)
    assert np.allclose(psi_hat(cfg, 1.0), [1.0, 0.0], atol=1e-15)
    assert np.allclose(psi_hat(WedgeConfig(math.pi / 4), 0.5), np.array([3.0, 1.0]) / math.sqrt(10), atol=1e-15)
    with pytest.raises(DomainError):
        psi_hat(cfg, 1.5)


@given(thetas, st.floats(min_value=0.1, max_value=3))
@settings(max_examples=50)
def test_psi_hat_is_normal_to_chord(theta, length):
    cfg = WedgeConfig(theta, length)
    eta = np.linspace(0, length, 1000)
    R = eta[:, None] * cfg.upper_arm
    Q = length * cfg.lower_arm
    psi = psi_hat(cfg, eta)
    assert np.max(np.abs(np.sum(psi * (Q - R), axis=1))) <= 1e-12 * max(1.0, length)
    # psi = p_hat at the vertex, which is orthogonal to n_hat at theta = pi/4
    assert np.all(psi @ frame_vectors(cfg).n_hat >= -1e-15)


def test_reflect_examples():
    n = np.array([1.0, 0.0])
    assert np.allclose(reflect([-1.0, 0.0], 0.0, n), [1.0, 0.0])
    assert np.allclose(reflect([-1.0, 3.0], 1.0, n), [3.0, 3.0])
    assert np.allclose(reflect([0.0, 1.0], 0.0, n), [0.0, 1.0])


@given(finite, finite, speeds, thetas)
def test_reflect_is_an_involution_and_elastic(vx, vy, V, theta):
    v = np.array([vx, vy])
    N = frame_vectors(WedgeConfig(theta)).p_hat
    assert np.allclose(reflect(reflect(v, V, N), V, N), v, atol=1e-14)
    fixed = reflect(v, 0.0, N)
    assert abs(fixed @ fixed - v @ v) <= 1e-13 * max(1.0, v @ v)


def test_precollision_speed_examples():
    cfg = WedgeConfig(math.pi / 4)
    v = np.array([0.3, -1.2])
    assert precollision_speed_sq(v, 0.0, cfg) == np.sum(v * v)
    assert precollision_speed_sq(np.array([2.0, 0.0]), 1.0, cfg) == pytest.approx(2.0, abs=1e-14)


@given(finite, finite, speeds, thetas)
def test_precollision_speed_matches_componentwise_reconstruction(vx, vy, V, theta):
    cfg = WedgeConfig(theta)
    fv = frame_vectors(cfg)
    v = np.array([vx, vy])
    V_p = V * math.sin(theta)
    v0_p = 2 * V_p - v @ fv.p_hat
    v0_perp = v @ fv.p_perp_hat
    expected = v0_p**2 + v0_perp**2
    assert precollision_speed_sq(v, V, cfg) == pytest.approx(expected, rel=1e-12, abs=1e-12)
    v0 = reflect(v, V, fv.p_hat)
    assert v0 @ v0 == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_region_bounds_examples():
    cfg = WedgeConfig(math.pi / 4)
    rb = region_bounds(cfg, 0.5, 1.0)
    assert rb.a == pytest.approx(0.0, abs=1e-15)
    assert rb.b == pytest.approx(2.0, rel=1e-14)
    assert not region_bounds(cfg, 0.0, 1.0).bounded
    with pytest.raises(DomainError):
        region_bounds(cfg, 0.5, 0.0)


@given(thetas, st.floats(min_value=1e-3, max_value=1.0))
def test_upper_slope_dominates_tan_theta(theta, eta):
    cfg = WedgeConfig(theta)
    assert region_bounds(cfg, eta, 1.0).b >= math.tan(theta) * (1 - 1e-12)


def test_region_membership_examples():
    cfg = WedgeConfig(math.pi / 4)
    v = np.array([0.1, 2.0])
    assert in_recollision_region(cfg, 0.5, 1.0, v, 0.0)
    assert not in_recollision_region(cfg, 0.5, 1e-12, v, 0.0)
    assert not in_recollision_region(cfg, 0.5, 0.0, v, 0.0)
    # at theta = pi/4, p_hat is the upper arm direction, so vp·n = 0
    along_p = 1.5 * cfg.upper_arm
    assert not in_recollision_region(cfg, 0.5, 1.0, along_p, 0.0)


@given(
    thetas,
    st.floats(min_value=0, max_value=1),
    finite,
    finite,
    speeds,
    st.floats(min_value=1e-3, max_value=100),
    st.floats(min_value=1.0, max_value=10.0),
)
def test_regions_grow_with_time(theta, eta, vx, vy, V, t1, factor):
    cfg = WedgeConfig(theta)
    v = np.array([vx, vy])
    if in_recollision_region(cfg, eta, t1, v, V):
        assert in_recollision_region(cfg, eta, t1 * factor, v, V)


def test_time_conversion_round_trip():
    cfg = WedgeConfig(math.pi / 3)
    assert time_to_T(cfg, 0.0) == math.inf
    assert T_to_time(cfg, time_to_T(cfg, 2.5)) == pytest.approx(2.5, rel=1e-15)


def test_backward_trace_examples():
    cfg = WedgeConfig(math.pi / 4)
    v = np.array([0.1, 2.0])
    hit = backward_trace(cfg, 0.5, v, 0.0, 1.0)
    assert hit.recollided
    assert hit.v0 @ hit.v0 == pytest.approx(precollision_speed_sq(v, 0.0, cfg), rel=1e-14)
    assert hit.v0 @ hit.v0 == pytest.approx(v @ v, rel=1e-14)
    away = np.array([-1.0, -0.2])
    assert in_recollision_region(cfg, 0.5, 1.0, away, 0.0) is False
    miss = backward_trace(cfg, 0.5, away, 0.0, 1.0)
    assert not miss.recollided and np.array_equal(miss.v0, away)
    with pytest.raises(ContractViolation):
        backward_trace(cfg, 0.5, np.array([1.0, 0.0]), 0.0, 1.0)
    with pytest.raises(DomainError):
        backward_trace(cfg, 0.5, v, 0.0, 0.0)


@given(
    thetas,
    # the vertex eta = 0 lies on both arms and is excluded
    st.floats(min_value=1e-6, max_value=1),
    finite,
    finite,
    speeds,
    st.floats(min_value=1e-2, max_value=100),
)
@settings(max_examples=300)
def test_trace_agrees_with_region(theta, eta, vx, vy, V, t):
    cfg = WedgeConfig(theta)
    v = np.array([vx, vy])
    hit, v0, _ = trace_batch(cfg, np.array([eta]), v[None, :], V, t)
    vp = v - V * X_HAT
    fv = frame_vectors(cfg)
    margins = (
        abs(vp @ fv.n_hat),
        abs(vp @ psi_hat(cfg, eta)),
        abs(vp @ fv.p_hat - eta * math.sin(2 * theta) / t),
    )
    if min(margins) > 1e-9:
        assert bool(hit[0]) == in_recollision_region(cfg, eta, t, v, V)
    if hit[0]:
        assert v0[0] @ v0[0] == pytest.approx(precollision_speed_sq(v, V, cfg), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("theta", [math.pi / 4, math.pi / 3, 1.45])
def test_region_audit_finds_no_disagreements(theta):
    report = region_agreement_audit(WedgeConfig(theta), None, None, 100_000, seed=7)
    assert report.n_disagreements == 0
    assert report.n_recollisions > 0


def test_audit_at_vanishing_time_sees_no_recollisions():
    report = region_agreement_audit(WedgeConfig(math.pi / 3), 0.5, 1e-12, 10_000, seed=3)
    assert report.n_recollisions == 0 and report.n_disagreements == 0
