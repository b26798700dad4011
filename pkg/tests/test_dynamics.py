import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sailtour import dynamics as dyn
from sailtour.astro import CartesianState, KeplerianElements, coe_to_cartesian
from sailtour.dynamics import FEATHERED, SailControl, SailParams

CIRC = CartesianState(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
BETA = SailParams(0.1265)

controls = st.builds(SailControl, alpha=st.floats(0, math.pi / 2), delta=st.floats(0, 2 * math.pi))
positions = st.tuples(*[st.floats(-2, 2)] * 3).filter(lambda p: 0.2 < np.linalg.norm(p))
velocities = st.tuples(*[st.floats(-1.5, 1.5)] * 3)


def state_of(p, v):
    r, v = np.array(p), np.array(v)
    if np.linalg.norm(np.cross(r, v)) < 1e-3:
        v = v + np.cross(r, [0.3, 0.2, 1.0])
    return CartesianState(r, v)


def test_char_accel_round_trip():
    assert dyn.beta_to_char_accel(0.1265) == pytest.approx(0.750, abs=1e-3)
    assert dyn.beta_to_char_accel(0.0) == 0.0
    assert dyn.char_accel_to_beta(dyn.beta_to_char_accel(0.1265)) == pytest.approx(0.1265, abs=1e-12)
    assert dyn.char_accel_to_beta(0.75) == pytest.approx(0.1265, abs=1e-3)
    assert dyn.beta_to_char_accel(1.0) == pytest.approx(5.930, abs=1e-3)


@pytest.mark.parametrize("beta", [-0.1, 1.0])
def test_invalid_beta(beta):
    with pytest.raises(ValueError):
        SailParams(beta)


def test_invalid_cone_angle():
    with pytest.raises(ValueError):
        SailControl(2.0, 0.0)


def test_frame_examples():
    f = dyn.control_frame(CIRC)
    np.testing.assert_allclose(f.as_matrix(), [[1, 0, 0], [0, 0, 1], [0, 1, 0]], atol=1e-15)
    f = dyn.control_frame(CartesianState(np.array([0, 1.0, 0]), np.array([-1.0, 0, 0])))
    np.testing.assert_allclose(f.as_matrix(), [[0, 1, 0], [0, 0, 1], [-1, 0, 0]], atol=1e-15)


def test_frame_rejects_radial_motion():
    with pytest.raises(ValueError):
        dyn.control_frame(CartesianState(np.array([1.0, 0, 0]), np.array([2.0, 0, 0])))


@given(positions, velocities)
def test_frame_orthonormal_right_handed(p, v):
    m = dyn.control_frame(state_of(p, v)).as_matrix()
    np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-12)
    f = dyn.control_frame(state_of(p, v))
    np.testing.assert_allclose(np.cross(f.h_hat, f.r_hat), f.t_hat, atol=1e-12)


def test_normal_examples():
    f = dyn.control_frame(CIRC)
    np.testing.assert_allclose(dyn.sail_normal(SailControl(0.0, 1.3), f), f.r_hat, atol=1e-15)
    np.testing.assert_allclose(dyn.sail_normal(SailControl(math.pi / 2, 0.0), f), f.h_hat, atol=1e-15)
    h = math.sqrt(2) / 2
    np.testing.assert_allclose(dyn.sail_normal(SailControl(math.pi / 4, math.pi / 2), f),
                               h * f.r_hat + h * f.t_hat, atol=1e-15)


@given(controls, positions, velocities)
def test_normal_unit_and_never_sunward(c, p, v):
    s = state_of(p, v)
    f = dyn.control_frame(s)
    n = dyn.sail_normal(c, f)
    assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-12)
    assert n @ f.r_hat >= -1e-15
    back = dyn.control_from_normal(n, f)
    assert back.alpha == pytest.approx(c.alpha, abs=1e-7)
    if 1e-6 < c.alpha:
        assert math.cos(back.delta - c.delta) == pytest.approx(1.0, abs=1e-9)


def test_acceleration_examples():
    assert np.all(dyn.sail_acceleration(CIRC, BETA, FEATHERED) == 0.0)
    np.testing.assert_allclose(dyn.sail_acceleration(CIRC, BETA, SailControl(0, 0)), [0.1265, 0, 0], atol=1e-15)
    far = CartesianState(np.array([2.0, 0, 0]), np.array([0, 0.7, 0]))
    assert np.linalg.norm(dyn.sail_acceleration(far, BETA, SailControl(0, 0))) == pytest.approx(0.1265 / 4)


@given(controls, positions, velocities, st.floats(0, 0.99))
def test_acceleration_bounded(c, p, v, beta):
    s = state_of(p, v)
    a = dyn.sail_acceleration(s, SailParams(beta), c)
    assert np.linalg.norm(a) <= beta / (s.position @ s.position) * (1 + 1e-12)


def test_state_derivative_examples():
    d = dyn.state_derivative(CIRC, SailParams(0.0), SailControl(0.3, 0.2))
    np.testing.assert_allclose(d, [0, 1, 0, -1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(dyn.state_derivative(CIRC, BETA, FEATHERED), d, atol=1e-15)
    d = dyn.state_derivative(CIRC, BETA, SailControl(0, 0))
    np.testing.assert_allclose(d[3:], [-1 + 0.1265, 0, 0], atol=1e-15)


def test_integrate_kepler_closure():
    traj = dyn.integrate(CIRC, dyn.constant_policy(SailControl(0, 0)), 0.0, 2 * math.pi, SailParams(0.0))
    np.testing.assert_allclose(traj.states[-1], CIRC.as_vector(), atol=1e-9)
    assert traj.epochs[-1] == pytest.approx(2 * math.pi)


def test_integrate_feathered_equals_zero_beta():
    s0 = coe_to_cartesian(KeplerianElements(1.1, 0.1, 0.1, 0.5, 1.0, 2.0))
    a = dyn.integrate(s0, dyn.constant_policy(FEATHERED), 0.0, 5.0, BETA)
    b = dyn.integrate(s0, dyn.constant_policy(SailControl(0.4, 1.0)), 0.0, 5.0, SailParams(0.0))
    np.testing.assert_allclose(a.states[-1], b.states[-1], atol=1e-10)


def test_sun_facing_sail_raises_energy():
    traj = dyn.integrate(CIRC, dyn.constant_policy(SailControl(0, 0)), 0.0, 3.0, BETA)
    e = dyn.osculating_energy(traj.states)
    assert np.all(np.diff(e) > 0)


def test_zero_beta_conserves_integrals():
    s0 = coe_to_cartesian(KeplerianElements(1.2, 0.3, 0.4, 0.1, 0.2, 0.3))
    traj = dyn.integrate(s0, dyn.constant_policy(FEATHERED), 0.0, 20.0, SailParams(0.0))
    e = dyn.osculating_energy(traj.states)
    h = np.linalg.norm(np.cross(traj.states[:, :3], traj.states[:, 3:]), axis=1)
    assert np.max(np.abs(e - e[0])) < 1e-9
    assert np.max(np.abs(h - h[0])) < 1e-9


def test_tolerance_halving_converges():
    s0 = coe_to_cartesian(KeplerianElements(1.0, 0.1, 0.05, 0.0, 0.0, 0.0))
    pol = dyn.constant_policy(SailControl(0.6, 1.0))
    coarse = dyn.integrate(s0, pol, 0.0, 6.0, BETA, rtol=1e-8, atol=1e-10).states[-1]
    fine = dyn.integrate(s0, pol, 0.0, 6.0, BETA, rtol=5e-9, atol=5e-11).states[-1]
    assert np.max(np.abs(coarse - fine)) < 1e-7  # 10x the coarse tolerance at |y| ~ 1


def test_initial_step_does_not_matter():
    pol = dyn.constant_policy(SailControl(0.6, 1.0))
    a = dyn.integrate(CIRC, pol, 0.0, 4.0, BETA, h0=0.0).states[-1]
    b = dyn.integrate(CIRC, pol, 0.0, 4.0, BETA, h0=1e-3).states[-1]
    assert np.max(np.abs(a - b)) < 1e-9


def test_sun_impact_aborts():
    s0 = CartesianState(np.array([1.0, 0, 0]), np.array([0, 0.02, 0]))
    with pytest.raises(dyn.IntegrationError, match="exclusion"):
        dyn.integrate(s0, dyn.constant_policy(FEATHERED), 0.0, 2.0, SailParams(0.0))


def test_tf_must_exceed_t0():
    with pytest.raises(ValueError):
        dyn.integrate(CIRC, dyn.constant_policy(FEATHERED), 1.0, 1.0, BETA)


def test_export_csv(tmp_path):
    traj = dyn.integrate(CIRC, dyn.constant_policy(FEATHERED), 0.0, 1.0, BETA)
    p = tmp_path / "t.csv"
    dyn.export_trajectory_csv(traj, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "epoch_tu,x,y,z,vx,vy,vz,alpha,delta"
    assert len(lines) == len(traj) + 1
