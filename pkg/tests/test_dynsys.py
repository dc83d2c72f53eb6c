import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shearlab.dsl import parse_field
from shearlab.dynsys import (
    IntegratorConfig, PulseSchedule, integrate, kick_map, relaxation_map,
    time_T_map,
)
from shearlab.radial_shear import make_radial_shear

TIGHT = IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12)


@pytest.fixture(scope="module")
def rot():
    return parse_field("f1 = -x2; f2 = x1;")


def test_schedule_validation():
    with pytest.raises(ValueError):
        PulseSchedule(rho=2.0, T=1.0, epsilon=0.1)
    with pytest.raises(ValueError):
        PulseSchedule(rho=0.5, T=1.0, epsilon=-1.0)


@given(st.floats(-50, 50), st.floats(0.1, 3.0), st.floats(3.5, 20.0))
@settings(max_examples=50, deadline=None)
def test_schedule_periodic_binary(t, rho, T):
    from hypothesis import assume

    sched = PulseSchedule(rho=rho, T=T, epsilon=1.0)
    phase = t % T
    # the pulse is discontinuous at the switch times; stay clear of them
    assume(min(abs(phase - rho), phase, abs(phase - T)) > 1e-9 * T)
    v = sched.evaluate(t)
    assert v in (0.0, 1.0)
    assert sched.evaluate(t + T) == v
    assert (v == 1.0) == (phase <= rho)


def test_rotation_closed_orbit(rot):
    traj = integrate(rot, None, [1.0, 0.0], 0.0, 2 * np.pi, TIGHT, record=False)
    x, _ = traj.end_state()
    assert np.max(np.abs(x - [1.0, 0.0])) < 1e-8


def test_rotation_tangent_is_rotation(rot):
    traj = integrate(rot, None, [1.0, 0.0], 0.0, np.pi, TIGHT,
                     with_tangent=True, record=False)
    x, V = traj.end_state()
    assert np.max(np.abs(V - [[-1, 0], [0, -1]])) < 1e-8
    assert abs(np.linalg.det(V) - 1.0) < 1e-8


def test_rs_radial_relaxation():
    prog = make_radial_shear(0.05, 1.0)
    traj = integrate(prog, None, [1.5, 0.0], 0.0, 10.0, TIGHT, record=False)
    x, _ = traj.end_state()
    r = np.hypot(*x)
    assert abs(r - 1.0 - 0.5 * np.exp(-0.5)) < 1e-6


def test_steps_stop_at_pulse_switches():
    prog = make_radial_shear(0.05, 1.0)
    sched = PulseSchedule(rho=1.0, T=4.0, epsilon=0.05)
    traj = integrate(prog, sched, [1.0, 0.0], 0.0, 9.0, TIGHT)
    ts = np.array([s.t for s in traj.samples()])
    for sw in (1.0, 4.0, 5.0, 8.0):
        assert np.min(np.abs(ts - sw)) < 1e-12
        inside = (ts > sw + 1e-12) & (ts < sw - 1e-12)
        assert not inside.any()


def test_tangent_matches_fd_jacobian():
    prog = make_radial_shear(0.05, 1.0)
    sched = PulseSchedule(rho=1.0, T=6.0, epsilon=0.02)
    rng = np.random.default_rng(7)
    cfg = IntegratorConfig(1e-11, 1e-11)
    for _ in range(20):
        x0 = np.array([rng.uniform(0.8, 1.3), 0.0])
        th = rng.uniform(0, 2 * np.pi)
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        x0 = R @ x0
        _, V = time_T_map(prog, sched, x0, cfg)
        h = 1e-6
        J = np.empty((2, 2))
        for i in range(2):
            xp, xm = x0.copy(), x0.copy()
            xp[i] += h
            xm[i] -= h
            J[:, i] = (time_T_map(prog, sched, xp, cfg)[0]
                       - time_T_map(prog, sched, xm, cfg)[0]) / (2 * h)
        assert np.max(np.abs(V - J)) / max(1.0, np.max(np.abs(J))) < 1e-4


def test_tolerance_halving_convergence():
    prog = make_radial_shear(0.05, 1.0)
    sched = PulseSchedule(rho=1.0, T=7.0, epsilon=0.05)
    ends = {}
    for tol in (1e-8, 5e-9):
        cfg = IntegratorConfig(tol, tol)
        ends[tol], _ = time_T_map(prog, sched, np.array([1.2, 0.1]), cfg)
    assert np.max(np.abs(ends[1e-8] - ends[5e-9])) < 10 * 1e-8


def test_kick_zero_eps_equals_flow():
    prog = make_radial_shear(0.05, 1.0)
    sched = PulseSchedule(rho=1.0, T=5.0, epsilon=0.0)
    x0 = np.array([1.2, 0.3])
    xk, _ = kick_map(prog, sched, x0, TIGHT)
    traj = integrate(prog, None, x0, 0.0, 1.0, TIGHT, record=False)
    xf, _ = traj.end_state()
    assert np.max(np.abs(xk - xf)) < 1e-12


def test_kick_first_order_displacement(rs_cycle, rs_prog):
    # radial forcing: displacement ~ eps * int_0^rho sin(s0 + u) du + O(eps^2)
    eps = 0.01
    sched = PulseSchedule(rho=1.0, T=5.0, epsilon=eps)
    s0 = 0.7
    x0 = rs_cycle.gamma(s0)
    xk, _ = kick_map(rs_prog, sched, x0, TIGHT)
    dr = np.hypot(*xk) - np.hypot(*x0)
    expected = eps * (np.cos(s0) - np.cos(s0 + 1.0))
    assert abs(dr - expected) < 5 * eps ** 2


def test_kick_reversibility(rs_prog):
    sched = PulseSchedule(rho=1.0, T=5.0, epsilon=0.01)
    x0 = np.array([1.3, 0.2])
    traj = integrate(rs_prog, sched, x0, 0.0, 1.0, TIGHT, record=False)
    xk, _ = traj.end_state()
    back = integrate(rs_prog, sched, xk, 1.0, 0.0, TIGHT, record=False)
    xb, _ = back.end_state()
    assert np.max(np.abs(xb - x0)) < 1e-9


def test_relaxation_contracts_at_rate_lambda():
    prog = make_radial_shear(0.05, 1.0)
    x0 = np.array([1.4, 0.0])
    duration = 12.0
    x, _ = relaxation_map(prog, duration, x0, TIGHT)
    d0, d1 = 0.4, np.hypot(*x) - 1.0
    assert abs(d1 / d0 - np.exp(-0.05 * duration)) < 1e-6


def test_relaxation_zero_duration_identity():
    prog = make_radial_shear(0.05, 1.0)
    x0 = np.array([1.3, -0.2])
    x, V = relaxation_map(prog, 0.0, x0, TIGHT)
    assert np.array_equal(x, x0)
    assert np.array_equal(V, np.eye(2))


def test_long_relaxation_lands_on_cycle():
    prog = make_radial_shear(0.05, 1.0)
    x, _ = relaxation_map(prog, 700.0, np.array([1.5, 0.0]), TIGHT)
    assert abs(np.hypot(*x) - 1.0) < 1e-9


def test_time_T_periodic_point(rs_prog, rs_cycle):
    sched = PulseSchedule(rho=1.0, T=rs_cycle.p0, epsilon=0.0)
    x0 = rs_cycle.gamma(2.0)
    x, V = time_T_map(rs_prog, sched, x0, TIGHT)
    assert np.max(np.abs(x - x0)) < 1e-7
    assert np.linalg.det(V) > 0


def test_orientation_preserved_at_random_points(rs_prog):
    sched = PulseSchedule(rho=1.0, T=9.0, epsilon=0.05)
    rng = np.random.default_rng(3)
    cfg = IntegratorConfig(1e-9, 1e-9)
    for _ in range(100):
        th = rng.uniform(0, 2 * np.pi)
        r = rng.uniform(0.8, 1.2)
        _, V = time_T_map(rs_prog, sched, [r * np.cos(th), r * np.sin(th)], cfg)
        assert np.linalg.det(V) > 0


def test_kick_derivative_scaling_diagnostic(rs_cycle):
    # normal displacement over one kick stays O(eps) with a stable prefactor
    fitted = []
    for eps in (1e-2, 1e-3, 1e-4):
        prog = make_radial_shear(0.05, 1.0)
        sched = PulseSchedule(rho=1.0, T=5.0, epsilon=eps)
        worst = 0.0
        for s0 in np.linspace(0, 2 * np.pi, 8, endpoint=False):
            xk, _ = kick_map(prog, sched, rs_cycle.gamma(s0), TIGHT)
            worst = max(worst, abs(np.hypot(*xk) - 1.0))
        fitted.append(worst / eps)
    assert max(fitted) / min(fitted) < 1.5


def test_tube_exit_error(rs_prog, rs_cycle):
    from shearlab.dynsys import TubeExitError

    sched = PulseSchedule(rho=1.0, T=5.0, epsilon=0.2)
    x0 = rs_cycle.gamma(0.4)
    with pytest.raises(TubeExitError):
        kick_map(rs_prog, sched, x0, TIGHT, cycle=rs_cycle, tube_radius=1e-4)
    # generous tube: same kick passes
    kick_map(rs_prog, sched, x0, TIGHT, cycle=rs_cycle, tube_radius=0.5)


def test_3d_tangent_flow_block_structure():
    prog = parse_field("f1 = -x2; f2 = x1; f3 = -x3/2;")
    t1 = 0.8
    traj = integrate(prog, None, [1.0, 0.0, 2.0], 0.0, t1, TIGHT,
                     with_tangent=True, record=False)
    x, V = traj.end_state()
    c, s = np.cos(t1), np.sin(t1)
    expected = np.array([[c, -s, 0.0], [s, c, 0.0],
                         [0.0, 0.0, np.exp(-t1 / 2)]])
    assert np.max(np.abs(V - expected)) < 1e-9


def test_trajectory_csv(tmp_path, rot):
    traj = integrate(rot, None, [1.0, 0.0], 0.0, 1.0, TIGHT)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    head = path.read_text().splitlines()
    assert head[0] == "t,x1,x2"
    assert len(head) > 3
