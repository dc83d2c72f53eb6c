import numpy as np
import pytest

from shearlab.dynsys import PulseSchedule
from shearlab.radial_shear import f_a_closed
from shearlab.singular_limit import (
    CriticalCurve, SingularLimitMap, advance_critical_curve, circle_dist,
    empirical_singular_limit,
)

FOUR_PI = 4 * np.pi


def toy_map(Lambda, two_L=2 * np.pi, rho=1.0):
    """One critical pair: b0 = 1, Psi = cos s on a circle of length two_L."""
    return SingularLimitMap.from_callables(
        b0=1.0, Psi=np.cos, dPsi=lambda s: -np.sin(s),
        d2Psi=lambda s: -np.cos(s), two_L=two_L, rho=rho, Lambda=Lambda)


def test_matches_rs_closed_form(rs_map100):
    s = np.linspace(0, FOUR_PI, 500, endpoint=False)
    for a in (0.0, 2.0, 9.0):
        fs = rs_map100.eval_f(s, a)
        assert np.max(np.abs(fs - f_a_closed(s, a, 100.0))) < 1e-9


def test_defining_residual(rs_map100):
    rng = np.random.default_rng(0)
    s = rng.uniform(0, FOUR_PI, 400)
    a = rng.uniform(0, FOUR_PI, 400)
    fs = rs_map100.eval_f(s, a)
    assert np.max(np.abs(rs_map100.residual(s, fs, a))) < 1e-12


def test_degree_one_lift(rs_map100):
    # degree one by construction; equality is limited only by the float
    # reduction of the shifted argument itself
    s = np.linspace(0, FOUR_PI, 64)
    a = 1.7
    assert np.max(np.abs(rs_map100.eval_f(s + FOUR_PI, a) - FOUR_PI
                         - rs_map100.eval_f(s, a))) < 1e-9


def test_lambda_zero_pure_shift(rs_nf, rs_phi):
    sl = SingularLimitMap.from_normal_form(rs_nf, rs_phi, 0.0)
    s = np.linspace(0, FOUR_PI, 100)
    fs = sl.eval_f(s, 2.5)
    # int_s^f b0 == t_hat(a) + rho everywhere
    assert np.max(np.abs((fs - s) - (sl.t_hat(2.5) + 1.0))) < 1e-9
    fp, _ = sl.f_derivatives(s, 2.5)
    assert np.max(np.abs(fp - 1.0)) < 1e-9


def test_monotone_in_a(rs_map100):
    s = 1.234
    a = np.linspace(0, FOUR_PI, 300)
    fs = rs_map100.eval_f(np.full_like(a, s), a)
    assert np.all(np.diff(fs) > 0)
    dfa = rs_map100.df_da(np.full_like(a, s), a)
    assert np.all(dfa > 0)


def test_derivative_formulas_vs_closed_form(rs_map100):
    s = np.linspace(0, FOUR_PI, 300, endpoint=False)
    fp, fpp = rs_map100.f_derivatives(s, 0.7)
    assert np.max(np.abs(fp - (1 - 100 * (-np.sin(s + 1) + np.sin(s))))) < 1e-7
    assert np.max(np.abs(fpp - (-100 * (-np.cos(s + 1) + np.cos(s))))) < 1e-6


def test_critical_points_near_psi_criticals(rs_map100):
    crit = rs_map100.critical_points()
    vbar = rs_map100.psi_critical_points()
    assert len(crit) == 4 and len(vbar) == 4
    for v, vb in zip(crit, vbar):
        assert abs(v - vb) < 2.0 / 100.0  # K3 / Lambda with K3 ~ 1
    # q0 does not depend on a
    assert len(rs_map100.critical_points(3.3)) == 4


def test_no_critical_points_below_shear_threshold(rs_nf, rs_phi):
    sl = SingularLimitMap.from_normal_form(rs_nf, rs_phi, 0.5)
    assert sl.critical_points() == []


def test_critical_curve_first_derivative_bounds(rs_map100):
    a = np.linspace(5.0, 5.2, 9)
    cc = advance_critical_curve(CriticalCurve.start(rs_map100, 0, a), 1)
    # b0 == 1: df/da == 1 exactly at depth 1
    assert np.max(np.abs(cc.derivs[1] - 1.0)) < 1e-9


def test_critical_curve_growth_while_clear(rs_map100):
    # pick a parameter window whose early iterates stay clear of C_xi(Psi)
    xi = 100.0 ** -0.75
    vbar = rs_map100.psi_critical_points()
    rng = np.random.default_rng(5)
    grown = 0
    for _ in range(30):
        a0 = rng.uniform(0, FOUR_PI)
        a = np.array([a0])
        cc = advance_critical_curve(CriticalCurve.start(rs_map100, 1, a), 6)
        clear = True
        for i in range(1, 6):
            d = circle_dist(cc.iterates[i][0] % FOUR_PI, np.array(vbar),
                            FOUR_PI).min()
            if d <= xi:
                clear = False
                break
        if clear:
            grown += 1
            assert abs(cc.derivs[6][0]) > 100.0 ** (5.0 / 5.0)
    assert grown > 0


def test_toy_map_q0_2(rs_map100):
    sl = toy_map(40.0)
    assert len(sl.critical_points()) == 2


def test_empirical_map_eps0_rigid_shift(rs_prog, rs_cycle):
    sched = PulseSchedule(rho=1.0, T=10.0, epsilon=0.0)
    s0, emp, T = empirical_singular_limit(rs_prog, sched, rs_cycle, a=1.5,
                                          m=1, n_grid=24)
    shift = (emp - s0) % FOUR_PI
    assert np.max(np.abs(shift - shift[0])) < 1e-6
    # unit speed: shift is the flow time mod 4 pi
    assert abs((shift[0] - T) % (2 * np.pi)) < 1e-6 or \
        abs((shift[0] - T) % (2 * np.pi) - 2 * np.pi) < 1e-6


def test_export_csv(tmp_path, rs_map100):
    path = tmp_path / "map.csv"
    rs_map100.export_csv(path, a=0.3, n=50)
    lines = path.read_text().splitlines()
    assert lines[0] == "s,f,fprime,fsecond"
    assert len(lines) == 51
