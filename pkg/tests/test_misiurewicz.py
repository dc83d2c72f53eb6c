import numpy as np
import pytest

from shearlab import misiurewicz as mz
from shearlab.singular_limit import SingularLimitMap

FOUR_PI = 4 * np.pi


@pytest.fixture(scope="module")
def certified(rs_map100):
    a_star, trace = mz.search_admissible_parameter(rs_map100, N_target=40,
                                                   seed=0)
    return a_star, trace


def toy_map(Lambda):
    return SingularLimitMap.from_callables(
        b0=1.0, Psi=np.cos, dPsi=lambda s: -np.sin(s),
        d2Psi=lambda s: -np.cos(s), two_L=2 * np.pi, rho=1.0, Lambda=Lambda)


def test_search_finds_clear_parameter(rs_map100, certified):
    a_star, _ = certified
    margin, ok = mz.verify_clearance(rs_map100, a_star, n_iter=40)
    assert ok
    assert margin > 100.0 ** -0.75


def test_search_trace_replay(rs_map100, certified):
    # every recorded advance must be a genuinely admissible configuration
    _, trace = certified
    xi = 100.0 ** -0.75
    psi_crit = rs_map100.psi_critical_points()
    crit = rs_map100.critical_points()
    advances = [st for st in trace.history if st.action == "advance"]
    assert advances
    for st in advances:
        assert st.m1_ok
        for k in range(len(crit)):
            assert mz._image_clear(rs_map100, crit[k], st.lo, st.hi,
                                   st.depths[k], psi_crit, xi)
        # nesting: the interval stays inside the restart's initial interval
    widths = [st.hi - st.lo for st in trace.history if st.action != "restart"]
    assert all(w > 0 for w in widths)


def test_search_declines_below_gate(rs_nf, rs_phi):
    sl = SingularLimitMap.from_normal_form(rs_nf, rs_phi, 5.0)
    with pytest.raises(mz.SearchError):
        mz.search_admissible_parameter(sl, lambda3=10.0)


def test_removed_fraction_bounded_on_toy():
    sl = toy_map(60.0)
    a_star, trace = mz.search_admissible_parameter(sl, N_target=12, seed=1)
    fracs = [st.removed_fraction for st in trace.history
             if st.action == "advance" and st.removed_fraction is not None]
    assert fracs
    assert max(fracs) <= 2.0 / 3.0 + 1e-9


def test_expansion_report(rs_map100, certified):
    a_star, _ = certified
    rep = mz.verify_expansion(rs_map100, a_star, horizon=30)
    assert rep.clause_a1 and rep.clause_c1
    assert rep.lambda0 > np.log(8.0)  # e^{lambda0 / 3} > 2
    assert rep.mixing_rate_ok
    assert 0 < rep.d0 <= 1.0
    assert rep.K4 > 0.5  # |f''| ~ Lambda |Psi''| with |Psi''| ~ 0.96 at folds


def test_expansion_fails_for_diffeomorphism(rs_nf, rs_phi):
    sl = SingularLimitMap.from_normal_form(rs_nf, rs_phi, 0.5)
    with pytest.raises(ValueError):
        mz.verify_expansion(sl, 0.0)


def test_curvature_floor_in_U(rs_map100, certified):
    a_star, _ = certified
    rep = mz.verify_expansion(rs_map100, a_star, horizon=10)
    assert rep.min_curvature_in_U >= rep.K4 * rs_map100.Lambda * (1 - 1e-12)
    assert rep.min_curvature_in_U > 0


def test_binding(rs_map100, certified):
    a_star, _ = certified
    rep = mz.check_binding(rs_map100, a_star)
    assert rep.all_m_greater_1
    assert rep.max_first_step < 0.5 * 100.0 ** -0.75
    assert rep.K7 > 0


def test_binding_rejects_exact_critical_point(rs_map100, certified):
    a_star, _ = certified
    c = rs_map100.critical_points(a_star)[0]
    with pytest.raises(ValueError, match="coincides"):
        mz.check_binding(rs_map100, a_star, s_samples=[c])


def test_transversality(rs_map100, certified):
    a_star, _ = certified
    rep = mz.check_transversality(rs_map100, a_star)
    assert rep.ok
    # b0 == 1 hence df/da == 1: the sums sit near 1 with a geometric tail
    assert all(abs(s - 1.0) < 0.5 for s in rep.sums)
    assert rep.min_abs_sum > 0.5
    # leading term is df/da at the critical point, inside [1/K6, K6]
    for c in rs_map100.critical_points(a_star):
        t0 = float(rs_map100.df_da(float(c), a_star))
        assert 1.0 - 1e-9 <= t0 <= 1.0 + 1e-9  # K6 == 1 for unit speed


def test_expansion_grid_too_coarse_reported(rs_map100, certified):
    a_star, _ = certified
    with pytest.raises(ValueError, match="raise grid_n"):
        mz.verify_expansion(rs_map100, a_star, grid_n=64)


def test_transversality_refuses_without_expansion(rs_nf, rs_phi):
    sl = SingularLimitMap.from_normal_form(rs_nf, rs_phi, 30.0)
    fake = mz.ExpansionReport(
        lambda0=-1.0, M0=1, d0=1.0, U_radius=0.1, horizon=5,
        clause_a1=False, clause_a2=True, clause_c1=True, clause_c2=True,
        min_curvature_in_U=1.0, K4=0.1, worst_rates=np.zeros(5))
    with pytest.raises(ValueError):
        mz.check_transversality(sl, 0.0, expansion=fake)


def test_mixing_all_ones(rs_map100, certified):
    a_star, _ = certified
    rep = mz.check_mixing(rs_map100, a_star)
    assert rep.applicable and rep.ok
    assert rep.r == 4
    assert rep.N == 1
    assert np.all(rep.Q == 1)


def test_mixing_not_applicable_for_diffeomorphism(rs_nf, rs_phi):
    sl = SingularLimitMap.from_normal_form(rs_nf, rs_phi, 0.5)
    rep = mz.check_mixing(sl, 0.0)
    assert not rep.applicable
    assert rep.r == 0


def test_distortion_ratio_bounded_by_fit(rs_map100):
    # fresh short clear intervals respect the fitted distortion bound
    import numpy as np

    D1 = mz.fit_distortion_constant(rs_map100, n_intervals=20, seed=3)
    xi = 100.0 ** -0.75
    psi_crit = rs_map100.psi_critical_points()
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(40):
        a0 = rng.uniform(0, rs_map100.two_L)
        a = np.linspace(a0, a0 + 0.2 * xi, 7)
        g = np.full(7, rs_map100.critical_points()[0])
        fs = rs_map100.eval_f(g, a)
        D = rs_map100.df_da(g, a, fs)
        g = fs
        for depth in range(2, 7):
            clear = np.all(mz._dist_to_set(np.mod(g, rs_map100.two_L),
                                           psi_crit, rs_map100.two_L) > xi)
            if not clear or g.max() - g.min() >= xi:
                break
            fs = rs_map100.eval_f(g, a)
            fp, _ = rs_map100.f_derivatives(g, a, fs)
            D = fp * D + rs_map100.df_da(g, a, fs)
            g = fs
            ratio = np.abs(D).max() / np.abs(D).min()
            assert ratio < D1
            checked += 1
    assert checked > 5


def test_fitted_constants_stable_across_lambda(rs_nf, rs_phi):
    from shearlab.singular_limit import SingularLimitMap as SLM

    D1s, K7s = [], []
    for Lam in (50.0, 100.0, 200.0):
        sl = SLM.from_normal_form(rs_nf, rs_phi, Lam)
        D1s.append(mz.fit_distortion_constant(sl, n_intervals=12, seed=2))
        a_star, _ = mz.search_admissible_parameter(sl, N_target=15, seed=2)
        K7s.append(mz.check_binding(sl, a_star).K7)
    assert all(v > 0 for v in D1s + K7s)
    assert max(D1s) / min(D1s) < 4.0


def test_full_certification_record(rs_map100, certified):
    a_star, _ = certified
    rep = mz.certify(rs_map100, a_star=a_star, N_target=40, horizon=30)
    assert rep.certified
    d = rep.to_json_dict()
    assert d["mixing_N"] == 1 and d["clearance_ok"]
    import json

    json.dumps(d)  # serializable


def test_trace_csv(tmp_path, certified):
    _, trace = certified
    path = tmp_path / "trace.csv"
    trace.trace_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("step,lo,hi,action")
    assert len(lines) == len(trace.history) + 1
