"""Misiurewicz certification of singular-limit maps.

The certification splits the defining conditions into measurable pieces:
expansion outside a critical neighborhood U (with fitted rate lambda0,
horizon M0 and prefactor d0), critical orbits staying clear of U, binding
and transversality estimates at the certified parameter, and topological
mixing of the branch-transition matrix.  Clearance for all iterates is
undecidable numerically; we certify a finite horizon (default 40) and
report the expansion margin beyond it.

The parameter search runs the nested-interval construction: keep every
critical branch's interval image clear of C_xi(Psi), advance branches whose
images are short enough for the distortion control, halve otherwise.  True
interval nesting bottoms out at float resolution after ~10 effective
iterate depths (images grow like Lambda^{i/4}); past that the interval is a
point for float64 purposes and the remaining depth is verified by direct
iteration of the midpoint, with golden-ratio restarts inside the last
resolvable interval if the midpoint fails.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExpansionReport",
    "BindingReport",
    "TransversalityReport",
    "MixingReport",
    "SearchStep",
    "AdmissibleConfiguration",
    "MisiurewiczReport",
    "SearchError",
    "verify_expansion",
    "search_admissible_parameter",
    "check_binding",
    "check_transversality",
    "check_mixing",
    "verify_clearance",
    "fit_distortion_constant",
    "certify",
]


class SearchError(RuntimeError):
    def __init__(self, message, config=None):
        super().__init__(message)
        self.config = config


def _dist_to_set(s, points, period):
    """Circle distance from s (array) to the nearest of points."""
    s = np.asarray(s, dtype=float)
    if not points:
        return np.full(s.shape, np.inf)
    pts = np.asarray(points)
    d = np.abs(s[..., None] - pts[None, :]) % period
    d = np.minimum(d, period - d)
    return d.min(axis=-1)


# ---------------------------------------------------------------------------
# expansion outside U


@dataclass
class ExpansionReport:
    lambda0: float
    M0: int
    d0: float
    U_radius: float
    horizon: int
    clause_a1: bool
    clause_a2: bool
    clause_c1: bool
    clause_c2: bool
    min_curvature_in_U: float
    K4: float
    worst_rates: np.ndarray  # E[m], m = 1..horizon

    @property
    def ok(self):
        return self.clause_a1 and self.clause_a2 and self.clause_c1 and self.clause_c2

    @property
    def mixing_rate_ok(self):
        return math.exp(self.lambda0 / 3.0) > 2.0


def verify_expansion(slmap, a, U_radius=None, horizon=40, grid_n=4096,
                     M0_cap=12):
    """Fit (lambda0, M0, d0) of the expansion clauses on a grid scan.

    E[m] is the worst m-step average log-derivative over orbits that stayed
    outside U through step m-1; lambda0 is the best tail bound
    max_{M0} min_{m >= M0} E[m], d0 covers the short entering orbits, and
    the return-time clause is checked on samples inside U.
    """
    crit = slmap.critical_points(a)
    if not crit:
        raise ValueError("map has no critical points; expansion scan "
                         "requires the folded regime")
    two_L = slmap.two_L
    delta = U_radius if U_radius is not None else slmap.Lambda ** -0.75
    if two_L / grid_n > delta / 8.0:
        raise ValueError(
            "scan grid too coarse near the critical set: spacing %.3g vs "
            "U radius %.3g; raise grid_n to >= %d"
            % (two_L / grid_n, delta, int(8 * two_L / delta) + 1))

    grid = np.linspace(0.0, two_L, grid_n, endpoint=False)
    outside = _dist_to_set(grid, crit, two_L) > delta
    x = grid[outside]
    alive = np.ones(len(x), dtype=bool)
    acc = np.zeros(len(x))
    E = np.full(horizon + 1, np.inf)
    enter_min = np.full(horizon + 1, np.inf)  # min |prod| among U-entering orbits
    cur = x.copy()
    for m in range(1, horizon + 1):
        fs = slmap.eval_f(cur, a)
        fp, _ = slmap.f_derivatives(cur, a, fs)
        acc = acc + np.log(np.abs(fp))
        cur = fs
        din = _dist_to_set(np.mod(cur, two_L), crit, two_L) <= delta
        live = alive
        if live.any():
            E[m] = float(np.min(acc[live]) / m)
            entering = live & din
            if entering.any():
                enter_min[m] = float(np.exp(np.min(acc[entering])))
        alive = alive & ~din
        if not alive.any() and m < horizon:
            E[m + 1:] = np.nan
            break

    valid = np.isfinite(E[1:])
    lambda0 = -np.inf
    M0 = 1
    for m0 in range(1, min(M0_cap, horizon) + 1):
        tail = E[m0: horizon + 1]
        tail = tail[np.isfinite(tail)]
        if len(tail) == 0:
            continue
        cand = float(np.min(tail))
        if cand > lambda0:
            lambda0 = cand
            M0 = m0
    clause_a1 = lambda0 > 0.0

    # d0 small enough for every entering orbit: |prod| >= d0 e^{lambda0 m}
    d0_caps = [enter_min[m] * math.exp(-lambda0 * m)
               for m in range(1, horizon + 1) if np.isfinite(enter_min[m])]
    d0 = min(1.0, min(d0_caps)) if d0_caps else 1.0
    clause_a2 = d0 > 0.0

    # (C1): f'' bounded away from zero on U
    u_samples = []
    for c in crit:
        u_samples.append(np.linspace(c - delta, c + delta, 101))
    u = np.concatenate(u_samples)
    _, fpp = slmap.f_derivatives(u, a)
    min_curv = float(np.min(np.abs(fpp)))
    clause_c1 = min_curv > 0.0
    K4 = min_curv / slmap.Lambda

    # (C2): returns to U expand enough to be covered with prefactor 1/d0;
    # it lower-bounds d0 while the entering-orbit clause upper-bounds it,
    # so the certificate needs a nonempty window [d0_floor, d0]
    d0_floor = 0.0
    for c in crit:
        for off in np.linspace(0.05 * delta, 0.95 * delta, 8):
            for s0 in (c - off, c + off):
                s_i = s0
                prod = 1.0
                p_ret = None
                for i in range(1, horizon + 1):
                    fp, _ = slmap.f_derivatives(s_i, a)
                    prod *= abs(float(fp))
                    s_i = float(slmap.eval_f(s_i, a))
                    if _dist_to_set(np.array([s_i % two_L]), crit, two_L)[0] <= delta:
                        p_ret = i
                        break
                if p_ret is None:
                    continue  # never returns within horizon: clause vacuous
                need = math.exp(lambda0 * p_ret / 3.0) / prod
                d0_floor = max(d0_floor, need)
    clause_c2 = d0_floor <= d0

    return ExpansionReport(
        lambda0=float(lambda0), M0=int(M0), d0=float(d0), U_radius=float(delta),
        horizon=horizon, clause_a1=clause_a1, clause_a2=clause_a2,
        clause_c1=clause_c1, clause_c2=bool(clause_c2),
        min_curvature_in_U=min_curv, K4=float(K4),
        worst_rates=E[1:].copy(),
    )


# ---------------------------------------------------------------------------
# nested-interval parameter search


@dataclass
class SearchStep:
    step: int
    lo: float
    hi: float
    depths: tuple
    action: str         # advance | halve | point_mode | restart
    m1_ok: bool
    m3_lengths: tuple
    removed_fraction: float = None


@dataclass
class AdmissibleConfiguration:
    lo: float
    hi: float
    depths: tuple
    history: list = field(default_factory=list)

    def trace_csv(self, path):
        with open(path, "w") as fh:
            fh.write("step,lo,hi,action,removed_fraction," +
                     ",".join("depth_%d" % k for k in range(len(self.depths)))
                     + "\n")
            for st in self.history:
                fh.write("%d,%.17g,%.17g,%s,%s,%s\n" % (
                    st.step, st.lo, st.hi, st.action,
                    "" if st.removed_fraction is None else "%.6g" % st.removed_fraction,
                    ",".join(str(d) for d in st.depths)))


def _branch_iterate(slmap, v, a_vals, depth):
    """gamma^(k)_depth(a) for each a in a_vals (lifts)."""
    g = np.full(len(a_vals), v, dtype=float)
    for _ in range(depth):
        g = slmap.eval_f(g, np.asarray(a_vals))
    return g


def _branch_with_derivative(slmap, v, a_vals, depth):
    """(gamma_depth(a), d/da gamma_depth(a)) via the forward recursion."""
    a_vals = np.asarray(a_vals, dtype=float)
    g = np.full(len(a_vals), v, dtype=float)
    D = np.zeros(len(a_vals))
    for _ in range(depth):
        fs = slmap.eval_f(g, a_vals)
        fp, _ = slmap.f_derivatives(g, a_vals, fs)
        D = fp * D + slmap.df_da(g, a_vals, fs)
        g = fs
    return g, D


def _interval_image(slmap, v, lo, hi, depth, n=9):
    """Sampled image of a -> gamma_depth(a) over [lo, hi]."""
    a = np.linspace(lo, hi, n)
    return a, _branch_iterate(slmap, v, a, depth)


def _image_length(slmap, v, lo, hi, depth, n=9):
    _, g = _interval_image(slmap, v, lo, hi, depth, n)
    return float(g.max() - g.min())


def _image_clear(slmap, v, lo, hi, depth, psi_crit, xi, n=65):
    """Dense clearance check with derivative-bound padding between samples."""
    if depth == 0:
        g = np.array([v])
        return bool(np.all(_dist_to_set(np.mod(g, slmap.two_L), psi_crit,
                                        slmap.two_L) > xi))
    a = np.linspace(lo, hi, n)
    g, D = _branch_with_derivative(slmap, v, a, depth)
    pad = 0.5 * np.abs(D).max() * (hi - lo) / (n - 1)
    dist = _dist_to_set(np.mod(g, slmap.two_L), psi_crit, slmap.two_L)
    return bool(np.all(dist - pad > xi))


def _bad_parameter_set(slmap, v, lo, hi, depth, psi_crit, xi, n=129):
    """Subintervals of [lo,hi] whose depth-iterate meets C_xi(Psi).

    Dense sample with derivative padding locates the bad runs; run edges are
    then tightened by bisection on the locally monotone pieces.
    """
    two_L = slmap.two_L
    a = np.linspace(lo, hi, n)
    g, D = _branch_with_derivative(slmap, v, a, depth)
    pad = 0.5 * np.abs(D).max() * (hi - lo) / (n - 1)
    dist = _dist_to_set(np.mod(g, two_L), psi_crit, two_L)
    bad_mask = dist <= xi + pad
    bad = []
    i = 0
    while i < n:
        if bad_mask[i]:
            j = i
            while j + 1 < n and bad_mask[j + 1]:
                j += 1
            a_lo = a[max(i - 1, 0)]
            a_hi = a[min(j + 1, n - 1)]
            # tighten edges: bisect toward the clearance boundary
            if i > 0:
                a_lo = _bisect_boundary(slmap, v, depth, psi_crit, xi,
                                        a[i - 1], a[i])
            if j + 1 < n:
                a_hi = _bisect_boundary(slmap, v, depth, psi_crit, xi,
                                        a[j + 1], a[j])
            bad.append((min(a_lo, a_hi), max(a_lo, a_hi)))
            i = j + 1
        i += 1
    return _merge_intervals(bad)


def _bisect_boundary(slmap, v, depth, psi_crit, xi, a_clear, a_bad):
    """Point between a clear and a bad parameter where dist == xi."""
    two_L = slmap.two_L

    def dist_of(a):
        g = _branch_iterate(slmap, v, np.array([a]), depth)
        return float(_dist_to_set(np.mod(g, two_L), psi_crit, two_L)[0])

    lo, hi = a_clear, a_bad
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if dist_of(mid) > xi:
            lo = mid
        else:
            hi = mid
        if abs(hi - lo) < 1e-17 * max(1.0, abs(hi)):
            break
    return lo  # clear side: removed interval extends to the last bad point


def _merge_intervals(ivs):
    if not ivs:
        return []
    ivs = sorted(ivs)
    out = [list(ivs[0])]
    for lo, hi in ivs[1:]:
        if lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(p) for p in out]


def _largest_gap(lo, hi, bad):
    """Largest subinterval of [lo,hi] avoiding the union of bad intervals."""
    edges = [lo]
    for b_lo, b_hi in bad:
        edges += [max(lo, b_lo), min(hi, b_hi)]
    edges.append(hi)
    best = None
    pts = sorted(set(edges))
    cover = lambda x: any(b_lo - 1e-18 <= x <= b_hi + 1e-18 for b_lo, b_hi in bad)
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        if cover(0.5 * (a + b)):
            continue
        if best is None or (b - a) > (best[1] - best[0]):
            best = (a, b)
    return best


def fit_distortion_constant(slmap, n_intervals=24, depth_cap=12, seed=0):
    """Empirical bound D1 on the parameter-distortion ratio of critical
    curves over short clear intervals (safety factor 1.25 applied)."""
    rng = np.random.default_rng(seed)
    two_L = slmap.two_L
    xi = slmap.Lambda ** -0.75
    psi_crit = slmap.psi_critical_points()
    crit = slmap.critical_points()
    worst = 1.0
    for _ in range(n_intervals):
        k = rng.integers(0, len(crit))
        a0 = rng.uniform(0.0, two_L)
        width = xi * rng.uniform(0.05, 0.5)
        a = np.linspace(a0, a0 + width, 9)
        g = np.full(9, crit[k])
        fs = slmap.eval_f(g, a)
        D = slmap.df_da(g, a, fs)
        g = fs
        for i in range(2, depth_cap + 1):
            clear = np.all(_dist_to_set(np.mod(g, two_L), psi_crit, two_L) > xi)
            if not clear or g.max() - g.min() >= xi:
                break
            fs = slmap.eval_f(g, a)
            fp, _ = slmap.f_derivatives(g, a, fs)
            D = fp * D + slmap.df_da(g, a, fs)
            g = fs
            ratio = np.abs(D).max() / max(np.abs(D).min(), 1e-300)
            worst = max(worst, float(ratio))
    return 1.25 * worst


def search_admissible_parameter(slmap, Delta0=None, N_target=40,
                                D1=None, lambda3=10.0, max_steps=400,
                                max_restarts=80, float_floor=1e-12, seed=0):
    """Nested-interval search for a parameter whose critical orbits stay
    clear of C_xi(Psi) for N_target iterates.

    Returns (a_star, AdmissibleConfiguration).
    """
    if slmap.Lambda < lambda3:
        raise SearchError("Lambda=%.3g below the search gate %.3g"
                          % (slmap.Lambda, lambda3))
    two_L = slmap.two_L
    xi = slmap.Lambda ** -0.75
    psi_crit = slmap.psi_critical_points()
    crit = slmap.critical_points()
    q0 = len(crit)
    if q0 == 0:
        raise SearchError("no critical points: map is a diffeomorphism")
    b0g = slmap.chart.b0(np.linspace(0, two_L, 4096, endpoint=False))
    K6 = float(b0g.max() / b0g.min())
    if D1 is None:
        D1 = fit_distortion_constant(slmap, seed=seed)
    d_tilde = _min_gap(psi_crit, two_L)
    standing_ok = 3.0 * D1 * K6 ** 2 * q0 * xi < 0.5 * d_tilde

    width0 = 3.0 * D1 * K6 * q0 * xi
    if Delta0 is not None:
        lo0, width0 = Delta0[0], Delta0[1] - Delta0[0]
    else:
        lo0 = 0.0

    history = []
    step_no = 0
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    for restart in range(max_restarts):
        lo = (lo0 + restart * golden * two_L) % two_L
        hi = lo + width0
        depths = [0] * q0
        history.append(SearchStep(step_no, lo, hi, tuple(depths), "restart",
                                  True, ()))
        step_no += 1
        ok, a_star, lo, hi, depths = _search_one(
            slmap, lo, hi, depths, crit, psi_crit, xi, N_target, d_tilde,
            D1, q0, max_steps, float_floor, history, step_no)
        step_no = history[-1].step + 1
        if ok:
            cfg = AdmissibleConfiguration(lo, hi, tuple(depths), history)
            cfg.standing_assumption_ok = standing_ok
            cfg.D1 = D1
            cfg.K6 = K6
            cfg.xi = xi
            return a_star, cfg
    raise SearchError("no admissible parameter after %d restarts" % max_restarts,
                      AdmissibleConfiguration(lo, hi, tuple(depths), history))


def _min_gap(points, period):
    if len(points) < 2:
        return period
    p = np.sort(np.asarray(points))
    return float(np.min(np.diff(np.append(p, p[0] + period))))


def _search_one(slmap, lo, hi, depths, crit, psi_crit, xi, N_target, d_tilde,
                D1, q0, max_steps, float_floor, history, step_no):
    for _ in range(max_steps):
        if all(d >= N_target for d in depths):
            return True, 0.5 * (lo + hi), lo, hi, depths
        if hi - lo < float_floor:
            ok, a_star = _point_mode(slmap, lo, hi, crit, psi_crit, xi, N_target)
            history.append(SearchStep(step_no, lo, hi, tuple(depths),
                                      "point_mode", ok, ()))
            step_no += 1
            if ok:
                return True, a_star, lo, hi, [N_target] * q0
            return False, None, lo, hi, depths

        # ready = image short enough for distortion control (I1) and next
        # image meeting at most one component of C_xi(Psi) (I2)
        ready = []
        for k in range(q0):
            i1 = depths[k] == 0 or \
                _image_length(slmap, crit[k], lo, hi, depths[k]) < xi
            i2 = _image_length(slmap, crit[k], lo, hi, depths[k] + 1) \
                < 0.5 * d_tilde
            if i1 and i2:
                ready.append(k)

        if ready:
            bad = []
            for k in ready:
                bad += _bad_parameter_set(slmap, crit[k], lo, hi,
                                          depths[k] + 1, psi_crit, xi)
            bad = _merge_intervals(bad)
            removed = sum(b - a for a, b in bad) / (hi - lo)
            gap = _largest_gap(lo, hi, bad)
            if gap is None or (gap[1] - gap[0]) < max(float_floor,
                                                      1e-3 * (hi - lo)):
                # selection infeasible at this resolution: halve and retry
                hi = 0.5 * (lo + hi)
                history.append(SearchStep(step_no, lo, hi, tuple(depths),
                                          "halve", True, (), removed))
                step_no += 1
                continue
            new_lo, new_hi = gap
            new_depths = list(depths)
            for k in ready:
                new_depths[k] += 1
            m1_ok = all(
                _image_clear(slmap, crit[k], new_lo, new_hi, new_depths[k],
                             psi_crit, xi)
                for k in range(q0))
            m3 = tuple(
                _image_length(slmap, crit[k], new_lo, new_hi, new_depths[k] + 1)
                for k in range(q0))
            if m1_ok:
                lo, hi, depths = new_lo, new_hi, new_depths
                history.append(SearchStep(step_no, lo, hi, tuple(depths),
                                          "advance", True, m3, removed))
            else:
                # under-resolved bad set: keep depths, shrink and retry
                hi = 0.5 * (lo + hi)
                history.append(SearchStep(step_no, lo, hi, tuple(depths),
                                          "halve", True, m3, removed))
            step_no += 1
        else:
            hi = 0.5 * (lo + hi)  # no branch ready: halve (left half)
            history.append(SearchStep(step_no, lo, hi, tuple(depths), "halve",
                                      True, ()))
            step_no += 1
    return False, None, lo, hi, depths


def _point_mode(slmap, lo, hi, crit, psi_crit, xi, N_target):
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    cands = [0.5 * (lo + hi)]
    t = golden
    for _ in range(6):
        cands.append(lo + (hi - lo) * t)
        t = (t + golden) % 1.0
    for a in cands:
        if _clearance_margin(slmap, a, crit, psi_crit, N_target) > xi:
            return True, a
    return False, None


def _clearance_margin(slmap, a, crit, psi_crit, n_iter):
    g = np.array(crit, dtype=float)
    margin = np.inf
    for _ in range(n_iter):
        g = slmap.eval_f(g, a)
        margin = min(margin, float(np.min(_dist_to_set(
            np.mod(g, slmap.two_L), psi_crit, slmap.two_L))))
    return margin


def verify_clearance(slmap, a_star, n_iter=40, xi=None):
    """Direct re-verification: min distance of critical orbits to C(Psi)."""
    xi = xi if xi is not None else slmap.Lambda ** -0.75
    crit = slmap.critical_points(a_star)
    psi_crit = slmap.psi_critical_points()
    margin = _clearance_margin(slmap, a_star, crit, psi_crit, n_iter)
    return margin, margin > xi


# ---------------------------------------------------------------------------
# binding, transversality, mixing


@dataclass
class BindingReport:
    samples: list           # (s, m(s), |（f^m)'(s)|, fitted K7)
    K7: float
    all_m_greater_1: bool
    max_first_step: float   # max |f(s)-f(c)| over samples (should be < xi/2)


def check_binding(slmap, a_star, s_samples=None, m_cap=400):
    """Recovery of derivative growth for starts near the critical set.

    Default samples sit at distance Lambda^(-11/12) on both sides of every
    critical point; explicit ``s_samples`` are paired with their nearest
    critical point and must not coincide with one (the critical point
    itself shadows its own orbit forever and has no recovery time).
    """
    two_L = slmap.two_L
    Lam = slmap.Lambda
    xi = Lam ** -0.75
    r = Lam ** (-11.0 / 12.0)
    crit = slmap.critical_points(a_star)
    pairs = []
    if s_samples is None:
        for c in crit:
            pairs.append((c - r, c))
            pairs.append((c + r, c))
    else:
        for s0 in s_samples:
            d = _dist_to_set(np.array([s0 % two_L]), crit, two_L)[0]
            c = min(crit, key=lambda cc: float(
                _dist_to_set(np.array([s0 % two_L]), [cc], two_L)[0]))
            if d == 0.0:
                raise ValueError("sample coincides with a critical point")
            pairs.append((s0, c))
    samples = []
    k7s = []
    max_first = 0.0
    for s0, c in pairs:
        sc, ss = float(c), float(s0)
        fc1 = float(slmap.eval_f(sc, a_star))
        fs1 = float(slmap.eval_f(ss, a_star))
        max_first = max(max_first, float(
            _dist_to_set(np.array([fs1 % two_L]), [fc1 % two_L], two_L)[0]))
        prod = 1.0
        m_s = None
        xs, xc = ss, sc
        for m in range(1, m_cap + 1):
            fp, _ = slmap.f_derivatives(xs, a_star)
            prod *= abs(float(fp))
            xs = float(slmap.eval_f(xs, a_star))
            xc = float(slmap.eval_f(xc, a_star))
            sep = float(_dist_to_set(np.array([xs % two_L]),
                                     [xc % two_L], two_L)[0])
            if sep > 0.5 * xi:
                m_s = m
                break
        if m_s is None:
            samples.append((s0, None, prod, None))
            continue
        k7 = prod ** (16.0 / m_s) / Lam
        k7s.append(k7)
        samples.append((s0, m_s, prod, k7))
    mm = [m for _, m, _, _ in samples if m is not None]
    return BindingReport(
        samples=samples,
        K7=float(min(k7s)) if k7s else float("nan"),
        all_m_greater_1=bool(mm and all(m > 1 for m in mm)),
        max_first_step=max_first,
    )


@dataclass
class TransversalityReport:
    sums: list               # per critical point
    tails: list
    min_abs_sum: float
    ok: bool


def check_transversality(slmap, a_star, n_terms=60, expansion=None):
    """Partial sums of the itinerary series at each critical point.

    The series consists of df/da along the critical orbit divided by the
    derivative of the iterates at the critical value; it converges
    geometrically once the map is expanding outside U, which the caller
    should have verified (pass the ExpansionReport to gate).
    """
    if expansion is not None and not expansion.clause_a1:
        raise ValueError("expansion check failed; series need not converge")
    sums, tails = [], []
    crit = slmap.critical_points(a_star)
    b0g = slmap.chart.b0(np.linspace(0, slmap.two_L, 4096, endpoint=False))
    K6 = float(b0g.max() / b0g.min())
    for c in crit:
        total = float(slmap.df_da(float(c), a_star))
        p = float(slmap.eval_f(float(c), a_star))
        denom = 1.0
        orbit = p
        tail = np.inf
        for k in range(1, n_terms + 1):
            fp, _ = slmap.f_derivatives(orbit, a_star)
            denom *= float(fp)
            orbit = float(slmap.eval_f(orbit, a_star))
            term = float(slmap.df_da(orbit, a_star)) / denom
            total += term
            tail = K6 / abs(denom)
            if tail < 1e-15:
                break
        sums.append(total)
        tails.append(tail)
    min_abs = min(abs(s) - t for s, t in zip(sums, tails)) if sums else 0.0
    return TransversalityReport(sums=sums, tails=tails,
                                min_abs_sum=float(min_abs),
                                ok=bool(min_abs > 0.0))


@dataclass
class MixingReport:
    Q: np.ndarray
    N: int              # smallest N with Q^N > 0 (0 if not found / n.a.)
    r: int
    ok: bool
    applicable: bool


def check_mixing(slmap, a_star, n_cap=32):
    """Transition matrix of monotonicity branches and its primitivity."""
    crit = slmap.critical_points(a_star)
    r = len(crit)
    if r == 0:
        return MixingReport(Q=np.zeros((0, 0), dtype=int), N=0, r=0,
                            ok=False, applicable=False)
    two_L = slmap.two_L
    Q = np.zeros((r, r), dtype=int)
    for i in range(r):
        lo = crit[i]
        hi = crit[(i + 1) % r] + (two_L if i + 1 == r else 0.0)
        f_lo = float(slmap.eval_f(lo, a_star))
        f_hi = float(slmap.eval_f(hi, a_star))
        I_lo, I_hi = min(f_lo, f_hi), max(f_lo, f_hi)
        for mth in range(r):
            J_lo = crit[mth]
            J_hi = crit[(mth + 1) % r] + (two_L if mth + 1 == r else 0.0)
            k_min = math.ceil((I_lo - J_lo) / two_L - 1e-12)
            k_max = math.floor((I_hi - J_hi) / two_L + 1e-12)
            if k_min <= k_max:
                Q[i, mth] = 1
    if np.all(Q > 0):
        return MixingReport(Q=Q, N=1, r=r, ok=True, applicable=True)
    P = Q.copy()
    for N in range(2, n_cap + 1):
        P = (P @ Q > 0).astype(int)
        if np.all(P > 0):
            return MixingReport(Q=Q, N=N, r=r, ok=True, applicable=True)
    return MixingReport(Q=Q, N=0, r=r, ok=False, applicable=True)


# ---------------------------------------------------------------------------
# full certification record


@dataclass
class MisiurewiczReport:
    a_star: float
    Lambda: float
    xi: float
    q0: int
    expansion: ExpansionReport
    clearance_margin: float
    clearance_iterates: int
    clearance_ok: bool
    binding: BindingReport
    transversality: TransversalityReport
    mixing: MixingReport

    @property
    def certified(self):
        return (self.expansion.ok and self.clearance_ok
                and self.binding.all_m_greater_1 and self.transversality.ok
                and self.mixing.ok and self.expansion.mixing_rate_ok)

    def to_json_dict(self):
        return {
            "a_star": self.a_star,
            "Lambda": self.Lambda,
            "xi": self.xi,
            "q0": self.q0,
            "lambda0": self.expansion.lambda0,
            "M0": self.expansion.M0,
            "d0": self.expansion.d0,
            "K4": self.expansion.K4,
            "mixing_rate_ok": self.expansion.mixing_rate_ok,
            "clearance_margin": self.clearance_margin,
            "clearance_iterates": self.clearance_iterates,
            "clearance_ok": self.clearance_ok,
            "binding_K7": self.binding.K7,
            "binding_m_greater_1": self.binding.all_m_greater_1,
            "transversality_sums": list(map(float, self.transversality.sums)),
            "mixing_N": self.mixing.N,
            "mixing_Q_all_ones": bool(np.all(self.mixing.Q > 0))
            if self.mixing.r else False,
            "certified": self.certified,
        }


def certify(slmap, a_star=None, N_target=40, horizon=40, **search_kw):
    """Search (unless a_star given) and assemble the certification record."""
    if a_star is None:
        a_star, _cfg = search_admissible_parameter(slmap, N_target=N_target,
                                                   **search_kw)
    xi = slmap.Lambda ** -0.75
    exp_rep = verify_expansion(slmap, a_star, horizon=horizon)
    margin, clear_ok = verify_clearance(slmap, a_star, n_iter=N_target)
    binding = check_binding(slmap, a_star)
    trans = check_transversality(slmap, a_star, expansion=exp_rep)
    mixing = check_mixing(slmap, a_star)
    return MisiurewiczReport(
        a_star=float(a_star), Lambda=slmap.Lambda, xi=float(xi),
        q0=len(slmap.critical_points(a_star)),
        expansion=exp_rep, clearance_margin=float(margin),
        clearance_iterates=N_target, clearance_ok=bool(clear_ok),
        binding=binding, transversality=trans, mixing=mixing,
    )
