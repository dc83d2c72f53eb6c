"""Direct-simulation diagnostics on the time-T map G_T.

Lyapunov spectra via QR-reorthogonalized tangent products, attractor
classification (sink / invariant curve / chaotic / undecided), empirical
SRB-style statistics, and sweeps over the forcing period T.  Orbits are
autocorrelated, so every confidence interval here is a block bootstrap
over block means.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dynsys import IntegratorConfig, PulseSchedule, time_T_map

__all__ = [
    "LyapunovResult",
    "Classification",
    "SRBReport",
    "SweepResult",
    "lyapunov_spectrum",
    "classify_attractor",
    "srb_diagnostics",
    "sweep_T",
]


@dataclass
class LyapunovResult:
    exponents: np.ndarray     # per application of G_T, descending
    iterates: int
    ci_halfwidth: float       # top exponent, block bootstrap
    sum_rule_gap: float       # |sum(exponents) - mean log|det DG_T|| (rel.)
    log_increments: np.ndarray = field(repr=False, default=None)  # (m, n)


def _block_bootstrap_ci(increments, n_blocks=100, n_resample=200, seed=0):
    """Half-width of the 95% bootstrap CI of the mean, over block means."""
    m = len(increments)
    if m < 2 * n_blocks:
        n_blocks = max(2, m // 2)
    blocks = np.array_split(increments, n_blocks)
    means = np.array([b.mean() for b in blocks])
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(means), size=(n_resample, len(means)))
    resampled = means[idx].mean(axis=1)
    lo, hi = np.percentile(resampled, [2.5, 97.5])
    return float(0.5 * (hi - lo))


def _qr_run(prog, schedule, x0, iterates, burn_in, config, keep_orbit=False):
    n = prog.dim
    x = np.asarray(x0, dtype=float)
    Q = np.eye(n)
    logs = np.empty((iterates, n))
    orbit = np.empty((iterates, n)) if keep_orbit else None
    # burn-in also aligns the QR frame with the Oseledets splitting; the
    # discarded increments carry the alignment transient, which is O(1)
    # total and would otherwise bias every exponent by O(1/iterates)
    for k in range(burn_in + iterates):
        x, V = time_T_map(prog, schedule, x, config)
        Q, R = np.linalg.qr(V @ Q)
        diag = np.diag(R)
        sign = np.sign(diag)
        sign[sign == 0.0] = 1.0
        Q = Q * sign
        if k >= burn_in:
            logs[k - burn_in] = np.log(np.abs(diag))
            if keep_orbit:
                orbit[k - burn_in] = x
    return x, logs, orbit


def lyapunov_spectrum(prog, schedule, x0, iterates=400, burn_in=50,
                      config=None, seed=0):
    """Lyapunov exponents per application of G_T (divide by T for rates).

    The QR sum rule ties the spectrum to the volume contraction: the sum of
    exponents equals the orbit average of log|det DG_T| identically up to
    roundoff, which is reported as sum_rule_gap.
    """
    config = config or IntegratorConfig(abs_tol=1e-9, rel_tol=1e-9)
    _, logs, _ = _qr_run(prog, schedule, x0, iterates, burn_in, config)
    exps = logs.mean(axis=0)
    order = np.argsort(-exps)
    exps = exps[order]
    logs = logs[:, order]
    ci = _block_bootstrap_ci(logs[:, 0], seed=seed)
    sum_exp = float(exps.sum())
    mean_logdet = float(logs.sum(axis=1).mean())
    gap = abs(sum_exp - mean_logdet) / max(abs(mean_logdet), 1e-12)
    return LyapunovResult(exponents=exps, iterates=iterates,
                          ci_halfwidth=ci, sum_rule_gap=gap,
                          log_increments=logs)


@dataclass
class Classification:
    kind: str                 # sink | invariant_curve | chaotic | undecided
    top_exponent: float
    ci_halfwidth: float
    exponents: np.ndarray
    sink_period: int = 0
    sink_multiplier: float = None
    transient_length: int = 0
    s_coverage: float = None


def _detect_sink(orbit, max_period=32, tol=1e-8):
    """(period, transient_length) of a low-period tail, or (0, 0)."""
    m = len(orbit)
    tail = orbit[-max(2 * max_period, 80):]
    for p in range(1, max_period + 1):
        if len(tail) <= p:
            break
        if np.max(np.linalg.norm(tail[p:] - tail[:-p], axis=1)) < tol:
            # smallest p for the tail; find when the orbit locked on
            lock = m
            for k in range(m - p - 1, -1, -1):
                if np.linalg.norm(orbit[k + p] - orbit[k]) < tol:
                    lock = k
                else:
                    break
            return p, lock
    return 0, 0


def classify_attractor(prog, schedule, config=None, x0=None, cycle=None,
                       iterates=400, burn_in=60, seed=0, coverage_bins=64):
    """Classify the attractor of G_T from one orbit.

    sink: locks onto a low-period orbit with contracting multipliers;
    chaotic: top-exponent CI excludes zero from above; invariant_curve:
    top exponent indistinguishable from zero and the s-marginal fills the
    circle; undecided otherwise (a first-class outcome: boundary T values
    do not classify cleanly).
    """
    config = config or IntegratorConfig(abs_tol=1e-9, rel_tol=1e-9)
    if x0 is None:
        if cycle is not None:
            x0 = cycle.gamma(0.0)
        else:
            raise ValueError("need x0 or cycle for the initial condition")
    x_end, logs, orbit = _qr_run(prog, schedule, x0, iterates, burn_in,
                                 config, keep_orbit=True)
    exps = np.sort(logs.mean(axis=0))[::-1]
    top = float(exps[0])
    ci = _block_bootstrap_ci(logs[:, np.argmax(logs.mean(axis=0))], seed=seed)

    period, lock = _detect_sink(orbit)
    if period:
        x = orbit[-1]
        V = np.eye(prog.dim)
        for _ in range(period):
            x, Vk = time_T_map(prog, schedule, x, config)
            V = Vk @ V
        mult = float(np.max(np.abs(np.linalg.eigvals(V))))
        if mult < 1.0:
            return Classification(
                kind="sink", top_exponent=math.log(mult) / period,
                ci_halfwidth=ci, exponents=exps, sink_period=period,
                sink_multiplier=mult, transient_length=lock)

    coverage = None
    if cycle is not None:
        s_vals = cycle.project_many(orbit)
        hist, _ = np.histogram(s_vals, bins=coverage_bins, range=(0.0, cycle.L))
        coverage = float(np.count_nonzero(hist)) / coverage_bins

    if top - ci > 0.0:
        return Classification(kind="chaotic", top_exponent=top,
                              ci_halfwidth=ci, exponents=exps,
                              s_coverage=coverage)
    near_zero = abs(top) <= max(2.0 * ci, 0.02)
    if near_zero and (coverage is None or coverage > 0.85):
        return Classification(kind="invariant_curve", top_exponent=top,
                              ci_halfwidth=ci, exponents=exps,
                              s_coverage=coverage)
    if top + ci < 0.0:
        # contracting but not periodic within the horizon
        return Classification(kind="undecided", top_exponent=top,
                              ci_halfwidth=ci, exponents=exps,
                              s_coverage=coverage)
    return Classification(kind="undecided", top_exponent=top,
                          ci_halfwidth=ci, exponents=exps,
                          s_coverage=coverage)


@dataclass
class SRBReport:
    averages: np.ndarray      # (n_init, n_obs) time averages
    ci: np.ndarray            # (n_init, n_obs) bootstrap half-widths
    agree: bool               # pairwise within 3x combined CI
    histogram: np.ndarray     # s-marginal mass per bin
    bin_edges: np.ndarray
    acf: np.ndarray           # autocorrelation of the first observable
    acf_rate: float           # fitted geometric decay rate
    iterates: int

    def histogram_csv(self, path):
        with open(path, "w") as fh:
            fh.write("bin_lo,bin_hi,mass\n")
            for i, m in enumerate(self.histogram):
                fh.write("%.17g,%.17g,%.17g\n"
                         % (self.bin_edges[i], self.bin_edges[i + 1], m))


def srb_diagnostics(prog, schedule, cycle, observables=None, n_init=2,
                    iterates=100000, burn_in=200, bins=64, acf_lags=50,
                    config=None, seed=0):
    """Basin test: time averages from independent starts must agree.

    Collects the s-marginal histogram and the autocorrelation of the first
    observable (geometric fit); disagreement beyond 3x the combined CI is
    reported as failure (finitely many ergodic components remain possible).
    """
    config = config or IntegratorConfig(abs_tol=1e-9, rel_tol=1e-9)
    if observables is None:
        observables = [lambda s: np.cos(np.pi * s / cycle.L)]
    rng = np.random.default_rng(seed)
    L = cycle.L
    n_obs = len(observables)
    averages = np.empty((n_init, n_obs))
    cis = np.empty((n_init, n_obs))
    hist_total = np.zeros(bins)
    acf = None
    for i in range(n_init):
        s0 = rng.uniform(0.0, L)
        y0 = rng.uniform(-0.02, 0.02)
        g = cycle.gamma(s0)
        nvec = _unit_normal(cycle, s0)
        x = g + y0 * nvec
        for _ in range(burn_in):
            x, _ = time_T_map_no_tangent(prog, schedule, x, config)
        s_vals = np.empty(iterates)
        s_prev = cycle.project(x)
        for k in range(iterates):
            x = time_T_map_no_tangent(prog, schedule, x, config)[0]
            s_prev = cycle.project(x, hint=None if k % 64 == 0 else s_prev)
            s_vals[k] = s_prev
        for j, obs in enumerate(observables):
            vals = obs(s_vals)
            averages[i, j] = vals.mean()
            cis[i, j] = _block_bootstrap_ci(vals, seed=seed + 7 * i + j)
        h, edges = np.histogram(s_vals, bins=bins, range=(0.0, L))
        hist_total += h
        if i == 0:
            v = observables[0](s_vals)
            v = v - v.mean()
            denom = float(np.dot(v, v))
            acf = np.array([np.dot(v[: len(v) - k], v[k:]) / denom
                            for k in range(acf_lags + 1)])
    agree = True
    for i in range(n_init):
        for j in range(i + 1, n_init):
            comb = np.hypot(cis[i], cis[j])
            if np.any(np.abs(averages[i] - averages[j]) > 3.0 * comb):
                agree = False
    # geometric fit |acf(k)| ~ tau^k over the early reliable lags
    small = np.nonzero(np.abs(acf[1:]) < 0.02)[0]
    kmax = max(3, min(acf_lags, int(small[0]) + 1 if len(small) else acf_lags))
    with np.errstate(divide="ignore"):
        lk = np.log(np.abs(acf[1: kmax + 1]) + 1e-300)
    ks = np.arange(1, kmax + 1)
    rate = float(np.exp(np.polyfit(ks, lk, 1)[0]))
    edges = np.linspace(0.0, L, bins + 1)
    return SRBReport(averages=averages, ci=cis, agree=agree,
                     histogram=hist_total / hist_total.sum(),
                     bin_edges=edges, acf=acf, acf_rate=rate,
                     iterates=iterates)


def _unit_normal(cycle, s):
    t = cycle.gamma_prime(s)
    t = t / np.linalg.norm(t)
    n = len(t)
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        v -= t * float(np.dot(t, v))
        nv = float(np.linalg.norm(v))
        if nv > 0.3:
            return v / nv
    raise RuntimeError("degenerate tangent")


def time_T_map_no_tangent(prog, schedule, x, config):
    """G_T without the variational ride-along (cheaper for statistics)."""
    from . import kernels
    from .dynsys import _raise_for_status

    status, y, t_end, h, _, _, _, _ = kernels.integrate_segment(
        prog.tape, schedule.epsilon, np.asarray(x, dtype=float), 0.0,
        schedule.rho, config.rel_tol, config.abs_tol, config.max_step, 0.0,
        False, False, False, config.max_steps)
    _raise_for_status(status, t_end, y, prog.dim)
    status, y, t_end, h, _, _, _, _ = kernels.integrate_segment(
        prog.tape, 0.0, y, schedule.rho, schedule.T, config.rel_tol,
        config.abs_tol, config.max_step, h, False, False, False,
        config.max_steps)
    _raise_for_status(status, t_end, y, prog.dim)
    return y, None


@dataclass
class SweepResult:
    T_values: np.ndarray
    kinds: list
    top_exponents: np.ndarray
    ci_halfwidths: np.ndarray
    sink_periods: np.ndarray
    transient_lengths: np.ndarray

    def chaotic_fraction(self, T_lo, T_hi):
        m = (self.T_values >= T_lo) & (self.T_values < T_hi)
        if not m.any():
            return 0.0
        return float(np.mean([k == "chaotic"
                              for k, sel in zip(self.kinds, m) if sel]))

    def window_fractions(self, width=1.0):
        lo = math.floor(self.T_values.min())
        hi = math.ceil(self.T_values.max())
        out = []
        w = lo
        while w < hi:
            out.append((w, self.chaotic_fraction(w, w + width)))
            w += width
        return out

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("T,class,top_exponent,ci_halfwidth,sink_period,"
                     "transient_length\n")
            for i, T in enumerate(self.T_values):
                fh.write("%.17g,%s,%.17g,%.17g,%d,%d\n" % (
                    T, self.kinds[i], self.top_exponents[i],
                    self.ci_halfwidths[i], self.sink_periods[i],
                    self.transient_lengths[i]))


def sweep_T(prog, schedule_template, T_values, cycle=None, config=None,
            iterates=300, burn_in=50, seed=0, threads=1):
    """Classify G_T over a grid of periods (embarrassingly parallel)."""
    T_values = np.asarray(T_values, dtype=float)
    rng = np.random.default_rng(seed)
    x0s = []
    for T in T_values:
        if cycle is not None:
            s0 = rng.uniform(0.0, cycle.L)
            x0s.append(cycle.gamma(s0))
        else:
            x0s.append(None)

    def one(i):
        sched = PulseSchedule(rho=schedule_template.rho, T=float(T_values[i]),
                              epsilon=schedule_template.epsilon)
        return classify_attractor(prog, sched, config=config, x0=x0s[i],
                                  cycle=cycle, iterates=iterates,
                                  burn_in=burn_in, seed=seed + i)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(one, range(len(T_values))))
    else:
        results = [one(i) for i in range(len(T_values))]

    return SweepResult(
        T_values=T_values,
        kinds=[r.kind for r in results],
        top_exponents=np.array([r.top_exponent for r in results]),
        ci_halfwidths=np.array([r.ci_halfwidth for r in results]),
        sink_periods=np.array([r.sink_period for r in results], dtype=int),
        transient_lengths=np.array([r.transient_length for r in results],
                                   dtype=int),
    )
