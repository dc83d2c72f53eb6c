"""The singular-limit family f_a on the doubled circle [0, 2L).

f_a(s) is defined implicitly by

    t_hat(a) + rho = int_s^{f_a(s)} b0(tau) dtau + Lambda * Psi(s)

with b0 > 0, so the integral is strictly increasing in the unknown and the
solve is a safeguarded Newton on the cumulative-time chart B.  All circle
values are carried as real lifts; reduction mod 2L happens only on output.

Lambda is an explicit knob here.  When a map is built from flow data the
flow-matched value is eps*sigma/(2L|lambda1|) (see
NormalFormData.hyperbolicity_flow); the constructed family itself never
cares where Lambda came from.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dynsys import IntegratorConfig, raw_flow
from .normal_form import _periodic_spline, _spectral_antiderivative, _spectral_derivative

__all__ = [
    "SingularLimitMap",
    "CriticalCurve",
    "ProjectionAmbiguityError",
    "advance_critical_curve",
    "empirical_singular_limit",
    "circle_dist",
]


class ProjectionAmbiguityError(RuntimeError):
    """Endpoint too far from the cycle to assign an arclength."""


def circle_dist(a, b, period):
    d = np.abs(np.asarray(a) - np.asarray(b)) % period
    return np.minimum(d, period - d)


def _scan_circle_roots(fn, period, n_scan, xtol=1e-13):
    """All roots of a periodic function on [0, period), by bracketed scan.

    The wrap interval is bracketed in extended coordinates past the period
    so boundary roots (where the sampled value may sit at -0.0) resolve.
    """
    g = np.linspace(0.0, period, n_scan, endpoint=False)
    h = np.asarray(fn(g), dtype=float)
    roots = [float(g[i]) for i in np.nonzero(h == 0.0)[0]]
    sign = h < 0.0
    flips = np.nonzero((sign[1:] != sign[:-1]) & (h[1:] != 0.0)
                       & (h[:-1] != 0.0))[0]
    f1 = lambda s: float(np.asarray(fn(np.asarray([s], dtype=float)))[0])
    for i in flips:
        roots.append(brentq(f1, g[i], g[i + 1], xtol=xtol))
    if h[-1] != 0.0 and h[0] != 0.0 and (h[-1] < 0.0) != (h[0] < 0.0):
        roots.append(brentq(f1, g[-1], period + g[1], xtol=xtol) % period)
    roots = sorted(r % period for r in roots)
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > 1e-10 * period:
            merged.append(r)
    if len(merged) > 1 and merged[0] + period - merged[-1] < 1e-10 * period:
        merged.pop()
    return merged


@dataclass
class _TimeChart:
    """Cumulative time B(s) = int_0^s b0 with a vectorized monotone inverse."""

    two_L: float
    b0_mean: float
    _b0_sp: object
    _b0p_sp: object
    _B_per: object

    @classmethod
    def from_samples(cls, s_grid, b0_samples, two_L):
        mean, per = _spectral_antiderivative(b0_samples, two_L)
        b0p = _spectral_derivative(b0_samples, two_L)
        return cls(two_L, mean,
                   _periodic_spline(s_grid, b0_samples, two_L),
                   _periodic_spline(s_grid, b0p, two_L),
                   _periodic_spline(s_grid, per, two_L))

    def b0(self, s):
        return self._b0_sp(np.mod(s, self.two_L))

    def b0p(self, s):
        return self._b0p_sp(np.mod(s, self.two_L))

    def B(self, s):
        s = np.asarray(s, dtype=float)
        return self.b0_mean * s + self._B_per(np.mod(s, self.two_L))

    def B_inverse(self, tau):
        tau = np.asarray(tau, dtype=float)
        tper = self.b0_mean * self.two_L
        wraps = np.floor(tau / tper)
        tred = tau - wraps * tper
        s = tred / self.b0_mean
        for _ in range(80):
            r = self.b0_mean * s + self._B_per(np.mod(s, self.two_L)) - tred
            ds = r / self._b0_sp(np.mod(s, self.two_L))
            s = s - ds
            if np.max(np.abs(ds)) < 1e-15 * self.two_L:
                break
        return s + wraps * self.two_L


@dataclass
class SingularLimitMap:
    """Family f_a with derivative evaluators and critical-point machinery."""

    two_L: float
    rho: float
    Lambda: float
    chart: _TimeChart
    Psi: object
    dPsi: object
    d2Psi: object
    meta: dict = field(default_factory=dict)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_normal_form(cls, nf, ph, Lambda, meta=None):
        chart = _TimeChart(ph.two_L, ph.b0_mean, ph._b0_sp, ph._b0p_sp, ph._B_per)
        return cls(ph.two_L, ph.rho, float(Lambda), chart,
                   ph.phi, ph.dphi, ph.d2phi, meta or {})

    @classmethod
    def from_callables(cls, b0, Psi, dPsi, d2Psi, two_L, rho, Lambda,
                       n_grid=4096, meta=None):
        s = np.linspace(0.0, two_L, n_grid, endpoint=False)
        b0v = np.broadcast_to(np.asarray(b0(s), dtype=float), s.shape).copy() \
            if callable(b0) else np.full(n_grid, float(b0))
        chart = _TimeChart.from_samples(s, b0v, two_L)
        return cls(two_L, rho, float(Lambda), chart, Psi, dPsi, d2Psi, meta or {})

    # -- basic evaluators (all accept scalars or arrays, return lifts) ----
    def t_hat(self, a):
        """Time to traverse arclength a along the cycle (strictly increasing)."""
        return self.chart.B(a)

    def eval_f(self, s, a):
        # reduce to the base period so the lift bookkeeping is exact:
        # degree one, f(s + 2L) = f(s) + 2L, holds by construction
        s = np.asarray(s, dtype=float)
        wraps = np.floor(s / self.two_L)
        s_red = s - wraps * self.two_L
        target = self.chart.B(s_red) + self.t_hat(a) + self.rho \
            - self.Lambda * self.Psi(s_red)
        return self.chart.B_inverse(target) + wraps * self.two_L

    def residual(self, s, fs, a):
        """Defining residual int_s^{fs} b0 + Lambda Psi(s) - (t_hat(a)+rho)."""
        return (self.chart.B(fs) - self.chart.B(s)
                + self.Lambda * self.Psi(s) - self.t_hat(a) - self.rho)

    def f_derivatives(self, s, a, fs=None):
        """(f', f'') from the closed-form differentiated relations."""
        if fs is None:
            fs = self.eval_f(s, a)
        b0s = self.chart.b0(s)
        b0f = self.chart.b0(fs)
        fp = (b0s - self.Lambda * self.dPsi(s)) / b0f
        fpp = (self.chart.b0p(s) - self.Lambda * self.d2Psi(s)
               - self.chart.b0p(fs) * fp * fp) / b0f
        return fp, fpp

    def df_da(self, s, a, fs=None):
        if fs is None:
            fs = self.eval_f(s, a)
        return self.chart.b0(a) / self.chart.b0(fs)

    # -- critical set ------------------------------------------------------
    def critical_points(self, a=0.0, n_scan=262144):
        """Roots of b0(s) - Lambda Psi'(s) on [0, 2L); independent of a."""
        fn = lambda s: self.chart.b0(np.mod(s, self.two_L)) \
            - self.Lambda * self.dPsi(s)
        return _scan_circle_roots(fn, self.two_L, n_scan)

    def q0(self, a=0.0):
        return len(self.critical_points(a))

    def psi_critical_points(self, n_scan=262144):
        """Critical points of Psi itself (the Lambda -> infinity skeleton)."""
        return _scan_circle_roots(self.dPsi, self.two_L, n_scan)

    def monotonicity_intervals(self, a=0.0):
        """Intervals between consecutive critical points (circular)."""
        c = self.critical_points(a)
        if not c:
            return []
        out = []
        for i in range(len(c)):
            lo = c[i]
            hi = c[(i + 1) % len(c)] + (self.two_L if i + 1 == len(c) else 0.0)
            out.append((lo, hi))
        return out

    def fitted_constants(self, a=0.0, n_scan=100000):
        """Measured fold-geometry constants at this Lambda.

        K4 = min |f''| / Lambda over the xi-neighborhood of the critical
        set, K5 = min |f'| / Lambda^(1/4) off its xi/2-neighborhood,
        K6 = max b0 / min b0 (the df/da bound); None values when the map
        has no critical points.
        """
        g = np.linspace(0.0, self.two_L, n_scan, endpoint=False)
        b0g = self.chart.b0(g)
        K6 = float(b0g.max() / b0g.min())
        crit = self.critical_points(a)
        if not crit:
            return {"q0": 0, "K4": None, "K5": None, "K6": K6}
        xi = self.Lambda ** -0.75
        u = np.concatenate([np.linspace(c - xi, c + xi, 101) for c in crit])
        _, fpp = self.f_derivatives(u, a)
        K4 = float(np.min(np.abs(fpp))) / self.Lambda
        d = np.min(np.abs((g[:, None] - np.asarray(crit)[None, :]
                           + self.two_L / 2) % self.two_L - self.two_L / 2),
                   axis=1)
        fp, _ = self.f_derivatives(g[d > 0.5 * xi], a)
        K5 = float(np.min(np.abs(fp))) / self.Lambda ** 0.25
        return {"q0": len(crit), "K4": K4, "K5": K5, "K6": K6}

    def export_csv(self, path, a, n=1000):
        s = np.linspace(0.0, self.two_L, n, endpoint=False)
        fs = self.eval_f(s, a)
        fp, fpp = self.f_derivatives(s, a, fs)
        with open(path, "w") as fh:
            fh.write("s,f,fprime,fsecond\n")
            for row in zip(s, fs, fp, fpp):
                fh.write(",".join("%.17g" % v for v in row) + "\n")


@dataclass
class CriticalCurve:
    """Parameter-indexed orbit of one critical branch with a-derivatives.

    iterates[i, j] is the lift of f_a^i(v_k(a)) at a = a_values[j]; row 0 is
    the critical point itself.  derivs[i] is d/da of that row, built from
    the forward recursion D_{i+1} = f'(gamma_i) D_i + df/da(gamma_i).
    """

    map: SingularLimitMap
    k: int
    a_values: np.ndarray
    iterates: np.ndarray
    derivs: np.ndarray

    @classmethod
    def start(cls, slmap, k, a_values):
        a_values = np.atleast_1d(np.asarray(a_values, dtype=float))
        crit = slmap.critical_points()
        if not crit or k >= len(crit):
            raise ValueError("branch index %d out of range (q0=%d)"
                             % (k, len(crit)))
        v = np.full(len(a_values), crit[k])
        dv = np.zeros(len(a_values))  # critical set does not move with a
        return cls(slmap, k, a_values,
                   iterates=v[None, :].copy(), derivs=dv[None, :].copy())

    @property
    def depth(self):
        return self.iterates.shape[0] - 1


def advance_critical_curve(curve, depth):
    """Extend a critical curve to the requested iterate depth."""
    m = curve.map
    while curve.depth < depth:
        g = curve.iterates[-1]
        D = curve.derivs[-1]
        fs = m.eval_f(g, curve.a_values)
        fp, _ = m.f_derivatives(g, curve.a_values, fs)
        dfa = m.df_da(g, curve.a_values, fs)
        curve.iterates = np.vstack([curve.iterates, fs])
        curve.derivs = np.vstack([curve.derivs, fp * D + dfa])
    return curve


def cycle_time_chart(prog, cycle, n_grid=2048):
    """Time chart of the bare cycle (b0 = 1/speed) on [0, 2L)."""
    from .dsl import field_values

    two_L = 2.0 * cycle.L
    s = np.linspace(0.0, two_L, n_grid, endpoint=False)
    b0 = np.empty(n_grid)
    for j, sj in enumerate(s):
        b0[j] = 1.0 / float(np.linalg.norm(field_values(prog, cycle.gamma(sj))))
    b0 *= (cycle.p0 / cycle.L) / b0.mean()  # exact identity int_0^L b0 = p0
    return _TimeChart.from_samples(s, b0, two_L)


def empirical_singular_limit(prog, schedule, cycle, a, m, n_grid=96,
                             config=None, tube_radius=0.35, chart=None):
    """s-component of G_{a, 1/m} extracted from the true forced flow.

    For each grid point s0 the forced system runs for
    T = rho + 2 p0 m + t_hat(a) from gamma(s0); the endpoint is projected to
    the nearest cycle arclength and lifted to the doubled circle using the
    accumulated path length (whose parity fixes the branch).

    Returns (s0_grid, s_image mod 2L, T).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    config = config or IntegratorConfig(abs_tol=1e-11, rel_tol=1e-11)
    chart = chart or cycle_time_chart(prog, cycle)
    two_L = 2.0 * cycle.L
    L = cycle.L
    t_hat_a = float(chart.B(a % two_L))
    T = schedule.rho + 2.0 * cycle.p0 * m + t_hat_a
    from .dynsys import PulseSchedule

    sched = PulseSchedule(rho=schedule.rho, T=T, epsilon=schedule.epsilon)

    s0_grid = np.linspace(0.0, two_L, n_grid, endpoint=False)
    out = np.empty(n_grid)
    for j, s0 in enumerate(s0_grid):
        x0 = cycle.gamma(s0)
        y0 = np.concatenate([x0, [0.0]])
        traj = raw_flow(prog, sched, y0, 0.0, T, config,
                        with_tangent=False, with_arclength=True, record=False)
        x = traj.y_end[: cycle.dim]
        ell = float(traj.y_end[cycle.dim])
        s_proj = cycle.project(x, hint=(s0 + ell) % L)
        dist = float(np.linalg.norm(x - cycle.gamma(s_proj)))
        if dist > tube_radius:
            raise ProjectionAmbiguityError(
                "endpoint %.3g from cycle exceeds %.3g at s0=%.4g"
                % (dist, tube_radius, s0))
        wraps = int(round((s0 + ell - s_proj) / L))
        out[j] = (s_proj + (wraps % 2) * L) % two_L
    return s0_grid, out, T
