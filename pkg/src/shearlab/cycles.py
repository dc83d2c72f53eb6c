"""Limit-cycle location and arclength parametrization.

Strategy: settle toward the attractor, place a Poincare section through the
settled point normal to the flow, and run Newton on the section return map
with the exact monodromy-based Jacobian.  The converged orbit is then
reparametrized by arclength on a uniform grid and stored as a periodic
cubic spline (C^2; node density is the accuracy dial, see the README).
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .dsl import field_values
from .dynsys import IntegratorConfig, raw_flow

__all__ = [
    "LimitCycle",
    "MonodromyResult",
    "Section",
    "EquilibriumError",
    "ConvergenceError",
    "DegenerateCycleError",
    "find_limit_cycle",
    "monodromy",
]


class EquilibriumError(RuntimeError):
    """The guess converged to a rest point instead of a cycle."""


class ConvergenceError(RuntimeError):
    pass


class DegenerateCycleError(RuntimeError):
    """Speed nearly vanishes somewhere on the orbit (b0 would blow up)."""


@dataclass(frozen=True)
class Section:
    point: np.ndarray
    normal: np.ndarray


@dataclass
class LimitCycle:
    """Arclength-parametrized periodic orbit gamma(s), s in [0, L)."""

    p0: float
    L: float
    s_nodes: np.ndarray          # (N+1,) uniform, last = L
    x_nodes: np.ndarray          # (N+1, n), last row == first row
    tangent_nodes: np.ndarray    # (N+1, n) unit tangents
    section: Section
    closure_gap: float
    _spline: object = field(default=None, repr=False)
    _dspline: object = field(default=None, repr=False)
    _d2spline: object = field(default=None, repr=False)

    def __post_init__(self):
        if self._spline is None:
            sp = CubicSpline(self.s_nodes, self.x_nodes, bc_type="periodic")
            object.__setattr__(self, "_spline", sp)
            object.__setattr__(self, "_dspline", sp.derivative())
            object.__setattr__(self, "_d2spline", sp.derivative(2))

    @property
    def dim(self):
        return self.x_nodes.shape[1]

    def gamma(self, s):
        return self._spline(np.mod(s, self.L))

    def gamma_prime(self, s):
        return self._dspline(np.mod(s, self.L))

    def gamma_second(self, s):
        return self._d2spline(np.mod(s, self.L))

    def project(self, x, hint=None, max_iter=30):
        """Arclength of the nearest cycle point (scalar x -> s in [0, L))."""
        x = np.asarray(x, dtype=float)
        if hint is None:
            d2 = np.sum((self.x_nodes[:-1] - x) ** 2, axis=1)
            s = self.s_nodes[int(np.argmin(d2))]
        else:
            s = float(hint) % self.L
        for _ in range(max_iter):
            g = self._spline(s % self.L)
            dg = self._dspline(s % self.L)
            d2g = self._d2spline(s % self.L)
            r = x - g
            h = float(np.dot(r, dg))
            hp = float(np.dot(r, d2g) - np.dot(dg, dg))
            if hp == 0.0:
                break
            step = h / hp
            s -= step
            if abs(step) < 1e-14 * self.L:
                break
        return s % self.L

    def project_many(self, xs, hints=None):
        xs = np.asarray(xs, dtype=float)
        out = np.empty(len(xs))
        hint = None
        for i, x in enumerate(xs):
            h = hints[i] if hints is not None else None
            out[i] = self.project(x, hint=h)
        return out

    def distance(self, x):
        s = self.project(x)
        return float(np.linalg.norm(np.asarray(x) - self.gamma(s)))

    def rebase(self, s_origin):
        """New cycle with the arclength origin moved to s_origin."""
        grid = np.mod(self.s_nodes[:-1] + s_origin, self.L)
        x = self._spline(grid)
        tg = self._dspline(grid)
        tg /= np.linalg.norm(tg, axis=1)[:, None]
        x_nodes = np.vstack([x, x[0]])
        t_nodes = np.vstack([tg, tg[0]])
        return LimitCycle(self.p0, self.L, self.s_nodes.copy(), x_nodes,
                          t_nodes, self.section, self.closure_gap)

    def to_files(self, prefix, multipliers=None):
        """CSV of (s, gamma, tangent) plus a JSON header, for reuse."""
        n = self.dim
        with open(prefix + ".csv", "w") as fh:
            cols = ["s"] + ["g%d" % (i + 1) for i in range(n)] + \
                   ["t%d" % (i + 1) for i in range(n)]
            fh.write(",".join(cols) + "\n")
            for j in range(len(self.s_nodes)):
                row = [self.s_nodes[j]] + list(self.x_nodes[j]) + \
                      list(self.tangent_nodes[j])
                fh.write(",".join("%.17g" % v for v in row) + "\n")
        header = {
            "p0": self.p0,
            "L": self.L,
            "dim": n,
            "closure_gap": self.closure_gap,
            "section_point": list(self.section.point),
            "section_normal": list(self.section.normal),
        }
        if multipliers is not None:
            header["multipliers_re"] = [float(np.real(m)) for m in multipliers]
            header["multipliers_im"] = [float(np.imag(m)) for m in multipliers]
        with open(prefix + ".json", "w") as fh:
            json.dump(header, fh, indent=1, sort_keys=True)

    @classmethod
    def from_files(cls, prefix):
        with open(prefix + ".json") as fh:
            header = json.load(fh)
        data = np.loadtxt(prefix + ".csv", delimiter=",", skiprows=1)
        n = header["dim"]
        return cls(
            p0=header["p0"], L=header["L"],
            s_nodes=data[:, 0], x_nodes=data[:, 1:1 + n],
            tangent_nodes=data[:, 1 + n:1 + 2 * n],
            section=Section(np.array(header["section_point"]),
                            np.array(header["section_normal"])),
            closure_gap=header["closure_gap"],
        )


@dataclass
class MonodromyResult:
    multipliers: np.ndarray  # complex, descending |.|
    trivial_index: int
    stable: bool

    @property
    def nontrivial(self):
        return np.delete(self.multipliers, self.trivial_index)


def _endpoint(prog, y0, t0, t1, config, with_tangent=False, with_arclength=False):
    traj = raw_flow(prog, None, np.asarray(y0, dtype=float), t0, t1, config,
                    with_tangent, with_arclength, record=False)
    return traj.y_end


def _find_crossing(prog, x_start, section, config, t_min, t_max, with_tangent):
    """First same-orientation section crossing after t_min; returns
    (t_cross, y_cross_aug)."""
    n = prog.dim
    p, w = section.point, section.normal
    y = np.concatenate([x_start, np.eye(n).reshape(-1)]) if with_tangent \
        else np.asarray(x_start, dtype=float)
    chunk = max(4.0 * t_min, 1.0)
    t = 0.0
    left = False
    g_prev = float(np.dot(y[:n] - p, w))
    while t < t_max:
        t_next = min(t + chunk, t_max)
        traj = raw_flow(prog, None, y, t, t_next, config, with_tangent,
                        False, record=True)
        for seg in traj.segments:
            for j in range(len(seg.ts) - 1):
                ta, tb = seg.ts[j], seg.ts[j + 1]
                ya = seg.rcont[j, 0]
                yb = kernels.dense_eval(seg.rcont[j], ta, tb - ta, tb)
                ga = float(np.dot(ya[:n] - p, w))
                gb = float(np.dot(yb[:n] - p, w))
                if not left and (abs(ga) > 1e-8 or ta > t_min):
                    left = abs(ga) > 1e-8 and ga < 0.0 or ta > t_min
                if ga < 0.0 <= gb and (left or ta > t_min):
                    # bracketed: refine on the dense interpolant
                    rc, h = seg.rcont[j], tb - ta
                    lo, hi = ta, tb
                    for _ in range(80):
                        mid = 0.5 * (lo + hi)
                        gm = float(np.dot(
                            kernels.dense_eval(rc, ta, h, mid)[:n] - p, w))
                        if gm < 0.0:
                            lo = mid
                        else:
                            hi = mid
                        if hi - lo < 1e-15 * max(1.0, abs(hi)):
                            break
                    t_star = 0.5 * (lo + hi)
                    # land exactly by re-integration, then Newton-polish time
                    y_star = _endpoint(prog, ya, ta, t_star, config, with_tangent)
                    for _ in range(4):
                        fx = field_values(prog, y_star[:n])
                        gd = float(np.dot(fx, w))
                        gv = float(np.dot(y_star[:n] - p, w))
                        if gd == 0.0 or abs(gv) < 1e-14:
                            break
                        dt = -gv / gd
                        y_star = _endpoint(prog, y_star, t_star, t_star + dt,
                                           config, with_tangent)
                        t_star += dt
                    return t_star, y_star
        y = traj.y_end
        t = t_next
    raise ConvergenceError("no section return found within t_max=%g" % t_max)


def find_limit_cycle(prog, x_guess, config=None, settle_time=60.0,
                     n_nodes=1024, tol=1e-12, max_newton=30,
                     max_return_time=400.0, anchor=None):
    """Locate the attracting periodic orbit near x_guess.

    Returns a LimitCycle whose Poincare fixed-point residual is below
    ``tol`` (default 1e-11 full-space gap).  If ``anchor`` is given, the
    arclength origin is moved to the cycle point nearest that point.
    """
    config = config or IntegratorConfig(abs_tol=1e-13, rel_tol=1e-13)
    n = prog.dim
    x = np.asarray(x_guess, dtype=float)
    f0 = field_values(prog, x)
    speed = float(np.linalg.norm(f0))
    if speed < 1e-10:
        raise EquilibriumError("f vanishes at the initial guess")

    x = _endpoint(prog, x, 0.0, settle_time, config)[:n]
    f0 = field_values(prog, x)
    speed = float(np.linalg.norm(f0))
    if speed < 1e-8:
        raise EquilibriumError("guess converged to an equilibrium (|f| -> 0)")

    w = f0 / speed
    section = Section(x.copy(), w)
    # orthonormal basis of the section
    Q, _ = np.linalg.qr(np.eye(n) - np.outer(w, w))
    cols = [Q[:, i] for i in range(n) if abs(np.dot(Q[:, i], w)) < 0.5]
    Q = np.stack([c / np.linalg.norm(c) for c in cols[: n - 1]], axis=1)

    t_min = min(1.0, 0.05 * settle_time)
    p0 = None
    for it in range(max_newton):
        t_ret, y_ret = _find_crossing(prog, x, section, config, t_min,
                                      max_return_time, with_tangent=True)
        x_ret = y_ret[:n]
        V = y_ret[n:].reshape(n, n)
        r = x_ret - x
        gap = float(np.linalg.norm(r))
        p0 = t_ret
        if gap < tol:
            break
        f_ret = field_values(prog, x_ret)
        denom = float(np.dot(f_ret, w))
        P = np.eye(n) - np.outer(f_ret, w) / denom
        J = Q.T @ (P @ V - np.eye(n)) @ Q
        delta = np.linalg.solve(J, -(Q.T @ r))
        x = x + Q @ delta
    else:
        raise ConvergenceError(
            "Poincare-Newton did not reach tol=%g in %d iterations (gap %g)"
            % (tol, max_newton, gap))

    # arclength pass around the converged orbit
    y0 = np.concatenate([x, [0.0]])
    traj = raw_flow(prog, None, y0, 0.0, p0, config, with_tangent=False,
                    with_arclength=True, record=True)
    L = float(traj.y_end[n])

    # invert arc(t) on the recorded mesh for uniform-in-s nodes
    s_targets = np.linspace(0.0, L, n_nodes + 1)[:-1]
    t_nodes = np.empty(n_nodes)
    x_nodes = np.empty((n_nodes + 1, n))
    seg = traj.segments[0]
    ts, rcont = seg.ts, seg.rcont
    arcs = np.array([rc[0][n] for rc in rcont] + [L])
    j = 0
    for i, s_t in enumerate(s_targets):
        while j < len(ts) - 2 and arcs[j + 1] < s_t:
            j += 1
        ta, tb = ts[j], ts[j + 1]
        h = tb - ta
        lo, hi = ta, tb
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            am = kernels.dense_eval(rcont[j], ta, h, mid)[n]
            if am < s_t:
                lo = mid
            else:
                hi = mid
        t_nodes[i] = 0.5 * (lo + hi)
        x_nodes[i] = kernels.dense_eval(rcont[j], ta, h, t_nodes[i])[:n]
    x_nodes[0] = x  # s = 0 is the exact fixed point
    x_nodes[-1] = x  # exact closure for the periodic spline

    tangents = np.empty((n_nodes + 1, n))
    speeds = np.empty(n_nodes + 1)
    for i in range(n_nodes + 1):
        f = field_values(prog, x_nodes[i])
        sp = float(np.linalg.norm(f))
        speeds[i] = sp
        tangents[i] = f / sp
    if speeds.min() < 1e-8 * max(1.0, speeds.max()):
        raise DegenerateCycleError("speed nearly vanishes on the cycle")

    traj_end = raw_flow(prog, None, np.asarray(x), 0.0, p0, config,
                        record=False)
    closure_gap = float(np.linalg.norm(traj_end.y_end[:n] - x))

    cycle = LimitCycle(
        p0=float(p0), L=L,
        s_nodes=np.linspace(0.0, L, n_nodes + 1),
        x_nodes=x_nodes, tangent_nodes=tangents,
        section=section, closure_gap=closure_gap,
    )
    if anchor is not None:
        cycle = cycle.rebase(cycle.project(np.asarray(anchor, dtype=float)))
    return cycle


def monodromy(prog, cycle, config=None):
    """Floquet multipliers of the cycle (eigenvalues of the period map)."""
    config = config or IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12)
    n = prog.dim
    x0 = cycle.gamma(0.0)
    y0 = np.concatenate([x0, np.eye(n).reshape(-1)])
    y = _endpoint(prog, y0, 0.0, cycle.p0, config, with_tangent=True)
    V = y[n:].reshape(n, n)
    mult = np.linalg.eigvals(V)
    order = np.argsort(-np.abs(mult))
    mult = mult[order]
    trivial = int(np.argmin(np.abs(mult - 1.0)))
    if abs(mult[trivial] - 1.0) > 1e-4:
        near_one = np.abs(mult - 1.0) < 1e-4
        if not near_one.any():
            raise ConvergenceError(
                "no multiplier near 1: monodromy inconsistent with a cycle")
    others = np.delete(mult, trivial)
    stable = bool(np.all(np.abs(others) < 1.0)) and \
        int(np.sum(np.abs(mult - 1.0) < 1e-4)) == 1
    return MonodromyResult(multipliers=mult, trivial_index=trivial, stable=stable)
