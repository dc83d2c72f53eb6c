"""Forced/unforced flow maps: pulse schedule, integration, kick/relax/time-T.

The pulse makes the right side discontinuous at t = kT and t = kT + rho, so
every integration is split into smooth segments that stop exactly at the
switch times; the RK pair then keeps its full order on each segment.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dsl import FieldDomainError

__all__ = [
    "PulseSchedule",
    "IntegratorConfig",
    "FlowSample",
    "Trajectory",
    "IntegrationError",
    "StepUnderflowError",
    "NonFiniteStateError",
    "TubeExitError",
    "integrate",
    "kick_map",
    "relaxation_map",
    "time_T_map",
]


class IntegrationError(RuntimeError):
    pass


class StepUnderflowError(IntegrationError):
    pass


class NonFiniteStateError(IntegrationError):
    pass


class TubeExitError(IntegrationError):
    """State left the tubular neighborhood where the analysis is valid."""


@dataclass(frozen=True)
class PulseSchedule:
    """Square pulse train: on during [kT, kT + rho], off otherwise."""

    rho: float
    T: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.rho < self.T:
            raise ValueError("need 0 < rho < T")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")

    def evaluate(self, t):
        phase = math.fmod(t, self.T)
        if phase < 0.0:
            phase += self.T
        return 1.0 if phase <= self.rho else 0.0

    def switch_times(self, t0, t1):
        """Discontinuity times strictly inside (t0, t1), ascending."""
        if t1 < t0:
            t0, t1 = t1, t0
        out = []
        k = math.floor(t0 / self.T)
        t = k * self.T
        while t < t1 + self.T:
            for cand in (t, t + self.rho):
                if t0 < cand < t1:
                    out.append(cand)
            t += self.T
        return out


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_step: float = 1.0
    max_steps: int = 5_000_000

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")


@dataclass
class FlowSample:
    t: float
    x: np.ndarray
    tangent: np.ndarray = None


@dataclass
class _Segment:
    ts: np.ndarray
    rcont: np.ndarray  # (nsteps, 5, dim)


@dataclass
class Trajectory:
    """Dense-output trajectory over possibly many smooth segments."""

    dim: int
    with_tangent: bool
    with_arclength: bool
    segments: list = field(default_factory=list)
    t0: float = 0.0
    t1: float = 0.0
    y_end: np.ndarray = None

    @property
    def n(self):
        return self.dim

    def samples(self):
        """FlowSamples at every accepted step (segment boundaries included)."""
        out = []
        n = self.dim
        for seg in self.segments:
            for j in range(len(seg.ts) - 1):
                y = seg.rcont[j, 0]
                out.append(self._sample(seg.ts[j], y))
        out.append(self._sample(self.t1, self.y_end))
        return out

    def _sample(self, t, y):
        n = self.dim
        tangent = None
        if self.with_tangent:
            base = n + (1 if self.with_arclength else 0)
            tangent = np.array(y[base:]).reshape(n, n)
        return FlowSample(float(t), np.array(y[:n]), tangent)

    def state(self, t):
        """Full augmented state at time t via the dense interpolant."""
        forward = self.t1 >= self.t0
        if forward and not (self.t0 - 1e-12 <= t <= self.t1 + 1e-12):
            raise ValueError("t outside trajectory range")
        if not forward and not (self.t1 - 1e-12 <= t <= self.t0 + 1e-12):
            raise ValueError("t outside trajectory range")
        for seg in self.segments:
            ts = seg.ts
            lo, hi = (ts[0], ts[-1]) if forward else (ts[-1], ts[0])
            if lo - 1e-12 <= t <= hi + 1e-12:
                j = int(np.searchsorted(ts, t) - 1) if forward else int(
                    len(ts) - 1 - np.searchsorted(ts[::-1], t))
                j = min(max(j, 0), len(ts) - 2)
                h = ts[j + 1] - ts[j]
                return kernels.dense_eval(seg.rcont[j], ts[j], h, t)
        raise ValueError("t not covered by any segment")

    def position(self, t):
        return self.state(t)[: self.dim]

    def arclength(self, t):
        if not self.with_arclength:
            raise ValueError("trajectory recorded without arclength")
        return float(self.state(t)[self.dim])

    def end_state(self):
        n = self.dim
        x = np.array(self.y_end[:n])
        tangent = None
        if self.with_tangent:
            base = n + (1 if self.with_arclength else 0)
            tangent = np.array(self.y_end[base:]).reshape(n, n)
        return x, tangent

    def to_csv(self, path):
        rows = self.samples()
        with open(path, "w") as fh:
            fh.write("t," + ",".join("x%d" % (i + 1) for i in range(self.dim)) + "\n")
            for s in rows:
                fh.write("%.17g," % s.t + ",".join("%.17g" % v for v in s.x) + "\n")


def _raise_for_status(status, t, y, n):
    if status == kernels.STATUS_OK:
        return
    x = np.asarray(y)[:n]
    if status == kernels.STATUS_DOMAIN:
        raise FieldDomainError(
            "field evaluation left its domain near t=%.6g, x=%s" % (t, x))
    if status == kernels.STATUS_UNDERFLOW:
        raise StepUnderflowError("step size underflow at t=%.6g" % t)
    if status == kernels.STATUS_NONFINITE:
        raise NonFiniteStateError("state became non-finite at t=%.6g" % t)
    if status == kernels.STATUS_MAXSTEPS:
        raise IntegrationError("step budget exhausted at t=%.6g" % t)
    raise IntegrationError("integration failed (status %d) at t=%.6g" % (status, t))


def _segment_plan(schedule, t0, t1):
    """Yield (a, b, eps_eff) smooth pieces covering [t0, t1] in order."""
    if schedule is None or schedule.epsilon == 0.0:
        yield (t0, t1, 0.0)
        return
    cuts = [t0] + schedule.switch_times(t0, t1) + [t1]
    if t1 < t0:
        cuts = [t0] + sorted(schedule.switch_times(t1, t0), reverse=True) + [t1]
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        eps = schedule.epsilon * schedule.evaluate(mid)
        yield (a, b, eps)


def raw_flow(prog, schedule, y0, t0, t1, config, with_tangent=False,
             with_arclength=False, record=False):
    """Low-level multi-segment integration of the augmented system."""
    traj = Trajectory(prog.dim, with_tangent, with_arclength, [], t0, t1)
    y = np.asarray(y0, dtype=float).copy()
    h = 0.0
    for a, b, eps in _segment_plan(schedule, t0, t1):
        status, y, t_end, h, nsteps, ts, ys, rcont = kernels.integrate_segment(
            prog.tape, eps, y, a, b, config.rel_tol, config.abs_tol,
            config.max_step, h, with_tangent, with_arclength, record,
            config.max_steps)
        _raise_for_status(status, t_end, y, prog.dim)
        if record:
            traj.segments.append(_Segment(ts, rcont))
    traj.y_end = y
    return traj


def _augment(prog, x0, with_tangent, with_arclength):
    n = prog.dim
    parts = [np.asarray(x0, dtype=float)]
    if with_arclength:
        parts.append([0.0])
    if with_tangent:
        parts.append(np.eye(n).reshape(-1))
    return np.concatenate(parts)


def integrate(prog, schedule, x0, t0, t1, config=None, with_tangent=False,
              with_arclength=False, record=True):
    """Trajectory of the (possibly forced) system on [t0, t1].

    Steps never straddle the forcing discontinuities: the integrator stops
    at each switch time and restarts, so each smooth piece is solved at full
    order.  With ``with_tangent`` the fundamental solution V of
    dV/dt = Dg(x(t)) V, V(t0) = I rides along.
    """
    config = config or IntegratorConfig()
    y0 = _augment(prog, x0, with_tangent, with_arclength)
    return raw_flow(prog, schedule, y0, t0, t1, config, with_tangent,
                    with_arclength, record)


def _check_tube(x, cycle, tube_radius):
    if cycle is None or tube_radius is None:
        return
    d = cycle.distance(x)
    if d > tube_radius:
        raise TubeExitError(
            "state at distance %.3g from the cycle exceeds tube radius %.3g"
            % (d, tube_radius))


def kick_map(prog, schedule, x0, config=None, cycle=None, tube_radius=None):
    """Time-rho map with the forcing held on; returns (x, tangent)."""
    config = config or IntegratorConfig()
    n = prog.dim
    y0 = _augment(prog, x0, True, False)
    status, y, t_end, h, _, _, _, _ = kernels.integrate_segment(
        prog.tape, schedule.epsilon, y0, 0.0, schedule.rho, config.rel_tol,
        config.abs_tol, config.max_step, 0.0, True, False, False,
        config.max_steps)
    _raise_for_status(status, t_end, y, n)
    x = y[:n].copy()
    V = y[n:].reshape(n, n).copy()
    _check_tube(x, cycle, tube_radius)
    return x, V


def relaxation_map(prog, duration, x0, config=None):
    """Unforced flow for the given duration; returns (x, tangent)."""
    if duration < 0:
        raise ValueError("duration must be >= 0")
    config = config or IntegratorConfig()
    n = prog.dim
    y0 = _augment(prog, x0, True, False)
    if duration == 0.0:
        return np.asarray(x0, dtype=float).copy(), np.eye(n)
    status, y, t_end, h, _, _, _, _ = kernels.integrate_segment(
        prog.tape, 0.0, y0, 0.0, duration, config.rel_tol, config.abs_tol,
        config.max_step, 0.0, True, False, False, config.max_steps)
    _raise_for_status(status, t_end, y, n)
    return y[:n].copy(), y[n:].reshape(n, n).copy()


def time_T_map(prog, schedule, x0, config=None, cycle=None, tube_radius=None):
    """G_T = relaxation o kick; tangents multiplied."""
    x1, V1 = kick_map(prog, schedule, x0, config, cycle, tube_radius)
    x2, V2 = relaxation_map(prog, schedule.T - schedule.rho, x1, config)
    return x2, V2 @ V1
