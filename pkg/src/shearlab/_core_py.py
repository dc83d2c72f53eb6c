"""Pure-Python integration kernel.

Reference implementation of the hot loop: an embedded Dormand-Prince 5(4)
pair with dense output, integrating a tape-compiled field together with the
optional arclength and tangent (variational) augmentations.  The compiled
twin in ``_core_cy.pyx`` implements the same entry point; ``kernels.py``
picks one at import time.
"""

import math

import numpy as np

from .dsl import (
    OP_ADD, OP_ATAN2, OP_CONST, OP_COS, OP_DIV, OP_EXP, OP_LOG, OP_MUL,
    OP_NEG, OP_POWI, OP_SIN, OP_SQRT, OP_SUB, OP_VAR,
)

STATUS_OK = 0
STATUS_DOMAIN = 1
STATUS_UNDERFLOW = 2
STATUS_NONFINITE = 3
STATUS_MAXSTEPS = 4

# Butcher tableau, 5(4) pair with FSAL
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# dense-output coefficients
_D = (
    -12715105075 / 11282082432,
    0.0,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)


class _DomainHit(ArithmeticError):
    pass


class _TapeEval:
    """Tape interpreter with optional first-order forward-mode pass."""

    def __init__(self, tape):
        self.tape = tape
        self.n = tape.dim
        self.val = np.empty(tape.n_regs)
        self.grad = np.zeros((tape.n_regs, tape.dim))

    def values(self, x, eps_eff):
        t = self.tape
        v = self.val
        for op, dst, a, b in t.code:
            if op == OP_CONST:
                v[dst] = t.consts[a]
            elif op == OP_VAR:
                v[dst] = x[a]
            elif op == OP_ADD:
                v[dst] = v[a] + v[b]
            elif op == OP_SUB:
                v[dst] = v[a] - v[b]
            elif op == OP_MUL:
                v[dst] = v[a] * v[b]
            elif op == OP_DIV:
                if v[b] == 0.0:
                    raise _DomainHit
                v[dst] = v[a] / v[b]
            elif op == OP_NEG:
                v[dst] = -v[a]
            elif op == OP_SIN:
                v[dst] = math.sin(v[a])
            elif op == OP_COS:
                v[dst] = math.cos(v[a])
            elif op == OP_EXP:
                v[dst] = math.exp(v[a])
            elif op == OP_LOG:
                if v[a] <= 0.0:
                    raise _DomainHit
                v[dst] = math.log(v[a])
            elif op == OP_SQRT:
                if v[a] < 0.0:
                    raise _DomainHit
                v[dst] = math.sqrt(v[a])
            elif op == OP_ATAN2:
                if v[a] == 0.0 and v[b] == 0.0:
                    raise _DomainHit
                v[dst] = math.atan2(v[a], v[b])
            elif op == OP_POWI:
                if v[a] == 0.0 and b < 0:
                    raise _DomainHit
                v[dst] = v[a] ** b
        g = v[t.f_out].copy()
        if eps_eff != 0.0 and len(t.F_out):
            g += eps_eff * v[t.F_out]
        return g

    def values_jac(self, x, eps_eff):
        t = self.tape
        v = self.val
        gr = self.grad
        for op, dst, a, b in t.code:
            if op == OP_CONST:
                v[dst] = t.consts[a]
                gr[dst] = 0.0
            elif op == OP_VAR:
                v[dst] = x[a]
                gr[dst] = 0.0
                gr[dst, a] = 1.0
            elif op == OP_ADD:
                v[dst] = v[a] + v[b]
                np.add(gr[a], gr[b], out=gr[dst])
            elif op == OP_SUB:
                v[dst] = v[a] - v[b]
                np.subtract(gr[a], gr[b], out=gr[dst])
            elif op == OP_MUL:
                v[dst] = v[a] * v[b]
                gr[dst] = v[b] * gr[a] + v[a] * gr[b]
            elif op == OP_DIV:
                if v[b] == 0.0:
                    raise _DomainHit
                inv = 1.0 / v[b]
                v[dst] = v[a] * inv
                gr[dst] = inv * gr[a] - (v[a] * inv * inv) * gr[b]
            elif op == OP_NEG:
                v[dst] = -v[a]
                np.negative(gr[a], out=gr[dst])
            elif op == OP_SIN:
                v[dst] = math.sin(v[a])
                gr[dst] = math.cos(v[a]) * gr[a]
            elif op == OP_COS:
                v[dst] = math.cos(v[a])
                gr[dst] = -math.sin(v[a]) * gr[a]
            elif op == OP_EXP:
                v[dst] = math.exp(v[a])
                gr[dst] = v[dst] * gr[a]
            elif op == OP_LOG:
                if v[a] <= 0.0:
                    raise _DomainHit
                v[dst] = math.log(v[a])
                gr[dst] = gr[a] / v[a]
            elif op == OP_SQRT:
                if v[a] <= 0.0:
                    raise _DomainHit
                v[dst] = math.sqrt(v[a])
                gr[dst] = (0.5 / v[dst]) * gr[a]
            elif op == OP_ATAN2:
                y, xx = v[a], v[b]
                r2 = y * y + xx * xx
                if r2 == 0.0:
                    raise _DomainHit
                v[dst] = math.atan2(y, xx)
                gr[dst] = (xx * gr[a] - y * gr[b]) / r2
            elif op == OP_POWI:
                if v[a] == 0.0 and b < 2:
                    if b < 0:
                        raise _DomainHit
                    v[dst] = 0.0 if b == 1 else 1.0
                    gr[dst] = gr[a] if b == 1 else 0.0
                else:
                    v[dst] = v[a] ** b
                    gr[dst] = (b * v[a] ** (b - 1)) * gr[a]
        g = v[t.f_out].copy()
        J = gr[t.f_out].copy()
        if eps_eff != 0.0 and len(t.F_out):
            g += eps_eff * v[t.F_out]
            J += eps_eff * gr[t.F_out]
        return g, J


def integrate_segment(tape, eps_eff, y0, t0, t1, rtol, atol, max_step, h0,
                      with_tangent, with_arclength, record, max_steps):
    """Integrate the augmented system over one smooth segment.

    ``y0`` holds [x(n), arclength?, tangent rows?].  Returns
    ``(status, y_end, t_end, h_next, nsteps, ts, ys, rcont)`` where the last
    three are None unless ``record`` is set.  ``rcont`` holds the per-step
    dense-output coefficients (nsteps, 5, dim).
    """
    n = tape.dim
    ev = _TapeEval(tape)
    y = np.array(y0, dtype=float)
    dim = y.shape[0]
    arc_ix = n if with_arclength else -1
    tan_base = n + (1 if with_arclength else 0)

    span = t1 - t0
    if span == 0.0:
        if record:
            return (STATUS_OK, y, t0, h0, 0, np.array([t0]), y[None, :].copy(), np.zeros((0, 5, dim)))
        return (STATUS_OK, y, t0, h0, 0, None, None, None)
    direction = 1.0 if span > 0 else -1.0

    def rhs(x_aug, out):
        x = x_aug[:n]
        if with_tangent:
            g, J = ev.values_jac(x, eps_eff)
            V = x_aug[tan_base:].reshape(n, n)
            out[tan_base:] = (J @ V).reshape(-1)
        else:
            g = ev.values(x, eps_eff)
        out[:n] = g
        if arc_ix >= 0:
            out[arc_ix] = math.sqrt(float(np.dot(g, g)))

    k = np.empty((7, dim))
    ywork = np.empty(dim)
    try:
        rhs(y, k[0])
    except _DomainHit:
        return (STATUS_DOMAIN, y, t0, h0, 0, None, None, None)

    # initial step size: crude power-rule guess, refined by the controller
    if h0 > 0.0:
        h = min(h0, abs(span), max_step)
    else:
        scale = atol + rtol * np.abs(y)
        d0 = math.sqrt(float(np.mean((y / scale) ** 2)))
        d1 = math.sqrt(float(np.mean((k[0] / scale) ** 2)))
        h = 0.01 * d0 / d1 if d1 > 1e-10 else 1e-6
        h = min(max(h, 1e-10), abs(span), max_step)
    h *= direction

    t = t0
    nsteps = 0
    ts_list = [t0] if record else None
    ys_list = [y.copy()] if record else None
    rc_list = [] if record else None

    while (t1 - t) * direction > 0.0:
        if abs(t1 - t) < 1e-13 * max(1.0, abs(t1)):
            t = t1  # sub-roundoff remainder: state change is below tolerance
            break
        if nsteps >= max_steps:
            return (STATUS_MAXSTEPS, y, t, h, nsteps, None, None, None)
        if abs(h) < 1e-14 * max(1.0, abs(t)):
            return (STATUS_UNDERFLOW, y, t, h, nsteps, None, None, None)
        if (t + h - t1) * direction > 0.0:
            h = t1 - t

        bad = False
        for i in range(1, 7):
            ywork[:] = y
            ai = _A[i]
            for j in range(i):
                if ai[j] != 0.0:
                    ywork += (h * ai[j]) * k[j]
            try:
                rhs(ywork, k[i])
            except _DomainHit:
                bad = True
                break
        if not bad:
            ynew = ywork  # stage 7 abscissa is 1: ywork == 5th-order solution
            if not np.all(np.isfinite(ynew)):
                bad = True
        if bad:
            h *= 0.5
            continue

        err_v = np.zeros(dim)
        for i in range(7):
            if _E[i] != 0.0:
                err_v += (h * _E[i]) * k[i]
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = math.sqrt(float(np.mean((err_v / scale) ** 2)))

        if err <= 1.0:
            if record:
                ydiff = ynew - y
                rc = np.empty((5, dim))
                rc[0] = y
                rc[1] = ydiff
                rc[2] = h * k[0] - ydiff
                rc[3] = ydiff - h * k[6] - rc[2]
                rc[4] = h * (_D[0] * k[0] + _D[2] * k[2] + _D[3] * k[3]
                             + _D[4] * k[4] + _D[5] * k[5] + _D[6] * k[6])
                rc_list.append(rc)
            t = t1 if (t + h - t1) * direction >= 0.0 else t + h
            y = ynew.copy()
            k[0] = k[6]  # FSAL
            nsteps += 1
            if record:
                ts_list.append(t)
                ys_list.append(y.copy())
            fac = 0.9 * err ** -0.2 if err > 1e-12 else 5.0
            h *= min(5.0, max(0.2, fac))
            if abs(h) > max_step:
                h = max_step * direction
        else:
            h *= max(0.2, 0.9 * err ** -0.2)

    if record:
        return (STATUS_OK, y, t, h, nsteps,
                np.array(ts_list), np.array(ys_list), np.array(rc_list))
    return (STATUS_OK, y, t, h, nsteps, None, None, None)


def dense_eval(rc, t_lo, h, t):
    """Evaluate the dense-output interpolant of one accepted step."""
    th = (t - t_lo) / h
    th1 = 1.0 - th
    return rc[0] + th * (rc[1] + th1 * (rc[2] + th * (rc[3] + th1 * rc[4])))


BACKEND = "python"
