# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernel: Dormand-Prince 5(4) over field tapes.

Mirrors ``_core_py.integrate_segment`` exactly; see that module for the
reference semantics.  Fixed compile-time caps: field dimension <= 8,
tape registers <= 512.  The non-recording path runs without the GIL so
sweeps can use real threads.
"""

import numpy as np

cimport cython
from libc.math cimport atan2, cos, exp, fabs, isfinite, log, pow, sin, sqrt

STATUS_OK = 0
STATUS_DOMAIN = 1
STATUS_UNDERFLOW = 2
STATUS_NONFINITE = 3
STATUS_MAXSTEPS = 4

cdef enum:
    C_OK = 0
    C_DOMAIN = 1
    C_UNDERFLOW = 2
    C_NONFINITE = 3
    C_MAXSTEPS = 4

DEF MAXN = 8
DEF MAXREGS = 512
DEF MAXDIM = 73  # n + 1 + n*n at n = 8

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_DIV = 5
    OP_NEG = 6
    OP_SIN = 7
    OP_COS = 8
    OP_EXP = 9
    OP_LOG = 10
    OP_SQRT = 11
    OP_ATAN2 = 12
    OP_POWI = 13

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double A71 = 35.0 / 384.0, A73 = 500.0 / 1113.0, A74 = 125.0 / 192.0
cdef double A75 = -2187.0 / 6784.0, A76 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0
cdef double D1 = -12715105075.0 / 11282082432.0
cdef double D3 = 87487479700.0 / 32700410799.0
cdef double D4 = -10690763975.0 / 1880347072.0
cdef double D5 = 701980252875.0 / 199316789632.0
cdef double D6 = -1453857185.0 / 822651844.0
cdef double D7 = 69997945.0 / 29380423.0


cdef inline double _powi(double x, int k, int* bad) nogil:
    cdef double r = 1.0
    cdef double b = x
    cdef int m = k
    if k == 0:
        return 1.0
    if x == 0.0 and k < 0:
        bad[0] = 1
        return 0.0
    if m < 0:
        m = -m
        b = 1.0 / b
    while m > 0:
        if m & 1:
            r *= b
        b *= b
        m >>= 1
    return r


cdef int _tape_values(const int[:, ::1] code, int ncode, const double[::1] consts,
                      double* regs, const double* x) nogil:
    cdef int i, op, dst, a, b
    cdef int bad = 0
    cdef double va, vb
    for i in range(ncode):
        op = code[i, 0]; dst = code[i, 1]; a = code[i, 2]; b = code[i, 3]
        if op == OP_CONST:
            regs[dst] = consts[a]
        elif op == OP_VAR:
            regs[dst] = x[a]
        elif op == OP_ADD:
            regs[dst] = regs[a] + regs[b]
        elif op == OP_SUB:
            regs[dst] = regs[a] - regs[b]
        elif op == OP_MUL:
            regs[dst] = regs[a] * regs[b]
        elif op == OP_DIV:
            if regs[b] == 0.0:
                return 1
            regs[dst] = regs[a] / regs[b]
        elif op == OP_NEG:
            regs[dst] = -regs[a]
        elif op == OP_SIN:
            regs[dst] = sin(regs[a])
        elif op == OP_COS:
            regs[dst] = cos(regs[a])
        elif op == OP_EXP:
            regs[dst] = exp(regs[a])
        elif op == OP_LOG:
            if regs[a] <= 0.0:
                return 1
            regs[dst] = log(regs[a])
        elif op == OP_SQRT:
            if regs[a] < 0.0:
                return 1
            regs[dst] = sqrt(regs[a])
        elif op == OP_ATAN2:
            va = regs[a]; vb = regs[b]
            if va == 0.0 and vb == 0.0:
                return 1
            regs[dst] = atan2(va, vb)
        elif op == OP_POWI:
            regs[dst] = _powi(regs[a], b, &bad)
            if bad:
                return 1
    return 0


cdef int _tape_jets(const int[:, ::1] code, int ncode, const double[::1] consts,
                    double* val, double* grad, int n, const double* x) nogil:
    cdef int i, j, op, dst, a, b
    cdef int bad = 0
    cdef double v, va, vb, inv, r2, dv
    cdef double* ga
    cdef double* gb
    cdef double* gd
    for i in range(ncode):
        op = code[i, 0]; dst = code[i, 1]; a = code[i, 2]; b = code[i, 3]
        gd = grad + dst * MAXN
        ga = grad + a * MAXN
        gb = grad + b * MAXN
        if op == OP_CONST:
            val[dst] = consts[a]
            for j in range(n):
                gd[j] = 0.0
        elif op == OP_VAR:
            val[dst] = x[a]
            for j in range(n):
                gd[j] = 0.0
            gd[a] = 1.0
        elif op == OP_ADD:
            val[dst] = val[a] + val[b]
            for j in range(n):
                gd[j] = ga[j] + gb[j]
        elif op == OP_SUB:
            val[dst] = val[a] - val[b]
            for j in range(n):
                gd[j] = ga[j] - gb[j]
        elif op == OP_MUL:
            va = val[a]; vb = val[b]
            val[dst] = va * vb
            for j in range(n):
                gd[j] = vb * ga[j] + va * gb[j]
        elif op == OP_DIV:
            if val[b] == 0.0:
                return 1
            inv = 1.0 / val[b]
            va = val[a] * inv * inv
            val[dst] = val[a] * inv
            for j in range(n):
                gd[j] = inv * ga[j] - va * gb[j]
        elif op == OP_NEG:
            val[dst] = -val[a]
            for j in range(n):
                gd[j] = -ga[j]
        elif op == OP_SIN:
            v = cos(val[a])
            val[dst] = sin(val[a])
            for j in range(n):
                gd[j] = v * ga[j]
        elif op == OP_COS:
            v = -sin(val[a])
            val[dst] = cos(val[a])
            for j in range(n):
                gd[j] = v * ga[j]
        elif op == OP_EXP:
            v = exp(val[a])
            val[dst] = v
            for j in range(n):
                gd[j] = v * ga[j]
        elif op == OP_LOG:
            if val[a] <= 0.0:
                return 1
            v = 1.0 / val[a]
            val[dst] = log(val[a])
            for j in range(n):
                gd[j] = v * ga[j]
        elif op == OP_SQRT:
            if val[a] <= 0.0:
                return 1
            v = sqrt(val[a])
            val[dst] = v
            v = 0.5 / v
            for j in range(n):
                gd[j] = v * ga[j]
        elif op == OP_ATAN2:
            va = val[a]; vb = val[b]
            r2 = va * va + vb * vb
            if r2 == 0.0:
                return 1
            val[dst] = atan2(va, vb)
            for j in range(n):
                gd[j] = (vb * ga[j] - va * gb[j]) / r2
        elif op == OP_POWI:
            va = val[a]
            if va == 0.0 and b < 2:
                if b < 0:
                    return 1
                if b == 1:
                    val[dst] = 0.0
                    for j in range(n):
                        gd[j] = ga[j]
                else:
                    val[dst] = 1.0
                    for j in range(n):
                        gd[j] = 0.0
            else:
                val[dst] = _powi(va, b, &bad)
                dv = b * _powi(va, b - 1, &bad)
                if bad:
                    return 1
                for j in range(n):
                    gd[j] = dv * ga[j]
    return 0


cdef struct Work:
    double t
    double h
    double h_used
    double y[MAXDIM]
    double yold[MAXDIM]
    double k[7][MAXDIM]
    double regs[MAXREGS]
    double grad[MAXREGS * MAXN]


cdef int _rhs(const int[:, ::1] code, int ncode, const double[::1] consts,
              const int[::1] f_out, const int[::1] F_out, int nF,
              double eps_eff, int n, int arc_ix, int tan_base, int dim,
              const double* y, double* out, Work* w) nogil:
    cdef int i, j, m
    cdef double acc, gi
    cdef double J[MAXN][MAXN]
    if tan_base >= 0:
        if _tape_jets(code, ncode, consts, w.regs, w.grad, n, y):
            return 1
        for i in range(n):
            gi = w.regs[f_out[i]]
            for j in range(n):
                J[i][j] = w.grad[f_out[i] * MAXN + j]
            if eps_eff != 0.0 and nF > 0:
                gi += eps_eff * w.regs[F_out[i]]
                for j in range(n):
                    J[i][j] += eps_eff * w.grad[F_out[i] * MAXN + j]
            out[i] = gi
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for m in range(n):
                    acc += J[i][m] * y[tan_base + m * n + j]
                out[tan_base + i * n + j] = acc
    else:
        if _tape_values(code, ncode, consts, w.regs, y):
            return 1
        for i in range(n):
            gi = w.regs[f_out[i]]
            if eps_eff != 0.0 and nF > 0:
                gi += eps_eff * w.regs[F_out[i]]
            out[i] = gi
    if arc_ix >= 0:
        acc = 0.0
        for i in range(n):
            acc += out[i] * out[i]
        out[arc_ix] = sqrt(acc)
    return 0


cdef int _try_step(const int[:, ::1] code, int ncode, const double[::1] consts,
                   const int[::1] f_out, const int[::1] F_out, int nF,
                   double eps_eff, int n, int arc_ix, int tan_base, int dim,
                   double t1, double direction, double rtol, double atol,
                   double max_step, Work* w) nogil:
    """One controller cycle: attempt a step at w.h, adapt w.h.

    Returns 1 if a step was accepted (w.t, w.y advanced; w.yold/h_used/k
    hold the dense data), 0 if rejected (w.h shrunk), negative on a bad
    evaluation (caller halves w.h and may give up at underflow).
    """
    cdef double ywork[MAXDIM]
    cdef double ynew[MAXDIM]
    cdef int i, bad
    cdef double err, errv, sc, fac, h = w.h

    bad = 0
    for i in range(dim):
        ywork[i] = w.y[i] + h * A21 * w.k[0][i]
    bad |= _rhs(code, ncode, consts, f_out, F_out, nF, eps_eff, n,
                arc_ix, tan_base, dim, ywork, w.k[1], w)
    if not bad:
        for i in range(dim):
            ywork[i] = w.y[i] + h * (A31 * w.k[0][i] + A32 * w.k[1][i])
        bad |= _rhs(code, ncode, consts, f_out, F_out, nF, eps_eff, n,
                    arc_ix, tan_base, dim, ywork, w.k[2], w)
    if not bad:
        for i in range(dim):
            ywork[i] = w.y[i] + h * (A41 * w.k[0][i] + A42 * w.k[1][i]
                                     + A43 * w.k[2][i])
        bad |= _rhs(code, ncode, consts, f_out, F_out, nF, eps_eff, n,
                    arc_ix, tan_base, dim, ywork, w.k[3], w)
    if not bad:
        for i in range(dim):
            ywork[i] = w.y[i] + h * (A51 * w.k[0][i] + A52 * w.k[1][i]
                                     + A53 * w.k[2][i] + A54 * w.k[3][i])
        bad |= _rhs(code, ncode, consts, f_out, F_out, nF, eps_eff, n,
                    arc_ix, tan_base, dim, ywork, w.k[4], w)
    if not bad:
        for i in range(dim):
            ywork[i] = w.y[i] + h * (A61 * w.k[0][i] + A62 * w.k[1][i]
                                     + A63 * w.k[2][i] + A64 * w.k[3][i]
                                     + A65 * w.k[4][i])
        bad |= _rhs(code, ncode, consts, f_out, F_out, nF, eps_eff, n,
                    arc_ix, tan_base, dim, ywork, w.k[5], w)
    if not bad:
        for i in range(dim):
            ynew[i] = w.y[i] + h * (A71 * w.k[0][i] + A73 * w.k[2][i]
                                    + A74 * w.k[3][i] + A75 * w.k[4][i]
                                    + A76 * w.k[5][i])
        bad |= _rhs(code, ncode, consts, f_out, F_out, nF, eps_eff, n,
                    arc_ix, tan_base, dim, ynew, w.k[6], w)
    if not bad:
        for i in range(dim):
            if not isfinite(ynew[i]):
                bad = 1
                break
    if bad:
        w.h = 0.5 * h
        return 0

    err = 0.0
    for i in range(dim):
        errv = h * (E1 * w.k[0][i] + E3 * w.k[2][i] + E4 * w.k[3][i]
                    + E5 * w.k[4][i] + E6 * w.k[5][i] + E7 * w.k[6][i])
        sc = fabs(w.y[i])
        if fabs(ynew[i]) > sc:
            sc = fabs(ynew[i])
        sc = atol + rtol * sc
        err += (errv / sc) * (errv / sc)
    err = sqrt(err / dim)

    if err <= 1.0:
        w.h_used = h
        for i in range(dim):
            w.yold[i] = w.y[i]
            w.y[i] = ynew[i]
        if (w.t + h - t1) * direction >= 0.0:
            w.t = t1
        else:
            w.t = w.t + h
        fac = 0.9 * pow(err, -0.2) if err > 1e-12 else 5.0
        if fac > 5.0:
            fac = 5.0
        if fac < 0.2:
            fac = 0.2
        w.h = h * fac
        if fabs(w.h) > max_step:
            w.h = max_step * direction
        return 1
    fac = 0.9 * pow(err, -0.2)
    if fac < 0.2:
        fac = 0.2
    w.h = h * fac
    return 0


def integrate_segment(tape, double eps_eff, y0, double t0, double t1,
                      double rtol, double atol, double max_step, double h0,
                      bint with_tangent, bint with_arclength, bint record,
                      long max_steps):
    """See ``_core_py.integrate_segment``."""
    cdef const int[:, ::1] code = tape.code
    cdef const double[::1] consts = tape.consts
    cdef const int[::1] f_out = tape.f_out
    cdef const int[::1] F_out = tape.F_out
    cdef int ncode = tape.code.shape[0]
    cdef int n = tape.dim
    cdef int nF = tape.F_out.shape[0]

    if n > MAXN or tape.n_regs > MAXREGS:
        raise ValueError("tape exceeds compiled kernel limits (dim<=8, regs<=512)")

    y_arr = np.array(y0, dtype=np.float64)
    cdef double[::1] yv = y_arr
    cdef int dim = y_arr.shape[0]
    cdef int arc_ix = n if with_arclength else -1
    cdef int tan_base = (n + (1 if with_arclength else 0)) if with_tangent else -1
    if dim > MAXDIM:
        raise ValueError("augmented state too large")

    cdef Work w
    cdef int i, accepted
    cdef int status = C_OK
    cdef long nsteps = 0
    cdef double direction, span, d0, d1, sc, hmin

    for i in range(dim):
        w.y[i] = yv[i]
    w.t = t0

    span = t1 - t0
    if span == 0.0:
        if record:
            return (C_OK, y_arr, t0, h0, 0, np.array([t0]),
                    y_arr[None, :].copy(), np.zeros((0, 5, dim)))
        return (C_OK, y_arr, t0, h0, 0, None, None, None)
    direction = 1.0 if span > 0 else -1.0

    if _rhs(code, ncode, consts, f_out, F_out, nF, eps_eff, n,
            arc_ix, tan_base, dim, w.y, w.k[0], &w):
        return (C_DOMAIN, y_arr, t0, h0, 0, None, None, None)

    if h0 > 0.0:
        w.h = h0
    else:
        d0 = 0.0
        d1 = 0.0
        for i in range(dim):
            sc = atol + rtol * fabs(w.y[i])
            d0 += (w.y[i] / sc) * (w.y[i] / sc)
            d1 += (w.k[0][i] / sc) * (w.k[0][i] / sc)
        d0 = sqrt(d0 / dim)
        d1 = sqrt(d1 / dim)
        w.h = 0.01 * d0 / d1 if d1 > 1e-10 else 1e-6
        if w.h < 1e-10:
            w.h = 1e-10
    if w.h > fabs(span):
        w.h = fabs(span)
    if w.h > max_step:
        w.h = max_step
    w.h *= direction

    ts_list = [t0] if record else None
    ys_list = [y_arr.copy()] if record else None
    rc_list = [] if record else None

    if record:
        while (t1 - w.t) * direction > 0.0:
            if fabs(t1 - w.t) < 1e-13 * (1.0 if fabs(t1) < 1.0 else fabs(t1)):
                w.t = t1  # sub-roundoff remainder
                break
            if nsteps >= max_steps:
                status = C_MAXSTEPS
                break
            hmin = 1e-14 * (1.0 if fabs(w.t) < 1.0 else fabs(w.t))
            if fabs(w.h) < hmin:
                status = C_UNDERFLOW
                break
            if (w.t + w.h - t1) * direction > 0.0:
                w.h = t1 - w.t
            accepted = _try_step(code, ncode, consts, f_out, F_out, nF,
                                 eps_eff, n, arc_ix, tan_base, dim, t1,
                                 direction, rtol, atol, max_step, &w)
            if accepted == 1:
                rc = np.empty((5, dim))
                out_y = np.empty(dim)
                for i in range(dim):
                    rc[0, i] = w.yold[i]
                    rc[1, i] = w.y[i] - w.yold[i]
                    rc[2, i] = w.h_used * w.k[0][i] - rc[1, i]
                    rc[3, i] = rc[1, i] - w.h_used * w.k[6][i] - rc[2, i]
                    rc[4, i] = w.h_used * (
                        D1 * w.k[0][i] + D3 * w.k[2][i] + D4 * w.k[3][i]
                        + D5 * w.k[4][i] + D6 * w.k[5][i] + D7 * w.k[6][i])
                    out_y[i] = w.y[i]
                    w.k[0][i] = w.k[6][i]
                rc_list.append(rc)
                ts_list.append(w.t)
                ys_list.append(out_y)
                nsteps += 1
    else:
        with nogil:
            while (t1 - w.t) * direction > 0.0:
                if fabs(t1 - w.t) < 1e-13 * (1.0 if fabs(t1) < 1.0 else fabs(t1)):
                    w.t = t1  # sub-roundoff remainder
                    break
                if nsteps >= max_steps:
                    status = C_MAXSTEPS
                    break
                hmin = 1e-14 * (1.0 if fabs(w.t) < 1.0 else fabs(w.t))
                if fabs(w.h) < hmin:
                    status = C_UNDERFLOW
                    break
                if (w.t + w.h - t1) * direction > 0.0:
                    w.h = t1 - w.t
                accepted = _try_step(code, ncode, consts, f_out, F_out, nF,
                                     eps_eff, n, arc_ix, tan_base, dim, t1,
                                     direction, rtol, atol, max_step, &w)
                if accepted == 1:
                    for i in range(dim):
                        w.k[0][i] = w.k[6][i]
                    nsteps += 1

    for i in range(dim):
        yv[i] = w.y[i]
    if status == C_OK and record:
        return (status, y_arr, w.t, w.h, nsteps,
                np.array(ts_list), np.array(ys_list), np.array(rc_list))
    return (status, y_arr, w.t, w.h, nsteps, None, None, None)
