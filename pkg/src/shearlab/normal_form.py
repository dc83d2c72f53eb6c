"""Moving frame and normal-form data around the limit cycle.

Everything lives on a uniform arclength grid over [0, 2L): the normal-frame
functions are only guaranteed periodic after two loops, and doubling the
period keeps the Floquet logarithm real once the normal multipliers are
positive.  The chain computed here:

    frame E(s), curvatures K(s)
    -> b0 = 1/speed, shear row b1, normal linearization A_tilde
    -> Floquet pair (P(s), A) of dY/ds = A_tilde(s) Y over 2L
    -> shear integral Sigma = int b1^T P, shear factor sigma = |Sigma|
    -> forcing projection zeta = P^{-1} phi / speed
    -> pulse response Phi(s0) = <d, int_{s0}^{s~} zeta>,  rho = int_{s0}^{s~} b0
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .dsl import field_jacobian

__all__ = [
    "MovingFrame",
    "NormalFormData",
    "PhiFunction",
    "MorseConstants",
    "NormalFormError",
    "FrameDegeneracyError",
    "CriticalSetUnresolvedError",
    "build_frame",
    "compute_normal_form",
    "compute_phi",
]


class NormalFormError(RuntimeError):
    pass


class FrameDegeneracyError(NormalFormError):
    pass


class CriticalSetUnresolvedError(NormalFormError):
    pass


def _periodic_spline(grid, values, period):
    """Periodic cubic spline through samples on [0, period)."""
    g = np.append(grid, period)
    if values.ndim == 1:
        v = np.append(values, values[0])
    else:
        v = np.concatenate([values, values[:1]], axis=0)
    return CubicSpline(g, v, bc_type="periodic")


def _spectral_derivative(samples, period):
    """d/ds of uniformly sampled periodic data via FFT."""
    m = samples.shape[0]
    kk = np.fft.fftfreq(m, d=period / (2.0 * np.pi * m))
    c = np.fft.fft(samples, axis=0)
    shape = [m] + [1] * (samples.ndim - 1)
    return np.real(np.fft.ifft(1j * kk.reshape(shape) * c, axis=0))


def _spectral_antiderivative(samples, period):
    """(mean, periodic part samples) of the running integral."""
    m = samples.shape[0]
    mean = float(np.mean(samples))
    c = np.fft.fft(samples - mean)
    kk = np.fft.fftfreq(m, d=period / (2.0 * np.pi * m))
    with np.errstate(divide="ignore", invalid="ignore"):
        ci = np.where(kk == 0.0, 0.0, c / (1j * kk))
    per = np.real(np.fft.ifft(ci))
    per -= per[0]  # integral starts at 0
    return mean, per


@dataclass
class MovingFrame:
    s_grid: np.ndarray        # (2N,) on [0, 2L)
    E: np.ndarray             # (2N, n, n), rows of E(s); last row = tangent
    K: np.ndarray             # (2N, n, n), K = E' E^T (skew)
    two_L: float
    closes_after_L: bool
    method: str

    @property
    def dim(self):
        return self.E.shape[1]


def _tangent_data(cycle, prog, s_grid):
    """T(s) and T'(s) on the grid, exactly from the field when available."""
    m = len(s_grid)
    n = cycle.dim
    T = np.empty((m, n))
    Tp = np.empty((m, n))
    for j, s in enumerate(s_grid):
        g = cycle.gamma(s)
        if prog is not None:
            f, Df = field_jacobian(prog, g)
            sp = float(np.linalg.norm(f))
            t = f / sp
            v = Df @ t / sp
            Tp[j] = v - t * float(np.dot(t, v))
            T[j] = t
        else:
            t = cycle.gamma_prime(s)
            T[j] = t / np.linalg.norm(t)
            Tp[j] = cycle.gamma_second(s)
            Tp[j] -= T[j] * float(np.dot(T[j], Tp[j]))
    return T, Tp


def _complete_basis(t):
    """Orthonormal rows spanning t-perp (n-1 of them)."""
    n = len(t)
    rows = []
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        v = v - t * float(np.dot(t, v))
        for r in rows:
            v = v - r * float(np.dot(r, v))
        nv = float(np.linalg.norm(v))
        if nv > 0.3:
            rows.append(v / nv)
        if len(rows) == n - 1:
            break
    if len(rows) != n - 1:
        raise FrameDegeneracyError("could not complete tangent to a basis")
    return np.array(rows)


def _parallel_transport_frame(cycle, prog, m):
    n = cycle.dim
    two_L = 2.0 * cycle.L
    s_grid = np.linspace(0.0, two_L, m, endpoint=False)
    T, Tp = _tangent_data(cycle, prog, s_grid)
    T_sp = _periodic_spline(s_grid, T, two_L)
    Tp_sp = _periodic_spline(s_grid, Tp, two_L)

    def rhs(s, Nflat):
        Nmat = Nflat.reshape(n - 1, n)
        t = T_sp(s % two_L)
        tp = Tp_sp(s % two_L)
        return (-(Nmat @ tp)[:, None] * t[None, :]).reshape(-1)

    N0 = _complete_basis(T[0])
    h = two_L / m
    Nmat = N0.copy()
    frames_N = np.empty((m, n - 1, n))
    hol_L = None
    for j in range(m):
        frames_N[j] = Nmat
        # one RK4 step per grid interval; renormalize against drift
        s = s_grid[j]
        y = Nmat.reshape(-1)
        k1 = rhs(s, y)
        k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(s + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        Nmat = y.reshape(n - 1, n)
        t_next = T[(j + 1) % m]
        for i in range(n - 1):
            v = Nmat[i] - t_next * float(np.dot(t_next, Nmat[i]))
            for r in range(i):
                v = v - Nmat[r] * float(np.dot(Nmat[r], v))
            Nmat[i] = v / float(np.linalg.norm(v))
        if j + 1 == m // 2:
            hol_L = Nmat @ N0.T

    R2 = Nmat @ N0.T  # holonomy over two loops
    closes_after_L = bool(np.linalg.norm(hol_L - np.eye(n - 1)) < 1e-6)
    W = None
    if np.linalg.norm(R2 - np.eye(n - 1)) > 1e-9:
        from scipy.linalg import logm

        Wc = logm(R2)
        if np.abs(Wc.imag).max() > 1e-8:
            raise NormalFormError(
                "normal-frame holonomy has no real logarithm; unsupported")
        W = np.real(Wc)
        # constant-rate counter-rotation closes the frame at 2L
        from scipy.linalg import expm

        for j in range(m):
            C = expm(-(s_grid[j] / two_L) * W)
            frames_N[j] = C @ frames_N[j]
        closes_after_L = False

    E = np.empty((m, n, n))
    K = np.zeros((m, n, n))
    for j in range(m):
        E[j, : n - 1] = frames_N[j]
        E[j, n - 1] = T[j]
        kn = frames_N[j] @ Tp[j]  # <n_i, T'>
        K[j, : n - 1, n - 1] = -kn
        K[j, n - 1, : n - 1] = kn
        if W is not None:
            K[j, : n - 1, : n - 1] = -W / two_L
    return MovingFrame(s_grid, E, K, two_L, closes_after_L, "parallel_transport")


def _frenet_frame(cycle, prog, m):
    n = cycle.dim
    two_L = 2.0 * cycle.L
    s_grid = np.linspace(0.0, two_L, m, endpoint=False)
    half = np.linspace(0.0, cycle.L, m // 2, endpoint=False)
    pts = cycle.gamma(half)
    ders = [pts]
    for _ in range(n):
        ders.append(_spectral_derivative(ders[-1], cycle.L))
    E = np.empty((m, n, n))
    for jj in range(m // 2):
        rows = []
        for k in range(1, n + 1):
            v = ders[k][jj].copy()
            for r in rows:
                v -= r * float(np.dot(r, v))
            nv = float(np.linalg.norm(v))
            if nv < 1e-10 * max(1.0, float(np.linalg.norm(ders[k][jj]))):
                raise FrameDegeneracyError(
                    "derivatives of gamma not independent at s=%.6g" % half[jj])
            rows.append(v / nv)
        # tangent last, normals keep Frenet order
        E[jj, : n - 1] = rows[1:]
        E[jj, n - 1] = rows[0]
    E[m // 2:] = E[: m // 2]
    Ep = _spectral_derivative(E, two_L)
    K = np.einsum("jab,jcb->jac", Ep, E)
    return MovingFrame(s_grid, E, K, two_L, True, "frenet")


def build_frame(cycle, method="parallel_transport", prog=None, n_grid=None):
    """Orthonormal moving frame with the unit tangent as the last row.

    parallel_transport integrates the rotation-minimizing connection (plus a
    constant-rate correction that closes the frame over 2L when the normal
    holonomy is nontrivial); frenet applies Gram-Schmidt to the derivatives
    of gamma and needs them independent.
    """
    m = n_grid or 2 * (len(cycle.s_nodes) - 1)
    if m % 2:
        m += 1
    if method == "parallel_transport":
        return _parallel_transport_frame(cycle, prog, m)
    if method == "frenet":
        return _frenet_frame(cycle, prog, m)
    raise ValueError("unknown frame method %r" % method)


@dataclass
class NormalFormData:
    s_grid: np.ndarray
    two_L: float
    p0: float
    b0: np.ndarray           # (2N,)
    b1: np.ndarray           # (2N, n-1)
    A_tilde: np.ndarray      # (2N, n-1, n-1)
    P: np.ndarray            # (2N, n-1, n-1)
    A: np.ndarray            # eigenvalues, descending (closest to 0 first)
    Sigma: np.ndarray        # (n-1,)
    sigma: float
    mu: np.ndarray
    d: np.ndarray
    zeta: np.ndarray         # (2N, n-1)
    floquet_residual: float
    frame: MovingFrame = field(repr=False, default=None)
    cycle: object = field(repr=False, default=None)

    @property
    def lambda1(self):
        return float(self.A[0])

    def hyperbolicity(self, epsilon):
        """Dial value eps*sigma/|lambda1| (see also hyperbolicity_flow)."""
        return epsilon * self.sigma / abs(self.lambda1)

    def hyperbolicity_flow(self, epsilon):
        """Flow-matched shear gain eps*sigma/(2L*|lambda1|): the mean of
        b1^T P drives the asymptotic phase shift, so the plain integral
        overstates the kick response by the factor 2L."""
        return epsilon * self.sigma / (self.two_L * abs(self.lambda1))

    def b0_spline(self):
        return _periodic_spline(self.s_grid, self.b0, self.two_L)

    def zeta_d_samples(self):
        return self.zeta @ self.d

    def to_files(self, prefix):
        header = {
            "two_L": self.two_L,
            "p0": self.p0,
            "A": list(map(float, self.A)),
            "Sigma": list(map(float, self.Sigma)),
            "sigma": self.sigma,
            "mu": list(map(float, self.mu)),
            "d": list(map(float, self.d)),
            "floquet_residual": self.floquet_residual,
            "frame_method": self.frame.method if self.frame else None,
        }
        with open(prefix + ".json", "w") as fh:
            json.dump(header, fh, indent=1, sort_keys=True)
        nm1 = self.b1.shape[1]
        with open(prefix + ".csv", "w") as fh:
            cols = (["s", "b0"] + ["b1_%d" % i for i in range(nm1)]
                    + ["P_%d_%d" % (i, j) for i in range(nm1) for j in range(nm1)]
                    + ["zeta_%d" % i for i in range(nm1)])
            fh.write(",".join(cols) + "\n")
            for j, s in enumerate(self.s_grid):
                row = [s, self.b0[j]] + list(self.b1[j]) + \
                    list(self.P[j].reshape(-1)) + list(self.zeta[j])
                fh.write(",".join("%.17g" % v for v in row) + "\n")


def compute_normal_form(prog, cycle, frame):
    """Normal-form data: b0, b1, A_tilde, Floquet (P, A), Sigma/sigma, zeta."""
    n = cycle.dim
    m = len(frame.s_grid)
    s_grid = frame.s_grid
    two_L = frame.two_L

    b0 = np.empty(m)
    b1 = np.empty((m, n - 1))
    A_tilde = np.empty((m, n - 1, n - 1))
    phi_proj = np.zeros((m, n - 1))
    has_F = prog.has_forcing
    for j, s in enumerate(s_grid):
        g = cycle.gamma(s)
        E = frame.E[j]
        K = frame.K[j]
        f, Df = field_jacobian(prog, g)
        speed = float(np.dot(f, E[n - 1]))
        if speed <= 0.0:
            raise NormalFormError("speed not positive on the cycle")
        M = E @ Df @ E.T
        b0[j] = 1.0 / speed
        kn = K[: n - 1, n - 1]
        b1[j] = b0[j] * (kn - M[n - 1, : n - 1] / speed)
        A_tilde[j] = M[: n - 1, : n - 1] / speed - K[: n - 1, : n - 1].T
        if has_F:
            Fv = _forcing_values(prog, g)
            phi_proj[j] = E[: n - 1] @ Fv

    # pin the sampled mean to the exact identity int_0^L b0 = p0; the node
    # bias this removes would otherwise drift the cumulative-time chart
    b0 *= (cycle.p0 / cycle.L) / b0.mean()

    At_sp = _periodic_spline(s_grid, A_tilde.reshape(m, -1), two_L)

    def ode(s, y):
        return (At_sp(s % two_L).reshape(n - 1, n - 1) @
                y.reshape(n - 1, n - 1)).reshape(-1)

    sol = solve_ivp(ode, (0.0, two_L), np.eye(n - 1).reshape(-1),
                    method="DOP853", rtol=1e-12, atol=1e-13,
                    t_eval=np.append(s_grid, two_L), dense_output=False)
    if not sol.success:
        raise NormalFormError("Floquet integration failed: %s" % sol.message)
    Y = sol.y.T.reshape(-1, n - 1, n - 1)
    M2 = Y[-1]

    evals, evecs = np.linalg.eig(M2)
    if np.abs(evals.imag).max() > 1e-9 * np.abs(evals).max():
        raise NormalFormError(
            "complex normal Floquet multipliers are unsupported")
    evals = evals.real
    if np.any(evals <= 0.0):
        raise NormalFormError("non-positive normal multiplier over 2L")
    if np.any(evals >= 1.0):
        raise NormalFormError("normal multiplier >= 1: cycle not attracting")
    if np.linalg.cond(evecs) > 1e8:
        raise NormalFormError("normal monodromy too close to defective")
    lam = np.log(evals) / two_L
    order = np.argsort(-lam)  # descending: weakest contraction first
    lam = lam[order]
    C = np.real(evecs[:, order])
    C = C / np.linalg.norm(C, axis=0)
    for i in range(C.shape[1]):
        k = int(np.argmax(np.abs(C[:, i])))
        if C[k, i] < 0:
            C[:, i] = -C[:, i]

    P = np.einsum("jab,bc->jac", Y[:-1], C)
    P = P * np.exp(-np.outer(s_grid, lam))[:, None, :]
    resid = float(np.linalg.norm(
        Y[-1] - C @ np.diag(np.exp(two_L * lam)) @ np.linalg.inv(C)))

    bP = np.einsum("ja,jab->jb", b1, P)
    Sigma = bP.mean(axis=0) * two_L
    sigma = float(np.linalg.norm(Sigma))
    mu = lam[0] / lam
    d = Sigma * mu / sigma if sigma > 0 else Sigma * 0.0

    zeta = np.empty((m, n - 1))
    for j in range(m):
        zeta[j] = np.linalg.solve(P[j], phi_proj[j]) * b0[j]

    return NormalFormData(
        s_grid=s_grid, two_L=two_L, p0=cycle.p0, b0=b0, b1=b1,
        A_tilde=A_tilde, P=P, A=lam, Sigma=Sigma, sigma=sigma, mu=mu, d=d,
        zeta=zeta, floquet_residual=resid, frame=frame, cycle=cycle,
    )


def _forcing_values(prog, x):
    tape = prog.tape
    from .dsl import _tape_values

    regs = _tape_values(tape, np.asarray(x, dtype=float))
    return regs[tape.F_out].astype(float)


@dataclass
class MorseConstants:
    K2: float
    d0: float
    d1: float
    d2: float
    delta0: float


@dataclass
class PhiFunction:
    """Pulse-response profile Phi with two derivatives and Morse data."""

    s_grid: np.ndarray
    two_L: float
    rho: float
    p0: float
    b0_mean: float
    phi_samples: np.ndarray
    critical_points: list          # [(s, phi'' at s)]
    morse: MorseConstants
    is_morse: bool
    degenerate: bool
    _b0_sp: object = field(repr=False, default=None)
    _b0p_sp: object = field(repr=False, default=None)
    _B_per: object = field(repr=False, default=None)
    _zd_sp: object = field(repr=False, default=None)
    _zdp_sp: object = field(repr=False, default=None)
    _W_per: object = field(repr=False, default=None)
    _zd_mean: float = 0.0

    # -- cumulative time B(s) = int_0^s b0, B(s + 2L) = B(s) + 2 p0
    def B(self, s):
        s = np.asarray(s, dtype=float)
        return self.b0_mean * s + self._B_per(np.mod(s, self.two_L))

    def b0(self, s):
        return self._b0_sp(np.mod(s, self.two_L))

    def b0p(self, s):
        return self._b0p_sp(np.mod(s, self.two_L))

    def B_inverse(self, tau):
        """Monotone inverse of B (vectorized Newton with wrap reduction)."""
        tau = np.asarray(tau, dtype=float)
        period_t = self.b0_mean * self.two_L
        wraps = np.floor(tau / period_t)
        tred = tau - wraps * period_t
        s = tred / self.b0_mean  # starting guess: mean speed
        for _ in range(60):
            r = self.b0_mean * s + self._B_per(np.mod(s, self.two_L)) - tred
            ds = r / self._b0_sp(np.mod(s, self.two_L))
            s = s - ds
            if np.max(np.abs(ds)) < 1e-14 * self.two_L:
                break
        return s + wraps * self.two_L

    def s_tilde(self, s0):
        """End of the pulse window: rho = int_{s0}^{s~} b0."""
        return self.B_inverse(self.B(s0) + self.rho)

    def _zd(self, s):
        return self._zd_sp(np.mod(s, self.two_L))

    def _zdp(self, s):
        return self._zdp_sp(np.mod(s, self.two_L))

    def W(self, s):
        s = np.asarray(s, dtype=float)
        return self._zd_mean * s + self._W_per(np.mod(s, self.two_L))

    def phi(self, s0):
        st = self.s_tilde(s0)
        return self.W(st) - self.W(s0)

    def dphi(self, s0):
        st = self.s_tilde(s0)
        up = self.b0(s0) / self.b0(st)
        return self._zd(st) * up - self._zd(s0)

    def d2phi(self, s0):
        st = self.s_tilde(s0)
        b0s, b0t = self.b0(s0), self.b0(st)
        up = b0s / b0t
        upp = (self.b0p(s0) * b0t - b0s * self.b0p(st) * up) / (b0t * b0t)
        return self._zdp(st) * up * up + self._zd(st) * upp - self._zdp(s0)

    def to_files(self, prefix):
        header = {
            "two_L": self.two_L,
            "rho": self.rho,
            "is_morse": self.is_morse,
            "degenerate": self.degenerate,
            "critical_points": [[float(s), float(c)] for s, c in self.critical_points],
            "morse_constants": {
                "K2": self.morse.K2, "d0": self.morse.d0, "d1": self.morse.d1,
                "d2": self.morse.d2, "delta0": self.morse.delta0,
            },
        }
        with open(prefix + ".json", "w") as fh:
            json.dump(header, fh, indent=1, sort_keys=True)
        with open(prefix + ".csv", "w") as fh:
            fh.write("s,phi,dphi,d2phi\n")
            for s in self.s_grid:
                fh.write("%.17g,%.17g,%.17g,%.17g\n"
                         % (s, self.phi(s), self.dphi(s), self.d2phi(s)))


def compute_phi(prog, cycle, nf, rho, morse_threshold=1e-6):
    """Build Phi (pulse response on the doubled circle) and its Morse data."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    s_grid = nf.s_grid
    two_L = nf.two_L

    b0_mean, B_per = _spectral_antiderivative(nf.b0, two_L)
    zd = nf.zeta_d_samples()
    zd_mean, W_per = _spectral_antiderivative(zd, two_L)
    b0p = _spectral_derivative(nf.b0, two_L)
    zdp = _spectral_derivative(zd, two_L)

    ph = PhiFunction(
        s_grid=s_grid, two_L=two_L, rho=rho, p0=nf.p0, b0_mean=b0_mean,
        phi_samples=None, critical_points=[], morse=None, is_morse=False,
        degenerate=False,
        _b0_sp=_periodic_spline(s_grid, nf.b0, two_L),
        _b0p_sp=_periodic_spline(s_grid, b0p, two_L),
        _B_per=_periodic_spline(s_grid, B_per, two_L),
        _zd_sp=_periodic_spline(s_grid, zd, two_L),
        _zdp_sp=_periodic_spline(s_grid, zdp, two_L),
        _W_per=_periodic_spline(s_grid, W_per, two_L),
        _zd_mean=zd_mean,
    )
    ph.phi_samples = ph.phi(s_grid)

    scale = max(np.max(np.abs(ph.phi_samples)), np.max(np.abs(zd)), 1e-300)
    fine = np.linspace(0.0, two_L, 8 * len(s_grid), endpoint=False)
    dvals = ph.dphi(fine)
    if np.max(np.abs(dvals)) < 1e-10 * max(scale, 1.0):
        # flat response: the whole circle is critical
        ph.degenerate = True
        ph.is_morse = False
        ph.morse = MorseConstants(K2=float(np.max(np.abs(ph.phi_samples))),
                                  d0=0.0, d1=0.0, d2=0.0, delta0=0.0)
        return ph

    roots = _resolve_critical_points(ph, two_L, len(s_grid))
    crit = [(s, float(ph.d2phi(s))) for s in roots]
    ph.critical_points = crit

    d1 = _min_circular_gap(roots, two_L)
    delta0 = d1 / 4.0
    d0 = _min_over_neighborhoods(lambda s: np.abs(ph.d2phi(s)), roots, delta0, two_L)
    d2 = _min_over_complement(lambda s: np.abs(ph.dphi(s)), roots, delta0, two_L)
    fine2 = np.linspace(0.0, two_L, 4096, endpoint=False)
    h3 = 1e-5 * two_L
    d3 = np.max(np.abs((ph.d2phi(fine2 + h3) - ph.d2phi(fine2 - h3)) / (2 * h3)))
    K2 = float(max(np.max(np.abs(ph.phi(fine2))), np.max(np.abs(ph.dphi(fine2))),
                   np.max(np.abs(ph.d2phi(fine2))), d3))
    ph.morse = MorseConstants(K2=K2, d0=float(d0), d1=float(d1),
                              d2=float(d2), delta0=float(delta0))
    ph.is_morse = bool(
        len(crit) > 0
        and min(abs(c) for _, c in crit) > morse_threshold
        and 0.0 < delta0 < 0.5 * d1
        and d0 > 0.0 and d2 > 0.0
    )
    return ph


def _resolve_critical_points(ph, two_L, base_n):
    """Bracketed roots of phi' with stability under grid refinement."""
    prev = None
    for mult in (8, 16, 32):
        grid = np.linspace(0.0, two_L, mult * base_n + 1)
        vals = ph.dphi(grid)
        roots = []
        for i in range(len(grid) - 1):
            a, b = vals[i], vals[i + 1]
            if a == 0.0:
                roots.append(grid[i])
            elif a * b < 0.0:
                roots.append(brentq(lambda s: float(ph.dphi(s)),
                                    grid[i], grid[i + 1], xtol=1e-14))
        roots = sorted(r % two_L for r in roots)
        # merge near-duplicates (root exactly on a grid node)
        merged = []
        for r in roots:
            if not merged or (r - merged[-1]) % two_L > 1e-9 * two_L:
                merged.append(r)
        if merged and (merged[0] + two_L - merged[-1]) < 1e-9 * two_L:
            merged.pop()
        if prev is not None and len(merged) == len(prev):
            return merged
        prev = merged
    raise CriticalSetUnresolvedError(
        "critical-point count did not stabilize under grid refinement")


def _min_circular_gap(roots, period):
    if len(roots) < 2:
        return period
    r = np.sort(np.asarray(roots))
    gaps = np.diff(np.append(r, r[0] + period))
    return float(np.min(gaps))


def _min_over_neighborhoods(fn, roots, delta, period):
    vals = []
    for r in roots:
        s = np.linspace(r - delta, r + delta, 201)
        vals.append(np.min(fn(s)))
    return float(min(vals)) if vals else float("nan")


def _min_over_complement(fn, roots, delta, period):
    grid = np.linspace(0.0, period, 8192, endpoint=False)
    mask = np.ones(len(grid), dtype=bool)
    for r in roots:
        dist = np.abs((grid - r + period / 2) % period - period / 2)
        mask &= dist > delta
    if not mask.any():
        return 0.0
    return float(np.min(fn(grid[mask])))
