# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

``jacobi_eigh`` diagonalises a dense complex Hermitian matrix with cyclic
Jacobi rotations.  ``StationaritySystem`` evaluates the extremal
stationarity equations together with their Jacobian and runs the damped
Newton (Levenberg-Marquardt) iteration on them.

``_kernels_py`` is the numpy twin of this module and must keep the same
signatures.
"""
import numpy as np

from libc.math cimport sqrt, fabs, isfinite

cdef enum:
    MODE_LAGRANGE = 0
    MODE_COMMUTANT = 1

LAGRANGE = MODE_LAGRANGE
COMMUTANT = MODE_COMMUTANT

cdef enum:
    ST_CONVERGED = 0
    ST_STALLED = 1
    ST_MAX_ITER = 2
    ST_ESCAPED = 3

STATUS_CONVERGED = ST_CONVERGED
STATUS_STALLED = ST_STALLED
STATUS_MAX_ITER = ST_MAX_ITER
STATUS_ESCAPED = ST_ESCAPED


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


def jacobi_eigh(a_in, double tol=1e-12, int max_sweeps=100):
    """Return ``(eigenvalues, eigenvectors, sweeps)`` with ascending eigenvalues.

    Only the upper triangle drives the rotations; the input is assumed
    Hermitian (callers validate).
    """
    arr = np.array(a_in, dtype=np.complex128, order="C", copy=True)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("expected a square matrix")
    vec = np.eye(arr.shape[0], dtype=np.complex128)
    cdef double complex[:, ::1] a = arr
    cdef double complex[:, ::1] v = vec
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, k
    cdef double off = 0.0, g, tau, t, c, s, app, aqq, scale = 0.0
    cdef double complex ph, phc, x, y
    cdef int sweep = 0

    for p in range(n):
        a[p, p] = a[p, p].real
        for q in range(n):
            scale += cabs2(a[p, q])
    scale = sqrt(scale)
    if scale < 1.0:
        scale = 1.0

    with nogil:
        while True:
            off = 0.0
            for p in range(n):
                for q in range(p + 1, n):
                    off += cabs2(a[p, q])
            off = sqrt(2.0 * off)
            if off <= tol * scale or sweep >= max_sweeps:
                break
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    g = sqrt(cabs2(a[p, q]))
                    if g == 0.0:
                        continue
                    ph = a[p, q] / g
                    phc = ph.conjugate()
                    app = a[p, p].real
                    aqq = a[q, q].real
                    tau = (aqq - app) / (2.0 * g)
                    if tau >= 0.0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    for k in range(n):
                        x = a[k, p]
                        y = a[k, q]
                        a[k, p] = c * x - s * phc * y
                        a[k, q] = s * ph * x + c * y
                    for k in range(n):
                        x = a[p, k]
                        y = a[q, k]
                        a[p, k] = c * x - s * ph * y
                        a[q, k] = s * phc * x + c * y
                    a[p, p] = app - t * g
                    a[q, q] = aqq + t * g
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for k in range(n):
                        x = v[k, p]
                        y = v[k, q]
                        v[k, p] = c * x - s * phc * y
                        v[k, q] = s * ph * x + c * y

    if off > tol * scale:
        raise ArithmeticError(
            f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {off:.3e})")
    w = np.real(np.diag(arr)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], vec[:, order], sweep


cdef bint _householder_lstsq(double[:, ::1] A, double[::1] b, Py_ssize_t rows,
                             Py_ssize_t cols, double[::1] out, double[::1] diag) nogil:
    """Least squares ``min |A x - b|`` by Householder QR, in place.

    Returns False when a pivot is numerically zero (rank deficient)."""
    cdef Py_ssize_t i, j, k
    cdef double s, alpha, vnorm2, dot, f, cmax = 0.0
    for j in range(cols):
        s = 0.0
        for i in range(rows):
            s += A[i, j] * A[i, j]
        if s > cmax:
            cmax = s
    cmax = sqrt(cmax)
    if cmax == 0.0:
        return False
    for k in range(cols):
        s = 0.0
        for i in range(k, rows):
            s += A[i, k] * A[i, k]
        alpha = sqrt(s)
        if alpha <= 1e-13 * cmax:
            return False
        if A[k, k] > 0.0:
            alpha = -alpha
        A[k, k] -= alpha
        vnorm2 = 0.0
        for i in range(k, rows):
            vnorm2 += A[i, k] * A[i, k]
        for j in range(k + 1, cols):
            dot = 0.0
            for i in range(k, rows):
                dot += A[i, k] * A[i, j]
            f = 2.0 * dot / vnorm2
            for i in range(k, rows):
                A[i, j] -= f * A[i, k]
        dot = 0.0
        for i in range(k, rows):
            dot += A[i, k] * b[i]
        f = 2.0 * dot / vnorm2
        for i in range(k, rows):
            b[i] -= f * A[i, k]
        diag[k] = alpha
    for k in range(cols - 1, -1, -1):
        s = b[k]
        for j in range(k + 1, cols):
            s -= A[k, j] * out[j]
        out[k] = s / diag[k]
    return True


cdef class StationaritySystem:
    """Stationarity equations of the extremal problem and their Newton solve.

    ``mode == LAGRANGE``: unknowns ``(lam, Lam)``; equations are the
    gradient condition ``h_q/2 - sum_j Lam_j da_j/dlam_q`` followed by
    ``c_j - a_j``.

    ``mode == COMMUTANT``: unknowns ``lam``; equations are the components of
    ``i[H, rho]``, the trace and components of ``mu(rho)`` for the minimal
    polynomial ``mu`` of the target spectrum, and ``c_j - a_j``.
    """

    cdef readonly int d, n, m, mode, deg, n_unknowns, n_equations
    cdef double complex[:, :, ::1] G
    cdef double[::1] h, c, mu
    cdef double[:, ::1] comm
    cdef double complex[:, :, ::1] P
    cdef double complex[:, :, :, ::1] B
    cdef double[::1] p, a
    cdef double[:, ::1] gp, ga, Jmp
    cdef double[:, :, ::1] Hp, Ha

    def __init__(self, generators, h, constants, commutator=None, minpoly=None,
                 int mode=MODE_LAGRANGE):
        G = np.array(generators, dtype=np.complex128, order="C", copy=True)
        self.n = G.shape[0]
        self.d = G.shape[1]
        self.m = self.d - 1
        self.mode = mode
        self.G = G
        self.h = np.array(h, dtype=np.float64, copy=True)
        self.c = np.array(constants, dtype=np.float64, copy=True)
        if self.h.shape[0] != self.n or self.c.shape[0] != self.m:
            raise ValueError("coefficient lengths do not match the basis")
        if mode == MODE_COMMUTANT:
            if commutator is None or minpoly is None:
                raise ValueError("commutant mode needs the commutator matrix and minimal polynomial")
            self.comm = np.array(commutator, dtype=np.float64, order="C", copy=True)
            self.mu = np.array(minpoly, dtype=np.float64, copy=True)
            self.deg = self.mu.shape[0] - 1
            if self.deg < 1 or self.deg > self.d:
                raise ValueError("minimal polynomial degree out of range")
            self.n_unknowns = self.n
            self.n_equations = 2 * self.n + 1 + self.m
        elif mode == MODE_LAGRANGE:
            self.comm = np.zeros((1, 1))
            self.mu = np.zeros(1)
            self.deg = 0
            self.n_unknowns = self.n + self.m
            self.n_equations = self.n + self.m
        else:
            raise ValueError(f"unknown mode {mode}")
        d, n = self.d, self.n
        self.P = np.zeros((d + 1, d, d), dtype=np.complex128)
        self.B = np.zeros((d + 1, n, d, d), dtype=np.complex128)
        self.p = np.zeros(d + 1)
        self.a = np.zeros(d + 1)
        self.gp = np.zeros((d + 1, n))
        self.ga = np.zeros((d + 1, n))
        self.Jmp = np.zeros((n + 1, n))
        if mode == MODE_LAGRANGE:
            self.Hp = np.zeros((d + 1, n, n))
            self.Ha = np.zeros((d + 1, n, n))
        else:
            self.Hp = np.zeros((1, 1, 1))
            self.Ha = np.zeros((1, 1, 1))

    cdef void _evaluate(self, double[::1] x, double[::1] F, double[:, ::1] J) noexcept nogil:
        cdef Py_ssize_t d = self.d, n = self.n, m = self.m
        cdef Py_ssize_t i, j, k, q, r, s, t, nn, top, hmax
        cdef double complex acc
        cdef double val, sgn, w, invj
        cdef bint lagrange = self.mode == MODE_LAGRANGE

        # state and its powers
        for i in range(d):
            for j in range(d):
                acc = 0.0
                for k in range(n):
                    acc = acc + x[k] * self.G[k, i, j]
                self.P[1, i, j] = 0.5 * acc
                self.P[0, i, j] = 0.0
            self.P[1, i, i] = self.P[1, i, i] + 1.0 / d
            self.P[0, i, i] = 1.0
        for s in range(2, d + 1):
            for i in range(d):
                for j in range(d):
                    acc = 0.0
                    for k in range(d):
                        acc = acc + self.P[s - 1, i, k] * self.P[1, k, j]
                    self.P[s, i, j] = acc

        # B[s, r] = rho^s G_r
        top = d - 1
        if not lagrange and self.deg > top:
            top = self.deg
        for s in range(top + 1):
            for r in range(n):
                for i in range(d):
                    for j in range(d):
                        acc = 0.0
                        for k in range(d):
                            acc = acc + self.P[s, i, k] * self.G[r, k, j]
                        self.B[s, r, i, j] = acc

        # power sums and their gradients
        for s in range(1, d + 1):
            val = 0.0
            for i in range(d):
                val += self.P[s, i, i].real
            self.p[s] = val
            for q in range(n):
                val = 0.0
                for i in range(d):
                    val += self.B[s - 1, q, i, i].real
                self.gp[s, q] = 0.5 * s * val

        # second-order trace terms Re Tr(rho^s G_r rho^t G_q)
        if lagrange:
            hmax = d - 2
            for s in range(d + 1):
                for q in range(n):
                    for r in range(n):
                        self.Hp[s, q, r] = 0.0
        else:
            hmax = self.deg - 1
            for q in range(n + 1):
                for r in range(n):
                    self.Jmp[q, r] = 0.0
        for s in range(hmax + 1):
            for t in range(hmax - s + 1):
                for r in range(n):
                    for q in range(n):
                        val = 0.0
                        for i in range(d):
                            for j in range(d):
                                val += (self.B[s, r, i, j] * self.B[t, q, j, i]).real
                        if lagrange:
                            self.Hp[s + t + 2, q, r] += 0.25 * (s + t + 2) * val
                        else:
                            self.Jmp[1 + q, r] += 0.5 * self.mu[s + t + 1] * val

        # characteristic coefficients by the Newton-identity recursion
        self.a[0] = 1.0
        for q in range(n):
            self.ga[0, q] = 0.0
            if lagrange:
                for r in range(n):
                    self.Ha[0, q, r] = 0.0
        for j in range(1, d + 1):
            invj = 1.0 / j
            val = 0.0
            for nn in range(1, j + 1):
                sgn = 1.0 if nn % 2 == 1 else -1.0
                val += sgn * self.a[j - nn] * self.p[nn]
            self.a[j] = invj * val
            for q in range(n):
                val = 0.0
                for nn in range(1, j + 1):
                    sgn = 1.0 if nn % 2 == 1 else -1.0
                    val += sgn * (self.ga[j - nn, q] * self.p[nn] + self.a[j - nn] * self.gp[nn, q])
                self.ga[j, q] = invj * val
            if lagrange:
                for q in range(n):
                    for r in range(n):
                        val = 0.0
                        for nn in range(1, j + 1):
                            sgn = 1.0 if nn % 2 == 1 else -1.0
                            val += sgn * (self.Ha[j - nn, q, r] * self.p[nn]
                                          + self.ga[j - nn, q] * self.gp[nn, r]
                                          + self.gp[nn, q] * self.ga[j - nn, r]
                                          + self.a[j - nn] * self.Hp[nn, q, r])
                        self.Ha[j, q, r] = invj * val

        if lagrange:
            for q in range(n):
                val = 0.5 * self.h[q]
                for j in range(2, d + 1):
                    val -= x[n + j - 2] * self.ga[j, q]
                F[q] = val
                for r in range(n):
                    w = 0.0
                    for j in range(2, d + 1):
                        w -= x[n + j - 2] * self.Ha[j, q, r]
                    J[q, r] = w
                for j in range(2, d + 1):
                    J[q, n + j - 2] = -self.ga[j, q]
            for j in range(2, d + 1):
                F[n + j - 2] = self.c[j - 2] - self.a[j]
                for r in range(n):
                    J[n + j - 2, r] = -self.ga[j, r]
                for k in range(m):
                    J[n + j - 2, n + k] = 0.0
        else:
            for q in range(n):
                val = 0.0
                for k in range(n):
                    val += self.comm[q, k] * x[k]
                    J[q, k] = self.comm[q, k]
                F[q] = val
            # minimal polynomial rows: trace, then generator components
            val = 0.0
            for k in range(self.deg + 1):
                val += self.mu[k] * (self.p[k] if k > 0 else d)
            F[n] = val
            for r in range(n):
                w = 0.0
                for k in range(1, self.deg + 1):
                    w += self.mu[k] * self.gp[k, r]
                J[n, r] = w
            for q in range(n):
                val = 0.0
                for k in range(self.deg + 1):
                    for i in range(d):
                        val += self.mu[k] * self.B[k, q, i, i].real
                F[n + 1 + q] = val
                for r in range(n):
                    J[n + 1 + q, r] = self.Jmp[1 + q, r]
            for j in range(2, d + 1):
                F[2 * n + 1 + j - 2] = self.c[j - 2] - self.a[j]
                for r in range(n):
                    J[2 * n + 1 + j - 2, r] = -self.ga[j, r]

    def evaluate(self, x):
        """Return ``(F, J)`` at ``x`` as fresh arrays."""
        xa = np.ascontiguousarray(x, dtype=np.float64)
        if xa.shape[0] != self.n_unknowns:
            raise ValueError(f"expected {self.n_unknowns} unknowns, got {xa.shape[0]}")
        F = np.zeros(self.n_equations)
        J = np.zeros((self.n_equations, self.n_unknowns))
        self._evaluate(xa, F, J)
        return F, J

    def char_coefficients(self, x):
        """``a_0..a_d`` at ``x`` (side product of an evaluation)."""
        self.evaluate(x)
        return np.asarray(self.a).copy()

    def solve(self, x0, double ftol=1e-14, int max_iter=200, double bound=10.0):
        """Damped Newton from ``x0``.

        Returns ``(x, max_abs_residual, iterations, status)``."""
        cdef Py_ssize_t N = self.n_unknowns, E = self.n_equations, R = E + N
        cdef Py_ssize_t i, k, it = 0
        cdef int status = ST_MAX_ITER
        cdef double f2, f2n, mu = 0.0, jscale, rmax, smu
        cdef bint accepted, ok, inside
        xa = np.array(x0, dtype=np.float64, copy=True)
        if xa.shape[0] != N:
            raise ValueError(f"expected {N} unknowns, got {xa.shape[0]}")
        cdef double[::1] x = xa
        cdef double[::1] xn = np.zeros(N)
        cdef double[::1] F = np.zeros(E)
        cdef double[::1] Fn = np.zeros(E)
        cdef double[:, ::1] J = np.zeros((E, N))
        cdef double[:, ::1] Jn = np.zeros((E, N))
        cdef double[:, ::1] A = np.zeros((R, N))
        cdef double[::1] rhs = np.zeros(R)
        cdef double[::1] delta = np.zeros(N)
        cdef double[::1] diag = np.zeros(N)

        with nogil:
            self._evaluate(x, F, J)
            f2 = 0.0
            for i in range(E):
                f2 += F[i] * F[i]
            while True:
                rmax = 0.0
                for i in range(E):
                    if fabs(F[i]) > rmax:
                        rmax = fabs(F[i])
                if not isfinite(rmax):
                    status = ST_ESCAPED
                    break
                if rmax <= ftol:
                    status = ST_CONVERGED
                    break
                if it >= max_iter:
                    status = ST_MAX_ITER
                    break
                it += 1
                jscale = 0.0
                for k in range(N):
                    smu = 0.0
                    for i in range(E):
                        smu += J[i, k] * J[i, k]
                    if smu > jscale:
                        jscale = smu
                if jscale == 0.0:
                    jscale = 1.0
                accepted = False
                while True:
                    for i in range(E):
                        rhs[i] = -F[i]
                        for k in range(N):
                            A[i, k] = J[i, k]
                    smu = sqrt(mu)
                    for i in range(N):
                        rhs[E + i] = 0.0
                        for k in range(N):
                            A[E + i, k] = smu if i == k else 0.0
                    ok = _householder_lstsq(A, rhs, R, N, delta, diag)
                    if ok:
                        inside = True
                        for k in range(N):
                            xn[k] = x[k] + delta[k]
                            if not isfinite(xn[k]) or (k < self.n and fabs(xn[k]) > bound):
                                inside = False
                        if inside:
                            self._evaluate(xn, Fn, Jn)
                            f2n = 0.0
                            for i in range(E):
                                f2n += Fn[i] * Fn[i]
                            if isfinite(f2n) and f2n < f2:
                                for k in range(N):
                                    x[k] = xn[k]
                                for i in range(E):
                                    F[i] = Fn[i]
                                    for k in range(N):
                                        J[i, k] = Jn[i, k]
                                f2 = f2n
                                accepted = True
                                mu = mu * 0.1
                                if mu < 1e-14 * jscale:
                                    mu = 0.0
                                break
                    if mu == 0.0:
                        mu = 1e-12 * jscale
                    else:
                        mu = mu * 10.0
                    if mu > 1e10 * jscale:
                        break
                if not accepted:
                    status = ST_STALLED
                    break
            rmax = 0.0
            for i in range(E):
                if fabs(F[i]) > rmax:
                    rmax = fabs(F[i])

        return np.asarray(x).copy(), rmax, it, status
