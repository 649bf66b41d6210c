"""Pure-Python/numpy twin of the compiled ``_kernels`` module.

Same names, same signatures, same algorithms; used when the extension is
not built or when ``EXTREMAL_DM_PURE_PYTHON=1`` is set.
"""
from __future__ import annotations

import numpy as np

LAGRANGE = 0
COMMUTANT = 1

STATUS_CONVERGED = 0
STATUS_STALLED = 1
STATUS_MAX_ITER = 2
STATUS_ESCAPED = 3


def jacobi_eigh(a_in, tol=1e-12, max_sweeps=100):
    """Return ``(eigenvalues, eigenvectors, sweeps)`` with ascending eigenvalues."""
    a = np.array(a_in, dtype=np.complex128, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    a[np.diag_indices(n)] = a.diagonal().real
    scale = max(1.0, float(np.sqrt(np.sum(np.abs(a) ** 2))))
    iu = np.triu_indices(n, 1)
    sweep = 0
    while True:
        off = float(np.sqrt(2.0 * np.sum(np.abs(a[iu]) ** 2)))
        if off <= tol * scale or sweep >= max_sweeps:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = abs(a[p, q])
                if g == 0.0:
                    continue
                ph = a[p, q] / g
                phc = ph.conjugate()
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * g)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                x = a[:, p].copy()
                y = a[:, q].copy()
                a[:, p] = c * x - s * phc * y
                a[:, q] = s * ph * x + c * y
                x = a[p, :].copy()
                y = a[q, :].copy()
                a[p, :] = c * x - s * ph * y
                a[q, :] = s * phc * x + c * y
                a[p, p] = app - t * g
                a[q, q] = aqq + t * g
                a[p, q] = 0.0
                a[q, p] = 0.0
                x = v[:, p].copy()
                y = v[:, q].copy()
                v[:, p] = c * x - s * phc * y
                v[:, q] = s * ph * x + c * y
    if off > tol * scale:
        raise ArithmeticError(
            f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {off:.3e})")
    w = a.diagonal().real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order], sweep


class StationaritySystem:
    """Stationarity equations of the extremal problem and their Newton solve.

    See the compiled twin for the equation layout of each mode.
    """

    def __init__(self, generators, h, constants, commutator=None, minpoly=None,
                 mode=LAGRANGE):
        self.G = np.ascontiguousarray(generators, dtype=np.complex128)
        self.n, self.d = self.G.shape[0], self.G.shape[1]
        self.m = self.d - 1
        self.mode = mode
        self.h = np.asarray(h, dtype=np.float64)
        self.c = np.asarray(constants, dtype=np.float64)
        if self.h.shape[0] != self.n or self.c.shape[0] != self.m:
            raise ValueError("coefficient lengths do not match the basis")
        if mode == COMMUTANT:
            if commutator is None or minpoly is None:
                raise ValueError("commutant mode needs the commutator matrix and minimal polynomial")
            self.comm = np.asarray(commutator, dtype=np.float64)
            self.mu = np.asarray(minpoly, dtype=np.float64)
            self.deg = self.mu.shape[0] - 1
            if not 1 <= self.deg <= self.d:
                raise ValueError("minimal polynomial degree out of range")
            self.n_unknowns = self.n
            self.n_equations = 2 * self.n + 1 + self.m
        elif mode == LAGRANGE:
            self.deg = 0
            self.n_unknowns = self.n + self.m
            self.n_equations = self.n + self.m
        else:
            raise ValueError(f"unknown mode {mode}")
        self._a = np.zeros(self.d + 1)

    def _evaluate(self, x):
        d, n = self.d, self.n
        G = self.G
        lagrange = self.mode == LAGRANGE
        lam = x[:n]
        rho = np.eye(d) / d + 0.5 * np.einsum("k,kij->ij", lam, G)
        P = [np.eye(d, dtype=np.complex128), rho]
        for _ in range(2, d + 1):
            P.append(P[-1] @ rho)
        top = d - 1 if lagrange else max(d - 1, self.deg)
        B = np.stack([np.einsum("ik,rkj->rij", P[s], G) for s in range(top + 1)])
        traces_B = np.einsum("srii->sr", B).real

        p = np.zeros(d + 1)
        gp = np.zeros((d + 1, n))
        for s in range(1, d + 1):
            p[s] = np.trace(P[s]).real
            gp[s] = 0.5 * s * traces_B[s - 1]

        hmax = d - 2 if lagrange else self.deg - 1
        Hp = np.zeros((d + 1, n, n))
        Jmp = np.zeros((n + 1, n))
        for s in range(hmax + 1):
            for t in range(hmax - s + 1):
                # val[r, q] = Re Tr(rho^s G_r rho^t G_q)
                val = np.einsum("rij,qji->rq", B[s], B[t]).real
                if lagrange:
                    Hp[s + t + 2] += 0.25 * (s + t + 2) * val.T
                else:
                    Jmp[1:] += 0.5 * self.mu[s + t + 1] * val.T

        a = np.zeros(d + 1)
        ga = np.zeros((d + 1, n))
        Ha = np.zeros((d + 1, n, n)) if lagrange else None
        a[0] = 1.0
        for j in range(1, d + 1):
            for nn in range(1, j + 1):
                sgn = 1.0 if nn % 2 == 1 else -1.0
                a[j] += sgn * a[j - nn] * p[nn]
                ga[j] += sgn * (ga[j - nn] * p[nn] + a[j - nn] * gp[nn])
                if lagrange:
                    Ha[j] += sgn * (Ha[j - nn] * p[nn]
                                    + np.outer(ga[j - nn], gp[nn])
                                    + np.outer(gp[nn], ga[j - nn])
                                    + a[j - nn] * Hp[nn])
            a[j] /= j
            ga[j] /= j
            if lagrange:
                Ha[j] /= j
        self._a = a

        F = np.zeros(self.n_equations)
        J = np.zeros((self.n_equations, self.n_unknowns))
        if lagrange:
            mult = x[n:]
            F[:n] = 0.5 * self.h - mult @ ga[2:]
            J[:n, :n] = -np.einsum("j,jqr->qr", mult, Ha[2:])
            J[:n, n:] = -ga[2:].T
            F[n:] = self.c - a[2:]
            J[n:, :n] = -ga[2:]
        else:
            F[:n] = self.comm @ lam
            J[:n, :] = self.comm
            F[n] = self.mu[0] * d + self.mu[1:] @ p[1:self.deg + 1]
            J[n] = self.mu[1:] @ gp[1:self.deg + 1]
            F[n + 1:2 * n + 1] = self.mu @ traces_B[:self.deg + 1]
            J[n + 1:2 * n + 1] = Jmp[1:]
            F[2 * n + 1:] = self.c - a[2:]
            J[2 * n + 1:] = -ga[2:]
        return F, J

    def evaluate(self, x):
        """Return ``(F, J)`` at ``x`` as fresh arrays."""
        xa = np.asarray(x, dtype=np.float64)
        if xa.shape[0] != self.n_unknowns:
            raise ValueError(f"expected {self.n_unknowns} unknowns, got {xa.shape[0]}")
        return self._evaluate(xa)

    def char_coefficients(self, x):
        """``a_0..a_d`` at ``x`` (side product of an evaluation)."""
        self.evaluate(x)
        return self._a.copy()

    def solve(self, x0, ftol=1e-14, max_iter=200, bound=10.0):
        """Damped Newton from ``x0``.

        Returns ``(x, max_abs_residual, iterations, status)``."""
        N = self.n_unknowns
        x = np.array(x0, dtype=np.float64, copy=True)
        if x.shape[0] != N:
            raise ValueError(f"expected {N} unknowns, got {x.shape[0]}")
        F, J = self._evaluate(x)
        f2 = float(F @ F)
        mu = 0.0
        it = 0
        while True:
            rmax = float(np.max(np.abs(F)))
            if not np.isfinite(rmax):
                status = STATUS_ESCAPED
                break
            if rmax <= ftol:
                status = STATUS_CONVERGED
                break
            if it >= max_iter:
                status = STATUS_MAX_ITER
                break
            it += 1
            jscale = float(np.max(np.sum(J * J, axis=0))) or 1.0
            accepted = False
            while True:
                A = np.vstack([J, np.sqrt(mu) * np.eye(N)])
                rhs = np.concatenate([-F, np.zeros(N)])
                delta = _lstsq(A, rhs)
                if delta is not None:
                    xn = x + delta
                    inside = np.all(np.isfinite(xn)) and np.all(np.abs(xn[:self.n]) <= bound)
                    if inside:
                        Fn, Jn = self._evaluate(xn)
                        f2n = float(Fn @ Fn)
                        if np.isfinite(f2n) and f2n < f2:
                            x, F, J, f2 = xn, Fn, Jn, f2n
                            accepted = True
                            mu *= 0.1
                            if mu < 1e-14 * jscale:
                                mu = 0.0
                            break
                mu = 1e-12 * jscale if mu == 0.0 else mu * 10.0
                if mu > 1e10 * jscale:
                    break
            if not accepted:
                status = STATUS_STALLED
                break
        return x, float(np.max(np.abs(F))), it, status


def _lstsq(A, b):
    # same rank test as the compiled Householder QR
    q, r = np.linalg.qr(A)
    diag = np.abs(np.diag(r))
    cmax = float(np.max(np.linalg.norm(A, axis=0)))
    if cmax == 0.0 or np.any(diag <= 1e-13 * cmax):
        return None
    return np.linalg.solve(r, q.T @ b)
