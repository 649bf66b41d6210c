"""Dense Hermitian matrix helpers: validation, eigendecomposition and spectral
matrix functions.

Matrices are plain complex ``numpy`` arrays; ``as_hermitian`` is the gate
every public entry point passes its inputs through.
"""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from ._backend import kernels
from .policy import POLICY


class NotHermitianError(ValueError):
    """Input deviates from its conjugate transpose by more than the tolerance."""

    def __init__(self, max_asymmetry: float, tol: float):
        self.max_asymmetry = max_asymmetry
        super().__init__(
            f"matrix is not Hermitian: max |M - M^H| = {max_asymmetry:.3e} > {tol:.1e}")


class DomainError(ValueError):
    """A spectral function was applied outside its domain."""


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # orthonormal columns


def as_hermitian(m, tol: float = POLICY.construction) -> np.ndarray:
    """Validate ``m`` as a square Hermitian matrix of size >= 2 and return it
    as a complex array with the residual asymmetry averaged out."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 2:
        raise ValueError("dimension must be at least 2")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    asym = float(np.max(np.abs(a - a.conj().T)))
    scale = max(1.0, float(np.max(np.abs(a))))
    if asym > tol * scale:
        raise NotHermitianError(asym, tol * scale)
    return 0.5 * (a + a.conj().T)


def eigh(m) -> EigenDecomposition:
    """Ascending eigenvalues and orthonormal eigenvectors by cyclic Jacobi."""
    a = as_hermitian(m)
    w, v, _ = kernels.jacobi_eigh(a, POLICY.jacobi, POLICY.jacobi_max_sweeps)
    return EigenDecomposition(w, v)


def from_eigen(values, vectors) -> np.ndarray:
    """``V diag(values) V^H`` made exactly Hermitian."""
    out = (vectors * values) @ vectors.conj().T
    return 0.5 * (out + out.conj().T)


def mat_fn(m, f: Callable[[np.ndarray], np.ndarray], *, strict_log: bool = False) -> np.ndarray:
    """Apply a real function to the spectrum of ``m``.

    With ``strict_log=True`` every eigenvalue must exceed the admissibility
    tolerance; use it when ``f`` is a logarithm.
    """
    w, v = eigh(m)
    if strict_log and w[0] <= POLICY.admissible:
        raise DomainError(f"log of a matrix with eigenvalue {w[0]:.3e}")
    return from_eigen(np.asarray(f(w), dtype=float), v)


def expm(m) -> np.ndarray:
    return mat_fn(m, np.exp)


def logm(m) -> np.ndarray:
    return mat_fn(m, np.log, strict_log=True)


def trace_product(a, b) -> float:
    """Real part of ``Tr(AB)`` for Hermitian ``A`` and ``B``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.einsum("ij,ji->", a, b).real)
