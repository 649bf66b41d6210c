"""Generalized Gell-Mann generators of SU(d) and the coefficient maps

    M = (h0/d) I + 1/2 sum_k h_k L_k,   h0 = Tr M,   h_k = Tr(M L_k).

Ordering: symmetric off-diagonal generators ``E_jk + E_kj`` in lexicographic
``(j, k)`` order, then antisymmetric ``-i(E_jk - E_kj)`` in the same order,
then the diagonal chain ``sqrt(2/(k(k+1))) diag(1, ..., 1, -k, 0, ...)``.
For d=2 this is (sigma_x, sigma_y, sigma_z); for d=3 the coherence vector
lands as real off-diagonal parts (1-3), imaginary parts (4-6), diagonal (7-8).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import NamedTuple

import numpy as np

ORDERING = "sym-antisym-diag"


@dataclass(frozen=True, eq=False)
class GeneratorBasis:
    dim: int
    generators: np.ndarray  # (d*d - 1, d, d), read-only
    ordering: str = ORDERING

    def __len__(self) -> int:
        return self.generators.shape[0]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.generators[k]


class CoefficientForm(NamedTuple):
    h0: float
    coeffs: np.ndarray


@lru_cache(maxsize=None)
def build_basis(d: int) -> GeneratorBasis:
    """Trace-orthogonal (``Tr(L_j L_k) = 2 delta_jk``) traceless Hermitian generators."""
    d = int(d)
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    if d > 32:
        raise ValueError(f"dimension {d} exceeds the supported maximum of 32")
    pairs = list(combinations(range(d), 2))
    gens = []
    for j, k in pairs:
        g = np.zeros((d, d), dtype=np.complex128)
        g[j, k] = g[k, j] = 1.0
        gens.append(g)
    for j, k in pairs:
        g = np.zeros((d, d), dtype=np.complex128)
        g[j, k] = -1j
        g[k, j] = 1j
        gens.append(g)
    for k in range(1, d):
        diag = np.zeros(d)
        diag[:k] = 1.0
        diag[k] = -k
        gens.append(np.diag(np.sqrt(2.0 / (k * (k + 1))) * diag).astype(np.complex128))
    arr = np.stack(gens)
    arr.setflags(write=False)
    return GeneratorBasis(d, arr)


def _check_dim(m: np.ndarray, basis: GeneratorBasis) -> None:
    if m.shape != (basis.dim, basis.dim):
        raise ValueError(f"dimension mismatch: matrix {m.shape}, basis d={basis.dim}")


def expand(m, basis: GeneratorBasis) -> CoefficientForm:
    m = np.asarray(m, dtype=np.complex128)
    _check_dim(m, basis)
    h0 = float(np.trace(m).real)
    coeffs = np.einsum("ij,kji->k", m, basis.generators).real
    return CoefficientForm(h0, coeffs)


def reconstruct(c: CoefficientForm, basis: GeneratorBasis) -> np.ndarray:
    coeffs = np.asarray(c.coeffs, dtype=float)
    if coeffs.shape != (len(basis),):
        raise ValueError(f"expected {len(basis)} coefficients, got {coeffs.shape}")
    d = basis.dim
    return (c.h0 / d) * np.eye(d) + 0.5 * np.einsum("k,kij->ij", coeffs, basis.generators)


def bloch_to_density(lam, basis: GeneratorBasis) -> np.ndarray:
    """Unit-trace Hermitian matrix for a coherence vector (not necessarily positive)."""
    return reconstruct(CoefficientForm(1.0, lam), basis)


def density_to_bloch(rho, basis: GeneratorBasis) -> np.ndarray:
    return expand(rho, basis).coeffs
