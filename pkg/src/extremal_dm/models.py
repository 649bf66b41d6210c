"""Hamiltonian constructors: generic qubit, spin-j matrices and the two-mode
condensate ``a Jz + b Jz^2 + c Jx``.

Spin states are ordered |j, m> with m descending, so Jz = diag(j, ..., -j).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def qubit_hamiltonian(h0: float, h1: float, h2: float, h3: float) -> np.ndarray:
    """``(1/2) [[h0 + h3, h1 - i h2], [h1 + i h2, h0 - h3]]``."""
    return 0.5 * np.array([[h0 + h3, h1 - 1j * h2],
                           [h1 + 1j * h2, h0 - h3]], dtype=np.complex128)


def _spin_dim(j) -> int:
    twice = Fraction(j) * 2
    if twice.denominator != 1 or twice < 1:
        raise ValueError(f"spin must be a positive half-integer, got {j}")
    d = int(twice) + 1
    if d > 32:
        raise ValueError(f"spin {j} gives dimension {d} > 32")
    return d


def spin_matrices(j) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(Jx, Jy, Jz)`` from the ladder operators."""
    d = _spin_dim(j)
    jj = (d - 1) / 2.0
    m = jj - np.arange(d)
    # <m+1| J+ |m> = sqrt(j(j+1) - m(m+1)); row k holds m = j - k
    jplus = np.zeros((d, d), dtype=np.complex128)
    for k in range(1, d):
        jplus[k - 1, k] = np.sqrt(jj * (jj + 1) - m[k] * (m[k] + 1))
    jminus = jplus.conj().T
    jx = 0.5 * (jplus + jminus)
    jy = -0.5j * (jplus - jminus)
    jz = np.diag(m).astype(np.complex128)
    return jx, jy, jz


@dataclass(frozen=True)
class BecParams:
    a: float
    b: float
    c: float
    j: float = 1.0

    def __post_init__(self):
        _spin_dim(self.j)

    @property
    def dim(self) -> int:
        return _spin_dim(self.j)


def bec_hamiltonian(p: BecParams) -> np.ndarray:
    jx, _, jz = spin_matrices(p.j)
    return p.a * jz + p.b * (jz @ jz) + p.c * jx
