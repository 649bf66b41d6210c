"""Seeded random matrices and states."""
from __future__ import annotations

import numpy as np


def ginibre(d: int, rng: np.random.Generator, cols: int | None = None) -> np.ndarray:
    cols = d if cols is None else cols
    return rng.standard_normal((d, cols)) + 1j * rng.standard_normal((d, cols))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(d, rng))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    x = ginibre(d, rng)
    return 0.5 * scale * (x + x.conj().T)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Induced-measure state ``W W^H / Tr``; ``rank`` below ``d`` gives singular states."""
    w = ginibre(d, rng, rank or d)
    rho = w @ w.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)
