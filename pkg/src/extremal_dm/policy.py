"""Numeric tolerances shared by the library, the solver and the tests."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class NumericPolicy:
    construction: float = 1e-12     # Hermiticity / tracelessness of built matrices
    reconstruction: float = 1e-10   # eigen-reconstruction, round trips
    solver: float = 1e-8            # accepted stationarity residual
    admissible: float = 1e-10       # most negative eigenvalue still treated as 0
    support: float = 1e-12          # eigenvalue below which sigma's support ends
    support_leak: float = 1e-10     # weight of rho allowed outside that support
    jacobi: float = 1e-12           # off-diagonal Frobenius norm at convergence
    jacobi_max_sweeps: int = 100
    dedup: float = 1e-6             # max-abs coherence-vector distance of duplicates
    dedup_energy: float = 1e-8
    root_cluster: float = 1e-6      # target eigenvalues closer than this are repeated
    newton_ftol: float = 1e-14
    newton_max_iter: int = 200
    inequality_slack: float = 1e-9


POLICY = NumericPolicy()
