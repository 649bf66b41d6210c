"""Entropy-energy inequalities bounded by the partition function.

With Z(beta) = Tr exp(-beta H) and the Gibbs-like state rho_H = e^H / Z(-1),
positivity of the relative entropy D(rho || rho_H) gives

    E + S <= ln Z(-1),    F = ln Z(-1) - E - S = D(rho || rho_H) >= 0,

and the same argument with -H gives -E + S <= ln Z(1).  Swapping the
arguments, D(rho_H || rho) >= 0 becomes

    Tr(H e^H) - Z(-1) ln Z(-1) >= Tr(e^H ln rho).

All matrix functions go through the eigendecomposition; partition sums are
shifted by the largest exponent.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .density import InadmissibleStateError, _clamped_spectrum, entropy_from_spectrum, relative_entropy
from .extremal_solver import qubit_closed_form
from .matrix_core import as_hermitian, eigh, from_eigen, trace_product
from .models import qubit_hamiltonian
from .policy import POLICY

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass
class InequalityReport:
    energy: float
    entropy: float
    bound: float          # ln Z(-1)
    slack: float          # bound - E - S
    diff_bound: float     # ln Z(1)
    diff_slack: float     # ln Z(1) + E - S
    reverse_lhs: float    # Tr(H e^H) - Z(-1) ln Z(-1)
    reverse_rhs: float    # Tr(e^H ln rho), -inf for singular rho
    relative_entropy: float
    passes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passes.values())


def log_partition(H, beta: float) -> float:
    w = eigh(H).eigenvalues
    return float(logsumexp(-beta * w))


def partition(H, beta: float) -> float:
    return float(np.exp(log_partition(H, beta)))


def gibbs_like(H) -> np.ndarray:
    """``e^H / Tr e^H``, computed with the top eigenvalue shifted to zero."""
    w, v = eigh(H)
    x = np.exp(w - w[-1])
    return from_eigen(x / x.sum(), v)


def reverse_bound_terms(rho, H) -> tuple[float, float]:
    """``(Tr(H e^H) - Z ln Z, Tr(e^H ln rho))`` with ``Z = Z(-1)``.

    e^H has full support, so any zero eigenvalue of rho makes the right
    side ``-inf`` and the inequality holds trivially.
    """
    rho = as_hermitian(rho)
    H = as_hermitian(H)
    if rho.shape != H.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {H.shape}")
    w, v = eigh(H)
    ew = np.exp(w)
    z = float(ew.sum())
    lhs = float(np.dot(w, ew) - z * np.log(z))
    r, u = eigh(rho)
    if r[0] < -POLICY.admissible:
        raise InadmissibleStateError(f"eigenvalue {r[0]:.3e} below -{POLICY.admissible:.0e}")
    if r[0] <= POLICY.support:
        return lhs, float("-inf")
    rhs = trace_product(from_eigen(ew, v), from_eigen(np.log(r), u))
    return lhs, rhs


def check_bounds(rho, H) -> InequalityReport:
    rho = as_hermitian(rho)
    H = as_hermitian(H)
    if rho.shape != H.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {H.shape}")
    s = entropy_from_spectrum(_clamped_spectrum(rho))
    e = trace_product(rho, H)
    w = eigh(H).eigenvalues
    bound = float(logsumexp(w))
    diff_bound = float(logsumexp(-w))
    lhs, rhs = reverse_bound_terms(rho, H)
    rel = relative_entropy(rho, gibbs_like(H))
    slack = bound - e - s
    diff_slack = diff_bound + e - s
    tol = POLICY.inequality_slack
    # both sides of the last inequality carry a factor Z(-1); compare relative to it
    scale = max(1.0, abs(lhs))
    passes = {
        "entropy_energy": slack >= -tol,
        "entropy_minus_energy": diff_slack >= -tol,
        "reverse_relative": lhs - rhs >= -tol * scale,
        "relative_entropy": rel >= -tol,
    }
    return InequalityReport(e, s, bound, slack, diff_bound, diff_slack, lhs, rhs, rel, passes)


def observable_bound(rho, A) -> float:
    """``ln Tr e^A - Tr(rho A) - S(rho)``, nonnegative for any Hermitian A."""
    rho = as_hermitian(rho)
    A = as_hermitian(A)
    if rho.shape != A.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {A.shape}")
    s = entropy_from_spectrum(_clamped_spectrum(rho))
    return float(logsumexp(eigh(A).eigenvalues)) - trace_product(rho, A) - s


def qubit_F_closed(h: float, delta: float) -> float:
    """Slack of the qubit extremal state on its higher-energy branch, as a
    function of the field strength h and purity parameter delta."""
    h = float(h)
    delta = float(delta)
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if h < 0.0:
        raise ValueError(f"h must be >= 0, got {h}")
    log_cosh = np.logaddexp(h / 2, -h / 2) - np.log(2.0)
    return 0.5 * (-delta * h + 2 * delta * np.arctanh(delta) + 2 * log_cosh
                  + np.log1p(-delta * delta))


def _upper_branch(H, delta: float):
    sols = qubit_closed_form(H, 0.25 * (1.0 - delta * delta))
    return sols[-1]


def qubit_F_matrix(h: float, delta: float) -> float:
    """Matrix-path counterpart of :func:`qubit_F_closed`: check_bounds on the
    upper extremal state of the traceless ``(h/2) sigma_z``."""
    H = qubit_hamiltonian(0.0, 0.0, 0.0, h)
    return check_bounds(_upper_branch(H, delta).state, H).slack


def surface_entropy_energy(h_values, delta_values) -> list[tuple[float, float, float]]:
    """Rows ``(h, delta, F)`` in row-major order, h outer."""
    return [(float(h), float(dl), qubit_F_closed(h, dl)) for h in h_values for dl in delta_values]


def surface_sigma_x(h2_values, h3_values, delta_values,
                    h1: float = 1 / np.sqrt(2.0)) -> list[tuple[float, float, float, float]]:
    """Rows ``(h2, h3, delta, F_x)``: the sigma_x bound on the upper extremal
    state of the qubit Hamiltonian with coefficients ``(0, h1, h2, h3)``."""
    rows = []
    for h2 in h2_values:
        for h3 in h3_values:
            H = qubit_hamiltonian(0.0, h1, h2, h3)
            for dl in delta_values:
                rho = _upper_branch(H, dl).state
                rows.append((float(h2), float(h3), float(dl), observable_bound(rho, PAULI["x"])))
    return rows


def default_grid(n: int, lo: float, hi: float) -> np.ndarray:
    if n < 1:
        raise ValueError("grid needs at least one point")
    if not hi >= lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    return np.linspace(lo, hi, n)
