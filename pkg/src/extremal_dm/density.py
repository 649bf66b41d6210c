"""Density-matrix semantics on coherence vectors: trace moments, the
characteristic coefficients a_j (elementary symmetric polynomials of the
spectrum), admissibility, feasibility of purity constants, and entropies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .matrix_core import as_hermitian, eigh
from .policy import POLICY
from .su_basis import GeneratorBasis, bloch_to_density, build_basis, density_to_bloch


class InadmissibleStateError(ValueError):
    """Matrix has an eigenvalue below the admissibility tolerance."""


@dataclass(frozen=True, eq=False)
class BlochState:
    dim: int
    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if lam.shape != (self.dim * self.dim - 1,):
            raise ValueError(f"coherence vector for d={self.dim} needs {self.dim**2 - 1} entries")
        if not np.all(np.isfinite(lam)):
            raise ValueError("coherence vector has non-finite entries")
        object.__setattr__(self, "lam", lam)

    @classmethod
    def from_matrix(cls, rho) -> "BlochState":
        rho = as_hermitian(rho)
        return cls(rho.shape[0], density_to_bloch(rho, build_basis(rho.shape[0])))

    def matrix(self) -> np.ndarray:
        return bloch_to_density(self.lam, build_basis(self.dim))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.lam))

    def is_admissible(self) -> bool:
        return is_admissible(self.matrix())


@dataclass(frozen=True)
class PurityConstants:
    """Targets ``(c_2, ..., c_d)`` for the characteristic coefficients."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("need at least c_2")
        if any(not np.isfinite(v) for v in vals):
            raise ValueError("purity constants must be finite")
        if any(v < 0 for v in vals):
            raise ValueError(f"purity constants must be >= 0, got {vals}")
        if len(vals) == 1 and vals[0] > 0.25:
            raise ValueError(f"qubit purity constant must lie in [0, 1/4], got {vals[0]}")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.values) + 1

    @classmethod
    def pure(cls, d: int) -> "PurityConstants":
        return cls((0.0,) * (d - 1))

    @classmethod
    def from_spectrum(cls, spectrum) -> "PurityConstants":
        e = elementary_symmetric(spectrum)
        return cls(tuple(max(v, 0.0) for v in e[2:]))

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


class Feasibility(NamedTuple):
    feasible: bool
    witness: BlochState | None
    spectrum: np.ndarray | None   # descending target eigenvalues


def purity_moments(rho, n_max: int) -> list[float]:
    """``[Tr rho, Tr rho^2, ..., Tr rho^n_max]``."""
    rho = np.asarray(rho, dtype=np.complex128)
    out = []
    power = np.eye(rho.shape[0], dtype=np.complex128)
    for _ in range(n_max):
        power = power @ rho
        out.append(float(np.trace(power).real))
    return out


def coeffs_from_moments(moments) -> np.ndarray:
    """Newton-identity recursion ``a_0..a_n`` from power sums ``p_1..p_n``."""
    p = [0.0] + list(moments)
    a = [1.0]
    for j in range(1, len(p)):
        acc = 0.0
        for n in range(1, j + 1):
            acc += (-1) ** (n - 1) * a[j - n] * p[n]
        a.append(acc / j)
    return np.array(a)


def char_coeffs(rho) -> np.ndarray:
    """Characteristic coefficients ``a_2..a_d`` of a unit-trace matrix."""
    rho = np.asarray(rho, dtype=np.complex128)
    return coeffs_from_moments(purity_moments(rho, rho.shape[0]))[2:]


def elementary_symmetric(values) -> np.ndarray:
    """``e_0..e_n`` of ``values`` by the product expansion (no traces involved)."""
    e = np.zeros(len(values) + 1)
    e[0] = 1.0
    for x in values:
        e[1:] = e[1:] + x * e[:-1]
    return e


def is_admissible(rho, tol: float = POLICY.admissible) -> bool:
    return bool(eigh(rho).eigenvalues[0] >= -tol)


def is_admissible_by_coeffs(rho, tol: float = POLICY.admissible) -> bool:
    """Positivity test through ``a_j >= 0`` (Descartes' rule on the spectrum)."""
    return bool(np.all(char_coeffs(as_hermitian(rho)) >= -tol))


def char_polynomial(c) -> np.ndarray:
    """Highest-first coefficients of ``x^d - x^(d-1) + c_2 x^(d-2) - ...``."""
    vals = c.values if isinstance(c, PurityConstants) else tuple(c)
    coeffs = [1.0, -1.0]
    for j, cj in enumerate(vals, start=2):
        coeffs.append((-1) ** j * cj)
    return np.array(coeffs)


def real_roots(coeffs, tol: float = 1e-12) -> np.ndarray:
    """Real roots, with multiplicity, of a real polynomial (highest-first).

    Critical points come from the derivative recursively; each monotone
    stretch between them is bracketed by sign change, and a critical point
    where the polynomial vanishes is a multiple root.
    """
    p = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    deg = len(p) - 1
    if deg < 1:
        return np.array([])
    p = p / p[0]
    if deg == 1:
        return np.array([-p[1]])
    scale = float(np.max(np.abs(p)))
    crit = real_roots(np.polyder(p), tol)
    distinct: list[list[float]] = []
    for x in crit:
        if distinct and abs(x - distinct[-1][0]) <= 1e-9 * max(1.0, abs(x)):
            distinct[-1][1] += 1
        else:
            distinct.append([float(x), 1])
    bound = 1.0 + float(np.max(np.abs(p[1:])))
    roots: list[float] = []
    touching = set()
    for i, (x, mult) in enumerate(distinct):
        if abs(np.polyval(p, x)) <= tol * scale:
            roots.extend([x] * (mult + 1))
            touching.add(i)
    knots = [-bound] + [x for x, _ in distinct] + [bound]
    for i in range(len(knots) - 1):
        # knot i+1 is distinct[i]; knot i is distinct[i-1]
        if (i - 1) in touching or i in touching:
            continue
        lo, hi = knots[i], knots[i + 1]
        flo, fhi = np.polyval(p, lo), np.polyval(p, hi)
        if flo == 0.0:
            roots.append(lo)
        elif flo * fhi < 0:
            roots.append(brentq(lambda t: np.polyval(p, t), lo, hi, xtol=1e-15, rtol=1e-15))
    return np.sort(np.array(roots))


def target_spectrum(c: PurityConstants) -> np.ndarray | None:
    """Descending eigenvalues whose characteristic coefficients are ``c``,
    or None when no admissible spectrum exists."""
    d = c.dim
    roots = real_roots(char_polynomial(c))
    if len(roots) != d or roots[0] < -POLICY.admissible:
        return None
    spec = np.clip(roots, 0.0, None)[::-1]
    if np.max(np.abs(elementary_symmetric(spec)[2:] - c.as_array())) > POLICY.solver:
        return None
    return spec


def is_feasible(c: PurityConstants, d: int | None = None,
                basis: GeneratorBasis | None = None) -> Feasibility:
    """Constructive check: a diagonal witness state attaining ``c`` or a refusal."""
    if d is not None and d != c.dim:
        raise ValueError(f"{len(c.values)} constants do not fit d={d}")
    basis = basis or build_basis(c.dim)
    spec = target_spectrum(c)
    if spec is None:
        return Feasibility(False, None, None)
    witness = BlochState(c.dim, density_to_bloch(np.diag(spec).astype(complex), basis))
    return Feasibility(True, witness, spec)


def cluster_roots(spectrum, tol: float = POLICY.root_cluster) -> list[tuple[float, int]]:
    """Group nearly equal eigenvalues into ``(value, multiplicity)`` pairs."""
    groups: list[list[float]] = []
    for x in sorted(spectrum, reverse=True):
        if groups and abs(groups[-1][-1] - x) <= tol:
            groups[-1].append(x)
        else:
            groups.append([x])
    return [(float(np.mean(g)), len(g)) for g in groups]


def _clamped_spectrum(rho) -> np.ndarray:
    w = eigh(rho).eigenvalues
    if w[0] < -POLICY.admissible:
        raise InadmissibleStateError(f"eigenvalue {w[0]:.3e} below -{POLICY.admissible:.0e}")
    return np.clip(w, 0.0, None)


def entropy_from_spectrum(w) -> float:
    """``-sum w ln w`` with ``0 ln 0 = 0``."""
    w = np.asarray(w, dtype=float)
    nz = w[w > 0.0]
    return float(-np.sum(nz * np.log(nz))) + 0.0  # no negative zero


def von_neumann_entropy(rho) -> float:
    return entropy_from_spectrum(_clamped_spectrum(rho))


def relative_entropy(rho, sigma) -> float:
    """``Tr(rho ln rho - rho ln sigma)``; ``inf`` when rho leaks outside sigma's support."""
    rho = as_hermitian(rho)
    sigma = as_hermitian(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    r = _clamped_spectrum(rho)
    ws, vs = eigh(sigma)
    if ws[0] < -POLICY.admissible:
        raise InadmissibleStateError(f"eigenvalue {ws[0]:.3e} below -{POLICY.admissible:.0e}")
    # diagonal of rho in sigma's eigenbasis
    weights = np.einsum("ia,ij,ja->a", vs.conj(), rho, vs).real
    null = ws < POLICY.support
    if np.sum(weights[null]) > POLICY.support_leak:
        return float("inf")
    cross = float(np.sum(weights[~null] * np.log(ws[~null])))
    return -entropy_from_spectrum(r) - cross
