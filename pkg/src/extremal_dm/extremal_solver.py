"""Extremal density matrices: stationary points of <H> = Tr(H rho) over
states with prescribed characteristic coefficients a_j(rho) = c_j.

The Lagrange function is

    f(lam, Lam) = Tr(H rho(lam)) + sum_j Lam_j (c_j - a_j(lam))

and its stationarity system is ``h_q/2 - sum_j Lam_j da_j/dlam_q = 0``,
``c_j - a_j = 0``.  Every stationary point also satisfies the commutant
condition ``[H, rho] = 0`` (spectrum-preserving rotations leave the
constraints alone), and that system carries no multipliers.  The multistart
therefore searches on ``[H, rho] = 0``, ``mu(rho) = 0``, ``a = c`` with mu the
minimal polynomial of the target spectrum, which stays well conditioned when
target eigenvalues nearly coincide and the multipliers blow up like 1/gap.
When the target eigenvalues are distinct each hit is then polished on the
full Lagrange system.  When they repeat (pure states for d >= 3, the
maximally mixed state) da_j/dlam degenerates on the feasible set, so the
commutant residual is the certificate and least-squares multipliers are
reported for reference.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .density import (BlochState, PurityConstants, char_coeffs, cluster_roots,
                      entropy_from_spectrum, is_feasible)
from .matrix_core import as_hermitian, eigh
from .policy import POLICY
from .sampling import haar_unitary
from .su_basis import (GeneratorBasis, bloch_to_density, build_basis,
                       density_to_bloch, expand)


class InfeasibleConstantsError(ValueError):
    """No admissible state has the requested characteristic coefficients."""


class SolverError(RuntimeError):
    def __init__(self, message: str, best_residual: float):
        self.best_residual = best_residual
        super().__init__(f"{message} (best residual {best_residual:.3e})")


@dataclass(eq=False)
class ExtremalProblem:
    hamiltonian: np.ndarray
    basis: GeneratorBasis
    constants: PurityConstants

    def __post_init__(self):
        self.hamiltonian = as_hermitian(self.hamiltonian)
        d = self.hamiltonian.shape[0]
        if self.basis.dim != d:
            raise ValueError(f"basis is for d={self.basis.dim}, Hamiltonian is {d}x{d}")
        if self.constants.dim != d:
            raise ValueError(f"{len(self.constants.values)} purity constants do not fit d={d}")
        feas = is_feasible(self.constants, d, self.basis)
        if not feas.feasible:
            raise InfeasibleConstantsError(f"no admissible state has a_j = {self.constants.values}")
        self.spectrum = feas.spectrum
        self.witness = feas.witness
        self.coefficients = expand(self.hamiltonian, self.basis)
        self.roots = cluster_roots(self.spectrum)

    @classmethod
    def build(cls, hamiltonian, constants) -> "ExtremalProblem":
        h = as_hermitian(hamiltonian)
        if not isinstance(constants, PurityConstants):
            constants = PurityConstants(tuple(constants))
        return cls(h, build_basis(h.shape[0]), constants)

    @classmethod
    def _with_spectrum(cls, hamiltonian, basis, constants, spectrum) -> "ExtremalProblem":
        """Skip the feasibility search when the target spectrum is already known."""
        p = cls.__new__(cls)
        p.hamiltonian, p.basis, p.constants = hamiltonian, basis, constants
        p.spectrum = np.asarray(spectrum, dtype=float)
        p.witness = BlochState(basis.dim, density_to_bloch(np.diag(p.spectrum).astype(complex), basis))
        p.coefficients = expand(hamiltonian, basis)
        p.roots = cluster_roots(p.spectrum)
        return p

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def h(self) -> np.ndarray:
        return self.coefficients.coeffs

    @property
    def regular(self) -> bool:
        """True when the target spectrum has no repeated eigenvalue."""
        return len(self.roots) == self.dim

    def minimal_polynomial(self) -> np.ndarray:
        """Ascending coefficients of ``prod (x - r)`` over distinct target eigenvalues."""
        poly = np.poly([r for r, _ in self.roots])  # highest first
        return poly[::-1].copy()

    def commutator_matrix(self) -> np.ndarray:
        """``M[q, k] = Re Tr(i[H, L_k] L_q) / 2``, so ``M @ lam`` are the
        components of ``i[H, rho]``."""
        G = self.basis.generators
        H = self.hamiltonian
        comm = 1j * (np.einsum("ij,kjl->kil", H, G) - np.einsum("kij,jl->kil", G, H))
        return 0.5 * np.einsum("kij,qji->qk", comm, G).real

    def state(self, lam) -> np.ndarray:
        return bloch_to_density(lam, self.basis)

    def energy(self, lam) -> float:
        return self.coefficients.h0 / self.dim + 0.5 * float(np.dot(self.h, lam))


@dataclass(eq=False)
class ExtremalSolution:
    lambda_c: np.ndarray
    multipliers: np.ndarray
    energy: float
    residual: float
    entropy: float
    state: np.ndarray
    regular: bool = True            # certified by the Lagrange system itself
    lagrange_residual: float = 0.0  # max |stationarity_residual| with the reported multipliers
    degenerate: bool = False        # Hamiltonian proportional to the identity


@dataclass
class SolverOptions:
    seed: int = 0
    starts: int | None = None       # default 200 * d
    ftol: float = POLICY.newton_ftol
    max_iter: int = POLICY.newton_max_iter
    workers: int = 1

    def n_starts(self, d: int) -> int:
        return self.starts if self.starts is not None else 200 * d


# --- the Lagrange function and its derivatives (plain numpy, used to verify) ---

def _moment_derivatives(rho: np.ndarray, G: np.ndarray, top: int):
    """Power sums p_n and gradients dp_n/dlam_q for n = 0..top."""
    d = rho.shape[0]
    p = np.zeros(top + 1)
    dp = np.zeros((top + 1, G.shape[0]))
    p[0] = d
    power = np.eye(d, dtype=np.complex128)  # rho^(n-1)
    for n in range(1, top + 1):
        dp[n] = 0.5 * n * np.einsum("ij,qji->q", power, G).real
        power = power @ rho
        p[n] = np.trace(power).real
    return p, dp


def _coeff_gradients(rho: np.ndarray, G: np.ndarray, top: int):
    """a_0..a_top and their coherence-vector gradients via the Newton identities."""
    p, dp = _moment_derivatives(rho, G, top)
    a = np.zeros(top + 1)
    da = np.zeros((top + 1, G.shape[0]))
    a[0] = 1.0
    for j in range(1, top + 1):
        for n in range(1, j + 1):
            sign = (-1) ** (n - 1)
            a[j] += sign * a[j - n] * p[n]
            da[j] += sign * (da[j - n] * p[n] + a[j - n] * dp[n])
        a[j] /= j
        da[j] /= j
    return a, da


def constraint_gradient(state: BlochState, j: int, basis: GeneratorBasis | None = None) -> np.ndarray:
    """``da_j/dlam_q`` for q = 1..d^2-1."""
    d = state.dim
    if not 2 <= j <= d:
        raise ValueError(f"j must lie in [2, {d}], got {j}")
    basis = basis or build_basis(d)
    _, da = _coeff_gradients(bloch_to_density(state.lam, basis), basis.generators, j)
    return da[j]


def objective(p: ExtremalProblem, lam, multipliers) -> float:
    lam = np.asarray(lam, dtype=float)
    mult = np.asarray(multipliers, dtype=float)
    _check_lengths(p, lam, mult)
    rho = p.state(lam)
    a = char_coeffs(rho)
    return float(np.einsum("ij,ji->", p.hamiltonian, rho).real
                 + np.dot(mult, p.constants.as_array() - a))


def stationarity_residual(p: ExtremalProblem, lam, multipliers) -> np.ndarray:
    """Gradient components ``h_q/2 - sum_j Lam_j da_j/dlam_q`` followed by ``c_j - a_j``."""
    lam = np.asarray(lam, dtype=float)
    mult = np.asarray(multipliers, dtype=float)
    _check_lengths(p, lam, mult)
    a, da = _coeff_gradients(p.state(lam), p.basis.generators, p.dim)
    grad = 0.5 * p.h - mult @ da[2:]
    return np.concatenate([grad, p.constants.as_array() - a[2:]])


def commutant_residual(p: ExtremalProblem, lam) -> np.ndarray:
    """Components of ``i[H, rho]`` followed by ``c_j - a_j``."""
    lam = np.asarray(lam, dtype=float)
    rho = p.state(lam)
    comm = 1j * (p.hamiltonian @ rho - rho @ p.hamiltonian)
    comps = np.einsum("ij,qji->q", comm, p.basis.generators).real
    return np.concatenate([comps, p.constants.as_array() - char_coeffs(rho)])


def least_squares_multipliers(p: ExtremalProblem, lam) -> np.ndarray:
    _, da = _coeff_gradients(p.state(lam), p.basis.generators, p.dim)
    mult, *_ = np.linalg.lstsq(da[2:].T, 0.5 * p.h, rcond=1e-10)
    return mult


def _check_lengths(p, lam, mult):
    d = p.dim
    if lam.shape != (d * d - 1,) or mult.shape != (d - 1,):
        raise ValueError(f"expected {d*d - 1} coherence components and {d - 1} multipliers")


# --- solving ---

def _commutant_system(p: ExtremalProblem):
    return kernels.StationaritySystem(
        p.basis.generators, p.h, p.constants.as_array(),
        commutator=p.commutator_matrix(), minpoly=p.minimal_polynomial(),
        mode=kernels.COMMUTANT)


def _lagrange_system(p: ExtremalProblem):
    return kernels.StationaritySystem(
        p.basis.generators, p.h, p.constants.as_array(), mode=kernels.LAGRANGE)


def start_point(p: ExtremalProblem, seed: int, index: int) -> np.ndarray:
    """Feasible start: the target spectrum rotated by a seeded Haar unitary."""
    rng = np.random.default_rng([seed, index])
    u = haar_unitary(p.dim, rng)
    rho0 = (u * p.spectrum) @ u.conj().T
    return density_to_bloch(rho0, p.basis)


def _run_starts(p: ExtremalProblem, opts: SolverOptions, indices) -> list[tuple[int, np.ndarray, float]]:
    search = _commutant_system(p)
    out = []
    for i in indices:
        x, res, _, _ = search.solve(start_point(p, opts.seed, i), opts.ftol, opts.max_iter)
        out.append((i, x, res))
    return out


def _cluster_hits(runs, tol: float) -> list[np.ndarray]:
    """One representative (lowest residual, then lowest start index) per
    cluster of converged coherence vectors."""
    reps: list[tuple[float, int, np.ndarray]] = []
    for i, x, res in runs:
        if res > POLICY.solver:
            continue
        for k, (r, j, y) in enumerate(reps):
            if np.max(np.abs(x - y)) <= tol:
                if (res, i) < (r, j):
                    reps[k] = (res, i, x)
                break
        else:
            reps.append((res, i, x))
    return [x for _, _, x in reps]


def _finish(p: ExtremalProblem, lam: np.ndarray, mult: np.ndarray | None) -> ExtremalSolution | None:
    """Independent re-verification of a Newton candidate."""
    rho = p.state(lam)
    w = eigh(rho).eigenvalues
    if w[0] < -POLICY.admissible:
        return None
    if np.max(np.abs(char_coeffs(rho) - p.constants.as_array())) > POLICY.solver:
        return None
    if p.regular:
        lag = float(np.max(np.abs(stationarity_residual(p, lam, mult))))
        residual = lag
    else:
        mult = least_squares_multipliers(p, lam)
        lag = float(np.max(np.abs(stationarity_residual(p, lam, mult))))
        residual = float(np.max(np.abs(commutant_residual(p, lam))))
    if residual > POLICY.solver:
        return None
    return ExtremalSolution(
        lambda_c=lam, multipliers=np.asarray(mult, dtype=float), energy=p.energy(lam),
        residual=residual, entropy=entropy_from_spectrum(np.clip(w, 0.0, None)),
        state=rho, regular=p.regular, lagrange_residual=lag)


def _same(a: ExtremalSolution, b: ExtremalSolution) -> bool:
    if np.max(np.abs(a.lambda_c - b.lambda_c)) <= POLICY.dedup:
        return True
    return (abs(a.energy - b.energy) <= POLICY.dedup_energy
            and np.max(np.abs(a.state - b.state)) <= POLICY.dedup)


def _sort_key(s: ExtremalSolution):
    return (s.energy, tuple(s.lambda_c))


def solve_extremal(p: ExtremalProblem, opts: SolverOptions | None = None) -> list[ExtremalSolution]:
    """All stationary points reached from the seeded multistart, deduplicated
    and sorted by energy (then coherence vector)."""
    opts = opts or SolverOptions()
    n_starts = opts.n_starts(p.dim)
    if n_starts < 1:
        raise ValueError("need at least one start")
    indices = list(range(n_starts))
    if opts.workers > 1:
        chunks = [indices[k::opts.workers] for k in range(opts.workers)]
        with ThreadPoolExecutor(opts.workers) as pool:
            runs = [r for chunk in pool.map(lambda c: _run_starts(p, opts, c), chunks) for r in chunk]
        runs.sort(key=lambda r: r[0])
    else:
        runs = _run_starts(p, opts, indices)

    best = min(res for _, _, res in runs)
    polish = _lagrange_system(p) if p.regular else None
    kept: list[ExtremalSolution] = []
    for lam in _cluster_hits(runs, POLICY.dedup):
        mult = None
        if polish is not None:
            # multipliers grow like 1/gap near coinciding eigenvalues; the
            # commutant hit is already on the solution, so Newton only refines
            x0 = np.concatenate([lam, least_squares_multipliers(p, lam)])
            x, res, _, _ = polish.solve(x0, opts.ftol, opts.max_iter)
            if res > POLICY.solver:
                continue
            lam, mult = x[: len(lam)], x[len(lam):]
        sol = _finish(p, lam, mult)
        if sol is None:
            continue
        for k, other in enumerate(kept):
            if _same(sol, other):
                if sol.residual < other.residual:
                    kept[k] = sol
                break
        else:
            kept.append(sol)
    if not kept:
        raise SolverError(f"no stationary point found from {n_starts} starts", best)
    return sorted(kept, key=_sort_key)


def qubit_closed_form(hamiltonian, c2: float) -> list[ExtremalSolution]:
    """Both qubit extremals: ``lam = -/+ (delta/h) h_vec``, ``Lam = +/- h/delta``
    with ``delta = sqrt(1 - 4 c2)``, energies ``(h0 -/+ delta h)/2``."""
    H = as_hermitian(hamiltonian)
    if H.shape != (2, 2):
        raise ValueError("closed form is for 2x2 Hamiltonians")
    if not 0.0 <= c2 <= 0.25:
        raise ValueError(f"c2 must lie in [0, 1/4], got {c2}")
    basis = build_basis(2)
    h0, hv = expand(H, basis)
    h = float(np.linalg.norm(hv))
    delta = float(np.sqrt(max(0.0, 1.0 - 4.0 * c2)))
    problem = ExtremalProblem._with_spectrum(
        H, basis, PurityConstants((c2,)), [(1 + delta) / 2, (1 - delta) / 2])
    mixed = np.eye(2) / 2
    if h <= POLICY.construction:
        # every state with the target spectrum is stationary; report the one along z
        lam = np.array([0.0, 0.0, delta])
        return [ExtremalSolution(lam, np.zeros(1), h0 / 2, 0.0,
                                 entropy_from_spectrum([(1 + delta) / 2, (1 - delta) / 2]),
                                 bloch_to_density(lam, basis), regular=False, degenerate=True)]
    if delta == 0.0:
        mult = np.zeros(1)
        lag = float(np.max(np.abs(stationarity_residual(problem, np.zeros(3), mult))))
        res = float(np.max(np.abs(commutant_residual(problem, np.zeros(3)))))
        return [ExtremalSolution(np.zeros(3), mult, h0 / 2, res, float(np.log(2)),
                                 mixed, regular=False, lagrange_residual=lag)]
    out = []
    for sign in (1.0, -1.0):
        lam = -sign * delta / h * hv
        mult = np.array([sign * h / delta])
        res = float(np.max(np.abs(stationarity_residual(problem, lam, mult))))
        out.append(ExtremalSolution(
            lam, mult, 0.5 * (h0 - sign * delta * h), res,
            entropy_from_spectrum([(1 + delta) / 2, (1 - delta) / 2]),
            bloch_to_density(lam, basis), regular=True, lagrange_residual=res))
    return sorted(out, key=_sort_key)


def spectrum_report(p: ExtremalProblem, solutions: list[ExtremalSolution]) -> dict:
    """Compare extremal energies with the eigenvalues of H (pure constants)."""
    eig = eigh(p.hamiltonian).eigenvalues
    energies = np.array([s.energy for s in solutions])
    found, expected = len(energies), len(eig)
    if found == expected:
        disc = float(np.max(np.abs(np.sort(energies) - eig)))
    else:
        # distance from each eigenvalue to the nearest extremal energy
        disc = float(max(np.min(np.abs(energies - e)) for e in eig)) if found else float("inf")
    return {"energies": energies, "eigenvalues": eig, "found": found,
            "expected": expected, "max_discrepancy": disc}
