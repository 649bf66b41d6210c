import itertools

import numpy as np
import pytest

from extremal_dm import extremal_solver as es
from extremal_dm.density import BlochState, PurityConstants, char_coeffs
from extremal_dm.extremal_solver import (ExtremalProblem, InfeasibleConstantsError, SolverError,
                                         SolverOptions, commutant_residual, constraint_gradient,
                                         objective, qubit_closed_form, solve_extremal,
                                         spectrum_report, start_point, stationarity_residual)
from extremal_dm.models import BecParams, bec_hamiltonian, qubit_hamiltonian
from extremal_dm.su_basis import build_basis

BEC = bec_hamiltonian(BecParams(0.3, 0.5, -1.0))

# permutation sums of the target spectrum over the eigenvalues of BEC, frozen
PURE_ENERGIES = [-0.8073931919, 0.4594100001, 1.3479831918]
MIXED_ENERGIES = [-0.0851342767, 0.0415460425, 0.1814376808, 0.3969753192, 0.6881589576, 0.7770162768]
NEAR_PURE_ENERGIES = [-0.7307244344, -0.7129529706, 0.4284004862, 0.4715080139, 1.2592164205, 1.2845524844]


def permutation_oracle(H, spectrum):
    e = np.linalg.eigvalsh(H)
    return sorted({round(float(np.dot(p, e)), 9) for p in itertools.permutations(spectrum)})


def test_problem_properties():
    p = ExtremalProblem.build(BEC, (0.29, 0.02))
    assert p.dim == 3 and p.regular
    np.testing.assert_allclose(p.spectrum, [0.5, 0.4, 0.1], atol=1e-12)
    np.testing.assert_allclose(char_coeffs(p.witness.matrix()), [0.29, 0.02], atol=1e-12)
    assert not ExtremalProblem.build(BEC, (0.0, 0.0)).regular
    assert not ExtremalProblem.build(BEC, (1 / 3, 1 / 27)).regular


def test_problem_validation():
    with pytest.raises(InfeasibleConstantsError):
        ExtremalProblem.build(BEC, (0.34, 0.0))
    with pytest.raises(ValueError):
        ExtremalProblem.build(BEC, (0.1,))
    with pytest.raises(ValueError):
        ExtremalProblem(BEC, build_basis(2), PurityConstants((0.1, 0.0)))


def test_minimal_polynomial_and_commutator():
    p = ExtremalProblem.build(BEC, (0.0, 0.0))
    mu = p.minimal_polynomial()  # roots 1 and 0: x^2 - x
    np.testing.assert_allclose(mu, [0, -1, 1], atol=1e-12)
    lam = start_point(p, 0, 1)
    rho = p.state(lam)
    comm = 1j * (p.hamiltonian @ rho - rho @ p.hamiltonian)
    comps = np.einsum("ij,qji->q", comm, p.basis.generators).real
    np.testing.assert_allclose(p.commutator_matrix() @ lam, comps, atol=1e-13)


def test_energy_matches_trace():
    p = ExtremalProblem.build(BEC, (0.29, 0.02))
    lam = start_point(p, 3, 7)
    assert p.energy(lam) == pytest.approx(np.trace(BEC @ p.state(lam)).real, abs=1e-14)


def test_start_points_are_feasible_and_seeded():
    p = ExtremalProblem.build(BEC, (0.29, 0.02))
    a = start_point(p, 5, 11)
    np.testing.assert_allclose(char_coeffs(p.state(a)), [0.29, 0.02], atol=1e-12)
    np.testing.assert_array_equal(a, start_point(p, 5, 11))
    assert not np.array_equal(a, start_point(p, 5, 12))


def test_constraint_gradient_finite_difference(rng):
    basis = build_basis(3)
    lam = rng.normal(size=8) * 0.15
    for j in (2, 3):
        g = constraint_gradient(BlochState(3, lam), j, basis)
        fd = np.zeros(8)
        for q in range(8):
            e = np.zeros(8)
            e[q] = 1e-6
            fd[q] = (char_coeffs(basis_state(lam + e))[j - 2] - char_coeffs(basis_state(lam - e))[j - 2]) / 2e-6
        np.testing.assert_allclose(g, fd, atol=1e-9)
    with pytest.raises(ValueError):
        constraint_gradient(BlochState(3, lam), 4)


def basis_state(lam):
    return BlochState(3, lam).matrix()


def test_objective_and_residual_shapes():
    p = ExtremalProblem.build(BEC, (0.29, 0.02))
    lam = start_point(p, 0, 0)
    # on the constraint surface the objective is the energy
    assert objective(p, lam, [3.0, -2.0]) == pytest.approx(p.energy(lam), abs=1e-12)
    assert stationarity_residual(p, lam, [0.0, 0.0]).shape == (10,)
    assert commutant_residual(p, lam).shape == (10,)
    with pytest.raises(ValueError):
        stationarity_residual(p, lam, [0.0])


def test_pure_qutrit_spectrum():
    p = ExtremalProblem.build(BEC, (0.0, 0.0))
    sols = solve_extremal(p)
    np.testing.assert_allclose([s.energy for s in sols], PURE_ENERGIES, atol=1e-9)
    np.testing.assert_allclose([s.energy for s in sols], np.linalg.eigvalsh(BEC), atol=1e-12)
    for s in sols:
        assert not s.regular and s.residual <= 1e-8
        assert s.entropy == pytest.approx(0.0, abs=1e-7)
    rep = spectrum_report(p, sols)
    assert rep["found"] == rep["expected"] == 3 and rep["max_discrepancy"] < 1e-12


@pytest.mark.parametrize("c, frozen", [((0.29, 0.02), MIXED_ENERGIES),
                                       ((1921 / 40000, 399 / 800000), NEAR_PURE_ENERGIES)])
def test_mixed_qutrit_branches(c, frozen):
    p = ExtremalProblem.build(BEC, c)
    sols = solve_extremal(p)
    energies = [s.energy for s in sols]
    np.testing.assert_allclose(energies, frozen, atol=1e-9)
    np.testing.assert_allclose(energies, permutation_oracle(BEC, p.spectrum), atol=1e-8)
    for s in sols:
        assert s.regular and s.residual <= 1e-8
        np.testing.assert_allclose(stationarity_residual(p, s.lambda_c, s.multipliers), 0, atol=1e-8)
        # every extremal commutes with H
        np.testing.assert_allclose(BEC @ s.state - s.state @ BEC, 0, atol=1e-8)


def test_maximally_mixed_is_single_solution():
    p = ExtremalProblem.build(BEC, (1 / 3, 1 / 27))
    sols = solve_extremal(p)
    assert len(sols) == 1
    np.testing.assert_allclose(sols[0].state, np.eye(3) / 3, atol=1e-7)
    assert sols[0].energy == pytest.approx(2 * 0.5 / 3, abs=1e-9)
    assert sols[0].residual <= 1e-8
    # every constraint gradient vanishes at I/3, so no multipliers satisfy
    # the Lagrange system there: its residual is max |h_q| / 2
    for mult in ([0.0, 0.0], [10.0, -3.0]):
        res = stationarity_residual(p, np.zeros(8), mult)
        assert np.max(np.abs(res)) == pytest.approx(np.max(np.abs(p.h)) / 2, abs=1e-15)
    assert sols[0].lagrange_residual > 0.1


def test_solutions_sorted_and_deterministic():
    p = ExtremalProblem.build(BEC, (0.29, 0.02))
    a = solve_extremal(p, SolverOptions(seed=4, starts=200))
    b = solve_extremal(p, SolverOptions(seed=4, starts=200))
    assert [s.energy for s in a] == [s.energy for s in b]
    assert [s.energy for s in a] == sorted(s.energy for s in a)


def test_threaded_run_matches_serial():
    p = ExtremalProblem.build(BEC, (0.29, 0.02))
    a = solve_extremal(p, SolverOptions(starts=120))
    b = solve_extremal(p, SolverOptions(starts=120, workers=3))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.lambda_c, y.lambda_c)


def test_python_backend_reaches_same_solutions(monkeypatch):
    from extremal_dm import _backend
    monkeypatch.setattr(es, "kernels", _backend.python_kernels)
    p = ExtremalProblem.build(BEC, (0.29, 0.02))
    sols = solve_extremal(p, SolverOptions(starts=150))
    np.testing.assert_allclose([s.energy for s in sols], MIXED_ENERGIES, atol=1e-9)


def test_solver_failure_reports_best_residual():
    p = ExtremalProblem.build(BEC, (0.29, 0.02))
    with pytest.raises(SolverError) as info:
        solve_extremal(p, SolverOptions(starts=3, max_iter=1))
    assert info.value.best_residual > 1e-8
    with pytest.raises(ValueError):
        solve_extremal(p, SolverOptions(starts=0))


def test_qubit_closed_form_branches():
    H = qubit_hamiltonian(1.0, np.sqrt(2), np.e, np.pi)
    h = np.sqrt(2 + np.e**2 + np.pi**2)
    lo, hi = qubit_closed_form(H, 0.0)
    assert lo.energy == pytest.approx((1 - h) / 2, abs=1e-12)
    assert hi.energy == pytest.approx((1 + h) / 2, abs=1e-12)
    assert lo.multipliers[0] == pytest.approx(h) and hi.multipliers[0] == pytest.approx(-h)
    c2 = 0.16
    delta = np.sqrt(1 - 4 * c2)
    lo, hi = qubit_closed_form(H, c2)
    assert hi.energy - lo.energy == pytest.approx(delta * h)
    np.testing.assert_allclose(char_coeffs(lo.state), [c2], atol=1e-14)
    assert lo.residual <= 1e-12


def test_qubit_closed_form_edges():
    H = qubit_hamiltonian(1.0, 0.3, 0.0, 0.4)
    (only,) = qubit_closed_form(H, 0.25)
    np.testing.assert_allclose(only.state, np.eye(2) / 2)
    assert only.energy == 0.5 and not only.regular
    (flat,) = qubit_closed_form(qubit_hamiltonian(2.0, 0, 0, 0), 0.09)
    assert flat.degenerate and flat.energy == 1.0
    np.testing.assert_allclose(char_coeffs(flat.state), [0.09], atol=1e-14)
    with pytest.raises(ValueError):
        qubit_closed_form(H, 0.3)
    with pytest.raises(ValueError):
        qubit_closed_form(np.eye(3), 0.1)


def test_spectrum_report_counts_missing_branch():
    p = ExtremalProblem.build(BEC, (0.0, 0.0))
    sols = solve_extremal(p)[:2]
    rep = spectrum_report(p, sols)
    assert rep["found"] == 2 and rep["expected"] == 3 and rep["max_discrepancy"] > 0.5
