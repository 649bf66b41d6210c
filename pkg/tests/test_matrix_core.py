import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from extremal_dm.matrix_core import (DomainError, NotHermitianError, as_hermitian, eigh,
                                     expm, from_eigen, logm, mat_fn, trace_product)
from extremal_dm.sampling import random_density, random_hermitian


def test_as_hermitian_accepts_and_symmetrizes():
    m = np.array([[1.0, 2 - 1j], [2 + 1j, -3.0]])
    out = as_hermitian(m)
    assert out.dtype == np.complex128
    np.testing.assert_array_equal(out, m)


def test_as_hermitian_rejects_asymmetric():
    with pytest.raises(NotHermitianError) as info:
        as_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert info.value.max_asymmetry == pytest.approx(1.0)


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros((1, 1)), np.zeros(4),
                                 np.array([[np.nan, 0], [0, 1]])])
def test_as_hermitian_rejects_bad_shapes_and_values(bad):
    with pytest.raises(ValueError):
        as_hermitian(bad)


def test_eigh_known_spectrum():
    w, v = eigh(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(w, [1.0, 3.0], atol=1e-14)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(2), atol=1e-14)


def test_eigh_repeated_eigenvalues():
    w, v = eigh(np.eye(4) * 2.5)
    np.testing.assert_allclose(w, 2.5)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(4), atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(d=st.integers(2, 8), seed=st.integers(0, 2**32 - 1))
def test_eigh_matches_lapack(d, seed):
    a = random_hermitian(d, np.random.default_rng(seed), scale=3.0)
    w, v = eigh(a)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-11)
    np.testing.assert_allclose(from_eigen(w, v), a, atol=1e-11)
    assert np.all(np.diff(w) >= 0)


def test_expm_logm_roundtrip(rng):
    rho = random_density(4, rng)
    np.testing.assert_allclose(expm(logm(rho)), rho, atol=1e-12)


def test_expm_diagonal():
    np.testing.assert_allclose(expm(np.diag([0.0, np.log(2.0)])), np.diag([1.0, 2.0]), atol=1e-14)


def test_logm_requires_positive():
    with pytest.raises(DomainError):
        logm(np.diag([1.0, 0.0]))


def test_mat_fn_applies_to_spectrum():
    out = mat_fn(np.diag([1.0, 4.0]), np.sqrt)
    np.testing.assert_allclose(out, np.diag([1.0, 2.0]), atol=1e-14)


def test_trace_product():
    a = np.array([[1, 1j], [-1j, 2]])
    assert trace_product(a, np.eye(2)) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        trace_product(a, np.eye(3))
