from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vqlslab.numerics import (
    NotHermitianError,
    SingularMatrixError,
    condition_number,
    cosine_alignment,
    hermitian_eigenvalues,
    is_hermitian,
    jacobi_eigenvalues,
    rescale_to_unit_spectral_max,
)


def cubic_eigenvalues(a: np.ndarray) -> np.ndarray:
    """Closed-form (trigonometric) eigenvalues of a real symmetric 3x3 matrix."""
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    q = np.trace(a) / 3
    if p1 == 0:
        return np.sort(np.diag(a))
    p2 = (a[0, 0] - q) ** 2 + (a[1, 1] - q) ** 2 + (a[2, 2] - q) ** 2 + 2 * p1
    p = math.sqrt(p2 / 6)
    r = np.linalg.det((a - q * np.eye(3)) / p) / 2
    phi = math.acos(min(1.0, max(-1.0, r))) / 3
    e1 = q + 2 * p * math.cos(phi)
    e3 = q + 2 * p * math.cos(phi + 2 * math.pi / 3)
    return np.sort([e1, 3 * q - e1 - e3, e3])


def random_hermitian(rng, n, complex_=True):
    m = rng.normal(size=(n, n)) + (1j * rng.normal(size=(n, n)) if complex_ else 0)
    return (m + m.conj().T) / 2


def test_identity_and_pauli_condition_numbers():
    assert condition_number(np.eye(4)) == pytest.approx(1.0, abs=1e-15)
    assert condition_number(np.diag([1.0, -1.0])) == pytest.approx(1.0, abs=1e-15)
    assert condition_number(np.diag([2.0, 0.5])) == pytest.approx(4.0, abs=1e-14)


def test_singular_matrix_raises():
    with pytest.raises(SingularMatrixError):
        condition_number(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_not_hermitian_raises():
    with pytest.raises(NotHermitianError):
        hermitian_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert not is_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("seed", range(20))
def test_jacobi_matches_cubic_formula(seed):
    a = random_hermitian(np.random.default_rng(seed), 3, complex_=False)
    np.testing.assert_allclose(jacobi_eigenvalues(a), cubic_eigenvalues(a), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 5, 16])
def test_jacobi_matches_lapack(n):
    rng = np.random.default_rng(n)
    for complex_ in (False, True):
        a = random_hermitian(rng, n, complex_)
        np.testing.assert_allclose(
            hermitian_eigenvalues(a, method="jacobi"), hermitian_eigenvalues(a), atol=1e-11
        )


def test_jacobi_on_nearly_diagonal_input():
    # tiny off-diagonal entries must neither overflow nor stall the sweep loop
    a = np.diag([3.0, 1.0, 2.0]) + 1e-200 * np.ones((3, 3))
    np.testing.assert_allclose(jacobi_eigenvalues(a), [1.0, 2.0, 3.0])


def test_cosine_alignment():
    assert cosine_alignment([1, 0], [1, 1]) == pytest.approx(1 / math.sqrt(2))
    assert cosine_alignment([1, 2], [-2, -4]) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        cosine_alignment([0, 0], [1, 0])


def test_rescale_to_unit_spectral_max():
    m, scale = rescale_to_unit_spectral_max(np.diag([-4.0, 2.0]))
    assert scale == pytest.approx(4.0)
    np.testing.assert_allclose(m, np.diag([-1.0, 0.5]))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-10, 10)))
def test_condition_number_is_scale_invariant(m):
    a = m + m.T + 50 * np.eye(4)  # diagonally dominant, hence well conditioned
    assert condition_number(3.7 * a) == pytest.approx(condition_number(a), rel=1e-10)
    assert condition_number(a) >= 1.0
