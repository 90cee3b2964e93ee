from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from vqlslab import cost, problems
from vqlslab.circuit import simulate
from vqlslab.numerics import condition_number, jacobi_eigenvalues
from vqlslab.pauli import coefficients_real, reconstruct

GOLDEN = json.loads((Path(__file__).parent / "golden" / "instances.json").read_text())


def ising_oracle(n, J, eta):
    """Dense transverse-field chain built from explicit Kronecker products."""
    x = np.array([[0, 1], [1, 0]])
    z = np.diag([1, -1])

    def op(ops):
        m = np.eye(1)
        for q in range(n):
            m = np.kron(m, ops.get(q, np.eye(2)))
        return m

    a = sum(op({q: x}) for q in range(n)) + J * sum(op({q: z, q + 1: z}) for q in range(n - 1))
    return a + eta * np.eye(2**n)


@pytest.mark.parametrize("n,kappa", [(2, 2.3361), (4, 9.0756), (6, 13.617), (8, 20.159), (10, 30.375)])
def test_ising_condition_numbers(n, kappa):
    inst = problems.make_ising(n)
    assert inst.metadata["condition_number"] == pytest.approx(kappa, rel=1e-4)


def test_ising_matches_dense_oracle():
    for n in (2, 3, 5):
        inst = problems.make_ising(n, J=0.3, eta=4.0)
        raw = ising_oracle(n, 0.3, 4.0)
        xi = np.max(np.linalg.eigvalsh(raw))
        np.testing.assert_allclose(inst.dense(), raw / xi, atol=1e-14)
        assert inst.metadata["xi"] == pytest.approx(xi)
        assert inst.L == 2 * n
        np.testing.assert_allclose(inst.b, np.full(2**n, 2 ** (-n / 2)))
        np.testing.assert_allclose(simulate(inst.b_circuit), inst.b, atol=1e-14)


def test_ising_two_qubit_spectrum():
    # closed form: eta +- sqrt(4 + J^2) and eta +- J for eta = 5, J = 0.1
    inst = problems.make_ising(2)
    raw = np.sort(np.linalg.eigvalsh(inst.dense())) * inst.metadata["xi"]
    expected = np.sort([5 - math.sqrt(4.01), 5 + math.sqrt(4.01), 5.1, 4.9])
    np.testing.assert_allclose(raw, expected, atol=1e-12)


def test_ising_without_coupling_has_product_solution():
    inst = problems.make_ising(2, J=0.0)
    theta = np.full(2, np.pi / 2)  # RY(pi/2)|0> = |+>
    for kind in cost.CostKind:
        assert cost.cost(inst, theta, kind).value == pytest.approx(0.0, abs=1e-14)


def test_random_pauli_structure():
    inst = problems.make_random_pauli(3, seed=42)
    assert inst.L == 6
    assert all(set(p) <= set("IXZ") for p in inst.lcu.strings)
    assert coefficients_real(inst.lcu)
    assert np.max(np.abs(np.linalg.eigvalsh(inst.dense()))) == pytest.approx(1.0)
    assert np.linalg.norm(inst.b) == pytest.approx(1.0)


def test_random_pauli_golden():
    g = GOLDEN["random_pauli_n3_seed42"]
    inst = problems.make_random_pauli(3, seed=42)
    assert [p for _, p in g["terms"]] == inst.lcu.strings
    np.testing.assert_allclose([c for c, _ in g["terms"]], inst.lcu.coefficients.real, rtol=1e-12)
    np.testing.assert_allclose(g["b"], inst.b, rtol=1e-12)
    assert inst.metadata["scale"] == pytest.approx(g["scale"], rel=1e-12)
    assert inst.metadata["condition_number"] == pytest.approx(g["condition_number_jacobi"], rel=1e-10)


def test_banded_golden_and_padding():
    g = GOLDEN["banded_size12_bw3_seed7"]
    inst = problems.make_banded_synthetic(12, 3, seed=7)
    assert inst.n == 4 and inst.metadata["padded_size"] == 16 and inst.metadata["block_size"] == 12
    a = inst.dense()
    np.testing.assert_array_equal(a[12:, 12:], np.eye(4))
    assert not np.any(a[:12, 12:]) and not np.any(a[12:, :12])
    assert not np.any(inst.b[12:])
    assert inst.metadata["scale"] == pytest.approx(g["scale"], rel=1e-12)
    np.testing.assert_allclose(inst.b, g["b"], rtol=1e-12)
    np.testing.assert_allclose(np.diag(a), g["diagonal"], rtol=1e-12)
    assert inst.metadata["condition_number"] == pytest.approx(g["condition_number_jacobi"], rel=1e-10)


def test_bandwidth_zero_is_diagonal():
    a = problems.make_banded_synthetic(8, 0, seed=1).dense()
    np.testing.assert_array_equal(a, np.diag(np.diag(a)))


def test_band_structure():
    a = problems.make_banded_synthetic(16, 2, seed=3).dense()
    i, j = np.nonzero(a)
    assert np.max(np.abs(i - j)) == 2
    np.testing.assert_array_equal(a, a.T)


def test_extract_and_pad():
    rng = np.random.default_rng(0)
    block = rng.normal(size=(5, 5))
    block = block + block.T
    full = np.zeros((8, 8))
    full[:5, :5] = block
    full[5:, 5:] = np.diag([2.0, 3.0, 4.0])
    inst = problems.extract_and_pad(full, np.arange(8.0), (0, 5), (0, 5))
    assert inst.metadata["warnings"] == []
    assert inst.n == 3
    scale = np.max(np.abs(np.linalg.eigvalsh(block)))
    np.testing.assert_allclose(inst.dense()[:5, :5], block / scale)
    full[6, 5] = 1.0
    assert problems.extract_and_pad(full, np.arange(8.0), (0, 5), (0, 5)).metadata["warnings"]
    with pytest.raises(ValueError):
        problems.extract_and_pad(full, np.arange(8.0), (0, 5), (0, 4))


def test_non_hermitian_block_warns():
    inst = problems.scale_and_pad(np.array([[1.0, 2.0], [0.0, 3.0]]), [1.0, 1.0])
    assert any("not Hermitian" in w for w in inst.metadata["warnings"])
    assert not np.allclose(inst.dense(), inst.dense().T)


def test_constructed_instance_reuses_matrix():
    base = problems.make_random_pauli(3, seed=1)
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, 3 + 4)
    inst = problems.constructed_instance(base, 1, theta)
    assert inst.lcu is base.lcu
    np.testing.assert_allclose(reconstruct(inst.lcu), base.dense(), atol=1e-14)
    assert cost.cost(inst, theta).value == pytest.approx(0.0, abs=1e-12)


def test_generators_are_deterministic():
    for make in (
        lambda: problems.make_random_pauli(4, seed=9),
        lambda: problems.make_banded_synthetic(10, 2, seed=9),
        lambda: problems.make_ising(3),
    ):
        a, b = make(), make()
        np.testing.assert_array_equal(a.dense(), b.dense())
        np.testing.assert_array_equal(a.b, b.b)
        assert problems.dumps_manifest(a) == problems.dumps_manifest(b)


def test_make_instance_dispatch():
    assert problems.make_instance("ising", n=2).metadata["family"] == "ising"
    assert problems.make_instance("random-pauli", n=2, seed=1).metadata["family"] == "random-pauli"
    assert problems.make_instance("banded", size=6, bandwidth=1).n == 3
    with pytest.raises(ValueError):
        problems.make_instance("darcy", n=2)


def test_condition_number_agrees_with_jacobi():
    inst = problems.make_random_pauli(4, seed=2)
    ev = np.abs(jacobi_eigenvalues(inst.dense()))
    assert condition_number(inst.dense()) == pytest.approx(ev.max() / ev.min(), rel=1e-10)
