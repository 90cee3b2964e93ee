"""Problem instances: Ising, random-Pauli, and scaled/padded sparse blocks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics, pauli
from .circuit import Circuit, prepare_state
from .matrix_market import load_matrix_market  # noqa: F401  (ingestion entry point)
from .numerics import SingularMatrixError


@dataclass(eq=False)
class ProblemInstance:
    """A linear system ``A x ∝ b`` ready for VQLS.

    ``A`` is dense (``A_dense``) and/or an LCU; ``b`` is a real unit vector and
    ``b_circuit`` prepares it from ``|0...0>``. Instances compare by identity.
    """

    n: int
    lcu: pauli.LcuTerms
    b: np.ndarray
    b_circuit: Circuit
    A_dense: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return 2**self.n

    @property
    def L(self) -> int:
        return self.lcu.L

    def dense(self) -> np.ndarray:
        if self.A_dense is None:
            self.A_dense = pauli.reconstruct(self.lcu)
            if np.all(self.A_dense.imag == 0):
                self.A_dense = self.A_dense.real.copy()
        return self.A_dense

    def manifest(self) -> dict:
        """JSON-serialisable description (no matrix data)."""
        meta = {k: _jsonable(v) for k, v in self.metadata.items()}
        return {"n": self.n, "L": self.L, **meta}

    @classmethod
    def from_matrix(
        cls,
        a: np.ndarray,
        b: np.ndarray,
        family: str = "custom",
        lcu: pauli.LcuTerms | None = None,
        **meta,
    ) -> ProblemInstance:
        """Wrap a matrix and right-hand side as is (no rescaling).

        ``b`` is normalised; a state-preparation circuit is built for it.
        """
        a = np.asarray(a)
        n = pauli.num_qubits_for(a.shape[0])
        b = np.asarray(b, dtype=float).ravel()
        b = b / np.linalg.norm(b)
        if lcu is None:
            lcu = pauli.decompose(a)
        meta = {"family": family, **meta}
        meta.setdefault("condition_number", _kappa(a))
        return cls(n=n, lcu=lcu, b=b, b_circuit=prepare_state(b), A_dense=a, metadata=meta)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _kappa(a: np.ndarray) -> float:
    try:
        return numerics.condition_number(a)
    except SingularMatrixError:
        return math.inf


def _string(n: int, ops: dict[int, str]) -> str:
    return "".join(ops.get(q, "I") for q in range(n))


def make_ising(n: int, J: float = 0.1, eta: float = 5.0) -> ProblemInstance:
    """``A = (sum_i X_i + J sum_i Z_i Z_{i+1} + eta I) / xi`` on an open chain.

    ``xi`` is the largest eigenvalue, so ``A`` has spectral maximum 1, and
    ``|b> = H^{(x)n}|0>``.
    """
    if n < 2:
        raise ValueError("ising instances need n >= 2")
    raw = [(1.0, _string(n, {q: "X"})) for q in range(n)]
    raw += [(J, _string(n, {q: "Z", q + 1: "Z"})) for q in range(n - 1)]
    raw.append((eta, "I" * n))
    raw = [(c, p) for c, p in raw if c != 0]
    unscaled = pauli.reconstruct(pauli.LcuTerms(n, raw)).real
    ev = numerics.hermitian_eigenvalues(unscaled)
    xi = float(ev[-1])
    lcu = pauli.LcuTerms(n, [(c / xi, p) for c, p in raw])
    a = unscaled / xi
    b_circ = Circuit(n)
    for q in range(n):
        b_circ.add("H", q)
    b = np.full(2**n, 2 ** (-n / 2))
    meta = {
        "family": "ising",
        "J": J,
        "eta": eta,
        "xi": xi,
        "scale": xi,
        "condition_number": float(abs(ev).max() / abs(ev).min()) if abs(ev).min() > 0 else math.inf,
    }
    return ProblemInstance(n=n, lcu=lcu, b=b, b_circuit=b_circ, A_dense=a, metadata=meta)


def make_random_pauli(n: int, seed: int = 0, coeff_range: float = 10.0) -> ProblemInstance:
    """``2n`` distinct strings over ``{I, X, Z}`` with coefficients ``U[-10, 10]``.

    Coefficients are rescaled so the largest absolute eigenvalue is 1; ``b`` has
    entries ``U[-1, 1]`` before normalisation. Deterministic in ``seed``.
    """
    if n < 2:
        raise ValueError("random-pauli instances need n >= 2")
    rng = np.random.default_rng(seed)
    picks = rng.choice(3**n, size=2 * n, replace=False)
    strings = []
    for k in picks:
        digits = []
        for _ in range(n):
            k, d = divmod(int(k), 3)
            digits.append("IXZ"[d])
        strings.append("".join(reversed(digits)))
    coeffs = rng.uniform(-coeff_range, coeff_range, size=2 * n)
    b = rng.uniform(-1.0, 1.0, size=2**n)
    b /= np.linalg.norm(b)

    raw = pauli.LcuTerms(n, list(zip(coeffs, strings)))
    unscaled = pauli.reconstruct(raw).real
    _, scale = numerics.rescale_to_unit_spectral_max(unscaled)
    lcu = raw.scaled(1 / scale)
    a = unscaled / scale
    meta = {
        "family": "random-pauli",
        "seed": seed,
        "scale": scale,
        "condition_number": _kappa(a),
    }
    return ProblemInstance(n=n, lcu=lcu, b=b, b_circuit=prepare_state(b), A_dense=a, metadata=meta)


def _next_pow2(k: int) -> int:
    return max(2, 1 << (k - 1).bit_length())


def scale_and_pad(block: np.ndarray, rhs: np.ndarray, family: str = "darcy", **meta) -> ProblemInstance:
    """Divide by the largest absolute eigenvalue, then pad to a power of 2.

    Padding adds zero rows/columns with unit diagonal and zero right-hand side,
    so the extra solution components are exactly 0.
    """
    block = np.asarray(block)
    rhs = np.asarray(rhs, dtype=float).ravel()
    size = block.shape[0]
    if block.ndim != 2 or block.shape[0] != block.shape[1]:
        raise ValueError(f"block must be square, got {block.shape}")
    if rhs.size != size:
        raise ValueError(f"rhs segment has {rhs.size} entries, block has {size} rows")
    warnings = list(meta.pop("warnings", []))
    if numerics.is_hermitian(block, tol=1e-12 * max(1.0, np.abs(block).max())):
        scale = float(np.max(np.abs(numerics.hermitian_eigenvalues(block, tol=np.inf))))
    else:
        scale = float(np.max(np.abs(np.linalg.eigvals(block))))
        warnings.append("block is not Hermitian: scaled by spectral radius; reduced cost formulas do not apply")
    if scale == 0:
        raise ValueError("cannot scale a zero block")
    size2 = _next_pow2(size)
    a = np.zeros((size2, size2), dtype=block.dtype)
    a[:size, :size] = block / scale
    a[np.arange(size, size2), np.arange(size, size2)] = 1.0
    b = np.zeros(size2)
    b[:size] = rhs / scale
    b_norm = float(np.linalg.norm(b))
    meta = {
        "family": family,
        "block_size": size,
        "padded_size": size2,
        "scale": scale,
        "rhs_norm": b_norm,
        "warnings": warnings,
        **meta,
    }
    return ProblemInstance.from_matrix(a, b, **meta)


def extract_and_pad(
    a_full: np.ndarray,
    b_full: np.ndarray,
    block_rows: tuple[int, int],
    block_cols: tuple[int, int],
) -> ProblemInstance:
    """Extract the coupled block of a two-block system, scale it and pad it.

    ``block_rows``/``block_cols`` are half-open ``(start, stop)`` ranges. The
    complementary block (remaining rows x remaining columns) is expected to
    be diagonal; otherwise a warning is stored in the metadata.
    """
    a_full = np.asarray(a_full)
    b_full = np.asarray(b_full, dtype=float).ravel()
    r0, r1 = block_rows
    c0, c1 = block_cols
    if not (0 <= r0 < r1 <= a_full.shape[0] and 0 <= c0 < c1 <= a_full.shape[1]):
        raise ValueError("block ranges fall outside the matrix")
    if r1 - r0 != c1 - c0:
        raise ValueError(f"extracted block is {r1 - r0}x{c1 - c0}, not square")
    block = a_full[r0:r1, c0:c1]
    rows_rest = np.r_[0:r0, r1 : a_full.shape[0]]
    cols_rest = np.r_[0:c0, c1 : a_full.shape[1]]
    warnings = []
    other = a_full[np.ix_(rows_rest, cols_rest)]
    if other.size and (other.shape[0] != other.shape[1] or np.count_nonzero(other - np.diag(np.diag(other)))):
        warnings.append("complementary block is not diagonal")
    return scale_and_pad(
        block,
        b_full[r0:r1],
        family="darcy",
        block_rows=[r0, r1],
        block_cols=[c0, c1],
        warnings=warnings,
    )


def banded_matrix(size: int, bandwidth: int, rng: np.random.Generator) -> np.ndarray:
    m = np.zeros((size, size))
    for k in range(bandwidth + 1):
        d = rng.uniform(-1.0, 1.0, size=size - k)
        m += np.diag(d, k)
        if k:
            m += np.diag(d, -k)
    return m


def make_banded_synthetic(size: int, bandwidth: int, seed: int = 0) -> ProblemInstance:
    """Random symmetric banded matrix (entries ``U[-1, 1]``) with a ``U[-1, 1]`` rhs,
    scaled and padded the same way as :func:`extract_and_pad`."""
    if size < 2:
        raise ValueError("size must be >= 2")
    rng = np.random.default_rng(seed)
    m = banded_matrix(size, bandwidth, rng)
    rhs = rng.uniform(-1.0, 1.0, size=size)
    return scale_and_pad(m, rhs, family="banded", seed=seed, bandwidth=bandwidth)


def constructed_instance(inst: ProblemInstance, layers: int, theta_hat) -> ProblemInstance:
    """Same matrix, with ``b := A V(theta_hat)|0>`` normalised (solution lies in the ansatz)."""
    from .circuit import ansatz_states

    x = ansatz_states(inst.n, layers, theta_hat)
    rhs = inst.dense() @ x
    meta = {**inst.metadata, "family": f"{inst.metadata.get('family', 'custom')}-constructed", "layers": layers}
    return ProblemInstance.from_matrix(inst.dense(), np.real(rhs), lcu=inst.lcu, **{k: v for k, v in meta.items() if k != "family"}, family=meta["family"])


def make_instance(family: str, **params) -> ProblemInstance:
    """Dispatch by family name: ``ising``, ``random-pauli`` or ``banded``."""
    if family == "ising":
        return make_ising(params["n"], params.get("J", 0.1), params.get("eta", 5.0))
    if family == "random-pauli":
        return make_random_pauli(params["n"], params.get("seed", 0))
    if family == "banded":
        return make_banded_synthetic(params["size"], params["bandwidth"], params.get("seed", 0))
    raise ValueError(f"unknown family {family!r}")


def dumps_manifest(inst: ProblemInstance) -> str:
    return json.dumps(inst.manifest(), indent=2, sort_keys=True)
