"""Pauli strings and the Pauli-basis LCU decomposition ``A = sum_i c_i P_i``.

A Pauli string is a plain ``str`` over ``"IXYZ"``; the leftmost letter acts on
qubit 0, which is the most significant bit of a basis-state index. This
matches ``np.kron`` ordering, so ``pauli_matrix("XZ") == kron(X, Z)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 12
DROP_TOL = 1e-12
LETTERS = "IXYZ"

PAULI_2X2 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Row P, column 2*i + j holds (P)_{ji}, so that row . vec(A_ij) = Tr(A P).
_TRACE_MAP = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [0, 1j, -1j, 0],
        [1, 0, 0, -1],
    ],
    dtype=complex,
)
# Inverse of the above (up to the 1/2 per qubit): maps Pauli coefficients to entries.
_ENTRY_MAP = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, -1j, 0],
        [0, 1, 1j, 0],
        [1, 0, 0, -1],
    ],
    dtype=complex,
)


class QubitLimitError(MemoryError):
    """Raised when a dense operator would exceed the configured qubit limit."""


def validate_string(p: str, n: int | None = None) -> str:
    if not p or any(ch not in LETTERS for ch in p):
        raise ValueError(f"invalid Pauli string {p!r}")
    if n is not None and len(p) != n:
        raise ValueError(f"Pauli string {p!r} has length {len(p)}, expected {n}")
    return p


def num_qubits_for(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValueError(f"matrix size {dim} is not a power of 2")
    return n


def pauli_matrix(p: str, max_qubits: int = MAX_QUBITS) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix of a Pauli string (Kronecker product in letter order)."""
    validate_string(p)
    if len(p) > max_qubits:
        raise QubitLimitError(f"{len(p)} qubits exceeds the dense limit of {max_qubits}")
    out = np.ones((1, 1), dtype=complex)
    for ch in p:
        out = np.kron(out, PAULI_2X2[ch])
    return out


def apply_pauli(p: str, vec: np.ndarray) -> np.ndarray:
    """``P @ vec`` without forming the matrix. ``vec`` may carry leading batch axes."""
    n = len(p)
    vec = np.asarray(vec, dtype=complex)
    batch = vec.shape[:-1]
    t = vec.reshape(batch + (2,) * n).copy()
    off = len(batch)
    for q, ch in enumerate(p):
        if ch == "I":
            continue
        ax = off + q
        if ch in "XY":
            t = np.flip(t, axis=ax).copy()
        sl = [slice(None)] * t.ndim
        if ch == "Z":
            sl[ax] = 1
            t[tuple(sl)] *= -1
        elif ch == "Y":
            # Y|0> = i|1>, Y|1> = -i|0>
            t *= 1j
            sl[ax] = 0
            t[tuple(sl)] *= -1
    return t.reshape(vec.shape)


@dataclass
class LcuTerms:
    """Linear combination of Pauli strings, sorted lexicographically by string."""

    n: int
    terms: list[tuple[complex, str]] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for c, p in self.terms:
            validate_string(p, self.n)
            if p in seen:
                raise ValueError(f"duplicate Pauli string {p}")
            seen.add(p)
        self.terms = sorted(((complex(c), p) for c, p in self.terms), key=lambda t: t[1])

    @property
    def L(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=complex)

    @property
    def strings(self) -> list[str]:
        return [p for _, p in self.terms]

    def scaled(self, factor: float) -> LcuTerms:
        return LcuTerms(self.n, [(c * factor, p) for c, p in self.terms])

    def __str__(self) -> str:
        return " + ".join(f"({c.real:+.6g}{c.imag:+.6g}j)*{p}" for c, p in self.terms) or "0"


def _pauli_coefficient_tensor(a: np.ndarray) -> np.ndarray:
    """All 4^n coefficients ``Tr(A P) / 2^n`` as a ``(4,)*n`` tensor indexed by IXYZ."""
    n = num_qubits_for(a.shape[0])
    t = np.asarray(a, dtype=complex).reshape((2,) * (2 * n))
    # interleave row and column bits: (i0, j0, i1, j1, ...)
    order = [k for q in range(n) for k in (q, n + q)]
    t = t.transpose(order).reshape((4,) * n) if n else t.reshape(())
    for q in range(n):
        t = np.moveaxis(np.tensordot(_TRACE_MAP, t, axes=([1], [q])), 0, q)
    return t / 2**n


def decompose(a: np.ndarray, drop_tol: float = DROP_TOL, strings: list[str] | None = None) -> LcuTerms:
    """Pauli decomposition with ``c_i = Tr(A P_i) / 2^n``.

    All 4^n coefficients are obtained at once with a per-qubit transform
    (O(n 4^n) work instead of 4^n separate traces). If ``strings`` is
    given, only those coefficients are evaluated, each by an explicit trace.
    Terms with ``|c_i| <= drop_tol`` are omitted.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = num_qubits_for(a.shape[0])
    terms = []
    if strings is not None:
        for p in strings:
            c = trace_coefficient(a, validate_string(p, n))
            if abs(c) > drop_tol:
                terms.append((c, p))
        return LcuTerms(n, terms)
    coeffs = _pauli_coefficient_tensor(a)
    for idx in zip(*np.nonzero(np.abs(coeffs) > drop_tol)):
        terms.append((complex(coeffs[idx]), "".join(LETTERS[k] for k in idx)))
    return LcuTerms(n, terms)


def trace_coefficient(a: np.ndarray, p: str) -> complex:
    """``Tr(A P) / 2^n`` evaluated directly (without forming ``A P``)."""
    a = np.asarray(a, dtype=complex)
    # Tr(A P) = sum_j (A P)_{jj} = sum_j sum_k A_jk P_kj; P has one nonzero per column.
    dim = a.shape[0]
    cols = apply_pauli(p, np.eye(dim, dtype=complex))  # rows are P e_j
    # cols[j] = P e_j  (a column of P stored as a row); (A P)_{jj} = A[j, :] . (P e_j)
    return complex(np.sum(a * cols) / dim)


def reconstruct(t: LcuTerms) -> np.ndarray:
    """Dense ``sum_i c_i P_i``."""
    n = t.n
    if n > MAX_QUBITS:
        raise QubitLimitError(f"{n} qubits exceeds the dense limit of {MAX_QUBITS}")
    coeffs = np.zeros((4,) * n, dtype=complex)
    for c, p in t.terms:
        coeffs[tuple(LETTERS.index(ch) for ch in p)] = c
    out = coeffs
    for q in range(n):
        out = np.moveaxis(np.tensordot(_ENTRY_MAP, out, axes=([1], [q])), 0, q)
    # out is indexed by (i0 j0, i1 j1, ...); undo the interleave
    out = out.reshape((2,) * (2 * n))
    order = [2 * q for q in range(n)] + [2 * q + 1 for q in range(n)]
    return out.transpose(order).reshape(2**n, 2**n)


def coefficients_real(t: LcuTerms, tol: float = 1e-10) -> bool:
    return bool(np.all(np.abs(t.coefficients.imag) <= tol))


def all_strings(n: int, letters: str = LETTERS) -> list[str]:
    return ["".join(s) for s in itertools.product(letters, repeat=n)]
