"""Global and local VQLS cost functions, evaluated two independent ways.

With ``x = V(theta)|0>`` (unnormalised ``psi = A x``) the costs are

    C_G = 1 - |<b|psi>|^2 / <psi|psi>
    C_L = 1/2 - (1/2) * local_numerator / <psi|psi>,
    local_numerator = (1/n) sum_q <x|A^dagger U Z_q U^dagger A|x>.

Equivalently ``C_L = <x|H_L|x> / <psi|psi>`` with the projector form
``H_L = A^dagger U (I - (1/n) sum_q |0_q><0_q|) U^dagger A``; the two agree
because ``|0_q><0_q| = (I + Z_q) / 2``.

Paths:
    * ``DIRECT``: dense matrix algebra on the statevector (fast, default);
    * ``HADAMARD``: every term from an exactly simulated Hadamard-test
      circuit, combined with the real-coefficient formulas;
    * ``sampled(shots, seed)``: the same circuits read out with finite shots;
    * ``GENERAL``: Hadamard tests with real and imaginary parts and the
      unreduced formulas, valid for complex coefficients.
"""
from __future__ import annotations

import csv
import weakref
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import hadamard
from .circuit import ansatz_states, n_params, unitary
from .numerics import SingularMatrixError
from .pauli import coefficients_real

DENOMINATOR_FLOOR = 1e-14
SHIFT = np.pi / 2
EVAL_FIELDS = ("kind", "path", "value", "numerator", "denominator", "eval_index")


class CostKind(str, Enum):
    GLOBAL = "global"
    LOCAL = "local"

    def __str__(self) -> str:
        return self.value


class ComplexCoefficientError(ValueError):
    """The reduced formulas need real LCU coefficients."""


@dataclass(frozen=True)
class EvalPath:
    mode: str = "direct"
    shots: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in ("direct", "hadamard", "sampled", "general"):
            raise ValueError(f"unknown evaluation path {self.mode!r}")
        if self.mode == "sampled" and (self.shots is None or self.shots < 1):
            raise ValueError("sampled evaluation needs shots >= 1")

    def __str__(self) -> str:
        return f"sampled({self.shots})" if self.mode == "sampled" else self.mode


DIRECT = EvalPath("direct")
HADAMARD = EvalPath("hadamard")
GENERAL = EvalPath("general")


def sampled(shots: int, seed: int | None = None) -> EvalPath:
    return EvalPath("sampled", shots, seed)


@dataclass
class CostEvaluation:
    value: float
    numerator: float
    denominator: float
    kind: CostKind
    path: EvalPath
    theta: np.ndarray = field(repr=False)
    eval_index: int = 0

    def row(self) -> dict:
        return {
            "kind": str(self.kind),
            "path": str(self.path),
            "value": repr(float(self.value)),
            "numerator": repr(float(self.numerator)),
            "denominator": repr(float(self.denominator)),
            "eval_index": self.eval_index,
        }


def write_evaluations_csv(path, evaluations) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=EVAL_FIELDS, lineterminator="\n")
        w.writeheader()
        for e in evaluations:
            w.writerow(e.row())


def layers_for(n: int, m: int) -> int:
    """Ansatz depth implied by a parameter count."""
    if n == 1:
        if m != 1:
            raise ValueError(f"a 1-qubit ansatz has 1 parameter, got {m}")
        return 0
    layers, rem = divmod(m - n, 2 * n - 2)
    if rem or layers < 0:
        raise ValueError(f"{m} parameters do not fit the layered ansatz on {n} qubits")
    return layers


def _real_if_possible(m: np.ndarray) -> np.ndarray:
    return m.real.copy() if np.iscomplexobj(m) and not np.any(m.imag) else m


class CostModel:
    """Precomputed Hermitian matrices for the direct path of one instance.

    Every quantity is a quadratic form ``<x|M|x>`` in the ansatz state.
    The local matrices are built on first use (they need the dense ``U``).
    """

    def __init__(self, inst):
        self.inst = inst
        a = np.asarray(inst.dense())
        self.A = a
        self.den = _real_if_possible(a.conj().T @ a)
        self.Ab = a.conj().T @ inst.b  # psi-space image of b: <b|A x> = (A^dagger b)^dagger x
        self._local = None

    @property
    def global_h(self) -> np.ndarray:
        return self.den - np.outer(self.Ab, self.Ab.conj())

    def _build_local(self):
        inst = self.inst
        n = inst.n
        u = _real_if_possible(unitary(inst.b_circuit))
        ua = u.conj().T @ self.A
        bits = (np.arange(inst.N)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
        self.zbar = np.mean(1 - 2 * bits, axis=1)  # (1/n) sum_q Z_q, diagonal
        self.proj = 1.0 - np.mean(bits == 0, axis=1)  # I - (1/n) sum_q |0_q><0_q|
        num = _real_if_possible(ua.conj().T @ (self.zbar[:, None] * ua))
        h = _real_if_possible(ua.conj().T @ (self.proj[:, None] * ua))
        self.UA = ua
        self._local = (0.5 * (num + num.conj().T), 0.5 * (h + h.conj().T))

    @property
    def local_num(self) -> np.ndarray:
        if self._local is None:
            self._build_local()
        return self._local[0]

    @property
    def local_h(self) -> np.ndarray:
        if self._local is None:
            self._build_local()
        return self._local[1]

    @property
    def rotated(self) -> tuple[np.ndarray, np.ndarray]:
        """``(U^dagger A, projector diagonal)``: ``C_L = sum_k p_k |y_k|^2 / |y|^2`` with ``y = U^dagger A x``."""
        if self._local is None:
            self._build_local()
        return self.UA, self.proj


_MODELS: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def model_for(inst) -> CostModel:
    m = _MODELS.get(inst)
    if m is None:
        m = _MODELS[inst] = CostModel(inst)
    return m


def _quad(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    return np.real(np.sum(x.conj() * (x @ m.T), axis=-1))


def _states(inst, theta):
    theta = np.asarray(theta, dtype=float)
    return ansatz_states(inst.n, layers_for(inst.n, theta.shape[-1]), theta)


def _out(v, theta):
    if np.ndim(theta) == 1:
        return float(np.real(np.ravel(v)[0]) if np.ndim(v) else np.real(v))
    return np.broadcast_to(np.real(v), np.shape(theta)[:-1]).astype(float)


# -- Hadamard aggregation -----------------------------------------------------------


def _require_real(inst, path: EvalPath):
    if path.mode in ("hadamard", "sampled") and not coefficients_real(inst.lcu):
        raise ComplexCoefficientError(
            "LCU coefficients are complex; the reduced formulas do not apply, use the GENERAL path"
        )


def _tests(inst, theta, kind: str, path: EvalPath, families: tuple[str, ...]) -> dict:
    """Run the needed tests; map ``(family, i, j, q)`` to complex values (imag 0 if not measured)."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    layers = layers_for(inst.n, theta.shape[-1])
    plan = hadamard.enumerate_tests(inst.L, inst.n, kind, inst, layers, complete=path.mode == "general")
    shots = path.shots if path.mode == "sampled" else None
    vals: dict = {}
    for spec in plan:
        if spec.family not in families:
            continue
        v = hadamard.run_test(spec, theta, shots=shots, seed=path.seed)
        key = (spec.family, spec.i, spec.j, spec.q)
        vals[key] = vals.get(key, 0) + (v if spec.part == "real" else 1j * v)
    return vals


def _psi_norm_sq_tests(inst, theta, path):
    c = inst.lcu.coefficients
    L = inst.L
    vals = _tests(inst, theta, "global", path, (hadamard.DENOMINATOR,))
    if path.mode == "general":
        # sum_ij conj(c_i) c_j <A_i A_j>, pairing (i, j) with (j, i) = conj
        total = np.sum(np.abs(c) ** 2)
        for i in range(L):
            for j in range(i + 1, L):
                total = total + 2 * np.real(np.conj(c[i]) * c[j] * vals[(hadamard.DENOMINATOR, i, j, None)])
        return total
    c = c.real
    total = np.sum(c**2)
    for i in range(L):
        for j in range(i + 1, L):
            total = total + 2 * c[i] * c[j] * np.real(vals[(hadamard.DENOMINATOR, i, j, None)])
    return total


def _overlap_sq_tests(inst, theta, path):
    c = inst.lcu.coefficients
    L = inst.L
    vals = _tests(inst, theta, "global", path, (hadamard.GLOBAL_NUMERATOR,))
    g = [vals[(hadamard.GLOBAL_NUMERATOR, i, None, None)] for i in range(L)]
    if path.mode == "general":
        return np.abs(sum(c[i] * g[i] for i in range(L))) ** 2
    c = c.real
    total = sum(c[i] ** 2 * np.abs(g[i]) ** 2 for i in range(L))
    for i in range(L):
        for j in range(i + 1, L):
            total = total + 2 * c[i] * c[j] * (g[i].real * g[j].real + g[i].imag * g[j].imag)
    return total


def _local_numerator_tests(inst, theta, path):
    c = inst.lcu.coefficients
    L, n = inst.L, inst.n
    vals = _tests(inst, theta, "local", path, (hadamard.LOCAL_NUMERATOR,))
    general = path.mode == "general"
    if not general:
        c = c.real
    total = 0
    for q in range(n):
        for i in range(L):
            total = total + np.abs(c[i]) ** 2 * np.real(vals[(hadamard.LOCAL_NUMERATOR, i, i, q)])
            for j in range(i + 1, L):
                # the circuit measures conj(<x|A_i U Z_q U^dagger A_j|x>)
                y = np.conj(vals[(hadamard.LOCAL_NUMERATOR, i, j, q)])
                if general:
                    total = total + 2 * np.real(np.conj(c[i]) * c[j] * y)
                else:
                    total = total + 2 * c[i] * c[j] * np.real(y)
    return total / n


# -- public operations ----------------------------------------------------------------


def psi_norm_sq(inst, theta, path: EvalPath = DIRECT):
    """``<psi|psi> = ||A V(theta)|0>||^2``."""
    _require_real(inst, path)
    if path.mode == "direct":
        return _out(_quad(_states(inst, theta), model_for(inst).den), theta)
    return _out(_psi_norm_sq_tests(inst, theta, path), theta)


def overlap_sq(inst, theta, path: EvalPath = DIRECT):
    """``|<b|psi>|^2``."""
    _require_real(inst, path)
    if path.mode == "direct":
        x = _states(inst, theta)
        return _out(np.abs(x @ model_for(inst).Ab.conj()) ** 2, theta)
    return _out(_overlap_sq_tests(inst, theta, path), theta)


def local_numerator(inst, theta, path: EvalPath = DIRECT):
    """``(1/n) sum_q <x|A^dagger U Z_q U^dagger A|x>``."""
    _require_real(inst, path)
    if path.mode == "direct":
        return _out(_quad(_states(inst, theta), model_for(inst).local_num), theta)
    return _out(_local_numerator_tests(inst, theta, path), theta)


def _check_den(den):
    if np.any(np.asarray(den) < DENOMINATOR_FLOOR):
        raise SingularMatrixError(f"<psi|psi> = {np.min(den):.3e} is below {DENOMINATOR_FLOOR:g}")


def cost(inst, theta, kind=CostKind.GLOBAL, path: EvalPath = DIRECT, eval_index: int = 0) -> CostEvaluation:
    """Evaluate ``C_G`` or ``C_L`` at a single parameter vector.

    On the direct path the value comes from the Hermitian forms
    ``<x|H|x> / <x|A^dagger A|x>`` (``H_G = A^dagger (I - |b><b|) A``, or the
    projector form ``H_L``); the numerator field still reports the overlap or
    local numerator.
    """
    kind = CostKind(kind)
    theta = np.asarray(theta, dtype=float).ravel()
    den = psi_norm_sq(inst, theta, path)
    _check_den(den)
    if kind is CostKind.GLOBAL:
        num = overlap_sq(inst, theta, path)
        if path.mode == "direct":
            value = _quad(_states(inst, theta), model_for(inst).global_h) / den
        else:
            value = 1.0 - num / den
    else:
        num = local_numerator(inst, theta, path)
        if path.mode == "direct":
            value = _quad(_states(inst, theta), model_for(inst).local_h) / den
        else:
            value = 0.5 - 0.5 * num / den
    return CostEvaluation(float(value), float(num), float(den), kind, path, theta.copy(), eval_index)


def _forms(inst, kind: CostKind) -> tuple[np.ndarray, np.ndarray]:
    m = model_for(inst)
    return (m.global_h if kind is CostKind.GLOBAL else m.local_h), m.den


def cost_values(inst, thetas, kind=CostKind.GLOBAL) -> np.ndarray:
    """Direct-path cost for a batch ``(B, m)`` of parameter vectors."""
    h, d = _forms(inst, CostKind(kind))
    x = _states(inst, np.atleast_2d(thetas))
    den = _quad(x, d)
    _check_den(den)
    return _quad(x, h) / den


def objective(inst, kind=CostKind.GLOBAL):
    """Scalar direct-path cost ``theta -> C(theta)`` for optimisers.

    Uses one matrix-vector product per call: ``psi = A x`` for the global cost,
    ``y = U^dagger A x`` for the local one (``U^dagger`` preserves the norm).
    """
    kind = CostKind(kind)
    model = model_for(inst)
    n = inst.n
    if kind is CostKind.GLOBAL:
        a, b = model.A, inst.b

        def f(theta):
            theta = np.asarray(theta, dtype=float)
            psi = a @ ansatz_states(n, layers_for(n, theta.size), theta)
            den = float(np.real(np.vdot(psi, psi)))
            _check_den(den)
            return 1.0 - abs(np.vdot(b, psi)) ** 2 / den

    else:
        ua, proj = model.rotated

        def f(theta):
            theta = np.asarray(theta, dtype=float)
            y = ua @ ansatz_states(n, layers_for(n, theta.size), theta)
            w = np.abs(y) ** 2 if np.iscomplexobj(y) else y * y
            den = float(w.sum())
            _check_den(den)
            return float(proj @ w) / den

    return f


def gradient(inst, theta, kind=CostKind.GLOBAL, components=None, chunk: int = 256) -> np.ndarray:
    """Exact gradient by the parameter-shift rule.

    Numerator ``N = <x|H|x>`` and denominator ``D = <x|A^dagger A|x>`` are each
    differentiated with ``(f(theta_k + pi/2) - f(theta_k - pi/2)) / 2`` and
    combined by the quotient rule. ``theta`` may be ``(m,)`` or ``(B, m)``;
    ``components`` restricts the output to the listed parameter indices.
    """
    h, d = _forms(inst, CostKind(kind))
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    thetas = np.atleast_2d(theta)
    B, m = thetas.shape
    layers = layers_for(inst.n, m)
    comps = np.arange(m) if components is None else np.asarray(components, dtype=int).ravel()
    if comps.size and (comps.min() < 0 or comps.max() >= m):
        raise ValueError(f"component index out of range for {m} parameters")
    k = comps.size
    out = np.empty((B, k))
    shift = np.zeros((k, m))
    shift[np.arange(k), comps] = SHIFT
    for s in range(0, B, chunk):
        t = thetas[s : s + chunk]
        b = t.shape[0]
        shifted = np.concatenate([t[:, None, :] + shift, t[:, None, :] - shift], axis=1)
        xs = ansatz_states(inst.n, layers, shifted.reshape(-1, m)).reshape(b, 2 * k, -1)
        x0 = ansatz_states(inst.n, layers, t)
        hn, dn = _quad(xs, h), _quad(xs, d)
        dN = 0.5 * (hn[:, :k] - hn[:, k:])
        dD = 0.5 * (dn[:, :k] - dn[:, k:])
        N = _quad(x0, h)[:, None]
        D = _quad(x0, d)[:, None]
        _check_den(D)
        out[s : s + b] = (dN * D - N * dD) / D**2
    return out[0] if single else out


def n_parameters(inst, layers: int) -> int:
    return n_params(inst.n, layers)
