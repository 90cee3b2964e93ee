"""Hadamard-test circuits for the VQLS cost terms, with exact and shot-based readout.

The ancilla is qubit 0 and data qubits are shifted to ``1..n``. A test built
as ``H - [Sdg] - W - H`` on the ancilla, where ``W`` leaves ``|0>_a|phi_0>``
and ``|1>_a|phi_1>``, gives ``P(0) - P(1) = Re<phi_0|phi_1>`` (``Im`` with the
``Sdg``). Three families are provided (``x = V(theta)|0>``, ``U|0> = b``):

* ``denominator(i, j)``, ``i < j``: ``<x|A_i A_j|x>``;
* ``global_numerator(i)``: ``<0|U^dagger A_i V|0> = <b|A_i|x>``;
* ``local_numerator(i, j, q)``, ``i <= j``: ``<x|A_j U Z_q U^dagger A_i|x>``.

Pauli terms are Hermitian, so ``A_i^dagger = A_i`` throughout.
"""
from __future__ import annotations

import csv
import weakref
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import (
    Circuit,
    ansatz_states,
    build_ansatz,
    controlled,
    n_params,
    pauli_circuit,
    simulate,
    simulate_batch,
    unitary,
)
from .pauli import apply_pauli

DENOMINATOR = "denominator"
GLOBAL_NUMERATOR = "global_numerator"
LOCAL_NUMERATOR = "local_numerator"
FAMILIES = (DENOMINATOR, GLOBAL_NUMERATOR, LOCAL_NUMERATOR)
PARTS = ("real", "imag")
BUDGET_FIELDS = ("kind", "L", "n", "denominator_tests", "numerator_tests", "total")

# fixed, nonzero angles used when a circuit is built only for its structure
STRUCTURE_ANGLE = 0.5


@dataclass(frozen=True)
class HadamardTestSpec:
    """One Hadamard test. ``problem``/``layers`` bind it to an instance and ansatz.

    Equality and hashing use only ``(family, i, j, q, part)``.
    """

    family: str
    i: int
    j: int | None = None
    q: int | None = None
    part: str = "real"
    problem: object = field(default=None, compare=False, repr=False)
    layers: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown test family {self.family!r}")
        if self.part not in PARTS:
            raise ValueError(f"part must be 'real' or 'imag', got {self.part!r}")
        if self.i < 0:
            raise ValueError("term index must be >= 0")
        if self.family == DENOMINATOR:
            if self.j is None or not self.i < self.j:
                raise ValueError(
                    f"denominator tests need i < j, got ({self.i}, {self.j}); diagonal terms are c_i^2 and need no test"
                )
            if self.q is not None:
                raise ValueError("denominator tests take no qubit index")
        elif self.family == GLOBAL_NUMERATOR:
            if self.j is not None or self.q is not None:
                raise ValueError("global numerator tests take a single term index")
        else:
            if self.j is None or self.j < self.i:
                raise ValueError(f"local numerator tests need i <= j, got ({self.i}, {self.j})")
            if self.q is None or self.q < 0:
                raise ValueError("local numerator tests need a qubit index q >= 0")
        if self.problem is not None:
            self._check_bounds(self.problem.L, self.problem.n)

    def _check_bounds(self, L: int, n: int) -> None:
        for k in (self.i, self.j):
            if k is not None and k >= L:
                raise ValueError(f"term index {k} out of range for L={L}")
        if self.q is not None and self.q >= n:
            raise ValueError(f"qubit index {self.q} out of range for n={n}")

    @property
    def key(self) -> tuple:
        return (self.family, self.i, self.j, self.q, self.part)

    def bind(self, problem, layers: int) -> HadamardTestSpec:
        return replace(self, problem=problem, layers=layers)


@dataclass
class TestPlan:
    """Specs for one cost kind plus the budget summary."""

    __test__ = False  # not a pytest class

    kind: str
    L: int
    n: int
    specs: list[HadamardTestSpec]

    def __len__(self) -> int:
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    @property
    def denominator_tests(self) -> int:
        return sum(s.family == DENOMINATOR for s in self.specs)

    @property
    def numerator_tests(self) -> int:
        return len(self.specs) - self.denominator_tests

    def budget(self) -> dict:
        return {
            "kind": self.kind,
            "L": self.L,
            "n": self.n,
            "denominator_tests": self.denominator_tests,
            "numerator_tests": self.numerator_tests,
            "total": len(self.specs),
        }


def _kind(kind) -> str:
    k = str(getattr(kind, "value", kind)).lower()
    if k not in ("global", "local"):
        raise ValueError(f"cost kind must be 'global' or 'local', got {kind!r}")
    return k


def enumerate_tests(L: int, n: int, kind, problem=None, layers: int = 1, complete: bool = False) -> TestPlan:
    """All Hadamard tests needed to evaluate one cost, each listed once.

    With real coefficients (the reduced formulas) the global cost needs the
    real part of every cross term ``<x|A_i A_j|x>`` and both parts of every
    ``<b|A_i|x>``: ``L(L-1)/2 + 2L`` tests. The local cost needs the same
    denominator tests plus, per qubit, ``L`` diagonal and ``L(L-1)/2`` cross
    real parts.

    ``complete=True`` lists the imaginary parts as well (needed when the
    coefficients are complex).
    """
    kind = _kind(kind)
    if L < 1:
        raise ValueError("L must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    den_parts = PARTS if complete else ("real",)
    specs = [
        HadamardTestSpec(DENOMINATOR, i, j, part=part)
        for i in range(L)
        for j in range(i + 1, L)
        for part in den_parts
    ]
    if kind == "global":
        specs += [HadamardTestSpec(GLOBAL_NUMERATOR, i, part=part) for i in range(L) for part in PARTS]
    else:
        for q in range(n):
            for i in range(L):
                for j in range(i, L):
                    for part in den_parts:
                        if part == "imag" and i == j:
                            continue  # diagonal terms are real
                        specs.append(HadamardTestSpec(LOCAL_NUMERATOR, i, j, q, part))
    if problem is not None:
        specs = [s.bind(problem, layers) for s in specs]
    return TestPlan(kind, L, n, specs)


def global_budget(L: int) -> int:
    return (L * L + 3 * L) // 2


def local_budget(L: int, n: int) -> int:
    return L * (L - 1) // 2 + n * (L + L * (L - 1) // 2)


def write_budget_csv(path, plans) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BUDGET_FIELDS, lineterminator="\n")
        w.writeheader()
        for p in plans:
            w.writerow(p.budget())


# -- circuits -------------------------------------------------------------------


def _add_sub(c: Circuit, sub: Circuit, slots: dict[int, int] | None = None) -> None:
    """Append ``sub`` (already on ``c.n`` qubits), carrying its parameter slots."""
    start = len(c.gates)
    c.extend(sub)
    if slots is not None:
        for k, pos in sub.parameter_slots.items():
            slots[k] = start + pos


def _on_data(sub: Circuit, n_total: int) -> Circuit:
    """Shift a data circuit onto qubits ``1..n`` of an ``n+1`` qubit register."""
    out = Circuit(n_total, [g.shifted(1) for g in sub.gates])
    out.parameter_slots = dict(sub.parameter_slots)
    return out


def _pauli_strings(spec: HadamardTestSpec) -> list[str]:
    return spec.problem.lcu.strings


def build_circuit(spec: HadamardTestSpec, theta=None) -> Circuit:
    """Full test circuit on ``n + 1`` qubits (ancilla = qubit 0).

    ``theta`` defaults to a fixed nonzero angle on every parameter, which is
    what resource accounting uses. The returned circuit's
    ``parameter_slots`` point at the ansatz rotations.
    """
    inst = spec.problem
    if inst is None:
        raise ValueError("spec is not bound to a problem instance; use spec.bind(problem, layers)")
    spec._check_bounds(inst.L, inst.n)
    n = inst.n
    m = n_params(n, spec.layers)
    theta = np.full(m, STRUCTURE_ANGLE) if theta is None else np.asarray(theta, dtype=float)
    V = build_ansatz(n, spec.layers, theta)
    U = inst.b_circuit
    strings = _pauli_strings(spec)

    c = Circuit(n + 1)
    slots: dict[int, int] = {}
    c.add("H", 0)
    if spec.part == "imag":
        c.add("Sdg", 0)
    if spec.family == DENOMINATOR:
        _add_sub(c, _on_data(V, n + 1), slots)
        _add_sub(c, controlled(pauli_circuit(strings[spec.j])))
        _add_sub(c, controlled(pauli_circuit(strings[spec.i])))
    elif spec.family == GLOBAL_NUMERATOR:
        _add_sub(c, controlled(V), slots)
        _add_sub(c, controlled(pauli_circuit(strings[spec.i])))
        _add_sub(c, controlled(U.inverse()))
    else:
        _add_sub(c, _on_data(V, n + 1), slots)
        _add_sub(c, controlled(pauli_circuit(strings[spec.i])))
        _add_sub(c, _on_data(U.inverse(), n + 1))
        c.add("CZ", spec.q + 1, (0,))
        _add_sub(c, _on_data(U, n + 1))
        _add_sub(c, controlled(pauli_circuit(strings[spec.j])))
    c.add("H", 0)
    c.parameter_slots = slots
    return c


_CIRCUIT_CACHE: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def _cached_circuit(spec: HadamardTestSpec) -> Circuit:
    per_problem = _CIRCUIT_CACHE.setdefault(spec.problem, {})
    key = (spec.key, spec.layers)
    if key not in per_problem:
        per_problem[key] = build_circuit(spec)
    return per_problem[key]


def _p1(states: np.ndarray) -> np.ndarray:
    """Probability of reading 1 on the ancilla (most significant qubit)."""
    half = states.shape[-1] // 2
    return np.clip(np.sum(np.abs(states[..., half:]) ** 2, axis=-1), 0.0, 1.0)


def _rng_for(spec_key: tuple, seed) -> np.random.Generator:
    family, i, j, q, part = spec_key
    if seed is None:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence()))
    entropy = [int(seed), FAMILIES.index(family) if family in FAMILIES else 3, i, -1 if j is None else j, -1 if q is None else q, PARTS.index(part)]
    entropy = [e + 1 for e in entropy]  # SeedSequence wants non-negative words
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _readout(p1: np.ndarray, shots: int | None, rng_factory) -> np.ndarray:
    if shots is None:
        return 1.0 - 2.0 * p1
    if int(shots) != shots or shots < 1:
        raise ValueError(f"shots must be a positive integer, got {shots!r}")
    ones = rng_factory().binomial(int(shots), p1)
    return 1.0 - 2.0 * ones / shots


def run_test(spec: HadamardTestSpec, theta, shots: int | None = None, seed: int | None = None):
    """``1 - 2 P(1)`` for the test at ``theta``.

    ``theta`` may be a single parameter vector (returns a float) or a
    ``(B, m)`` batch (returns an array). With ``shots`` the ancilla readout is
    sampled from a Binomial distribution using a counter-based generator
    seeded by ``(seed, spec)``, so results are reproducible per test.
    """
    if spec.problem is None:
        raise ValueError("spec is not bound to a problem instance")
    if shots is not None and (int(shots) != shots or shots < 1):
        raise ValueError(f"shots must be a positive integer, got {shots!r}")
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    m = n_params(spec.problem.n, spec.layers)
    if theta.shape[-1] != m:
        raise ValueError(f"ansatz with layers={spec.layers} expects {m} angles, got {theta.shape[-1]}")
    states = simulate_batch(_cached_circuit(spec), np.atleast_2d(theta))
    out = _readout(_p1(states), shots, lambda: _rng_for(spec.key, seed))
    return float(out[0]) if single else out


def hadamard_test(prep: Circuit, u: Circuit, part: str = "real", shots: int | None = None, seed: int | None = None) -> float:
    """Estimate ``Re`` or ``Im`` of ``<psi|U|psi>`` where ``prep|0> = |psi>``."""
    if part not in PARTS:
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    if prep.n != u.n:
        raise ValueError("state preparation and unitary act on different registers")
    c = Circuit(u.n + 1)
    c.add("H", 0)
    if part == "imag":
        c.add("Sdg", 0)
    c.extend(_on_data(prep, u.n + 1))
    c.extend(controlled(u))
    c.add("H", 0)
    p1 = _p1(simulate(c)[None, :])
    key = ("custom", 0, None, None, part)
    return float(_readout(p1, shots, lambda: _rng_for(key, seed))[0])


# -- matrix-algebra reference values ------------------------------------------------


def reference_value(spec: HadamardTestSpec, theta) -> complex:
    """The complex number whose real/imaginary part the test estimates, by direct linear algebra."""
    inst = spec.problem
    if inst is None:
        raise ValueError("spec is not bound to a problem instance")
    strings = _pauli_strings(spec)
    x = ansatz_states(inst.n, spec.layers, theta).astype(complex)
    if spec.family == DENOMINATOR:
        y = apply_pauli(strings[spec.i], apply_pauli(strings[spec.j], x))
        return complex(np.vdot(x, y))
    if spec.family == GLOBAL_NUMERATOR:
        b = simulate(inst.b_circuit)
        return complex(np.vdot(b, apply_pauli(strings[spec.i], x)))
    u = unitary(inst.b_circuit)
    z = np.where((np.arange(inst.N) >> (inst.n - 1 - spec.q)) & 1, -1.0, 1.0)
    y = apply_pauli(strings[spec.j], u @ (z * (u.conj().T @ apply_pauli(strings[spec.i], x))))
    return complex(np.vdot(x, y))
