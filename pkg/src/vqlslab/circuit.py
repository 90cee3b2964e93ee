"""Gate-list circuits, a numpy statevector simulator, and circuit transforms.

Conventions:
    * qubit 0 is the most significant bit of a basis-state index (``np.kron`` order);
    * every gate has exactly one target and zero or more controls;
    * ``CX``/``CZ`` are ``X``/``Z`` with at least one control (two controls give
      Toffoli / CCZ); other kinds may carry controls too (controlled-RY, ...).

Lowering maps circuits onto ``{RX, RY, RZ, CX}`` up to a global phase. Each
rule is correct up to a phase of the *whole register*, which means controlled
gates are lowered with the relative phase between the control branches kept
exact. Apply :func:`controlled` before :func:`lower`, never after.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

ROTATIONS = ("RX", "RY", "RZ")
FIXED = ("H", "S", "Sdg", "X", "Y", "Z")
CONTROLLED_KINDS = ("CX", "CZ")
KINDS = ROTATIONS + FIXED + CONTROLLED_KINDS
BASIS = ("RX", "RY", "RZ", "CX")

_S2 = 1 / math.sqrt(2)
_FIXED_2X2 = {
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "Sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_FIXED_2X2["CX"] = _FIXED_2X2["X"]
_FIXED_2X2["CZ"] = _FIXED_2X2["Z"]
_DIAGONAL = {"Z", "S", "Sdg", "RZ", "CZ"}


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=complex)
    raise ValueError(f"{kind} is not a rotation")


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    controls: tuple[int, ...] = ()
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if (self.kind in ROTATIONS) != (self.angle is not None):
            raise ValueError(f"{self.kind}: rotation kinds take exactly one angle, others none")
        if self.kind in CONTROLLED_KINDS and not self.controls:
            raise ValueError(f"{self.kind} needs at least one control")
        if self.kind in ("X", "Z") and self.controls:
            raise ValueError(f"use C{self.kind} for a controlled {self.kind}")
        qubits = (self.target,) + tuple(self.controls)
        if len(set(qubits)) != len(qubits) or min(qubits) < 0:
            raise ValueError(f"invalid qubit indices {qubits}")
        object.__setattr__(self, "controls", tuple(self.controls))

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + (self.target,)

    def matrix(self) -> np.ndarray:
        """2x2 matrix applied to the target when all controls are 1."""
        if self.kind in ROTATIONS:
            return rotation_matrix(self.kind, self.angle)
        return _FIXED_2X2[self.kind]

    def inverse(self) -> Gate:
        if self.kind in ROTATIONS:
            return Gate(self.kind, self.target, self.controls, -self.angle)
        swap = {"S": "Sdg", "Sdg": "S"}
        return Gate(swap.get(self.kind, self.kind), self.target, self.controls)

    def with_control(self, ctrl: int) -> Gate:
        kind = {"X": "CX", "Z": "CZ"}.get(self.kind, self.kind)
        return Gate(kind, self.target, (ctrl,) + self.controls, self.angle)

    def shifted(self, offset: int) -> Gate:
        return Gate(self.kind, self.target + offset, tuple(c + offset for c in self.controls), self.angle)


@dataclass
class Circuit:
    """Ordered gate list on ``n`` qubits.

    ``parameter_slots`` maps a parameter index to the position of the RY gate
    carrying it (only ansatz circuits populate it).
    """

    n: int
    gates: list[Gate] = field(default_factory=list)
    parameter_slots: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a circuit needs at least one qubit")
        for g in self.gates:
            self._check(g)
        for k, pos in self.parameter_slots.items():
            if self.gates[pos].kind != "RY":
                raise ValueError(f"parameter {k} points at a {self.gates[pos].kind} gate")

    def _check(self, g: Gate) -> None:
        if max(g.qubits) >= self.n:
            raise ValueError(f"gate {g} does not fit in {self.n} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def add(self, kind: str, target: int, controls=(), angle: float | None = None) -> Circuit:
        g = Gate(kind, target, tuple(controls), None if angle is None else float(angle))
        self._check(g)
        self.gates.append(g)
        return self

    def append(self, g: Gate) -> Circuit:
        self._check(g)
        self.gates.append(g)
        return self

    def extend(self, other: Circuit | list[Gate], offset: int = 0) -> Circuit:
        for g in other:
            self.append(g.shifted(offset) if offset else g)
        return self

    def inverse(self) -> Circuit:
        return Circuit(self.n, [g.inverse() for g in reversed(self.gates)])

    def copy(self) -> Circuit:
        return Circuit(self.n, list(self.gates), dict(self.parameter_slots))

    def count(self, kind: str) -> int:
        return sum(g.kind == kind for g in self.gates)

    # -- text format -------------------------------------------------------

    def to_text(self) -> str:
        """One gate per line: ``KIND ANGLE CONTROLS TARGET`` with ``-`` for empty fields."""
        lines = [f"qubits {self.n}"]
        for g in self.gates:
            angle = "-" if g.angle is None else repr(g.angle)
            ctrls = ",".join(map(str, g.controls)) or "-"
            lines.append(f"{g.kind} {angle} {ctrls} {g.target}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Circuit:
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows or rows[0][0] != "qubits" or len(rows[0]) != 2:
            raise ValueError("circuit text must start with 'qubits <n>'")
        c = cls(int(rows[0][1]))
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != 4:
                raise ValueError(f"line {lineno}: expected 4 fields, got {len(row)}")
            kind, angle, ctrls, target = row
            c.add(
                kind,
                int(target),
                () if ctrls == "-" else tuple(int(x) for x in ctrls.split(",")),
                None if angle == "-" else float(angle),
            )
        return c


@dataclass
class ResourceReport:
    counts: dict[str, int]
    total: int
    depth: int


# -- simulation ---------------------------------------------------------------


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def _apply_gate(t: np.ndarray, g: Gate) -> None:
    """Apply ``g`` in place to a state tensor of shape ``(B, 2, ..., 2)``."""
    idx = [slice(None)] * t.ndim
    for c in g.controls:
        idx[c + 1] = 1
    i0 = list(idx)
    i1 = list(idx)
    i0[g.target + 1] = 0
    i1[g.target + 1] = 1
    i0, i1 = tuple(i0), tuple(i1)
    m = g.matrix()
    if g.kind in _DIAGONAL:
        if m[0, 0] != 1:
            t[i0] *= m[0, 0]
        t[i1] *= m[1, 1]
        return
    a0 = t[i0]
    a1 = t[i1]
    n0 = m[0, 0] * a0 + m[0, 1] * a1
    n1 = m[1, 0] * a0 + m[1, 1] * a1
    t[i0] = n0
    t[i1] = n1


def simulate(c: Circuit, state: np.ndarray | None = None) -> np.ndarray:
    """Apply the circuit to ``state`` (default ``|0...0>``).

    ``state`` may have leading batch axes; the last axis must have length ``2^n``.
    """
    if state is None:
        state = zero_state(c.n)
    state = np.asarray(state, dtype=complex)
    if state.shape[-1] != 2**c.n:
        raise ValueError(f"state has length {state.shape[-1]}, circuit acts on {c.n} qubits")
    batch = state.shape[:-1]
    t = state.reshape((-1,) + (2,) * c.n).copy()
    for g in c.gates:
        _apply_gate(t, g)
    return t.reshape(batch + (2**c.n,))


def simulate_batch(c: Circuit, thetas, state: np.ndarray | None = None) -> np.ndarray:
    """Simulate once per row of ``thetas`` (shape ``(B, m)``) in a single pass.

    The RY gates listed in ``c.parameter_slots`` take their angles from
    ``thetas``; every other gate is shared by the whole batch. Returns ``(B, 2^n)``.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    B = thetas.shape[0]
    if thetas.shape[1] != len(c.parameter_slots):
        raise ValueError(f"circuit has {len(c.parameter_slots)} parameters, got {thetas.shape[1]}")
    if state is None:
        state = zero_state(c.n)
    state = np.broadcast_to(np.asarray(state, dtype=complex), (B, 2**c.n))
    t = state.reshape((B,) + (2,) * c.n).copy()
    by_pos = {pos: k for k, pos in c.parameter_slots.items()}
    cos = np.cos(thetas / 2)
    sin = np.sin(thetas / 2)
    for pos, g in enumerate(c.gates):
        k = by_pos.get(pos)
        if k is None:
            _apply_gate(t, g)
            continue
        idx = [slice(None)] * t.ndim
        for q in g.controls:
            idx[q + 1] = 1
        i0, i1 = list(idx), list(idx)
        i0[g.target + 1] = 0
        i1[g.target + 1] = 1
        i0, i1 = tuple(i0), tuple(i1)
        a0 = t[i0]
        shape = (B,) + (1,) * (a0.ndim - 1)
        cs, sn = cos[:, k].reshape(shape), sin[:, k].reshape(shape)
        a1 = t[i1]
        t[i0], t[i1] = cs * a0 - sn * a1, sn * a0 + cs * a1
    return t.reshape(B, 2**c.n)


def unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of a circuit (column ``k`` is the image of basis state ``k``)."""
    return simulate(c, np.eye(2**c.n, dtype=complex)).T


# -- ansatz ---------------------------------------------------------------------


def n_params(n: int, layers: int) -> int:
    return n + layers * (2 * n - 2)


def _cz_pairs(n: int, start: int) -> list[tuple[int, int]]:
    return [(q, q + 1) for q in range(start, n - 1, 2)]


def build_ansatz(n: int, layers: int, theta) -> Circuit:
    """Layered RY/CZ ansatz with real amplitudes.

    An initial RY on every qubit, then per layer: CZ on pairs (0,1),(2,3),...,
    RY on every qubit, CZ on pairs (1,2),(3,4),..., RY on qubits 1..n-2.
    This gives ``n + layers*(2n-2)`` parameters. ``n == 1`` is accepted with
    ``layers == 0`` only (a single RY), for toy problems.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if n < 1 or layers < 0 or (n == 1 and layers > 0):
        raise ValueError(f"invalid ansatz shape n={n}, layers={layers}")
    expected = n_params(n, layers)
    if theta.size != expected:
        raise ValueError(f"ansatz with n={n}, layers={layers} expects {expected} angles, got {theta.size}")
    c = Circuit(n)
    k = 0

    def ry(q):
        nonlocal k
        c.parameter_slots[k] = len(c.gates)
        c.add("RY", q, angle=theta[k])
        k += 1

    for q in range(n):
        ry(q)
    for _ in range(layers):
        for a, b in _cz_pairs(n, 0):
            c.add("CZ", b, (a,))
        for q in range(n):
            ry(q)
        for a, b in _cz_pairs(n, 1):
            c.add("CZ", b, (a,))
        for q in range(1, n - 1):
            ry(q)
    return c


@functools.lru_cache(maxsize=None)
def _cz_signs(n: int, start: int) -> np.ndarray:
    idx = np.arange(2**n)
    sign = np.ones(2**n)
    for a, b in _cz_pairs(n, start):
        both = ((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)
        sign[both == 1] *= -1
    sign.flags.writeable = False
    return sign.reshape((1,) + (2,) * n)


def ansatz_states(n: int, layers: int, thetas) -> np.ndarray:
    """Batched real statevectors ``V(theta)|0>`` for the layered ansatz.

    ``thetas`` has shape ``(m,)`` or ``(B, m)``; returns ``(2^n,)`` or ``(B, 2^n)``.
    Equivalent to ``simulate(build_ansatz(n, layers, theta))`` but vectorized
    over the batch and specialised to RY/CZ.
    """
    thetas = np.asarray(thetas, dtype=float)
    single = thetas.ndim == 1
    thetas = np.atleast_2d(thetas)
    B, m = thetas.shape
    if m != n_params(n, layers) or (n == 1 and layers > 0):
        raise ValueError(f"ansatz with n={n}, layers={layers} expects {n_params(n, layers)} angles, got {m}")
    half = thetas / 2
    cs = np.empty((B, m, 2))
    cs[..., 0] = np.cos(half)
    cs[..., 1] = np.sin(half)
    # the first RY layer acts on |0...0>: a product state
    t = cs[:, 0]
    for q in range(1, n):
        t = (t[:, :, None] * cs[:, q, None, :]).reshape(B, -1)
    k = n
    # rot[:, k] = [[c, -s], [s, c]] for parameter k, broadcast over the batch
    rot = np.empty((B, m, 1, 2, 2))
    rot[:, :, 0, 0, 0] = rot[:, :, 0, 1, 1] = cs[..., 0]
    rot[:, :, 0, 1, 0] = cs[..., 1]
    rot[:, :, 0, 0, 1] = -cs[..., 1]

    def ry(q):
        nonlocal t, k
        t = np.matmul(rot[:, k], t.reshape(B, 2**q, 2, -1)).reshape(B, -1)
        k += 1

    even = _cz_signs(n, 0).reshape(1, -1)
    odd = _cz_signs(n, 1).reshape(1, -1)
    for _ in range(layers):
        t = t * even
        for q in range(n):
            ry(q)
        t = t * odd
        for q in range(1, n - 1):
            ry(q)
    return t[0] if single else t


# -- state preparation --------------------------------------------------------------


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _multiplexed_ry(c: Circuit, target: int, controls: list[int], alphas: np.ndarray) -> None:
    """Uniformly controlled RY: angle ``alphas[x]`` when the controls read ``x``.

    Gray-code expansion into ``2^k`` RY and ``2^k`` CX gates. ``controls[0]``
    is the most significant bit of ``x``.
    """
    k = len(controls)
    if np.allclose(alphas, 0.0, atol=1e-15):
        return
    if k == 0 or np.allclose(alphas, alphas[0], atol=1e-15, rtol=0):
        c.add("RY", target, angle=float(alphas[0]))
        return
    size = 2**k
    # alpha_x = sum_i (-1)^{popcount(x & gray(i))} theta_i
    signs = np.array([[(-1) ** bin(x & _gray(i)).count("1") for i in range(size)] for x in range(size)])
    thetas = signs.T @ alphas / size
    for i in range(size):
        c.add("RY", target, angle=float(thetas[i]))
        flip = _gray(i) ^ _gray((i + 1) % size)
        bit = flip.bit_length() - 1
        c.add("CX", target, (controls[k - 1 - bit],))


def prepare_state(b, norm_tol: float = 1e-9) -> Circuit:
    """Circuit ``U`` with ``U|0> = b`` for a real unit vector ``b`` (exact phase).

    Binary tree of uniformly controlled RY rotations: interior levels split
    subtree norms, the leaf level uses signed amplitudes so that negative
    entries come out right without any phase gates.
    """
    b = np.asarray(b)
    if np.iscomplexobj(b):
        if np.any(np.abs(b.imag) > norm_tol):
            raise ValueError("prepare_state handles real amplitudes only")
        b = b.real
    b = b.astype(float).ravel()
    n = int(b.size).bit_length() - 1
    if b.size < 2 or 2**n != b.size:
        raise ValueError(f"length {b.size} is not a power of 2 (>= 2)")
    if abs(np.linalg.norm(b) - 1.0) > norm_tol:
        raise ValueError(f"b must have unit norm, got {np.linalg.norm(b):.12f}")
    c = Circuit(n)
    for level in range(n):
        blocks = b.reshape(2**level, 2, -1)
        if level == n - 1:
            alphas = 2 * np.arctan2(blocks[:, 1, 0], blocks[:, 0, 0])
        else:
            norms = np.linalg.norm(blocks, axis=2)
            alphas = 2 * np.arctan2(norms[:, 1], norms[:, 0])
        _multiplexed_ry(c, level, list(range(level)), alphas)
    return c


# -- transforms ---------------------------------------------------------------------


def controlled(c: Circuit) -> Circuit:
    """Add one control qubit as the new qubit 0; data qubits shift up by one."""
    gates = [g.shifted(1).with_control(0) for g in c.gates]
    return Circuit(c.n + 1, gates, dict(c.parameter_slots))


def pauli_circuit(p: str) -> Circuit:
    """Circuit applying a Pauli string (identity letters emit nothing)."""
    c = Circuit(len(p))
    for q, ch in enumerate(p):
        if ch != "I":
            c.add(ch, q)
    return c


def _g(kind, target, controls=(), angle=None):
    return Gate(kind, target, tuple(controls), angle)


def _lower_cz(c: int, t: int) -> list[Gate]:
    return [_g("RY", t, angle=math.pi / 2), _g("CX", t, (c,)), _g("RY", t, angle=-math.pi / 2)]


def _lower_ccz(c1: int, c2: int, t: int) -> list[Gate]:
    q = math.pi / 4
    return [
        _g("CX", t, (c2,)), _g("RZ", t, angle=-q),
        _g("CX", t, (c1,)), _g("RZ", t, angle=q),
        _g("CX", t, (c2,)), _g("RZ", t, angle=-q),
        _g("CX", t, (c1,)), _g("RZ", c2, angle=q), _g("RZ", t, angle=q),
        _g("CX", c2, (c1,)), _g("RZ", c1, angle=q), _g("RZ", c2, angle=-q),
        _g("CX", c2, (c1,)),
    ]  # fmt: skip


def _lower_controlled_phase(c: int, t: int, phi: float) -> list[Gate]:
    return [
        _g("RZ", c, angle=phi / 2),
        _g("RZ", t, angle=phi / 2),
        _g("CX", t, (c,)),
        _g("RZ", t, angle=-phi / 2),
        _g("CX", t, (c,)),
    ]


def _lower_controlled_rotation(kind: str, c: int, t: int, angle: float) -> list[Gate]:
    if kind in ("RY", "RZ"):
        return [_g(kind, t, angle=angle / 2), _g("CX", t, (c,)), _g(kind, t, angle=-angle / 2), _g("CX", t, (c,))]
    # RX(a) = RY(pi/2) RZ(a) RY(-pi/2)
    return [_g("RY", t, angle=-math.pi / 2), *_lower_controlled_rotation("RZ", c, t, angle), _g("RY", t, angle=math.pi / 2)]


def _lower_gate(g: Gate) -> list[Gate]:
    t, cs = g.target, g.controls
    pi = math.pi
    if not cs:
        return {
            "RX": lambda: [g],
            "RY": lambda: [g],
            "RZ": lambda: [g],
            "H": lambda: [_g("RZ", t, angle=pi), _g("RY", t, angle=pi / 2)],
            "S": lambda: [_g("RZ", t, angle=pi / 2)],
            "Sdg": lambda: [_g("RZ", t, angle=-pi / 2)],
            "X": lambda: [_g("RX", t, angle=pi)],
            "Y": lambda: [_g("RY", t, angle=pi)],
            "Z": lambda: [_g("RZ", t, angle=pi)],
        }[g.kind]()
    if len(cs) == 1:
        c = cs[0]
        if g.kind == "CX":
            return [g]
        if g.kind == "CZ":
            return _lower_cz(c, t)
        if g.kind in ROTATIONS:
            return _lower_controlled_rotation(g.kind, c, t, g.angle)
        if g.kind == "Y":  # Y = S X S^dagger
            return [_g("RZ", t, angle=-pi / 2), _g("CX", t, (c,)), _g("RZ", t, angle=pi / 2)]
        if g.kind == "H":  # H = RY(pi/4) Z RY(-pi/4)
            return [_g("RY", t, angle=-pi / 4), *_lower_cz(c, t), _g("RY", t, angle=pi / 4)]
        if g.kind == "S":
            return _lower_controlled_phase(c, t, pi / 2)
        if g.kind == "Sdg":
            return _lower_controlled_phase(c, t, -pi / 2)
    if len(cs) == 2:
        if g.kind == "CZ":
            return _lower_ccz(cs[0], cs[1], t)
        if g.kind == "CX":  # X = RY(pi/2) Z RY(-pi/2)
            return [_g("RY", t, angle=-pi / 2), *_lower_ccz(cs[0], cs[1], t), _g("RY", t, angle=pi / 2)]
    raise NotImplementedError(f"no lowering rule for {g.kind} with {len(cs)} control(s)")


def _wrap(angle: float) -> float:
    """Map to (-pi, pi]; a 2*pi shift only changes the global phase."""
    a = math.remainder(angle, 2 * math.pi)
    return math.pi if abs(a + math.pi) < 1e-15 else a


def peephole(gates: list[Gate], n: int, tol: float = 1e-12) -> list[Gate]:
    """Merge adjacent same-axis rotations on a qubit and drop zero rotations."""
    out: list[Gate | None] = []
    last: dict[int, int] = {}  # qubit -> index in out of the latest gate touching it
    for g in gates:
        if g.kind in ROTATIONS and not g.controls:
            j = last.get(g.target)
            prev = out[j] if j is not None else None
            if prev is not None and prev.kind == g.kind and not prev.controls:
                merged = _wrap(prev.angle + g.angle)
                if abs(merged) <= tol:
                    out[j] = None
                    # the qubit's previous gate is no longer known; be conservative
                    last.pop(g.target)
                else:
                    out[j] = Gate(g.kind, g.target, (), merged)
                continue
            angle = _wrap(g.angle)
            if abs(angle) <= tol:
                continue
            g = Gate(g.kind, g.target, (), angle)
        out.append(g)
        for q in g.qubits:
            last[q] = len(out) - 1
    return [g for g in out if g is not None]


def lower(c: Circuit) -> Circuit:
    """Rewrite into ``{RX, RY, RZ, CX}`` (equal up to global phase) and peephole-optimise."""
    gates: list[Gate] = []
    for g in c.gates:
        gates.extend(_lower_gate(g))
    return Circuit(c.n, peephole(gates, c.n))


def is_lowered(c: Circuit) -> bool:
    return all(
        (g.kind in ROTATIONS and not g.controls) or (g.kind == "CX" and len(g.controls) == 1) for g in c.gates
    )


def resources(c: Circuit) -> ResourceReport:
    """Gate counts by kind and depth of a lowered circuit."""
    if not is_lowered(c):
        raise ValueError("resources() expects a lowered circuit; call lower() first")
    counts = {k: 0 for k in BASIS}
    level = [0] * c.n
    for g in c.gates:
        counts[g.kind] += 1
        d = 1 + max(level[q] for q in g.qubits)
        for q in g.qubits:
            level[q] = d
    return ResourceReport(counts, sum(counts.values()), max(level, default=0))
