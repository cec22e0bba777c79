"""Noiseless statevector simulator.

Qubit ordering is little-endian throughout the package: qubit 0 is the least
significant bit of the computational basis index, so ``|k⟩`` assigns the state
of qubit ``j`` from bit ``j`` of ``k``.  Amplitudes are complex even when the
encoded data is real, because intermediate Hadamard-test states are not.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

# Gates with a fixed 2x2 matrix.
_FIXED_1Q = {
    "h": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "t": np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
    "tdg": np.array([[1, 0], [0, np.exp(-1j * math.pi / 4)]], dtype=complex),
}

_PARAM_1Q = {"rx", "ry", "rz", "phase"}

_SELF_ADJOINT = {"h", "x", "y", "z", "swap"}
_ADJOINT_PAIRS = {"s": "sdg", "sdg": "s", "t": "tdg", "tdg": "t"}

POSTSELECT_EPS = 1e-14


def _param_matrix(name: str, angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    if name == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if name == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if name == "rz":
        return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=complex)
    if name == "phase":
        return np.array([[1, 0], [0, np.exp(1j * angle)]], dtype=complex)
    raise ValueError(f"unknown parametric gate {name!r}")


@dataclass(frozen=True)
class Gate:
    """One operation: ``name`` on ``targets``, conditioned on ``controls``.

    Any gate may carry an arbitrary number of controls; a bare ``x`` with two
    controls is a Toffoli, with more it is a multi-controlled X.
    """

    name: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    angle: float | None = None

    def qubits(self) -> tuple[int, ...]:
        return self.targets + self.controls

    def adjoint(self) -> "Gate":
        if self.name in _SELF_ADJOINT:
            return self
        if self.name in _ADJOINT_PAIRS:
            return replace(self, name=_ADJOINT_PAIRS[self.name])
        if self.name in _PARAM_1Q:
            return replace(self, angle=-self.angle)
        raise ValueError(f"no adjoint rule for gate {self.name!r}")


@dataclass
class Circuit:
    """Ordered gate list on a fixed-width register.

    ``marks`` label positions in the op list (segment boundaries) so resource
    accounting can report e.g. the QNPU block separately from input
    preparation.
    """

    num_qubits: int
    label: str = ""
    ops: list[Gate] = field(default_factory=list)
    marks: list[tuple[str, int]] = field(default_factory=list)

    def _check(self, qubits: tuple[int, ...]) -> None:
        for q in qubits:
            if not 0 <= q < self.num_qubits:
                raise IndexError(f"qubit {q} out of range for {self.num_qubits}-qubit circuit")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in {qubits}")

    def add(self, name: str, targets, controls=(), angle: float | None = None) -> "Circuit":
        g = Gate(name, tuple(targets), tuple(controls), angle)
        self._check(g.qubits())
        self.ops.append(g)
        return self

    # thin wrappers, all accepting an optional control list
    def h(self, q, controls=()):
        return self.add("h", (q,), controls)

    def x(self, q, controls=()):
        return self.add("x", (q,), controls)

    def y(self, q, controls=()):
        return self.add("y", (q,), controls)

    def z(self, q, controls=()):
        return self.add("z", (q,), controls)

    def ry(self, angle, q, controls=()):
        return self.add("ry", (q,), controls, angle)

    def rz(self, angle, q, controls=()):
        return self.add("rz", (q,), controls, angle)

    def phase(self, angle, q, controls=()):
        return self.add("phase", (q,), controls, angle)

    def cx(self, control, target):
        return self.add("x", (target,), (control,))

    def cz(self, a, b):
        return self.add("z", (b,), (a,))

    def cry(self, angle, control, target):
        return self.add("ry", (target,), (control,), angle)

    def ccx(self, c1, c2, target):
        return self.add("x", (target,), (c1, c2))

    def mcx(self, controls, target):
        return self.add("x", (target,), tuple(controls))

    def swap(self, a, b):
        return self.add("swap", (a, b))

    def mark(self, name: str) -> "Circuit":
        self.marks.append((name, len(self.ops)))
        return self

    def extend(self, gates) -> "Circuit":
        for g in gates:
            self._check(g.qubits())
            self.ops.append(g)
        return self

    def compose(self, other: "Circuit", qubit_map: dict[int, int] | None = None) -> "Circuit":
        """Append ``other``'s gates, optionally relabelling its qubits."""
        for g in other.ops:
            if qubit_map is None:
                self.extend([g])
            else:
                self.extend(
                    [
                        Gate(
                            g.name,
                            tuple(qubit_map[q] for q in g.targets),
                            tuple(qubit_map[q] for q in g.controls),
                            g.angle,
                        )
                    ]
                )
        return self

    def adjoint(self) -> "Circuit":
        out = Circuit(self.num_qubits, label=f"{self.label}^dag" if self.label else "")
        out.ops = [g.adjoint() for g in reversed(self.ops)]
        return out

    def controlled(self, control: int) -> "Circuit":
        """Promote every gate to a controlled gate on ``control``."""
        out = Circuit(self.num_qubits, label=self.label)
        for g in self.ops:
            if control in g.qubits():
                raise ValueError("control qubit overlaps circuit support")
            out.ops.append(replace(g, controls=g.controls + (control,)))
        return out

    def segment_ops(self, name: str) -> list[Gate]:
        """Ops between mark ``name`` and the next mark (or the end)."""
        starts = [i for (m, i) in self.marks if m == name]
        if not starts:
            raise KeyError(f"no mark named {name!r}")
        start = starts[0]
        later = [i for (_, i) in self.marks if i > start]
        end = min(later) if later else len(self.ops)
        return self.ops[start:end]


@dataclass
class StateVector:
    """Complex amplitudes over the 2^q computational basis states."""

    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError("amplitude length must be exactly 2^num_qubits")

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        amp = np.zeros(2**num_qubits, dtype=complex)
        amp[0] = 1.0
        return cls(amp, num_qubits)

    @classmethod
    def from_array(cls, array) -> "StateVector":
        amp = np.asarray(array, dtype=complex).ravel()
        q = int(round(math.log2(amp.size)))
        if 2**q != amp.size:
            raise ValueError("length is not a power of two")
        return cls(amp.copy(), q)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.num_qubits)

    def probability(self, qubit: int, outcome: int) -> float:
        view = self.amplitudes.reshape((2,) * self.num_qubits)
        axis = self.num_qubits - 1 - qubit
        sub = np.take(view, outcome, axis=axis)
        return float(np.sum(np.abs(sub) ** 2))


def _apply_gate(amps: np.ndarray, num_qubits: int, gate: Gate) -> None:
    """Apply ``gate`` to the flat amplitude array in place."""
    view = amps.reshape((2,) * num_qubits)
    ctrl_axes = sorted(num_qubits - 1 - c for c in gate.controls)
    idx = [slice(None)] * num_qubits
    for a in ctrl_axes:
        idx[a] = 1
    sub = view[tuple(idx)]  # integer indexing yields a view

    def sub_axis(target: int) -> int:
        a = num_qubits - 1 - target
        return a - sum(1 for c in ctrl_axes if c < a)

    if gate.name == "swap":
        a1, a2 = sub_axis(gate.targets[0]), sub_axis(gate.targets[1])
        moved = np.moveaxis(sub, (a1, a2), (-2, -1))
        flat = moved.reshape(-1, 4)
        flat = flat[:, [0, 2, 1, 3]]
        moved[...] = flat.reshape(moved.shape)
        return

    if gate.name in _FIXED_1Q:
        mat = _FIXED_1Q[gate.name]
    elif gate.name in _PARAM_1Q:
        mat = _param_matrix(gate.name, gate.angle)
    else:
        raise ValueError(f"unknown gate {gate.name!r}")

    ax = sub_axis(gate.targets[0])
    moved = np.moveaxis(sub, ax, -1)
    flat = moved.reshape(-1, 2)
    moved[...] = (flat @ mat.T).reshape(moved.shape)


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    """Run all gates in order; the input state is not mutated."""
    if circuit.num_qubits != state.num_qubits:
        raise ValueError(
            f"circuit acts on {circuit.num_qubits} qubits, state has {state.num_qubits}"
        )
    amps = state.amplitudes.copy()
    for g in circuit.ops:
        _apply_gate(amps, state.num_qubits, g)
    return StateVector(amps, state.num_qubits)


def simulate(circuit: Circuit) -> StateVector:
    return apply_circuit(StateVector.zero(circuit.num_qubits), circuit)


def hadamard_ancilla_expectation(circuit: Circuit, ancilla: int) -> float:
    """P(0) - P(1) on the ancilla after running ``circuit`` from |0...0⟩.

    The circuit must already contain the surrounding Hadamard-test structure;
    this only reads out the ancilla statistics exactly.
    """
    if not 0 <= ancilla < circuit.num_qubits:
        raise IndexError("ancilla index out of range")
    final = simulate(circuit)
    return final.probability(ancilla, 0) - final.probability(ancilla, 1)


def projected_ancilla_expectation(
    circuit: Circuit, ancilla: int, zero_qubits=()
) -> tuple[float, float]:
    """Unnormalised Hadamard readout restricted to a projected branch.

    Returns ``(e, p)`` where ``e = P(ancilla=0, Z=0) - P(ancilla=1, Z=0)``
    with ``Z`` the listed qubits projected onto all-zero, and ``p`` the total
    probability mass of that branch.  With no projected qubits this is the
    plain Hadamard-test expectation.
    """
    final = simulate(circuit)
    amps = final.amplitudes
    q = final.num_qubits
    mask = np.ones(amps.size, dtype=bool)
    if zero_qubits:
        k = np.arange(amps.size)
        for zq in zero_qubits:
            mask &= (k >> zq) & 1 == 0
    probs = np.abs(amps) ** 2
    probs = np.where(mask, probs, 0.0)
    k = np.arange(amps.size)
    anc1 = (k >> ancilla) & 1 == 1
    p0 = float(np.sum(probs[~anc1]))
    p1 = float(np.sum(probs[anc1]))
    return p0 - p1, p0 + p1


def postselect(state: StateVector, qubits) -> tuple[StateVector, float]:
    """Project the listed qubits onto |0⟩, renormalise, return success mass."""
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError("postselect qubits must be distinct")
    for q in qubits:
        if not 0 <= q < state.num_qubits:
            raise IndexError(f"qubit {q} out of range")
    q = state.num_qubits
    keep_axes = [q - 1 - i for i in sorted(qubits, reverse=True)]
    view = state.amplitudes.reshape((2,) * q)
    idx = [slice(None)] * q
    for a in keep_axes:
        idx[a] = 0
    sub = view[tuple(idx)]
    prob = float(np.sum(np.abs(sub) ** 2))
    if prob < POSTSELECT_EPS:
        raise PostselectionFailure(f"branch probability {prob:.3e} below {POSTSELECT_EPS}")
    # slicing preserves the relative order of the surviving qubits, which is
    # exactly the little-endian layout of the reduced register
    out = sub.reshape(-1).copy() / math.sqrt(prob)
    return StateVector(out, state.num_qubits - len(qubits)), prob


class PostselectionFailure(RuntimeError):
    """Raised when the projected branch carries essentially no probability."""


# ---------------------------------------------------------------------------
# Resource accounting


@dataclass
class ResourceReport:
    width: int
    depth: int
    gate_counts: dict[str, int]

    @property
    def total_gates(self) -> int:
        return sum(self.gate_counts.values())


_BASIS_1Q = {"h", "x", "y", "z", "s", "sdg", "t", "tdg", "rx", "ry", "rz", "phase"}


def _ccx_basis(c1: int, c2: int, t: int) -> list[Gate]:
    """Standard ancilla-free Toffoli decomposition into {h, t, tdg, cx}."""
    G = Gate
    return [
        G("h", (t,)),
        G("x", (t,), (c2,)),
        G("tdg", (t,)),
        G("x", (t,), (c1,)),
        G("t", (t,)),
        G("x", (t,), (c2,)),
        G("tdg", (t,)),
        G("x", (t,), (c1,)),
        G("t", (c2,)),
        G("t", (t,)),
        G("h", (t,)),
        G("x", (c2,), (c1,)),
        G("t", (c1,)),
        G("tdg", (c2,)),
        G("x", (c2,), (c1,)),
    ]


def _mc_rot(name: str, angle: float, controls: tuple[int, ...], t: int) -> list[Gate]:
    """Recursive multi-controlled rotation via the standard V / V† ladder."""
    if len(controls) == 1:
        return [Gate(name, (t,), controls, angle)]
    c_last, rest = controls[-1], controls[:-1]
    out = [Gate(name, (t,), (c_last,), angle / 2)]
    out += _decompose_gate(Gate("x", (c_last,), rest))
    out += [Gate(name, (t,), (c_last,), -angle / 2)]
    out += _decompose_gate(Gate("x", (c_last,), rest))
    out += _mc_rot(name, angle / 2, rest, t)
    return out


def _decompose_gate(gate: Gate) -> list[Gate]:
    """Expand into the one/two-qubit basis: 1q gates plus singly controlled
    Pauli/phase/rotation gates."""
    nc = len(gate.controls)
    if gate.name == "swap":
        a, b = gate.targets
        cx_like = [
            Gate("x", (b,), (a,) + gate.controls),
            Gate("x", (a,), (b,) + gate.controls),
            Gate("x", (b,), (a,) + gate.controls),
        ]
        out: list[Gate] = []
        for g in cx_like:
            out += _decompose_gate(g)
        return out
    if nc == 0:
        return [gate]
    if nc == 1:
        if gate.name in {"x", "z", "rx", "ry", "rz", "phase"}:
            return [gate]
        if gate.name == "h":
            c, t = gate.controls[0], gate.targets[0]
            return [Gate("z", (t,), (c,)), Gate("ry", (t,), (c,), math.pi / 2)]
        if gate.name == "y":
            c, t = gate.controls[0], gate.targets[0]
            return [Gate("sdg", (t,)), Gate("x", (t,), (c,)), Gate("s", (t,))]
        if gate.name in {"s", "sdg", "t", "tdg"}:
            ang = {"s": math.pi / 2, "sdg": -math.pi / 2, "t": math.pi / 4, "tdg": -math.pi / 4}
            return [Gate("phase", gate.targets, gate.controls, ang[gate.name])]
        raise ValueError(f"no decomposition rule for controlled {gate.name!r}")
    # nc >= 2
    t = gate.targets[0]
    if gate.name == "x":
        if nc == 2:
            return _ccx_basis(gate.controls[0], gate.controls[1], t)
        # X = RX(pi) up to a phase of i, which must itself be controlled
        return _mc_rot("rx", math.pi, gate.controls, t) + _decompose_gate(
            Gate("phase", (gate.controls[-1],), gate.controls[:-1], math.pi / 2)
        )
    if gate.name == "z":
        inner = _decompose_gate(Gate("x", (t,), gate.controls))
        return [Gate("h", (t,))] + inner + [Gate("h", (t,))]
    if gate.name in {"rx", "ry", "rz", "phase"}:
        return _mc_rot(gate.name, gate.angle, gate.controls, t)
    raise ValueError(f"no decomposition rule for {gate.name!r} with {nc} controls")


def decompose_to_basis(ops) -> list[Gate]:
    out: list[Gate] = []
    for g in ops:
        out += _decompose_gate(g)
    return out


def _depth(ops) -> int:
    frontier: dict[int, int] = {}
    depth = 0
    for g in ops:
        d = 1 + max((frontier.get(q, 0) for q in g.qubits()), default=0)
        for q in g.qubits():
            frontier[q] = d
        depth = max(depth, d)
    return depth


def resource_report(circuit: Circuit, segment: str | None = None) -> ResourceReport:
    """Gate counts and depth after decomposition to the one/two-qubit basis.

    Depth is the longest dependency chain over the decomposed gates; width is
    the full register size of the circuit (idle ancillas included, since they
    are part of the stated qubit budget).
    """
    ops = circuit.ops if segment is None else circuit.segment_ops(segment)
    basis = decompose_to_basis(ops)
    counts = Counter()
    for g in basis:
        key = g.name if not g.controls else f"c{g.name}"
        counts[key] += 1
    return ResourceReport(width=circuit.num_qubits, depth=_depth(basis), gate_counts=dict(counts))
