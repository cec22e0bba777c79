import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqelast.sv_core import (
    Circuit,
    Gate,
    PostselectionFailure,
    StateVector,
    apply_circuit,
    decompose_to_basis,
    hadamard_ancilla_expectation,
    postselect,
    resource_report,
    simulate,
)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def dense_unitary(circ: Circuit) -> np.ndarray:
    """Direct matrix action, the reference for the simulator."""
    dim = 2**circ.num_qubits
    cols = []
    for k in range(dim):
        amp = np.zeros(dim, dtype=complex)
        amp[k] = 1.0
        cols.append(apply_circuit(StateVector(amp, circ.num_qubits), circ).amplitudes)
    return np.array(cols).T


def random_circuit(num_qubits: int, length: int, rng) -> Circuit:
    circ = Circuit(num_qubits)
    for _ in range(length):
        kind = rng.integers(0, 6)
        q = int(rng.integers(0, num_qubits))
        if kind == 0:
            circ.h(q)
        elif kind == 1:
            circ.ry(float(rng.uniform(0, 2 * np.pi)), q)
        elif kind == 2:
            circ.rz(float(rng.uniform(0, 2 * np.pi)), q)
        elif kind == 3:
            others = [p for p in range(num_qubits) if p != q]
            circ.cx(int(rng.choice(others)), q)
        elif kind == 4:
            others = [p for p in range(num_qubits) if p != q]
            circ.cz(int(rng.choice(others)), q)
        else:
            ctrls = tuple(p for p in range(num_qubits) if p != q)
            circ.x(q, controls=ctrls)
    return circ


class TestGateApplication:
    def test_bit_flip_little_endian(self):
        circ = Circuit(3)
        circ.x(0)
        out = simulate(circ)
        want = np.zeros(8)
        want[1] = 1.0  # qubit 0 is the least significant bit
        np.testing.assert_allclose(out.amplitudes, want, atol=1e-15)

    def test_single_qubit_ry(self):
        circ = Circuit(1)
        circ.ry(math.pi / 2, 0)
        out = simulate(circ)
        np.testing.assert_allclose(
            out.amplitudes.real, [math.cos(math.pi / 4), math.sin(math.pi / 4)], atol=1e-15
        )

    def test_mcx_flips_only_all_ones_controls(self):
        circ = Circuit(3)
        circ.x(0)
        circ.x(1)
        circ.x(2, controls=(0, 1))
        out = simulate(circ)
        assert abs(out.amplitudes[7]) == pytest.approx(1.0)

    def test_swap(self):
        circ = Circuit(2)
        circ.x(0)
        circ.swap(0, 1)
        out = simulate(circ)
        assert abs(out.amplitudes[2]) == pytest.approx(1.0)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            apply_circuit(StateVector.zero(2), Circuit(3))

    def test_qubit_out_of_range_rejected(self):
        circ = Circuit(2)
        with pytest.raises(IndexError):
            circ.x(5)

    def test_repeated_qubit_rejected(self):
        circ = Circuit(2)
        with pytest.raises(ValueError):
            circ.add("swap", (1, 1))


class TestUnitarity:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_norm_preserved(self, seed):
        rng = np.random.default_rng(seed)
        circ = random_circuit(3, 25, rng)
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi /= np.linalg.norm(psi)
        out = apply_circuit(StateVector(psi, 3), circ)
        assert abs(out.norm() - 1.0) < 1e-12

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_adjoint_inversion(self, seed):
        rng = np.random.default_rng(seed)
        circ = random_circuit(3, 25, rng)
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi /= np.linalg.norm(psi)
        state = StateVector(psi.copy(), 3)
        out = apply_circuit(apply_circuit(state, circ), circ.adjoint())
        np.testing.assert_allclose(out.amplitudes, psi, atol=1e-10)


class TestHadamardReadout:
    def test_identity_block_gives_one(self):
        circ = Circuit(2)
        circ.h(0)
        circ.h(0)
        assert hadamard_ancilla_expectation(circ, 0) == pytest.approx(1.0)

    def test_z_on_excited_qubit_gives_minus_one(self):
        circ = Circuit(2)
        circ.x(1)
        circ.h(0)
        circ.z(1, controls=(0,))
        circ.h(0)
        assert hadamard_ancilla_expectation(circ, 0) == pytest.approx(-1.0)

    def test_matches_direct_matrix_action(self):
        # E = Re<psi|U|psi> for a controlled block U, by dense linear algebra
        rng = np.random.default_rng(5)
        block = random_circuit(2, 10, rng)
        prep = random_circuit(2, 8, np.random.default_rng(7))
        circ = Circuit(3)
        circ.compose(prep, qubit_map={0: 1, 1: 2})
        circ.h(0)
        for g in block.ops:
            circ.add(g.name, tuple(t + 1 for t in g.targets),
                     tuple(c + 1 for c in g.controls) + (0,), g.angle)
        circ.h(0)
        e = hadamard_ancilla_expectation(circ, 0)
        psi = simulate(prep).amplitudes
        u = dense_unitary(block)
        assert e == pytest.approx(float(np.real(psi.conj() @ u @ psi)), abs=1e-9)

    def test_ancilla_out_of_range(self):
        with pytest.raises(IndexError):
            hadamard_ancilla_expectation(Circuit(2), 4)


class TestPostselect:
    def test_product_state_untouched(self):
        circ = Circuit(3)
        circ.h(1)
        circ.cx(1, 2)
        state = simulate(circ)
        reduced, prob = postselect(state, [0])
        assert prob == pytest.approx(1.0)
        want = np.zeros(4, dtype=complex)
        want[0] = want[3] = 1 / math.sqrt(2)
        np.testing.assert_allclose(reduced.amplitudes, want, atol=1e-12)

    def test_uniform_superposition_half_mass(self):
        circ = Circuit(1)
        circ.h(0)
        _, prob = postselect(simulate(circ), [0])
        assert prob == pytest.approx(0.5)

    def test_zero_probability_branch_raises(self):
        state = StateVector.zero(2)  # qubit 1 is |0>, selecting |1> impossible
        circ = Circuit(2)
        circ.x(1)
        state = apply_circuit(state, circ)
        with pytest.raises(PostselectionFailure):
            postselect(state, [1])

    def test_renormalized(self):
        circ = Circuit(2)
        circ.ry(1.1, 0)
        circ.ry(0.4, 1)
        reduced, _ = postselect(simulate(circ), [0])
        assert reduced.norm() == pytest.approx(1.0, abs=1e-13)


class TestResourceReport:
    def test_empty_circuit_depth_zero(self):
        rep = resource_report(Circuit(3))
        assert rep.depth == 0 and rep.total_gates == 0

    def test_single_cx(self):
        circ = Circuit(2)
        circ.cx(0, 1)
        rep = resource_report(circ)
        assert rep.depth == 1 and rep.width == 2
        assert rep.gate_counts == {"cx": 1}

    def test_depth_invariant_under_relabeling(self):
        rng = np.random.default_rng(3)
        circ = random_circuit(4, 30, rng)
        perm = {0: 2, 1: 0, 2: 3, 3: 1}
        relabeled = Circuit(4)
        for g in circ.ops:
            relabeled.add(g.name, tuple(perm[t] for t in g.targets),
                          tuple(perm[c] for c in g.controls), g.angle)
        assert resource_report(circ).depth == resource_report(relabeled).depth

    def test_decomposition_preserves_unitary(self):
        # every decomposition rule must preserve the matrix up to global phase
        cases = [
            Gate("x", (2,), (0, 1)),
            Gate("z", (2,), (0, 1)),
            Gate("ry", (2,), (0, 1), 0.7),
            Gate("x", (3,), (0, 1, 2)),
            Gate("h", (1,), (0,)),
            Gate("y", (1,), (0,)),
            Gate("swap", (0, 2), (1,)),
        ]
        for gate in cases:
            q = max(gate.qubits()) + 1
            direct = Circuit(q)
            direct.ops.append(gate)
            expanded = Circuit(q)
            expanded.ops = decompose_to_basis([gate])
            u1 = dense_unitary(direct)
            u2 = dense_unitary(expanded)
            phase = u2[0, 0] / u1[0, 0] if abs(u1[0, 0]) > 1e-12 else 1.0
            np.testing.assert_allclose(u2, phase * u1, atol=1e-9, err_msg=str(gate))

    def test_segments(self):
        circ = Circuit(2)
        circ.mark("input")
        circ.h(0)
        circ.mark("qnpu")
        circ.cx(0, 1)
        circ.cx(0, 1)
        assert len(circ.segment_ops("input")) == 1
        assert len(circ.segment_ops("qnpu")) == 2
        assert resource_report(circ, segment="qnpu").depth == 2
