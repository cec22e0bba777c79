import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqelast.ansatz import (
    ControlParams,
    build_ansatz,
    controlled_ansatz,
    num_angles,
    realize_unit,
    realize_vector,
)
from vqelast.sv_core import StateVector, apply_circuit, simulate


# (n, d, p) rows of the published scaling study
SCALING_ROWS = [(3, 2, 9), (3, 4, 15), (4, 4, 20), (4, 6, 28), (5, 6, 35), (5, 8, 45)]


@pytest.mark.parametrize("n,d,p", SCALING_ROWS)
def test_parameter_count_law(n, d, p):
    assert num_angles(n, d) == p
    circ = build_ansatz(n, d, np.zeros(p))
    assert sum(1 for g in circ.ops if g.name == "ry") == p


def test_wrong_parameter_count_rejected():
    with pytest.raises(ValueError):
        build_ansatz(3, 2, np.zeros(8))
    with pytest.raises(ValueError):
        ControlParams(1.0, np.zeros(8), 3, 2)


def test_zero_angles_give_ground_state():
    out = realize_unit(3, 2, np.zeros(9))
    want = np.zeros(8)
    want[0] = 1.0
    np.testing.assert_allclose(out, want, atol=1e-15)


def test_single_qubit_single_layer():
    theta = 0.83
    out = realize_unit(1, 0, [theta])
    np.testing.assert_allclose(out, [math.cos(theta / 2), math.sin(theta / 2)], atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_real_amplitudes_and_unit_norm(seed):
    rng = np.random.default_rng(seed)
    n, d = 3, 2
    angles = rng.uniform(0, 2 * np.pi, num_angles(n, d))
    state = simulate(build_ansatz(n, d, angles))
    assert np.max(np.abs(state.amplitudes.imag)) < 1e-12
    assert abs(state.norm() - 1.0) < 1e-12


def test_fast_path_matches_circuit():
    rng = np.random.default_rng(1)
    for n, d in ((2, 1), (3, 2), (4, 3)):
        angles = rng.uniform(0, 2 * np.pi, num_angles(n, d))
        fast = realize_unit(n, d, angles)
        slow = simulate(build_ansatz(n, d, angles)).amplitudes
        np.testing.assert_allclose(fast, slow.real, atol=1e-13)


def test_realize_vector_norm_is_scale():
    rng = np.random.default_rng(2)
    params = ControlParams(0.37, rng.uniform(0, 2 * np.pi, 9), 3, 2)
    vec = realize_vector(params)
    assert np.linalg.norm(vec) == pytest.approx(0.37, abs=1e-12)
    assert np.linalg.norm(realize_vector(params.with_scale(0.0))) == 0.0


def test_realize_basis_vector():
    out = realize_vector(ControlParams(1.0, np.zeros(9), 3, 2))
    np.testing.assert_allclose(out, np.eye(8)[0], atol=1e-15)


class TestControlledAnsatz:
    def test_control_zero_leaves_target(self):
        rng = np.random.default_rng(3)
        angles = rng.uniform(0, 2 * np.pi, 9)
        circ = controlled_ansatz(3, 2, angles, control=3)
        out = simulate(circ)
        want = np.zeros(16)
        want[0] = 1.0
        np.testing.assert_allclose(out.amplitudes.real, want, atol=1e-13)

    def test_control_one_matches_uncontrolled(self):
        rng = np.random.default_rng(4)
        angles = rng.uniform(0, 2 * np.pi, 9)
        circ = controlled_ansatz(3, 2, angles, control=3)
        init = np.zeros(16, dtype=complex)
        init[8] = 1.0  # control qubit set
        out = apply_circuit(StateVector(init, 4), circ).amplitudes
        np.testing.assert_allclose(out[8:].real, realize_unit(3, 2, angles), atol=1e-13)
        np.testing.assert_allclose(out[:8], 0, atol=1e-15)

    def test_superposed_control_branches(self):
        rng = np.random.default_rng(5)
        angles = rng.uniform(0, 2 * np.pi, 9)
        circ = controlled_ansatz(3, 2, angles, control=3)
        init = np.zeros(16, dtype=complex)
        init[0] = init[8] = 1 / math.sqrt(2)
        out = apply_circuit(StateVector(init, 4), circ).amplitudes
        np.testing.assert_allclose(out[8:].real * math.sqrt(2), realize_unit(3, 2, angles), atol=1e-12)
        assert abs(out[0] - 1 / math.sqrt(2)) < 1e-12

    def test_control_overlap_rejected(self):
        with pytest.raises(ValueError):
            controlled_ansatz(3, 2, np.zeros(9), control=1)
