import numpy as np
import pytest

from vqelast.ansatz import num_angles, realize_unit
from vqelast.primitives import (
    EvalContext,
    TermSpec,
    adder_circuit,
    basis,
    build_term_circuit,
    dyn,
    eval_term,
    eval_term_algebraic,
    eval_term_circuit,
    fixed,
    inner_product_expect,
    mcx_ops,
)
from vqelast.sv_core import Circuit, StateVector, apply_circuit, simulate


def apply_to_basis(circ: Circuit, k: int) -> np.ndarray:
    amp = np.zeros(2**circ.num_qubits, dtype=complex)
    amp[k] = 1.0
    return apply_circuit(StateVector(amp, circ.num_qubits), circ).amplitudes


class TestMcxChain:
    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_matches_plain_mcx(self, k):
        controls = list(range(k))
        target = k
        work = list(range(k + 1, k + 1 + max(k - 1, 0)))
        q = k + 1 + len(work)
        chain = Circuit(q)
        chain.extend(mcx_ops(controls, target, work))
        plain = Circuit(q)
        plain.mcx(controls, target)
        for basis_k in range(2 ** (k + 1)):  # work qubits stay |0>
            np.testing.assert_allclose(
                apply_to_basis(chain, basis_k), apply_to_basis(plain, basis_k), atol=1e-13
            )

    def test_extra_control_gates_the_whole_gate(self):
        controls, target, extra = [0, 1, 2], 3, 4
        work = [5, 6]
        q = 7
        chain = Circuit(q)
        chain.extend(mcx_ops(controls, target, work, extra_control=extra))
        plain = Circuit(q)
        plain.mcx(controls + [extra], target)
        for basis_k in range(32):
            np.testing.assert_allclose(
                apply_to_basis(chain, basis_k), apply_to_basis(plain, basis_k), atol=1e-13
            )

    def test_no_gate_exceeds_two_controls(self):
        ops = mcx_ops([0, 1, 2, 3], 4, [5, 6, 7], extra_control=8)
        assert max(len(g.controls) for g in ops) <= 2


class TestAdder:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("method", ["cascade", "qft"])
    def test_cyclic_decrement(self, n, method):
        circ = adder_circuit(n, method=method)
        for k in range(2**n):
            out = apply_to_basis(circ, k)
            assert np.argmax(np.abs(out)) == (k - 1) % 2**n
            assert abs(out[(k - 1) % 2**n]) == pytest.approx(1.0)

    def test_amplitude_convention(self):
        # (A p)_k = p_{k+1}
        rng = np.random.default_rng(0)
        p = rng.normal(size=8)
        p /= np.linalg.norm(p)
        circ = adder_circuit(3)
        amp = np.zeros(2**circ.num_qubits, dtype=complex)
        amp[:8] = p
        out = apply_circuit(StateVector(amp, circ.num_qubits), circ).amplitudes[:8].real
        np.testing.assert_allclose(out, np.roll(p, -1), atol=1e-13)

    def test_inverse_roundtrip(self):
        circ = adder_circuit(3)
        inv = adder_circuit(3, inverse=True)
        rng = np.random.default_rng(1)
        p = rng.normal(size=2**circ.num_qubits) + 0j
        p /= np.linalg.norm(p)
        out = apply_circuit(apply_circuit(StateVector(p.copy(), circ.num_qubits), circ), inv)
        np.testing.assert_allclose(out.amplitudes, p, atol=1e-10)

    def test_full_period_is_identity(self):
        n = 3
        circ = adder_circuit(n)
        rng = np.random.default_rng(2)
        p = rng.normal(size=2**circ.num_qubits) + 0j
        p /= np.linalg.norm(p)
        state = StateVector(p.copy(), circ.num_qubits)
        for _ in range(2**n):
            state = apply_circuit(state, circ)
        np.testing.assert_allclose(state.amplitudes, p, atol=1e-10)

    def test_qft_matches_cascade(self):
        n = 3
        qft = adder_circuit(n, method="qft")
        casc = adder_circuit(n, method="cascade")
        for k in range(8):
            a = apply_to_basis(qft, k)
            b = apply_to_basis(casc, k)[: 2**n]
            np.testing.assert_allclose(a, b, atol=1e-10)


def _ctx(seed=0):
    rng = np.random.default_rng(seed)
    n, d = 3, 2
    return EvalContext(
        n, d,
        angles_v=rng.uniform(0, 2 * np.pi, num_angles(n, d)),
        angles_y=rng.uniform(0, 2 * np.pi, num_angles(n, d)),
    ), rng


def _pattern_zoo(rng):
    m = rng.normal(size=8)
    return [
        TermSpec("inner", 1.0, dyn("v"), dyn("y")),
        TermSpec("extract0", 1.0, dyn("v"), basis(0)),
        TermSpec("extract7", 1.0, dyn("v"), basis(7)),
        TermSpec("diag", 1.0, dyn("v"), dyn("v"), (fixed(m),)),
        TermSpec("diag_two_ports", 1.0, dyn("v"), dyn("v"), (fixed(m), dyn("y"))),
        TermSpec("diag_three_ports", 1.0, dyn("v"), dyn("v"), (fixed(m), dyn("y"), dyn("y"))),
        TermSpec("shift_up", 1.0, dyn("v"), dyn("v", shift=+1), (fixed(m),)),
        TermSpec("shift_down", 1.0, dyn("v"), dyn("v", shift=-1), (fixed(m), dyn("v"))),
        TermSpec("bra_shifted", 1.0, dyn("v", shift=-1), dyn("v", shift=-1), (dyn("y"), fixed(m))),
        TermSpec("mixed_regs", 1.0, dyn("y"), dyn("v", shift=-1), (fixed(m),)),
        TermSpec("shifted_port", 1.0, dyn("y"), dyn("y"), (fixed(m), dyn("v", shift=-1))),
        TermSpec("projector", 1.0, dyn("v"), dyn("v"), (basis(0),)),
    ]


class TestBackendEquivalence:
    def test_zoo_within_1e9(self):
        ctx, rng = _ctx(11)
        for term in _pattern_zoo(rng):
            a = eval_term_algebraic(term, ctx).value
            c = eval_term_circuit(term, ctx).value
            assert abs(a - c) <= 1e-9, term.label

    def test_both_backend_raises_on_disagreement(self):
        ctx, _ = _ctx(1)
        term = TermSpec("inner", 1.0, dyn("v"), dyn("y"))
        out = eval_term(term, ctx, backend="both")
        assert out.backend == "circuit"

    def test_unknown_backend(self):
        ctx, _ = _ctx(1)
        with pytest.raises(ValueError):
            eval_term(TermSpec("t", 1.0, dyn("v"), dyn("v")), ctx, backend="sampled")


class TestAlgebraicIdentities:
    def test_inner_product_self_is_one(self):
        from vqelast.ansatz import ControlParams

        rng = np.random.default_rng(3)
        p = ControlParams(1.0, rng.uniform(0, 2 * np.pi, 9), 3, 2)
        assert inner_product_expect(p, p, backend="circuit") == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_basis_states(self):
        ctx, _ = _ctx(4)
        term = TermSpec("orth", 1.0, basis(2), basis(5))
        assert eval_term(term, ctx, "circuit").value == pytest.approx(0.0, abs=1e-12)

    def test_uniform_diagonal(self):
        # <p|D_q|p> with q the uniform state is 1/sqrt(2^n)
        ctx, _ = _ctx(5)
        term = TermSpec("unif", 1.0, dyn("v"), dyn("v"), (fixed(np.ones(8)),))
        assert eval_term(term, ctx, "circuit").value == pytest.approx(1 / np.sqrt(8), abs=1e-12)

    def test_hermitian_symmetry_of_diagonal(self):
        ctx, rng = _ctx(6)
        m = rng.normal(size=8)
        t1 = TermSpec("ab", 1.0, dyn("v"), dyn("y"), (fixed(m),))
        t2 = TermSpec("ba", 1.0, dyn("y"), dyn("v"), (fixed(m),))
        assert eval_term(t1, ctx, "circuit").value == pytest.approx(
            eval_term(t2, ctx, "circuit").value, abs=1e-12
        )

    def test_shift_consistency(self):
        # evaluating with the shifted ket equals re-indexing the direct sum
        ctx, rng = _ctx(7)
        m = rng.normal(size=8)
        v = realize_unit(3, 2, ctx.angles["v"])
        term_up = TermSpec("up", 1.0, dyn("v"), dyn("v", shift=+1), (fixed(m),))
        want = float(np.sum(v * np.roll(v, -1) * (m / np.linalg.norm(m))))
        assert eval_term(term_up, ctx, "circuit").value == pytest.approx(want, abs=1e-12)
        term_dn = TermSpec("dn", 1.0, dyn("v"), dyn("v", shift=-1), (fixed(m),))
        want = float(np.sum(v * np.roll(v, 1) * (m / np.linalg.norm(m))))
        assert eval_term(term_dn, ctx, "circuit").value == pytest.approx(want, abs=1e-12)


class TestCircuitShapes:
    def test_multiport_qubit_budget(self):
        # a chain with N_t ports occupies n (N_t + 1) + 1 qubits when no
        # shifts demand the adder pool
        ctx, rng = _ctx(8)
        n = 3
        for ports in range(1, 4):
            term = TermSpec(
                "chain", 1.0, dyn("v"), dyn("v"),
                tuple(fixed(rng.normal(size=8)) for _ in range(ports)),
            )
            tc = build_term_circuit(term, ctx)
            assert tc.circuit.num_qubits == n * (ports + 1) + 1

    def test_adder_pool_added_once(self):
        ctx, rng = _ctx(9)
        term = TermSpec(
            "shifty", 1.0, dyn("v"), dyn("v", shift=-1),
            (fixed(rng.normal(size=8)), dyn("v", shift=-1)),
        )
        tc = build_term_circuit(term, ctx)
        assert tc.circuit.num_qubits == 1 + 3 * 3 + 1  # H + three registers + shared work

    def test_inner_product_is_n_plus_one(self):
        ctx, _ = _ctx(10)
        tc = build_term_circuit(TermSpec("ip", 1.0, dyn("v"), dyn("y")), ctx)
        assert tc.circuit.num_qubits == 4
