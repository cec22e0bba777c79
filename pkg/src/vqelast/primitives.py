"""QNPU expectation evaluators with a gate-level and an algebraic backend.

Every scalar the cost function needs has the form::

    E = sum_i  bra_i * ket_i * prod_j port_j[i]

over realized (unit-norm or block-encoding-subnormalised) vectors.  The
circuit backend realises it as a Hadamard test: the main register is prepared
with the bra, the Hadamard ancilla controls a block containing the bra-to-ket
transform, the port preparations and CX ladders from the main register onto
each port, and the readout P(0)-P(1) is restricted to the all-zero branch of
any block-encoding ancillas.  The algebraic backend evaluates the sum
directly on the same realized vectors, so the two agree to simulation
round-off, not merely to a fit tolerance.

Adder convention: ``A`` maps basis state |k⟩ to |k-1 mod 2^n⟩ so amplitudes
satisfy (A p)_k = p_{k+1}; a shift of ``s`` on an operand means its realized
vector is ``w_i = base_{i+s}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ansatz import build_ansatz, realize_unit
from .sv_core import Circuit, Gate, projected_ancilla_expectation
from .stateprep import basis_prep, prepare_exact

# ---------------------------------------------------------------------------
# Multi-controlled X via a Toffoli chain over a shared work pool


def mcx_ops(controls, target, work, extra_control=None) -> list[Gate]:
    """Multi-controlled X as a compute/uncompute Toffoli chain.

    ``extra_control`` (the Hadamard ancilla) is folded in by extending the
    AND chain one step, so no gate ever carries more than two controls and
    the pool of ``n - 2`` work qubits suffices even for controlled adders.
    """
    controls = list(controls)
    k = len(controls)
    if extra_control is not None and k == 0:
        return [Gate("x", (target,), (extra_control,))]
    if extra_control is None:
        if k == 0:
            return [Gate("x", (target,))]
        if k <= 2:
            return [Gate("x", (target,), tuple(controls))]
    elif k == 1:
        return [Gate("x", (target,), (controls[0], extra_control))]

    # AND-chain of the controls into work qubits
    chain: list[Gate] = []
    acc = None
    needed = controls if extra_control is None else controls + [extra_control]
    # compute AND of all but the last plain control, then close on the target
    head = needed[:-1]
    last = needed[-1]
    acc = work[0]
    chain.append(Gate("x", (acc,), (head[0], head[1])))
    wi = 1
    for c in head[2:]:
        chain.append(Gate("x", (work[wi],), (c, acc)))
        acc = work[wi]
        wi += 1
    mid = Gate("x", (target,), (last, acc))
    return chain + [mid] + list(reversed(chain))


def adder_ops(register, work, *, inverse: bool = False, control=None) -> list[Gate]:
    """Cyclic shift gates on ``register`` (little-endian qubit list).

    The forward adder decrements basis indices (|k⟩ -> |k-1⟩), which pulls
    amplitudes down by one slot; ``inverse`` gives the increment.
    """
    n = len(register)
    inc: list[Gate] = []
    for j in range(n - 1, 0, -1):
        inc += mcx_ops([register[i] for i in range(j)], register[j], work, control)
    inc += mcx_ops([], register[0], work, control)
    if inverse:
        return inc  # A^dagger = increment
    return list(reversed(inc))  # every constituent is self-inverse


def qft_ops(register) -> list[Gate]:
    n = len(register)
    out: list[Gate] = []
    for i in range(n - 1, -1, -1):
        out.append(Gate("h", (register[i],)))
        for j in range(i - 1, -1, -1):
            out.append(Gate("phase", (register[i],), (register[j],), math.pi / 2 ** (i - j)))
    for i in range(n // 2):
        out.append(Gate("swap", (register[i], register[n - 1 - i])))
    return out


def adder_circuit(n: int, inverse: bool = False, method: str = "cascade") -> Circuit:
    """Standalone cyclic-shift circuit.

    ``cascade`` uses the multi-controlled-X ladder with a shared pool of
    ``n - 2`` work qubits appended after the register; ``qft`` is the
    ancilla-free phase-space version at larger depth.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    if method == "cascade":
        work = list(range(n, n + max(n - 2, 0)))
        circ = Circuit(n + len(work), label="adder" + ("_inv" if inverse else ""))
        circ.extend(adder_ops(list(range(n)), work, inverse=inverse))
        return circ
    if method == "qft":
        circ = Circuit(n, label="adder_qft" + ("_inv" if inverse else ""))
        reg = list(range(n))
        sign = 1.0 if inverse else -1.0  # increment for the inverse
        circ.extend(qft_ops(reg))
        for j in range(n):
            circ.phase(sign * 2.0 * math.pi * 2**j / 2**n, j)
        circ.extend([g.adjoint() for g in reversed(qft_ops(reg))])
        return circ
    raise ValueError(f"unknown adder method {method!r}")


# ---------------------------------------------------------------------------
# Operands and term specifications


@dataclass(frozen=True)
class Operand:
    """One realized vector: a dynamic register state, a fixed unit vector or
    a computational basis state, optionally cyclically shifted and/or passed
    through a block-encoded circulant matrix."""

    kind: str  # "dyn" | "fixed" | "basis"
    register: str | None = None  # for dyn: "v" or "y"
    vector: np.ndarray | None = None  # for fixed: unit vector
    index: int | None = None  # for basis
    shift: int = 0
    band: object | None = None  # CirculantBand, applied before the shift

    def key(self):
        band_key = None if self.band is None else self.band.key()
        if self.kind == "dyn":
            core = ("dyn", self.register)
        elif self.kind == "fixed":
            core = ("fixed", np.round(self.vector, 12).tobytes())
        else:
            core = ("basis", self.index)
        return core + (self.shift, band_key)


def dyn(register: str, shift: int = 0, band=None) -> Operand:
    return Operand("dyn", register=register, shift=shift, band=band)


def fixed(vector, shift: int = 0, band=None) -> Operand:
    vec = np.asarray(vector, dtype=float)
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ValueError("fixed operand must be nonzero")
    return Operand("fixed", vector=vec / nrm, shift=shift, band=band)


def basis(index: int, shift: int = 0, band=None) -> Operand:
    return Operand("basis", index=index, shift=shift, band=band)


@dataclass(frozen=True)
class TermSpec:
    """One scalar-weighted expectation.

    ``coeff`` absorbs every static factor (physical coefficients, mask norms,
    block-encoding subnormalisations); the dynamic scale powers multiply in at
    evaluation time, so the term value is
    ``coeff * lam0^lam_pow * tht0^tht_pow * E``.
    """

    label: str
    coeff: float
    bra: Operand
    ket: Operand
    ports: tuple[Operand, ...] = ()
    lam_pow: int = 0
    tht_pow: int = 0
    family: str = ""

    @property
    def kind(self) -> str:
        if any(op.band is not None for op in (self.bra, self.ket) + self.ports):
            return "blockenc_chain"
        return "diagonal_chain" if self.ports else "inner_product"

    def structure_key(self):
        ends = tuple(sorted((self.bra.key(), self.ket.key())))
        return ends + tuple(sorted(op.key() for op in self.ports))


@dataclass
class ExpectationResult:
    value: float
    backend: str
    postselect_probs: list[float] = field(default_factory=list)


class EvalContext:
    """Realization context: ansatz shape plus the current register angles."""

    def __init__(self, n: int, d: int, angles_v=None, angles_y=None):
        self.n = n
        self.d = d
        self.angles = {"v": angles_v, "y": angles_y}
        self._fixed_prep_cache: dict[bytes, Circuit] = {}
        self._dyn_cache: dict[str, np.ndarray] = {}
        self._realize_cache: dict = {}

    def base_unit(self, op: Operand) -> np.ndarray:
        if op.kind == "dyn":
            if op.register not in self._dyn_cache:
                ang = self.angles[op.register]
                if ang is None:
                    raise ValueError(f"no angles bound for register {op.register!r}")
                self._dyn_cache[op.register] = realize_unit(self.n, self.d, ang)
            return self._dyn_cache[op.register]
        if op.kind == "fixed":
            return op.vector
        out = np.zeros(2**self.n)
        out[op.index] = 1.0
        return out

    def realize(self, op: Operand) -> np.ndarray:
        """Realized (possibly subnormalised) vector of an operand."""
        key = op.key()
        hit = self._realize_cache.get(key)
        if hit is not None:
            return hit
        w = self.base_unit(op)
        if op.band is not None:
            w = op.band.matvec(w) / op.band.alpha
        if op.shift:
            w = np.roll(w, -op.shift)
        self._realize_cache[key] = w
        return w

    def base_prep_ops(self, op: Operand, register: list[int]) -> list[Gate]:
        """Gates loading the operand's base unit vector onto ``register``."""
        if op.kind == "dyn":
            circ = build_ansatz(self.n, self.d, self.angles[op.register])
        elif op.kind == "fixed":
            key = np.round(op.vector, 12).tobytes()
            if key not in self._fixed_prep_cache:
                self._fixed_prep_cache[key] = prepare_exact(op.vector)
            circ = self._fixed_prep_cache[key]
        else:
            circ = basis_prep(op.index, self.n)
        qmap = {q: register[q] for q in range(self.n)}
        out = []
        for g in circ.ops:
            out.append(
                Gate(g.name, tuple(qmap[q] for q in g.targets), tuple(qmap[q] for q in g.controls), g.angle)
            )
        return out


def _band_select_ops(band, register, ancs, work, h_control) -> list[Gate]:
    """One-hot LCU block encoding of a banded circulant on ``register``.

    The prepare/unprepare ladders are conditioned on the Hadamard ancilla
    when given (so the h=0 branch sees the identity and the ancillas stay
    |0⟩); the shift branches are conditioned only on their one-hot ancilla,
    which keeps every multi-controlled X within the n-2 work budget.
    """
    coeffs = np.asarray(band.coeffs, dtype=float)
    alpha = band.alpha
    probs = np.abs(coeffs) / alpha
    ladder: list[Gate] = []
    if h_control is None:
        ladder.append(Gate("x", (ancs[0],)))
    else:
        ladder.append(Gate("x", (ancs[0],), (h_control,)))
    remaining = probs.copy()
    for r in range(len(coeffs) - 1):
        p_here = remaining[r]
        p_rest = float(np.sum(remaining[r + 1 :]))
        theta = 2.0 * math.atan2(math.sqrt(p_rest), math.sqrt(p_here))
        ctrls = (ancs[r],) if h_control is None else (ancs[r], h_control)
        ladder.append(Gate("ry", (ancs[r + 1],), ctrls, theta))
        ladder.append(Gate("x", (ancs[r],), (ancs[r + 1],)))
    out = list(ladder)
    for r, c in enumerate(coeffs):
        if c < 0:
            out.append(Gate("z", (ancs[r],)))
        for _ in range(r):
            out += adder_ops(register, work, inverse=False, control=ancs[r])
    out += [g.adjoint() for g in reversed(ladder)]
    return out


def _shift_ops(register, work, shift: int, h_control) -> list[Gate]:
    out: list[Gate] = []
    for _ in range(abs(shift)):
        out += adder_ops(register, work, inverse=shift < 0, control=h_control)
    return out


@dataclass
class TermCircuit:
    circuit: Circuit
    h_anc: int
    zero_qubits: tuple[int, ...]
    anc_groups: list[tuple[int, ...]]


def build_term_circuit(term: TermSpec, ctx: EvalContext) -> TermCircuit:
    """Full Hadamard-test circuit for one term."""
    n = ctx.n
    uses_adder = bool(
        term.bra.shift
        or term.ket.shift
        or any(p.shift for p in term.ports)
        or term.bra.band is not None
        or term.ket.band is not None
        or any(p.band is not None for p in term.ports)
    )
    h_anc = 0
    main = list(range(1, 1 + n))
    ports = []
    nxt = 1 + n
    for _ in term.ports:
        ports.append(list(range(nxt, nxt + n)))
        nxt += n
    work = list(range(nxt, nxt + (max(n - 2, 0) if uses_adder else 0)))
    nxt += len(work)

    anc_groups: list[tuple[int, ...]] = []

    def alloc_band_anc(band) -> list[int]:
        nonlocal nxt
        a = list(range(nxt, nxt + len(band.coeffs)))
        nxt += len(band.coeffs)
        anc_groups.append(tuple(a))
        return a

    same_base = term.bra.key()[:-2] == term.ket.key()[:-2] and (
        (term.bra.band is None) == (term.ket.band is None)
    )
    bands_match = (term.bra.band is None and term.ket.band is None) or (
        term.bra.band is not None
        and term.ket.band is not None
        and term.bra.band.key() == term.ket.band.key()
    )

    plan_main_band = term.bra.band
    plan_ket_band = None
    if term.bra.key() == term.ket.key():
        transform = None
    elif same_base and bands_match:
        transform = ("shift", term.ket.shift - term.bra.shift)
    else:
        if term.bra.band is not None:
            raise ValueError("bra with block encoding must equal the ket")
        transform = ("reprep",)
        plan_ket_band = term.ket.band

    main_band_anc = alloc_band_anc(plan_main_band) if plan_main_band is not None else None
    ket_band_anc = alloc_band_anc(plan_ket_band) if plan_ket_band is not None else None
    port_band_anc = [alloc_band_anc(p.band) if p.band is not None else None for p in term.ports]

    circ = Circuit(nxt, label=term.label)

    # input segment: unconditional bra preparation on the main register
    circ.mark("input")
    circ.extend(ctx.base_prep_ops(term.bra, main))
    if term.bra.band is not None:
        circ.extend(_band_select_ops(term.bra.band, main, main_band_anc, work, None))
    circ.extend(_shift_ops(main, work, term.bra.shift, None))

    circ.mark("hadamard")
    circ.h(h_anc)

    # controlled port preparations
    for p_op, reg, anc in zip(term.ports, ports, port_band_anc):
        base = ctx.base_prep_ops(p_op, reg)
        circ.extend(Gate(g.name, g.targets, g.controls + (h_anc,), g.angle) for g in base)
        if p_op.band is not None:
            circ.extend(_band_select_ops(p_op.band, reg, anc, work, h_anc))
        circ.extend(_shift_ops(reg, work, p_op.shift, h_anc))

    # controlled bra -> ket transform on the main register
    circ.mark("qnpu")
    if transform is not None:
        if transform[0] == "shift":
            circ.extend(_shift_ops(main, work, transform[1], h_anc))
        else:
            undo = [g.adjoint() for g in reversed(ctx.base_prep_ops(term.bra, main))]
            # bra shift must be unwound before its base preparation
            pre = _shift_ops(main, work, -term.bra.shift, h_anc)
            circ.extend(pre)
            circ.extend(Gate(g.name, g.targets, g.controls + (h_anc,), g.angle) for g in undo)
            ket_base = ctx.base_prep_ops(term.ket, main)
            circ.extend(Gate(g.name, g.targets, g.controls + (h_anc,), g.angle) for g in ket_base)
            if plan_ket_band is not None:
                circ.extend(_band_select_ops(plan_ket_band, main, ket_band_anc, work, h_anc))
            circ.extend(_shift_ops(main, work, term.ket.shift, h_anc))

    # controlled CX ladders: elementwise product of each port onto the mains
    for reg in ports:
        for k in range(n):
            circ.add("x", (reg[k],), (main[k], h_anc))

    circ.h(h_anc)

    zero = tuple(q for grp in anc_groups for q in grp)
    return TermCircuit(circuit=circ, h_anc=h_anc, zero_qubits=zero, anc_groups=anc_groups)


# ---------------------------------------------------------------------------
# Backends


def eval_term_algebraic(term: TermSpec, ctx: EvalContext) -> ExpectationResult:
    vec = ctx.realize(term.bra) * ctx.realize(term.ket)
    for p in term.ports:
        vec = vec * ctx.realize(p)
    return ExpectationResult(value=float(np.sum(vec)), backend="algebraic")


def eval_term_circuit(term: TermSpec, ctx: EvalContext) -> ExpectationResult:
    tc = build_term_circuit(term, ctx)
    e, _ = projected_ancilla_expectation(tc.circuit, tc.h_anc, tc.zero_qubits)
    probs = []
    if tc.anc_groups:
        from .sv_core import simulate

        final = simulate(tc.circuit)
        amp = final.amplitudes
        idx = np.arange(amp.size)
        pr = np.abs(amp) ** 2
        for grp in tc.anc_groups:
            mask = np.ones(amp.size, dtype=bool)
            for q in grp:
                mask &= (idx >> q) & 1 == 0
            probs.append(float(np.sum(pr[mask])))
    return ExpectationResult(value=e, backend="circuit", postselect_probs=probs)


def eval_term(term: TermSpec, ctx: EvalContext, backend: str = "algebraic") -> ExpectationResult:
    if backend == "algebraic":
        return eval_term_algebraic(term, ctx)
    if backend == "circuit":
        return eval_term_circuit(term, ctx)
    if backend == "both":
        a = eval_term_algebraic(term, ctx)
        c = eval_term_circuit(term, ctx)
        if abs(a.value - c.value) > 1e-9:
            raise AssertionError(
                f"backend mismatch on {term.label}: algebraic {a.value!r} vs circuit {c.value!r}"
            )
        return c
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# Convenience wrappers matching the primitive operations


def inner_product_expect(p_params, q_params, backend: str = "algebraic") -> float:
    """⟨p̂|q̂⟩ for two ansatz-encoded states (scale factors are the caller's)."""
    if p_params.n != q_params.n:
        raise ValueError("register sizes differ")
    ctx = EvalContext(p_params.n, p_params.d, angles_v=p_params.angles, angles_y=q_params.angles)
    if p_params.d != q_params.d:
        raise ValueError("ansatz depths differ")
    term = TermSpec("inner", 1.0, dyn("v"), dyn("y"))
    return eval_term(term, ctx, backend).value


def diagonal_chain_expect(term: TermSpec, ctx: EvalContext, backend: str = "algebraic") -> ExpectationResult:
    if term.kind == "blockenc_chain":
        raise ValueError("term contains block encodings; use blockenc_chain_expect")
    return eval_term(term, ctx, backend)


def fixed_basis_vector(index: int, n: int) -> Operand:
    if not 0 <= index < 2**n:
        raise ValueError("index out of range")
    return basis(index)
