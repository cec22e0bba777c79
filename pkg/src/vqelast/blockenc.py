"""Block encodings of banded circulant matrices.

A band ``(c_0, ..., c_b)`` defines the circulant with entry ``c_r`` at
``(i, j)`` whenever ``j = i + r (mod N_q)``.  The encoding is a linear
combination of cyclic-shift unitaries selected by a one-hot ancilla register
(one ancilla per band coefficient: 2 for the two-band interpolation matrices,
3 for the three-band ones), with negative coefficients absorbed as a Z phase
on the matching select branch.  Projecting the ancillas back onto all-zero
recovers ``A/alpha`` with ``alpha = sum |c_r|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fem import shape_values
from .primitives import TermSpec, _band_select_ops, dyn, eval_term, EvalContext
from .sv_core import Circuit, StateVector, apply_circuit, postselect


@dataclass(frozen=True)
class CirculantBand:
    size: int
    coeffs: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        if not any(c != 0 for c in self.coeffs):
            raise ValueError("all-zero band cannot be encoded")
        if len(self.coeffs) > self.size:
            raise ValueError("band wider than the matrix")

    @property
    def alpha(self) -> float:
        return float(sum(abs(c) for c in self.coeffs))

    def key(self):
        return (self.size, tuple(np.round(self.coeffs, 14)), )

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        for r, c in enumerate(self.coeffs):
            if c != 0:
                out += c * np.roll(v, -r)
        return out

    def matrix(self) -> np.ndarray:
        eye = np.eye(self.size)
        return np.array([self.matvec(eye[:, j]) for j in range(self.size)]).T


def build_circulant(order: int, kind: str, g: int, nq: int) -> CirculantBand:
    """Interpolation (kind I) or derivative (kind II) circulant at Gauss
    point ``g`` for the given shape-function order, in reference coordinates.
    """
    if kind not in ("I", "II"):
        raise ValueError("kind must be 'I' or 'II'")
    values, derivs = shape_values(order, g)
    coeffs = values if kind == "I" else derivs
    return CirculantBand(nq, tuple(float(c) for c in coeffs), label=f"{kind}({order},g{g})")


@dataclass
class BlockEncoding:
    circuit: Circuit
    main: tuple[int, ...]
    encode_ancillas: tuple[int, ...]
    work: tuple[int, ...]
    subnormalization: float
    matrix: CirculantBand


def build_block_encoding(band: CirculantBand, verify: bool = False) -> BlockEncoding:
    """Standalone unitary embedding ``band / alpha`` in its all-zero ancilla
    block.  Layout: main register first, then the dedicated encode ancillas,
    then the shared adder work pool."""
    n = int(round(math.log2(band.size)))
    if 2**n != band.size:
        raise ValueError("band size must be a power of two")
    a = len(band.coeffs)
    work_count = max(n - 2, 0)
    total = n + a + work_count
    circ = Circuit(total, label=f"U[{band.label}]")
    main = list(range(n))
    ancs = list(range(n, n + a))
    work = list(range(n + a, total))
    circ.extend(_band_select_ops(band, main, ancs, work, None))
    enc = BlockEncoding(
        circuit=circ,
        main=tuple(main),
        encode_ancillas=tuple(ancs),
        work=tuple(work),
        subnormalization=band.alpha,
        matrix=band,
    )
    if verify:
        rng = np.random.default_rng(7)
        for _ in range(3):
            psi = rng.normal(size=band.size)
            psi /= np.linalg.norm(psi)
            out, prob = apply_block_encoding(enc, psi)
            want = band.matvec(psi) / band.alpha
            if not np.allclose(out * math.sqrt(prob), want, atol=1e-10):
                raise AssertionError("block-encoding identity violated")
    return enc


def apply_block_encoding(enc: BlockEncoding, psi) -> tuple[np.ndarray, float]:
    """Run the encoding on ``psi`` and postselect the encode ancillas.

    Returns the renormalised main-register state (real part) and the success
    probability, which equals ``||(A/alpha) psi||^2``.
    """
    psi = np.asarray(psi, dtype=complex)
    n = len(enc.main)
    full = np.zeros(2**enc.circuit.num_qubits, dtype=complex)
    full[: 2**n] = psi  # main occupies the low qubits, ancillas start at |0>
    state = apply_circuit(StateVector(full, enc.circuit.num_qubits), enc.circuit)
    reduced, prob = postselect(state, list(enc.encode_ancillas) + list(enc.work))
    return reduced.amplitudes.real, prob


def generic_sandwich_term(band: CirculantBand) -> TermSpec:
    """⟨p̂| U_A D_{l_q} U_A |p̂⟩ with both vectors block-encoded, the pattern
    whose qubit budget is 3n + 5 for a three-band matrix."""
    return TermSpec(
        label="be_sandwich",
        coeff=band.alpha**3,
        bra=dyn("v", band=band),
        ket=dyn("v", band=band),
        ports=(dyn("y", band=band),),
        family="be_sandwich",
    )


def blockenc_chain_expect(term: TermSpec, ctx: EvalContext, backend: str = "algebraic"):
    if term.kind != "blockenc_chain":
        raise ValueError("term has no block-encoded operand")
    return eval_term(term, ctx, backend)
