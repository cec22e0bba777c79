"""Assembly of the approximated discrete energy as quantum expectation terms.

A model is a classical constant plus a list of deduplicated circuit
specifications together with wiring that combines their expectation values:
linear entries ``coeff * lam0^a * tht0^b * E[spec]`` and product entries that
multiply several extraction values (used for the first-element pieces, whose
Dirichlet coupling cannot live on the quantum register).

Sign and index conventions of every mask are validated against
``classical_energy``, which evaluates the same discretized functional
directly in double precision and is the oracle for all backend tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .blockenc import CirculantBand, build_circulant
from .fem import BoundaryData, Mesh1D, shape_values
from .primitives import EvalContext, Operand, TermSpec, basis, dyn, eval_term, fixed


@dataclass(frozen=True)
class LinearTerm:
    coeff: float
    lam_pow: int
    tht_pow: int
    spec: int


@dataclass(frozen=True)
class ProductTerm:
    coeff: float
    lam_pow: int
    tht_pow: int
    factors: tuple[tuple[int, int], ...]  # (spec index, power)


@dataclass
class EnergyModel:
    scheme: str
    mesh: Mesh1D
    bc: BoundaryData
    mu: float
    taylor_order: int
    penalty: float | None = None
    constant: float = 0.0
    specs: list[TermSpec] = field(default_factory=list)
    linear: list[LinearTerm] = field(default_factory=list)
    products: list[ProductTerm] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.mesh.n

    @property
    def uses_y_register(self) -> bool:
        return self.scheme == "iht_penalty"

    def distinct_circuit_count(self) -> int:
        """Number of distinct circuits behind the cost function.

        Direct and penalty schemes count every deduplicated specification.
        Block-encoding schemes count circuit templates (one per power and one
        for the body force; Gauss-point variants share a template and the
        basis-extraction supports are excluded), matching how their circuit
        economy is quoted.
        """
        if self.scheme.startswith("blockenc"):
            return len({s.family for s in self.specs if s.family.startswith("be_")})
        return len(self.specs)

    def circuit_widths(self, d: int = 1) -> list[int]:
        from .primitives import build_term_circuit

        ctx = _dummy_ctx(self, d)
        return [build_term_circuit(s, ctx).circuit.num_qubits for s in self.specs]

    def max_circuit_width(self, d: int = 1) -> int:
        return max(self.circuit_widths(d))

    def admissible(self, u_nodal) -> bool:
        """Principal stretch positive at every Gauss point."""
        grads = fem.interp_gradients_at_gauss(self.mesh, u_nodal)
        return bool(np.min(1.0 + grads) > 0.0)

    def taylor_valid(self, u_nodal) -> bool:
        """Gradient inside (-1, 1), the validity window of the expansion."""
        grads = fem.interp_gradients_at_gauss(self.mesh, u_nodal)
        return bool(np.max(np.abs(grads)) < 1.0)


def _dummy_ctx(model: EnergyModel, d: int) -> EvalContext:
    from .ansatz import num_angles

    zeros = np.zeros(num_angles(model.n, d))
    return EvalContext(model.n, d, angles_v=zeros, angles_y=zeros)


class _Emitter:
    def __init__(self, model: EnergyModel):
        self.model = model
        self._index: dict = {}

    def spec(self, label: str, bra: Operand, ket: Operand, ports=(), family: str = "") -> int:
        s = TermSpec(label=label, coeff=1.0, bra=bra, ket=ket, ports=tuple(ports), family=family)
        key = s.structure_key()
        if key in self._index:
            return self._index[key]
        self.model.specs.append(s)
        idx = len(self.model.specs) - 1
        self._index[key] = idx
        return idx

    def linear(self, coeff: float, lam_pow: int, tht_pow: int, spec: int) -> None:
        self.model.linear.append(LinearTerm(coeff, lam_pow, tht_pow, spec))

    def product(self, coeff: float, lam_pow: int, tht_pow: int, factors) -> None:
        self.model.products.append(ProductTerm(coeff, lam_pow, tht_pow, tuple(factors)))

    def const(self, value: float) -> None:
        self.model.constant += value


def _emit_power_family(em: _Emitter, k: int, ck: float, ubar: float, i_m1: int) -> None:
    """Terms for ck * sum_e h_e (u'_e)^k on an order-1 mesh.

    The bulk splits into one diagonal circuit (with the first element's pure
    v_0^k folded in) and k-1 mixed neighbour circuits; the remaining
    first-element pieces are polynomials in the extracted v_0.
    """
    mesh = em.model.mesh
    h0 = mesh.element_lengths[0]
    # first element (v0 - ubar)^k, except the pure v0^k part
    for j in range(k):
        c = ck * math.comb(k, j) * (-ubar) ** (k - j) * h0 ** (1 - k)
        if c == 0.0:
            continue
        if j == 0:
            em.const(c)
        else:
            em.product(c, j, 0, [(i_m1, j)])
    # diagonal circuit
    mdiag = fem.power_diag_mask(mesh, k)
    ports = (fixed(mdiag),) + (dyn("v"),) * (k - 2)
    i = em.spec(f"diag_k{k}", dyn("v"), dyn("v"), ports)
    em.linear(ck * float(np.linalg.norm(mdiag)), k, 0, i)
    # mixed circuits
    for j in range(1, k):
        cc = ck * math.comb(k, j) * (-1.0) ** (k - j)
        if j == 1:
            m = fem.power_hi_mask(mesh, k)
            ports = (fixed(m),) + (dyn("v"),) * (k - 2)
            i = em.spec(f"mix_k{k}_j1", dyn("v"), dyn("v", shift=+1), ports)
        else:
            m = fem.power_lo_mask(mesh, k)
            ports = (fixed(m),) + (dyn("v"),) * (j - 1) + (dyn("v", shift=-1),) * (k - j - 1)
            i = em.spec(f"mix_k{k}_j{j}", dyn("v"), dyn("v", shift=-1), ports)
        em.linear(cc * float(np.linalg.norm(m)), k, 0, i)


def _emit_body_and_boundary(em: _Emitter) -> None:
    mesh, bc = em.model.mesh, em.model.bc
    b0, b = fem.body_coeffs(mesh, bc.body_force)
    em.const(-b0 * bc.ubar)
    if np.linalg.norm(b) > 0:
        i_b = em.spec("body", fixed(b), dyn("v"))
        em.linear(-float(np.linalg.norm(b)), 1, 0, i_b)
    if bc.pbar != 0.0:
        i_bd = em.spec("boundary", dyn("v"), basis(mesh.N_q - 1))
        em.linear(-bc.pbar, 1, 0, i_bd)


def _taylor_coeff(mu: float, k: int) -> float:
    return mu if k == 2 else mu * (-1.0) ** k / k


def assemble_taylor_direct(mesh: Mesh1D, taylor_order: int, bc: BoundaryData, mu: float) -> EnergyModel:
    """Direct-expansion model: every Gauss-point power is expanded into
    explicit diagonal/neighbour circuits over the DoF register."""
    if mesh.order != 1:
        raise ValueError("the direct-expansion scheme requires an order-1 mesh")
    if not 3 <= taylor_order <= 5:
        raise ValueError("supported expansion orders are 3..5")
    model = EnergyModel("taylor_direct", mesh, bc, mu, taylor_order)
    em = _Emitter(model)
    i_m1 = em.spec("m1", dyn("v"), basis(0))
    for k in range(2, taylor_order + 1):
        _emit_power_family(em, k, _taylor_coeff(mu, k), bc.ubar, i_m1)
    _emit_body_and_boundary(em)
    return model


def assemble_iht_penalty(mesh: Mesh1D, penalty: float, bc: BoundaryData, mu: float) -> EnergyModel:
    """Penalty model with the auxiliary element field y enforcing
    y = u'/(u'+2); expansion truncated after the cubic term."""
    if mesh.order != 1:
        raise ValueError("the penalty scheme requires an order-1 mesh")
    if penalty <= 0:
        raise ValueError("penalty must be positive")
    model = EnergyModel("iht_penalty", mesh, bc, mu, taylor_order=3, penalty=penalty)
    em = _Emitter(model)
    P = penalty
    ubar = bc.ubar
    h0 = mesh.element_lengths[0]
    hvec = fem.h_vector(mesh)
    hnorm = float(np.linalg.norm(hvec))
    m9 = fem.power_lo_mask(mesh, 2)
    m9n = float(np.linalg.norm(m9))
    m10 = fem.m10_mask(mesh)
    m10n = float(np.linalg.norm(m10))

    i_m1v = em.spec("m1", dyn("v"), basis(0))
    i_m1y = em.spec("m1_y", dyn("y"), basis(0))
    i_e0v = em.spec("node0_sq", dyn("v"), dyn("v"), (basis(0),))
    i_e0y = em.spec("node0_sq_y", dyn("y"), dyn("y"), (basis(0),))
    i_last = em.spec("last_node", dyn("v"), basis(mesh.N_q - 1))

    # mu * sum h w  (telescopes to u(L) - ubar)
    em.linear(mu, 1, 0, i_last)
    em.const(-mu * ubar)
    # (mu + P)/2 * sum h w^2
    _emit_power_family(em, 2, 0.5 * (mu + P), ubar, i_m1v)
    # -2 mu sum h y  and  -(2 mu / 3) sum h y^3  and  2 P sum h y^2
    i_hy = em.spec("h_dot_y", fixed(hvec), dyn("y"))
    em.linear(-2.0 * mu * hnorm, 0, 1, i_hy)
    i_y3 = em.spec("y_cubed", dyn("y"), dyn("y"), (fixed(hvec), dyn("y")))
    em.linear(-(2.0 * mu / 3.0) * hnorm, 0, 3, i_y3)
    i_y2 = em.spec("y_sq", dyn("y"), dyn("y"), (fixed(hvec),))
    em.linear(2.0 * P * hnorm, 0, 2, i_y2)

    # (P/2) sum h w^2 y^2: first element classically, bulk via m9 triples
    em.product(0.5 * P * ubar**2 / h0, 0, 2, [(i_e0y, 1)])
    em.product(-P * ubar / h0, 1, 2, [(i_m1v, 1), (i_e0y, 1)])
    em.product(0.5 * P / h0, 2, 2, [(i_e0v, 1), (i_e0y, 1)])
    yy_m9 = (dyn("y"), dyn("y"), fixed(m9))
    i_a = em.spec("w2y2_same", dyn("v"), dyn("v"), yy_m9)
    i_bshift = em.spec("w2y2_shifted", dyn("v", shift=-1), dyn("v", shift=-1), yy_m9)
    i_c = em.spec("w2y2_cross", dyn("v"), dyn("v", shift=-1), yy_m9)
    em.linear(0.5 * P * m9n, 2, 2, i_a)
    em.linear(0.5 * P * m9n, 2, 2, i_bshift)
    em.linear(-P * m9n, 2, 2, i_c)

    # -P sum h w^2 y
    em.product(-P * ubar**2 / h0, 0, 1, [(i_m1y, 1)])
    em.product(2.0 * P * ubar / h0, 1, 1, [(i_m1v, 1), (i_m1y, 1)])
    em.product(-P / h0, 2, 1, [(i_e0v, 1), (i_m1y, 1)])
    y_m9 = (dyn("y"), fixed(m9))
    i_d = em.spec("w2y_same", dyn("v"), dyn("v"), y_m9)
    i_e = em.spec("w2y_shifted", dyn("v", shift=-1), dyn("v", shift=-1), y_m9)
    i_f = em.spec("w2y_cross", dyn("v"), dyn("v", shift=-1), y_m9)
    em.linear(-P * m9n, 2, 1, i_d)
    em.linear(-P * m9n, 2, 1, i_e)
    em.linear(2.0 * P * m9n, 2, 1, i_f)

    # 2 P sum h y^2 w  =  2P [sum y_e^2 v_e - ubar y_0^2 - sum_{e>=1} y_e^2 v_{e-1}]
    i_ydv = em.spec("y2_v", dyn("y"), dyn("y"), (dyn("v"),))
    em.linear(2.0 * P, 1, 2, i_ydv)
    em.product(-2.0 * P * ubar, 0, 2, [(i_e0y, 1)])
    i_ydvs = em.spec("y2_v_prev", dyn("y"), dyn("y"), (fixed(m10), dyn("v", shift=-1)))
    em.linear(-2.0 * P * m10n, 1, 2, i_ydvs)

    # -2 P sum h y w
    i_yv = em.spec("y_dot_v", dyn("y"), dyn("v"))
    em.linear(-2.0 * P, 1, 1, i_yv)
    em.product(2.0 * P * ubar, 0, 1, [(i_m1y, 1)])
    i_yvs = em.spec("y_v_prev", dyn("y"), dyn("v", shift=-1), (fixed(m10),))
    em.linear(2.0 * P * m10n, 1, 1, i_yvs)

    _emit_body_and_boundary(em)
    return model


def assemble_blockenc(mesh: Mesh1D, taylor_order: int, bc: BoundaryData, mu: float) -> EnergyModel:
    """Block-encoding model: Gauss-point interpolation is performed by an
    encoded circulant matrix and the elementwise powers by diagonal factors
    holding the encoded image, so the circuit count stays at one template per
    power plus one for the body force."""
    if taylor_order != 3:
        raise ValueError("block-encoding models support the cubic expansion only")
    scheme = "blockenc_1st" if mesh.order == 1 else "blockenc_2nd"
    model = EnergyModel(scheme, mesh, bc, mu, taylor_order)
    em = _Emitter(model)
    nq = mesh.N_q
    h0 = mesh.element_lengths[0]

    i_e0 = em.spec("node0", dyn("v"), basis(0), family="extract")
    i_e1 = em.spec("node1", dyn("v"), basis(1), family="extract") if mesh.order == 2 else None

    gauss_list = (0,) if mesh.order == 1 else (0, 1)
    for k in range(2, taylor_order + 1):
        ck = _taylor_coeff(mu, k)
        m7 = fem.be_power_mask(mesh, k)
        m7n = float(np.linalg.norm(m7))
        for g in gauss_list:
            band = build_circulant(mesh.order, "II", g, nq)
            vop = dyn("v", band=band)
            ports = (fixed(m7),) + (vop,) * (k - 2)
            i = em.spec(f"be_pow_k{k}_g{g}", vop, vop, ports, family=f"be_power_k{k}")
            em.linear(ck * m7n * band.alpha**k, k, 0, i)
        # first element, classical in the extracted node values
        if mesh.order == 1:
            for j in range(k + 1):
                c = ck * math.comb(k, j) * (-bc.ubar) ** (k - j) * h0 ** (1 - k)
                if c == 0.0:
                    continue
                if j == 0:
                    em.const(c)
                else:
                    em.product(c, j, 0, [(i_e0, j)])
        else:
            for g in (0, 1):
                _, dN = shape_values(2, g)
                a = dN[0] * bc.ubar
                cbase = ck * (2.0 / h0) ** (k - 1)
                for p in range(k + 1):
                    for q in range(k + 1 - p):
                        r = k - p - q
                        c = (
                            cbase
                            * math.factorial(k)
                            / (math.factorial(p) * math.factorial(q) * math.factorial(r))
                            * a**r
                            * dN[1] ** p
                            * dN[2] ** q
                        )
                        if c == 0.0:
                            continue
                        if p == 0 and q == 0:
                            em.const(c)
                        else:
                            factors = []
                            if p:
                                factors.append((i_e0, p))
                            if q:
                                factors.append((i_e1, q))
                            em.product(c, p + q, 0, factors)

    # body force
    for g in (0, 1):
        m8 = fem.be_body_mask(mesh, g, bc)
        if np.linalg.norm(m8) > 0:
            band = build_circulant(mesh.order, "I", g, nq)
            i = em.spec(
                f"be_body_g{g}", fixed(m8), dyn("v", band=band), family="be_body"
            )
            em.linear(-float(np.linalg.norm(m8)) * band.alpha, 1, 0, i)
        # first element contribution, classical
        xg = mesh.gauss_coords(0)[g]
        bval = float(bc.body(xg))
        if bval != 0.0:
            N, _ = shape_values(mesh.order, g)
            em.const(-0.5 * h0 * bval * N[0] * bc.ubar)
            em.product(-0.5 * h0 * bval * N[1], 1, 0, [(i_e0, 1)])
            if mesh.order == 2:
                em.product(-0.5 * h0 * bval * N[2], 1, 0, [(i_e1, 1)])

    if bc.pbar != 0.0:
        i_bd = em.spec("boundary", dyn("v"), basis(nq - 1), family="extract")
        em.linear(-bc.pbar, 1, 0, i_bd)
    return model


# ---------------------------------------------------------------------------
# Evaluation


def quantum_cost(model: EnergyModel, params, y_params=None, backend: str = "algebraic") -> float:
    """Cost C = constant + sum of coefficient-scaled expectations."""
    if model.uses_y_register and y_params is None:
        raise ValueError("the penalty scheme needs the auxiliary register parameters")
    ctx = EvalContext(
        model.n,
        params.d,
        angles_v=params.angles,
        angles_y=None if y_params is None else y_params.angles,
    )
    evals = [eval_term(s, ctx, backend).value for s in model.specs]
    lam0 = params.scale
    tht0 = 0.0 if y_params is None else y_params.scale
    total = model.constant
    for t in model.linear:
        total += t.coeff * lam0**t.lam_pow * tht0**t.tht_pow * evals[t.spec]
    for t in model.products:
        prod = 1.0
        for idx, p in t.factors:
            prod *= evals[idx] ** p
        total += t.coeff * lam0**t.lam_pow * tht0**t.tht_pow * prod
    return float(total)


def realized_nodal(model: EnergyModel, params) -> np.ndarray:
    """Nodal displacement vector [ubar, v] encoded by the parameters."""
    from .ansatz import realize_vector

    v = realize_vector(params)
    return np.concatenate([[model.bc.ubar], v])


def classical_energy(model: EnergyModel, u_nodal, y_elem=None) -> float:
    """Exact double-precision evaluation of the discretized energy.

    This is the oracle the quantum term decomposition is tested against; it
    works directly with nodal values and never touches the term list.
    """
    mesh, bc, mu = model.mesh, model.bc, model.mu
    u = np.asarray(u_nodal, dtype=float)
    if u.size != mesh.N_q + 1:
        raise ValueError("nodal vector length must be N_q + 1")
    b0, b = fem.body_coeffs(mesh, bc.body_force)
    body = b0 * u[0] + float(np.dot(b, u[1:]))
    boundary = bc.pbar * u[-1]

    if model.scheme == "iht_penalty":
        if y_elem is None:
            raise ValueError("penalty energy needs the element field y")
        y = np.asarray(y_elem, dtype=float)
        w = fem.element_slopes(mesh, u)
        h = mesh.element_lengths
        P = model.penalty
        strain = np.sum(
            h
            * (
                mu * (w + 0.5 * w**2 - 2.0 * (y + y**3 / 3.0))
                + 0.5 * P * (y * (w + 2.0) - w) ** 2
            )
        )
        return float(strain - body - boundary)

    if mesh.order == 1:
        w = fem.element_slopes(mesh, u)
        h = mesh.element_lengths
        strain = 0.0
        for k in range(2, model.taylor_order + 1):
            strain += _taylor_coeff(mu, k) * float(np.sum(h * w**k))
        return float(strain - body - boundary)

    # order 2: two-point quadrature of the expanded polynomial
    strain = 0.0
    for e in range(mesh.num_elements):
        nodes = mesh.element_nodes(e)
        h = mesh.element_lengths[e]
        for g in (0, 1):
            _, dN = shape_values(2, g)
            s = sum(dN[i] * u[nodes[i]] for i in range(3))
            for k in range(2, model.taylor_order + 1):
                strain += _taylor_coeff(mu, k) * (2.0 / h) ** (k - 1) * s**k
    return float(strain - body - boundary)
