"""1D mesh, Lagrange shape functions, 2-point Gauss quadrature and the
auxiliary coefficient vectors consumed by the cost assembly.

Nodes number ``N_q + 1`` with ``N_q = 2^n``; node 0 carries the Dirichlet
value and the remaining ``N_q`` values are the quantum-encoded unknowns
``v_i = u_{i+1}``.  First-order meshes have ``N_q`` elements, second-order
meshes ``N_q / 2`` with the mid-node at the element centre so the Jacobian is
constant per element.

Units are documentation only (lengths mm, modulus MPa, body force N/mm per
unit area); all arithmetic is plain float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GAUSS_POINTS = (-1.0 / math.sqrt(3.0), 1.0 / math.sqrt(3.0))
GAUSS_WEIGHTS = (1.0, 1.0)

# Interpolation weight at the first Gauss point for linear shape functions.
ALPHA_GAUSS = (math.sqrt(3.0) + 1.0) / (2.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class QuadratureRule:
    """2-point Gauss-Legendre rule on [-1, 1]; exact for cubics."""

    points: tuple[float, float] = GAUSS_POINTS
    weights: tuple[float, float] = GAUSS_WEIGHTS


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet value at X=0, traction at X=L, body force density B(X)."""

    ubar: float = 0.0
    pbar: float = 0.0
    body_force: object = None  # callable X -> B(X); None means zero

    def body(self, x):
        if self.body_force is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.asarray(self.body_force(np.asarray(x, dtype=float)), dtype=float)


def shape_values(order: int, g: int):
    """Reference shape values and derivatives at Gauss point ``g``.

    Returns ``(N, dN)`` with entries per local node.  For order 1 the values
    are ``(alpha, 1-alpha)`` / ``(1-alpha, alpha)`` with
    ``alpha = (sqrt(3)+1)/(2 sqrt(3))``; derivatives are constant (-1/2, 1/2).
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if g not in (0, 1):
        raise ValueError("Gauss index must be 0 or 1")
    xi = GAUSS_POINTS[g]
    if order == 1:
        return (0.5 * (1 - xi), 0.5 * (1 + xi)), (-0.5, 0.5)
    n0 = 0.5 * xi * (xi - 1.0)
    n1 = 1.0 - xi * xi
    n2 = 0.5 * xi * (xi + 1.0)
    return (n0, n1, n2), (xi - 0.5, -2.0 * xi, xi + 0.5)


@dataclass(frozen=True)
class Mesh1D:
    element_lengths: np.ndarray
    order: int
    n: int = field(init=False)
    node_coords: np.ndarray = field(init=False)

    def __post_init__(self):
        lengths = np.asarray(self.element_lengths, dtype=float)
        object.__setattr__(self, "element_lengths", lengths)
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if np.any(lengths <= 0):
            raise ValueError("element lengths must be positive")
        nq = lengths.size if self.order == 1 else 2 * lengths.size
        n = int(round(math.log2(nq)))
        if 2**n != nq:
            raise ValueError(f"DoF count {nq} is not a power of two")
        object.__setattr__(self, "n", n)
        ends = np.concatenate([[0.0], np.cumsum(lengths)])
        if self.order == 1:
            coords = ends
        else:
            coords = np.empty(nq + 1)
            coords[0::2] = ends
            coords[1::2] = 0.5 * (ends[:-1] + ends[1:])
        object.__setattr__(self, "node_coords", coords)

    @classmethod
    def uniform(cls, n: int, length: float = 1.0, order: int = 1) -> "Mesh1D":
        nq = 2**n
        count = nq if order == 1 else nq // 2
        return cls(np.full(count, length / count), order)

    @classmethod
    def from_lengths(cls, lengths, order: int = 1) -> "Mesh1D":
        return cls(np.asarray(lengths, dtype=float), order)

    @property
    def N_q(self) -> int:
        return 2**self.n

    @property
    def length(self) -> float:
        return float(np.sum(self.element_lengths))

    @property
    def num_elements(self) -> int:
        return self.element_lengths.size

    def element_nodes(self, e: int) -> tuple[int, ...]:
        if self.order == 1:
            return (e, e + 1)
        return (2 * e, 2 * e + 1, 2 * e + 2)

    def gauss_coords(self, e: int) -> tuple[float, float]:
        """Physical coordinates of the two Gauss points of element ``e``."""
        left = self.node_coords[self.element_nodes(e)[0]]
        h = self.element_lengths[e]
        return tuple(left + 0.5 * h * (1.0 + xi) for xi in GAUSS_POINTS)


def element_slopes(mesh: Mesh1D, u_nodal) -> np.ndarray:
    """Element-wise constant derivative for order-1 meshes."""
    if mesh.order != 1:
        raise ValueError("element slopes are only constant on order-1 meshes")
    u = np.asarray(u_nodal, dtype=float)
    return np.diff(u) / mesh.element_lengths


def interp_eval(mesh: Mesh1D, u_nodal, X):
    """Piecewise-polynomial value and derivative of the FE field at ``X``."""
    u = np.asarray(u_nodal, dtype=float)
    if u.size != mesh.N_q + 1:
        raise ValueError("nodal vector length must be N_q + 1")
    xs = np.atleast_1d(np.asarray(X, dtype=float))
    if np.any(xs < -1e-12) or np.any(xs > mesh.length + 1e-12):
        raise ValueError("X outside the mesh domain")
    ends = np.concatenate([[0.0], np.cumsum(mesh.element_lengths)])
    e_idx = np.clip(np.searchsorted(ends, xs, side="right") - 1, 0, mesh.num_elements - 1)
    vals = np.empty_like(xs)
    grads = np.empty_like(xs)
    for j, (x, e) in enumerate(zip(xs, e_idx)):
        h = mesh.element_lengths[e]
        xi = 2.0 * (x - ends[e]) / h - 1.0
        nodes = mesh.element_nodes(e)
        if mesh.order == 1:
            N = (0.5 * (1 - xi), 0.5 * (1 + xi))
            dN = (-0.5, 0.5)
        else:
            N = (0.5 * xi * (xi - 1), 1 - xi * xi, 0.5 * xi * (xi + 1))
            dN = (xi - 0.5, -2 * xi, xi + 0.5)
        vals[j] = sum(N[i] * u[nodes[i]] for i in range(len(nodes)))
        grads[j] = (2.0 / h) * sum(dN[i] * u[nodes[i]] for i in range(len(nodes)))
    if np.isscalar(X):
        return float(vals[0]), float(grads[0])
    return vals, grads


def interp_gradients_at_gauss(mesh: Mesh1D, u_nodal) -> np.ndarray:
    """FE gradient at every element Gauss point, shape (num_elements, 2)."""
    u = np.asarray(u_nodal, dtype=float)
    h = mesh.element_lengths
    if mesh.order == 1:
        w = (u[1:] - u[:-1]) / h
        return np.stack([w, w], axis=1)
    u0, u1, u2 = u[0:-1:2], u[1::2], u[2::2]
    out = np.empty((mesh.num_elements, 2))
    for g in range(2):
        _, dN = shape_values(2, g)
        out[:, g] = (2.0 / h) * (dN[0] * u0 + dN[1] * u1 + dN[2] * u2)
    return out


# ---------------------------------------------------------------------------
# Auxiliary coefficient vectors (all of length N_q, indexed by the internal
# DoFs v_0..v_{N_q-1})


def power_diag_mask(mesh: Mesh1D, k: int) -> np.ndarray:
    """Coefficients of the pure v_i^k terms of sum_e h_e^(1-k) (u_1e - u_0e)^k,
    with the first element's v_0^k folded in at index 0."""
    h = mesh.element_lengths
    nq = mesh.N_q
    out = np.empty(nq)
    sign = (-1.0) ** k
    for i in range(nq - 1):
        out[i] = h[i] ** (1 - k) + sign * h[i + 1] ** (1 - k)
    out[nq - 1] = h[nq - 1] ** (1 - k)
    return out


def power_lo_mask(mesh: Mesh1D, k: int) -> np.ndarray:
    """h_i^(1-k) for i >= 1, zero at i = 0 (pairs with a downward shift)."""
    h = mesh.element_lengths
    out = h.astype(float) ** (1 - k)
    out[0] = 0.0
    return out


def power_hi_mask(mesh: Mesh1D, k: int) -> np.ndarray:
    """h_{i+1}^(1-k) for i <= N_q-2, zero at the last index (upward shift)."""
    h = mesh.element_lengths
    out = np.zeros(mesh.N_q)
    out[:-1] = h[1:].astype(float) ** (1 - k)
    return out


def be_power_mask(mesh: Mesh1D, k: int) -> np.ndarray:
    """Bulk mask for block-encoded power terms (first element excluded).

    Order 1: row i of the shift-difference circulant addresses element i+1,
    entry ``2 (2/h_{i+1})^(k-1)``.  Order 2: odd row i addresses element
    (i+1)/2, entry ``(2/h_e)^(k-1)``; even rows and wraparound rows are zero,
    suppressing the unphysical circulant contributions.
    """
    h = mesh.element_lengths
    out = np.zeros(mesh.N_q)
    if mesh.order == 1:
        for i in range(mesh.N_q - 1):
            out[i] = 2.0 * (2.0 / h[i + 1]) ** (k - 1)
    else:
        for i in range(1, mesh.N_q - 2, 2):
            out[i] = (2.0 / h[(i + 1) // 2]) ** (k - 1)
    return out


def be_body_mask(mesh: Mesh1D, g: int, bc: BoundaryData) -> np.ndarray:
    """Bulk mask for the block-encoded body-force term at Gauss point g."""
    h = mesh.element_lengths
    out = np.zeros(mesh.N_q)
    if mesh.order == 1:
        for i in range(mesh.N_q - 1):
            e = i + 1
            out[i] = 0.5 * h[e] * float(bc.body(mesh.gauss_coords(e)[g]))
    else:
        for i in range(1, mesh.N_q - 2, 2):
            e = (i + 1) // 2
            out[i] = 0.5 * h[e] * float(bc.body(mesh.gauss_coords(e)[g]))
    return out


def body_coeffs(mesh: Mesh1D, body_force) -> tuple[float, np.ndarray]:
    """Nodal load coefficients by 2-point quadrature.

    Returns ``(b0, b)`` where ``b0`` belongs to the Dirichlet node and ``b``
    to the internal DoFs.
    """
    coeffs = np.zeros(mesh.N_q + 1)
    if body_force is not None:
        for e in range(mesh.num_elements):
            nodes = mesh.element_nodes(e)
            h = mesh.element_lengths[e]
            for g in range(2):
                N, _ = shape_values(mesh.order, g)
                bval = float(np.asarray(body_force(mesh.gauss_coords(e)[g])))
                for i, node in enumerate(nodes):
                    coeffs[node] += 0.5 * h * bval * N[i]
    return float(coeffs[0]), coeffs[1:]


def h_vector(mesh: Mesh1D) -> np.ndarray:
    """Element lengths as an N_q vector (order-1 meshes only)."""
    if mesh.order != 1:
        raise ValueError("h vector is only defined on order-1 meshes")
    return mesh.element_lengths.astype(float).copy()


def m10_mask(mesh: Mesh1D) -> np.ndarray:
    out = np.ones(mesh.N_q)
    out[0] = 0.0
    return out


def basis_vector(index: int, nq: int) -> np.ndarray:
    if not 0 <= index < nq:
        raise ValueError(f"basis index {index} out of range")
    out = np.zeros(nq)
    out[index] = 1.0
    return out


_NAMED = {
    "m2": lambda mesh: power_diag_mask(mesh, 2),
    "m3": lambda mesh: power_hi_mask(mesh, 2),
    "m4": lambda mesh: power_diag_mask(mesh, 3),
    "m5": lambda mesh: power_hi_mask(mesh, 3),
    "m6": lambda mesh: power_lo_mask(mesh, 3),
    "m9": lambda mesh: power_lo_mask(mesh, 2),
    "m10": m10_mask,
    "h": h_vector,
}


def aux_vector(mesh: Mesh1D, name: str, *, k: int | None = None, g: int | None = None, bc=None):
    """Named auxiliary vectors.

    ``m1`` / ``m-1`` are the exact basis vectors used for first/last-node
    extraction; ``m2``..``m6`` are the quadratic/cubic direct-expansion masks
    (``m5`` pairs with the upward shift, ``m6`` with the downward shift, both
    validated against the expanded sums); ``m7`` / ``m8g`` are the
    block-encoding bulk masks (pass ``k`` resp. ``g`` and ``bc``); ``m9`` /
    ``m10`` are the penalty-scheme masks; ``h`` is the element-length vector
    and ``b`` the body-force coefficient vector.
    """
    if name == "m1":
        return basis_vector(0, mesh.N_q)
    if name == "m-1":
        return basis_vector(mesh.N_q - 1, mesh.N_q)
    if name == "m7":
        if k is None:
            raise ValueError("m7 requires the power k")
        return be_power_mask(mesh, k)
    if name == "m8g":
        if g is None or bc is None:
            raise ValueError("m8g requires the Gauss index and boundary data")
        return be_body_mask(mesh, g, bc)
    if name == "b":
        if bc is None:
            raise ValueError("b requires boundary data")
        return body_coeffs(mesh, bc.body_force)[1]
    if name in _NAMED:
        if name in ("m9", "m10", "h") and mesh.order != 1:
            raise ValueError(f"{name} is defined for order-1 meshes only")
        return _NAMED[name](mesh)
    raise ValueError(f"unknown auxiliary vector {name!r}")
