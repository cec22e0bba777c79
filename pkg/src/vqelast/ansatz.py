"""Real-amplitude ansatz and its realization as a classical vector.

The ansatz is ``d`` repetitions of an RY layer on all qubits followed by a
linear chain of CX entanglers (control q onto q+1), closed by one final RY
layer, so the angle count is exactly ``n * (d + 1)``.  RY and CX have real
matrices, hence the prepared state has real amplitudes for every angle
setting and can encode a real vector together with a scale factor.

A CZ chain was tried first but its reachable set is a proper submanifold of
the real sphere (the state-map Jacobian never exceeds rank 2^n - 2), which
caps fit quality far above the required tolerance; the CX chain restores
full local surjectivity at depth 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sv_core import Circuit


def num_angles(n: int, d: int) -> int:
    return n * (d + 1)


@dataclass(frozen=True)
class ControlParams:
    """Scale plus ansatz angles; together they encode one real vector.

    ``scale`` carries the physical magnitude (e.g. mm for a displacement
    profile); the angles determine the unit-norm direction.
    """

    scale: float
    angles: np.ndarray
    n: int
    d: int

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        object.__setattr__(self, "angles", angles)
        if angles.shape != (num_angles(self.n, self.d),):
            raise ValueError(
                f"expected {num_angles(self.n, self.d)} angles for n={self.n}, d={self.d}, "
                f"got {angles.size}"
            )

    def with_scale(self, scale: float) -> "ControlParams":
        return ControlParams(scale, self.angles, self.n, self.d)


def build_ansatz(n: int, d: int, angles) -> Circuit:
    """Ansatz circuit V(angles) on an ``n``-qubit register."""
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (num_angles(n, d),):
        raise ValueError(f"expected {num_angles(n, d)} angles, got {angles.size}")
    circ = Circuit(n, label=f"V(n={n},d={d})")
    layers = angles.reshape(d + 1, n)
    for layer in range(d):
        for q in range(n):
            circ.ry(layers[layer, q], q)
        for q in range(n - 1):
            circ.cx(q, q + 1)
    for q in range(n):
        circ.ry(layers[d, q], q)
    return circ


def controlled_ansatz(n: int, d: int, angles, control: int) -> Circuit:
    """The ansatz with every gate promoted to controlled form.

    The returned circuit acts on ``n + 1`` or more qubits as addressed; the
    target register keeps its qubit labels, so ``control`` must lie outside
    ``[0, n)``.
    """
    if 0 <= control < n:
        raise ValueError("control qubit overlaps the target register")
    base = build_ansatz(n, d, angles)
    wide = Circuit(max(n, control + 1), label=base.label + "_ctrl")
    wide.ops = base.ops
    return wide.controlled(control)


def _apply_ry(psi: np.ndarray, n: int, q: int, angle: float) -> None:
    """In-place RY on qubit q of a flat real statevector."""
    view = psi.reshape(-1, 2, 2**q)
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    a = view[:, 0, :].copy()
    b = view[:, 1, :]
    view[:, 0, :] = c * a - s * b
    view[:, 1, :] = s * a + c * b


def _apply_cx_adjacent(psi: np.ndarray, q: int) -> None:
    """In-place CX with control q, target q+1."""
    view = psi.reshape(-1, 2, 2, 2**q)  # axes: high, target, control, low
    tmp = view[:, 0, 1, :].copy()
    view[:, 0, 1, :] = view[:, 1, 1, :]
    view[:, 1, 1, :] = tmp


def realize_unit(n: int, d: int, angles) -> np.ndarray:
    """V(angles)|0⟩ as a real vector of length 2^n (fast path, no Circuit)."""
    angles = np.asarray(angles, dtype=float)
    layers = angles.reshape(d + 1, n)
    psi = np.zeros(2**n)
    psi[0] = 1.0
    for layer in range(d):
        for q in range(n):
            _apply_ry(psi, n, q, layers[layer, q])
        for q in range(n - 1):
            _apply_cx_adjacent(psi, q)
    for q in range(n):
        _apply_ry(psi, n, q, layers[d, q])
    return psi


def realize_unit_and_grad(n: int, d: int, angles, residual_to=None):
    """State plus the Jacobian-vector products needed for fitting.

    Returns ``(psi, grad)`` where ``grad`` is d/d(angles) of
    ``||psi - residual_to||^2`` computed by reverse-mode accumulation (one
    forward and one backward sweep instead of one statevector per angle).
    """
    angles = np.asarray(angles, dtype=float)
    layers = angles.reshape(d + 1, n)
    psi = np.zeros(2**n)
    psi[0] = 1.0
    pre_states = []  # state before each RY, in application order

    def ry_all(vals):
        for q in range(n):
            pre_states.append(psi.copy())
            _apply_ry(psi, n, q, vals[q])

    for layer in range(d):
        ry_all(layers[layer])
        for q in range(n - 1):
            _apply_cx_adjacent(psi, q)
    ry_all(layers[d])

    diff = psi - residual_to
    lam = 2.0 * diff
    grad = np.empty(angles.size)
    k = len(pre_states) - 1

    def ry_adjoint(vals, layer_idx):
        nonlocal lam, k
        for q in range(n - 1, -1, -1):
            # dRY/dtheta = RY(theta + pi) / ... : use generator form G = RY'(t)
            c, s = math.cos(vals[q] / 2.0), math.sin(vals[q] / 2.0)
            pre = pre_states[k]
            view = pre.reshape(-1, 2, 2**q)
            a, b = view[:, 0, :], view[:, 1, :]
            dpsi = np.empty_like(pre)
            dview = dpsi.reshape(-1, 2, 2**q)
            dview[:, 0, :] = -0.5 * (s * a + c * b)
            dview[:, 1, :] = 0.5 * (c * a - s * b)
            grad[layer_idx * n + q] = float(np.dot(lam, dpsi))
            _apply_ry(lam, n, q, -vals[q])  # RY is orthogonal: inverse = transpose
            k -= 1

    ry_adjoint(layers[d], d)
    for layer in range(d - 1, -1, -1):
        for q in range(n - 2, -1, -1):
            _apply_cx_adjacent(lam, q)  # CX is its own inverse/transpose
        ry_adjoint(layers[layer], layer)
    return psi, float(np.dot(diff, diff)), grad


def realize_vector(params: ControlParams) -> np.ndarray:
    """The encoded classical vector ``scale * V(angles)|0⟩``."""
    return params.scale * realize_unit(params.n, params.d, params.angles)
