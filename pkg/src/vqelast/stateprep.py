"""State preparation: exact networks for known vectors, fitting for profiles.

Two preparation routes coexist:

* ``prepare_exact`` builds a multiplexed-RY binary tree that loads any real
  vector to machine precision.  Cost-function circuits use it for the fixed
  auxiliary vectors, which keeps the quantum/classical oracle identity tight
  (a fitted port would inject its fit residual into every term).
* ``fit_state`` reproduces a vector through the ansatz itself by multi-start
  quasi-Newton descent on the angles.  The optimizer's decision variables are
  ansatz angles, so initial-guess displacement profiles must go through this
  route.  Results are cached keyed by (vector hash, n, d).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .ansatz import ControlParams, num_angles, realize_unit
from .sv_core import Circuit


def _prep_angles(target: np.ndarray) -> list[tuple[int, int, float]]:
    """(level, pattern, angle) triples for the real-amplitude RY tree.

    ``level`` counts from the top qubit (n-1) down; ``pattern`` is the basis
    pattern of the already-prepared higher qubits, MSB first.
    """
    n = int(round(math.log2(target.size)))
    out = []

    def norms(vec):
        half = vec.size // 2
        return vec[:half], vec[half:]

    # work MSB-first: node at (level, pattern) owns a contiguous block
    blocks = [target]
    for level in range(n):
        next_blocks = []
        for pattern, block in enumerate(blocks):
            lo, hi = norms(block)
            if block.size == 2:
                angle = 2.0 * math.atan2(block[1], block[0]) if np.any(block != 0) else 0.0
            else:
                nlo, nhi = np.linalg.norm(lo), np.linalg.norm(hi)
                angle = 2.0 * math.atan2(nhi, nlo) if (nlo or nhi) else 0.0
            out.append((level, pattern, angle))
            next_blocks += [lo, hi]
        blocks = next_blocks
    return out


def prepare_exact(vector, num_qubits: int | None = None) -> Circuit:
    """Circuit loading ``vector / ||vector||`` exactly onto ``|0...0⟩``.

    Uses multiplexed RY rotations only, so the prepared amplitudes are real;
    no ancilla qubits are needed.
    """
    vec = np.asarray(vector, dtype=float)
    n = int(round(math.log2(vec.size)))
    if 2**n != vec.size:
        raise ValueError("vector length must be a power of two")
    if num_qubits is None:
        num_qubits = n
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ValueError("cannot prepare the zero vector")
    vec = vec / nrm
    circ = Circuit(num_qubits, label="prep")
    for level, pattern, angle in _prep_angles(vec):
        target = n - 1 - level
        controls = [n - 1 - j for j in range(level)]
        if angle == 0.0 and level > 0:
            continue
        # X-conjugate the controls that must match a 0 bit
        zero_ctrls = [c for j, c in enumerate(controls) if not (pattern >> (level - 1 - j)) & 1]
        for c in zero_ctrls:
            circ.x(c)
        circ.ry(angle, target, controls=tuple(controls))
        for c in zero_ctrls:
            circ.x(c)
    return circ


def basis_prep(index: int, n: int) -> Circuit:
    """Exact preparation of the basis state |index⟩ with X gates only."""
    if not 0 <= index < 2**n:
        raise ValueError(f"basis index {index} out of range for n={n}")
    circ = Circuit(n, label=f"basis|{index}>")
    for q in range(n):
        if (index >> q) & 1:
            circ.x(q)
    return circ


# ---------------------------------------------------------------------------
# Ansatz fitting


class FitFailure(RuntimeError):
    """Best residual after all restarts and depth raises, for diagnostics."""

    def __init__(self, residual: float, params: ControlParams):
        super().__init__(f"state fit failed, best residual {residual:.3e}")
        self.residual = residual
        self.params = params


@dataclass
class FitCache:
    """JSON sidecar keyed by (vector hash, n, d) to avoid refitting."""

    path: str

    def _load(self) -> dict:
        if os.path.exists(self.path):
            with open(self.path) as fh:
                return json.load(fh)
        return {}

    def get(self, key: str):
        entry = self._load().get(key)
        if entry is None:
            return None
        return ControlParams(entry["scale"], np.array(entry["angles"]), entry["n"], entry["d"])

    def put(self, key: str, params: ControlParams, residual: float) -> None:
        data = self._load()
        data[key] = {
            "scale": params.scale,
            "angles": list(params.angles),
            "n": params.n,
            "d": params.d,
            "residual": residual,
        }
        os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)
        with open(self.path, "w") as fh:
            json.dump(data, fh)


def _cache_key(target: np.ndarray, n: int, d: int) -> str:
    digest = hashlib.sha256(np.round(target, 12).tobytes()).hexdigest()[:24]
    return f"{digest}:{n}:{d}"


def _fit_once(unit_target, n, d, rng, max_iter=400):
    from .ansatz import realize_unit_and_grad
    from .vqa_driver import _bfgs_core

    def cost(angles):
        diff = realize_unit(n, d, angles) - unit_target
        return float(np.dot(diff, diff))

    def grad(angles, _fval=None):
        _, _, g = realize_unit_and_grad(n, d, angles, unit_target)
        return g

    x0 = rng.uniform(0.0, 2.0 * math.pi, size=num_angles(n, d))
    x, fval, _ = _bfgs_core(cost, x0, gtol=1e-12, ftol=1e-16, max_iter=max_iter, grad_fn=grad)
    return x, fval


def fit_state(
    target,
    n: int,
    d: int,
    tol: float = 1e-5,
    restarts: int = 32,
    seed: int = 0,
    max_depth_raise: int = 6,
    cache: FitCache | None = None,
) -> ControlParams:
    """Control parameters reproducing ``target`` within ``tol`` (2-norm).

    The scale is pinned to ``||target||`` and the angles are found by
    multi-start quasi-Newton descent; on failure the layer depth is raised in
    steps of 2 (up to ``d + max_depth_raise``) before giving up.
    """
    target = np.asarray(target, dtype=float)
    if target.size != 2**n:
        raise ValueError(f"target length {target.size} != 2^{n}")
    nrm = float(np.linalg.norm(target))
    if nrm == 0:
        raise ValueError("cannot fit the zero vector; handle zero scale upstream")
    if cache is not None:
        hit = cache.get(_cache_key(target, n, d))
        if hit is not None:
            return hit
    unit = target / nrm

    best_params, best_res = None, np.inf
    for d_try in range(d, d + max_depth_raise + 1, 2):
        rng = np.random.default_rng(np.random.SeedSequence([seed, d_try]))
        for _ in range(restarts):
            angles, sq = _fit_once(unit, n, d_try, rng)
            res = nrm * math.sqrt(max(sq, 0.0))
            if res < best_res:
                best_res = res
                best_params = ControlParams(nrm, np.mod(angles, 2.0 * math.pi), n, d_try)
            if best_res <= tol:
                break
        if best_res <= tol:
            break
    if best_res > tol:
        raise FitFailure(best_res, best_params)
    if cache is not None and best_params.d == d:
        cache.put(_cache_key(target, n, d), best_params, best_res)
    return best_params
