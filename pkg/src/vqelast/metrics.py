"""Error metrics: relative L2 displacement error against the analytic
solution, maximum gradient deviation at element Gauss points, and the trace
distance between the VQA state and the classically minimized reference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem
from .fem import Mesh1D


@dataclass
class MetricsBundle:
    E_L2_pct: float
    E_maxgrad: float
    E_trace: float

    def as_dict(self) -> dict:
        return {"E_L2_pct": self.E_L2_pct, "E_maxgrad": self.E_maxgrad, "E_trace": self.E_trace}


def l2_error_pct(mesh: Mesh1D, u_nodal, analytic) -> float:
    """Relative L2 error (percent) of the FE field against the analytic
    displacement, by 10-point per-element subsampling of the analytic field.
    Falls back to the absolute error when the analytic norm vanishes."""
    nodes_gl, weights_gl = np.polynomial.legendre.leggauss(10)
    ends = np.concatenate([[0.0], np.cumsum(mesh.element_lengths)])
    num = 0.0
    den = 0.0
    for e in range(mesh.num_elements):
        a, b = ends[e], ends[e + 1]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        xs = mid + half * nodes_gl
        u_fe, _ = fem.interp_eval(mesh, u_nodal, xs)
        u_ex = analytic.u(xs)
        num += half * float(np.dot(weights_gl, (u_fe - u_ex) ** 2))
        den += half * float(np.dot(weights_gl, u_ex**2))
    if den <= 0.0:
        return float(np.sqrt(num))
    return float(np.sqrt(num / den) * 100.0)


def maxgrad_error(mesh: Mesh1D, u_nodal, analytic, samples_per_element: int = 32) -> float:
    """Max |u' - u'_exact| over a dense per-element sample grid.

    Element interiors are sampled up to the faces; VQ and analytic fields are
    evaluated on exactly the same points.
    """
    worst = 0.0
    ends = np.concatenate([[0.0], np.cumsum(mesh.element_lengths)])
    for e in range(mesh.num_elements):
        lo, hi = ends[e], ends[e + 1]
        pad = 1e-9 * (hi - lo)
        xs = np.linspace(lo + pad, hi - pad, samples_per_element)
        _, du = fem.interp_eval(mesh, u_nodal, xs)
        worst = max(worst, float(np.max(np.abs(du - analytic.uprime(xs)))))
    return worst


def trace_error(u_vq_nodal, u_cl_nodal) -> float:
    """sqrt(1 - |<vq|cl>|^2) over the normalized internal DoF vectors."""
    a = np.asarray(u_vq_nodal, dtype=float)[1:]
    b = np.asarray(u_cl_nodal, dtype=float)[1:]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 1.0
    overlap = float(np.dot(a, b) / (na * nb))
    return float(np.sqrt(max(0.0, 1.0 - overlap * overlap)))


def compute_metrics(mesh: Mesh1D, u_vq_nodal, u_cl_nodal, analytic) -> MetricsBundle:
    return MetricsBundle(
        E_L2_pct=l2_error_pct(mesh, u_vq_nodal, analytic),
        E_maxgrad=maxgrad_error(mesh, u_vq_nodal, analytic),
        E_trace=trace_error(u_vq_nodal, u_cl_nodal),
    )
