"""Variational quantum solver for 1D Neo-Hookean elasticity.

The package minimises a polynomially approximated potential energy
functional over a parameterised quantum state, with every quantum
expectation evaluated on a built-in noiseless statevector simulator and
cross-checkable against a classical oracle.
"""

from .sv_core import Circuit, Gate, StateVector, apply_circuit, postselect, resource_report
from .ansatz import ControlParams, build_ansatz, controlled_ansatz, realize_vector
from .fem import BoundaryData, Mesh1D, QuadratureRule
from .energy import (
    EnergyModel,
    assemble_blockenc,
    assemble_iht_penalty,
    assemble_taylor_direct,
    classical_energy,
    quantum_cost,
)
from .reference import analytic_solution, classical_minimize
from .vqa_driver import OptimizerConfig, RunResult, minimize, run_batch
from .metrics import MetricsBundle, compute_metrics

__all__ = [
    "Circuit",
    "Gate",
    "StateVector",
    "apply_circuit",
    "postselect",
    "resource_report",
    "ControlParams",
    "build_ansatz",
    "controlled_ansatz",
    "realize_vector",
    "BoundaryData",
    "Mesh1D",
    "QuadratureRule",
    "EnergyModel",
    "assemble_taylor_direct",
    "assemble_iht_penalty",
    "assemble_blockenc",
    "classical_energy",
    "quantum_cost",
    "analytic_solution",
    "classical_minimize",
    "OptimizerConfig",
    "RunResult",
    "minimize",
    "run_batch",
    "MetricsBundle",
    "compute_metrics",
]
