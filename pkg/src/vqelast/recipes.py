"""Experiment configuration, runnable recipes and CSV emission.

A configuration is one JSON-friendly mapping with every physical constant
explicit; unknown keys are rejected.  The built-in recipes reproduce the
three studies: ``ex1`` (approximation order on a uniform bar),
``kappa_sweep`` (success ratio against load magnitude), ``scaling``
(register/depth growth) and ``robustness`` (non-uniform meshes, mixed
boundary data, block encodings).
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from numpy.polynomial import polynomial as npoly

from .ansatz import ControlParams, num_angles
from .energy import (
    EnergyModel,
    assemble_blockenc,
    assemble_iht_penalty,
    assemble_taylor_direct,
    quantum_cost,
    realized_nodal,
)
from .fem import BoundaryData, Mesh1D
from .metrics import compute_metrics
from .reference import analytic_solution, classical_minimize, state_gradient_norm
from .stateprep import FitCache, FitFailure, fit_state
from .sv_core import resource_report
from .vqa_driver import (
    BatchResult,
    OptimizerConfig,
    RunResult,
    iht_companion_field,
    minimize,
    random_admissible_profile,
    run_batch,
)

SCHEMES = ("T3", "T4", "T5", "P3", "D1", "BE1", "BE2")


@dataclass
class ExperimentConfig:
    scheme: str = "T3"
    n: int = 3
    d: int = 2
    mesh_lengths: list | None = None  # explicit element lengths, or None for uniform
    length: float = 1.0
    order: int = 1
    mu: float = 1.0
    body_poly: list = field(default_factory=list)  # B(X) coefficients, lowest first
    pbar: float = 0.0
    ubar: float = 0.0
    penalty: float = 100.0
    runs: int = 20
    fixed_attempts: int | None = None
    seed: int = 1
    backend: str = "algebraic"
    fd_step: float | None = None
    stop_single: float = 1e-8
    stop_triple: float = 1e-7
    max_iterations: int = 1500
    profile_bound: float = 0.5
    fit_cache: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.backend not in ("algebraic", "circuit", "both"):
            raise ValueError("backend must be algebraic, circuit or both")
        if self.scheme == "BE2" and self.order != 2:
            raise ValueError("BE2 needs a second-order mesh")
        if self.scheme in ("T3", "T4", "T5", "P3", "D1", "BE1") and self.order != 1:
            raise ValueError(f"{self.scheme} needs a first-order mesh")

    def mesh(self) -> Mesh1D:
        if self.mesh_lengths is not None:
            return Mesh1D.from_lengths(self.mesh_lengths, order=self.order)
        return Mesh1D.uniform(self.n, self.length, order=self.order)

    def boundary(self) -> BoundaryData:
        poly = np.asarray(self.body_poly, dtype=float)
        body = None
        if poly.size and np.any(poly != 0):
            body = lambda x: npoly.polyval(x, poly)  # noqa: E731
        return BoundaryData(self.ubar, self.pbar, body)

    def model(self) -> EnergyModel:
        mesh, bc = self.mesh(), self.boundary()
        if self.scheme in ("T3", "T4", "T5", "D1"):
            order = 3 if self.scheme == "D1" else int(self.scheme[1])
            return assemble_taylor_direct(mesh, order, bc, self.mu)
        if self.scheme == "P3":
            return assemble_iht_penalty(mesh, self.penalty, bc, self.mu)
        return assemble_blockenc(mesh, 3, bc, self.mu)

    def analytic(self):
        body = list(self.body_poly) if self.body_poly else None
        return analytic_solution(self.mu, body, self.pbar, self.ubar, self.mesh().length)

    def optimizer(self) -> OptimizerConfig:
        kw = {}
        if self.fd_step is not None:
            kw["fd_step"] = self.fd_step
        return OptimizerConfig(
            stop_single=self.stop_single,
            stop_triple=self.stop_triple,
            max_iterations=self.max_iterations,
            seed=self.seed,
            runs=self.runs,
            **kw,
        )


def _pack(params, y_params=None):
    x = np.concatenate([[params.scale], params.angles])
    if y_params is not None:
        x = np.concatenate([x, [y_params.scale], y_params.angles])
    return x


def _unpack(x, n, d, with_y):
    m = num_angles(n, d)
    pv = ControlParams(x[0], x[1 : 1 + m], n, d)
    if not with_y:
        return pv, None
    return pv, ControlParams(x[1 + m], x[2 + m :], n, d)


def single_run(config: ExperimentConfig, model: EnergyModel, seed: int, cache=None) -> RunResult:
    """One paired VQA/classical run from a fresh admissible initial profile."""
    from .ansatz import realize_vector
    from .metrics import trace_error

    mesh = model.mesh
    n, d = config.n, config.d
    opt = config.optimizer()
    rng = np.random.default_rng(seed)
    u0 = random_admissible_profile(mesh, config.profile_bound, rng, ubar=config.ubar)
    try:
        p0 = fit_state(u0[1:], n, d, seed=seed, cache=cache)
    except FitFailure as err:
        p0 = err.params
    y0 = None
    py0 = None
    if model.uses_y_register:
        y0 = iht_companion_field(mesh, u0)
        if np.linalg.norm(y0) == 0:
            py0 = ControlParams(0.0, np.zeros(num_angles(n, d)), n, d)
        else:
            try:
                py0 = fit_state(y0, n, d, seed=seed + 1, cache=cache)
            except FitFailure as err:
                py0 = err.params

    def cost(x):
        pv, py = _unpack(x, n, d, model.uses_y_register)
        return quantum_cost(model, pv, py, backend=config.backend)

    res = minimize(cost, _pack(p0, py0), opt)
    pv, py = _unpack(res.x, n, d, model.uses_y_register)
    u = realized_nodal(model, pv)
    y = realize_vector(py) if py is not None else None

    admissible = model.admissible(u)
    stationary = True
    if admissible:
        stationary = state_gradient_norm(model, u, y) <= opt.stationarity_tol

    run = RunResult(
        params=pv,
        y_params=py,
        u=u,
        cost=res.fun,
        cost_history=[row[1] for row in res.history],
        evaluations=res.nfev,
        stopped_by_tolerance=res.stopped_by_tolerance,
        admissible=admissible,
        stationary=stationary,
        history=res.history,
    )
    run.metrics["taylor_valid"] = float(model.taylor_valid(u))

    # paired classical reference from the same initial guess
    u_cl, y_cl, cl_info = classical_minimize(model, u0, y0, config=opt)
    analytic = config.analytic()
    bundle = compute_metrics(mesh, u, u_cl, analytic)
    run.metrics.update(bundle.as_dict())
    run.metrics["classical_cost"] = cl_info["fun"]
    run.metrics["classical_E_L2_pct"] = compute_metrics(mesh, u_cl, u_cl, analytic).E_L2_pct
    return run


def run_experiment(config: ExperimentConfig, out_dir: str | None = None) -> BatchResult:
    model = config.model()
    cache = FitCache(config.fit_cache) if config.fit_cache else None

    def one(seed):
        return single_run(config, model, seed, cache)

    batch = run_batch(
        one,
        seed=config.seed,
        target_successes=config.runs,
        fixed_attempts=config.fixed_attempts,
    )
    if out_dir:
        write_batch_outputs(config, model, batch, out_dir)
    return batch


# ---------------------------------------------------------------------------
# CSV emission (UTF-8, header row, '.' decimal)


def _write_csv(path: str, header, rows) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_batch_outputs(config: ExperimentConfig, model: EnergyModel, batch: BatchResult, out_dir: str) -> None:
    scheme_dir = os.path.join(out_dir, config.scheme)
    for i, run in enumerate(batch.runs):
        rows = [(it, f"{c:.12e}", f"{gn:.6e}", nf) for (it, c, gn, nf) in run.history]
        _write_csv(
            os.path.join(scheme_dir, f"run_{i:03d}.csv"),
            ["iteration", "cost", "grad_norm", "evaluations"],
            rows,
        )
    # aggregate line
    stats = dict(batch.stats)
    keys = sorted(k for k in stats if k not in ("attempts", "successes", "warning"))
    header = ["scheme", "n", "d", "attempts", "successes", "success_ratio"] + keys
    row = [config.scheme, config.n, config.d, batch.attempts, batch.successes,
           f"{batch.success_ratio:.6f}"] + [f"{stats[k]:.8e}" for k in keys]
    _write_csv(os.path.join(scheme_dir, "aggregate.csv"), header, [row])
    # displacement profiles at 256 sample points
    xs = np.linspace(0.0, model.mesh.length, 256)
    analytic = config.analytic()
    from .fem import interp_eval

    cols = {"X": xs, "u_analytic": analytic.u(xs)}
    good = [r for r in batch.runs if r.success]
    if good:
        mean_u = np.mean([r.u for r in good], axis=0)
        cols["u_vq_mean"], _ = interp_eval(model.mesh, mean_u, xs)
    header = list(cols)
    rows = list(zip(*(np.asarray(cols[k]) for k in header)))
    _write_csv(os.path.join(scheme_dir, "profiles.csv"),
               header, [[f"{v:.10e}" for v in row] for row in rows])


def report_resources(config: ExperimentConfig, out_path: str | None = None):
    """Width/depth/gate counts of every distinct circuit of the model."""
    from .primitives import build_term_circuit
    from .energy import _dummy_ctx

    model = config.model()
    ctx = _dummy_ctx(model, config.d)
    rows = []
    for spec in model.specs:
        tc = build_term_circuit(spec, ctx)
        rep = resource_report(tc.circuit)
        gates = ";".join(f"{k}:{v}" for k, v in sorted(rep.gate_counts.items()))
        rows.append([spec.label, rep.width, rep.depth, rep.total_gates, gates])
    if out_path:
        _write_csv(out_path, ["circuit", "width", "depth", "total_gates", "gate_counts"], rows)
    return rows


# ---------------------------------------------------------------------------
# Recipes


def _ex1_config(scheme: str, **overrides) -> ExperimentConfig:
    base = dict(scheme=scheme, n=3, d=2, length=1.0, order=1, mu=1.0,
                body_poly=[0.0, 1.5], pbar=0.0, ubar=0.0, penalty=100.0, runs=20, seed=1)
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


def recipe_ex1(out_dir: str | None = None, **overrides) -> dict:
    """Uniform bar, linear body force: modelling error against expansion order."""
    results = {}
    for scheme in ("T3", "T4", "T5", "P3"):
        cfg = _ex1_config(scheme, **overrides)
        results[scheme] = run_experiment(cfg, out_dir)
    return results

def recipe_kappa_sweep(out_dir: str | None = None, kappas=(1.0, 1.5, 2.0, 2.5, 3.0),
                       schemes=("T3", "T4"), attempts: int = 50, **overrides) -> dict:
    """Success ratio as the body-force magnitude grows.

    For loads where the analytic solution demands u' >= 1 the Taylor models
    are flagged invalid and not run.
    """
    results = {}
    for kappa in kappas:
        sol = analytic_solution(overrides.get("mu", 1.0), [0.0, kappa], 0.0, 0.0, 1.0)
        invalid = float(np.max(sol.uprime(np.linspace(0, 1, 201)))) >= 1.0
        for scheme in schemes:
            key = (scheme, kappa)
            if invalid:
                results[key] = {"invalid_regime": True}
                continue
            cfg = _ex1_config(scheme, body_poly=[0.0, float(kappa)],
                              fixed_attempts=attempts, seed=overrides.get("seed", 1))
            batch = run_experiment(cfg, out_dir)
            results[key] = {"invalid_regime": False, "success_ratio": batch.success_ratio,
                            "stats": batch.stats}
    if out_dir:
        rows = []
        for (scheme, kappa), r in results.items():
            if isinstance(r, dict) and not r.get("invalid_regime", False):
                rows.append([scheme, kappa, f"{r['success_ratio']:.6f}"])
            else:
                rows.append([scheme, kappa, "invalid_regime"])
        _write_csv(os.path.join(out_dir, "kappa_sweep.csv"),
                   ["scheme", "kappa", "success_ratio"], rows)
    return results


def recipe_scaling(out_dir: str | None = None,
                   pairs=((3, 2), (4, 4), (5, 6)), **overrides) -> dict:
    """Register growth for the cubic direct scheme at matched depths."""
    results = {}
    for n, d in pairs:
        cfg = _ex1_config("T3", n=n, d=d, **overrides)
        results[(n, d)] = run_experiment(cfg, out_dir and os.path.join(out_dir, f"n{n}d{d}"))
    return results


def recipe_robustness(out_dir: str | None = None, **overrides) -> dict:
    """Non-uniform meshes, quadratic body force, mixed boundary data."""
    common = dict(mu=1.0, body_poly=[0.0, 0.0, 5.0], pbar=-0.8, ubar=0.1,
                  runs=20, seed=overrides.get("seed", 1), d=overrides.get("d", 2))
    mesh1 = [0.25, 0.25, 0.1, 0.1, 0.05, 0.05, 0.1, 0.1]
    mesh2 = [0.5, 0.2, 0.1, 0.2]
    results = {}
    for scheme, lengths, order in (("D1", mesh1, 1), ("BE1", mesh1, 1), ("BE2", mesh2, 2)):
        cfg = ExperimentConfig.from_dict(
            dict(scheme=scheme, n=3, mesh_lengths=lengths, order=order, **common)
        )
        results[scheme] = run_experiment(cfg, out_dir)
    return results


RECIPES = {
    "ex1": recipe_ex1,
    "kappa_sweep": recipe_kappa_sweep,
    "scaling": recipe_scaling,
    "robustness": recipe_robustness,
}


def run_recipe(name: str, out_dir: str | None = None, **overrides):
    if name not in RECIPES:
        raise KeyError(f"unknown recipe {name!r}; available: {sorted(RECIPES)}")
    return RECIPES[name](out_dir=out_dir, **overrides)


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))
