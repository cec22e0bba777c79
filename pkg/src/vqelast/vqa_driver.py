"""Classical outer loop: initial guesses, finite differences, BFGS, batches.

The quasi-Newton update and termination rule are implemented here rather than
delegated so that the stopping criterion (cost-difference based, single shot
at 1e-8 or three consecutive iterations below 1e-7) and the evaluation-count
instrumentation behave exactly as specified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FD_STEP_DEFAULT = math.sqrt(np.finfo(float).eps)


class AdmissibilityError(RuntimeError):
    """Cost became non-finite during evaluation or differencing."""


@dataclass
class OptimizerConfig:
    """Outer-loop settings.

    ``stationarity_tol`` bounds the state-space gradient of the realized
    solution for a run to count as successful: the angle parameterization has
    chart folds where the pulled-back gradient vanishes while the encoded
    profile is far from any energy minimum, and such pseudo-stationary stops
    must not pollute the statistics.
    """

    fd_step: float = FD_STEP_DEFAULT
    stop_single: float = 1e-8
    stop_triple: float = 1e-7
    max_iterations: int = 1500
    seed: int = 0
    runs: int = 20
    success_cost_slack: float = 0.1
    success_bounds: float = 0.5  # slope bound for admissible initial profiles
    stationarity_tol: float = 5e-2

    def __post_init__(self):
        if not self.stop_single < self.stop_triple:
            raise ValueError("stop_single must be strictly below stop_triple")


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    nfev: int
    iterations: int
    history: list[tuple[int, float, float, int]]  # (iteration, cost, grad_norm, nfev)
    stopped_by_tolerance: bool


@dataclass
class RunResult:
    """Outcome of one VQA run (or one classical reference run)."""

    params: object
    y_params: object | None
    u: np.ndarray
    cost: float
    cost_history: list[float]
    evaluations: int
    stopped_by_tolerance: bool
    admissible: bool
    stationary: bool = True
    success: bool = False
    metrics: dict = field(default_factory=dict)
    history: list = field(default_factory=list)


def fd_gradient(cost, x, fx=None, step: float = FD_STEP_DEFAULT):
    """Forward-difference gradient with a fixed absolute step per coordinate."""
    x = np.asarray(x, dtype=float)
    if fx is None:
        fx = cost(x)
    if not np.isfinite(fx):
        raise AdmissibilityError("cost is non-finite at the evaluation point")
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp[i] += step
        fp = cost(xp)
        if not np.isfinite(fp):
            raise AdmissibilityError("cost is non-finite at a perturbed point")
        g[i] = (fp - fx) / step
    return g


def _wolfe_search(f, grad, x, p, fx, gx, *, c1=1e-4, c2=0.9, alpha0=1.0, max_expand=10, max_zoom=12):
    """Strong Wolfe line search (Nocedal-Wright 3.5/3.6).

    Returns ``(alpha, f_new, g_new)`` or None on failure.  The curvature
    condition is what arrests runaway steps on polynomial energies that are
    unbounded below outside the physical regime: such directions never
    flatten, the bracketing phase gives up and the optimizer stops instead of
    sliding off to -inf.
    """
    dphi0 = float(np.dot(gx, p))
    if dphi0 >= 0:
        return None

    def phi(a):
        return f(x + a * p)

    def dphi(a):
        g = grad(x + a * p)
        return float(np.dot(g, p)), g

    def zoom(a_lo, f_lo, a_hi, f_hi, dphi_lo):
        for _ in range(max_zoom):
            # quadratic model through (a_lo, f_lo, dphi_lo) and f_hi, with a
            # bisection safeguard; interpolation matters on stiff valleys
            a = None
            da_hi = a_hi - a_lo
            if np.isfinite(f_hi) and da_hi != 0.0:
                curv = (f_hi - f_lo - dphi_lo * da_hi) / da_hi**2
                if curv > 0:
                    cand = a_lo - dphi_lo / (2.0 * curv)
                    lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
                    margin = 0.1 * (hi - lo)
                    if lo + margin <= cand <= hi - margin:
                        a = cand
            if a is None:
                a = 0.5 * (a_lo + a_hi)
            fa = phi(a)
            if not np.isfinite(fa) or fa > fx + c1 * a * dphi0 or fa >= f_lo:
                a_hi, f_hi = a, fa
            else:
                da, ga = dphi(a)
                if abs(da) <= -c2 * dphi0:
                    return a, fa, ga
                if da * (a_hi - a_lo) >= 0:
                    a_hi, f_hi = a_lo, f_lo
                a_lo, f_lo, dphi_lo = a, fa, da
        return None

    a_prev, f_prev = 0.0, fx
    a = alpha0
    dphi_prev = dphi0
    for i in range(max_expand):
        fa = phi(a)
        # non-finite marks a guarded/invalid region: shrink toward the origin
        if not np.isfinite(fa) or fa > fx + c1 * a * dphi0 or (fa >= f_prev and i > 0):
            return zoom(a_prev, f_prev, a, fa, dphi_prev)
        da, ga = dphi(a)
        if abs(da) <= -c2 * dphi0:
            return a, fa, ga
        if da >= 0:
            return zoom(a, fa, a_prev, f_prev, da)
        a_prev, f_prev, dphi_prev = a, fa, da
        a *= 2.0
    return None


def _bfgs_core(
    cost,
    x0,
    *,
    gtol: float = 1e-10,
    ftol: float | None = None,
    max_iter: int = 500,
    fd_step: float = FD_STEP_DEFAULT,
    stop_rule=None,
    grad_fn=None,
):
    """BFGS with a strong-Wolfe line search; used by both the VQA driver and
    the state fitter.

    ``stop_rule(delta)`` is consulted after each accepted iterate with the
    absolute cost decrease and may request termination; ``nfev`` counts every
    cost call, finite differences and line search included.  Gradients come
    from forward differences unless an analytic ``grad_fn`` is supplied.
    """
    x = np.asarray(x0, dtype=float).copy()
    nfev = 0

    def f(z):
        nonlocal nfev
        nfev += 1
        val = float(cost(z))
        return val

    if grad_fn is None:

        def grad(z, fz=None):
            return fd_gradient(f, z, fz, fd_step)

    else:

        def grad(z, fz=None):
            return grad_fn(z, fz)

    fx = f(x)
    g = grad(x, fx)
    identity = np.eye(x.size)
    H = identity.copy()
    history = [(0, fx, float(np.linalg.norm(g)), nfev)]
    stopped = False
    it = 0
    delta_prev = None
    while it < max_iter:
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            stopped = True
            break
        p = -H @ g
        dphi0 = float(np.dot(g, p))
        if dphi0 >= 0:
            H = identity.copy()
            p = -g
            dphi0 = -gnorm * gnorm
        # initial trial step sized from the previous decrease (Newton-like
        # guess on stiff valleys); plain unit-length cap on the first move
        if delta_prev is None:
            alpha0 = min(1.0, 1.01 / gnorm)
        else:
            alpha0 = min(1.0, 1.01 * 2.0 * delta_prev / max(-dphi0, 1e-300))
            if alpha0 <= 0:
                alpha0 = 1.0
        try:
            ls = _wolfe_search(f, grad, x, p, fx, g, alpha0=alpha0)
        except AdmissibilityError:
            ls = None
        if ls is None:
            break
        alpha, fnew, g_new = ls
        x_new = x + alpha * p
        s = x_new - x
        yvec = g_new - g
        sy = float(np.dot(s, yvec))
        if sy > 1e-12 * np.linalg.norm(s) * max(np.linalg.norm(yvec), 1e-300):
            rho = 1.0 / sy
            V = identity - rho * np.outer(s, yvec)
            H = V @ H @ V.T + rho * np.outer(s, s)
        delta = abs(fx - fnew)
        delta_prev = max(delta, 1e-300)
        x, fx, g = x_new, fnew, g_new
        it += 1
        history.append((it, fx, float(np.linalg.norm(g)), nfev))
        if stop_rule is not None and stop_rule(delta):
            stopped = True
            break
        if ftol is not None and delta < ftol:
            stopped = True
            break
        if np.linalg.norm(g) < gtol:
            stopped = True
            break
    return x, fx, {"nfev": nfev, "iterations": it, "history": history, "stopped": stopped}


class _PaperStopRule:
    """Terminate on one cost decrease below ``single`` or three consecutive
    decreases below ``triple``."""

    def __init__(self, single: float, triple: float):
        self.single = single
        self.triple = triple
        self.streak = 0

    def __call__(self, delta: float) -> bool:
        if delta < self.single:
            return True
        if delta < self.triple:
            self.streak += 1
            if self.streak >= 3:
                return True
        else:
            self.streak = 0
        return False


def minimize(cost, init_params, config: OptimizerConfig) -> MinimizeResult:
    """Quasi-Newton minimisation with the cost-difference stopping rule."""
    rule = _PaperStopRule(config.stop_single, config.stop_triple)
    x, fx, info = _bfgs_core(
        cost,
        init_params,
        gtol=0.0,
        ftol=None,
        max_iter=config.max_iterations,
        fd_step=config.fd_step,
        stop_rule=rule,
    )
    return MinimizeResult(
        x=x,
        fun=fx,
        nfev=info["nfev"],
        iterations=info["iterations"],
        history=info["history"],
        stopped_by_tolerance=info["stopped"],
    )


def random_admissible_profile(mesh, bound: float = 0.5, rng=None, ubar: float = 0.0) -> np.ndarray:
    """Random nodal displacement profile with |u'| < ``bound`` everywhere.

    Slopes between consecutive nodes are drawn uniformly and integrated from
    the Dirichlet value; for quadratic meshes the interpolated gradient can
    overshoot the per-interval slopes, so draws are rejected until the Gauss
    point gradients also satisfy the bound.
    """
    from .fem import interp_gradients_at_gauss

    if rng is None:
        rng = np.random.default_rng()
    if not 0 < bound < 1:
        raise ValueError("bound must lie in (0, 1)")
    x = mesh.node_coords
    for _ in range(200):
        slopes = rng.uniform(-bound, bound, size=x.size - 1)
        u = ubar + np.concatenate([[0.0], np.cumsum(slopes * np.diff(x))])
        if np.max(np.abs(interp_gradients_at_gauss(mesh, u))) < bound:
            return u
    raise RuntimeError("could not draw an admissible profile")


def iht_companion_field(mesh, u_nodal) -> np.ndarray:
    """Per-element auxiliary field y = u'/(u'+2) for the penalty scheme."""
    from .fem import element_slopes

    w = element_slopes(mesh, u_nodal)
    return w / (w + 2.0)


@dataclass
class BatchResult:
    stats: dict
    runs: list[RunResult]
    attempts: int
    successes: int

    @property
    def success_ratio(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0


def run_batch(
    run_fn,
    *,
    seed: int,
    target_successes: int | None = 20,
    fixed_attempts: int | None = None,
    attempts_cap_factor: int = 5,
    cost_slack: float = 0.1,
) -> BatchResult:
    """Repeat ``run_fn(child_seed)`` and aggregate.

    A run is successful when its own convergence and admissibility flags hold
    and its converged cost lies within ``cost_slack`` of the best cost seen in
    the batch (guards against convergence to nonphysical stationary points).
    Runs until ``target_successes`` candidate successes are collected (capped
    at ``attempts_cap_factor`` times that) unless ``fixed_attempts`` is given.
    """
    seeds = np.random.SeedSequence(seed)
    results: list[RunResult] = []
    attempts = 0
    if fixed_attempts is not None:
        budget = fixed_attempts
    else:
        budget = attempts_cap_factor * target_successes

    def candidate_ok(r: RunResult) -> bool:
        return r.stopped_by_tolerance and r.admissible and r.stationary

    def mark_successes() -> int:
        candidates = [r for r in results if candidate_ok(r)]
        if not candidates:
            return 0
        best = min(r.cost for r in candidates)
        tol = cost_slack * abs(best) + 1e-12
        for r in results:
            r.success = candidate_ok(r) and r.cost <= best + tol
        return sum(r.success for r in results)

    child_seeds = seeds.generate_state(budget, dtype=np.uint64)
    for attempt in range(budget):
        results.append(run_fn(int(child_seeds[attempt])))
        attempts += 1
        if fixed_attempts is None and mark_successes() >= target_successes:
            break

    successes = mark_successes()
    stats: dict = {"attempts": attempts, "successes": successes}
    if fixed_attempts is None and successes < target_successes:
        stats["warning"] = (
            f"only {successes} successful runs of {target_successes} requested "
            f"within {attempts} attempts"
        )
    good = [r for r in results if r.success]
    if good:
        stats["evaluations_mean"] = float(np.mean([r.evaluations for r in good]))
        stats["evaluations_std"] = float(np.std([r.evaluations for r in good]))
        keys = sorted({k for r in good for k in r.metrics})
        for k in keys:
            vals = np.array([r.metrics[k] for r in good if k in r.metrics], dtype=float)
            stats[f"{k}_mean"] = float(np.mean(vals))
            stats[f"{k}_std"] = float(np.std(vals))
    stats["success_ratio"] = successes / attempts if attempts else 0.0
    return BatchResult(stats=stats, runs=results, attempts=attempts, successes=successes)
