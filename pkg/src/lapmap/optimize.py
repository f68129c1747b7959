"""Projected gradient descent with Armijo backtracking and penalty rounds.

The solver minimizes the structure cost over the colormap family's
feasible set (boxes + simplex groups) via projected gradient steps.
Gamut halfspace constraints, when present, are handled with quadratic
penalty rounds of increasing weight; the caller performs an exact
geometric projection of the final output (penalties only need to get
close).  Everything is plain numpy, so runs are deterministic for a
fixed seed and input.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cost import ProblemSpec, cost_and_grad, cost_total


class NonFiniteCostError(RuntimeError):
    """Raised when the objective or gradient stops being finite."""

    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 500
    rel_tol: float = 1e-6
    stall_iters: int = 5
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    min_step: float = 1e-16
    penalty_start: float = 10.0
    penalty_growth: float = 10.0
    penalty_rounds: int = 4

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must be in (0, 1)")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must be in (0, 1)")
        if self.rel_tol <= 0 or self.initial_step <= 0:
            raise ValueError("rel_tol and initial_step must be > 0")


@dataclass
class SolveTrace:
    """Per-accepted-iteration history of a solve."""

    costs: list[float] = field(default_factory=list)
    raw_costs: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    step_sizes: list[float] = field(default_factory=list)
    violations: list[float] = field(default_factory=list)
    rounds: list[int] = field(default_factory=list)
    status: str = ""
    wall_time: float = 0.0

    def record(self, cost, raw, gnorm, step, violation, round_idx):
        self.costs.append(float(cost))
        self.raw_costs.append(float(raw))
        self.grad_norms.append(float(gnorm))
        self.step_sizes.append(float(step))
        self.violations.append(float(violation))
        self.rounds.append(int(round_idx))


def _penalty_value_grad(theta, spec: ProblemSpec, rho: float):
    """Quadratic penalty rho * sum(max(A y - b, 0)^2) over graph vertices."""
    a, b = spec.halfspaces
    y = spec.mapped_colors(theta)
    viol = np.maximum(y @ a.T - b[None, :], 0.0)
    value = rho * float(np.sum(viol**2))
    jac = spec.family.channel_jacobians(
        theta, spec.source_colors, spec.support.vertices
    )
    grad = np.zeros(spec.family.n_params)
    for ch in range(spec.family.d_out):
        grad += jac[ch].T @ (viol @ a[:, ch])
    return value, 2.0 * rho * grad, float(viol.max(initial=0.0))


def _check_finite(value, grad, theta):
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NonFiniteCostError("objective or gradient is non-finite", theta=theta)


def minimize(
    spec: ProblemSpec,
    theta_init: np.ndarray,
    options: SolveOptions | None = None,
) -> tuple[np.ndarray, SolveTrace]:
    """Run the solver from theta_init; returns (theta, trace).

    Within each penalty round the recorded objective is monotonically
    non-increasing (Armijo only accepts decreases).  Without halfspaces
    there is a single round and no penalty term.
    """
    opts = options or SolveOptions()
    start = time.perf_counter()
    fam = spec.family
    theta_init = np.asarray(theta_init, dtype=float)
    if not np.all(np.isfinite(theta_init)):
        raise NonFiniteCostError(
            "initial parameters are non-finite", theta=theta_init
        )
    theta = fam.project(theta_init)
    trace = SolveTrace()

    penalized = spec.halfspaces is not None
    n_rounds = opts.penalty_rounds if penalized else 1
    rho = opts.penalty_start
    status = "max_iters"

    for round_idx in range(n_rounds):
        def objective(t):
            value, grad = cost_and_grad(t, spec)
            raw = value
            violation = 0.0
            if penalized:
                pv, pg, violation = _penalty_value_grad(t, spec, rho)
                value = value + pv
                grad = grad + pg
            return value, grad, raw, violation

        value, grad, raw, violation = objective(theta)
        _check_finite(value, grad, theta)
        step = opts.initial_step
        trace.record(value, raw, np.linalg.norm(grad), 0.0, violation, round_idx)
        stall = 0
        status = "max_iters"
        for _ in range(opts.max_iters):
            accepted = False
            while step >= opts.min_step:
                candidate = fam.project(theta - step * grad)
                cand_value = cost_total(candidate, spec)
                if penalized:
                    a, b = spec.halfspaces
                    y = spec.mapped_colors(candidate)
                    v = np.maximum(y @ a.T - b[None, :], 0.0)
                    cand_value += rho * float(np.sum(v**2))
                if not np.isfinite(cand_value):
                    raise NonFiniteCostError(
                        "objective is non-finite", theta=candidate
                    )
                direction = candidate - theta
                if cand_value <= value + opts.armijo_c * float(grad @ direction):
                    accepted = True
                    break
                step *= opts.backtrack
            if not accepted:
                status = "step_collapse"
                break
            previous = value
            theta = candidate
            value, grad, raw, violation = objective(theta)
            _check_finite(value, grad, theta)
            trace.record(value, raw, np.linalg.norm(grad), step, violation, round_idx)
            step = min(opts.initial_step, step / opts.backtrack)
            rel_change = abs(previous - value) / max(1.0, abs(previous))
            stall = stall + 1 if rel_change < opts.rel_tol else 0
            if stall >= opts.stall_iters:
                status = "converged"
                break
        rho *= opts.penalty_growth

    trace.status = status
    trace.wall_time = time.perf_counter() - start
    return theta, trace


def check_gradient(
    spec: ProblemSpec, theta: np.ndarray, h: float = 1e-6
) -> float:
    """Max relative error of the analytic gradient vs central differences.

    Relative error per coordinate is |g_fd - g| / max(1, |g_fd|).
    """
    theta = np.asarray(theta, dtype=float)
    _, grad = cost_and_grad(theta, spec)
    worst = 0.0
    for i in range(len(theta)):
        plus = theta.copy()
        minus = theta.copy()
        plus[i] += h
        minus[i] -= h
        fd = (cost_total(plus, spec) - cost_total(minus, spec)) / (2.0 * h)
        err = abs(fd - grad[i]) / max(1.0, abs(fd))
        worst = max(worst, err)
    return worst


def best_of_restarts(
    spec: ProblemSpec,
    seed: int,
    restarts: int,
    options: SolveOptions | None = None,
    theta_init: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveTrace]:
    """Run minimize from several seeded inits, keep the lowest final cost.

    Seeds are seed, seed+1, ... so reruns are reproducible; ties keep the
    earliest seed.  An explicit theta_init replaces the first draw.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    for r in range(restarts):
        if r == 0 and theta_init is not None:
            start = np.asarray(theta_init, dtype=float)
        else:
            start = spec.family.init(np.random.default_rng(seed + r))
        theta, trace = minimize(spec, start, options)
        final = trace.costs[-1]
        if best is None or final < best[2]:
            best = (theta, trace, final)
    return best[0], best[1]
