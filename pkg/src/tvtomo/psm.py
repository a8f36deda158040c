"""Projected subgradient TV minimization over a box-constrained linear system.

Outer loop: from the current iterate take one normalized diminishing
subgradient step, q = x - (k**-0.25 / ||s||) * s, then project q back onto
the feasible set {x : A x = b, lower <= x <= upper}.

The projection itself is solved through its dual.  With v = q - A^T lambda
and x_hat = clip(v) the concave dual of  min 1/2 ||x - q||^2  over the
feasible set is

    f(lambda) = 1/2 ||v - x_hat||^2 - 1/2 ||v||^2 - <lambda, b> + 1/2 ||q||^2

whose supremum equals the primal minimum, and grad(-f)(lambda) =
b - A x_hat, the negated residual of the clamped primal candidate.  -f is
minimized with an accelerated gradient method using geometric backtracking:
the smallest s >= 0 with

    theta(mu) - theta(mu - 2**-s * alpha * grad) >= 2**-s * alpha / 2 * ||grad||^2

sets the step, alpha shrinks monotonically across iterations, and the
momentum weights follow beta' = 1/2 + sqrt(4 beta^2 + 1) / 2.  Stopping on
||grad(-f)|| <= tol bounds the returned point's residual ||A x - b|| by tol
directly, because both are the same vector.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BoxBounds,
    ImageVector,
    IterationTrace,
    RunConfig,
    SparseLinearSystem,
)
from .tv import subgradient_of_grid, value_of_grid

__all__ = [
    "dual_objective",
    "nesterov_beta_next",
    "ProjectionResult",
    "project_onto_feasible_set",
    "InnerSolveRecord",
    "PsmResult",
    "run_projected_subgradient",
]


def nesterov_beta_next(beta: float) -> float:
    """Momentum weight recursion beta' = 1/2 + sqrt(4 beta^2 + 1) / 2."""
    return 0.5 + 0.5 * math.sqrt(4.0 * beta * beta + 1.0)


def _as_vector(x, size, name):
    arr = x.values if isinstance(x, ImageVector) else np.asarray(x, dtype=np.float64)
    if arr.shape != (size,):
        raise ValueError(f"{name} must have shape ({size},), got {arr.shape}")
    return arr


def dual_objective(system: SparseLinearSystem, bounds: BoxBounds, q, lam):
    """Dual value and descent gradient at multiplier lam.

    Returns (value, grad) where value is the concave dual f(lam) of the
    least-moves projection of q onto the feasible set, and grad is the
    gradient of -f, that is b - A clip(q - A^T lam).  Weak duality bounds
    value by 1/2 ||x_star - q||^2 for the true projection x_star.
    """
    q_arr = _as_vector(q, system.num_cols, "q")
    lam_arr = _as_vector(lam, system.num_rows, "lam")
    v = q_arr - system.matrix_transpose @ lam_arr
    x_hat = np.clip(v, bounds.lower, bounds.upper)
    slack = v - x_hat
    value = (
        0.5 * float(np.dot(slack, slack))
        - 0.5 * float(np.dot(v, v))
        - float(np.dot(lam_arr, system.rhs_vector))
        + 0.5 * float(np.dot(q_arr, q_arr))
    )
    grad = system.rhs_vector - system.matrix @ x_hat
    return value, grad


def _neg_dual_value(v, x_hat, lam_dot_b, half_q_sq):
    slack = v - x_hat
    return -(0.5 * float(np.dot(slack, slack)) - 0.5 * float(np.dot(v, v)) - lam_dot_b + half_q_sq)


@dataclass(eq=False)
class _DualSolve:
    x: np.ndarray
    lam: np.ndarray
    iterations: int
    grad_norm: float
    converged: bool
    history: list


def _minimize_dual(
    system,
    bounds,
    q_arr,
    tol,
    max_inner,
    alpha_init,
    lam0=None,
    record_history=False,
):
    """Accelerated descent on -f; returns the clamped primal candidate."""
    matrix = system.matrix
    matrix_t = system.matrix_transpose
    b = system.rhs_vector
    num_rows = system.num_rows

    if lam0 is None:
        mu = np.zeros(num_rows)
        at_mu = np.zeros(system.num_cols)
    else:
        mu = np.asarray(lam0, dtype=np.float64).copy()
        at_mu = matrix_t @ mu
    lam_prev = mu.copy()
    at_lam_prev = at_mu.copy()
    alpha = float(alpha_init)
    beta = 1.0
    half_q_sq = 0.5 * float(np.dot(q_arr, q_arr))
    history: list = []

    best_grad = math.inf
    best_x = None
    best_lam = None

    for it in range(max_inner):
        v = q_arr - at_mu
        x_hat = np.clip(v, bounds.lower, bounds.upper)
        grad = b - matrix @ x_hat
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < best_grad:
            best_grad = grad_norm
            best_x = x_hat
            best_lam = mu.copy()
        if grad_norm <= tol:
            return _DualSolve(x_hat, mu, it, grad_norm, True, history)

        mu_dot_b = float(np.dot(mu, b))
        grad_dot_b = float(np.dot(grad, b))
        theta_mu = _neg_dual_value(v, x_hat, mu_dot_b, half_q_sq)
        at_grad = matrix_t @ grad
        grad_sq = grad_norm * grad_norm

        s = 0
        while True:
            step = math.ldexp(alpha, -s)
            v_trial = v + step * at_grad
            x_trial = np.clip(v_trial, bounds.lower, bounds.upper)
            theta_trial = _neg_dual_value(
                v_trial, x_trial, mu_dot_b - step * grad_dot_b, half_q_sq
            )
            if theta_mu - theta_trial >= 0.5 * step * grad_sq:
                break
            s += 1
            if step < 1e-300:
                # cannot make progress at any representable step
                return _DualSolve(best_x, best_lam, it, best_grad, False, history)
        alpha = step
        lam_new = mu - alpha * grad
        at_lam_new = at_mu - alpha * at_grad
        beta_new = nesterov_beta_next(beta)
        momentum = (beta - 1.0) / beta_new
        mu = lam_new + momentum * (lam_new - lam_prev)
        at_mu = at_lam_new + momentum * (at_lam_new - at_lam_prev)
        lam_prev, at_lam_prev = lam_new, at_lam_new
        beta = beta_new
        if record_history:
            history.append(
                {
                    "iteration": it,
                    "grad_norm": grad_norm,
                    "backtracks": s,
                    "alpha": alpha,
                    "theta": theta_mu,
                    "theta_trial": theta_trial,
                    "decrease": theta_mu - theta_trial,
                    "required": 0.5 * alpha * grad_sq,
                }
            )

    return _DualSolve(best_x, best_lam, max_inner, best_grad, False, history)


@dataclass(eq=False)
class ProjectionResult:
    """Projection of a point onto the feasible set, with solve diagnostics.

    converged False means the inner iteration budget ran out; the image is
    then the best (smallest residual) candidate seen and grad_norm reports
    its residual norm.
    """

    image: ImageVector
    dual_point: np.ndarray
    iterations: int
    grad_norm: float
    converged: bool
    history: list = field(default_factory=list, repr=False)


def project_onto_feasible_set(
    system: SparseLinearSystem,
    bounds: BoxBounds,
    q: ImageVector,
    tol: float | None = None,
    max_inner: int = 2000,
    alpha_init: float = 10.0,
    start=None,
    record_history: bool = False,
) -> ProjectionResult:
    """Euclidean projection of q onto {x : A x = b, inside the box}.

    tol bounds the returned point's residual ||A x - b||; the default is
    1e-6 * (1 + ||b||).  start optionally seeds the dual multiplier.
    """
    q_arr = _as_vector(q, system.num_cols, "q")
    if tol is None:
        tol = 1e-6 * (1.0 + system.rhs_norm)
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if max_inner < 1:
        raise ValueError("max_inner must be at least 1")
    solve = _minimize_dual(
        system, bounds, q_arr, tol, max_inner, alpha_init, lam0=start, record_history=record_history
    )
    if isinstance(q, ImageVector):
        rows, cols = q.rows, q.cols
    else:
        rows, cols = 1, system.num_cols
    return ProjectionResult(
        image=ImageVector(solve.x.copy(), rows, cols),
        dual_point=solve.lam,
        iterations=solve.iterations,
        grad_norm=solve.grad_norm,
        converged=solve.converged,
        history=solve.history,
    )


@dataclass(frozen=True)
class InnerSolveRecord:
    outer: int
    iterations: int
    grad_norm: float
    converged: bool


@dataclass(eq=False)
class PsmResult:
    """Outcome of a projected subgradient run.

    achieved_epsilon is the residual norm of the final iterate; a
    feasibility-seeking run chasing the same accuracy should target it.
    status is "stopped" (windowed-improvement rule fired), "fixed_point"
    (zero subgradient and an unchanged projection) or "max_iterations".
    """

    image: ImageVector
    trace: IterationTrace
    status: str
    iterations: int
    achieved_epsilon: float
    phi: float
    curr: float
    prev: float
    seconds: float
    inner_solves: list = field(default_factory=list, repr=False)
    step_history: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status in ("stopped", "fixed_point")


def run_projected_subgradient(
    system: SparseLinearSystem,
    bounds: BoxBounds,
    x0: ImageVector,
    config: RunConfig,
) -> PsmResult:
    """Minimize TV over the feasible set by projected subgradient steps.

    Stopping: every psm_check_period completed iterations, stop once the
    windowed best-TV improvement falls below prev / psm_improvement_divisor.
    The best-TV trackers anchor at the first projected iterate (the raw
    start may sit far from the feasible set, or at zero TV for a flat
    start, and would freeze the rule).  A zero subgradient skips the
    descent step; if the following projection returns the iterate
    unchanged, the run stops at that fixed point.
    """
    if not isinstance(x0, ImageVector):
        raise TypeError("x0 must be an ImageVector")
    if x0.size != system.num_cols:
        raise ValueError(
            f"x0 has {x0.size} entries but the system has {system.num_cols} columns"
        )
    rows, cols = x0.rows, x0.cols
    b = system.rhs_vector
    matrix = system.matrix
    tol = config.psm_inner_tol_rel * (1.0 + system.rhs_norm)

    x = x0.values.copy()
    trace = IterationTrace()
    start_time = time.perf_counter()
    prox0 = float(np.linalg.norm(b - matrix @ x))
    phi0 = value_of_grid(x.reshape(rows, cols))
    trace.append(0, prox0, phi0, time.perf_counter() - start_time)

    curr = prev = phi0
    inner_records: list = []
    steps: list = []
    warm_lam = None
    status = "max_iterations"
    k = 0
    final_prox = prox0
    while k < config.max_iterations:
        sub = subgradient_of_grid(x.reshape(rows, cols)).ravel()
        sub_norm = float(np.linalg.norm(sub))
        if sub_norm == 0.0:
            gamma = 0.0
            q = x.copy()
        else:
            # k**-step_exponent is undefined at k=0; use the k=1 prefactor
            gamma = 1.0 if k == 0 else float(k) ** (-config.step_exponent)
            q = x - (gamma / sub_norm) * sub
        steps.append({"k": k, "gamma": gamma, "step": 0.0 if sub_norm == 0.0 else gamma / sub_norm})

        solve = _minimize_dual(
            system,
            bounds,
            q,
            tol,
            config.psm_max_inner,
            config.nesterov_alpha_init,
            lam0=warm_lam if config.psm_warm_start else None,
        )
        if config.psm_warm_start:
            warm_lam = solve.lam
        inner_records.append(InnerSolveRecord(k, solve.iterations, solve.grad_norm, solve.converged))

        x_new = solve.x
        phi_new = value_of_grid(x_new.reshape(rows, cols))
        final_prox = solve.grad_norm  # identical to ||b - A x_new||
        k += 1
        trace.append(k, final_prox, phi_new, time.perf_counter() - start_time)

        if sub_norm == 0.0 and np.array_equal(x_new, x):
            x = x_new
            status = "fixed_point"
            break
        x = x_new

        if k == 1:
            # anchor the improvement trackers past the initial projection
            curr = prev = phi_new
        elif phi_new <= curr:
            curr = phi_new
        if k % config.psm_check_period == 0:
            if prev - curr < prev / config.psm_improvement_divisor:
                status = "stopped"
                break
            prev = curr

    seconds = time.perf_counter() - start_time
    final = trace.final()
    return PsmResult(
        image=ImageVector(x, rows, cols),
        trace=trace,
        status=status,
        iterations=k,
        achieved_epsilon=final.prox,
        phi=final.phi,
        curr=curr,
        prev=prev,
        seconds=seconds,
        inner_solves=inner_records,
        step_history=steps,
    )
