"""Feasibility seeking for box-constrained sparse linear systems.

The algorithmic operator is one full sequential sweep of row projections

    x <- x + (rhs_i - <a_i, x>) / ||a_i||^2 * a_i      for i = 1..I

followed by a single clamp onto the box.  Each row action is a hyperplane
projection and the clamp is the box projection, so the composite operator is
nonexpansive and its fixed points are exactly the feasible set (system
solutions inside the box) whenever that set is nonempty.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import (
    BoxBounds,
    EpsilonOutput,
    ImageVector,
    IterationTrace,
    SparseLinearSystem,
    SparseRow,
)
from .tv import value_of_grid

__all__ = [
    "art_row_update",
    "box_project",
    "apply_feasibility_operator",
    "FeasibilityResult",
    "run_feasibility",
]


def art_row_update(x: np.ndarray, row: SparseRow) -> np.ndarray:
    """Orthogonal projection of x onto the hyperplane <a, x> = rhs of one row."""
    arr = np.asarray(x, dtype=np.float64)
    out = arr.copy()
    coef = (row.rhs - np.dot(row.weights, arr[row.indices])) / row.squared_norm
    out[row.indices] += coef * row.weights
    return out


def box_project(x: np.ndarray, bounds: BoxBounds) -> np.ndarray:
    """Componentwise clamp onto [bounds.lower, bounds.upper]."""
    return np.clip(np.asarray(x, dtype=np.float64), bounds.lower, bounds.upper)


def _sweep_in_place(x, system):
    """Sequential row projections in ascending row order.

    Consecutive rows with disjoint supports (see SparseLinearSystem.sweep_plan)
    are applied as one batch: none of them can observe another's update, so
    the batch reads and writes exactly what the one-by-one pass would.  Row
    residuals use np.add.reduceat, i.e. left-to-right summation, in every
    batch including singletons, keeping the result independent of how the
    rows happen to be grouped.
    """
    for cols, w, starts, counts, rhs, squared_norms in system.sweep_segments:
        products = w * x[cols]
        dots = np.add.reduceat(products, starts)
        coefs = (rhs - dots) / squared_norms
        x[cols] += np.repeat(coefs, counts) * w


def apply_feasibility_operator(
    system: SparseLinearSystem, bounds: BoxBounds, x: np.ndarray
) -> np.ndarray:
    """One sweep of all row projections (ascending row order), then the clamp."""
    out = np.array(x, dtype=np.float64, copy=True)
    if out.shape != (system.num_cols,):
        raise ValueError(
            f"x has shape {out.shape} but the system has {system.num_cols} columns"
        )
    _sweep_in_place(out, system)
    np.clip(out, bounds.lower, bounds.upper, out=out)
    return out


@dataclass(eq=False)
class FeasibilityResult:
    """Outcome of a feasibility-seeking run.

    epsilon_output is set when some iterate reached the target proximity; it
    names the first such iterate (the run stops there, so it is also the
    last).  status is "converged" or "max_iterations".
    """

    epsilon_output: EpsilonOutput | None
    trace: IterationTrace
    status: str
    iterations: int
    image: ImageVector
    prox: float
    phi: float
    seconds: float

    @property
    def converged(self) -> bool:
        return self.epsilon_output is not None


def _check_start(system, bounds, x0):
    if not isinstance(x0, ImageVector):
        raise TypeError("x0 must be an ImageVector")
    if x0.size != system.num_cols:
        raise ValueError(
            f"x0 has {x0.size} entries but the system has {system.num_cols} columns"
        )
    if not bounds.contains(x0.values):
        raise ValueError("x0 must lie inside the box bounds")


def run_feasibility(
    system: SparseLinearSystem,
    bounds: BoxBounds,
    x0: ImageVector,
    epsilon: float,
    max_iterations: int = 5000,
    objective=None,
) -> FeasibilityResult:
    """Iterate the feasibility operator until proximity drops to epsilon.

    The iterate count k counts operator applications; x0 itself is iterate 0
    and is already the answer when it is epsilon-compatible.  The trace logs
    every iterate (including the start) as (k, proximity, objective value,
    elapsed seconds); timing covers the solver loop only.
    """
    if epsilon is None or epsilon <= 0.0:
        raise ValueError("epsilon must be a positive number")
    if max_iterations < 1:
        raise ValueError("max_iterations must be at least 1")
    _check_start(system, bounds, x0)
    rows, cols = x0.rows, x0.cols
    if objective is None:
        objective = lambda arr: value_of_grid(arr.reshape(rows, cols))

    b = system.rhs_vector
    matrix = system.matrix
    x = x0.values.copy()
    trace = IterationTrace()
    start = time.perf_counter()
    k = 0
    epsilon_output = None
    status = "max_iterations"
    while True:
        prox = float(np.linalg.norm(b - matrix @ x))
        phi = float(objective(x))
        trace.append(k, prox, phi, time.perf_counter() - start)
        if prox <= epsilon:
            epsilon_output = EpsilonOutput(ImageVector(x.copy(), rows, cols), k, prox)
            status = "converged"
            break
        if k >= max_iterations:
            break
        x = apply_feasibility_operator(system, bounds, x)
        k += 1
    seconds = time.perf_counter() - start
    final = trace.final()
    return FeasibilityResult(
        epsilon_output=epsilon_output,
        trace=trace,
        status=status,
        iterations=k,
        image=ImageVector(x, rows, cols),
        prox=final.prox,
        phi=final.phi,
        seconds=seconds,
    )
