"""Superiorized feasibility seeking.

Between sweeps of the feasibility operator, the iterate takes a fixed number
of small steps along TV-nonascending unit directions.  Step sizes come from
one geometric schedule beta_l = eta_base**l whose cursor only ever advances,
including across rejected candidates, so the total perturbation mass over a
whole run stays below 1/(1 - eta_base).  A candidate z = y + beta * v is
accepted once its TV does not exceed the TV of the sweep anchor (the iterate
the current sweep started from), which keeps the objective monotone along
the accepted chain while feasibility seeking proceeds unharmed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BoxBounds,
    EpsilonOutput,
    ImageVector,
    IterationTrace,
    RunConfig,
    SparseLinearSystem,
)
from .feasibility import apply_feasibility_operator
from .tv import gradient_of_grid, value_of_grid

__all__ = [
    "PerturbationSchedule",
    "PerturbationRecord",
    "SuperiorizedResult",
    "run_superiorized",
]

_TINY = np.finfo(np.float64).tiny


@dataclass(eq=False)
class PerturbationSchedule:
    """Stateful step-size supply: draw l (counting from 0) returns eta_base**l.

    The cursor never rewinds.  Partial sums of the draws are bounded by
    1 / (1 - eta_base) regardless of how draws are split across sweeps.
    """

    eta_base: float = 0.999
    cursor: int = -1

    def __post_init__(self):
        if not 0.0 < self.eta_base < 1.0:
            raise ValueError("eta_base must lie strictly between 0 and 1")
        if self.cursor < -1:
            raise ValueError("cursor cannot start before -1")

    def next_beta(self) -> float:
        self.cursor += 1
        return self.eta_base**self.cursor


@dataclass(frozen=True)
class PerturbationRecord:
    """One accepted perturbation step, plus how many draws it took."""

    outer: int
    inner: int
    beta: float
    direction_norm: float
    phi_candidate: float
    phi_anchor: float
    draws: int


@dataclass(eq=False)
class SuperiorizedResult:
    """Outcome of a superiorized run.

    status is one of "converged", "max_iterations", "schedule_exhausted"
    (step sizes underflowed to zero) or "stalled" (the per-step draw cap was
    hit without an acceptable candidate).
    """

    epsilon_output: EpsilonOutput | None
    trace: IterationTrace
    status: str
    iterations: int
    image: ImageVector
    prox: float
    phi: float
    seconds: float
    ell_final: int
    total_beta_drawn: float
    total_beta_accepted: float
    perturbations: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.epsilon_output is not None


def run_superiorized(
    system: SparseLinearSystem,
    bounds: BoxBounds,
    y0: ImageVector,
    config: RunConfig,
    epsilon: float | None = None,
    observer=None,
) -> SuperiorizedResult:
    """Superiorized feasibility seeking from y0 down to proximity epsilon.

    Per outer iteration: perturbations_per_sweep accepted TV-nonascent steps
    (each candidate drawn from the shared schedule and tested against the
    sweep anchor's TV), then one feasibility sweep.  With zero perturbations
    per sweep the run is identical, iterate for iterate, to the basic
    feasibility loop.  The optional observer callable receives
    ("perturbation", payload) after each accepted step and ("sweep", payload)
    after each operator application; payload arrays are snapshots.
    """
    eps = config.epsilon if epsilon is None else epsilon
    if eps is None or eps <= 0.0:
        raise ValueError("epsilon must be a positive number (argument or config)")
    if not isinstance(y0, ImageVector):
        raise TypeError("y0 must be an ImageVector")
    if y0.size != system.num_cols:
        raise ValueError(
            f"y0 has {y0.size} entries but the system has {system.num_cols} columns"
        )
    if not bounds.contains(y0.values):
        raise ValueError("y0 must lie inside the box bounds")

    rows, cols = y0.rows, y0.cols
    b = system.rhs_vector
    matrix = system.matrix
    schedule = PerturbationSchedule(config.eta_base)
    records: list = []
    total_drawn = 0.0
    total_accepted = 0.0

    y = y0.values.copy()
    trace = IterationTrace()
    start = time.perf_counter()
    k = 0
    epsilon_output = None
    status = "max_iterations"
    failed = False
    while True:
        prox = float(np.linalg.norm(b - matrix @ y))
        phi_anchor = value_of_grid(y.reshape(rows, cols))
        trace.append(k, prox, phi_anchor, time.perf_counter() - start)
        if prox <= eps:
            epsilon_output = EpsilonOutput(ImageVector(y.copy(), rows, cols), k, prox)
            status = "converged"
            break
        if k >= config.max_iterations:
            break

        y_kn = y.copy()
        for n in range(config.perturbations_per_sweep):
            w = gradient_of_grid(y_kn.reshape(rows, cols), config.derivative_guard).ravel()
            norm = float(np.linalg.norm(w))
            v = np.zeros_like(w) if norm == 0.0 else -w / norm
            draws = 0
            while True:
                beta = schedule.next_beta()
                draws += 1
                total_drawn += beta
                if beta < _TINY:
                    status = "schedule_exhausted"
                    failed = True
                    break
                if draws > config.schedule_draw_cap:
                    status = "stalled"
                    failed = True
                    break
                z = y_kn + beta * v
                phi_z = value_of_grid(z.reshape(rows, cols))
                if phi_z <= phi_anchor:
                    y_kn = z
                    total_accepted += beta
                    records.append(
                        PerturbationRecord(
                            outer=k,
                            inner=n,
                            beta=beta,
                            direction_norm=0.0 if norm == 0.0 else float(np.linalg.norm(v)),
                            phi_candidate=phi_z,
                            phi_anchor=phi_anchor,
                            draws=draws,
                        )
                    )
                    if observer is not None:
                        observer(
                            "perturbation",
                            {
                                "outer": k,
                                "inner": n,
                                "beta": beta,
                                "direction": v.copy(),
                                "phi_candidate": phi_z,
                                "phi_anchor": phi_anchor,
                            },
                        )
                    break
            if failed:
                break
        if failed:
            break

        y_next = apply_feasibility_operator(system, bounds, y_kn)
        if observer is not None:
            observer(
                "sweep",
                {
                    "outer": k,
                    "anchor": y.copy(),
                    "pre_operator": y_kn.copy(),
                    "post_operator": y_next.copy(),
                },
            )
        y = y_next
        k += 1

    seconds = time.perf_counter() - start
    final = trace.final()
    return SuperiorizedResult(
        epsilon_output=epsilon_output,
        trace=trace,
        status=status,
        iterations=k,
        image=ImageVector(y, rows, cols),
        prox=final.prox,
        phi=final.phi,
        seconds=seconds,
        ell_final=schedule.cursor,
        total_beta_drawn=total_drawn,
        total_beta_accepted=total_accepted,
        perturbations=records,
    )
