"""sklearn-style estimator wrappers around the solver functions.

Each estimator consumes a system in ``fit`` (a SparseLinearSystem or a dense
(matrix, rhs) pair) and exposes the reconstruction through fitted
attributes: ``image_`` (flat values), ``trace_``, ``n_iter_`` and the full
result object as ``result_``.  Parameters follow the usual get_params /
set_params protocol so the solvers clone and grid-search like any other
estimator.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .core import BoxBounds, RunConfig
from .feasibility import run_feasibility
from .psm import run_projected_subgradient
from .superiorize import run_superiorized
from .validation import as_start_image, as_system

__all__ = ["ART", "SuperiorizedART", "ProjectedSubgradient"]


class _ReconstructorBase(BaseEstimator):
    def _prepare(self, system, x0):
        system = as_system(system)
        bounds = BoxBounds(self.lower, self.upper)
        start = as_start_image(x0, system, self.image_shape, bounds)
        return system, bounds, start

    def _finish(self, result):
        self.result_ = result
        self.image_ = result.image.values
        self.image_shape_ = (result.image.rows, result.image.cols)
        self.trace_ = result.trace
        self.n_iter_ = result.iterations
        self.status_ = result.status
        return self

    def fit_reconstruct(self, system, x0=None):
        """Fit and return the flat reconstruction values."""
        return self.fit(system, x0=x0).image_


class ART(_ReconstructorBase):
    """Feasibility seeking by sequential row projections plus a box clamp.

    Stops at the first iterate whose residual norm reaches ``epsilon``.
    """

    def __init__(
        self,
        epsilon=1e-3,
        max_iterations=5000,
        lower=0.0,
        upper=1.0,
        image_shape=None,
    ):
        self.epsilon = epsilon
        self.max_iterations = max_iterations
        self.lower = lower
        self.upper = upper
        self.image_shape = image_shape

    def fit(self, system, x0=None):
        system, bounds, start = self._prepare(system, x0)
        result = run_feasibility(
            system, bounds, start, epsilon=self.epsilon, max_iterations=self.max_iterations
        )
        self._finish(result)
        self.converged_ = result.converged
        return self


class SuperiorizedART(_ReconstructorBase):
    """Feasibility seeking with interleaved TV-nonascent perturbations."""

    def __init__(
        self,
        epsilon=1e-3,
        max_iterations=5000,
        eta_base=0.999,
        perturbations_per_sweep=9,
        derivative_guard=1e-20,
        lower=0.0,
        upper=1.0,
        image_shape=None,
    ):
        self.epsilon = epsilon
        self.max_iterations = max_iterations
        self.eta_base = eta_base
        self.perturbations_per_sweep = perturbations_per_sweep
        self.derivative_guard = derivative_guard
        self.lower = lower
        self.upper = upper
        self.image_shape = image_shape

    def fit(self, system, x0=None):
        system, bounds, start = self._prepare(system, x0)
        config = RunConfig(
            eta_base=self.eta_base,
            perturbations_per_sweep=self.perturbations_per_sweep,
            derivative_guard=self.derivative_guard,
            epsilon=self.epsilon,
            max_iterations=self.max_iterations,
        )
        result = run_superiorized(system, bounds, start, config)
        self._finish(result)
        self.converged_ = result.converged
        self.total_beta_ = result.total_beta_drawn
        return self


class ProjectedSubgradient(_ReconstructorBase):
    """TV minimization by projected subgradient steps with a dual projector."""

    def __init__(
        self,
        max_iterations=5000,
        step_exponent=0.25,
        check_period=10,
        improvement_divisor=5000.0,
        alpha_init=10.0,
        inner_tol_rel=1e-6,
        max_inner=2000,
        warm_start=False,
        lower=0.0,
        upper=1.0,
        image_shape=None,
    ):
        self.max_iterations = max_iterations
        self.step_exponent = step_exponent
        self.check_period = check_period
        self.improvement_divisor = improvement_divisor
        self.alpha_init = alpha_init
        self.inner_tol_rel = inner_tol_rel
        self.max_inner = max_inner
        self.warm_start = warm_start
        self.lower = lower
        self.upper = upper
        self.image_shape = image_shape

    def fit(self, system, x0=None):
        system, bounds, start = self._prepare(system, x0)
        config = RunConfig(
            step_exponent=self.step_exponent,
            psm_check_period=self.check_period,
            psm_improvement_divisor=self.improvement_divisor,
            nesterov_alpha_init=self.alpha_init,
            psm_inner_tol_rel=self.inner_tol_rel,
            psm_max_inner=self.max_inner,
            psm_warm_start=self.warm_start,
            max_iterations=self.max_iterations,
        )
        result = run_projected_subgradient(system, bounds, start, config)
        self._finish(result)
        self.achieved_epsilon_ = result.achieved_epsilon
        return self
