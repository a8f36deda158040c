import numpy as np
import numpy.testing as npt
import pytest
from sklearn.base import clone

from tvtomo import ART, ProjectedSubgradient, SuperiorizedART, tv_value
from tvtomo.validation import as_start_image, as_system, check_shape
from tvtomo.core import BoxBounds, ImageVector, system_from_dense


class TestValidationHelpers:
    def test_as_system_passthrough_and_dense_pair(self):
        system = system_from_dense([[1.0, 1.0]], [1.0])
        assert as_system(system) is system
        built = as_system(([[1.0, 1.0]], [1.0]))
        assert built.num_rows == 1 and built.num_cols == 2
        with pytest.raises(TypeError):
            as_system([[1.0, 1.0]])

    def test_check_shape(self):
        system = system_from_dense([[1.0, 1.0, 1.0, 1.0]], [2.0])
        assert check_shape(system, None) == (2, 2)
        assert check_shape(system, (1, 4)) == (1, 4)
        with pytest.raises(ValueError):
            check_shape(system, (3, 2))
        six = system_from_dense([[1.0] * 6], [3.0])
        with pytest.raises(ValueError):
            check_shape(six, None)

    def test_default_start_is_the_clipped_zero_image(self):
        system = system_from_dense([[1.0, 1.0, 1.0, 1.0]], [2.0])
        start = as_start_image(None, system, None, BoxBounds(0.25, 1.0))
        npt.assert_array_equal(start.values, 0.25)
        assert (start.rows, start.cols) == (2, 2)


class TestSklearnProtocol:
    def test_get_params_round_trip(self):
        est = ART(epsilon=0.5, max_iterations=7)
        params = est.get_params()
        assert params["epsilon"] == 0.5
        assert params["max_iterations"] == 7
        est.set_params(epsilon=0.25)
        assert est.epsilon == 0.25

    def test_clone_drops_fitted_state(self, grid32_system):
        est = ART(epsilon=1.0).fit(grid32_system)
        fresh = clone(est)
        assert fresh.epsilon == 1.0
        assert not hasattr(fresh, "image_")

    def test_all_estimators_clone(self):
        for est in (ART(), SuperiorizedART(), ProjectedSubgradient()):
            dup = clone(est)
            assert dup.get_params() == est.get_params()


class TestART:
    def test_fit_attributes(self, grid32_system):
        est = ART(epsilon=1.0).fit(grid32_system)
        assert est.status_ == "converged"
        assert est.converged_
        assert est.image_shape_ == (32, 32)
        assert est.image_.shape == (1024,)
        assert est.n_iter_ == est.trace_.final().k
        assert est.result_.prox <= 1.0

    def test_dense_pair_input(self):
        a = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
        b = [0.3, 0.4, 0.7]
        est = ART(epsilon=1e-10, image_shape=(1, 2)).fit((a, b))
        npt.assert_allclose(est.image_, [0.3, 0.4], atol=1e-9)

    def test_fit_reconstruct_returns_the_image(self, grid32_system):
        est = ART(epsilon=2.0)
        values = est.fit_reconstruct(grid32_system)
        assert values is est.image_

    def test_explicit_start(self, grid32_system, grid32_phantom):
        est = ART(epsilon=1.0).fit(grid32_system, x0=grid32_phantom.values)
        # the data image is already feasible, so the run stops immediately
        assert est.n_iter_ == 0

    def test_exhaustion_status(self, grid32_system):
        est = ART(epsilon=1e-14, max_iterations=2).fit(grid32_system)
        assert est.status_ == "max_iterations"
        assert not est.converged_


class TestSuperiorizedART:
    def test_fit_attributes(self, grid32_system):
        est = SuperiorizedART(epsilon=1.0).fit(grid32_system)
        assert est.status_ == "converged"
        assert est.total_beta_ > 0.0
        assert est.result_.total_beta_drawn == est.total_beta_

    def test_beats_plain_art_on_tv(self, grid32_system):
        plain = ART(epsilon=1.0).fit(grid32_system)
        sup = SuperiorizedART(epsilon=1.0).fit(grid32_system)
        tv_plain = tv_value(ImageVector(plain.image_, 32, 32))
        tv_sup = tv_value(ImageVector(sup.image_, 32, 32))
        assert tv_sup < tv_plain

    def test_zero_perturbations_matches_art(self, grid32_system):
        plain = ART(epsilon=2.0).fit(grid32_system)
        sup = SuperiorizedART(epsilon=2.0, perturbations_per_sweep=0).fit(grid32_system)
        npt.assert_array_equal(sup.image_, plain.image_)


class TestProjectedSubgradient:
    def test_fit_attributes(self, grid32_system):
        est = ProjectedSubgradient(inner_tol_rel=1e-4).fit(grid32_system)
        assert est.status_ == "stopped"
        assert est.achieved_epsilon_ == est.trace_.final().prox
        assert est.n_iter_ == est.result_.iterations

    def test_image_is_inside_the_box(self, grid32_system):
        est = ProjectedSubgradient(inner_tol_rel=1e-4, max_iterations=20).fit(grid32_system)
        assert est.image_.min() >= 0.0 and est.image_.max() <= 1.0

    def test_shape_inference_error(self):
        a = np.ones((1, 6))
        with pytest.raises(ValueError):
            ProjectedSubgradient().fit((a, np.array([3.0])))
