"""Covariate paths: evaluation, exact integration, combinators."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import MaskedCovariateError, PathDomainError
from src.survival.paths import (
    CovariatePath,
    merge_breakpoints,
    path_eval,
    path_eval_many,
    path_integrate,
    path_product,
    refine,
    simplify,
)


@pytest.fixture
def step():
    return CovariatePath.from_steps([(0.0, 1.0), (2.0, 2.0)])


class TestPathEval:

    def test_inside_first_segment(self, step):
        assert path_eval(step, 1.5)[0] == 1.0

    def test_right_continuous_at_breakpoint(self, step):
        assert path_eval(step, 2.0)[0] == 2.0

    def test_constant_extension(self):
        assert path_eval(CovariatePath.constant(3.0), 7.0)[0] == 3.0

    def test_negative_time_rejected(self, step):
        with pytest.raises(PathDomainError):
            path_eval(step, -0.1)

    def test_nan_time_rejected(self, step):
        with pytest.raises(PathDomainError):
            path_eval(step, float("nan"))

    def test_vector_values(self):
        path = CovariatePath.from_steps([(0.0, [1.0, -1.0]), (1.0, [0.5, 4.0])])
        assert_allclose(path(0.99), [1.0, -1.0])
        assert_allclose(path(1.0), [0.5, 4.0])
        assert path.dimension == 2

    def test_eval_many_matches_scalar(self, step):
        times = [0.0, 0.5, 2.0, 9.0]
        assert_allclose(path_eval_many(step, times)[:, 0], [path_eval(step, t)[0] for t in times])

    def test_masked_read_raises(self):
        with pytest.raises(MaskedCovariateError):
            path_eval(CovariatePath.masked_path(2), 1.0)


class TestConstruction:

    def test_first_breakpoint_must_be_zero(self):
        with pytest.raises(ValueError, match="First breakpoint"):
            CovariatePath(np.array([1.0]), np.array([[1.0]]))

    def test_breakpoints_strictly_increasing(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            CovariatePath(np.array([0.0, 1.0, 1.0]), np.array([1.0, 2.0, 3.0]))

    def test_values_must_match_breakpoints(self):
        with pytest.raises(ValueError, match="count"):
            CovariatePath(np.array([0.0, 1.0]), np.array([1.0]))

    def test_non_finite_values_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            CovariatePath.constant(np.inf)

    def test_immutable_arrays(self, step):
        with pytest.raises(ValueError):
            step.values[0, 0] = 5.0


class TestPathIntegrate:

    def test_hand_sum(self, step):
        assert path_integrate(step, 0.0, 3.0)[0] == pytest.approx(4.0)

    def test_empty_interval(self, step):
        assert_allclose(path_integrate(step, 1.7, 1.7), [0.0])

    def test_product_with_weight(self):
        out = path_integrate(CovariatePath.constant(1.0), 0.0, 1.0, CovariatePath.constant(2.0))
        assert out[0] == pytest.approx(2.0)

    def test_weight_with_own_breakpoints(self, step):
        weight = CovariatePath.from_steps([(0.0, 1.0), (1.0, 3.0)])
        # [0,1): 1*1, [1,2): 1*3, [2,3): 2*3
        assert path_integrate(step, 0.0, 3.0, weight)[0] == pytest.approx(1.0 + 3.0 + 6.0)

    def test_reversed_bounds(self, step):
        with pytest.raises(PathDomainError):
            path_integrate(step, 2.0, 1.0)

    def test_additivity(self, rng):
        path = CovariatePath.from_steps([(0.0, [0.3, -1.0]), (0.7, [2.0, 0.1]), (2.2, [-0.4, 5.0])])
        for _ in range(20):
            a, b, c = np.sort(rng.uniform(0.0, 4.0, size=3))
            whole = path_integrate(path, a, c)
            parts = path_integrate(path, a, b) + path_integrate(path, b, c)
            assert_allclose(whole, parts, rtol=0, atol=1e-13)


class TestCombinators:

    def test_refine_keeps_values(self, step, rng):
        fine = refine(step, [0.5, 1.0, 3.0])
        assert fine.n_segments == 5
        for t in rng.uniform(0.0, 5.0, size=30):
            assert_allclose(path_eval(fine, t), path_eval(step, t))
        assert fine == refine(step, [0.5, 1.0, 3.0])

    def test_simplify_undoes_refine(self, step):
        assert simplify(refine(step, [0.5, 3.0])) == step

    def test_merge_breakpoints(self, step):
        other = CovariatePath.from_steps([(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)])
        assert_allclose(merge_breakpoints(step, other), [0.0, 1.0, 2.0])

    def test_product_broadcasts_scalar(self):
        z = CovariatePath.from_steps([(0.0, [1.0, 2.0]), (1.0, [3.0, 4.0])])
        w = CovariatePath.from_steps([(0.0, 2.0), (0.5, 0.0)])
        prod = path_product(z, w)
        assert_allclose(prod(0.25), [2.0, 4.0])
        assert_allclose(prod(0.75), [0.0, 0.0])
        assert_allclose(prod(1.5), [0.0, 0.0])

    def test_product_dimension_mismatch(self):
        a = CovariatePath.constant([1.0, 2.0])
        b = CovariatePath.constant([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            path_product(a, b)

    def test_total_variation(self, step):
        assert_allclose(step.total_variation(), [1.0])
        lo, hi = step.bounds()
        assert lo[0] == 1.0 and hi[0] == 2.0
