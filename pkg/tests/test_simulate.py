"""Synthetic cohorts: exact inversion, censoring, covariate menu."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy import integrate

from src.errors import ConfigurationError, ModelViolationError
from src.simulate.generator import (
    cumulative_hazard,
    draw_censoring,
    draw_covariates,
    draw_event_time,
    simulate_cohort,
)
from src.simulate.specs import CensoringSpec, CovariateGenerator, ModelSpec, check_positivity
from src.survival.cohort import validate_cohort
from src.survival.paths import CovariatePath

NO_CENSORING = CensoringSpec(kind="exponential", rate=0.0)


class TestDrawEventTime:

    def test_exponential_inversion(self):
        spec = ModelSpec(family="cox", theta0=0.0, baseline=1.0, tau=10.0)
        t = draw_event_time(CovariatePath.constant(0.0), spec, np.exp(-1.0))
        assert t == pytest.approx(1.0, rel=1e-12)

    def test_switching_covariate(self):
        spec = ModelSpec(family="cox", theta0=np.log(2.0), baseline=1.0, tau=10.0)
        z = CovariatePath.from_steps([(0.0, 0.0), (1.0, 1.0)])
        assert draw_event_time(z, spec, np.exp(-2.0)) == pytest.approx(1.5, rel=1e-12)

    def test_additive_inversion(self):
        spec = ModelSpec(family="additive", theta0=0.5, baseline=1.0, tau=10.0)
        assert draw_event_time(CovariatePath.constant(1.0), spec, np.exp(-3.0)) == pytest.approx(2.0, rel=1e-12)

    def test_piecewise_baseline(self):
        spec = ModelSpec(family="cox", theta0=0.0, baseline=[(0.0, 0.5), (2.0, 2.0)], tau=10.0)
        # H(2) = 1, then slope 2
        assert draw_event_time(CovariatePath.constant(0.0), spec, np.exp(-3.0)) == pytest.approx(3.0)

    def test_survives_past_horizon(self):
        spec = ModelSpec(family="cox", theta0=0.0, baseline=0.1, tau=1.0)
        assert draw_event_time(CovariatePath.constant(0.0), spec, 0.5) == float("inf")

    def test_negative_additive_intensity(self):
        spec = ModelSpec(family="additive", theta0=-2.0, baseline=1.0, tau=5.0)
        with pytest.raises(ModelViolationError):
            draw_event_time(CovariatePath.constant(1.0), spec, 0.5)

    def test_u_outside_open_interval(self):
        spec = ModelSpec()
        with pytest.raises(ValueError):
            draw_event_time(CovariatePath.constant(0.0), spec, 1.0)

    def test_inversion_is_exact(self, rng):
        spec = ModelSpec(family="cox", theta0=[0.7, -0.4], baseline=[(0.0, 0.8), (1.5, 1.3)], tau=20.0)
        for _ in range(200):
            z = CovariatePath.from_steps([(0.0, rng.normal(size=2)), (rng.uniform(0.1, 3.0), rng.normal(size=2))])
            u = rng.uniform(1e-6, 1.0)
            t = draw_event_time(z, spec, u)
            if np.isfinite(t):
                assert cumulative_hazard(z, spec, t) == pytest.approx(-np.log(u), rel=1e-12)


class TestDrawCensoring:

    def test_exponential(self):
        spec = CensoringSpec(kind="exponential", rate=1.0, tau=10.0)
        assert draw_censoring(spec, np.exp(-1.0)) == pytest.approx(1.0)

    def test_administrative_cutoff(self):
        spec = CensoringSpec(kind="exponential", rate=1.0, tau=0.5)
        assert draw_censoring(spec, np.exp(-1.0)) == 0.5

    def test_uniform(self):
        assert draw_censoring(CensoringSpec(kind="uniform", upper=2.0), 0.5) == pytest.approx(1.0)

    def test_uniform_needs_upper_beyond_tau(self):
        with pytest.raises(ValidationError):
            CensoringSpec(kind="uniform", upper=2.0, tau=3.0)


class TestCovariates:

    def test_binary_levels(self, rng):
        gen = CovariateGenerator(kind="fixed-binary", d=3, p=0.5)
        path = draw_covariates(gen, rng, 5.0)
        assert path.n_segments == 1
        assert set(np.unique(path.values)) <= {0.0, 1.0}

    def test_truncated_gaussian_bounds(self, rng):
        gen = CovariateGenerator(kind="fixed-gaussian-truncated", d=2, lower=-1.0, upper=0.5)
        for _ in range(100):
            lo, hi = draw_covariates(gen, rng, 5.0).bounds()
            assert lo.min() >= -1.0 and hi.max() <= 0.5

    def test_switch_is_monotone_low_to_high(self, rng):
        gen = CovariateGenerator(kind="piecewise-switch", d=1, low=0.0, high=1.0, switch_rate=0.5)
        for _ in range(50):
            path = draw_covariates(gen, rng, 4.0)
            assert path.values[0, 0] == 0.0
            assert path.n_segments <= 2
            assert path.breakpoints[-1] < 4.0

    def test_positivity_check(self):
        gen = CovariateGenerator(kind="fixed-gaussian-truncated", d=1, lower=-2.0, upper=2.0)
        check_positivity(ModelSpec(family="additive", theta0=0.5, baseline=1.0), gen)
        with pytest.raises(ModelViolationError):
            check_positivity(ModelSpec(family="additive", theta0=0.6, baseline=1.0), gen)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            check_positivity(ModelSpec(theta0=[0.1, 0.2]), CovariateGenerator(d=1))


class TestSimulateCohort:

    def test_exponential_mean(self):
        model = ModelSpec(family="cox", theta0=0.0, baseline=1.0, tau=10.0)
        cohort = simulate_cohort(1000, model, NO_CENSORING, CovariateGenerator(), seed=1)
        assert 0.9 <= np.mean([s.y for s in cohort]) <= 1.1

    def test_empty_cohort_rejected(self):
        with pytest.raises(ConfigurationError):
            simulate_cohort(0, ModelSpec(), NO_CENSORING, CovariateGenerator(), seed=1)

    def test_deterministic(self):
        model = ModelSpec(theta0=0.3, tau=3.0)
        cens = CensoringSpec(rate=0.4)
        a = simulate_cohort(200, model, cens, CovariateGenerator(), seed=7)
        b = simulate_cohort(200, model, cens, CovariateGenerator(), seed=7)
        assert a == b

    def test_fully_observed_and_valid(self):
        model = ModelSpec(family="cox", theta0=[0.5, -0.5], tau=4.0)
        gen = CovariateGenerator(kind="piecewise-switch", d=2)
        cohort = simulate_cohort(300, model, CensoringSpec(kind="uniform", upper=8.0), gen, seed=3)
        assert validate_cohort(cohort) == []
        assert all(s.r == 1 and s.pi == 1.0 and s.observed for s in cohort)
        assert all(s.y <= 4.0 for s in cohort)

    def test_censored_at_horizon(self):
        model = ModelSpec(theta0=0.0, baseline=0.05, tau=1.0)
        cohort = simulate_cohort(200, model, NO_CENSORING, CovariateGenerator(), seed=4)
        late = [s for s in cohort if s.delta == 0]
        assert late and all(s.y == 1.0 for s in late)

    def test_event_fraction_matches_integral(self):
        # P(T <= min(C, tau)) = int_0^tau exp(-(1 + c) t) dt for T ~ Exp(1), C ~ Exp(c)
        model = ModelSpec(theta0=0.0, baseline=1.0, tau=2.0)
        c = 0.7
        oracle, _ = integrate.quad(lambda t: np.exp(-(1.0 + c) * t), 0.0, 2.0)
        n = 500
        cohort = simulate_cohort(n, model, CensoringSpec(rate=c), CovariateGenerator(), seed=9)
        band = 3.0 * np.sqrt(oracle * (1.0 - oracle) / n)
        assert abs(cohort.n_events / n - oracle) <= band

    def test_survivor_function(self):
        model = ModelSpec(family="cox", theta0=0.0, baseline=[(0.0, 0.5), (1.0, 1.5)], tau=20.0)
        n = 10_000
        cohort = simulate_cohort(n, model, NO_CENSORING, CovariateGenerator(), seed=12)
        times = np.array([s.y for s in cohort])
        z0 = CovariatePath.constant(0.0)
        for t in (0.5, 1.0, 2.0):
            s_true = np.exp(-cumulative_hazard(z0, model, t))
            band = 3.0 * np.sqrt(s_true * (1.0 - s_true) / n)
            assert abs(np.mean(times > t) - s_true) <= band

    def test_additive_null_matches_cox_null(self):
        cox = ModelSpec(family="cox", theta0=0.0, baseline=1.0, tau=10.0)
        add = ModelSpec(family="additive", theta0=0.0, baseline=1.0, tau=10.0)
        a = simulate_cohort(500, cox, NO_CENSORING, CovariateGenerator(), seed=5)
        b = simulate_cohort(500, add, NO_CENSORING, CovariateGenerator(), seed=5)
        assert_allclose([s.y for s in a], [s.y for s in b], rtol=1e-12)

    def test_strata_labels(self):
        cohort = simulate_cohort(50, ModelSpec(), NO_CENSORING, CovariateGenerator(), seed=1, strata_component=0)
        for s in cohort:
            assert s.z_star == ("high" if s.z.values[0, 0] >= 0.5 else "low")

    def test_positivity_violation_propagates(self):
        model = ModelSpec(family="additive", theta0=-2.0, baseline=1.0)
        with pytest.raises(ModelViolationError):
            simulate_cohort(10, model, NO_CENSORING, CovariateGenerator(), seed=1)
