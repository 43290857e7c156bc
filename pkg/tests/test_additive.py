"""Weighted additive hazards: closed form, score, jump-drift baseline, sandwich."""

from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import norm

from src.design.sampling import SamplingPlan, sample_subcohort
from src.design.weights import WeightScheme, build_weights
from src.errors import EmptyRiskSetError, SingularMatrixError
from src.estimators.additive import (
    additive_baseline,
    additive_sandwich,
    additive_score,
    eta_tilde,
    fit_additive,
    solve_closed_form,
)
from src.estimators.cox import eta_hat
from src.estimators.results import FitOptions
from src.simulate.generator import simulate_cohort
from src.simulate.specs import CensoringSpec, CovariateGenerator, ModelSpec
from src.survival.paths import CovariatePath
from tests.helpers import make_cohort, random_cohort


# ─── DIRECT ORACLES (Omega = W = 1) ────────────────────────

def _grid(cohort):
    cuts = {0.0}
    for s in cohort:
        cuts.add(s.y)
        cuts.update(float(b) for b in s.z.breakpoints if b < s.y)
    return np.array(sorted(cuts))


def direct_score(cohort, theta):
    """Estimating function evaluated interval by interval from the paths."""
    theta = np.asarray(theta, dtype=float)
    grid = _grid(cohort)
    total = np.zeros(cohort.d)
    for s in cohort:
        if s.delta == 1:
            total += s.z(s.y) - eta_tilde(cohort, s.y)
        for a, b in zip(grid[:-1], grid[1:]):
            if b > s.y:
                break
            mid = 0.5 * (a + b)
            z = s.z(mid)
            total -= (z - eta_tilde(cohort, mid)) * (theta @ z) * (b - a)
    return total / cohort.n


def full_data_reference(cohort):
    """Full-data closed form and sandwich for constant covariates, written out directly."""
    n, d = cohort.n, cohort.d
    z = np.array([s.z(0.0) for s in cohort])
    y = np.array([s.y for s in cohort])
    delta = np.array([s.delta for s in cohort])
    ys = np.r_[0.0, np.unique(y)]

    def risk_mean(t):
        at_risk = y >= t
        return z[at_risk].mean(axis=0)

    A = np.zeros((d, d))
    U = np.zeros(d)
    for i in range(n):
        for a, b in zip(ys[:-1], ys[1:]):
            if b > y[i]:
                break
            A += np.outer(z[i] - risk_mean(b), z[i]) * (b - a)
        if delta[i]:
            U += z[i] - risk_mean(y[i])
    A /= n
    U /= n
    theta = np.linalg.solve(A, U)

    events = np.unique(y[delta == 1])
    jumps = {t: np.sum((y == t) & (delta == 1)) / np.sum(y >= t) for t in events}
    psi = np.zeros((n, d))
    for i in range(n):
        if delta[i]:
            psi[i] += z[i] - risk_mean(y[i])
        for t in events:
            if t <= y[i]:
                psi[i] -= jumps[t] * (z[i] - risk_mean(t))
        for a, b in zip(ys[:-1], ys[1:]):
            if b > y[i]:
                break
            eta = risk_mean(b)
            psi[i] -= (theta @ z[i] - theta @ eta) * (z[i] - eta) * (b - a)
    B = psi.T @ psi / n
    a_inv = np.linalg.inv(A)
    return theta, A, a_inv @ B @ a_inv.T / n


# ─── TESTS ─────────────────────────────────────────────────

class TestEtaTilde:

    def test_two_at_risk(self):
        cohort = make_cohort([(2.0, 1, 0.0), (3.0, 0, 1.0)])
        assert eta_tilde(cohort, 1.0)[0] == pytest.approx(0.5)

    def test_singleton(self):
        cohort = make_cohort([(2.0, 1, 0.0), (3.0, 0, 1.7)])
        assert eta_tilde(cohort, 2.5)[0] == pytest.approx(1.7)

    def test_equals_cox_nuisance_at_zero(self, rng):
        cohort = random_cohort(rng, 20, d=2, switching=True)
        for t in rng.uniform(0.0, 4.0, size=10):
            if any(s.y >= t for s in cohort):
                assert_allclose(eta_tilde(cohort, t), eta_hat(cohort, [0.0, 0.0], t), atol=1e-12)

    def test_empty(self):
        cohort = make_cohort([(2.0, 1, 0.0)])
        with pytest.raises(EmptyRiskSetError):
            eta_tilde(cohort, 2.5)


class TestClosedForm:

    def test_hand_example(self):
        cohort = make_cohort([(1.0, 1, 1.0), (2.0, 1, 0.0)])
        sol = solve_closed_form(cohort)
        assert sol.A[0, 0] == pytest.approx(0.25)
        assert sol.U[0] == pytest.approx(0.25)
        assert sol.theta_hat[0] == pytest.approx(1.0)

    def test_identical_covariates_singular(self):
        cohort = make_cohort([(1.0, 1, 1.0), (2.0, 1, 1.0), (3.0, 0, 1.0)])
        with pytest.raises(SingularMatrixError):
            solve_closed_form(cohort)

    def test_root_of_score(self, rng):
        for trial in range(50):
            d = 1 + trial % 3
            cohort = random_cohort(rng, int(rng.integers(2 * d + 3, 101)), d=d, switching=trial % 2 == 0)
            theta = solve_closed_form(cohort).theta_hat
            assert np.max(np.abs(additive_score(cohort, theta))) <= 1e-10

    def test_matches_full_data_reference(self, rng):
        for _ in range(5):
            cohort = random_cohort(rng, 30, d=2)
            theta, A, _ = full_data_reference(cohort)
            sol = solve_closed_form(cohort)
            assert_allclose(sol.theta_hat, theta, rtol=0, atol=1e-12)
            assert_allclose(sol.A, A, rtol=0, atol=1e-12)

    def test_location_shift(self, rng):
        cohort = random_cohort(rng, 40, d=2, switching=True)
        shifted = cohort.with_subjects(
            replace(s, z=CovariatePath(s.z.breakpoints, s.z.values + np.array([5.0, -1.5]))) for s in cohort
        )
        assert_allclose(solve_closed_form(shifted).theta_hat, solve_closed_form(cohort).theta_hat, atol=1e-9)


class TestScore:

    def test_matches_direct_integration(self, rng):
        for _ in range(5):
            cohort = random_cohort(rng, 12, d=2, switching=True)
            theta = rng.normal(size=2)
            assert_allclose(additive_score(cohort, theta), direct_score(cohort, theta), rtol=0, atol=1e-12)

    def test_zero_theta_is_event_term(self, three_subjects):
        # (1/3)[(1 - 2/3) + (0 - 1/2)]
        assert additive_score(three_subjects, [0.0])[0] == pytest.approx(-1.0 / 18.0, abs=1e-15)

    def test_affine(self, rng):
        cohort = random_cohort(rng, 30, d=3, switching=True)
        theta = rng.normal(size=3)
        s0 = additive_score(cohort, np.zeros(3))
        lhs = additive_score(cohort, 2 * theta) - s0
        rhs = 2 * (additive_score(cohort, theta) - s0)
        assert_allclose(lhs, rhs, rtol=0, atol=1e-12)


class TestBaseline:

    def test_zero_theta_is_nelson_aalen(self, rng):
        cohort = random_cohort(rng, 25)
        base = additive_baseline(cohort, [0.0])
        times = sorted(s.y for s in cohort if s.delta == 1)
        expected = [1.0 / sum(1 for s in cohort if s.y >= t) for t in times]
        assert_allclose(base.times, times)
        assert_allclose(base.jumps, expected, atol=1e-14)
        assert_allclose(base.drift, 0.0)

    def test_zero_events(self):
        cohort = make_cohort([(1.0, 0, 0.0), (2.0, 0, 1.0)])
        base = additive_baseline(cohort, [0.0])
        assert base.times.size == 0
        assert base(1.5) == 0.0

    def test_drift_on_constant_nuisance(self, three_subjects):
        base = additive_baseline(three_subjects, [0.7])
        # nothing fails before t = 1 and eta~ = 2/3 there
        assert base(0.5) == pytest.approx(-0.7 * (2.0 / 3.0) * 0.5)
        assert base(1.0) == pytest.approx(1.0 / 3.0 - 0.7 * (2.0 / 3.0))

    def test_negative_increments_kept(self):
        cohort = make_cohort([(1.0, 1, 0.0), (4.0, 0, 1.0), (5.0, 1, 1.0)])
        base = additive_baseline(cohort, [2.0])
        assert base(4.5) < base(1.0)


class TestSandwich:

    def test_matches_full_data_reference(self, rng):
        for _ in range(3):
            cohort = random_cohort(rng, 30, d=2)
            theta, _, cov = full_data_reference(cohort)
            _, _, got = additive_sandwich(cohort, theta)
            assert_allclose(got, cov, rtol=0, atol=1e-10)

    def test_b_positive_semidefinite(self, rng):
        for _ in range(5):
            cohort = random_cohort(rng, 40, d=2, switching=True)
            theta = solve_closed_form(cohort).theta_hat
            A, B, cov = additive_sandwich(cohort, theta)
            assert np.linalg.eigvalsh(B).min() >= -1e-12
            assert_allclose(cov, cov.T, atol=1e-15)


class TestFitAdditive:

    @pytest.fixture
    def simulated(self):
        model = ModelSpec(family="additive", theta0=0.5, baseline=1.0, tau=3.0)
        return simulate_cohort(400, model, CensoringSpec(rate=0.5), CovariateGenerator(), seed=17)

    def test_result(self, simulated):
        fit = fit_additive(simulated, scheme="full-data")
        assert fit.model == "additive"
        assert fit.se[0] == pytest.approx(np.sqrt(fit.cov[0, 0]))
        payload = fit.to_dict()
        assert set(payload["baseline"]) == {"times", "jumps", "drift_grid", "drift"}
        assert abs(fit.theta_hat[0] - 0.5) < 5 * fit.se[0]

    def test_confidence_level_from_options(self, simulated):
        fit = fit_additive(simulated, FitOptions(confidence_level=0.8))
        lo, hi = fit.confidence_intervals()[0]
        half = norm.ppf(0.9) * fit.se[0]
        assert hi - lo == pytest.approx(2 * half)
        assert fit.to_dict()["confidence_level"] == 0.8

    def test_pi_one_bitwise_identity(self, simulated):
        sampled = sample_subcohort(simulated, SamplingPlan(pi=1.0))
        a = fit_additive(build_weights(sampled, WeightScheme(kind="ipw-kl")))
        b = fit_additive(build_weights(sampled, WeightScheme(kind="full-data")))
        assert np.array_equal(a.theta_hat, b.theta_hat)
        assert np.array_equal(a.cov, b.cov)

    def test_case_cohort_fit(self, simulated):
        weighted = build_weights(sample_subcohort(simulated, SamplingPlan(pi=0.4, seed=3)), WeightScheme(kind="ipw-kl"))
        fit = fit_additive(weighted, scheme="ipw-kl")
        assert fit.n == 400
        assert np.all(fit.se > 0.0)
