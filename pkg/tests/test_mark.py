import math

import numpy as np
import pytest

from markedpp.grid import Domain, DomainGrid, Field
from markedpp.intensity import CovariateStack, IntensityParams, intensity_at, intensity_field
from markedpp.mark import (IntensityLink, MarkedPattern, MarkParams,
                           build_mark_covariates, effective_mark_matrix,
                           log_lik_mark, mark_logits, mark_mse, simulate_marks,
                           success_probs)

from oracles import naive_bernoulli_loglik


class TestIntensityLink:
    def test_modes_validate(self):
        with pytest.raises(ValueError):
            IntensityLink("weird")

    def test_max_normalized_in_unit_interval(self, coord_covs):
        params = IntensityParams(1.0, np.array([2.0, 1.0]), scale=100.0)
        field = intensity_field(params, coord_covs)
        lam = field.values.ravel()
        v = IntensityLink("max_normalized").values(lam, field)
        assert v.max() == pytest.approx(1.0)
        assert v.min() > 0.0

    def test_z_scored_standardizes_cells(self, coord_covs):
        params = IntensityParams(2.0, np.array([2.0, 1.0]), scale=100.0)
        field = intensity_field(params, coord_covs)
        v = IntensityLink("z_scored").values(field.values.ravel(), field)
        assert v.mean() == pytest.approx(0.0, abs=1e-12)
        assert v.std() == pytest.approx(1.0, rel=1e-12)

    def test_raw_is_identity(self, coord_covs):
        params = IntensityParams(1.0, np.array([2.0, 1.0]), scale=100.0)
        field = intensity_field(params, coord_covs)
        lam = np.array([3.0, 4.0])
        assert np.array_equal(IntensityLink("raw").values(lam, field), lam)


class TestTheta:
    def test_all_zero_coefficients(self):
        theta = success_probs(np.array([2.0]), np.zeros((1, 0)), MarkParams())
        assert theta[0] == pytest.approx(0.5)

    def test_closed_form_logistic(self):
        # logit = 0.5 * 1 + 0.5 = 1.0
        params = MarkParams(xi=0.5, alpha=np.array([0.5]))
        theta = success_probs(np.array([1.0]), np.ones((1, 1)), params)
        assert theta[0] == pytest.approx(1.0 / (1.0 + math.exp(-1.0)), rel=1e-12)
        assert theta[0] == pytest.approx(0.7311, abs=5e-5)

    def test_monotone_in_link_value_for_positive_xi(self):
        params = MarkParams(xi=1.5, alpha=np.array([0.3]))
        v = np.linspace(0, 1, 25)
        theta = success_probs(v, np.ones((25, 1)), params)
        assert np.all(np.diff(theta) > 0)

    def test_link_scaled_column(self):
        params = MarkParams(xi=0.0, alpha=np.array([2.0]))
        v = np.array([0.25, 0.5])
        z = np.ones((2, 1))
        t = mark_logits(v, z, params, link_scaled=(True,))
        assert t == pytest.approx([0.5, 1.0])


class TestLogLikMark:
    def test_all_half(self):
        n = 17
        ll = log_lik_mark(np.ones(n), np.zeros(n), np.zeros((n, 0)), MarkParams())
        assert ll == pytest.approx(-n * math.log(2.0), rel=1e-12)

    def test_empty(self):
        ll = log_lik_mark(np.zeros(0), np.zeros(0), np.zeros((0, 0)), MarkParams())
        assert ll == 0.0

    def test_single_point_logit_two(self):
        params = MarkParams(xi=2.0)
        ll = log_lik_mark(np.array([1.0]), np.array([1.0]),
                          np.zeros((1, 0)), params)
        assert ll == pytest.approx(math.log(1 / (1 + math.exp(-2.0))), rel=1e-12)
        assert ll == pytest.approx(-0.1269, abs=5e-5)

    def test_matches_naive_formula(self):
        rng = np.random.default_rng(8)
        n = 200
        v = rng.random(n)
        z = np.column_stack([np.ones(n), rng.standard_normal(n)])
        params = MarkParams(xi=1.2, alpha=np.array([-0.4, 2.0]))
        marks = rng.integers(0, 2, n).astype(float)
        logits = mark_logits(v, z, params)
        assert np.max(np.abs(logits)) <= 20
        ll = log_lik_mark(marks, v, z, params)
        assert ll == pytest.approx(naive_bernoulli_loglik(marks, logits), abs=1e-10)

    def test_stable_at_extreme_logits(self):
        params = MarkParams(xi=1.0)
        v = np.array([700.0, -700.0])
        marks = np.array([1.0, 0.0])
        ll = log_lik_mark(marks, v, np.zeros((2, 0)), params)
        assert math.isfinite(ll)
        assert ll == pytest.approx(0.0, abs=1e-300)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            log_lik_mark(np.ones(3), np.ones(2), np.zeros((2, 0)), MarkParams())


class TestSimulateMarks:
    def test_saturated_probability(self):
        params = MarkParams(xi=1.0)
        v = np.full(50, 1e4)
        marks = simulate_marks(v, np.zeros((50, 0)), params, rng=0)
        assert marks.tolist() == [1] * 50

    def test_fair_coin_rate(self):
        marks = simulate_marks(np.zeros(10_000), np.zeros((10_000, 0)),
                               MarkParams(), rng=21)
        assert marks.mean() == pytest.approx(0.5, abs=0.015)

    def test_rate_converges_to_mean_theta(self):
        rng = np.random.default_rng(4)
        n = 10_000
        v = rng.random(n)
        z = np.column_stack([np.ones(n), rng.standard_normal(n)])
        params = MarkParams(xi=0.5, alpha=np.array([0.5, 0.8]))
        theta = success_probs(v, z, params)
        marks = simulate_marks(v, z, params, rng=17)
        se = math.sqrt(theta.var() / n + (theta * (1 - theta)).mean() / n)
        assert marks.mean() == pytest.approx(theta.mean(), abs=4 * se)

    def test_design_mark_rate_band(self):
        # the simulation design's replicate-average mark rate band
        from conftest import make_design_dataset

        rates = [make_design_dataset(seed=s, n_grid=50)["pattern"].marks.mean()
                 for s in range(12)]
        assert 0.55 < np.mean(rates) < 0.78


class TestBuildMarkCovariates:
    def pattern(self):
        n = 6
        locs = np.column_stack([np.linspace(5, 45, n), np.linspace(2, 30, n)])
        meta = {
            "shot_type": np.array([2, 3, 2, 3, 3, 2], dtype=float),
            "distance": np.array([5.0, 24.0, 10.0, 23.0, 25.0, 1.0]),
            "period": np.array([1, 2, 3, 4, 5, 1], dtype=float),
            "seconds_left": np.array([600.0, 30.0, 100.0, 5.0, 700.0, 0.0]),
            "opp_playoff": np.array([0, 1, 1, 0, 1, 0], dtype=float),
        }
        return MarkedPattern(locs, np.zeros(n), meta=meta)

    def test_intercept_only(self):
        z, labels, scaled = build_mark_covariates(self.pattern(), ("intercept",))
        assert labels == ("intercept",)
        assert scaled == (False,)
        assert np.all(z == 1.0)

    def test_full_assembly_order(self):
        z, labels, scaled = build_mark_covariates(self.pattern())
        assert labels == ("intercept", "intensity_x_3pt", "distance",
                          "seconds_left", "period_2", "period_3", "period_4",
                          "period_5", "opp_playoff")
        assert scaled == (False, True) + (False,) * 7

    def test_two_point_shot_has_zero_interaction(self):
        z, labels, _ = build_mark_covariates(self.pattern())
        col = z[:, labels.index("intensity_x_3pt")]
        assert col.tolist() == [0.0, 1.0, 0.0, 1.0, 1.0, 0.0]

    def test_period_dummies_one_hot(self):
        z, labels, _ = build_mark_covariates(self.pattern())
        period3 = z[2, [labels.index(f"period_{k}") for k in range(2, 6)]]
        assert period3.tolist() == [0.0, 1.0, 0.0, 0.0]
        period1 = z[0, [labels.index(f"period_{k}") for k in range(2, 6)]]
        assert period1.tolist() == [0.0, 0.0, 0.0, 0.0]

    def test_fixed_link_values_bake_in(self):
        v = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
        z, labels, scaled = build_mark_covariates(
            self.pattern(), ("intercept", "intensity_x_3pt"), link_vals=v)
        col = z[:, labels.index("intensity_x_3pt")]
        assert not any(scaled)
        assert col == pytest.approx([0.0, 0.2, 0.0, 0.4, 0.5, 0.0])

    def test_missing_meta_field(self):
        pat = MarkedPattern(np.zeros((2, 2)), np.zeros(2), meta={})
        with pytest.raises(ValueError, match="shot_type"):
            build_mark_covariates(pat, ("intercept", "intensity_x_3pt"))

    def test_effective_matrix(self):
        z = np.array([[1.0, 1.0], [1.0, 0.0]])
        out = effective_mark_matrix(z, (False, True), np.array([0.5, 0.25]))
        assert out.tolist() == [[1.0, 0.5], [1.0, 0.0]]


class TestMarkMse:
    def test_perfect_fit(self):
        assert mark_mse([1, 0, 1], [1.0, 0.0, 1.0]) == 0.0

    def test_coin_flip_probabilities(self):
        m = np.array([1, 0, 1, 0])
        assert mark_mse(m, np.full(4, 0.5)) == pytest.approx(0.25)

    def test_hand_arithmetic(self):
        assert mark_mse([1, 0], [0.8, 0.3]) == pytest.approx(0.065)

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            mark_mse([], [])
