import io
import math

import numpy as np
import pytest
from scipy import stats

from markedpp.grid import Domain, DomainGrid
from markedpp.intensity import CovariateStack, IntensityParams, simulate_nhpp
from markedpp.joint import PriorSpec
from markedpp.mark import MarkedPattern
from markedpp.mcmc import ChainConfig, run_chain, summarize
from markedpp.simstudy import (SimDesign, aggregate, format_report,
                               report_from_csv, report_to_csv, run_design,
                               run_replicate)


def tiny_design(**overrides):
    base = dict(n_replicates=2, n_iter=600, n_burnin=200, thin=2,
                master_seed=5, n_x=30, n_y=30)
    base.update(overrides)
    return SimDesign(**base)


class TestDesign:
    def test_defaults_match_published_design(self):
        d = SimDesign()
        assert d.beta == (2.0, 1.0)
        assert d.xi == 0.5
        assert d.alpha0 == 0.5
        assert d.alpha2 == 1.0
        assert d.lambda0 in (0.5, 1.0)
        assert d.scale == 100.0
        assert (d.n_x, d.n_y) == (100, 100)
        assert d.n_replicates == 200
        assert (d.n_iter, d.n_burnin) == (20_000, 10_000)

    def test_desk_preset(self):
        d = SimDesign.desk_scale()
        assert d.n_replicates == 50
        assert (d.n_iter, d.n_burnin) == (8_000, 4_000)

    def test_z2_kind_validated(self):
        with pytest.raises(ValueError):
            SimDesign(z2_kind="poisson")


class TestRunDesign:
    def test_zero_replicates_empty_report(self):
        report = run_design(tiny_design(n_replicates=0))
        assert report.n_ok == 0
        assert all(math.isnan(v) for v in report.bias.values())
        assert report.mark_rates == []

    def test_smoke_aggregates(self):
        report = run_design(tiny_design())
        assert report.n_ok == 2
        assert set(report.parameters) == {
            "lambda0", "beta_x", "beta_y", "xi", "alpha_intercept",
            "alpha_z1", "alpha_z2"}
        for name in report.parameters:
            assert math.isfinite(report.bias[name])
            assert report.coverage[name] in (0.0, 0.5, 1.0)
        assert len(report.mark_rates) == 2

    def test_replicates_deterministic_and_order_free(self):
        design = tiny_design()
        records = [run_replicate(design, i) for i in range(2)]
        again = [run_replicate(design, i) for i in (1, 0)]
        rep_a = aggregate(design, records)
        rep_b = aggregate(design, list(reversed(again)))
        assert rep_a.bias == rep_b.bias
        assert rep_a.sd == rep_b.sd
        assert rep_a.coverage == rep_b.coverage

    def test_bernoulli_z2_variant(self):
        report = run_design(tiny_design(z2_kind="bernoulli", n_replicates=1))
        assert report.n_ok == 1

    def test_failed_replicate_recorded(self):
        # a degenerate domain makes every replicate raise inside the worker
        design = tiny_design(n_replicates=1, domain=(1.0, 1.0, 0.0, 1.0))
        report = run_design(design)
        assert report.n_failed == 1
        assert report.n_ok == 0
        assert any("failed" in w for w in report.warnings)


class TestConjugateCoverageOracle:
    def test_quantile_interval_coverage(self):
        # homogeneous Poisson with a conjugate Gamma posterior: the
        # sampler's 95% quantile intervals must cover the truth at
        # roughly the nominal rate
        lam_true = 50.0
        grid = DomainGrid(Domain(-1, 1, -1, 1), 25, 25)
        covs = CovariateStack.empty(grid)
        prior = PriorSpec(a=0.01, b=0.01)
        hits = 0
        n_reps = 100
        for rep in range(n_reps):
            seeds = np.random.SeedSequence([99, rep])
            pts = simulate_nhpp(IntensityParams(lam_true), covs,
                                np.random.default_rng(seeds))
            pattern = MarkedPattern(pts, np.zeros(len(pts)))
            cfg = ChainConfig(n_iter=2400, n_burnin=800, thin=1,
                              seed=int(seeds.generate_state(2)[1]))
            draws = run_chain(pattern, covs, prior, cfg, xi_enabled=False)
            row = summarize(draws, "quantile95").row("lambda0")
            hits += row["ci_low"] <= lam_true <= row["ci_high"]
        assert 0.89 <= hits / n_reps <= 0.99

    def test_interval_agrees_with_exact_gamma_quantiles(self):
        grid = DomainGrid(Domain(-1, 1, -1, 1), 25, 25)
        covs = CovariateStack.empty(grid)
        prior = PriorSpec(a=0.01, b=0.01)
        pts = simulate_nhpp(IntensityParams(50.0), covs, rng=1)
        pattern = MarkedPattern(pts, np.zeros(len(pts)))
        cfg = ChainConfig(n_iter=20_000, n_burnin=4_000, thin=4, seed=2)
        draws = run_chain(pattern, covs, prior, cfg, xi_enabled=False)
        row = summarize(draws, "quantile95").row("lambda0")
        exact = stats.gamma.ppf([0.025, 0.975], a=prior.a + len(pts),
                                scale=1.0 / (prior.b + 4.0))
        assert row["ci_low"] == pytest.approx(exact[0], rel=0.02)
        assert row["ci_high"] == pytest.approx(exact[1], rel=0.02)


@pytest.fixture(scope="module")
def report():
    return run_design(tiny_design())


class TestReportFormats:

    def test_text_table_column_order(self, report):
        text = format_report(report)
        header = [line for line in text.splitlines() if "bias" in line][0]
        cols = header.split()
        assert cols == ["parameter", "bias", "sd", "sd_hat", "cr"]

    def test_csv_round_trip_at_four_decimals(self, report, tmp_path):
        path = tmp_path / "recovery.csv"
        report_to_csv(report, path)
        rows = report_from_csv(path)
        assert [r["parameter"] for r in rows] == list(report.parameters)
        for r in rows:
            name = r["parameter"]
            assert r["bias"] == pytest.approx(report.bias[name], abs=5.1e-5)
            assert r["cr"] == pytest.approx(report.coverage[name], abs=5.1e-5)

    def test_single_cell_report_renders(self, report):
        text = format_report(report)
        table_rows = [ln for ln in text.splitlines()
                      if ln.startswith(tuple(report.parameters))]
        assert len(table_rows) == len(report.parameters)
        assert "design:" in text.splitlines()[0]
