"""Tests for scenario simulation and the benchmark runner."""

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from cutpoint_lasso.binarize import design_at_thresholds
from cutpoint_lasso.config_manager import CvConfig, GridConfig
from cutpoint_lasso.cox_core import CoxOutcome, univariate_newton
from cutpoint_lasso.errors import InvalidConfig, NumericalError
from cutpoint_lasso.pipelines import CutpointReport, FeatureCuts
from cutpoint_lasso.simgen import (
    BENCHMARK_COLUMNS,
    BenchmarkReport,
    ScenarioConfig,
    calibrate_censoring,
    expected_censoring,
    run_benchmark,
    simulate,
    true_model_benchmark,
    write_benchmark,
)
from cutpoint_lasso.solver import fit

FAST_GRID = GridConfig(bins_per_feature=6)
FAST_CV = CvConfig(n_folds=3, n_lambdas=8)


class TestScenarioConfig:
    """Tests for scenario parameters and validation."""

    def test_scenario_defaults(self):
        """Test predictor counts and active fractions per scenario."""
        assert ScenarioConfig.for_scenario(1, 100).p == 2
        two = ScenarioConfig.for_scenario(2, 100)
        assert two.p == 20 and two.n_active == 4
        four = ScenarioConfig.for_scenario(4, 100)
        assert four.p == 2 and four.n_active == 2

    def test_cut_region_midpoints(self):
        """Test that scenario 3 reports ramp midpoints as its true cuts."""
        cfg = ScenarioConfig.for_scenario(3, 100)
        assert cfg.true_cuts == pytest.approx((0.325, 0.70))

    @pytest.mark.parametrize(
        "overrides",
        [
            {"scenario": 5},
            {"n": 1},
            {"true_cuts": (0.7, 0.3)},
            {"true_cuts": (0.0, 0.5)},
            {"effect_sizes": (0.0, 1.0)},
            {"sparsity": 0.0},
            {"censor_target": 1.0},
            {"baseline_rate": 0.0},
        ],
    )
    def test_invalid(self, overrides):
        """Test that malformed scenario parameters raise InvalidConfig."""
        params = {"scenario": 1, "n": 100, "p": 2}
        params.update(overrides)
        with pytest.raises(InvalidConfig):
            ScenarioConfig(**params)

    def test_step_function(self):
        """Test the step log-hazard at and around the default cuts."""
        cfg = ScenarioConfig.for_scenario(1, 10)
        values = cfg.log_hazard_component(np.array([0.1, 0.3, 0.31, 0.7, 0.9]))
        np.testing.assert_array_equal(values, [0.0, 0.0, 1.0, 1.0, 2.0])

    def test_ramps(self):
        """Test the piecewise-linear scenario 3 log-hazard."""
        cfg = ScenarioConfig.for_scenario(3, 10)
        values = cfg.log_hazard_component(np.array([0.1, 0.325, 0.5, 0.7, 0.9]))
        np.testing.assert_allclose(values, [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_dict_round_trip(self):
        """Test that configs survive to_dict/from_dict, as stored in manifests."""
        cfg = ScenarioConfig.for_scenario(3, 50, seed=9)
        assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


class TestSimulate:
    """Tests for data generation."""

    def test_deterministic(self):
        """Test that the same seed and replicate give identical arrays."""
        cfg = ScenarioConfig.for_scenario(1, 200, seed=4)
        a, b = simulate(cfg, 3), simulate(cfg, 3)
        np.testing.assert_array_equal(a.dataset.features, b.dataset.features)
        np.testing.assert_array_equal(a.dataset.times, b.dataset.times)
        np.testing.assert_array_equal(a.dataset.events, b.dataset.events)

    def test_replicates_differ(self):
        """Test that replicates draw independent data."""
        cfg = ScenarioConfig.for_scenario(1, 50, seed=4)
        assert not np.array_equal(simulate(cfg, 0).dataset.times, simulate(cfg, 1).dataset.times)

    def test_truth_and_active_features(self):
        """Test active feature names and their recorded cut-points."""
        sim = simulate(ScenarioConfig.for_scenario(2, 100, seed=1))
        assert sim.active == ("x1", "x2", "x3", "x4")
        assert sim.true_cuts == {name: [0.3, 0.7] for name in sim.active}
        np.testing.assert_allclose(sim.true_log_hazard(sim.dataset.features), sim.log_hazard)

    def test_censoring_near_target(self):
        """Test that the realized censored fraction tracks the calibrated target."""
        sim = simulate(ScenarioConfig.for_scenario(1, 2000, seed=2))
        assert abs(sim.censored_fraction - 0.30) < 0.04

    def test_no_censoring(self):
        """Test that a zero target yields events for every subject."""
        sim = simulate(ScenarioConfig.for_scenario(1, 100, seed=3, censor_target=0.0))
        assert np.all(sim.dataset.events == 1)
        assert np.isinf(sim.censoring_bound)

    def test_event_times_exponential(self):
        """Test that rate-scaled event times follow Exp(1) (KS at alpha 0.01)."""
        cfg = ScenarioConfig.for_scenario(1, 5000, seed=5, censor_target=0.0)
        sim = simulate(cfg)
        scaled = sim.dataset.times * cfg.baseline_rate * np.exp(sim.log_hazard)
        assert stats.kstest(scaled, "expon").pvalue > 0.01

    def test_calibration_solves_target(self):
        """Test that the calibrated bound reproduces the expected fraction."""
        rates = np.array([0.05, 0.1, 0.3])
        bound = calibrate_censoring(rates, 0.25)
        assert expected_censoring(bound, rates) == pytest.approx(0.25, abs=1e-9)

    def test_null_slope_interval_covers_zero(self):
        """Test that a 95% Wald interval for the slope covers 0 on about 95% of null datasets."""
        covered = 0
        for seed in range(100):
            sim = simulate(ScenarioConfig.for_scenario(1, 300, seed=seed, effect_sizes=(0.0, 0.0, 0.0)))
            outcome = CoxOutcome.from_dataset(sim.dataset)
            result = univariate_newton(sim.dataset.features[:, 0], outcome)
            se = 1.0 / np.sqrt(outcome.n * result.information)
            covered += abs(result.slope) <= 1.96 * se
        assert covered >= 88

    def test_hazard_ratio_across_upper_cut(self):
        """Test that the fitted hazard ratio across 0.7 approximates exp(1) within 15%."""
        sim = simulate(ScenarioConfig.for_scenario(1, 4000, seed=9))
        design = design_at_thresholds(sim.dataset, sim.true_cuts)
        result = fit(design, CoxOutcome.from_dataset(sim.dataset), 0.0)
        upper = [k for k, m in enumerate(design.column_meta) if m.feature_name == "x1" and m.threshold == 0.7]
        assert np.exp(result.beta[upper[0]]) == pytest.approx(np.e, rel=0.15)


class TestTrueModel:
    """Tests for the oracle benchmark."""

    def test_oracle_slope_positive(self):
        """Test that the true log-hazard as a covariate gets a positive slope near 1."""
        sim = simulate(ScenarioConfig.for_scenario(1, 800, seed=6))
        result = true_model_benchmark(sim)
        assert result.fit.beta[0] == pytest.approx(1.0, abs=0.25)
        assert result.bundle.c_index > 0.6


class TestBenchmark:
    """Tests for the benchmark runner and its outputs."""

    def test_long_format_rows(self):
        """Test one row per replicate, method and metric, with a zero sd for one replicate."""
        cfg = ScenarioConfig.for_scenario(1, 150, seed=3)
        report = run_benchmark([cfg], methods=["bini"], replicates=1, grid_config=FAST_GRID, cv_config=FAST_CV)
        assert list(report.records.columns) == BENCHMARK_COLUMNS
        assert set(report.records["method"]) == {"true", "bini"}
        assert len(report.records) == 3 + 7
        summary = report.aggregate()
        assert (summary["sd"] == 0).all()
        assert (summary["count"] <= 1).all()

    def test_output_is_deterministic(self, tmp_path):
        """Test that two runs write byte-identical metric files."""
        cfg = ScenarioConfig.for_scenario(1, 120, seed=8)
        for name in ("a", "b"):
            run_benchmark([cfg], methods=["bini"], replicates=2, output_dir=tmp_path / name,
                          grid_config=FAST_GRID, cv_config=FAST_CV)
        for filename in ("benchmark_scenario1.csv", "summary.csv"):
            assert (tmp_path / "a" / filename).read_bytes() == (tmp_path / "b" / filename).read_bytes()
        assert (tmp_path / "a" / "timing_scenario1.csv").exists()

    def test_failures_recorded(self, tmp_path, monkeypatch):
        """Test that an estimator failure is logged to failures.csv instead of aborting."""

        def broken(*args, **kwargs):
            raise NumericalError("solver blew up")

        monkeypatch.setattr("cutpoint_lasso.simgen.fit_binilasso", broken)
        cfg = ScenarioConfig.for_scenario(1, 80, seed=1)
        report = run_benchmark([cfg], methods=["bini"], replicates=2, output_dir=tmp_path,
                               grid_config=FAST_GRID, cv_config=FAST_CV)
        assert len(report.failures) == 2
        assert set(report.records["method"]) == {"true"}
        failures = pd.read_csv(tmp_path / "failures.csv")
        assert failures["error"].str.contains("solver blew up").all()

    def test_scenario_four_defaults_to_two_cuts(self, monkeypatch):
        """Test that scenario 4 runs the one-step procedure with m=2 on two active features."""
        seen = []

        def fake_one_step(ds, cfg, grid_config, cv_config):
            seen.append((cfg, ds.p))
            return CutpointReport(cfg.method, 0.1, [FeatureCuts("x1", [0.3, 0.7], [1.0, 1.0])])

        monkeypatch.setattr("cutpoint_lasso.simgen.limited_one_step", fake_one_step)
        cfg = ScenarioConfig.for_scenario(4, 150, seed=2)
        report = run_benchmark([cfg], methods=["bini"], replicates=1, grid_config=FAST_GRID, cv_config=FAST_CV)
        assert seen
        limit, p = seen[0]
        assert limit.m == 2 and limit.mode == "one_step" and p == 2
        row = report.records[(report.records["method"] == "bini") & (report.records["metric"] == "n_cutpoints")]
        assert row["value"].tolist() == [2.0]

    def test_invalid_replicates(self):
        """Test that zero replicates is rejected."""
        with pytest.raises(InvalidConfig):
            run_benchmark([ScenarioConfig.for_scenario(1, 50)], replicates=0)

    def test_write_empty_failures_skipped(self, tmp_path):
        """Test that failures.csv is written only when something failed."""
        report = BenchmarkReport(
            records=pd.DataFrame(
                [{"scenario": 1, "method": "bini", "replicate": 0, "n": 10, "p": 2, "metric": "aic", "value": 1.0,
                  "seed": 0}],
                columns=BENCHMARK_COLUMNS,
            ),
            timing=pd.DataFrame(columns=["scenario", "method", "replicate", "n", "p", "seconds"]),
        )
        written = write_benchmark(report, tmp_path)
        assert not (tmp_path / "failures.csv").exists()
        assert tmp_path / "summary.csv" in written


def _values(report: BenchmarkReport, method: str, metric: str) -> np.ndarray:
    rows = report.records[(report.records["method"] == method) & (report.records["metric"] == metric)]
    return rows["value"].to_numpy(dtype=float)


@pytest.mark.slow
@pytest.mark.timeout(1800)
class TestRecovery:
    """Scaled-down recovery experiments on the simulation scenarios."""

    GRID = GridConfig(bins_per_feature=20)
    CV = CvConfig(n_folds=5, n_lambdas=30)

    def test_scenario_one_cuts_recovered(self):
        """Test that biniLasso finds both cut-points within two grid steps at n=600."""
        cfg = ScenarioConfig.for_scenario(1, 600, seed=21)
        report = run_benchmark([cfg], methods=["bini"], replicates=20, grid_config=self.GRID, cv_config=self.CV)
        assert not report.failures
        assert np.nanmean(_values(report, "bini", "mean_abs_bias")) <= 2.0 / self.GRID.bins_per_feature
        assert np.mean(_values(report, "bini", "n_missed") == 0) >= 0.8

    def test_scenario_three_refit_close_to_truth(self):
        """Test that the categorized refit IBS is within 10% of the true-model IBS on ramp hazards."""
        cfg = ScenarioConfig.for_scenario(3, 1000, seed=22)
        report = run_benchmark([cfg], methods=["bini"], replicates=10, grid_config=self.GRID, cv_config=self.CV)
        truth = _values(report, "true", "ibs").mean()
        assert abs(_values(report, "bini", "ibs").mean() - truth) <= 0.1 * truth
