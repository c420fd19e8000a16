"""Tests for univariate fits, leave-one-out predictors and the non-negative lasso stage."""

import numpy as np
import pytest
from scipy import sparse

from cutpoint_lasso.binarize import build_cut_grid, cumulative_binarize
from cutpoint_lasso.config_manager import CvConfig
from cutpoint_lasso.cox_core import CoxOutcome, univariate_newton
from cutpoint_lasso.errors import InputError
from cutpoint_lasso.unilasso import LooMethod, fit_minilasso, loo_predictors, minilasso_path, univariate_fits


def _grid_slope(x, outcome, lo=-5.0, hi=5.0, step=1e-4):
    """Minimizer of the univariate nll over a fine grid."""
    slopes = np.arange(lo, hi + step / 2, step)
    eta = np.outer(slopes, x)[:, outcome.order]
    shift = eta.max(axis=1, keepdims=True)
    tail = np.cumsum(np.exp(eta - shift)[:, ::-1], axis=1)[:, ::-1]
    values = -(eta @ outcome.sorted_events) + (np.log(tail[:, outcome.first]) + shift) @ outcome.deaths
    return float(slopes[np.argmin(values)])


@pytest.fixture
def four_events():
    return CoxOutcome.from_arrays([1.0, 2.0, 3.0, 4.0], [1, 1, 1, 1])


class TestUnivariateFits:
    """Tests for per-column univariate fits."""

    def test_zero_column_degenerate(self, four_events):
        """Test that an all-zero indicator is flagged with slope 0."""
        fits = univariate_fits(np.zeros((4, 1)), four_events)
        assert fits.degenerate[0]
        assert fits.slopes[0] == 0.0
        assert not fits.usable[0]

    def test_monotone_likelihood_degenerate(self, four_events):
        """Test that an indicator whose subjects all fail first has no finite slope."""
        fits = univariate_fits(np.array([[1.0], [1.0], [0.0], [0.0]]), four_events)
        assert fits.degenerate[0]

    def test_matches_grid_search(self, four_events):
        """Test the slope of (1,0,1,0) against a 1e-4 grid over [-5, 5]."""
        x = np.array([1.0, 0.0, 1.0, 0.0])
        fits = univariate_fits(x.reshape(-1, 1), four_events)
        assert fits.usable[0]
        assert fits.slopes[0] == pytest.approx(_grid_slope(x, four_events), abs=1e-3)

    def test_negated_indicator_flips_sign(self, four_events):
        """Test that swapping the indicator's zeros and ones flips the slope's sign."""
        x = np.array([1.0, 0.0, 1.0, 0.0])
        fits = univariate_fits(np.column_stack([x, 1.0 - x]), four_events)
        assert np.sign(fits.slopes[0]) == -np.sign(fits.slopes[1])
        assert fits.slopes[1] == pytest.approx(_grid_slope(1.0 - x, four_events), abs=1e-3)

    def test_event_counts(self, four_events):
        """Test events with and without the indicator."""
        fits = univariate_fits(np.array([[1.0], [0.0], [1.0], [1.0]]), four_events)
        assert fits.events_with[0] == 3
        assert fits.events_without[0] == 1

    def test_non_binary_rejected(self, four_events):
        """Test that non-indicator columns are rejected."""
        with pytest.raises(InputError):
            univariate_fits(np.array([[2.0], [0.0], [1.0], [0.0]]), four_events)


class TestLooPredictors:
    """Tests for leave-one-out predictors."""

    @pytest.mark.parametrize("seed", range(3))
    def test_exact_matches_refit(self, random_instance, seed):
        """Test exact LOO slopes against refitting each case-deleted problem from scratch."""
        X, outcome = random_instance(seed, 40, 1, binary=True)
        fits = univariate_fits(X, outcome)
        assert fits.usable[0]
        loo = loo_predictors(X, outcome, fits, method=LooMethod.EXACT)
        dense = loo.values.toarray()[:, 0]
        checked = 0
        for i in np.flatnonzero(X[:, 0] == 1):
            keep = np.arange(outcome.n) != i
            deleted = outcome.subset(keep)
            if univariate_fits(X[keep], deleted).degenerate[0]:
                continue
            refit = univariate_newton(X[keep, 0], deleted)
            assert dense[i] == pytest.approx(refit.slope, abs=1e-8)
            checked += 1
        assert checked > 0

    def test_sparsity_pattern_follows_design(self, random_instance):
        """Test that rows with indicator 0 carry no predictor entry."""
        X, outcome = random_instance(4, 50, 2, binary=True)
        loo = loo_predictors(sparse.csc_matrix(X), outcome)
        dense = loo.values.toarray()
        assert np.all(dense[X == 0] == 0)
        assert loo.all_finite()

    def test_one_step_close_to_exact(self, random_instance):
        """Test that the one-step approximation stays within 0.05 of exact LOO at n=200."""
        X, outcome = random_instance(5, 200, 1, binary=True)
        exact = loo_predictors(X, outcome, method="exact").values.toarray()
        approx = loo_predictors(X, outcome, method="one_step").values.toarray()
        assert np.max(np.abs(exact - approx)) < 0.05

    def test_degenerate_column_is_zero(self, random_instance):
        """Test that a column without a usable univariate fit gets all-zero predictors."""
        X, outcome = random_instance(6, 30, 1, binary=True)
        design = np.column_stack([X[:, 0], np.zeros(30)])
        loo = loo_predictors(design, outcome)
        assert loo.values[:, 1].nnz == 0


class TestFitMinilasso:
    """Tests for the full univariate-guided fit."""

    @pytest.fixture
    def step_design(self, step_dataset):
        ds = step_dataset(21, 200, p=1, jump=1.5)
        design = cumulative_binarize(ds, build_cut_grid(ds, bins_per_feature=5))
        return design, CoxOutcome.from_dataset(ds)

    def test_theta_nonnegative_and_signs_consistent(self, step_design):
        """Test theta >= 0 and that composite effects carry the univariate sign."""
        design, outcome = step_design
        result = fit_minilasso(design, outcome, cv_config=CvConfig(n_folds=3, n_lambdas=10, seed=1))
        assert np.all(result.theta >= 0)
        assert result.sign_consistent()
        np.testing.assert_allclose(result.composite_effects, result.theta * result.univariate.slopes)
        assert result.selected.size >= 1
        assert result.lam in result.path.lambdas

    def test_path_theta_nonnegative(self, step_design):
        """Test every theta along the path is nonnegative."""
        design, outcome = step_design
        staged = minilasso_path(design, outcome, cv_config=CvConfig(n_folds=3, n_lambdas=10))
        assert np.all(staged.theta_matrix() >= 0)
        assert staged.theta_matrix().shape == (10, design.shape[1])

    def test_no_usable_columns(self, four_events):
        """Test that a design without usable columns returns zeros and lam NaN."""
        design = np.array([[1.0], [1.0], [0.0], [0.0]])
        result = fit_minilasso(design, four_events, cv_config=CvConfig(n_folds=2, n_lambdas=5))
        assert np.all(result.theta == 0)
        assert np.isnan(result.lam)
        assert result.diagnostics["n_degenerate"] == 1
