"""Tests for cut-point grids and the cumulative design."""

import json

import numpy as np
import pytest

from cutpoint_lasso.binarize import (
    GridStrategy,
    build_cut_grid,
    cumulative_binarize,
    design_at_thresholds,
    design_rank_check,
    grid_from_json,
    grid_to_json,
)
from cutpoint_lasso.cox_core import CoxOutcome
from cutpoint_lasso.data_model import SurvivalDataset
from cutpoint_lasso.errors import GridMismatch, InputError
from cutpoint_lasso.solver import fit_path


def _dataset(columns, names=None):
    X = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    n = X.shape[0]
    names = names or tuple(f"x{j + 1}" for j in range(X.shape[1]))
    times = np.arange(1, n + 1, dtype=float)
    events = np.ones(n, dtype=int)
    return SurvivalDataset(X, times, events, names)


@pytest.mark.unit
class TestBuildCutGrid:
    """Tests for candidate threshold placement."""

    def test_quantile_one_to_hundred(self):
        """Test that 1..100 with four bins snaps to 25.5, 50.5, 75.5."""
        grid = build_cut_grid(_dataset([np.arange(1, 101)]), bins_per_feature=4)
        np.testing.assert_allclose(grid.thresholds[0], [25.5, 50.5, 75.5])

    def test_heavily_tied_feature(self):
        """Test that a 90/10 binary-valued feature yields the single threshold 0.5."""
        x = np.r_[np.zeros(90), np.ones(10)]
        grid = build_cut_grid(_dataset([x]), bins_per_feature=4)
        np.testing.assert_array_equal(grid.thresholds[0], [0.5])

    def test_thresholds_inside_range_and_cells_occupied(self):
        """Test that every threshold lies strictly inside the range with data on both sides."""
        rng = np.random.default_rng(5)
        x = np.round(rng.normal(size=300), 1)
        grid = build_cut_grid(_dataset([x]), bins_per_feature=20)
        t = grid.thresholds[0]
        assert np.all(np.diff(t) > 0)
        assert t.min() > x.min() and t.max() < x.max()
        cells = np.searchsorted(t, x, side="left")
        assert np.all(np.bincount(cells, minlength=t.size + 1) > 0)

    def test_uniform_collapses_empty_cells(self):
        """Test that uniform edges falling in empty cells are removed."""
        x = np.r_[np.zeros(10), np.full(10, 10.0)]
        grid = build_cut_grid(_dataset([x]), bins_per_feature=10, strategy="uniform")
        assert grid.strategy is GridStrategy.UNIFORM
        assert grid.thresholds[0].size == 1

    def test_constant_feature_dropped_with_warning(self):
        """Test that a feature with one distinct value is dropped, not fatal."""
        grid = build_cut_grid(_dataset([np.arange(10), np.ones(10)]), bins_per_feature=4)
        assert grid.feature_indices == (0,)
        assert len(grid.warnings) == 1
        assert "x2" in grid.warnings[0]

    def test_explicit_outside_range_dropped(self):
        """Test that explicit thresholds outside the observed range are discarded."""
        grid = build_cut_grid(_dataset([np.arange(10)]), strategy="explicit", explicit={"x1": [-1.0, 4.5, 20.0]})
        np.testing.assert_array_equal(grid.thresholds[0], [4.5])
        assert grid.warnings

    def test_bins_below_two_rejected(self):
        """Test that fewer than two bins is an input error."""
        with pytest.raises(InputError):
            build_cut_grid(_dataset([np.arange(10)]), bins_per_feature=1)

    def test_explicit_requires_thresholds(self):
        """Test that the explicit strategy without thresholds is rejected."""
        with pytest.raises(InputError):
            build_cut_grid(_dataset([np.arange(10)]), strategy="explicit")


@pytest.mark.unit
class TestCumulativeBinarize:
    """Tests for the nested indicator design."""

    def test_single_threshold_indicator(self):
        """Test that x=(3,5,1) at t=2 gives the column (1,1,0)."""
        ds = _dataset([[3.0, 5.0, 1.0]])
        grid = build_cut_grid(ds, strategy="explicit", explicit={"x1": [2.0]})
        design = cumulative_binarize(ds, grid)
        np.testing.assert_array_equal(design.values.toarray()[:, 0], [1, 1, 0])

    def test_columns_are_nested(self):
        """Test that each higher-threshold column is contained in the previous one."""
        rng = np.random.default_rng(1)
        ds = _dataset([rng.normal(size=200), rng.uniform(size=200)])
        design = cumulative_binarize(ds, build_cut_grid(ds, bins_per_feature=8))
        dense = design.values.toarray()
        for cols in design.feature_blocks().values():
            for a, b in zip(cols[:-1], cols[1:]):
                assert np.all(dense[:, b] <= dense[:, a])

    def test_row_sum_counts_thresholds_below(self):
        """Test that a row's block sum equals the number of thresholds below its value."""
        rng = np.random.default_rng(2)
        x = rng.uniform(size=50)
        ds = _dataset([x])
        grid = build_cut_grid(ds, bins_per_feature=6)
        design = cumulative_binarize(ds, grid)
        expected = (x[:, None] > grid.thresholds[0][None, :]).sum(axis=1)
        np.testing.assert_array_equal(np.asarray(design.values.sum(axis=1)).ravel(), expected)

    def test_column_metadata_and_order(self):
        """Test feature-major column order with ascending thresholds."""
        ds = _dataset([np.arange(20), np.arange(20)[::-1]], names=("a", "b"))
        design = cumulative_binarize(ds, build_cut_grid(ds, bins_per_feature=4))
        features = [m.feature_name for m in design.column_meta]
        assert features == sorted(features)
        for cols in design.feature_blocks().values():
            thresholds = [design.column_meta[k].threshold for k in cols]
            assert thresholds == sorted(thresholds)

    def test_boundary_indicators_exempt_lowest(self):
        """Test that boundary indicators zero the penalty weight of each feature's first column."""
        ds = _dataset([np.arange(20), np.arange(20)])
        design = cumulative_binarize(ds, build_cut_grid(ds, bins_per_feature=4), boundary_indicators=True)
        weights = design.penalty_weights()
        for cols in design.feature_blocks().values():
            assert weights[cols[0]] == 0.0
            assert np.all(weights[cols[1:]] == 1.0)

    def test_grid_name_mismatch(self):
        """Test that replaying a grid on differently named features fails."""
        grid = build_cut_grid(_dataset([np.arange(10)], names=("a",)), bins_per_feature=4)
        with pytest.raises(GridMismatch):
            cumulative_binarize(_dataset([np.arange(10)], names=("b",)), grid)


@pytest.mark.unit
class TestRankCheck:
    """Tests for design rank and duplicate detection."""

    def test_quantile_design_full_rank(self):
        """Test that a snapped quantile grid gives a full-rank design."""
        rng = np.random.default_rng(3)
        ds = _dataset([rng.normal(size=100)])
        report = design_rank_check(cumulative_binarize(ds, build_cut_grid(ds, bins_per_feature=10)))
        assert report.full_rank

    def test_duplicate_columns_reported(self):
        """Test that two thresholds with no observation between them are duplicates."""
        ds = _dataset([[0.0, 1.0, 2.0, 3.0]])
        design = design_at_thresholds(ds, {"x1": [1.5, 1.6]})
        report = design_rank_check(design)
        assert not report.full_rank
        assert report.duplicated == [[0, 1]]
        assert report.rank == 1


class TestGridJson:
    """Tests for exporting and replaying grids."""

    def test_export_is_name_keyed(self, tmp_path):
        """Test the exported layout and the optional file write."""
        ds = _dataset([np.arange(1, 101)])
        path = tmp_path / "grid.json"
        text = grid_to_json(build_cut_grid(ds, bins_per_feature=4), path)
        assert json.loads(text) == {"x1": [25.5, 50.5, 75.5]}
        assert path.exists()

    def test_replay_from_text_and_path(self, tmp_path):
        """Test that a grid replays from JSON text or from a file path."""
        ds = _dataset([np.arange(1, 101)])
        grid = build_cut_grid(ds, bins_per_feature=4)
        path = tmp_path / "grid.json"
        text = grid_to_json(grid, path)
        for source in (text, path):
            replayed = grid_from_json(source, ds)
            np.testing.assert_array_equal(replayed.thresholds[0], grid.thresholds[0])

    def test_replay_unknown_feature(self):
        """Test that a grid naming an absent feature is rejected."""
        with pytest.raises(GridMismatch):
            grid_from_json({"zz": [1.0]}, _dataset([np.arange(10)]))


@pytest.mark.unit
class TestMonotoneRecoding:
    """Tests that the design depends on a feature only through its order."""

    @pytest.mark.parametrize(
        "recode, bins",
        [(lambda x: 3.0 * x - 7.0, 8), (np.exp, 2), (lambda x: x**3, 2)],
    )
    def test_design_and_fit_unchanged(self, recode, bins):
        """Test identical indicator columns and identical lasso paths after an increasing recoding."""
        rng = np.random.default_rng(5)
        x = rng.uniform(-1.0, 1.0, size=60)
        ds = _dataset([x])
        times = rng.exponential(size=60) / np.exp(1.0 * (x > 0.2))
        ds = SurvivalDataset(ds.features, times, np.ones(60, dtype=int), ds.feature_names)
        recoded = ds.with_features(recode(ds.features))

        design = cumulative_binarize(ds, build_cut_grid(ds, bins_per_feature=bins))
        moved = cumulative_binarize(recoded, build_cut_grid(recoded, bins_per_feature=bins))
        np.testing.assert_array_equal(design.values.toarray(), moved.values.toarray())

        outcome = CoxOutcome.from_dataset(ds)
        np.testing.assert_array_equal(
            fit_path(design, outcome, n_lambdas=10).coef_matrix(),
            fit_path(moved, outcome, n_lambdas=10).coef_matrix(),
        )
