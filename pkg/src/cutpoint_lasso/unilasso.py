"""Univariate-guided sparsification of a cumulative binarized design.

Three steps: a univariate Cox slope per indicator column, leave-one-out linear predictors
``slope^{-i} * x_ik``, then a non-negative lasso over those predictors. The composite effect
of column ``k`` is ``theta_k * slope_k`` and so always carries the univariate sign.

All columns are 0/1 indicators. With binary ``x`` the risk-set sums at a tie group reduce to
the counts ``S0`` (subjects with ``x = 0``) and ``S1`` (``x = 1``), which makes every
leave-one-out problem cheap to evaluate: deleting row ``i`` only removes one unit from the
counts of the groups whose risk set contains ``i``.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Union

import numpy as np
from joblib import Parallel, delayed
from scipy import sparse

from .config_manager import CvConfig
from .cox_core import CoxOutcome, DesignLike, as_matrix, sorted_columns, suffix_at, univariate_newton
from .errors import DimensionMismatch, InputError
from .solver import Constraint, CoxFit, CvResult, LassoPath, PenaltyWeights, cross_validate, fit_path

logger = logging.getLogger(__name__)

SCORE_TOL = 1e-10
LOO_TOL = 1e-12
MAX_NEWTON = 50
_CHUNK = 512


class LooMethod(str, Enum):
    EXACT = "exact"
    ONE_STEP = "one_step"


@dataclass
class UnivariateFits:
    """Per-column univariate Cox fits.

    Attributes:
        slopes: Univariate coefficient per column (0 where degenerate).
        converged: Newton reached ``|score| < 1e-10``.
        degenerate: No finite maximizer (constant column or monotone likelihood).
        events_with: Events among subjects with indicator 1.
        events_without: Events among subjects with indicator 0.
    """

    slopes: np.ndarray
    converged: np.ndarray
    degenerate: np.ndarray
    events_with: np.ndarray
    events_without: np.ndarray

    @property
    def usable(self) -> np.ndarray:
        return self.converged & ~self.degenerate


@dataclass
class LooPredictorMatrix:
    """Leave-one-out predictors; sparse with the design's sparsity pattern.

    ``fallbacks[k]`` counts rows whose deleted-row fit had no finite maximizer and fell back
    to the full-data slope.
    """

    values: sparse.csc_matrix
    method: LooMethod
    fallbacks: np.ndarray

    def all_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values.data)))


@dataclass
class MiniLassoFit:
    """Non-negative lasso over leave-one-out predictors.

    Attributes:
        theta: Non-negative weights, one per design column (0 on excluded columns).
        composite_effects: ``theta * slope`` per column.
        lam: Selected penalty.
        univariate: Step-1 fits.
        path: Step-3 path over the usable columns.
        cv: Cross-validation result for the path.
        usable_columns: Design columns that entered Step 3.
        diagnostics: Counts of degenerate columns and LOO fallbacks.
    """

    theta: np.ndarray
    composite_effects: np.ndarray
    lam: float
    univariate: UnivariateFits
    path: Optional[LassoPath] = None
    cv: Optional[CvResult] = None
    usable_columns: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    fit: Optional[CoxFit] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.composite_effects)

    def sign_consistent(self) -> bool:
        idx = self.selected
        return bool(np.all(np.sign(self.composite_effects[idx]) == np.sign(self.univariate.slopes[idx])))


def _check_binary(values: np.ndarray) -> None:
    if values.size and not np.all(values == 1.0):
        raise InputError("Univariate-guided fits expect 0/1 indicator columns")


class _IndicatorColumn:
    """Risk-set counts of one binary column over the tie groups of an outcome."""

    def __init__(self, positions: np.ndarray, outcome: CoxOutcome):
        o = outcome
        self.outcome = o
        self.positions = positions
        self.s1 = suffix_at(positions, np.ones(positions.size), o.first)
        self.s0 = (o.n - o.first) - self.s1
        x_sorted = np.zeros(o.n)
        x_sorted[positions] = 1.0
        self.x_sorted = x_sorted
        self.event_sum = float(np.dot(o.sorted_events, x_sorted))

    def limits(self):
        """Score as the slope tends to ``-inf`` and ``+inf``."""
        d = self.outcome.deaths
        plus = self.event_sum - float(np.dot(d, self.s1 > 0))
        minus = self.event_sum - float(np.dot(d, self.s0 == 0))
        return minus, plus


def _prob(s0, s1, beta):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        p = s1 / (s1 + s0 * np.exp(-beta))
    return np.where(s1 > 0, np.where(s0 > 0, p, 1.0), 0.0)


def univariate_fits(design: DesignLike, outcome: CoxOutcome) -> UnivariateFits:
    """Univariate Breslow fit for every indicator column; degenerate columns are flagged, not raised."""
    cols = sorted_columns(design, outcome)
    d = cols.shape[1]
    slopes = np.zeros(d)
    converged = np.zeros(d, dtype=bool)
    degenerate = np.zeros(d, dtype=bool)
    with_ev = np.zeros(d, dtype=int)
    without_ev = np.zeros(d, dtype=int)
    sorted_outcome = CoxOutcome.from_arrays(outcome.times[outcome.order], outcome.events[outcome.order])

    for k in range(d):
        positions = cols.indices[cols.indptr[k]:cols.indptr[k + 1]]
        _check_binary(cols.data[cols.indptr[k]:cols.indptr[k + 1]])
        col = _IndicatorColumn(positions, outcome)
        with_ev[k] = int(col.event_sum)
        without_ev[k] = outcome.n_events - with_ev[k]
        minus, plus = col.limits()
        if not (minus > 0 > plus):
            degenerate[k] = True
            continue
        result = univariate_newton(col.x_sorted, sorted_outcome, tol=SCORE_TOL, max_iter=MAX_NEWTON)
        slopes[k] = result.slope
        converged[k] = result.converged and np.isfinite(result.slope)

    n_bad = int(degenerate.sum())
    if n_bad:
        logger.info("%d of %d indicator columns have no finite univariate fit", n_bad, d)
    return UnivariateFits(slopes, converged, degenerate, with_ev, without_ev)


def _deleted_counts(col: _IndicatorColumn):
    """Per-row deletion keys: last tie group containing the row, its indicator and event flag."""
    o = col.outcome
    upto = o.group_upto
    return upto, col.x_sorted, o.sorted_events


def _loo_one_step(col: _IndicatorColumn, slope: float) -> np.ndarray:
    """Single Newton step from ``slope`` on every case-deleted score, by prefix sums over groups."""
    o = col.outcome
    d = o.deaths
    upto, x, ev = _deleted_counts(col)
    p_full = _prob(col.s0, col.s1, slope)
    suffix_score = np.concatenate([np.cumsum((d * p_full)[::-1])[::-1], [0.0]])
    suffix_info = np.concatenate([np.cumsum((d * p_full * (1 - p_full))[::-1])[::-1], [0.0]])

    score = np.empty(o.n)
    info = np.empty(o.n)
    for xv in (0.0, 1.0):
        p_del = _prob(col.s0 - (1 - xv), col.s1 - xv, slope)
        prefix_score = np.concatenate([[0.0], np.cumsum(d * p_del)])
        prefix_info = np.concatenate([[0.0], np.cumsum(d * p_del * (1 - p_del))])
        rows = np.flatnonzero(x == xv)
        u = upto[rows]
        own = np.where(u >= 0, p_del[np.maximum(u, 0)], 0.0)
        own_info = own * (1 - own)
        e_i = ev[rows]
        score[rows] = (col.event_sum - e_i * xv) - (prefix_score[u + 1] - e_i * own) - suffix_score[u + 1]
        info[rows] = (prefix_info[u + 1] - e_i * own_info) + suffix_info[u + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return slope + score / info


def _loo_exact(col: _IndicatorColumn, slope: float, start: np.ndarray) -> np.ndarray:
    """Newton to convergence on every distinct case-deleted problem."""
    o = col.outcome
    upto, x, ev = _deleted_counts(col)
    keys = np.column_stack([upto, x, ev])
    distinct, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    first_row = np.zeros(distinct.shape[0], dtype=int)
    first_row[inverse[::-1]] = np.arange(o.n)[::-1]
    beta = np.where(np.isfinite(start[first_row]), start[first_row], slope)
    groups = np.arange(o.deaths.size)
    out = np.empty(distinct.shape[0])

    for lo in range(0, distinct.shape[0], _CHUNK):
        u = distinct[lo:lo + _CHUNK, 0].astype(int)[:, None]
        xv = distinct[lo:lo + _CHUNK, 1][:, None]
        e_i = distinct[lo:lo + _CHUNK, 2][:, None]
        inside = groups[None, :] <= u
        s0 = col.s0[None, :] - inside * (1 - xv)
        s1 = col.s1[None, :] - inside * xv
        deaths = o.deaths[None, :] - e_i * (groups[None, :] == u)
        events = col.event_sum - (e_i * xv).ravel()
        b = beta[lo:lo + _CHUNK].copy()
        done = np.zeros(b.size, dtype=bool)
        for _ in range(MAX_NEWTON):
            p = _prob(s0, s1, b[:, None])
            score = events - (deaths * p).sum(axis=1)
            info = (deaths * p * (1 - p)).sum(axis=1)
            done = np.abs(score) / o.n < LOO_TOL
            if done.all():
                break
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.clip(score / info, -1.0, 1.0)
            step[done | ~np.isfinite(step)] = 0.0
            b = b + step
        b[~done] = np.nan
        out[lo:lo + _CHUNK] = b
    return out[inverse]


def _column_loo(positions: np.ndarray, outcome: CoxOutcome, slope: float, method: LooMethod):
    col = _IndicatorColumn(positions, outcome)
    one_step = _loo_one_step(col, slope)
    if method is LooMethod.ONE_STEP:
        values = one_step
    else:
        values = _loo_exact(col, slope, one_step)
    bad = ~np.isfinite(values)
    values[bad] = slope
    # only rows with indicator 1 carry a nonzero entry
    return values[positions], int(bad[positions].sum())


def loo_predictors(
    design: DesignLike,
    outcome: CoxOutcome,
    fits: Optional[UnivariateFits] = None,
    method: Union[LooMethod, str] = LooMethod.EXACT,
    n_jobs: int = 1,
) -> LooPredictorMatrix:
    """Entry ``(i, k) = slope_k^{-i} * x_ik``; columns without a usable univariate fit are all zero.

    ``exact`` refits each deleted-row model by Newton from the full-data slope; ``one_step``
    takes a single Newton step. Rows whose deleted problem has no finite maximizer keep the
    full-data slope.
    """
    method = LooMethod(method)
    fits = fits if fits is not None else univariate_fits(design, outcome)
    cols = sorted_columns(design, outcome)
    d = cols.shape[1]
    if fits.slopes.size != d:
        raise DimensionMismatch(f"{fits.slopes.size} univariate fits for {d} columns")
    usable = np.flatnonzero(fits.usable)

    results = Parallel(n_jobs=n_jobs)(
        delayed(_column_loo)(cols.indices[cols.indptr[k]:cols.indptr[k + 1]], outcome, float(fits.slopes[k]), method)
        for k in usable
    )

    # inverse of the time order, to place sorted positions back on original rows
    rank = np.empty(outcome.n, dtype=int)
    rank[outcome.order] = np.arange(outcome.n)
    fallbacks = np.zeros(d, dtype=int)
    blocks_rows: List[np.ndarray] = []
    blocks_cols: List[np.ndarray] = []
    blocks_vals: List[np.ndarray] = []
    for k, (values, n_fallback) in zip(usable, results):
        positions = cols.indices[cols.indptr[k]:cols.indptr[k + 1]]
        blocks_rows.append(outcome.order[positions])
        blocks_cols.append(np.full(positions.size, k))
        blocks_vals.append(values)
        fallbacks[k] = n_fallback
    if blocks_rows:
        matrix = sparse.csc_matrix(
            (np.concatenate(blocks_vals), (np.concatenate(blocks_rows), np.concatenate(blocks_cols))),
            shape=(outcome.n, d),
        )
    else:
        matrix = sparse.csc_matrix((outcome.n, d))
    if fallbacks.any():
        logger.warning("LOO fits fell back to the full-data slope for %d rows", int(fallbacks.sum()))
    return LooPredictorMatrix(values=matrix, method=method, fallbacks=fallbacks)


@dataclass
class MiniLassoPath:
    """Steps 1-2 plus the non-negative path of Step 3, before any lambda is chosen."""

    univariate: UnivariateFits
    loo: LooPredictorMatrix
    usable_columns: np.ndarray
    n_columns: int
    path: Optional[LassoPath] = None
    weights: Optional[PenaltyWeights] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def theta_matrix(self) -> np.ndarray:
        """``(n_lambdas, d)`` theta along the path, zero on excluded columns."""
        if self.path is None:
            return np.zeros((0, self.n_columns))
        out = np.zeros((self.path.lambdas.size, self.n_columns))
        out[:, self.usable_columns] = self.path.coef_matrix()
        return out

    def composite_matrix(self) -> np.ndarray:
        return self.theta_matrix() * self.univariate.slopes[None, :]

    def entry_lambda(self) -> np.ndarray:
        out = np.full(self.n_columns, np.nan)
        if self.path is not None:
            out[self.usable_columns] = self.path.entry_lambda
        return out


def minilasso_path(
    design: DesignLike,
    outcome: CoxOutcome,
    weights: Optional[PenaltyWeights] = None,
    cv_config: Optional[CvConfig] = None,
    method: Union[LooMethod, str] = LooMethod.EXACT,
) -> MiniLassoPath:
    """Univariate fits, LOO predictors and the non-negative lasso path over the usable columns."""
    cv_config = cv_config or CvConfig()
    d = as_matrix(design).shape[1]
    if weights is not None and weights.size != d:
        raise DimensionMismatch(f"{weights.size} penalty weights for {d} columns")
    fits = univariate_fits(design, outcome)
    loo = loo_predictors(design, outcome, fits, method=method, n_jobs=cv_config.n_jobs)
    usable = np.flatnonzero(fits.usable)
    result = MiniLassoPath(
        univariate=fits,
        loo=loo,
        usable_columns=usable,
        n_columns=d,
        diagnostics={
            "n_degenerate": int(fits.degenerate.sum()),
            "n_unconverged": int((~fits.converged & ~fits.degenerate).sum()),
            "loo_method": LooMethod(method).value,
            "loo_fallbacks": int(loo.fallbacks.sum()),
        },
    )
    if usable.size == 0 or (weights is not None and not np.any(weights.weights[usable] > 0)):
        logger.warning("No usable indicator columns; the non-negative lasso is skipped")
        return result

    result.weights = PenaltyWeights(weights.weights[usable]) if weights is not None else None
    result.path = fit_path(
        loo.values[:, usable],
        outcome,
        result.weights,
        Constraint.NONNEGATIVE,
        n_lambdas=cv_config.n_lambdas,
        lambda_ratio=cv_config.lambda_ratio,
        config=cv_config.solver,
    )
    return result


def fit_minilasso(
    design: DesignLike,
    outcome: CoxOutcome,
    weights: Optional[PenaltyWeights] = None,
    cv_config: Optional[CvConfig] = None,
    method: Union[LooMethod, str] = LooMethod.EXACT,
    fold_assignments: Optional[np.ndarray] = None,
) -> MiniLassoFit:
    """Non-negative lasso with CV-selected lambda over the leave-one-out predictors.

    Cut-points are the columns whose composite effect ``theta * slope`` is nonzero.
    """
    cv_config = cv_config or CvConfig()
    staged = minilasso_path(design, outcome, weights, cv_config, method)
    d = staged.n_columns
    if staged.path is None:
        return MiniLassoFit(
            np.zeros(d),
            np.zeros(d),
            float("nan"),
            staged.univariate,
            usable_columns=staged.usable_columns,
            diagnostics=staged.diagnostics,
        )

    cv = cross_validate(
        staged.loo.values[:, staged.usable_columns],
        outcome,
        staged.weights,
        Constraint.NONNEGATIVE,
        n_folds=cv_config.n_folds,
        seed=cv_config.seed,
        lambdas=staged.path.lambdas,
        fold_assignments=fold_assignments,
        cv_config=cv_config,
    )
    lam = cv.select(cv_config.selection)
    index = int(np.flatnonzero(staged.path.lambdas == lam)[0])
    theta = staged.theta_matrix()[index]
    result = MiniLassoFit(
        theta=theta,
        composite_effects=theta * staged.univariate.slopes,
        lam=lam,
        univariate=staged.univariate,
        path=staged.path,
        cv=cv,
        usable_columns=staged.usable_columns,
        fit=staged.path.fits[index],
        diagnostics=staged.diagnostics,
    )
    if not result.sign_consistent():
        raise AssertionError("composite effects disagree in sign with univariate slopes")
    return result
