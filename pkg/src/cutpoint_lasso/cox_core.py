"""Breslow partial likelihood, its derivatives, baseline hazard and survival prediction.

Everything is computed over subjects sorted by time. A tie group ``g`` is a distinct event
time; ``first[g]`` is the first sorted position with that time, so the risk set of the group
is the suffix ``[first[g], n)`` and every risk-set sum is one reverse cumulative sum.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import sparse

from .binarize import CumulativeDesign
from .data_model import SurvivalDataset
from .errors import DimensionMismatch, InputError, NoEvents

logger = logging.getLogger(__name__)

DesignLike = Union[CumulativeDesign, sparse.spmatrix, np.ndarray]


@dataclass(frozen=True, eq=False)
class CoxOutcome:
    """Time-sorted right-censored outcome with its tie structure.

    Attributes:
        times: Observed times in original row order.
        events: Event indicators in original row order.
        order: Stable permutation sorting ``times`` ascending.
        sorted_events: ``events[order]`` as floats.
        first: Sorted position of the first subject at each distinct event time.
        deaths: Number of events at each distinct event time.
        event_times: The distinct event times, ascending.
        group_upto: For each sorted position, index of the last tie group whose risk set
            contains it (``-1`` before the first event time).
    """

    times: np.ndarray
    events: np.ndarray
    order: np.ndarray
    sorted_events: np.ndarray
    first: np.ndarray
    deaths: np.ndarray
    event_times: np.ndarray
    group_upto: np.ndarray

    @classmethod
    def from_arrays(cls, times, events) -> "CoxOutcome":
        times = np.asarray(times, dtype=float).ravel()
        events = np.asarray(events).astype(np.int8).ravel()
        if times.shape != events.shape:
            raise DimensionMismatch(f"{times.size} times but {events.size} event indicators")
        if not np.any(events == 1):
            raise NoEvents()
        order = np.argsort(times, kind="stable")
        sorted_times = times[order]
        sorted_events = events[order].astype(float)
        event_times, deaths = np.unique(sorted_times[sorted_events == 1], return_counts=True)
        first = np.searchsorted(sorted_times, event_times, side="left")
        group_upto = np.searchsorted(first, np.arange(times.size), side="right") - 1
        return cls(
            times=times,
            events=events,
            order=order,
            sorted_events=sorted_events,
            first=first,
            deaths=deaths.astype(float),
            event_times=event_times,
            group_upto=group_upto,
        )

    @classmethod
    def from_dataset(cls, ds: SurvivalDataset) -> "CoxOutcome":
        return cls.from_arrays(ds.times, ds.events)

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def n_events(self) -> int:
        return int(self.deaths.sum())

    def subset(self, rows) -> "CoxOutcome":
        rows = np.asarray(rows)
        return CoxOutcome.from_arrays(self.times[rows], self.events[rows])


@dataclass(frozen=True, eq=False)
class CoxObjectiveContext:
    """Linear predictors paired with the outcome they are scored against."""

    outcome: CoxOutcome
    linear_predictors: np.ndarray

    def __post_init__(self):
        lp = np.asarray(self.linear_predictors, dtype=float).ravel()
        if lp.size != self.outcome.n:
            raise DimensionMismatch(f"{lp.size} linear predictors for {self.outcome.n} subjects")
        object.__setattr__(self, "linear_predictors", lp)

    @classmethod
    def from_beta(cls, design: DesignLike, beta, outcome: CoxOutcome) -> "CoxObjectiveContext":
        return cls(outcome, linear_predictor(design, beta, outcome))

    @property
    def event_order(self) -> np.ndarray:
        return self.outcome.order

    @property
    def risk_set_index(self) -> np.ndarray:
        return self.outcome.first

    @property
    def tie_groups(self) -> np.ndarray:
        return self.outcome.deaths


@dataclass(frozen=True, eq=False)
class BaselineHazard:
    """Breslow cumulative baseline hazard as a right-continuous step function."""

    times: np.ndarray
    cumulative_hazard: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.cumulative_hazard.shape:
            raise DimensionMismatch("times and cumulative_hazard must have the same length")

    def at(self, eval_times) -> np.ndarray:
        idx = np.searchsorted(self.times, np.asarray(eval_times, dtype=float), side="right") - 1
        padded = np.concatenate([[0.0], self.cumulative_hazard])
        return padded[idx + 1]

    def to_dict(self):
        return {"times": self.times.tolist(), "cumulative_hazard": self.cumulative_hazard.tolist()}


def as_matrix(design: DesignLike):
    """CSC matrix for sparse inputs, 2-D float array otherwise."""
    if isinstance(design, CumulativeDesign):
        return design.values
    if sparse.issparse(design):
        return design.tocsc()
    arr = np.asarray(design, dtype=float)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


def linear_predictor(design: DesignLike, beta, outcome: Optional[CoxOutcome] = None) -> np.ndarray:
    matrix = as_matrix(design)
    beta = np.asarray(beta, dtype=float).ravel()
    if matrix.shape[1] != beta.size:
        raise DimensionMismatch(f"design has {matrix.shape[1]} columns, beta has {beta.size} entries")
    if outcome is not None and matrix.shape[0] != outcome.n:
        raise DimensionMismatch(f"design has {matrix.shape[0]} rows, outcome has {outcome.n} subjects")
    return np.asarray(matrix @ beta).ravel()


def sorted_columns(design: DesignLike, outcome: CoxOutcome) -> sparse.csc_matrix:
    """Design rows permuted into time order, as CSC with sorted row indices."""
    matrix = as_matrix(design)
    if matrix.shape[0] != outcome.n:
        raise DimensionMismatch(f"design has {matrix.shape[0]} rows, outcome has {outcome.n} subjects")
    permuted = sparse.csc_matrix(matrix[outcome.order])
    permuted.sort_indices()
    return permuted


def suffix_at(positions: np.ndarray, values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """``sum(values[positions >= s])`` for every ``s`` in ``starts``; ``positions`` ascending."""
    tail = np.concatenate([np.cumsum(values[::-1])[::-1], [0.0]])
    return tail[np.searchsorted(positions, starts, side="left")]


def risk_weights(outcome: CoxOutcome, eta: np.ndarray):
    """Centered relative risks in sorted order, risk-set sums per tie group, and the shift."""
    eta_sorted = np.asarray(eta, dtype=float)[outcome.order]
    shift = float(eta_sorted.max())
    w = np.exp(eta_sorted - shift)
    tail = np.cumsum(w[::-1])[::-1]
    return w, tail[outcome.first], shift


def negative_log_likelihood(outcome: CoxOutcome, eta: np.ndarray) -> float:
    """Scaled Breslow negative log partial likelihood at linear predictors ``eta``."""
    eta = np.asarray(eta, dtype=float)
    _, risk, shift = risk_weights(outcome, eta)
    event_sum = float(np.dot(outcome.sorted_events, eta[outcome.order] - shift))
    return (-event_sum + float(np.dot(outcome.deaths, np.log(risk)))) / outcome.n


def nll(ctx: CoxObjectiveContext) -> float:
    """``-(1/n) sum_{events} [f_i - log sum_{R(Z_i)} exp(f)]`` with Breslow ties."""
    return negative_log_likelihood(ctx.outcome, ctx.linear_predictors)


def log_partial_likelihood(outcome: CoxOutcome, eta: np.ndarray) -> float:
    return -outcome.n * negative_log_likelihood(outcome, eta)


def eta_gradient(outcome: CoxOutcome, eta: np.ndarray) -> np.ndarray:
    """Derivative of ``nll`` with respect to each subject's linear predictor, original order."""
    w, risk, _ = risk_weights(outcome, eta)
    jumps = np.zeros(outcome.n)
    jumps[outcome.first] = outcome.deaths / risk
    cumulative = np.cumsum(jumps)
    grad_sorted = (w * cumulative - outcome.sorted_events) / outcome.n
    grad = np.empty(outcome.n)
    grad[outcome.order] = grad_sorted
    return grad


def nll_gradient(design: DesignLike, beta, outcome: CoxOutcome) -> np.ndarray:
    """Exact score of ``nll`` (gradient of the negative log partial likelihood), scaled by ``1/n``."""
    matrix = as_matrix(design)
    eta = linear_predictor(matrix, beta, outcome)
    return np.asarray(matrix.T @ eta_gradient(outcome, eta)).ravel()


def column_derivatives(
    positions: np.ndarray,
    values: np.ndarray,
    w: np.ndarray,
    risk: np.ndarray,
    outcome: CoxOutcome,
):
    """First and second partial of ``nll`` along one column given by its sorted support.

    ``w`` and ``risk`` come from ``risk_weights`` at the current linear predictor.
    """
    if positions.size == 0:
        return 0.0, 0.0
    weighted = values * w[positions]
    first_moment = suffix_at(positions, weighted, outcome.first) / risk
    second_moment = suffix_at(positions, weighted * values, outcome.first) / risk
    event_part = float(np.dot(outcome.sorted_events[positions], values))
    grad = (-event_part + float(np.dot(outcome.deaths, first_moment))) / outcome.n
    hess = float(np.dot(outcome.deaths, second_moment - first_moment**2)) / outcome.n
    return grad, max(hess, 0.0)


def curvature_bounds(design: DesignLike, beta, outcome: CoxOutcome) -> np.ndarray:
    """Exact diagonal second partials of ``nll`` at ``beta``; all nonnegative."""
    eta = linear_predictor(design, beta, outcome)
    cols = sorted_columns(design, outcome)
    w, risk, _ = risk_weights(outcome, eta)
    out = np.zeros(cols.shape[1])
    for k in range(cols.shape[1]):
        start, end = cols.indptr[k], cols.indptr[k + 1]
        _, out[k] = column_derivatives(cols.indices[start:end], cols.data[start:end], w, risk, outcome)
    return out


def breslow_baseline(design: DesignLike, beta, outcome: CoxOutcome) -> BaselineHazard:
    """Breslow estimate: increment ``d_k / sum_{R(t_k)} exp(f)`` at each distinct event time."""
    if outcome.n_events == 0:
        raise NoEvents()
    eta = linear_predictor(design, beta, outcome)
    return baseline_from_eta(outcome, eta)


def baseline_from_eta(outcome: CoxOutcome, eta: np.ndarray) -> BaselineHazard:
    _, risk, shift = risk_weights(outcome, eta)
    increments = outcome.deaths / risk * np.exp(-shift)
    return BaselineHazard(times=outcome.event_times.copy(), cumulative_hazard=np.cumsum(increments))


def predict_survival(bh: BaselineHazard, lp, eval_times) -> np.ndarray:
    """``S(t | lp) = exp(-Lambda_0(t) exp(lp))``.

    Scalar ``lp`` gives one curve over ``eval_times``; a vector gives a ``(len(lp), len(eval_times))``
    matrix.
    """
    eval_times = np.asarray(eval_times, dtype=float)
    if np.any(eval_times < 0):
        raise InputError("Evaluation times must be nonnegative")
    cumhaz = bh.at(eval_times)
    lp_arr = np.asarray(lp, dtype=float)
    if lp_arr.ndim == 0:
        return np.exp(-cumhaz * np.exp(lp_arr))
    return np.exp(-np.outer(np.exp(lp_arr), cumhaz))


@dataclass
class UnivariateResult:
    """One-dimensional Breslow maximum-likelihood fit."""

    slope: float
    converged: bool
    n_iterations: int
    score: float
    information: float


def univariate_newton(
    x,
    outcome: CoxOutcome,
    start: float = 0.0,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> UnivariateResult:
    """Newton's method on the partial likelihood of a single covariate column.

    Steps are halved until ``nll`` does not increase. Convergence means ``|score| < tol`` on the
    scaled score; iteration stops early once the curvature vanishes.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != outcome.n:
        raise DimensionMismatch(f"column has {x.size} entries, outcome has {outcome.n} subjects")
    xs = x[outcome.order]
    positions = np.flatnonzero(xs != 0)
    values = xs[positions]
    b = float(start)

    def evaluate(slope):
        w, risk, _ = risk_weights(outcome, slope * x)
        g, h = column_derivatives(positions, values, w, risk, outcome)
        return g, h

    current = negative_log_likelihood(outcome, b * x)
    g, h = evaluate(b)
    for iteration in range(1, max_iter + 1):
        if abs(g) < tol:
            return UnivariateResult(b, True, iteration - 1, g, h)
        if not h > 0:
            break
        step = g / h
        for _ in range(60):
            candidate = b - step
            value = negative_log_likelihood(outcome, candidate * x)
            if value <= current + 1e-15 * max(1.0, abs(current)):
                break
            step /= 2.0
        b, current = candidate, value
        g, h = evaluate(b)
    converged = abs(g) < tol
    if not converged:
        logger.debug("Univariate Newton stopped at slope=%.6g, score=%.3g", b, g)
    return UnivariateResult(b, converged, max_iter, g, h)
