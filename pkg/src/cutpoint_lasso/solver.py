"""Weighted L1-penalized Cox estimation by cyclic coordinate descent.

Minimizes ``nll(beta) + lam * sum_k w_k |beta_k|``, optionally subject to ``beta >= 0``.
Each coordinate takes a soft-thresholded Newton step on its exact diagonal curvature; the
step is accepted as is when it lowers the objective and halved otherwise. Indicator columns
(all stored values 1) get their derivatives and the risk-set update from a single suffix sum.

Cycling is restricted to a working set: the nonzero and unpenalized coordinates plus the
sequential strong set ``|g_k| >= w_k (2 lam - lam_prev)`` computed from one vectorized
gradient. A full gradient after each working-set solve admits KKT violators, and a fit counts
as converged only once the KKT conditions hold on every coordinate.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import StratifiedKFold

from .config_manager import CvConfig, SolverConfig
from .cox_core import (
    CoxOutcome,
    DesignLike,
    as_matrix,
    column_derivatives,
    log_partial_likelihood,
    negative_log_likelihood,
    sorted_columns,
    suffix_at,
)
from .errors import AllWeightsZero, DimensionMismatch, FoldWithoutEvents, InputError, NotConverged

logger = logging.getLogger(__name__)


class Constraint(str, Enum):
    NONE = "none"
    NONNEGATIVE = "nonnegative"


@dataclass(frozen=True, eq=False)
class PenaltyWeights:
    """Per-coordinate L1 weights; zeros mark unpenalized coordinates."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise InputError("Penalty weights must be finite and nonnegative")
        if not np.any(w > 0):
            raise AllWeightsZero()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, d: int) -> "PenaltyWeights":
        return cls(np.ones(d))

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def penalized(self) -> np.ndarray:
        return self.weights > 0


@dataclass
class CoxFit:
    """Result of one penalized fit.

    Attributes:
        beta: Coefficients, one per design column.
        lam: Penalty strength.
        nll_value: Scaled negative log partial likelihood at ``beta``.
        objective_value: ``nll_value + lam * sum(w * |beta|)``.
        n_iterations: Coordinate-descent cycles used.
        converged: KKT conditions certified within tolerance.
        active_set: Indices of nonzero coefficients.
        kkt_violation: Worst KKT residual at the returned iterate.
        n_obs: Number of subjects the fit was computed on.
    """

    beta: np.ndarray
    lam: float
    nll_value: float
    objective_value: float
    n_iterations: int
    converged: bool
    active_set: FrozenSet[int] = frozenset()
    kkt_violation: float = 0.0
    n_obs: int = 0

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.active_set = frozenset(int(k) for k in np.flatnonzero(self.beta))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "beta": self.beta.tolist(),
            "lambda": self.lam,
            "nll": self.nll_value,
            "objective": self.objective_value,
            "n_iterations": self.n_iterations,
            "converged": self.converged,
            "active_set": sorted(self.active_set),
            "kkt_violation": self.kkt_violation,
            "n_obs": self.n_obs,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CoxFit":
        return cls(
            beta=np.asarray(data["beta"], dtype=float),
            lam=float(data["lambda"]),
            nll_value=float(data["nll"]),
            objective_value=float(data["objective"]),
            n_iterations=int(data["n_iterations"]),
            converged=bool(data["converged"]),
            kkt_violation=float(data.get("kkt_violation", 0.0)),
            n_obs=int(data.get("n_obs", 0)),
        )


@dataclass
class LassoPath:
    """Fits along a strictly decreasing lambda sequence.

    ``entry_lambda[k]`` is the first (largest) lambda at which coordinate ``k`` is nonzero,
    ``nan`` if it never enters.
    """

    lambdas: np.ndarray
    fits: List[CoxFit]
    entry_lambda: np.ndarray

    def coef_matrix(self) -> np.ndarray:
        """Coefficients as an ``(n_lambdas, d)`` array."""
        return np.vstack([f.beta for f in self.fits])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambdas": self.lambdas.tolist(),
            "fits": [f.to_dict() for f in self.fits],
            "entry_lambda": [None if np.isnan(v) else float(v) for v in self.entry_lambda],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LassoPath":
        return cls(
            lambdas=np.asarray(data["lambdas"], dtype=float),
            fits=[CoxFit.from_dict(f) for f in data["fits"]],
            entry_lambda=np.array([np.nan if v is None else v for v in data["entry_lambda"]], dtype=float),
        )


@dataclass
class CvResult:
    """Cross-validated partial-likelihood deviance along a lambda path.

    ``se`` holds the standard error of the fold mean, the spread used by the one-standard-error
    rule.
    """

    lambdas: np.ndarray
    mean_cv_deviance: np.ndarray
    se: np.ndarray
    lambda_min: float
    lambda_1se: float
    fold_assignments: np.ndarray
    fold_deviance: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    seed: Optional[int] = None

    def select(self, rule: str = "lambda_min") -> float:
        if rule == "lambda_min":
            return self.lambda_min
        if rule == "lambda_1se":
            return self.lambda_1se
        raise InputError(f"Unknown lambda selection rule: {rule!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambdas": self.lambdas.tolist(),
            "mean_cv_deviance": self.mean_cv_deviance.tolist(),
            "se": self.se.tolist(),
            "lambda_min": self.lambda_min,
            "lambda_1se": self.lambda_1se,
            "fold_assignments": self.fold_assignments.tolist(),
            "fold_deviance": self.fold_deviance.tolist(),
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CvResult":
        return cls(
            lambdas=np.asarray(data["lambdas"], dtype=float),
            mean_cv_deviance=np.asarray(data["mean_cv_deviance"], dtype=float),
            se=np.asarray(data["se"], dtype=float),
            lambda_min=float(data["lambda_min"]),
            lambda_1se=float(data["lambda_1se"]),
            fold_assignments=np.asarray(data["fold_assignments"], dtype=int),
            fold_deviance=np.asarray(data.get("fold_deviance", []), dtype=float),
            seed=data.get("seed"),
        )


@dataclass
class KktCertificate:
    passed: bool
    worst_violation: float
    worst_coordinate: Optional[int]
    tolerance: float


def kkt_tolerance(lam: float, weights: PenaltyWeights) -> float:
    return 1e-4 * lam * float(weights.weights.max()) + 1e-8


def kkt_residuals(beta: np.ndarray, grad: np.ndarray, lam: float, weights: np.ndarray, constraint: Constraint):
    """Per-coordinate distance of the gradient from the subdifferential condition."""
    thresh = lam * weights
    out = np.empty_like(grad)
    nonzero = beta != 0
    out[nonzero] = np.abs(grad[nonzero] + np.sign(beta[nonzero]) * thresh[nonzero])
    zero = ~nonzero
    if constraint is Constraint.NONNEGATIVE:
        out[zero] = np.maximum(-grad[zero] - thresh[zero], 0.0)
    else:
        out[zero] = np.maximum(np.abs(grad[zero]) - thresh[zero], 0.0)
    return out


class CoxLassoProblem:
    """A design/outcome pair prepared for repeated fits (time-sorted CSC columns)."""

    def __init__(
        self,
        design: DesignLike,
        outcome: CoxOutcome,
        weights: Optional[PenaltyWeights] = None,
        constraint: Union[Constraint, str] = Constraint.NONE,
        config: Optional[SolverConfig] = None,
        penalized: bool = True,
    ):
        self.outcome = outcome
        self.columns = sorted_columns(design, outcome)
        self.d = self.columns.shape[1]
        if weights is None and penalized and self.d:
            weights = PenaltyWeights.uniform(self.d)
        if weights is not None and weights.size != self.d:
            raise DimensionMismatch(f"{weights.size} penalty weights for {self.d} columns")
        self.weights = weights
        self.constraint = Constraint(constraint)
        self.config = config or SolverConfig()

        indptr, indices, data = self.columns.indptr, self.columns.indices, self.columns.data
        self._support = [(indices[indptr[k]:indptr[k + 1]], data[indptr[k]:indptr[k + 1]]) for k in range(self.d)]
        self._event_x = np.array([float(np.dot(outcome.sorted_events[p], v)) for p, v in self._support])
        self._usable_mask = np.diff(indptr) > 0
        self._usable = np.flatnonzero(self._usable_mask)
        self._binary = np.array([bool(np.all(v == 1.0)) for _, v in self._support], dtype=bool)
        self._w_arr = self.weights.weights if self.weights is not None else np.zeros(self.d)

    # ---- state ----

    def _refresh(self):
        self._shift = float(self._eta.max())
        self._w = np.exp(self._eta - self._shift)
        tail = np.cumsum(self._w[::-1])[::-1]
        self._risk = tail[self.outcome.first]

    def _nll(self) -> float:
        o = self.outcome
        event_part = float(np.dot(o.sorted_events, self._eta - self._shift))
        return (-event_part + float(np.dot(o.deaths, np.log(self._risk)))) / o.n

    def _objective(self, beta: np.ndarray, lam: float) -> float:
        return self._nll() + lam * float(np.dot(self._w_arr, np.abs(beta)))

    def _gradient(self) -> np.ndarray:
        o = self.outcome
        jumps = np.zeros(o.n)
        jumps[o.first] = o.deaths / self._risk
        r = (self._w * np.cumsum(jumps) - o.sorted_events) / o.n
        return np.asarray(self.columns.T @ r).ravel()

    def gradient_at(self, beta: np.ndarray) -> np.ndarray:
        self._eta = np.asarray(self.columns @ beta).ravel()
        self._refresh()
        return self._gradient()

    # ---- coordinate descent ----

    def _target_step(self, k: int, b: float, g: float, h: float, lam_k: float) -> float:
        z = h * b - g
        if self.constraint is Constraint.NONNEGATIVE:
            target = max(z - lam_k, 0.0) / h
        else:
            target = np.sign(z) * max(abs(z) - lam_k, 0.0) / h
        return float(np.clip(target - b, -self.config.max_step, self.config.max_step))

    def _update_indicator(self, k: int, beta: np.ndarray, lam: float) -> float:
        """Coordinate step for a 0/1 column: every risk-set sum is a multiple of one suffix sum."""
        pos, _ = self._support[k]
        o = self.outcome
        covered = suffix_at(pos, self._w[pos], o.first)
        share = covered / self._risk
        g = (-self._event_x[k] + float(np.dot(o.deaths, share))) / o.n
        h = float(np.dot(o.deaths, share - share * share)) / o.n
        if not h > 0:
            return 0.0
        lam_k = lam * self._w_arr[k]
        b = beta[k]
        step = self._target_step(k, b, g, h, lam_k)
        if step == 0.0:
            return 0.0

        for _ in range(30):
            growth = np.expm1(step)
            ratio = share * growth
            if np.all(ratio > -1.0):
                d_nll = (-step * self._event_x[k] + float(np.dot(o.deaths, np.log1p(ratio)))) / o.n
                if d_nll + lam_k * (abs(b + step) - abs(b)) <= 0.0:
                    break
            step /= 2.0
        else:
            return 0.0

        beta[k] = b + step
        self._eta[pos] += step
        self._w[pos] *= np.exp(step)
        self._risk = self._risk + covered * growth
        return abs(step)

    def _update(self, k: int, beta: np.ndarray, lam: float) -> float:
        if self._binary[k]:
            return self._update_indicator(k, beta, lam)
        pos, vals = self._support[k]
        o = self.outcome
        g, h = column_derivatives(pos, vals, self._w, self._risk, o)
        if not h > 0:
            return 0.0
        lam_k = lam * self._w_arr[k]
        b = beta[k]
        step = self._target_step(k, b, g, h, lam_k)
        if step == 0.0:
            return 0.0

        w_old = self._w[pos]
        for _ in range(30):
            w_new = w_old * np.exp(step * vals)
            diff = suffix_at(pos, w_new - w_old, o.first)
            ratio = diff / self._risk
            if np.all(ratio > -1.0):
                d_nll = (-step * self._event_x[k] + float(np.dot(o.deaths, np.log1p(ratio)))) / o.n
                d_pen = lam_k * (abs(b + step) - abs(b))
                if d_nll + d_pen <= 0.0:
                    break
            step /= 2.0
        else:
            return 0.0

        beta[k] = b + step
        self._eta[pos] += step * vals
        self._w[pos] = w_new
        self._risk = self._risk + diff
        return abs(step)

    def _cycle(self, coords: Sequence[int], beta: np.ndarray, lam: float) -> float:
        self._refresh()
        change = 0.0
        for k in coords:
            change = max(change, self._update(int(k), beta, lam))
        return change

    def _working_set(self, beta: np.ndarray, grad: np.ndarray, lam: float, previous_lam: Optional[float]) -> set:
        if not self.config.strong_rules:
            return set(int(k) for k in self._usable)
        cutoff = lam if previous_lam is None else max(2.0 * lam - previous_lam, 0.0)
        keep = (beta != 0) | (self._w_arr == 0) | (np.abs(grad) >= self._w_arr * cutoff)
        return set(int(k) for k in np.flatnonzero(keep & self._usable_mask))

    def fit(self, lam: float, warm_start: Optional[np.ndarray] = None, previous_lam: Optional[float] = None) -> CoxFit:
        """Solve at one ``lam``; never raises on non-convergence.

        ``previous_lam`` is the path neighbour the warm start was solved at; it sharpens the
        strong-rule screen. Screened-out coordinates are still checked by the full KKT pass.
        """
        if lam < 0:
            raise InputError("lambda must be nonnegative")
        cfg = self.config
        beta = np.zeros(self.d) if warm_start is None else np.array(warm_start, dtype=float)
        if beta.size != self.d:
            raise DimensionMismatch(f"warm start has {beta.size} entries, design has {self.d} columns")
        if self.constraint is Constraint.NONNEGATIVE:
            beta = np.maximum(beta, 0.0)
        self._eta = np.asarray(self.columns @ beta).ravel()
        self._refresh()
        tol = kkt_tolerance(lam, self.weights) if self.weights is not None else 1e-8

        if self.d == 0:
            value = self._nll()
            return CoxFit(beta, lam, value, value, 0, True, n_obs=self.outcome.n)

        active = self._working_set(beta, self._gradient(), lam, previous_lam)
        cycles = 0
        obj = self._objective(beta, lam)
        converged = False
        worst = np.inf
        while True:
            progress = 0.0
            while cycles < cfg.max_cycles and active:
                prev = obj
                change = self._cycle(sorted(active), beta, lam)
                cycles += 1
                obj = self._objective(beta, lam)
                progress = max(progress, change)
                if (prev - obj) < cfg.tol_objective * max(abs(prev), 1e-12) or change < cfg.tol_coef:
                    break
            self._refresh()
            residual = kkt_residuals(beta, self._gradient(), lam, self._w_arr, self.constraint)
            residual[np.setdiff1d(np.arange(self.d), self._usable)] = 0.0
            worst = float(residual.max())
            if worst <= tol:
                converged = True
                break
            violators = {int(k) for k in np.flatnonzero(residual > tol)} - active
            if cycles >= cfg.max_cycles or (not violators and progress == 0.0):
                break
            active |= violators

        obj = self._objective(beta, lam)
        if not converged:
            logger.warning("Fit at lambda=%.6g stopped after %d cycles; KKT violation %.3g", lam, cycles, worst)
        return CoxFit(
            beta=beta,
            lam=float(lam),
            nll_value=self._nll(),
            objective_value=obj,
            n_iterations=cycles,
            converged=converged,
            kkt_violation=worst,
            n_obs=self.outcome.n,
        )

    def lambda_max(self) -> float:
        """Smallest lambda at which every penalized coordinate is zero."""
        if self.weights is None:
            raise AllWeightsZero()
        penalized = self.weights.penalized
        beta = np.zeros(self.d)
        free = np.flatnonzero(~penalized)
        if free.size:
            sub = CoxLassoProblem(
                self.columns[:, free], _sorted_outcome(self.outcome), config=self.config, penalized=False
            )
            beta[free] = sub.fit(0.0).beta
        grad = self.gradient_at(beta)
        ratios = np.abs(grad[penalized]) / self._w_arr[penalized]
        if self.constraint is Constraint.NONNEGATIVE:
            signed = np.maximum(-grad[penalized], 0.0) / self._w_arr[penalized]
            if signed.max() > 0:
                ratios = signed
        value = float(ratios.max()) if ratios.size else 0.0
        return value if value > 0 else 1e-8

    def default_ratio(self) -> float:
        return 1e-2 if self.outcome.n > self.d else 5e-2

    def path(
        self,
        n_lambdas: int = 100,
        lambda_ratio: Optional[float] = None,
        lambdas: Optional[Sequence[float]] = None,
    ) -> LassoPath:
        if lambdas is None:
            if n_lambdas < 2:
                raise InputError("n_lambdas must be at least 2")
            ratio = lambda_ratio if lambda_ratio is not None else self.default_ratio()
            top = self.lambda_max()
            lambdas = top * np.logspace(0.0, np.log10(ratio), n_lambdas)
        lambdas = np.asarray(lambdas, dtype=float)
        if np.any(np.diff(lambdas) >= 0):
            raise InputError("lambdas must be strictly decreasing")

        fits: List[CoxFit] = []
        warm = None
        previous = None
        entry = np.full(self.d, np.nan)
        for lam in lambdas:
            current = self.fit(float(lam), warm_start=warm, previous_lam=previous)
            fits.append(current)
            warm = current.beta
            previous = float(lam)
            newly = np.isnan(entry) & (current.beta != 0)
            entry[newly] = lam
        return LassoPath(lambdas=lambdas, fits=fits, entry_lambda=entry)


def _sorted_outcome(outcome: CoxOutcome) -> CoxOutcome:
    """The same outcome re-expressed with rows already in time order."""
    return CoxOutcome.from_arrays(outcome.times[outcome.order], outcome.events[outcome.order])


def lambda_max(
    design: DesignLike,
    outcome: CoxOutcome,
    weights: Optional[PenaltyWeights] = None,
    constraint: Union[Constraint, str] = Constraint.NONE,
) -> float:
    """Smallest lambda at which all penalized coefficients are zero at the optimum.

    Raises:
        AllWeightsZero: No coordinate is penalized.
    """
    return CoxLassoProblem(design, outcome, weights, constraint).lambda_max()


def fit(
    design: DesignLike,
    outcome: CoxOutcome,
    lam: float,
    weights: Optional[PenaltyWeights] = None,
    constraint: Union[Constraint, str] = Constraint.NONE,
    warm_start: Optional[np.ndarray] = None,
    config: Optional[SolverConfig] = None,
) -> CoxFit:
    """Minimize ``nll + lam * sum(w |beta|)``; the fit carries ``converged=False`` on failure."""
    return CoxLassoProblem(design, outcome, weights, constraint, config).fit(lam, warm_start)


def fit_path(
    design: DesignLike,
    outcome: CoxOutcome,
    weights: Optional[PenaltyWeights] = None,
    constraint: Union[Constraint, str] = Constraint.NONE,
    n_lambdas: int = 100,
    lambda_ratio: Optional[float] = None,
    config: Optional[SolverConfig] = None,
    lambdas: Optional[Sequence[float]] = None,
) -> LassoPath:
    """Warm-started fits on log-spaced lambdas from ``lambda_max`` down to ``lambda_ratio * lambda_max``.

    The default ratio is ``1e-2`` when ``n > d`` and ``5e-2`` otherwise.
    """
    problem = CoxLassoProblem(design, outcome, weights, constraint, config)
    return problem.path(n_lambdas=n_lambdas, lambda_ratio=lambda_ratio, lambdas=lambdas)


def make_folds(events: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Event-stratified random fold labels ``0..n_folds-1``."""
    events = np.asarray(events)
    folds = np.empty(events.size, dtype=int)
    splitter = StratifiedKFold(n_splits=n_folds, shuffle=True, random_state=seed)
    for k, (_, test) in enumerate(splitter.split(np.zeros(events.size), events)):
        folds[test] = k
    return folds


def _fold_deviance(matrix, outcome: CoxOutcome, train: np.ndarray, weights, constraint, config, lambdas):
    train_outcome = outcome.subset(train)
    problem = CoxLassoProblem(matrix[train], train_outcome, weights, constraint, config)
    path = problem.path(lambdas=lambdas)
    deviance = np.empty(lambdas.size)
    for i, f in enumerate(path.fits):
        eta_full = np.asarray(matrix @ f.beta).ravel()
        full = log_partial_likelihood(outcome, eta_full)
        part = log_partial_likelihood(train_outcome, eta_full[train])
        deviance[i] = -2.0 * (full - part)
    return deviance


def cross_validate(
    design: DesignLike,
    outcome: CoxOutcome,
    weights: Optional[PenaltyWeights] = None,
    constraint: Union[Constraint, str] = Constraint.NONE,
    n_folds: int = 10,
    seed: int = 0,
    lambdas: Optional[Sequence[float]] = None,
    fold_assignments: Optional[np.ndarray] = None,
    cv_config: Optional[CvConfig] = None,
) -> CvResult:
    """K-fold cross-validated partial-likelihood deviance.

    Each fold contributes ``-2 [l_full(b_k) - l_train(b_k)]`` where ``b_k`` is fit without the
    fold and ``l`` is the unscaled log partial likelihood. Folds run through joblib and are
    assembled in fold order. A given ``cv_config`` supplies the fold count and seed in place
    of ``n_folds`` and ``seed``.

    Raises:
        FoldWithoutEvents: Some fold has no events.
    """
    if cv_config is None:
        cv_config = CvConfig(n_folds=n_folds, seed=seed)
    else:
        n_folds, seed = cv_config.n_folds, cv_config.seed
    matrix = as_matrix(design)
    if matrix.shape[0] != outcome.n:
        raise DimensionMismatch(f"design has {matrix.shape[0]} rows, outcome has {outcome.n} subjects")
    if fold_assignments is None:
        folds = make_folds(outcome.events, n_folds, seed)
    else:
        folds = np.asarray(fold_assignments, dtype=int)
        if folds.size != outcome.n:
            raise DimensionMismatch(f"{folds.size} fold labels for {outcome.n} subjects")
    labels = np.unique(folds)
    for k in labels:
        if not np.any(outcome.events[folds == k] == 1):
            raise FoldWithoutEvents(int(k))

    if lambdas is None:
        problem = CoxLassoProblem(matrix, outcome, weights, constraint, cv_config.solver)
        lambdas = problem.path(n_lambdas=cv_config.n_lambdas, lambda_ratio=cv_config.lambda_ratio).lambdas
    lambdas = np.asarray(lambdas, dtype=float)

    logger.info("Cross-validating %d lambdas over %d folds (n_jobs=%d)", lambdas.size, labels.size, cv_config.n_jobs)
    rows = Parallel(n_jobs=cv_config.n_jobs)(
        delayed(_fold_deviance)(
            matrix, outcome, np.flatnonzero(folds != k), weights, constraint, cv_config.solver, lambdas
        )
        for k in labels
    )
    fold_dev = np.vstack(rows)
    mean = fold_dev.mean(axis=0)
    se = fold_dev.std(axis=0, ddof=1) / np.sqrt(labels.size) if labels.size > 1 else np.zeros(lambdas.size)
    best = int(np.argmin(mean))
    within = np.flatnonzero(mean <= mean[best] + se[best])
    return CvResult(
        lambdas=lambdas,
        mean_cv_deviance=mean,
        se=se,
        lambda_min=float(lambdas[best]),
        lambda_1se=float(lambdas[within.min()]),
        fold_assignments=folds,
        fold_deviance=fold_dev,
        seed=seed if fold_assignments is None else None,
    )


def kkt_check(
    fit_result: CoxFit,
    design: DesignLike,
    outcome: CoxOutcome,
    weights: Optional[PenaltyWeights] = None,
    constraint: Union[Constraint, str] = Constraint.NONE,
) -> KktCertificate:
    """Certify the subgradient optimality conditions with ``tol = 1e-4 lam max(w) + 1e-8``."""
    problem = CoxLassoProblem(design, outcome, weights, constraint)
    grad = problem.gradient_at(fit_result.beta)
    residual = kkt_residuals(fit_result.beta, grad, fit_result.lam, problem._w_arr, problem.constraint)
    tol = kkt_tolerance(fit_result.lam, problem.weights)
    worst_k = int(np.argmax(residual)) if residual.size else None
    worst = float(residual[worst_k]) if residual.size else 0.0
    return KktCertificate(passed=worst <= tol, worst_violation=worst, worst_coordinate=worst_k, tolerance=tol)


def null_fit(outcome: CoxOutcome) -> CoxFit:
    """The covariate-free model: ``beta`` is empty and the linear predictor is zero."""
    value = negative_log_likelihood(outcome, np.zeros(outcome.n))
    return CoxFit(
        beta=np.zeros(0),
        lam=0.0,
        nll_value=value,
        objective_value=value,
        n_iterations=0,
        converged=True,
        n_obs=outcome.n,
    )


def require_converged(fit_result: CoxFit) -> CoxFit:
    if not fit_result.converged:
        raise NotConverged(fit_result.n_iterations, fit_result.lam)
    return fit_result
