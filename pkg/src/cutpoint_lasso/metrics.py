"""Model-quality and cut-point accuracy metrics.

- AIC of unpenalized refits
- Integrated Brier score with inverse-probability-of-censoring weights
- Harrell's concordance index
- Distance between estimated and true cut-points (greedy nearest matching)
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from lifelines import KaplanMeierFitter
from lifelines.utils import concordance_index
from scipy.integrate import trapezoid

from .cox_core import BaselineHazard, CoxOutcome, predict_survival
from .errors import DegenerateCensoringKM, DimensionMismatch, InputError, NoComparablePairs, PenalizedFitRejected
from .solver import CoxFit

logger = logging.getLogger(__name__)

MATCHING_RULE = "greedy_nearest"


@dataclass
class EvaluationBundle:
    """Quality of one categorized model.

    Attributes:
        aic: Akaike information criterion of the unpenalized refit.
        ibs: Integrated Brier score in ``[0, 1]``.
        c_index: Harrell's C in ``[0, 1]``.
        n_cutpoints: Number of cut-points in the evaluated model.
        wall_time_seconds: Time spent producing the model (excluded from reproducible output).
    """

    aic: float
    ibs: float
    c_index: float
    n_cutpoints: int
    wall_time_seconds: float = 0.0

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        data = asdict(self)
        if not include_timing:
            data.pop("wall_time_seconds")
        return data

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)

    def to_frame(self, include_timing: bool = True) -> pd.DataFrame:
        return pd.DataFrame([self.to_dict(include_timing)])

    def write_csv(self, path: Path, include_timing: bool = True) -> None:
        self.to_frame(include_timing).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvaluationBundle":
        return cls(
            aic=float(data["aic"]),
            ibs=float(data["ibs"]),
            c_index=float(data["c_index"]),
            n_cutpoints=int(data["n_cutpoints"]),
            wall_time_seconds=float(data.get("wall_time_seconds", 0.0)),
        )


@dataclass
class CutMatch:
    feature: str
    truth: float
    estimate: Optional[float]

    @property
    def distance(self) -> Optional[float]:
        return None if self.estimate is None else self.estimate - self.truth


@dataclass
class CutpointAccuracy:
    """Greedy nearest matching of estimated to true cut-points, per feature."""

    matches: List[CutMatch] = field(default_factory=list)
    n_missed: int = 0
    n_spurious: int = 0
    matching_rule: str = MATCHING_RULE

    @property
    def matched(self) -> List[CutMatch]:
        return [m for m in self.matches if m.estimate is not None]

    @property
    def mean_abs_bias(self) -> float:
        pairs = self.matched
        return float(np.mean([abs(m.distance) for m in pairs])) if pairs else float("nan")

    @property
    def mean_bias(self) -> float:
        pairs = self.matched
        return float(np.mean([m.distance for m in pairs])) if pairs else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "matching_rule": self.matching_rule,
            "matches": [
                {"feature": m.feature, "truth": m.truth, "estimate": m.estimate, "distance": m.distance}
                for m in self.matches
            ],
            "mean_abs_bias": self.mean_abs_bias,
            "n_missed": self.n_missed,
            "n_spurious": self.n_spurious,
        }


@dataclass(frozen=True, eq=False)
class KaplanMeier:
    """Product-limit estimate (lifelines KaplanMeierFitter) as a right-continuous step function."""

    times: np.ndarray
    survival: np.ndarray

    def at(self, t) -> np.ndarray:
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right")
        return np.concatenate([[1.0], self.survival])[idx]

    def before(self, t) -> np.ndarray:
        """Left limit ``S(t-)``."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="left")
        return np.concatenate([[1.0], self.survival])[idx]


def kaplan_meier(times, events) -> KaplanMeier:
    """Kaplan-Meier estimate of the distribution of ``times`` whose observed flags are ``events``."""
    times = np.asarray(times, dtype=float)
    events = np.asarray(events).astype(bool)
    if times.size == 0:
        return KaplanMeier(np.zeros(0), np.zeros(0))
    curve = KaplanMeierFitter().fit(times, event_observed=events).survival_function_.iloc[:, 0]
    return KaplanMeier(curve.index.to_numpy(dtype=float), curve.to_numpy(dtype=float))


def censoring_km(times, events) -> KaplanMeier:
    """Kaplan-Meier estimate ``G`` of the censoring distribution."""
    return kaplan_meier(times, 1 - np.asarray(events))


def aic(fit: CoxFit) -> float:
    """``2 k - 2 logPL`` with ``logPL = -n * nll``.

    Raises:
        PenalizedFitRejected: ``fit`` has a positive penalty.
    """
    if fit.lam > 0:
        raise PenalizedFitRejected(fit.lam)
    if fit.n_obs <= 0:
        raise InputError("fit does not record its sample size")
    log_pl = -fit.n_obs * fit.nll_value
    return 2.0 * fit.beta.size - 2.0 * log_pl


def default_time_grid(times, events, n_points: int = 100) -> np.ndarray:
    """Equally spaced points between the 5th and 95th percentiles of observed event times."""
    event_times = np.asarray(times, dtype=float)[np.asarray(events) == 1]
    if event_times.size == 0:
        raise InputError("No event times to build a time grid from")
    lo, hi = np.percentile(event_times, [5, 95])
    if hi <= lo:
        return np.array([lo])
    return np.linspace(lo, hi, n_points)


def _usable_grid(time_grid: np.ndarray, g: KaplanMeier) -> np.ndarray:
    keep = g.at(time_grid) > 0
    if not keep.any():
        raise DegenerateCensoringKM(float(time_grid[0]))
    if not keep.all():
        cut = float(time_grid[~keep][0])
        logger.warning("Censoring survival reaches zero at t=%.6g; truncating the time grid", cut)
        time_grid = time_grid[keep]
    return time_grid


def brier_score(survival_at_t, t: float, times, events, censoring: Optional[KaplanMeier] = None) -> float:
    """IPCW Brier score at time ``t`` for per-subject survival probabilities ``S_i(t)``."""
    survival_at_t = np.asarray(survival_at_t, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events)
    if survival_at_t.shape != times.shape:
        raise DimensionMismatch("one survival probability per subject is required")
    g = censoring if censoring is not None else censoring_km(times, events)
    g_t = float(g.at(t))
    if g_t <= 0:
        raise DegenerateCensoringKM(t)
    died = (times <= t) & (events == 1)
    alive = times > t
    weights = np.zeros(times.size)
    weights[died] = 1.0 / g.before(times[died])
    weights[alive] = 1.0 / g_t
    residual = np.where(died, survival_at_t**2, (1.0 - survival_at_t) ** 2)
    return float(np.mean(weights * residual))


def integrated_brier_score(
    survival: np.ndarray,
    time_grid,
    times,
    events,
    censoring: Optional[KaplanMeier] = None,
) -> float:
    """Trapezoidal average of IPCW Brier scores over ``time_grid``.

    ``survival`` is ``(n_subjects, len(time_grid))``. A single grid point returns the Brier
    score there. Grid points where the censoring survival is zero are dropped with a warning.
    """
    survival = np.atleast_2d(np.asarray(survival, dtype=float))
    grid = np.asarray(time_grid, dtype=float).ravel()
    if survival.shape[1] != grid.size:
        raise DimensionMismatch(f"{survival.shape[1]} survival columns for {grid.size} grid points")
    g = censoring if censoring is not None else censoring_km(times, events)
    usable = _usable_grid(grid, g)
    columns = np.flatnonzero(np.isin(grid, usable))
    scores = np.array([brier_score(survival[:, j], grid[j], times, events, g) for j in columns])
    if scores.size == 1:
        return float(scores[0])
    span = grid[columns[-1]] - grid[columns[0]]
    return float(trapezoid(scores, grid[columns]) / span)


def ibs(
    bh: BaselineHazard,
    lp,
    outcome: CoxOutcome,
    time_grid=None,
    censoring_outcome: Optional[CoxOutcome] = None,
) -> float:
    """Integrated Brier score of a Cox model on ``outcome``.

    Censoring weights come from ``censoring_outcome`` (the training data) when given, else from
    ``outcome`` itself.
    """
    lp = np.asarray(lp, dtype=float).ravel()
    if lp.size != outcome.n:
        raise DimensionMismatch(f"{lp.size} linear predictors for {outcome.n} subjects")
    if time_grid is None:
        time_grid = default_time_grid(outcome.times, outcome.events)
    grid = np.asarray(time_grid, dtype=float).ravel()
    max_event = float(outcome.event_times.max())
    if np.any(grid > max_event):
        logger.warning("Dropping time-grid points after the last event time %.6g", max_event)
        grid = grid[grid <= max_event]
    if grid.size == 0 or np.any(grid <= 0):
        raise InputError("time grid must lie within (0, max event time]")
    source = censoring_outcome if censoring_outcome is not None else outcome
    g = censoring_km(source.times, source.events)
    survival = predict_survival(bh, lp, grid)
    return integrated_brier_score(survival, grid, outcome.times, outcome.events, g)


def c_index(lp, outcome: CoxOutcome) -> float:
    """Harrell's C: over pairs where the earlier time is an event, the fraction in which the
    earlier subject has the higher ``lp``; tied scores count one half.

    A censoring time equal to an event time counts as outliving that event.

    Raises:
        NoComparablePairs: No usable pair exists.
    """
    lp = np.asarray(lp, dtype=float).ravel()
    if lp.size != outcome.n:
        raise DimensionMismatch(f"{lp.size} risk scores for {outcome.n} subjects")
    try:
        return float(concordance_index(outcome.times, -lp, outcome.events))
    except ZeroDivisionError as exc:
        raise NoComparablePairs() from exc


def _thresholds_by_feature(report) -> Dict[str, List[float]]:
    if hasattr(report, "thresholds_by_feature"):
        return report.thresholds_by_feature()
    return {name: list(values) for name, values in report.items()}


def cutpoint_accuracy(true_cuts: Mapping[str, Sequence[float]], report) -> CutpointAccuracy:
    """Match each true cut-point, in ascending order, to its nearest unmatched estimate.

    Signed distance is ``estimate - truth``. Among equidistant estimates the lower one wins, so
    an estimate equidistant from two truths goes to the lower truth.
    """
    estimates = _thresholds_by_feature(report)
    result = CutpointAccuracy()
    for name in sorted(set(true_cuts) | set(estimates)):
        truths = sorted(float(t) for t in true_cuts.get(name, ()))
        pool = sorted(float(e) for e in estimates.get(name, ()))
        for truth in truths:
            if not pool:
                result.matches.append(CutMatch(name, truth, None))
                result.n_missed += 1
                continue
            distances = np.abs(np.asarray(pool) - truth)
            best = int(np.argmin(distances))
            result.matches.append(CutMatch(name, truth, pool.pop(best)))
        result.n_spurious += len(pool)
    return result


def relative_metrics(bundle: EvaluationBundle, baseline: EvaluationBundle) -> Dict[str, float]:
    """Ratios of each quality metric to a baseline model's."""

    def ratio(a: float, b: float) -> float:
        return float(a / b) if b != 0 else float("nan")

    return {
        "relative_aic": ratio(bundle.aic, baseline.aic),
        "relative_ibs": ratio(bundle.ibs, baseline.ibs),
        "relative_c_index": ratio(bundle.c_index, baseline.c_index),
    }
