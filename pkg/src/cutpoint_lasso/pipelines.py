"""End-to-end cut-point estimators and their evaluation.

- ``fit_binilasso``: lasso Cox over the cumulative design, lambda by CV
- ``fit_minilasso_pipeline``: the univariate-guided, sign-consistent variant
- ``limited_two_step`` / ``limited_one_step``: at most ``m`` cut-points per feature
- ``screen_features``: univariate continuous Cox ranking by AIC and IBS
- ``refit_categorized``: unpenalized refit at reported thresholds, with metrics
"""

import json
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .binarize import (
    CumulativeDesign,
    CutGrid,
    GridStrategy,
    build_cut_grid,
    cumulative_binarize,
    design_at_thresholds,
    design_rank_check,
)
from .config_manager import CvConfig, GridConfig
from .cox_core import CoxOutcome, baseline_from_eta, linear_predictor, log_partial_likelihood, univariate_newton
from .data_model import StandardizationParams, SurvivalDataset, standardize
from .errors import EmptyReport, InputError, InvalidConfig, NoEvaluableFolds, SingularRefit
from .metrics import EvaluationBundle, aic, c_index, default_time_grid, ibs
from .solver import Constraint, CoxFit, PenaltyWeights, cross_validate, fit, fit_path, make_folds, require_converged
from .unilasso import LooMethod, MiniLassoFit, fit_minilasso, minilasso_path

logger = logging.getLogger(__name__)


class Method(str, Enum):
    BINI = "bini"
    MINI = "mini"


class LimitMode(str, Enum):
    ONE_STEP = "one_step"
    TWO_STEP = "two_step"


class RankingRule(str, Enum):
    ENTRY_ORDER = "entry_order"
    MAX_ABS_COEF = "max_abs_coef"


@dataclass
class FeatureCuts:
    name: str
    thresholds: List[float]
    effects: List[float]


@dataclass
class CutpointReport:
    """Selected cut-points per feature with their effects.

    Attributes:
        method: ``bini`` or ``mini``.
        lam: Penalty at which the cut-points were read off.
        features: Per-feature increasing thresholds and effects (log-hazard jumps, or
            composite effects for ``mini``).
        grid: Provenance of the candidate grid (strategy, bins, thresholds, standardization).
        seed: Seed that fixed the CV folds.
        max_cuts: Per-feature cap for limited procedures.
        warnings: Dropped features and other recoverable conditions.
    """

    method: str
    lam: float
    features: List[FeatureCuts] = field(default_factory=list)
    grid: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    max_cuts: Optional[int] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def n_cutpoints(self) -> int:
        return sum(len(f.thresholds) for f in self.features)

    def thresholds_by_feature(self) -> Dict[str, List[float]]:
        return {f.name: list(f.thresholds) for f in self.features}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "lambda": self.lam,
            "features": [{"name": f.name, "thresholds": f.thresholds, "effects": f.effects} for f in self.features],
            "grid": self.grid,
            "seed": self.seed,
            "max_cuts": self.max_cuts,
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path: Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CutpointReport":
        for key in ("method", "lambda", "features"):
            if key not in data:
                raise InputError(f"Cut-point report is missing {key!r}")
        features = []
        for entry in data["features"]:
            thresholds = [float(t) for t in entry["thresholds"]]
            effects = [float(e) for e in entry.get("effects", [0.0] * len(thresholds))]
            if len(effects) != len(thresholds):
                name = entry["name"]
                raise InputError(f"Feature {name!r} has {len(thresholds)} thresholds but {len(effects)} effects")
            features.append(FeatureCuts(str(entry["name"]), thresholds, effects))
        return cls(
            method=str(data["method"]),
            lam=float(data["lambda"]) if data["lambda"] is not None else float("nan"),
            features=features,
            grid=dict(data.get("grid") or {}),
            seed=data.get("seed"),
            max_cuts=data.get("max_cuts"),
            warnings=list(data.get("warnings") or []),
        )

    @classmethod
    def from_json(cls, source) -> "CutpointReport":
        is_text = isinstance(source, str) and source.lstrip().startswith("{")
        text = source if is_text else Path(source).read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class LimitedCutConfig:
    """At most ``m`` cut-points per feature.

    Attributes:
        m: Per-feature cap.
        mode: ``one_step`` (one global path) or ``two_step`` (per-feature paths, then a
            combined lasso).
        ranking_rule: How columns are ranked along a path.
        method: Estimator used for the final stage.
    """

    m: int = 2
    mode: str = LimitMode.TWO_STEP.value
    ranking_rule: str = RankingRule.ENTRY_ORDER.value
    method: str = Method.BINI.value

    def __post_init__(self):
        if self.m < 1:
            raise InvalidConfig("m must be at least 1")
        LimitMode(self.mode)
        RankingRule(self.ranking_rule)
        Method(self.method)


@dataclass
class PreparedDesign:
    """Grid, design and outcome built from a dataset under a ``GridConfig``."""

    grid: CutGrid
    design: CumulativeDesign
    outcome: CoxOutcome
    standardization: Optional[StandardizationParams] = None

    def provenance(self, grid_config: GridConfig) -> Dict[str, Any]:
        data = {
            "strategy": self.grid.strategy.value,
            "bins_per_feature": grid_config.bins_per_feature,
            "boundary_indicators": grid_config.boundary_indicators,
            "d": self.grid.d,
            "thresholds": self.grid.to_dict(),
        }
        if self.standardization is not None:
            data["standardization"] = self.standardization.to_dict()
        return data

    def weights(self) -> Optional[PenaltyWeights]:
        if not self.design.penalty_exempt:
            return None
        return PenaltyWeights(self.design.penalty_weights())


def prepare_design(ds: SurvivalDataset, grid_config: Optional[GridConfig] = None) -> PreparedDesign:
    """Build the candidate grid and cumulative design.

    With ``standardize`` the grid is placed on standardized features and its thresholds mapped
    back to original units, which leaves the design unchanged.
    """
    grid_config = grid_config or GridConfig()
    params = None
    source = ds
    if grid_config.standardize:
        source, params = standardize(ds)
    grid = build_cut_grid(
        source,
        bins_per_feature=grid_config.bins_per_feature,
        strategy=GridStrategy(grid_config.strategy),
        explicit=grid_config.explicit,
    )
    if params is not None:
        grid = CutGrid(
            feature_names=grid.feature_names,
            feature_indices=grid.feature_indices,
            thresholds=tuple(
                np.asarray(params.invert_thresholds(j, t)) for j, t in zip(grid.feature_indices, grid.thresholds)
            ),
            strategy=grid.strategy,
            warnings=grid.warnings,
        )
    if grid.d == 0:
        raise InputError("No feature has a usable candidate grid")
    design = cumulative_binarize(ds, grid, boundary_indicators=grid_config.boundary_indicators)
    return PreparedDesign(grid, design, CoxOutcome.from_dataset(ds), params)


def _report(
    prepared: PreparedDesign,
    effects: np.ndarray,
    method: Method,
    lam: float,
    grid_config: GridConfig,
    seed: Optional[int],
    columns: Optional[Sequence[int]] = None,
    max_cuts: Optional[int] = None,
) -> CutpointReport:
    """Collect nonzero, penalized columns into per-feature increasing cut lists."""
    design = prepared.design
    columns = range(design.shape[1]) if columns is None else columns
    by_feature: Dict[int, List[Tuple[float, float]]] = {}
    for k in columns:
        if effects[k] == 0 or k in design.penalty_exempt:
            continue
        meta = design.column_meta[k]
        by_feature.setdefault(meta.feature_index, []).append((meta.threshold, float(effects[k])))
    features = []
    for j in sorted(by_feature):
        pairs = sorted(by_feature[j])
        features.append(
            FeatureCuts(prepared.grid.feature_names[j], [t for t, _ in pairs], [e for _, e in pairs])
        )
    return CutpointReport(
        method=method.value,
        lam=float(lam),
        features=features,
        grid=prepared.provenance(grid_config),
        seed=seed,
        max_cuts=max_cuts,
        warnings=list(prepared.grid.warnings),
    )


def _lasso_with_cv(design, outcome, weights, cv_config: CvConfig, fold_assignments=None):
    path = fit_path(
        design,
        outcome,
        weights,
        Constraint.NONE,
        n_lambdas=cv_config.n_lambdas,
        lambda_ratio=cv_config.lambda_ratio,
        config=cv_config.solver,
    )
    cv = cross_validate(
        design,
        outcome,
        weights,
        Constraint.NONE,
        n_folds=cv_config.n_folds,
        seed=cv_config.seed,
        lambdas=path.lambdas,
        fold_assignments=fold_assignments,
        cv_config=cv_config,
    )
    lam = cv.select(cv_config.selection)
    chosen = path.fits[int(np.flatnonzero(path.lambdas == lam)[0])]
    return path, cv, chosen


def fit_binilasso(
    ds: SurvivalDataset,
    grid_config: Optional[GridConfig] = None,
    cv_config: Optional[CvConfig] = None,
    fold_assignments: Optional[np.ndarray] = None,
) -> Tuple[CutpointReport, CoxFit]:
    """Lasso Cox over the full cumulative design; cut-points are thresholds with nonzero coefficients."""
    grid_config = grid_config or GridConfig()
    cv_config = cv_config or CvConfig()
    prepared = prepare_design(ds, grid_config)
    _, _, chosen = _lasso_with_cv(prepared.design, prepared.outcome, prepared.weights(), cv_config, fold_assignments)
    report = _report(prepared, chosen.beta, Method.BINI, chosen.lam, grid_config, cv_config.seed)
    logger.info("biniLasso: lambda=%.6g, %d cut-points", chosen.lam, report.n_cutpoints)
    return report, chosen


def fit_minilasso_pipeline(
    ds: SurvivalDataset,
    grid_config: Optional[GridConfig] = None,
    cv_config: Optional[CvConfig] = None,
    loo_method: str = LooMethod.EXACT.value,
    fold_assignments: Optional[np.ndarray] = None,
) -> Tuple[CutpointReport, MiniLassoFit]:
    """Univariate-guided variant; reported effects are composite effects ``theta * slope``."""
    grid_config = grid_config or GridConfig()
    cv_config = cv_config or CvConfig()
    prepared = prepare_design(ds, grid_config)
    result = fit_minilasso(
        prepared.design,
        prepared.outcome,
        prepared.weights(),
        cv_config,
        method=loo_method,
        fold_assignments=fold_assignments,
    )
    report = _report(prepared, result.composite_effects, Method.MINI, result.lam, grid_config, cv_config.seed)
    logger.info("miniLasso: lambda=%.6g, %d cut-points", result.lam, report.n_cutpoints)
    return report, result


def rank_columns(
    columns: Sequence[int],
    entry_lambda: np.ndarray,
    coefs: np.ndarray,
    threshold_index: Sequence[int],
    rule: RankingRule = RankingRule.ENTRY_ORDER,
) -> List[int]:
    """Order candidate columns from most to least influential along a path.

    ``entry_order`` puts earlier entrants (larger entry lambda) first, then larger maximal
    ``|coef|``, then the lower threshold. ``max_abs_coef`` uses ``|coef|`` first and entry order
    second. Columns that never enter rank last.
    """
    peak = np.abs(coefs).max(axis=0) if coefs.size else np.zeros(len(columns))

    def key(pos: int):
        entry = entry_lambda[pos]
        entry_key = -entry if np.isfinite(entry) else np.inf
        if rule is RankingRule.MAX_ABS_COEF:
            return (-peak[pos], entry_key, threshold_index[pos])
        return (entry_key, -peak[pos], threshold_index[pos])

    order = sorted(range(len(columns)), key=key)
    return [int(columns[pos]) for pos in order]


def _path_for(design, outcome, weights, method: Method, cv_config: CvConfig, loo_method: str):
    """Entry lambdas, effect path (coefficients or composite effects), lambdas and fits for one design."""
    if method is Method.MINI:
        staged = minilasso_path(design, outcome, weights, cv_config, loo_method)
        if staged.path is None:
            return staged.entry_lambda(), staged.composite_matrix(), np.zeros(0), []
        return staged.entry_lambda(), staged.composite_matrix(), staged.path.lambdas, staged.path.fits
    path = fit_path(
        design,
        outcome,
        weights,
        Constraint.NONE,
        n_lambdas=cv_config.n_lambdas,
        lambda_ratio=cv_config.lambda_ratio,
        config=cv_config.solver,
    )
    return path.entry_lambda, path.coef_matrix(), path.lambdas, path.fits


def _feature_ranking(prepared: PreparedDesign, j: int, cfg: LimitedCutConfig, cv_config: CvConfig, loo_method: str):
    columns = prepared.design.columns_for_feature(j)
    sub = prepared.design.select(columns)
    raw = sub.penalty_weights()
    if not np.any(raw > 0):
        return columns
    weights = PenaltyWeights(raw) if sub.penalty_exempt else None
    entry, coefs, _, _ = _path_for(sub, prepared.outcome, weights, Method(cfg.method), cv_config, loo_method)
    thresholds = [m.threshold_index for m in sub.column_meta]
    return rank_columns(columns, entry, coefs, thresholds, RankingRule(cfg.ranking_rule))


def limited_two_step(
    ds: SurvivalDataset,
    cfg: LimitedCutConfig,
    grid_config: Optional[GridConfig] = None,
    cv_config: Optional[CvConfig] = None,
    loo_method: str = LooMethod.EXACT.value,
    strict: bool = False,
) -> CutpointReport:
    """Per-feature paths keep the top ``m`` columns of each feature; one combined fit then picks cut-points.

    Never reports more than ``m`` cut-points for a feature. With ``strict`` an unconverged final
    fit raises ``NotConverged``.
    """
    if LimitMode(cfg.mode) is not LimitMode.TWO_STEP:
        raise InvalidConfig("limited_two_step requires mode='two_step'")
    grid_config = grid_config or GridConfig()
    cv_config = cv_config or CvConfig()
    prepared = prepare_design(ds, grid_config)
    blocks = prepared.design.feature_blocks()

    rankings = Parallel(n_jobs=cv_config.n_jobs)(
        delayed(_feature_ranking)(prepared, j, cfg, cv_config, loo_method) for j in sorted(blocks)
    )
    exempt = prepared.design.penalty_exempt
    retained: List[int] = []
    for ranked in rankings:
        penalized = [k for k in ranked if k not in exempt]
        retained.extend(penalized[: cfg.m])
        retained.extend(k for k in ranked if k in exempt)
    retained = sorted(retained)
    logger.info("Two-step: retained %d of %d columns (m=%d)", len(retained), prepared.design.shape[1], cfg.m)

    sub = prepared.design.select(retained)
    weights = PenaltyWeights(sub.penalty_weights()) if sub.penalty_exempt else None
    effects = np.zeros(prepared.design.shape[1])
    if Method(cfg.method) is Method.MINI:
        result = fit_minilasso(sub, prepared.outcome, weights, cv_config, method=loo_method)
        effects[retained] = result.composite_effects
        lam = result.lam
        final = [result.fit]
    else:
        _, _, chosen = _lasso_with_cv(sub, prepared.outcome, weights, cv_config)
        effects[retained] = chosen.beta
        lam = chosen.lam
        final = [chosen]
    if strict:
        _require_converged(final)
    return _report(prepared, effects, Method(cfg.method), lam, grid_config, cv_config.seed, retained, cfg.m)


def _require_converged(fits: Sequence[Optional[CoxFit]]) -> None:
    for fit_result in fits:
        if fit_result is not None:
            require_converged(fit_result)


def _effect_from_path(coefs: np.ndarray) -> np.ndarray:
    """Coefficient at the smallest lambda, or the last nonzero value for columns that left the model."""
    out = np.zeros(coefs.shape[1])
    for k in range(coefs.shape[1]):
        nonzero = np.flatnonzero(coefs[:, k])
        if nonzero.size:
            out[k] = coefs[nonzero[-1], k]
    return out


def limited_one_step(
    ds: SurvivalDataset,
    cfg: LimitedCutConfig,
    grid_config: Optional[GridConfig] = None,
    cv_config: Optional[CvConfig] = None,
    loo_method: str = LooMethod.EXACT.value,
    strict: bool = False,
) -> CutpointReport:
    """One global path; each feature keeps its top ``m`` columns by ``ranking_rule``.

    Effects are read off the path: the coefficient at its smallest lambda, or the last nonzero
    value for a column that later dropped out. With ``strict`` every path fit must converge.
    """
    if LimitMode(cfg.mode) is not LimitMode.ONE_STEP:
        raise InvalidConfig("limited_one_step requires mode='one_step'")
    grid_config = grid_config or GridConfig()
    cv_config = cv_config or CvConfig()
    if ds.p > 2:
        logger.warning("One-step limited procedure is intended for one or two features, got p=%d", ds.p)
    prepared = prepare_design(ds, grid_config)
    design = prepared.design
    entry, coefs, lambdas, fits = _path_for(
        design, prepared.outcome, prepared.weights(), Method(cfg.method), cv_config, loo_method
    )
    if strict:
        _require_converged(fits)
    effects_all = _effect_from_path(coefs) if coefs.size else np.zeros(design.shape[1])
    thresholds = [m.threshold_index for m in design.column_meta]

    keep: List[int] = []
    for j, columns in sorted(design.feature_blocks().items()):
        local = rank_columns(
            columns,
            entry[columns],
            coefs[:, columns] if coefs.size else np.zeros((0, len(columns))),
            [thresholds[k] for k in columns],
            RankingRule(cfg.ranking_rule),
        )
        penalized = [k for k in local if k not in design.penalty_exempt]
        keep.extend(penalized[: cfg.m])
    effects = np.zeros(design.shape[1])
    effects[keep] = effects_all[keep]
    lam = float(lambdas[-1]) if lambdas.size else float("nan")
    return _report(prepared, effects, Method(cfg.method), lam, grid_config, cv_config.seed, sorted(keep), cfg.m)


@dataclass
class ScreeningResult:
    """Features kept by univariate screening and the full ranking table."""

    selected: List[str]
    table: pd.DataFrame


def _screen_one(x: np.ndarray, outcome: CoxOutcome, grid: np.ndarray) -> Dict[str, Any]:
    result = univariate_newton(x, outcome)
    eta = result.slope * x
    log_pl = log_partial_likelihood(outcome, eta)
    bh = baseline_from_eta(outcome, eta)
    return {
        "slope": result.slope,
        "converged": result.converged,
        "aic": 2.0 - 2.0 * log_pl,
        "ibs": ibs(bh, eta, outcome, grid),
    }


def screen_features(ds: SurvivalDataset, top_k_per_metric: int = 50, n_jobs: int = 1) -> ScreeningResult:
    """Rank features by the AIC and IBS of univariate continuous Cox fits.

    Returns the union of the top ``k`` per metric (at most ``2k`` features). Ties in either
    metric are broken by feature name. Constant features are skipped.
    """
    if top_k_per_metric < 1:
        raise InputError("top_k_per_metric must be at least 1")
    outcome = CoxOutcome.from_dataset(ds)
    grid = default_time_grid(ds.times, ds.events)
    names = [name for j, name in enumerate(ds.feature_names) if np.ptp(ds.features[:, j]) > 0]
    index = {name: j for j, name in enumerate(ds.feature_names)}
    rows = Parallel(n_jobs=n_jobs)(delayed(_screen_one)(ds.features[:, index[name]], outcome, grid) for name in names)

    table = pd.DataFrame(rows, index=pd.Index(names, name="feature")).reset_index()
    if table.empty:
        return ScreeningResult([], table)
    table["aic_rank"] = _rank(table, "aic")
    table["ibs_rank"] = _rank(table, "ibs")
    chosen = table[(table["aic_rank"] <= top_k_per_metric) | (table["ibs_rank"] <= top_k_per_metric)]
    chosen = chosen.assign(best_rank=np.minimum(chosen["aic_rank"], chosen["ibs_rank"]))
    selected = chosen.sort_values(["best_rank", "feature"], kind="mergesort")["feature"].tolist()
    logger.info("Screening kept %d of %d features", len(selected), ds.p)
    table = table.sort_values(["aic_rank", "feature"], kind="mergesort").reset_index(drop=True)
    return ScreeningResult(selected, table)


def _rank(table: pd.DataFrame, column: str) -> pd.Series:
    order = table.sort_values([column, "feature"], kind="mergesort").index
    ranks = pd.Series(0, index=table.index, dtype=int)
    ranks.loc[order] = np.arange(1, len(order) + 1)
    return ranks


@dataclass
class RefitResult:
    """Unpenalized Cox fit on the reported thresholds and its metrics."""

    fit: CoxFit
    bundle: EvaluationBundle
    design: CumulativeDesign


def _collisions(design: CumulativeDesign) -> List[str]:
    report = design_rank_check(design)
    if report.full_rank:
        return []
    labels = [f"{m.feature_name}@{m.threshold:.6g}" for m in design.column_meta]
    if report.duplicated:
        return ["=".join(labels[k] for k in group) for group in report.duplicated]
    return labels


def refit_categorized(
    ds: SurvivalDataset,
    report: CutpointReport,
    time_grid: Optional[np.ndarray] = None,
) -> RefitResult:
    """Unpenalized Cox fit on indicators at exactly the reported thresholds, with AIC, IBS and C-index.

    Raises:
        EmptyReport: The report has no thresholds.
        SingularRefit: The indicator design is rank deficient.
    """
    if report.n_cutpoints == 0:
        raise EmptyReport()
    started = time.perf_counter()
    design = design_at_thresholds(ds, report.thresholds_by_feature())
    collisions = _collisions(design)
    if collisions:
        raise SingularRefit(collisions)
    outcome = CoxOutcome.from_dataset(ds)
    result = fit(design, outcome, 0.0)
    if not result.converged:
        logger.warning("Unpenalized refit did not converge (KKT violation %.3g)", result.kkt_violation)
    eta = linear_predictor(design, result.beta, outcome)
    bundle = EvaluationBundle(
        aic=aic(result),
        ibs=ibs(baseline_from_eta(outcome, eta), eta, outcome, time_grid),
        c_index=c_index(eta, outcome),
        n_cutpoints=report.n_cutpoints,
        wall_time_seconds=time.perf_counter() - started,
    )
    return RefitResult(result, bundle, design)


def evaluate_report_cv(
    ds: SurvivalDataset, report: CutpointReport, n_folds: int = 10, seed: int = 0
) -> EvaluationBundle:
    """Out-of-fold IBS and C-index of the categorized model; AIC from the full-data refit.

    Each fold refits on its training part, evaluates on the held-out part, and takes censoring
    weights from the training part. Fold metrics are averaged over the folds with events on
    both sides.

    Raises:
        NoEvaluableFolds: Every fold was skipped.
    """
    full = refit_categorized(ds, report)
    folds = make_folds(ds.events, n_folds, seed)
    thresholds = report.thresholds_by_feature()
    ibs_values, c_values = [], []
    for k in range(n_folds):
        train, test = np.flatnonzero(folds != k), np.flatnonzero(folds == k)
        train_ds, test_ds = ds.subset(train), ds.subset(test)
        if not np.any(test_ds.events == 1) or not np.any(train_ds.events == 1):
            continue
        train_design = design_at_thresholds(train_ds, thresholds)
        train_outcome = CoxOutcome.from_dataset(train_ds)
        result = fit(train_design, train_outcome, 0.0)
        train_eta = linear_predictor(train_design, result.beta, train_outcome)
        test_outcome = CoxOutcome.from_dataset(test_ds)
        test_eta = linear_predictor(design_at_thresholds(test_ds, thresholds), result.beta, test_outcome)
        grid = default_time_grid(test_ds.times, test_ds.events, n_points=50)
        grid = grid[grid <= test_outcome.event_times.max()]
        baseline = baseline_from_eta(train_outcome, train_eta)
        ibs_values.append(ibs(baseline, test_eta, test_outcome, grid, censoring_outcome=train_outcome))
        c_values.append(c_index(test_eta, test_outcome))
    if not ibs_values:
        raise NoEvaluableFolds(n_folds)
    return EvaluationBundle(
        aic=full.bundle.aic,
        ibs=float(np.mean(ibs_values)),
        c_index=float(np.mean(c_values)),
        n_cutpoints=report.n_cutpoints,
        wall_time_seconds=full.bundle.wall_time_seconds,
    )
