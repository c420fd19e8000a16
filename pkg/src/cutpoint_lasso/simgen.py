"""Seeded survival simulations with known cut-points, and the benchmark runner.

Scenarios:
- 1: two predictors, step-function log-hazard with sharp cut-points
- 2: many predictors, a sparse subset active with the same step function
- 3: piecewise-linear "cut-regions" instead of sharp jumps
- 4: several predictors, each active one carrying exactly two cut-points

Event times are exponential with rate ``baseline_rate * exp(f(x))``; censoring is
``Uniform(0, c)`` with ``c`` calibrated so the expected censored fraction hits the target.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.optimize import brentq

from .config_manager import CvConfig, GridConfig
from .cox_core import CoxOutcome, baseline_from_eta, linear_predictor
from .data_model import SurvivalDataset
from .errors import CutpointError, EmptyReport, InvalidConfig
from .metrics import EvaluationBundle, aic, c_index, cutpoint_accuracy, default_time_grid, ibs
from .pipelines import (
    CutpointReport,
    LimitedCutConfig,
    LimitMode,
    Method,
    fit_binilasso,
    fit_minilasso_pipeline,
    limited_one_step,
    limited_two_step,
    refit_categorized,
)
from .solver import CoxFit, fit, null_fit

logger = logging.getLogger(__name__)

SCENARIO_DEFAULTS: Dict[int, Dict[str, Any]] = {
    1: {"p": 2, "sparsity": 1.0},
    2: {"p": 20, "sparsity": 0.2},
    3: {"p": 2, "sparsity": 1.0},
    4: {"p": 2, "sparsity": 1.0},
}
DEFAULT_CUTS = (0.3, 0.7)
DEFAULT_EFFECTS = (0.0, 1.0, 2.0)
DEFAULT_RAMPS = ((0.25, 0.40), (0.60, 0.80))
BENCHMARK_COLUMNS = ["scenario", "method", "replicate", "n", "p", "metric", "value", "seed"]
TIMING_COLUMNS = ["scenario", "method", "replicate", "n", "p", "seconds"]


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one simulation scenario.

    Attributes:
        scenario: Scenario number, 1 to 4.
        n: Number of subjects.
        p: Number of predictors.
        seed: Master seed; replicate ``r`` draws from ``SeedSequence([seed, r])``.
        true_cuts: Thresholds of every active feature.
        effect_sizes: Log-hazard on each interval, one more than ``true_cuts``.
        sparsity: Fraction of features that are active.
        censor_target: Expected censored fraction; 0 disables censoring.
        baseline_rate: Exponential baseline hazard.
        ramps: Scenario 3 cut-regions, one ``(start, end)`` per cut.
    """

    scenario: int
    n: int
    p: int
    seed: int = 0
    true_cuts: Tuple[float, ...] = DEFAULT_CUTS
    effect_sizes: Tuple[float, ...] = DEFAULT_EFFECTS
    sparsity: float = 1.0
    censor_target: float = 0.30
    baseline_rate: float = 0.1
    ramps: Tuple[Tuple[float, float], ...] = DEFAULT_RAMPS

    def __post_init__(self):
        object.__setattr__(self, "true_cuts", tuple(float(c) for c in self.true_cuts))
        object.__setattr__(self, "effect_sizes", tuple(float(e) for e in self.effect_sizes))
        object.__setattr__(self, "ramps", tuple((float(a), float(b)) for a, b in self.ramps))
        if self.scenario not in SCENARIO_DEFAULTS:
            raise InvalidConfig(f"scenario must be 1, 2, 3 or 4, got {self.scenario}")
        if self.n < 2:
            raise InvalidConfig("n must be at least 2")
        if self.p < 1:
            raise InvalidConfig("p must be at least 1")
        if not 0.0 < self.sparsity <= 1.0:
            raise InvalidConfig("sparsity must lie in (0, 1]")
        if not 0.0 <= self.censor_target < 1.0:
            raise InvalidConfig("censor_target must lie in [0, 1)")
        if self.baseline_rate <= 0:
            raise InvalidConfig("baseline_rate must be positive")
        cuts = np.asarray(self.true_cuts)
        if cuts.size == 0 or np.any(cuts <= 0) or np.any(cuts >= 1) or np.any(np.diff(cuts) <= 0):
            raise InvalidConfig("true_cuts must be strictly increasing and strictly inside (0, 1)")
        if len(self.effect_sizes) != cuts.size + 1:
            raise InvalidConfig("effect_sizes needs exactly one value more than true_cuts")
        if self.scenario == 3:
            if len(self.ramps) != cuts.size:
                raise InvalidConfig("scenario 3 needs one ramp per cut")
            edges = np.asarray(self.ramps).ravel()
            if np.any(edges <= 0) or np.any(edges >= 1) or np.any(np.diff(edges) <= 0):
                raise InvalidConfig("ramps must be disjoint, increasing and inside (0, 1)")

    @classmethod
    def for_scenario(cls, scenario: int, n: int, seed: int = 0, **overrides) -> "ScenarioConfig":
        """Scenario defaults; scenario 3 reports the ramp midpoints as its true cuts."""
        if scenario not in SCENARIO_DEFAULTS:
            raise InvalidConfig(f"scenario must be 1, 2, 3 or 4, got {scenario}")
        values: Dict[str, Any] = dict(SCENARIO_DEFAULTS[scenario])
        if scenario == 3:
            ramps = overrides.get("ramps", DEFAULT_RAMPS)
            values["true_cuts"] = tuple((a + b) / 2.0 for a, b in ramps)
        values.update(overrides)
        return cls(scenario=scenario, n=n, seed=seed, **values)

    @property
    def n_active(self) -> int:
        return max(1, int(round(self.sparsity * self.p)))

    def log_hazard_component(self, x: np.ndarray) -> np.ndarray:
        """Contribution of one active feature to the log-hazard."""
        x = np.asarray(x, dtype=float)
        effects = np.asarray(self.effect_sizes)
        if self.scenario == 3:
            knots, values = [], []
            for k, (a, b) in enumerate(self.ramps):
                knots.extend([a, b])
                values.extend([effects[k], effects[k + 1]])
            return np.interp(x, knots, values)
        return effects[np.searchsorted(np.asarray(self.true_cuts), x, side="left")]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "n": self.n,
            "p": self.p,
            "seed": self.seed,
            "true_cuts": list(self.true_cuts),
            "effect_sizes": list(self.effect_sizes),
            "sparsity": self.sparsity,
            "censor_target": self.censor_target,
            "baseline_rate": self.baseline_rate,
            "ramps": [list(r) for r in self.ramps],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioConfig":
        data = dict(data)
        if "ramps" in data:
            data["ramps"] = tuple(tuple(r) for r in data["ramps"])
        return cls(**data)


@dataclass(frozen=True, eq=False)
class SimulatedDataset:
    """A generated dataset with its ground truth."""

    dataset: SurvivalDataset
    config: ScenarioConfig
    replicate: int
    active: Tuple[str, ...]
    true_cuts: Dict[str, List[float]]
    log_hazard: np.ndarray
    censoring_bound: float

    def true_log_hazard(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        names = self.dataset.feature_names
        total = np.zeros(features.shape[0])
        for name in self.active:
            total += self.config.log_hazard_component(features[:, names.index(name)])
        return total

    @property
    def censored_fraction(self) -> float:
        return float(np.mean(self.dataset.events == 0))


def expected_censoring(bound: float, rates: np.ndarray) -> float:
    """``P(C < T)`` averaged over subjects for ``C ~ U(0, bound)`` and exponential ``T``."""
    x = rates * bound
    return float(np.mean(-np.expm1(-x) / x))


def calibrate_censoring(rates: np.ndarray, target: float) -> float:
    """Censoring bound whose expected censored fraction equals ``target``."""
    if target <= 0:
        return float("inf")
    rates = np.asarray(rates, dtype=float)
    lo = 1e-12 / rates.max()
    hi = 1.0 / rates.min()
    while expected_censoring(hi, rates) > target:
        hi *= 2.0
    return float(brentq(lambda c: expected_censoring(c, rates) - target, lo, hi, xtol=1e-12, rtol=1e-12))


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, replicate]))


def replicate_seed(seed: int, replicate: int) -> int:
    """Integer seed for CV folds of one replicate, independent of scheduling."""
    return int(np.random.SeedSequence([seed, replicate]).generate_state(1)[0])


def simulate(cfg: ScenarioConfig, replicate: int = 0) -> SimulatedDataset:
    """Draw one dataset; identical ``(cfg, replicate)`` gives bit-identical output."""
    rng = replicate_rng(cfg.seed, replicate)
    features = rng.uniform(0.0, 1.0, size=(cfg.n, cfg.p))
    exposures = rng.exponential(1.0, size=cfg.n)
    uniforms = rng.uniform(0.0, 1.0, size=cfg.n)

    names = tuple(f"x{j + 1}" for j in range(cfg.p))
    active = names[: cfg.n_active]
    f = np.zeros(cfg.n)
    for j in range(cfg.n_active):
        f += cfg.log_hazard_component(features[:, j])
    rates = cfg.baseline_rate * np.exp(f)
    event_times = exposures / rates

    bound = calibrate_censoring(rates, cfg.censor_target)
    if np.isinf(bound):
        times, events = event_times, np.ones(cfg.n, dtype=np.int8)
    else:
        censor_times = uniforms * bound
        events = (event_times <= censor_times).astype(np.int8)
        times = np.minimum(event_times, censor_times)
    if not np.any(events == 1):
        # Guarantee one event so tiny samples stay fittable.
        k = int(np.argmin(event_times))
        events[k], times[k] = 1, event_times[k]

    ds = SurvivalDataset(features=features, times=times, events=events, feature_names=names)
    truth = {name: list(cfg.true_cuts) for name in active}
    sim = SimulatedDataset(ds, cfg, replicate, active, truth, f, bound)
    logger.debug("Scenario %d replicate %d: censored fraction %.3f", cfg.scenario, replicate, sim.censored_fraction)
    return sim


@dataclass
class TrueModelResult:
    fit: CoxFit
    bundle: EvaluationBundle


def _null_bundle(outcome: CoxOutcome, time_grid: np.ndarray) -> EvaluationBundle:
    eta = np.zeros(outcome.n)
    return EvaluationBundle(
        aic=aic(null_fit(outcome)),
        ibs=ibs(baseline_from_eta(outcome, eta), eta, outcome, time_grid),
        c_index=0.5,
        n_cutpoints=0,
    )


def true_model_benchmark(sim: SimulatedDataset, time_grid: Optional[np.ndarray] = None) -> TrueModelResult:
    """Unpenalized Cox fit on the true log-hazard as a single covariate."""
    started = time.perf_counter()
    outcome = CoxOutcome.from_dataset(sim.dataset)
    if time_grid is None:
        time_grid = default_time_grid(outcome.times, outcome.events)
    column = sim.log_hazard.reshape(-1, 1)
    if np.ptp(column) == 0:
        return TrueModelResult(null_fit(outcome), _null_bundle(outcome, time_grid))
    result = fit(column, outcome, 0.0)
    eta = linear_predictor(column, result.beta, outcome)
    bundle = EvaluationBundle(
        aic=aic(result),
        ibs=ibs(baseline_from_eta(outcome, eta), eta, outcome, time_grid),
        c_index=c_index(eta, outcome),
        n_cutpoints=0,
        wall_time_seconds=time.perf_counter() - started,
    )
    return TrueModelResult(result, bundle)


def _estimate(
    ds: SurvivalDataset,
    method: Method,
    limit: Optional[LimitedCutConfig],
    grid_config: GridConfig,
    cv_config: CvConfig,
) -> CutpointReport:
    if limit is not None:
        cfg = replace(limit, method=method.value)
        if LimitMode(cfg.mode) is LimitMode.ONE_STEP:
            return limited_one_step(ds, cfg, grid_config, cv_config)
        return limited_two_step(ds, cfg, grid_config, cv_config)
    if method is Method.MINI:
        return fit_minilasso_pipeline(ds, grid_config, cv_config)[0]
    return fit_binilasso(ds, grid_config, cv_config)[0]


def _run_replicate(
    cfg: ScenarioConfig,
    replicate: int,
    methods: Sequence[Method],
    limit: Optional[LimitedCutConfig],
    grid_config: GridConfig,
    cv_config: CvConfig,
) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]], List[Dict[str, Any]]]:
    key = {"scenario": cfg.scenario, "replicate": replicate, "n": cfg.n, "p": cfg.p}
    records: List[Dict[str, Any]] = []
    timing: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []

    def emit(method: str, metrics: Dict[str, float]):
        for metric, value in metrics.items():
            records.append({**key, "method": method, "metric": metric, "value": float(value), "seed": cfg.seed})

    sim = simulate(cfg, replicate)
    ds = sim.dataset
    grid = default_time_grid(ds.times, ds.events)
    truth = true_model_benchmark(sim, grid)
    emit("true", {"aic": truth.bundle.aic, "ibs": truth.bundle.ibs, "c_index": truth.bundle.c_index})

    cv = replace(cv_config, seed=replicate_seed(cfg.seed, replicate))
    for method in methods:
        started = time.perf_counter()
        try:
            report = _estimate(ds, method, limit, grid_config, cv)
            seconds = time.perf_counter() - started
            try:
                bundle = refit_categorized(ds, report, grid).bundle
            except EmptyReport:
                bundle = _null_bundle(CoxOutcome.from_dataset(ds), grid)
            accuracy = cutpoint_accuracy(sim.true_cuts, report)
        except (CutpointError, ArithmeticError, ValueError) as exc:
            logger.warning("Scenario %d replicate %d %s failed: %s", cfg.scenario, replicate, method.value, exc)
            failures.append({**key, "method": method.value, "error": f"{type(exc).__name__}: {exc}"})
            continue
        timing.append({**key, "method": method.value, "seconds": seconds})
        emit(
            method.value,
            {
                "n_cutpoints": report.n_cutpoints,
                "aic": bundle.aic,
                "ibs": bundle.ibs,
                "c_index": bundle.c_index,
                "mean_abs_bias": accuracy.mean_abs_bias,
                "n_missed": accuracy.n_missed,
                "n_spurious": accuracy.n_spurious,
            },
        )
    return records, timing, failures


@dataclass
class BenchmarkReport:
    """Long-format benchmark results.

    Attributes:
        records: One row per scenario, n, replicate, method and metric.
        timing: Wall time of each estimator run, kept apart so ``records`` is deterministic.
        failures: Replicates whose estimator raised, with the error message.
        configs: The scenario configurations that were run.
    """

    records: pd.DataFrame
    timing: pd.DataFrame
    failures: List[Dict[str, Any]] = field(default_factory=list)
    configs: List[ScenarioConfig] = field(default_factory=list)

    def aggregate(self) -> pd.DataFrame:
        """Mean and sample standard deviation per scenario, size, method and metric; sd is 0 for one replicate."""
        keys = ["scenario", "n", "p", "method", "metric"]
        if self.records.empty:
            return pd.DataFrame(columns=keys + ["mean", "sd", "count"])
        grouped = self.records.groupby(keys, sort=True)["value"]
        summary = grouped.agg(mean="mean", sd=lambda v: v.std(ddof=1), count="count").reset_index()
        summary["sd"] = summary["sd"].fillna(0.0)
        return summary


def run_benchmark(
    scenarios: Sequence[ScenarioConfig],
    methods: Sequence[str] = ("bini", "mini"),
    replicates: int = 200,
    output_dir: Optional[Path] = None,
    n_jobs: int = 1,
    grid_config: Optional[GridConfig] = None,
    cv_config: Optional[CvConfig] = None,
    limit: Optional[LimitedCutConfig] = None,
) -> BenchmarkReport:
    """Run every method on ``replicates`` draws of each scenario.

    Scenario 4 caps each feature at two cut-points with the one-step procedure unless ``limit``
    says otherwise. A failing estimator run is logged and recorded, not raised.
    """
    if replicates < 1:
        raise InvalidConfig("replicates must be at least 1")
    method_enums = [Method(m) for m in methods]
    grid_config = grid_config or GridConfig()
    cv_config = cv_config or CvConfig()
    inner_cv = replace(cv_config, n_jobs=1) if n_jobs != 1 else cv_config

    jobs = []
    for cfg in scenarios:
        scenario_limit = limit
        if scenario_limit is None and cfg.scenario == 4:
            scenario_limit = LimitedCutConfig(m=2, mode=LimitMode.ONE_STEP.value)
        for r in range(replicates):
            jobs.append((cfg, r, scenario_limit))
    logger.info("Benchmark: %d scenario configs x %d replicates, methods %s", len(scenarios), replicates, methods)

    results = Parallel(n_jobs=n_jobs)(
        delayed(_run_replicate)(cfg, r, method_enums, lim, grid_config, inner_cv) for cfg, r, lim in jobs
    )
    records, timing, failures = [], [], []
    for rec, tim, fail in results:
        records.extend(rec)
        timing.extend(tim)
        failures.extend(fail)
    if failures:
        logger.warning("%d estimator runs failed", len(failures))

    report = BenchmarkReport(
        records=pd.DataFrame(records, columns=BENCHMARK_COLUMNS),
        timing=pd.DataFrame(timing, columns=TIMING_COLUMNS),
        failures=failures,
        configs=list(scenarios),
    )
    if output_dir is not None:
        write_benchmark(report, output_dir)
    return report


def write_benchmark(report: BenchmarkReport, output_dir: Path) -> List[Path]:
    """One metric CSV and one timing CSV per scenario, plus ``summary.csv`` and ``failures.csv``."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for scenario in sorted(set(report.records["scenario"]) | set(report.timing["scenario"])):
        path = output_dir / f"benchmark_scenario{scenario}.csv"
        rows = report.records[report.records["scenario"] == scenario]
        rows.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        written.append(path)
        path = output_dir / f"timing_scenario{scenario}.csv"
        report.timing[report.timing["scenario"] == scenario].to_csv(path, index=False, lineterminator="\n")
        written.append(path)
    path = output_dir / "summary.csv"
    report.aggregate().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    written.append(path)
    if report.failures:
        path = output_dir / "failures.csv"
        pd.DataFrame(report.failures).to_csv(path, index=False, lineterminator="\n")
        written.append(path)
    logger.info("Wrote %d benchmark files to %s", len(written), output_dir)
    return written
