"""Run configuration management.

Handles configuration for:
- Candidate grid construction (bins, strategy, boundary indicators)
- Solver tolerances and iteration caps
- Cross-validation (folds, seed, lambda path, selection rule)
- Simulation and benchmark defaults
- Runtime settings (threads, log level), overridable from the environment
"""

import copy
import json
import logging
import os
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from .errors import InvalidConfig

logger = logging.getLogger(__name__)

CONFIG_FILE = Path("cutpoint_config.json")
_LOCK = threading.Lock()

DEFAULT_CONFIG = {
    "grid": {
        "bins_per_feature": 50,
        "strategy": "quantile",  # quantile | uniform | explicit
        "boundary_indicators": False,
        "standardize": False,
    },
    "solver": {
        "tol_objective": 1e-7,
        "tol_coef": 1e-9,
        "max_cycles": 10000,
        "max_step": 2.0,
        "strong_rules": True,
    },
    "cv": {
        "n_folds": 10,
        "seed": 0,
        "n_lambdas": 100,
        "lambda_ratio": None,  # None: 1e-2 when n > d else 5e-2
        "selection": "lambda_min",  # lambda_min | lambda_1se
    },
    "simulation": {
        "baseline_rate": 0.1,
        "censor_target": 0.30,
    },
    "benchmark": {
        "replicates": 200,
        "methods": ["bini", "mini"],
    },
    "runtime": {
        "threads": 1,
        "log_level": "INFO",
    },
}

# Environment variable -> (section, key, parser)
ENV_OVERRIDES = {
    "CUTPOINT_THREADS": ("runtime", "threads", int),
    "CUTPOINT_LOG_LEVEL": ("runtime", "log_level", str),
    "CUTPOINT_SEED": ("cv", "seed", int),
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def load_config(path: Optional[Path] = None, use_env: bool = True) -> Dict[str, Any]:
    """Load configuration from a JSON file merged over the defaults.

    Args:
        path: Optional JSON file; defaults to ``CONFIG_FILE`` when it exists.
        use_env: Apply ``CUTPOINT_*`` environment overrides (``.env`` is read first).

    Returns:
        A fresh nested dict; callers may mutate it freely.

    Raises:
        InvalidConfig: The file exists but is not valid JSON or not an object.
    """
    config = copy.deepcopy(DEFAULT_CONFIG)
    config_path = Path(path) if path is not None else CONFIG_FILE
    if config_path.exists():
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                loaded = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidConfig(f"Could not parse config {config_path}: {e}") from e
        if not isinstance(loaded, dict):
            raise InvalidConfig(f"Config {config_path} must contain a JSON object")
        config = _merge(config, loaded)
    elif path is not None:
        raise InvalidConfig(f"Config file not found: {config_path}")

    if use_env:
        load_dotenv()
        for var, (section, key, parse) in ENV_OVERRIDES.items():
            raw = os.getenv(var)
            if raw is None or raw == "":
                continue
            try:
                config[section][key] = parse(raw)
            except ValueError as e:
                raise InvalidConfig(f"{var}={raw!r} is not a valid {parse.__name__}") from e
            logger.debug("Config override from %s: %s.%s=%r", var, section, key, raw)
    return config


def save_config(config: Dict[str, Any], path: Path = CONFIG_FILE) -> bool:
    """Save configuration to file."""
    try:
        with _LOCK:
            with open(path, "w", encoding="utf-8") as f:
                json.dump(config, f, indent=2, sort_keys=True)
        return True
    except OSError as e:
        logger.error("Error saving config to %s: %s", path, e)
        return False


@dataclass(frozen=True)
class GridConfig:
    """Candidate cut-point grid settings.

    Attributes:
        bins_per_feature: Number of quantile/uniform bins; thresholds are the inner edges.
        strategy: ``quantile``, ``uniform`` or ``explicit``.
        explicit: Per-feature thresholds when ``strategy == "explicit"``.
        boundary_indicators: Add unpenalized indicators at the first threshold of each feature.
        standardize: Standardize predictors before building the grid.
    """

    bins_per_feature: int = 50
    strategy: str = "quantile"
    explicit: Optional[Dict[str, List[float]]] = None
    boundary_indicators: bool = False
    standardize: bool = False

    def __post_init__(self):
        if self.bins_per_feature < 2:
            raise InvalidConfig("bins_per_feature must be at least 2")
        if self.strategy not in ("quantile", "uniform", "explicit"):
            raise InvalidConfig(f"Unknown grid strategy: {self.strategy!r}")
        if self.strategy == "explicit" and not self.explicit:
            raise InvalidConfig("explicit strategy requires per-feature thresholds")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SolverConfig:
    """Coordinate-descent stopping rules.

    Attributes:
        tol_objective: Relative objective decrease below which a working-set sweep stops.
        tol_coef: Largest coordinate change below which a working-set sweep stops.
        max_cycles: Cap on coordinate-descent cycles per lambda.
        max_step: Cap on a single coordinate step.
        strong_rules: Restrict cycling to the sequential strong set; a full KKT check still
            runs before a fit is accepted.
    """

    tol_objective: float = 1e-7
    tol_coef: float = 1e-9
    max_cycles: int = 10000
    max_step: float = 2.0
    strong_rules: bool = True

    def __post_init__(self):
        if self.tol_objective <= 0 or self.tol_coef <= 0:
            raise InvalidConfig("solver tolerances must be positive")
        if self.max_cycles < 1:
            raise InvalidConfig("max_cycles must be at least 1")
        if self.max_step <= 0:
            raise InvalidConfig("max_step must be positive")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CvConfig:
    """Lambda path and cross-validation settings.

    Attributes:
        n_folds: Number of event-stratified folds.
        seed: Seed for fold assignment.
        n_lambdas: Path length.
        lambda_ratio: Smallest lambda as a fraction of lambda_max (None: size-dependent default).
        selection: ``lambda_min`` or ``lambda_1se``.
        n_jobs: joblib worker count for folds.
        solver: Stopping rules shared by every fit.
    """

    n_folds: int = 10
    seed: int = 0
    n_lambdas: int = 100
    lambda_ratio: Optional[float] = None
    selection: str = "lambda_min"
    n_jobs: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.n_folds < 2:
            raise InvalidConfig("n_folds must be at least 2")
        if self.n_lambdas < 2:
            raise InvalidConfig("n_lambdas must be at least 2")
        if self.lambda_ratio is not None and not 0 < self.lambda_ratio < 1:
            raise InvalidConfig("lambda_ratio must lie in (0, 1)")
        if self.selection not in ("lambda_min", "lambda_1se"):
            raise InvalidConfig(f"Unknown lambda selection rule: {self.selection!r}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], solver: Optional[Dict[str, Any]] = None, n_jobs: int = 1) -> "CvConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__ and k != "solver"}
        known.setdefault("n_jobs", n_jobs)
        return cls(solver=SolverConfig.from_dict(solver or {}), **known)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
