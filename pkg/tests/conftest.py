"""Pytest configuration and fixtures."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src directory to Python path so 'cutpoint_lasso' can be imported
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from cutpoint_lasso.config_manager import CvConfig, GridConfig  # noqa: E402
from cutpoint_lasso.cox_core import CoxOutcome  # noqa: E402
from cutpoint_lasso.data_model import SurvivalDataset  # noqa: E402


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep CUTPOINT_* overrides from the developer's shell out of tests."""
    for var in ("CUTPOINT_THREADS", "CUTPOINT_LOG_LEVEL", "CUTPOINT_SEED"):
        monkeypatch.delenv(var, raising=False)
    yield


@pytest.fixture
def three_events():
    """n=3, events at 1 < 2 < 3."""
    return CoxOutcome.from_arrays([1.0, 2.0, 3.0], [1, 1, 1])


@pytest.fixture
def two_events():
    """n=2, events at 1 < 2."""
    return CoxOutcome.from_arrays([1.0, 2.0], [1, 1])


def make_instance(seed: int, n: int, d: int, binary: bool = False, effect: float = 0.5):
    """Random covariates and an exponential outcome with roughly 25% censoring."""
    rng = np.random.default_rng(seed)
    if binary:
        X = (rng.uniform(size=(n, d)) < 0.5).astype(float)
    else:
        X = rng.normal(size=(n, d))
    beta = np.full(d, effect) * rng.choice([-1.0, 1.0], size=d)
    times = rng.exponential(1.0, size=n) / np.exp(X @ beta)
    events = (rng.uniform(size=n) < 0.75).astype(int)
    events[np.argmin(times)] = 1
    return X, CoxOutcome.from_arrays(times, events)


@pytest.fixture
def random_instance():
    """Factory: ``random_instance(seed, n, d, binary=False)`` -> (X, outcome)."""
    return make_instance


def make_step_dataset(seed: int, n: int, p: int = 1, jump: float = 1.5, cut: float = 0.5, active: int = 1):
    """Uniform features; the first ``active`` ones raise the log-hazard by ``jump`` above ``cut``."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, p))
    f = jump * (X[:, :active] > cut).sum(axis=1)
    times = rng.exponential(1.0, size=n) / (0.1 * np.exp(f))
    censor = rng.uniform(0.0, np.quantile(times, 0.95) * 2.0, size=n)
    events = (times <= censor).astype(int)
    observed = np.minimum(times, censor)
    names = tuple(f"x{j + 1}" for j in range(p))
    return SurvivalDataset(X, observed, events, names)


@pytest.fixture
def step_dataset():
    """Factory: ``step_dataset(seed, n, p=1, jump=1.5, cut=0.5, active=1)``."""
    return make_step_dataset


@pytest.fixture
def small_grid():
    return GridConfig(bins_per_feature=10)


@pytest.fixture
def small_cv():
    """Short path and few folds so pipeline tests stay fast."""
    return CvConfig(n_folds=3, seed=11, n_lambdas=15)


@pytest.fixture
def write_csv_text(tmp_path):
    """Factory writing raw CSV text to a temporary file and returning its path."""

    def _write(text: str, name: str = "data.csv") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
