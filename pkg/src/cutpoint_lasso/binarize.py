"""Candidate cut-point grids and the cumulative binarized design.

A feature ``x`` with thresholds ``t_1 < ... < t_d`` is encoded as the nested indicators
``1{x > t_l}``; the coefficient on column ``l`` is the log-hazard jump at ``t_l``.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from .data_model import SurvivalDataset
from .errors import DegenerateFeature, GridMismatch, InputError

logger = logging.getLogger(__name__)


class GridStrategy(str, Enum):
    """How candidate thresholds are placed."""

    QUANTILE = "quantile"
    UNIFORM = "uniform"
    EXPLICIT = "explicit"


@dataclass(frozen=True, eq=False)
class CutGrid:
    """Per-feature strictly increasing candidate thresholds.

    Attributes:
        feature_names: Names of every feature of the source dataset, in column order.
        feature_indices: Source column index of each retained feature.
        thresholds: One increasing array per retained feature.
        strategy: Placement strategy used.
        warnings: Human-readable notes on dropped features or thresholds.
    """

    feature_names: Tuple[str, ...]
    feature_indices: Tuple[int, ...]
    thresholds: Tuple[np.ndarray, ...]
    strategy: GridStrategy = GridStrategy.QUANTILE
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.feature_indices) != len(self.thresholds):
            raise GridMismatch("feature_indices and thresholds must align")
        for j, t in zip(self.feature_indices, self.thresholds):
            if len(t) == 0:
                raise GridMismatch(f"feature {self.feature_names[j]!r} has no thresholds")
            if np.any(np.diff(t) <= 0):
                raise GridMismatch(f"thresholds for {self.feature_names[j]!r} are not strictly increasing")

    @property
    def d(self) -> int:
        return int(sum(len(t) for t in self.thresholds))

    def thresholds_for(self, name: str) -> np.ndarray:
        for j, t in zip(self.feature_indices, self.thresholds):
            if self.feature_names[j] == name:
                return t
        raise KeyError(name)

    def to_dict(self) -> Dict[str, List[float]]:
        return {self.feature_names[j]: [float(v) for v in t] for j, t in zip(self.feature_indices, self.thresholds)}


@dataclass(frozen=True)
class ColumnMeta:
    """Provenance of one design column."""

    feature_index: int
    threshold_index: int
    threshold: float
    feature_name: str


@dataclass(frozen=True, eq=False)
class CumulativeDesign:
    """Sparse 0/1 design with column metadata.

    ``values`` is CSC so column access (coordinate descent) is cheap.
    """

    values: sparse.csc_matrix
    column_meta: Tuple[ColumnMeta, ...]
    penalty_exempt: FrozenSet[int] = frozenset()

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def columns_for_feature(self, feature_index: int) -> List[int]:
        return [k for k, meta in enumerate(self.column_meta) if meta.feature_index == feature_index]

    def feature_blocks(self) -> Dict[int, List[int]]:
        blocks: Dict[int, List[int]] = {}
        for k, meta in enumerate(self.column_meta):
            blocks.setdefault(meta.feature_index, []).append(k)
        return blocks

    def penalty_weights(self) -> np.ndarray:
        """Unit weights with zeros on penalty-exempt columns."""
        weights = np.ones(self.shape[1])
        if self.penalty_exempt:
            weights[sorted(self.penalty_exempt)] = 0.0
        return weights

    def select(self, columns: Sequence[int]) -> "CumulativeDesign":
        columns = list(columns)
        remap = {old: new for new, old in enumerate(columns)}
        return CumulativeDesign(
            values=self.values[:, columns].tocsc(),
            column_meta=tuple(self.column_meta[k] for k in columns),
            penalty_exempt=frozenset(remap[k] for k in self.penalty_exempt if k in remap),
        )

    def take_rows(self, rows: Sequence[int]) -> "CumulativeDesign":
        return CumulativeDesign(self.values[np.asarray(rows)].tocsc(), self.column_meta, self.penalty_exempt)


@dataclass
class RankReport:
    """Numerical rank of a design and exact duplicate columns."""

    rank: int
    n_columns: int
    duplicated: List[List[int]] = field(default_factory=list)
    tolerance: float = 1e-10

    @property
    def full_rank(self) -> bool:
        return self.rank == self.n_columns and not self.duplicated


def _midpoints(values: np.ndarray) -> np.ndarray:
    distinct = np.unique(values)
    return (distinct[:-1] + distinct[1:]) / 2.0


def _nearest(midpoints: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    # ties resolve to the lower midpoint
    pos = np.searchsorted(midpoints, candidates, side="left")
    lo = np.clip(pos - 1, 0, midpoints.size - 1)
    hi = np.clip(pos, 0, midpoints.size - 1)
    pick_hi = np.abs(midpoints[hi] - candidates) < np.abs(candidates - midpoints[lo])
    return np.unique(np.where(pick_hi, midpoints[hi], midpoints[lo]))


def _collapse_empty_cells(x: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Keep only thresholds that change the indicator pattern relative to the previous one."""
    counts = np.array([(x > t).sum() for t in thresholds])
    keep = np.ones(thresholds.size, dtype=bool)
    last = x.size
    for i, c in enumerate(counts):
        if c == last or c == 0:
            keep[i] = False
        else:
            last = c
    return thresholds[keep]


def _feature_thresholds(x: np.ndarray, bins: int, strategy: GridStrategy) -> np.ndarray:
    lo, hi = x.min(), x.max()
    if strategy is GridStrategy.QUANTILE:
        probs = np.arange(1, bins) / bins
        return _nearest(_midpoints(x), np.quantile(x, probs))
    edges = np.linspace(lo, hi, bins + 1)[1:-1]
    return _collapse_empty_cells(x, np.unique(edges[(edges > lo) & (edges < hi)]))


def build_cut_grid(
    ds: SurvivalDataset,
    bins_per_feature: int = 50,
    strategy: Union[GridStrategy, str] = GridStrategy.QUANTILE,
    explicit: Optional[Mapping[str, Sequence[float]]] = None,
) -> CutGrid:
    """Place candidate thresholds for every feature.

    Quantile candidates sit at the ``k / bins_per_feature`` sample quantiles and are snapped to
    the nearest midpoint between adjacent distinct observed values, then deduplicated, so every
    threshold lies strictly inside the observed range and every cell is occupied. Uniform
    candidates are equal-width inner edges with empty cells collapsed. Explicit thresholds are
    taken as given, minus any outside the observed range.

    Features with fewer than two distinct values are dropped with a warning entry.
    """
    strategy = GridStrategy(strategy)
    if bins_per_feature < 2:
        raise InputError("bins_per_feature must be at least 2")
    if strategy is GridStrategy.EXPLICIT and explicit is None:
        raise InputError("explicit strategy requires thresholds")

    indices: List[int] = []
    grids: List[np.ndarray] = []
    warnings: List[str] = []
    for j, name in enumerate(ds.feature_names):
        x = ds.features[:, j]
        if np.unique(x).size < 2:
            msg = str(DegenerateFeature(j, name))
            logger.warning("Dropping feature: %s", msg)
            warnings.append(msg)
            continue
        if strategy is GridStrategy.EXPLICIT:
            if name not in explicit:
                warnings.append(f"Feature {name} has no explicit thresholds; dropped")
                continue
            t = np.unique(np.asarray(explicit[name], dtype=float))
            inside = (t > x.min()) & (t < x.max())
            if not inside.all():
                outside = int((~inside).sum())
                warnings.append(f"Feature {name}: {outside} explicit thresholds outside the observed range")
            t = t[inside]
        else:
            t = _feature_thresholds(x, bins_per_feature, strategy)
        if t.size == 0:
            warnings.append(f"Feature {name} has no usable thresholds; dropped")
            continue
        indices.append(j)
        grids.append(t)

    grid = CutGrid(
        feature_names=tuple(ds.feature_names),
        feature_indices=tuple(indices),
        thresholds=tuple(grids),
        strategy=strategy,
        warnings=tuple(warnings),
    )
    logger.debug("Built %s grid: %d features, d=%d", strategy.value, len(indices), grid.d)
    return grid


def _assemble(features: np.ndarray, names: Sequence[str], blocks: Sequence[Tuple[int, Sequence[float]]]):
    indptr = [0]
    indices: List[np.ndarray] = []
    meta: List[ColumnMeta] = []
    for j, thresholds in blocks:
        x = features[:, j]
        for l, t in enumerate(thresholds):
            rows = np.flatnonzero(x > t)
            indices.append(rows)
            indptr.append(indptr[-1] + rows.size)
            meta.append(ColumnMeta(feature_index=j, threshold_index=l, threshold=float(t), feature_name=names[j]))
    n = features.shape[0]
    row_idx = np.concatenate(indices) if indices else np.empty(0, dtype=np.int64)
    matrix = sparse.csc_matrix((np.ones(row_idx.size), row_idx, np.asarray(indptr)), shape=(n, len(meta)))
    return matrix, tuple(meta)


def cumulative_binarize(ds: SurvivalDataset, grid: CutGrid, boundary_indicators: bool = False) -> CumulativeDesign:
    """Build ``X^CB``: column ``(j, l)`` is ``1{x_j > t_{j,l}}``, feature-major, thresholds ascending.

    Args:
        ds: Dataset with the same features the grid was built on.
        grid: Candidate thresholds.
        boundary_indicators: Mark the lowest-threshold column of each feature penalty-exempt.

    Raises:
        GridMismatch: Feature count or names differ.
    """
    if tuple(ds.feature_names) != tuple(grid.feature_names):
        raise GridMismatch(f"grid built for {len(grid.feature_names)} features {grid.feature_names[:3]}..., "
                           f"dataset has {ds.p} features {ds.feature_names[:3]}...")
    matrix, meta = _assemble(ds.features, ds.feature_names, list(zip(grid.feature_indices, grid.thresholds)))
    exempt = frozenset(k for k, m in enumerate(meta) if m.threshold_index == 0) if boundary_indicators else frozenset()
    return CumulativeDesign(values=matrix, column_meta=meta, penalty_exempt=exempt)


def design_at_thresholds(ds: SurvivalDataset, thresholds: Mapping[str, Sequence[float]]) -> CumulativeDesign:
    """Indicators at exactly the given thresholds; duplicates are kept as-is."""
    index = {name: j for j, name in enumerate(ds.feature_names)}
    blocks = []
    for name, values in thresholds.items():
        if name not in index:
            raise GridMismatch(f"feature {name!r} not in dataset")
        if len(values):
            blocks.append((index[name], sorted(float(v) for v in values)))
    matrix, meta = _assemble(ds.features, ds.feature_names, blocks)
    return CumulativeDesign(values=matrix, column_meta=meta)


def design_rank_check(dsgn: CumulativeDesign, tolerance: float = 1e-10) -> RankReport:
    """Numerical column rank (relative singular-value tolerance) and exact duplicate columns."""
    values = dsgn.values.tocsc()
    d = values.shape[1]
    if d == 0:
        return RankReport(rank=0, n_columns=0, tolerance=tolerance)
    singular = np.linalg.svd(values.toarray(), compute_uv=False)
    rank = int(np.sum(singular > tolerance * singular[0])) if singular[0] > 0 else 0

    seen: Dict[bytes, List[int]] = {}
    values.sort_indices()
    for k in range(d):
        start, end = values.indptr[k], values.indptr[k + 1]
        key = values.indices[start:end].tobytes() + values.data[start:end].tobytes()
        seen.setdefault(key, []).append(k)
    duplicated = [cols for cols in seen.values() if len(cols) > 1]
    return RankReport(rank=rank, n_columns=d, duplicated=duplicated, tolerance=tolerance)


def grid_to_json(grid: CutGrid, path: Optional[Path] = None) -> str:
    """Serialise as ``{feature_name: [thresholds...]}``; optionally write to ``path``."""
    text = json.dumps(grid.to_dict(), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def grid_from_json(source: Union[str, Path, Mapping[str, Sequence[float]]], ds: SurvivalDataset) -> CutGrid:
    """Replay an exported grid on a dataset with matching feature names."""
    if isinstance(source, Mapping):
        data = source
    else:
        is_text = isinstance(source, str) and source.lstrip().startswith("{")
        text = source if is_text else Path(source).read_text(encoding="utf-8")
        data = json.loads(text)
    unknown = [name for name in data if name not in ds.feature_names]
    if unknown:
        raise GridMismatch(f"grid names features not in dataset: {unknown}")
    return build_cut_grid(ds, strategy=GridStrategy.EXPLICIT, explicit=data)
