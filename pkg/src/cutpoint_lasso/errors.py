"""Exception hierarchy for cut-point detection.

Input contract violations derive from ``InputError`` (also a ``ValueError``) so callers
that only know about ``ValueError`` keep working. Numerical failures derive from
``NumericalError``. The CLI maps the first family to exit code 1 and the second to 2.
"""

from typing import Optional, Sequence


class CutpointError(Exception):
    """Base class for every error raised by this package."""


class InputError(CutpointError, ValueError):
    """An input violates a documented precondition."""


class NumericalError(CutpointError, ArithmeticError):
    """A numerical procedure could not produce a usable result."""


class InvalidConfig(InputError):
    """A configuration value is out of range or of the wrong type."""


# ---- data ingestion ----


class MissingColumn(InputError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"Missing required column: {column!r}")


class NonNumericCell(InputError):
    def __init__(self, row: int, column: str, value: object = None):
        self.row = row
        self.column = column
        super().__init__(f"Non-numeric value {value!r} at row {row}, column {column!r}")


class NonPositiveTime(InputError):
    def __init__(self, row: int, value: float = float("nan")):
        self.row = row
        super().__init__(f"Time must be strictly positive and finite, got {value!r} at row {row}")


class InvalidEventCode(InputError):
    def __init__(self, row: int, value: object = None):
        self.row = row
        super().__init__(f"Event code must be 0 or 1, got {value!r} at row {row}")


class EmptyInput(InputError):
    def __init__(self, path: object):
        self.path = path
        super().__init__(f"Input file {str(path)!r} is empty")


class ConstantFeature(InputError):
    def __init__(self, feature: int, name: Optional[str] = None):
        self.feature = feature
        label = f"{feature} ({name})" if name else str(feature)
        super().__init__(f"Feature {label} has zero standard deviation")


class NoEvents(InputError):
    def __init__(self, message: str = "Outcome contains no events"):
        super().__init__(message)


# ---- binarization ----


class DegenerateFeature(InputError):
    def __init__(self, feature: int, name: Optional[str] = None):
        self.feature = feature
        self.name = name
        super().__init__(f"Feature {name or feature} has fewer than two distinct values")


class GridMismatch(InputError):
    """Grid and dataset disagree on features or ranges."""


class DimensionMismatch(InputError):
    """Array shapes do not agree."""


# ---- solver ----


class AllWeightsZero(InputError):
    def __init__(self):
        super().__init__("At least one penalty weight must be strictly positive")


class FoldWithoutEvents(InputError):
    def __init__(self, fold: int):
        self.fold = fold
        super().__init__(f"Cross-validation fold {fold} contains no events")


class NotConverged(NumericalError):
    def __init__(self, n_iterations: int, lam: float):
        self.n_iterations = n_iterations
        self.lam = lam
        super().__init__(f"Coordinate descent did not converge at lambda={lam:.6g} after {n_iterations} cycles")


# ---- pipelines / metrics ----


class EmptyReport(InputError):
    def __init__(self):
        super().__init__("Cut-point report contains no thresholds to refit")


class NoEvaluableFolds(InputError):
    def __init__(self, n_folds: int):
        self.n_folds = n_folds
        super().__init__(f"None of the {n_folds} folds has events on both its training and held-out parts")


class SingularRefit(NumericalError):
    def __init__(self, collisions: Sequence[str]):
        self.collisions = list(collisions)
        super().__init__(f"Refit design is rank deficient; colliding thresholds: {', '.join(self.collisions)}")


class PenalizedFitRejected(InputError):
    def __init__(self, lam: float):
        super().__init__(f"AIC requires an unpenalized refit, got lambda={lam:.6g}")


class DegenerateCensoringKM(NumericalError):
    def __init__(self, time: float):
        self.time = time
        super().__init__(f"Censoring survival estimate reaches zero at t={time:.6g}")


class NoComparablePairs(InputError):
    def __init__(self):
        super().__init__("No comparable pairs for concordance")
