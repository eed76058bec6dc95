"""Dataset loading, validation, splitting, and constant-predictor baselines.

A :class:`Dataset` is an immutable (features, labels, task) triple.  CSV input
is comma-separated with the label in the last column; classification labels
are remapped to {-1, +1}.  Splits are reproducible: shuffles use NumPy's
PCG64 generator keyed by (seed, repetition).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._rng import derive_rng

TASKS = ("regression", "classification")


class DatasetError(ValueError):
    """Malformed input file or invalid dataset contents."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True, order="C")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus label vector for one learning task.

    features : (n, d) float array, all entries finite
    labels   : (n,) float array; exactly -1/+1 for classification
    task     : "regression" or "classification"
    """

    features: np.ndarray
    labels: np.ndarray
    task: str

    def __post_init__(self):
        if self.task not in TASKS:
            raise DatasetError(f"unknown task {self.task!r}; expected one of {TASKS}")
        X = _readonly(np.atleast_2d(self.features))
        y = _readonly(np.asarray(self.labels, dtype=np.float64).ravel())
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError("features must be a non-empty 2-d matrix")
        if y.shape[0] != X.shape[0]:
            raise DatasetError(
                f"label count {y.shape[0]} does not match sample count {X.shape[0]}"
            )
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise DatasetError("non-finite entries in features or labels")
        if self.task == "classification" and not np.all(np.isin(y, (-1.0, 1.0))):
            raise DatasetError("classification labels must be exactly -1 or +1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        """Dataset restricted to the given sample indices (order preserved)."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.labels[idx], self.task)


@dataclass(frozen=True)
class SplitSpec:
    """Repeated train/test split protocol.

    test_fraction : fraction of samples held out, in (0, 1)
    repetitions   : number of independent repetitions
    seed          : 64-bit master seed for the shuffles
    """

    test_fraction: float
    repetitions: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        if self.repetitions < 1:
            raise ValueError("repetitions must be a positive integer")


def load_csv(path, task: str, has_header: bool = False) -> Dataset:
    """Load a dataset from a CSV file; the last column is the label.

    Two-valued classification labels are remapped: the numerically smaller
    raw value becomes -1, the larger +1.  Parse problems raise
    :class:`DatasetError` naming the offending data row (1-based, header
    excluded).
    """
    if task not in TASKS:
        raise DatasetError(f"unknown task {task!r}; expected one of {TASKS}")
    rows: list[list[float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader):
            if has_header and lineno == 0:
                continue
            if not record or all(cell.strip() == "" for cell in record):
                continue
            rowno = len(rows) + 1
            if rows and len(record) != len(rows[0]):
                raise DatasetError(
                    f"row {rowno}: expected {len(rows[0])} fields, got {len(record)}"
                )
            try:
                rows.append([float(cell) for cell in record])
            except ValueError:
                raise DatasetError(f"row {rowno}: non-numeric cell") from None
    if not rows:
        raise DatasetError("no rows")
    data = np.asarray(rows, dtype=np.float64)
    if data.shape[1] < 2:
        raise DatasetError("rows must contain at least one feature and a label")
    X, y = data[:, :-1], data[:, -1]
    if task == "classification":
        values = np.unique(y)
        if not np.all(np.isin(values, (-1.0, 1.0))):
            if values.size != 2:
                raise DatasetError(
                    f"classification labels must take exactly two distinct values, "
                    f"got {values.size}"
                )
            y = np.where(y == values[0], -1.0, 1.0)  # smaller raw value -> -1
    return Dataset(X, y, task)


def train_test_split(ds: Dataset, spec: SplitSpec, rep: int) -> tuple[Dataset, Dataset]:
    """Deterministic (train, test) split for repetition ``rep``.

    The shuffle is derived from (spec.seed, rep); the test set holds
    ``floor(test_fraction * n)`` samples.
    """
    if not 0 <= rep < spec.repetitions:
        raise ValueError(f"rep must lie in [0, {spec.repetitions})")
    # epsilon guards against floor(0.3 * 10) == 2 style float artifacts
    n_test = int(np.floor(spec.test_fraction * ds.n + 1e-9))
    if n_test < 1 or ds.n - n_test < 1:
        raise ValueError("split would leave an empty train or test set")
    perm = derive_rng(spec.seed, rep).permutation(ds.n)
    return ds.subset(perm[n_test:]), ds.subset(perm[:n_test])


def naive_error(ds: Dataset) -> float:
    """Best error achievable by a constant decision function.

    Regression: population standard deviation (divisor n) of the labels.
    Classification: fraction of labels in the smaller class.
    """
    if ds.task == "regression":
        return float(ds.labels.std())
    return float(min(np.mean(ds.labels == 1.0), np.mean(ds.labels == -1.0)))


@dataclass(frozen=True)
class AffineTransform:
    """Record of a standardization; supports re-application and inversion.

    Feature columns with zero variance are flagged and left untouched.
    Label shift/scale is the identity for classification tasks.
    """

    feature_shift: np.ndarray
    feature_scale: np.ndarray
    constant_columns: np.ndarray
    label_shift: float
    label_scale: float

    def transform_features(self, X: np.ndarray) -> np.ndarray:
        return (X - self.feature_shift) / self.feature_scale

    def transform_labels(self, y: np.ndarray) -> np.ndarray:
        return (y - self.label_shift) / self.label_scale

    def inverse_labels(self, y: np.ndarray) -> np.ndarray:
        return y * self.label_scale + self.label_shift

    def transform_dataset(self, ds: Dataset) -> Dataset:
        return Dataset(
            self.transform_features(ds.features),
            self.transform_labels(ds.labels),
            ds.task,
        )


def standardize(ds: Dataset) -> tuple[Dataset, AffineTransform]:
    """Shift/scale each feature column (and regression labels) to mean 0, std 1.

    Uses the population standard deviation (divisor n), so the naive error of
    a standardized regression dataset is exactly 1.  Zero-variance columns are
    flagged and left unchanged; the returned record maps predictions back to
    the original label scale.
    """
    if ds.n < 2:
        raise ValueError("standardize requires at least 2 samples")
    means = ds.features.mean(axis=0)
    stds = ds.features.std(axis=0)
    constant = stds == 0.0
    shift = np.where(constant, 0.0, means)
    scale = np.where(constant, 1.0, stds)
    if ds.task == "regression":
        y_std = float(ds.labels.std())
        label_shift = float(ds.labels.mean()) if y_std > 0.0 else 0.0
        label_scale = y_std if y_std > 0.0 else 1.0
    else:
        label_shift, label_scale = 0.0, 1.0
    record = AffineTransform(shift, scale, constant, label_shift, label_scale)
    return record.transform_dataset(ds), record
