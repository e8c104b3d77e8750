"""CSV loading, z-score standardisation and seeded train/validation splits."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DataError",
    "Dataset",
    "StandardizedFrame",
    "SplitSpec",
    "load_csv",
    "standardize",
    "split",
]


class DataError(ValueError):
    """Raised for unreadable, malformed or unusable input data."""


@dataclass(frozen=True)
class Dataset:
    feature_matrix: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    label_name: str
    positive_class: str | None = None

    def __post_init__(self):
        X = np.asarray(self.feature_matrix, dtype=float)
        y = np.asarray(self.labels).astype(int)
        if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
            raise DataError(f"need N >= 2 rows and d >= 1 features, got shape {X.shape}")
        if y.shape != (X.shape[0],) or not np.isin(y, (0, 1)).all():
            raise DataError("labels must be a length-N vector of 0/1")
        if len(self.feature_names) != X.shape[1]:
            raise DataError("feature_names length does not match feature count")
        object.__setattr__(self, "feature_matrix", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_rows(self) -> int:
        return self.feature_matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.feature_matrix.shape[1]


@dataclass(frozen=True)
class StandardizedFrame:
    """Standardised features together with the transform that produced them.

    ``row_index`` maps each row back to its position in the source file,
    which is how splits are checked to be partitions.
    """

    features: np.ndarray
    column_means: np.ndarray
    column_stds: np.ndarray
    constant: np.ndarray
    labels: np.ndarray
    raw: np.ndarray
    row_index: np.ndarray
    feature_names: tuple = ()

    def transform(self, X_raw) -> np.ndarray:
        X_raw = np.asarray(X_raw, dtype=float)
        if X_raw.ndim != 2 or X_raw.shape[1] != self.column_means.size:
            raise ValueError(
                f"expected {self.column_means.size} feature columns, got shape {X_raw.shape}")
        safe = np.where(self.constant, 1.0, self.column_stds)
        Z = (X_raw - self.column_means) / safe
        Z[:, self.constant] = 0.0
        return Z

    def inverse_transform(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return Z * np.where(self.constant, 0.0, self.column_stds) + self.column_means

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed}")


def _parse_label(raw: str, positive_class: str | None, row: int, column: str) -> int:
    raw = raw.strip()
    if positive_class is not None:
        return 1 if raw == str(positive_class) else 0
    try:
        value = float(raw)
    except ValueError:
        raise DataError(
            f"row {row}, column {column!r}: label {raw!r} is not 0/1; "
            "set positive_class to map class names") from None
    if value not in (0.0, 1.0):
        raise DataError(f"row {row}, column {column!r}: label {raw!r} is not binary")
    return int(value)


def load_csv(path, label_column: str, positive_class: str | None = None) -> Dataset:
    """Read a header-row CSV into a :class:`Dataset`.

    Every non-label column becomes a feature and must be numeric; a bad cell
    raises :class:`DataError` naming its 1-based data row and column. With
    ``positive_class`` set, labels equal to it map to 1 and the single other
    class maps to 0.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if header.count(label_column) == 0:
            raise DataError(f"{path}: label column {label_column!r} not found in header")
        if header.count(label_column) > 1:
            raise DataError(f"{path}: label column {label_column!r} appears more than once")
        li = header.index(label_column)
        names = [h for i, h in enumerate(header) if i != li]
        rows, labels, classes = [], [], set()
        for r, record in enumerate(reader, start=1):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DataError(
                    f"row {r}: expected {len(header)} cells, found {len(record)}")
            values = []
            for i, cell in enumerate(record):
                if i == li:
                    continue
                text = cell.strip()
                try:
                    v = float(text)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    what = "missing" if not text else f"non-numeric {text!r}"
                    raise DataError(f"row {r}, column {header[i]!r}: {what} value")
                values.append(v)
            classes.add(record[li].strip())
            labels.append(_parse_label(record[li], positive_class, r, label_column))
            rows.append(values)
    if positive_class is not None:
        if str(positive_class) not in classes:
            raise DataError(f"positive class {positive_class!r} never occurs in {label_column!r}")
        if len(classes) != 2:
            raise DataError(
                f"label column {label_column!r} has {len(classes)} classes, expected 2")
    X = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return Dataset(X, np.array(labels, dtype=int), tuple(names), label_column,
                   None if positive_class is None else str(positive_class))


def _frame(raw: np.ndarray, labels: np.ndarray, row_index: np.ndarray, names: tuple,
           means: np.ndarray | None = None, stds: np.ndarray | None = None) -> StandardizedFrame:
    if means is None:
        means = raw.mean(axis=0)
        stds = raw.std(axis=0, ddof=1)
    constant = ~(stds > 0)
    proto = StandardizedFrame(np.empty(0), means, stds, constant, labels, raw, row_index, names)
    return StandardizedFrame(proto.transform(raw), means, stds, constant, labels, raw,
                             row_index, names)


def standardize(data: Dataset) -> StandardizedFrame:
    """Z-score each column with its own mean and n-1 standard deviation.

    Constant columns are flagged and mapped to zeros.
    """
    return _frame(data.feature_matrix, data.labels, np.arange(data.n_rows),
                  data.feature_names)


def split(frame, spec: SplitSpec):
    """Shuffle rows with ``spec.seed`` and cut at ``floor(train_fraction * N)``.

    Accepts a :class:`StandardizedFrame` or a raw :class:`Dataset`.
    The train part is re-standardised on its own statistics and the
    validation part reuses them, so nothing leaks from validation rows.
    """
    if isinstance(frame, Dataset):
        frame = standardize(frame)
    n = frame.n_rows
    n_train = int(math.floor(spec.train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise DataError(f"train_fraction {spec.train_fraction} leaves an empty side for N={n}")
    perm = np.random.default_rng(spec.seed).permutation(n)
    tr, va = perm[:n_train], perm[n_train:]
    for name, idx in (("train", tr), ("validation", va)):
        if np.unique(frame.labels[idx]).size < 2:
            raise DataError(f"{name} split contains a single label class")
    train = _frame(frame.raw[tr], frame.labels[tr], frame.row_index[tr], frame.feature_names)
    valid = _frame(frame.raw[va], frame.labels[va], frame.row_index[va], frame.feature_names,
                   train.column_means, train.column_stds)
    return train, valid
