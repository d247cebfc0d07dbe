"""LibSVM-format parsing, label grouping, standardization, and splits.

Datasets are stored as a scipy CSR matrix (or a dense ndarray once
standardized) plus an integer label vector. Feature indices are 1-based in
LibSVM text and 0-based everywhere in memory.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError, ParseError

Matrix = sp.csr_matrix | np.ndarray


@dataclass
class SparseVector:
    """One sparse row: parallel (index, value) arrays, indices strictly increasing."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.indices.ndim != 1 or self.indices.shape != self.values.shape:
            raise DataError("indices and values must be 1-D arrays of equal length")
        if self.indices.size:
            if self.indices[0] < 0 or np.any(np.diff(self.indices) <= 0):
                raise DataError("feature indices must be non-negative and strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise DataError("feature values must be finite")

    def to_dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        out[self.indices] = self.values
        return out


@dataclass
class Dataset:
    """Labeled instances: an n x dim matrix plus integer labels.

    Labels are +-1 for binary data; multiclass files keep their original
    integer labels until :func:`group_binary` is applied. Values are treated
    as immutable after construction.
    """

    X: Matrix
    y: np.ndarray
    dim: int

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError(
                f"row count {self.X.shape[0]} does not match label count {self.y.shape[0]}"
            )
        if self.X.shape[1] != self.dim:
            raise DataError(f"matrix has {self.X.shape[1]} columns, expected dim={self.dim}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_pos(self) -> int:
        return int(np.sum(self.y == 1))

    @property
    def n_neg(self) -> int:
        return int(np.sum(self.y == -1))

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.y == 1) | (self.y == -1))) and self.n > 0

    def row(self, i: int) -> SparseVector:
        if sp.issparse(self.X):
            r = self.X.getrow(i)
            order = np.argsort(r.indices)
            return SparseVector(r.indices[order], r.data[order])
        dense = self.X[i]
        idx = np.nonzero(dense)[0]
        return SparseVector(idx, dense[idx])

    def subset(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[indices], self.y[indices], self.dim)

    def require_both_classes(self):
        """Guard used by training/evaluation entry points."""
        if self.n == 0:
            raise DataError("dataset is empty")
        if not self.is_binary:
            raise DataError("labels are not +-1; apply group_binary first")
        if self.n_pos < 1 or self.n_neg < 1:
            raise DataError(
                f"need at least one instance of each class (n_pos={self.n_pos}, n_neg={self.n_neg})"
            )


@dataclass
class Standardizer:
    """Per-feature affine transform fitted on training data: (x - mean) / stdev."""

    mean: np.ndarray
    stdev: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.stdev = np.asarray(self.stdev, dtype=np.float64)
        if self.mean.shape != self.stdev.shape or self.mean.ndim != 1:
            raise DataError("mean and stdev must be 1-D arrays of equal length")
        if np.any(self.stdev <= 0):
            raise DataError("stdev entries must be strictly positive")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _normalize_binary_labels(y: np.ndarray) -> np.ndarray:
    """Map two-valued label sets onto {-1, +1}; leave other label sets alone.

    {-1,+1} subsets pass through; any other pair maps its smaller value to -1.
    Multiclass labels are preserved for a later group_binary call.
    """
    distinct = np.unique(y)
    if distinct.size == 0 or set(distinct.tolist()) <= {-1, 1}:
        return y
    if distinct.size == 2:
        out = np.where(y == distinct[0], -1, 1)
        return out.astype(np.int64)
    return y


def parse_libsvm(source: str | TextIO, dim: int | None = None) -> Dataset:
    """Parse LibSVM sparse text ("<label> <idx>:<val> ...", 1-based indices).

    Blank lines are skipped. ``dim`` overrides the inferred feature count so
    that separately parsed train/test files share a feature space.

    Raises ParseError (with line number) on malformed tokens, non-increasing
    indices within a line, non-numeric values, or non-integral labels.
    """
    if isinstance(source, str):
        source = io.StringIO(source)

    labels: list[int] = []
    data: list[float] = []
    col: list[int] = []
    indptr: list[int] = [0]
    max_index = -1

    for lineno, line in enumerate(source, start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            raw = float(tokens[0])
        except ValueError:
            raise ParseError(f"label {tokens[0]!r} is not numeric", lineno) from None
        if not np.isfinite(raw) or raw != int(raw):
            raise ParseError(f"label {tokens[0]!r} is not an integer", lineno)
        labels.append(int(raw))

        prev = -1
        for tok in tokens[1:]:
            idx_s, _, val_s = tok.partition(":")
            if not val_s:
                raise ParseError(f"malformed feature token {tok!r}", lineno)
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(f"feature index {idx_s!r} is not an integer", lineno) from None
            if idx < 1:
                raise ParseError(f"feature index {idx} must be >= 1", lineno)
            if idx - 1 <= prev:
                raise ParseError(f"feature indices not strictly increasing at {tok!r}", lineno)
            try:
                val = float(val_s)
            except ValueError:
                raise ParseError(f"feature value {val_s!r} is not numeric", lineno) from None
            if not np.isfinite(val):
                raise ParseError(f"feature value {val_s!r} is not finite", lineno)
            prev = idx - 1
            col.append(prev)
            data.append(val)
        indptr.append(len(data))
        if prev > max_index:
            max_index = prev

    inferred = max_index + 1
    if dim is None:
        dim = inferred
    elif dim < inferred:
        raise DataError(f"explicit dim {dim} is smaller than max feature index {inferred}")

    X = sp.csr_matrix(
        (np.asarray(data), np.asarray(col, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(labels), dim),
    )
    y = _normalize_binary_labels(np.asarray(labels, dtype=np.int64))
    return Dataset(X, y, dim)


def to_libsvm(data: Dataset) -> str:
    """Serialize back to LibSVM text (1-based indices, 17 significant digits).

    parse_libsvm(to_libsvm(d)) reproduces d's stored entries exactly.
    """
    lines = []
    for i in range(data.n):
        row = data.row(i)
        parts = [str(int(data.y[i]))]
        parts.extend(f"{idx + 1}:{val:.17g}" for idx, val in zip(row.indices, row.values))
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def group_binary(data: Dataset, positive_set: Iterable[int]) -> Dataset:
    """Relabel: labels in positive_set become +1, everything else -1."""
    positive = set(int(v) for v in positive_set)
    y = np.where(np.isin(data.y, list(positive)), 1, -1).astype(np.int64)
    out = Dataset(data.X, y, data.dim)
    if out.n_pos == 0:
        raise DataError("grouping produced no positive instances")
    if out.n_neg == 0:
        raise DataError("grouping produced no negative instances")
    return out


def _column_moments(X: Matrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and population variance, two-pass for accuracy."""
    n = X.shape[0]
    if sp.issparse(X):
        csc = X.tocsc()
        mean = np.asarray(csc.mean(axis=0)).ravel()
        nnz = np.diff(csc.indptr)
        col_of = np.repeat(np.arange(X.shape[1]), nnz)
        sq = np.zeros(X.shape[1])
        np.add.at(sq, col_of, (csc.data - mean[col_of]) ** 2)
        # implicit zeros contribute (0 - mean)^2 each
        sq += (n - nnz) * mean**2
        var = sq / n
    else:
        mean = X.mean(axis=0)
        var = ((X - mean) ** 2).mean(axis=0)
    return mean, var


def standardize_fit(data: Dataset) -> Standardizer:
    """Fit zero-mean unit-variance statistics (population variance).

    Constant features get a stdev guard of 1 so they pass through centered.
    """
    if data.n < 1:
        raise DataError("cannot fit a standardizer on an empty dataset")
    mean, var = _column_moments(data.X)
    # features whose variance sits at float noise level count as constant
    rms_sq = var + mean**2
    eps = np.finfo(np.float64).eps
    constant = var <= (eps**2) * np.maximum(rms_sq, 1.0)
    stdev = np.sqrt(np.where(constant, 1.0, var))
    return Standardizer(mean, stdev)


def standardize_apply(s: Standardizer, data: Dataset) -> Dataset:
    """Apply fitted statistics. Centering densifies sparse input."""
    if s.dim != data.dim:
        raise DataError(f"standardizer dim {s.dim} does not match dataset dim {data.dim}")
    dense = data.X.toarray() if sp.issparse(data.X) else np.array(data.X, dtype=np.float64)
    dense = (dense - s.mean) / s.stdev
    return Dataset(dense, data.y, data.dim)


def split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint uniform-random train/test partition, deterministic per seed.

    Train size is round(n * (1 - test_fraction)) with half-up rounding.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ConfigError(f"test fraction must be in (0, 1), got {test_fraction}")
    if data.n < 2:
        raise DataError("need at least 2 instances to split")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(data.n)
    n_train = int(np.floor(data.n * (1.0 - test_fraction) + 0.5))
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return data.subset(train_idx), data.subset(test_idx)
