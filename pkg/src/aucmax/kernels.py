"""Gaussian kernel evaluation and the mean-squared-distance bandwidth rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dataio import Dataset, Matrix, SparseVector
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class GaussianKernelParams:
    """Bandwidth of kappa(x, y) = exp(-||x - y||^2 / (2 sigma2))."""

    sigma2: float

    def __post_init__(self):
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0:
            raise ConfigError(f"sigma2 must be finite and positive, got {self.sigma2}")

    @classmethod
    def from_gamma(cls, gamma: float) -> "GaussianKernelParams":
        """Accept the exp(-gamma ||x-y||^2) parameterization: sigma2 = 1/(2 gamma)."""
        if not np.isfinite(gamma) or gamma <= 0:
            raise ConfigError(f"gamma must be finite and positive, got {gamma}")
        return cls(1.0 / (2.0 * gamma))

    @property
    def gamma(self) -> float:
        return 1.0 / (2.0 * self.sigma2)


def _as_matrix(rows, dim: int | None = None) -> Matrix:
    """Accept a 2-D ndarray, a sparse matrix, or a list of SparseVector."""
    if sp.issparse(rows):
        return rows.tocsr()
    if isinstance(rows, np.ndarray):
        if rows.ndim == 1:
            return rows.reshape(1, -1)
        return rows
    rows = list(rows)
    if not rows:
        raise DataError("empty row collection")
    if dim is None:
        dim = max((int(r.indices[-1]) + 1 if r.indices.size else 0) for r in rows)
    data = np.concatenate([r.values for r in rows]) if rows else np.empty(0)
    col = np.concatenate([r.indices for r in rows]) if rows else np.empty(0, dtype=np.int64)
    indptr = np.cumsum([0] + [r.indices.size for r in rows])
    return sp.csr_matrix((data, col, indptr), shape=(len(rows), dim))


def row_sq_norms(X: Matrix) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X.multiply(X).sum(axis=1)).ravel()
    return np.einsum("ij,ij->i", X, X)


def pairwise_sq_dists(A: Matrix, B: Matrix) -> np.ndarray:
    """All-pairs ||a - b||^2 via ||a||^2 + ||b||^2 - 2<a,b>, clamped at 0."""
    if A.shape[1] != B.shape[1]:
        raise DataError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    na = row_sq_norms(A)
    nb = row_sq_norms(B)
    cross = A @ B.T
    if sp.issparse(cross):
        cross = cross.toarray()
    d2 = na[:, None] + nb[None, :] - 2.0 * np.asarray(cross)
    np.maximum(d2, 0.0, out=d2)
    return d2


def gaussian_kernel(x, y, params: GaussianKernelParams) -> float:
    """kappa for a single pair; accepts SparseVector or 1-D dense vectors."""
    if isinstance(x, SparseVector) and isinstance(y, SparseVector):
        nx = float(x.values @ x.values)
        ny = float(y.values @ y.values)
        common, ix, iy = np.intersect1d(x.indices, y.indices, return_indices=True)
        dot = float(x.values[ix] @ y.values[iy]) if common.size else 0.0
        d2 = max(nx + ny - 2.0 * dot, 0.0)
    else:
        xv = x.to_dense(max(x.indices[-1] + 1, len(y))) if isinstance(x, SparseVector) else np.asarray(x, dtype=np.float64)
        yv = y.to_dense(len(xv)) if isinstance(y, SparseVector) else np.asarray(y, dtype=np.float64)
        if xv.shape != yv.shape:
            raise DataError(f"dimension mismatch: {xv.shape} vs {yv.shape}")
        diff = xv - yv
        d2 = float(diff @ diff)
    return float(np.exp(-d2 / (2.0 * params.sigma2)))


def _pad_columns(X: sp.csr_matrix, dim: int) -> sp.csr_matrix:
    return sp.csr_matrix((X.data, X.indices, X.indptr), shape=(X.shape[0], dim))


def kernel_matrix(rows_a, rows_b, params: GaussianKernelParams) -> np.ndarray:
    """Dense |A| x |B| Gaussian kernel matrix.

    Symmetric with unit diagonal when both arguments are the same rows.
    Sparse inputs of unequal width are padded to their union feature space;
    dense inputs must match exactly.
    """
    A = _as_matrix(rows_a)
    B = _as_matrix(rows_b)
    if A.shape[1] != B.shape[1] and sp.issparse(A) and sp.issparse(B):
        dim = max(A.shape[1], B.shape[1])
        A, B = _pad_columns(A, dim), _pad_columns(B, dim)
    d2 = pairwise_sq_dists(A, B)
    return np.exp(d2 / (-2.0 * params.sigma2))


def bandwidth_heuristic(data: Dataset, cap: int = 80000) -> GaussianKernelParams:
    """sigma2 = mean squared distance of the first min(n, cap) rows to their mean."""
    if cap < 2:
        raise ConfigError(f"bandwidth cap must be >= 2, got {cap}")
    m = min(data.n, cap)
    if m < 2:
        raise DataError("bandwidth heuristic needs at least 2 instances")
    head = data.X[:m]
    if sp.issparse(head):
        center = np.asarray(head.mean(axis=0)).ravel()
    else:
        center = head.mean(axis=0)
    d2 = pairwise_sq_dists(head, center.reshape(1, -1)).ravel()
    sigma2 = float(d2.mean())
    # identical rows produce only round-off here; treat that as zero spread
    scale = float(np.mean(row_sq_norms(head)))
    if sigma2 <= 16.0 * np.finfo(np.float64).eps * max(scale, 1.0):
        raise DataError(
            "all instances used by the bandwidth heuristic coincide; "
            "pass sigma2 (or gamma) explicitly"
        )
    return GaussianKernelParams(sigma2)
