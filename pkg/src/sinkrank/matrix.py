"""Similarity matrix container and stable log-sum-exp / softmax kernels.

Orientation is fixed globally: rows are queries, columns are gallery items.
``axis=0`` normalizes each column over the queries (the hub-suppressing
direction), ``axis=1`` normalizes each row over the items.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, NonFiniteError

__all__ = [
    "SimilarityMatrix",
    "as_matrix",
    "log_sum_exp",
    "logsumexp_axis",
    "softmax_axis",
]


def _check_ids(ids, expected: int, what: str):
    if ids is None:
        return None
    ids = tuple(str(i) for i in ids)
    if len(ids) != expected:
        raise DimensionError(f"{what} has {len(ids)} entries, expected {expected}")
    if len(set(ids)) != len(ids):
        seen = set()
        for pos, i in enumerate(ids):
            if i in seen:
                raise DimensionError(f"duplicate {what} entry {i!r} at position {pos}")
            seen.add(i)
    return ids


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Dense queries x items score matrix with optional id sidecars.

    The array is copied to a C-contiguous float64 buffer and frozen, so
    instances can be shared freely between threads.
    """

    data: np.ndarray
    row_ids: tuple[str, ...] | None = None
    col_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise DimensionError(f"similarity matrix must be 2-D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise NonFiniteError(f"non-finite score at (row {bad[0]}, col {bad[1]})")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "row_ids", _check_ids(self.row_ids, arr.shape[0], "row_ids"))
        object.__setattr__(self, "col_ids", _check_ids(self.col_ids, arr.shape[1], "col_ids"))

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def row(self, i: int) -> np.ndarray:
        """Read-only view of query row ``i``."""
        return self.data[i]

    def with_data(self, data) -> SimilarityMatrix:
        """Same id sidecars, new scores of identical shape."""
        data = np.asarray(data)
        if data.shape != self.shape:
            raise DimensionError(f"shape {data.shape} does not match {self.shape}")
        return SimilarityMatrix(data, self.row_ids, self.col_ids)

    def take_rows(self, rows: Sequence[int]) -> SimilarityMatrix:
        rows = np.asarray(rows, dtype=np.intp)
        ids = None if self.row_ids is None else [self.row_ids[i] for i in rows]
        return SimilarityMatrix(self.data[rows], ids, self.col_ids)

    def transpose(self) -> SimilarityMatrix:
        return SimilarityMatrix(self.data.T, self.col_ids, self.row_ids)

    def __eq__(self, other):
        if not isinstance(other, SimilarityMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.row_ids == other.row_ids
            and self.col_ids == other.col_ids
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None


def as_matrix(A) -> SimilarityMatrix:
    if isinstance(A, SimilarityMatrix):
        return A
    return SimilarityMatrix(A)


def log_sum_exp(values) -> float:
    """``log(sum(exp(values)))`` with the max-shift trick.

    Exact for a single element and free of overflow for any finite input.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise DimensionError("log_sum_exp of an empty sequence")
    if not np.isfinite(v).all():
        raise NonFiniteError("log_sum_exp requires finite inputs")
    if v.size == 1:
        return float(v[0])
    m = v.max()
    return float(m + np.log(np.exp(v - m).sum()))


def logsumexp_axis(a: np.ndarray, axis: int) -> np.ndarray:
    """Row- or column-wise log-sum-exp of a finite 2-D array, keepdims."""
    m = a.max(axis=axis, keepdims=True)
    return m + np.log(np.exp(a - m).sum(axis=axis, keepdims=True))


def _softmax_array(a: np.ndarray, axis: int) -> np.ndarray:
    e = np.exp(a - a.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def _check_axis(axis: int) -> int:
    if axis not in (0, 1):
        raise DimensionError(f"axis must be 0 (over queries) or 1 (over items), got {axis!r}")
    return axis


def softmax_axis(A, axis: int) -> SimilarityMatrix:
    """Numerically stable softmax along one axis.

    Args:
        A: score matrix (or anything convertible to one).
        axis: 0 normalizes every column over the queries, 1 normalizes every
            row over the items.

    Returns:
        A matrix of the same shape whose slices along ``axis`` sum to 1.
    """
    A = as_matrix(A)
    return A.with_data(_softmax_array(A.data, _check_axis(axis)))
