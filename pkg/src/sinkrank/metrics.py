"""Recall@K, median/mean rank and a paired randomization test."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import rng
from .errors import ConfigError, GroundTruthError, InputError
from .matrix import SimilarityMatrix, as_matrix

__all__ = [
    "DEFAULT_ITERATIONS",
    "GroundTruth",
    "MetricsReport",
    "compute_metrics",
    "paired_significance",
    "rank_of_best_relevant",
]

DEFAULT_ITERATIONS = 100_000


@dataclass(frozen=True)
class GroundTruth:
    """Per-query sets of relevant item indices.

    Queries missing from ``relevant`` are unjudged and skipped by
    :func:`compute_metrics`; judged queries must have at least one relevant
    item.
    """

    relevant: Mapping[int, frozenset[int]]

    def __post_init__(self):
        rel = {}
        for q, items in self.relevant.items():
            items = frozenset(int(i) for i in items)
            if not items:
                raise GroundTruthError(f"query {q} has an empty relevance set")
            if int(q) < 0 or min(items) < 0:
                raise GroundTruthError(f"negative index in relevance of query {q}")
            rel[int(q)] = items
        object.__setattr__(self, "relevant", dict(sorted(rel.items())))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> GroundTruth:
        rel: dict[int, set[int]] = {}
        for q, i in pairs:
            rel.setdefault(int(q), set()).add(int(i))
        return cls(rel)

    @classmethod
    def diagonal(cls, n: int) -> GroundTruth:
        return cls({i: frozenset([i]) for i in range(n)})

    @property
    def queries(self) -> list[int]:
        return list(self.relevant)

    def __len__(self) -> int:
        return len(self.relevant)

    def validate(self, n_rows: int, n_cols: int) -> None:
        for q, items in self.relevant.items():
            if q >= n_rows:
                raise GroundTruthError(f"query index {q} out of range for {n_rows} rows")
            if max(items) >= n_cols:
                raise GroundTruthError(
                    f"item index {max(items)} of query {q} out of range for {n_cols} columns"
                )

    def invert(self) -> GroundTruth:
        """Swap the roles of queries and items."""
        return GroundTruth.from_pairs((i, q) for q, items in self.relevant.items() for i in items)

    def subset(self, queries: Sequence[int]) -> GroundTruth:
        return GroundTruth({q: self.relevant[q] for q in queries})


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate ranking metrics plus the per-query ranks behind them.

    ``per_query_rank[i]`` belongs to query ``query_index[i]``. Median rank of
    an even count is the mean of the two middle values, so it may be
    fractional.
    """

    recall_at: dict[int, float]
    median_rank: float
    mean_rank: float
    per_query_rank: tuple[int, ...]
    query_index: tuple[int, ...]

    @property
    def n_queries(self) -> int:
        return len(self.per_query_rank)

    @classmethod
    def from_ranks(cls, ranks, ks: Iterable[int], query_index=None) -> MetricsReport:
        ranks = np.asarray(ranks, dtype=np.int64)
        if ranks.size == 0:
            raise GroundTruthError("no judged queries to evaluate")
        ks = _check_ks(ks)
        n = ranks.size
        recall = {k: int(np.count_nonzero(ranks <= k)) / n for k in ks}
        if query_index is None:
            query_index = range(n)
        return cls(
            recall_at=recall,
            median_rank=float(np.median(ranks)),
            mean_rank=float(ranks.mean()),
            per_query_rank=tuple(int(r) for r in ranks),
            query_index=tuple(int(q) for q in query_index),
        )


def _check_ks(ks: Iterable[int]) -> list[int]:
    ks = sorted(set(int(k) for k in ks))
    if not ks:
        raise ConfigError("at least one cutoff K is required")
    if ks[0] < 1:
        raise ConfigError(f"cutoffs must be positive, got {ks[0]}")
    return ks


def rank_of_best_relevant(scores_row, relevant) -> int:
    """1-based rank of the best-scoring relevant item.

    Ties are optimistic: only items scoring strictly higher push the rank
    down.
    """
    scores = np.asarray(scores_row, dtype=np.float64)
    relevant = list(relevant)
    if not relevant:
        raise GroundTruthError("empty relevance set")
    if min(relevant) < 0 or max(relevant) >= scores.size:
        raise GroundTruthError(f"relevant index out of range for {scores.size} items")
    best = scores[relevant].max()
    return 1 + int(np.count_nonzero(scores > best))


def compute_metrics(A, gt: GroundTruth, ks: Iterable[int] = (1, 5, 10)) -> MetricsReport:
    """Evaluate every judged query of ``gt`` against the rows of ``A``."""
    A = as_matrix(A)
    gt.validate(A.n_rows, A.n_cols)
    queries = gt.queries
    ranks = [rank_of_best_relevant(A.row(q), gt.relevant[q]) for q in queries]
    return MetricsReport.from_ranks(ranks, ks, queries)


def paired_significance(
    ranks_a,
    ranks_b,
    k: int,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
) -> float:
    """Two-sided paired randomization test on per-query hits ``rank <= k``.

    Each iteration flips the sign of every paired difference with
    probability 1/2 and counts the permutation as extreme when its absolute
    summed difference is at least the observed one. Comparisons are done on
    integer sums, so the result is exactly symmetric in ``a`` and ``b``.

    Sign bits for iteration ``i`` come from a fixed slice of a Philox stream
    keyed by ``seed``, so any chunking of the iterations gives the same p.

    Returns:
        ``(1 + extreme) / (1 + iterations)``.
    """
    a = np.asarray(ranks_a, dtype=np.int64)
    b = np.asarray(ranks_b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"rank lists must have equal length, got {a.shape} and {b.shape}")
    if a.size == 0:
        raise InputError("rank lists are empty")
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    if iterations < 1000:
        raise ConfigError(f"at least 1000 iterations required, got {iterations}")

    d = (a <= k).astype(np.int64) - (b <= k).astype(np.int64)
    observed = abs(int(d.sum()))
    nz = d[d != 0]
    if observed == 0:
        return 1.0
    n = d.size
    words = (n + 63) // 64
    # ~8 MB of sign bits per chunk
    chunk = max(1, min(iterations, (1 << 20) // words))
    extreme = 0
    bitgen = rng.stream(seed, rng.SIGNIFICANCE)
    mask = d != 0
    for start in range(0, iterations, chunk):
        m = min(chunk, iterations - start)
        raw = rng.raw_words(bitgen, m * words).astype("<u8")
        bits = np.unpackbits(raw.view(np.uint8).reshape(m, words * 8), axis=1, bitorder="little")
        signs = 1 - 2 * bits[:, :n][:, mask].astype(np.int64)
        perm = np.abs(signs @ nz)
        extreme += int(np.count_nonzero(perm >= observed))
    return (1 + extreme) / (1 + iterations)
