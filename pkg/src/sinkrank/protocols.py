"""Evaluation regimes: full test set, single query, and retrieval direction.

In the single-query regime a transform may only see one test query at a
time. Each query is stacked (as row 0) on top of ``m - 1`` training queries
drawn from a staging pool, the stack is transformed, and row 0 is scored.
Pseudo-test matrices are ``m x N`` over the full gallery, never ``m x m``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import rng
from .errors import ConfigError, DimensionError
from .matrix import SimilarityMatrix, as_matrix
from .metrics import GroundTruth, MetricsReport, compute_metrics, rank_of_best_relevant
from .transforms import Method, TransformConfig, apply_transform

__all__ = [
    "DEFAULT_POOL_SIZE",
    "DEFAULT_RESAMPLES",
    "DEFAULT_SAMPLE_SIZE",
    "PseudoTestConfig",
    "SingleQueryReport",
    "build_pseudo_test",
    "draw_staging_pool",
    "evaluate_full",
    "single_query_eval",
    "transpose_direction",
]

DEFAULT_POOL_SIZE = 5000
DEFAULT_SAMPLE_SIZE = 1000
DEFAULT_RESAMPLES = 3


@dataclass(frozen=True)
class PseudoTestConfig:
    """Sizes and seed for pseudo-test construction.

    ``sample_size`` is the number of rows in each pseudo-test matrix,
    including the test query itself.
    """

    pool_size: int = DEFAULT_POOL_SIZE
    sample_size: int = DEFAULT_SAMPLE_SIZE
    resamples: int = DEFAULT_RESAMPLES
    seed: int = 0

    def __post_init__(self):
        for name in ("pool_size", "sample_size", "resamples", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.pool_size < 1:
            raise ConfigError(f"pool_size must be positive, got {self.pool_size}")
        if self.sample_size < 2:
            raise ConfigError(f"sample_size must be at least 2, got {self.sample_size}")
        if self.sample_size - 1 > self.pool_size:
            raise ConfigError(
                f"sample_size - 1 = {self.sample_size - 1} exceeds pool_size = {self.pool_size}"
            )
        if self.resamples < 1:
            raise ConfigError(f"resamples must be at least 1, got {self.resamples}")


@dataclass(frozen=True)
class SingleQueryReport(MetricsReport):
    """Resample-averaged metrics.

    ``recall_at``, ``median_rank`` and ``mean_rank`` are means over the
    per-resample reports; ``per_query_rank`` holds resample 0 so it can feed
    :func:`~sinkrank.metrics.paired_significance`.
    """

    per_resample: tuple[MetricsReport, ...] = ()


def evaluate_full(A, gt: GroundTruth, cfg: TransformConfig, ks: Iterable[int] = (1, 5, 10)) -> MetricsReport:
    """Transform the whole test matrix, then evaluate it."""
    return compute_metrics(apply_transform(A, cfg), gt, ks)


def transpose_direction(A, gt_t2v: GroundTruth) -> tuple[SimilarityMatrix, GroundTruth]:
    """Flip text-to-video into video-to-text (or back).

    Items nobody is relevant to become unjudged queries.
    """
    A = as_matrix(A)
    gt_t2v.validate(A.n_rows, A.n_cols)
    return A.transpose(), gt_t2v.invert()


def draw_staging_pool(train: SimilarityMatrix, pool_size: int, seed: int) -> SimilarityMatrix:
    """First sampling stage: ``pool_size`` training rows, uniformly, in index order."""
    if pool_size > train.n_rows:
        raise ConfigError(f"pool_size {pool_size} exceeds the {train.n_rows} available training rows")
    if pool_size == train.n_rows:
        return train
    rows = rng.sample_without_replacement(rng.stream(seed, rng.STAGING_POOL), train.n_rows, pool_size)
    return train.take_rows(rows)


def _pool_rows(pool_size: int, cfg: PseudoTestConfig, query_index: int, resample_index: int) -> np.ndarray:
    bitgen = rng.stream(cfg.seed, rng.PSEUDO_TEST, query_index, resample_index)
    return rng.sample_without_replacement(bitgen, pool_size, cfg.sample_size - 1)


def build_pseudo_test(
    test_row,
    train_pool: SimilarityMatrix,
    cfg: PseudoTestConfig,
    resample_index: int,
    query_index: int = 0,
) -> SimilarityMatrix:
    """Stack one test row on top of ``m - 1`` rows sampled from the pool.

    Sampling is uniform without replacement and fully determined by
    ``(cfg.seed, query_index, resample_index)``; the sampled rows keep their
    pool order. Row ids are dropped.
    """
    test_row = np.asarray(test_row, dtype=np.float64)
    train_pool = as_matrix(train_pool)
    if train_pool.n_rows != cfg.pool_size:
        raise ConfigError(f"train pool has {train_pool.n_rows} rows, config says {cfg.pool_size}")
    if test_row.shape != (train_pool.n_cols,):
        raise DimensionError(
            f"test row has shape {test_row.shape}, pool gallery has {train_pool.n_cols} items"
        )
    rows = _pool_rows(cfg.pool_size, cfg, query_index, resample_index)
    return SimilarityMatrix(np.vstack([test_row[None, :], train_pool.data[rows]]), None, train_pool.col_ids)


def single_query_eval(
    test_matrix,
    gt: GroundTruth,
    train_pool,
    tcfg: TransformConfig,
    pcfg: PseudoTestConfig,
    ks: Iterable[int] = (1, 5, 10),
    *,
    leave_one_out: bool = False,
    workers: int = 1,
) -> SingleQueryReport:
    """Score each judged test query through its own pseudo-test matrices.

    Args:
        test_matrix: test queries x gallery. Only row ``q`` is read while
            scoring query ``q``.
        gt: relevance for the test queries.
        train_pool: training queries x the same gallery. If it has more than
            ``pcfg.pool_size`` rows a staging pool of that size is drawn
            first (seeded by ``pcfg.seed``).
        tcfg: transform applied to every pseudo-test matrix.
        pcfg: pool/sample sizes, resample count and seed.
        ks: Recall cutoffs.
        leave_one_out: the pool *is* the test query set; query ``q``'s own
            row is removed from its pool, which must then hold
            ``pcfg.pool_size + 1`` rows. Not a fair setting; used to check
            consistency with :func:`evaluate_full`.
        workers: thread count. Results do not depend on it.
    """
    if not hasattr(test_matrix, "row"):
        test_matrix = as_matrix(test_matrix)
    train_pool = as_matrix(train_pool)
    n_items = test_matrix.n_cols
    if train_pool.n_cols != n_items:
        raise DimensionError(f"train pool has {train_pool.n_cols} items, test matrix has {n_items}")
    if test_matrix.col_ids and train_pool.col_ids and test_matrix.col_ids != train_pool.col_ids:
        raise DimensionError("test and train galleries have different item ids")
    gt.validate(test_matrix.n_rows, n_items)
    ks = list(ks)
    if leave_one_out:
        if train_pool.n_rows != pcfg.pool_size + 1:
            raise ConfigError(
                f"leave-one-out pool needs pool_size + 1 = {pcfg.pool_size + 1} rows, "
                f"got {train_pool.n_rows}"
            )
        pool = train_pool.data
    else:
        pool = draw_staging_pool(train_pool, pcfg.pool_size, pcfg.seed).data

    queries = gt.queries
    identity = tcfg.method is Method.IDENTITY

    def score(q: int) -> list[int]:
        test_row = np.array(test_matrix.row(q), dtype=np.float64)
        relevant = gt.relevant[q]
        if identity:
            # row 0 passes through untouched whatever the sample
            return [rank_of_best_relevant(test_row, relevant)] * pcfg.resamples
        if leave_one_out:
            candidates = np.delete(pool, q, axis=0)
        else:
            candidates = pool
        ranks = []
        for r in range(pcfg.resamples):
            rows = _pool_rows(pcfg.pool_size, pcfg, q, r)
            pseudo = SimilarityMatrix(np.vstack([test_row[None, :], candidates[rows]]))
            rescored = apply_transform(pseudo, tcfg)
            ranks.append(rank_of_best_relevant(rescored.row(0), relevant))
        return ranks

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            per_query = list(ex.map(score, queries))
    else:
        per_query = [score(q) for q in queries]

    ranks = np.array(per_query, dtype=np.int64).reshape(len(queries), pcfg.resamples)
    reports = tuple(MetricsReport.from_ranks(ranks[:, r], ks, queries) for r in range(pcfg.resamples))
    ks_sorted = list(reports[0].recall_at)
    return SingleQueryReport(
        recall_at={k: float(np.mean([rep.recall_at[k] for rep in reports])) for k in ks_sorted},
        median_rank=float(np.mean([rep.median_rank for rep in reports])),
        mean_rank=float(np.mean([rep.mean_rank for rep in reports])),
        per_query_rank=reports[0].per_query_rank,
        query_index=reports[0].query_index,
        per_resample=reports,
    )
