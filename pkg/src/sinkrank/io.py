"""On-disk formats.

SMX matrix file (all little-endian)::

    offset 0   4 bytes   magic b"SMX1"
    offset 4   uint32    n_rows
    offset 8   uint32    n_cols
    offset 12  float64   n_rows * n_cols scores, row-major

Optional sidecars ``<path>.rows`` / ``<path>.cols`` hold one id per line.

Ground-truth file: UTF-8 text, ``query<TAB>item[,item...]`` per line, ``#``
comments and blank lines ignored. Ids resolve against the matrix sidecars,
or are 0-based indices when there are none.

Rank dump: ``query<TAB>rank`` per line, as written by ``--dump-ranks``.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    NonFiniteValueError,
    SidecarError,
    SizeMismatchError,
    TextFormatError,
    TruncatedError,
    VersionError,
)
from .matrix import SimilarityMatrix
from .metrics import GroundTruth, MetricsReport

__all__ = [
    "MAGIC",
    "read_csv_matrix",
    "read_ground_truth",
    "read_matrix",
    "read_ranks",
    "write_csv_matrix",
    "write_ground_truth",
    "write_matrix",
    "write_ranks",
]

MAGIC = b"SMX1"
_HEADER = struct.Struct("<4sII")
_MAX_DIM = 2**32 - 1


def _sidecar_paths(path) -> tuple[Path, Path]:
    path = Path(path)
    return path.with_name(path.name + ".rows"), path.with_name(path.name + ".cols")


def _write_ids(path: Path, ids) -> None:
    if ids is None:
        if path.exists():
            path.unlink()
        return
    for i in ids:
        if not i or "\n" in i or "\r" in i or "\t" in i or "," in i:
            raise ValueError(f"id {i!r} cannot be stored in a sidecar")
    path.write_text("".join(f"{i}\n" for i in ids), encoding="utf-8")


def _read_ids(path: Path, expected: int) -> tuple[str, ...] | None:
    if not path.exists():
        return None
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    seen: dict[str, int] = {}
    for lineno, ident in enumerate(lines, start=1):
        if ident.endswith("\r"):
            ident = ident[:-1]
            lines[lineno - 1] = ident
        if not ident:
            raise SidecarError("empty id", path, lineno)
        if ident in seen:
            raise SidecarError(f"duplicate id {ident!r} (first on line {seen[ident]})", path, lineno)
        seen[ident] = lineno
    if len(lines) != expected:
        raise SidecarError(
            f"{len(lines)} ids for {expected} matrix entries", path, min(len(lines), expected) + 1
        )
    return tuple(lines)


def write_matrix(A: SimilarityMatrix, path) -> None:
    """Write ``A`` as SMX, plus sidecars when it carries ids.

    Stale sidecars from a previous file at ``path`` are removed.
    """
    path = Path(path)
    n_rows, n_cols = A.shape
    if n_rows > _MAX_DIM or n_cols > _MAX_DIM:
        raise ValueError(f"shape {A.shape} exceeds the uint32 header limit")
    payload = np.ascontiguousarray(A.data, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n_rows, n_cols))
        fh.write(payload)
    rows_path, cols_path = _sidecar_paths(path)
    _write_ids(rows_path, A.row_ids)
    _write_ids(cols_path, A.col_ids)


def read_matrix(path) -> SimilarityMatrix:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 4:
        raise TruncatedError(f"file ends inside the magic ({len(blob)} bytes)", path, len(blob))
    magic = blob[:4]
    if magic != MAGIC:
        if magic[:3] == MAGIC[:3]:
            raise VersionError(f"unsupported SMX version: found magic {magic!r}, expected {MAGIC!r}", path, 0)
        raise BadMagicError(f"not an SMX file: found magic {magic!r}, expected {MAGIC!r}", path, 0)
    if len(blob) < _HEADER.size:
        raise TruncatedError(f"file ends inside the header ({len(blob)} bytes)", path, len(blob))
    _, n_rows, n_cols = _HEADER.unpack_from(blob)
    expected = _HEADER.size + 8 * n_rows * n_cols
    if len(blob) < expected:
        raise TruncatedError(
            f"payload truncated: header declares {n_rows}x{n_cols} ({expected} bytes), file has {len(blob)}",
            path,
            len(blob),
        )
    if len(blob) > expected:
        raise SizeMismatchError(
            f"{len(blob) - expected} trailing bytes after the declared {n_rows}x{n_cols} payload",
            path,
            expected,
        )
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(n_rows, n_cols)
    finite = np.isfinite(data)
    if not finite.all():
        flat = int(np.flatnonzero(~finite.ravel())[0])
        r, c = divmod(flat, n_cols)
        raise NonFiniteValueError(
            f"non-finite value {data[r, c]!r} at (row {r}, col {c})", path, _HEADER.size + 8 * flat
        )
    rows_path, cols_path = _sidecar_paths(path)
    return SimilarityMatrix(
        data.astype(np.float64),
        _read_ids(rows_path, n_rows),
        _read_ids(cols_path, n_cols),
    )


def _resolver(ids, n: int, what: str):
    if ids is not None:
        index = {ident: i for i, ident in enumerate(ids)}

        def resolve(token: str) -> int:
            try:
                return index[token]
            except KeyError:
                raise LookupError(f"unknown {what} id {token!r}") from None

        return resolve

    def resolve_int(token: str) -> int:
        try:
            i = int(token)
        except ValueError:
            raise LookupError(f"{what} {token!r} is not an integer index (no sidecar ids)") from None
        if not 0 <= i < n:
            raise LookupError(f"{what} index {i} out of range [0, {n})")
        return i

    return resolve_int


def read_ground_truth(path, A: SimilarityMatrix) -> GroundTruth:
    """Parse a ground-truth file against the ids (or shape) of ``A``."""
    path = Path(path)
    query_of = _resolver(A.row_ids, A.n_rows, "query")
    item_of = _resolver(A.col_ids, A.n_cols, "item")
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise TextFormatError("expected 'query<TAB>item[,item...]'", path, lineno)
            query, items = parts[0].strip(), [t.strip() for t in parts[1].split(",")]
            if not query or not all(items):
                raise TextFormatError("empty query or item id", path, lineno)
            try:
                q = query_of(query)
                pairs.extend((q, item_of(t)) for t in items)
            except LookupError as exc:
                raise TextFormatError(str(exc), path, lineno) from None
    if not pairs:
        raise TextFormatError("no relevance records", path, None)
    return GroundTruth.from_pairs(pairs)


def write_ground_truth(gt: GroundTruth, path, row_ids=None, col_ids=None) -> None:
    lines = []
    for q, items in gt.relevant.items():
        qname = str(q) if row_ids is None else row_ids[q]
        inames = [str(i) if col_ids is None else col_ids[i] for i in sorted(items)]
        lines.append(f"{qname}\t{','.join(inames)}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def write_ranks(report: MetricsReport, path, row_ids=None) -> None:
    lines = ["# query\trank\n"]
    for q, r in zip(report.query_index, report.per_query_rank):
        lines.append(f"{q if row_ids is None else row_ids[q]}\t{r}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_ranks(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    ids, ranks = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise TextFormatError("expected 'query<TAB>rank'", path, lineno)
            try:
                rank = int(parts[1])
            except ValueError:
                raise TextFormatError(f"rank {parts[1]!r} is not an integer", path, lineno) from None
            if rank < 1:
                raise TextFormatError(f"rank {rank} is not positive", path, lineno)
            ids.append(parts[0])
            ranks.append(rank)
    if not ranks:
        raise TextFormatError("no ranks", path, None)
    return ids, np.array(ranks, dtype=np.int64)


def read_csv_matrix(path) -> SimilarityMatrix:
    """Plain comma-separated scores, one query per line, no header."""
    path = Path(path)
    rows = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals = [float(t) for t in line.split(",")]
            except ValueError as exc:
                raise TextFormatError(str(exc), path, lineno) from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise TextFormatError(f"{len(vals)} values, expected {width}", path, lineno)
            if not all(np.isfinite(vals)):
                raise TextFormatError("non-finite value", path, lineno)
            rows.append(vals)
    if not rows:
        raise TextFormatError("no data rows", path, None)
    return SimilarityMatrix(np.array(rows, dtype=np.float64))


def write_csv_matrix(A: SimilarityMatrix, path) -> None:
    # 17 significant digits round-trip every float64
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in A.data:
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")


def is_csv_path(path) -> bool:
    return os.fspath(path).lower().endswith(".csv")
