"""Matrix-vector products for numeric matrices with few distinct values.

``M = c + sum_k w_k * B_k`` where ``B_k`` is the 0/1 level set ``M - c >= tau_k``
and ``w_k = tau_k - tau_{k-1}``.  Each level set gets its own static engine.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import IO

import numpy as np

from .bitmatrix import BitMatrix, MatrixFormatError, _content_lines, _parse_header, as_vector
from .static import StaticOmv, mv as static_mv, preprocess

DEFAULT_MAX_DISTINCT = 64


class TooManyValuesError(ValueError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"matrix has {count} distinct values, more than the cap of {cap}")
        self.count = count
        self.cap = cap


@dataclass
class ThresholdDecomp:
    base_offset: float
    thresholds: np.ndarray
    weights: np.ndarray
    levels: list[BitMatrix]
    engines: list[StaticOmv]
    shape: tuple[int, int]

    @property
    def A(self) -> int:
        return len(self.thresholds)

    def reconstruct(self) -> np.ndarray:
        out = np.full(self.shape, self.base_offset, dtype=self.weights.dtype)
        for w, B in zip(self.weights, self.levels):
            out += w * B.to_dense()
        return out

    def mv(self, v) -> np.ndarray:
        return mv(self, v)


def decompose(M, max_distinct: int = DEFAULT_MAX_DISTINCT) -> ThresholdDecomp:
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if M.dtype.kind in "biu":
        M = M.astype(np.int64)
    else:
        M = M.astype(np.float64)
    values = np.unique(M)
    if len(values) > max_distinct:
        raise TooManyValuesError(len(values), max_distinct)
    c = values[0] if len(values) else M.dtype.type(0)
    shifted = M - c
    tau = values[1:] - c
    weights = np.diff(np.concatenate([[M.dtype.type(0)], tau])).astype(M.dtype)
    levels = [BitMatrix.from_dense(shifted >= t) for t in tau]
    engines = [preprocess(B) for B in levels]
    return ThresholdDecomp(c, tau, weights, levels, engines, M.shape)


def mv(D: ThresholdDecomp, v) -> np.ndarray:
    m, n = D.shape
    v = as_vector(v, n)
    dtype = np.result_type(v.dtype, D.weights.dtype)
    out = np.full(m, D.base_offset * v.sum(), dtype=dtype)
    for w, engine in zip(D.weights, D.engines):
        out += w * static_mv(engine, v)[0]
    return out


def read_numeric(stream: IO[str]) -> np.ndarray:
    """Read ``%%OMV numeric m n`` followed by m rows of n decimals."""
    lines = _content_lines(stream)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MatrixFormatError(1, "empty file") from None
    m, n = _parse_header(lineno, header, "numeric")
    rows = []
    for lineno, line in lines:
        if len(rows) == m:
            raise MatrixFormatError(lineno, f"more than {m} rows")
        parts = line.split()
        if len(parts) != n:
            raise MatrixFormatError(lineno, f"row has {len(parts)} entries, expected {n}")
        try:
            rows.append([int(p) for p in parts])
        except ValueError:
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise MatrixFormatError(lineno, f"non-numeric entry in {line!r}") from None
    if len(rows) != m:
        raise MatrixFormatError(lineno + 1 if m else 2, f"found {len(rows)} rows, expected {m}")
    if any(isinstance(x, float) for r in rows for x in r):
        return np.array(rows, dtype=np.float64).reshape(m, n)
    return np.array(rows, dtype=np.int64).reshape(m, n)
