"""Bit-packed Boolean matrices, sparse column deltas and the naive product oracle.

Rows are packed little-endian into 64-bit words: bit ``j`` of row ``i`` lives in
word ``j // 64`` at position ``j % 64``.  A column-packed mirror (the packed
transpose) is built lazily and is what the Hamming kernels run on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

WORD_BITS = 64


class MatrixFormatError(ValueError):
    """Raised for malformed matrix, vector or graph files."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _nwords(nbits: int) -> int:
    return (nbits + WORD_BITS - 1) // WORD_BITS


def pack_bits(dense: np.ndarray) -> np.ndarray:
    """Pack a 2-D bool array row-wise into a ``(rows, words)`` uint64 array."""
    dense = np.asarray(dense, dtype=bool)
    rows, nbits = dense.shape
    nw = _nwords(nbits)
    if rows == 0 or nw == 0:
        return np.zeros((rows, nw), dtype=np.uint64)
    packed = np.zeros((rows, nw * 8), dtype=np.uint8)
    packed[:, : (nbits + 7) // 8] = np.packbits(dense, axis=1, bitorder="little")
    return packed.view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, nbits: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`."""
    rows = words.shape[0]
    if rows == 0 or nbits == 0:
        return np.zeros((rows, nbits), dtype=bool)
    as_bytes = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, count=nbits, bitorder="little").astype(bool)


class BitMatrix:
    """An ``m x n`` Boolean matrix stored as packed machine words.

    Padding bits past column ``n - 1`` are always zero, so popcounts over whole
    words are exact.  Mutation through :meth:`set` drops the cached column
    mirror; it is rebuilt on the next Hamming query.
    """

    __slots__ = ("rows", "cols", "bits", "_colbits")

    def __init__(self, rows: int, cols: int, bits: np.ndarray | None = None):
        if rows < 0 or cols < 0:
            raise ValueError(f"negative shape ({rows}, {cols})")
        self.rows = rows
        self.cols = cols
        if bits is None:
            bits = np.zeros((rows, _nwords(cols)), dtype=np.uint64)
        elif bits.shape != (rows, _nwords(cols)):
            raise ValueError(f"packed shape {bits.shape} does not fit a {rows}x{cols} matrix")
        self.bits = bits
        self._colbits: np.ndarray | None = None

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    @classmethod
    def from_dense(cls, dense) -> "BitMatrix":
        dense = np.asarray(dense)
        if dense.ndim != 2:
            raise ValueError("expected a 2-D array")
        if dense.dtype != bool:
            if dense.size and not np.isin(dense, (0, 1)).all():
                raise ValueError("entries must be 0 or 1")
            dense = dense.astype(bool)
        m, n = dense.shape
        out = cls(m, n, pack_bits(dense))
        out._colbits = pack_bits(dense.T)
        return out

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def _check(self, i: int, j: int) -> None:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"entry ({i}, {j}) outside {self.rows}x{self.cols} matrix")

    def get(self, i: int, j: int) -> int:
        self._check(i, j)
        return int((self.bits[i, j // WORD_BITS] >> np.uint64(j % WORD_BITS)) & np.uint64(1))

    def set(self, i: int, j: int, value: int = 1) -> None:
        self._check(i, j)
        mask = np.uint64(1) << np.uint64(j % WORD_BITS)
        if value:
            self.bits[i, j // WORD_BITS] |= mask
        else:
            self.bits[i, j // WORD_BITS] &= ~mask
        self._colbits = None

    def to_dense(self) -> np.ndarray:
        return unpack_bits(self.bits, self.cols)

    @property
    def colbits(self) -> np.ndarray:
        """Packed columns, shape ``(cols, ceil(rows / 64))``."""
        if self._colbits is None:
            self._colbits = pack_bits(self.to_dense().T)
        return self._colbits

    def col_weights(self) -> np.ndarray:
        return np.bitwise_count(self.colbits).sum(axis=1, dtype=np.int64)

    def column(self, j: int) -> np.ndarray:
        if not 0 <= j < self.cols:
            raise IndexError(f"column {j} out of range for {self.cols} columns")
        return unpack_bits(self.colbits[j : j + 1], self.rows)[0]

    def transpose(self) -> "BitMatrix":
        out = BitMatrix(self.cols, self.rows, self.colbits.copy())
        out._colbits = self.bits.copy()
        return out

    @property
    def T(self) -> "BitMatrix":
        return self.transpose()

    def copy(self) -> "BitMatrix":
        out = BitMatrix(self.rows, self.cols, self.bits.copy())
        if self._colbits is not None:
            out._colbits = self._colbits.copy()
        return out

    def nnz(self) -> int:
        return int(np.bitwise_count(self.bits).sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.bits, other.bits)

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols}, nnz={self.nnz()})"


@dataclass(frozen=True)
class SparseDelta:
    """Signed sparse difference between two 0/1 vectors.

    ``index`` is strictly increasing; ``sign[k]`` is +1 where the target has a
    one the source lacks and -1 for the opposite case.
    """

    index: np.ndarray
    sign: np.ndarray

    @classmethod
    def empty(cls) -> "SparseDelta":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int8))

    @property
    def entries(self) -> list[tuple[int, int]]:
        return list(zip(self.index.tolist(), self.sign.tolist()))

    def __len__(self) -> int:
        return len(self.index)

    def apply(self, bits: np.ndarray) -> np.ndarray:
        out = np.asarray(bits, dtype=np.int8).copy()
        out[self.index] += self.sign
        if out.size and (out.min() < 0 or out.max() > 1):
            raise ValueError("delta does not apply to this vector")
        return out.astype(bool)

    def dot(self, v: np.ndarray):
        return (self.sign * np.asarray(v)[self.index]).sum()


def from_coords(m: int, n: int, ones: Iterable[tuple[int, int]]) -> BitMatrix:
    dense = np.zeros((m, n), dtype=bool)
    for i, j in ones:
        if not (0 <= i < m and 0 <= j < n):
            raise ValueError(f"coordinate ({i}, {j}) outside {m}x{n} matrix")
        dense[i, j] = True
    return BitMatrix.from_dense(dense)


def _check_col(M: BitMatrix, x: int) -> None:
    if not 0 <= x < M.cols:
        raise IndexError(f"column {x} out of range for {M.cols} columns")


def hamming_cols(M: BitMatrix, x: int, y: int) -> int:
    _check_col(M, x)
    _check_col(M, y)
    cb = M.colbits
    return int(np.bitwise_count(cb[x] ^ cb[y]).sum())


def hamming_to_all(packed: np.ndarray, x: int) -> np.ndarray:
    """Hamming distance from packed vector ``x`` to every packed vector."""
    return np.bitwise_count(packed ^ packed[x]).sum(axis=1, dtype=np.int64)


def delta_cols(M: BitMatrix, x: int, y: int) -> SparseDelta:
    """The delta taking column ``x`` to column ``y``."""
    _check_col(M, x)
    _check_col(M, y)
    cb = M.colbits
    diff = unpack_bits((cb[x] ^ cb[y])[None, :], M.rows)[0]
    index = np.flatnonzero(diff)
    target = unpack_bits(cb[y][None, :], M.rows)[0]
    sign = np.where(target[index], 1, -1).astype(np.int8)
    return SparseDelta(index.astype(np.int64), sign)


def as_vector(v, n: int | None = None) -> np.ndarray:
    """Coerce ``v`` to int64 (integral input) or float64, checking its length."""
    arr = np.asarray(v)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.dtype.kind in "biu":
        arr = arr.astype(np.int64, copy=False)
    else:
        arr = arr.astype(np.float64, copy=False)
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"vector has length {arr.shape[0]}, expected {n}")
    return arr


def naive_mv(M: BitMatrix, v) -> np.ndarray:
    v = as_vector(v, M.cols)
    return M.to_dense().astype(v.dtype) @ v


def transpose(M: BitMatrix) -> BitMatrix:
    return M.transpose()


# -- file formats ---------------------------------------------------------


def _content_lines(stream: IO[str]):
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if line:
            yield lineno, line


def _parse_header(lineno: int, line: str, kind: str) -> list[int]:
    parts = line.split()
    if len(parts) != 4 or parts[0] != "%%OMV" or parts[1] != kind:
        raise MatrixFormatError(lineno, f"expected '%%OMV {kind} <a> <b>' header, got {line!r}")
    try:
        a, b = int(parts[2]), int(parts[3])
    except ValueError:
        raise MatrixFormatError(lineno, "header dimensions must be integers") from None
    if a < 0 or b < 0:
        raise MatrixFormatError(lineno, "header dimensions must be nonnegative")
    return [a, b]


def read_matrix(stream: IO[str]) -> BitMatrix:
    lines = _content_lines(stream)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MatrixFormatError(1, "empty file") from None
    m, n = _parse_header(lineno, header, "bitmatrix")
    try:
        lineno, layout = next(lines)
    except StopIteration:
        raise MatrixFormatError(lineno + 1, "missing 'dense' or 'coo' layout line") from None
    dense = np.zeros((m, n), dtype=bool)
    if layout == "dense":
        count = 0
        for lineno, line in lines:
            if count == m:
                raise MatrixFormatError(lineno, f"more than {m} rows")
            if len(line) != n:
                raise MatrixFormatError(lineno, f"row has {len(line)} columns, expected {n}")
            bad = set(line) - {"0", "1"}
            if bad:
                raise MatrixFormatError(lineno, f"illegal character {sorted(bad)[0]!r}")
            dense[count] = np.frombuffer(line.encode(), dtype=np.uint8) == ord("1")
            count += 1
        # Zero-width rows are blank lines, which carry no content to count.
        if count != m and n > 0:
            raise MatrixFormatError(lineno + 1, f"found {count} rows, expected {m}")
    elif layout == "coo":
        for lineno, line in lines:
            parts = line.split()
            if len(parts) != 2:
                raise MatrixFormatError(lineno, f"expected 'i j', got {line!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise MatrixFormatError(lineno, f"non-integer coordinate in {line!r}") from None
            if not (0 <= i < m and 0 <= j < n):
                raise MatrixFormatError(lineno, f"coordinate ({i}, {j}) outside {m}x{n} matrix")
            dense[i, j] = True
    else:
        raise MatrixFormatError(lineno, f"unknown layout {layout!r}")
    return BitMatrix.from_dense(dense)


def write_matrix(M: BitMatrix, stream: IO[str], layout: str = "dense") -> None:
    stream.write(f"%%OMV bitmatrix {M.rows} {M.cols}\n{layout}\n")
    dense = M.to_dense()
    if layout == "dense":
        for row in dense:
            stream.write("".join("1" if b else "0" for b in row) + "\n")
    elif layout == "coo":
        for i, j in zip(*np.nonzero(dense)):
            stream.write(f"{i} {j}\n")
    else:
        raise ValueError(f"unknown layout {layout!r}")


def read_vector(stream: IO[str]) -> np.ndarray:
    values = []
    for lineno, line in _content_lines(stream):
        try:
            values.append(int(line))
        except ValueError:
            try:
                values.append(float(line))
            except ValueError:
                raise MatrixFormatError(lineno, f"not a number: {line!r}") from None
    if any(isinstance(x, float) for x in values):
        return np.array(values, dtype=np.float64)
    return np.array(values, dtype=np.int64)


def format_number(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def write_vector(v, stream: IO[str]) -> None:
    for x in np.asarray(v).tolist():
        stream.write(format_number(x) + "\n")
