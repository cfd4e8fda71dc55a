"""Fully dynamic OMv by dyadic bucketing of static engines.

Rows are split into stripes and, inside every stripe, columns are split into
buckets.  Level ``i`` holds at most ``2**i`` stored items.  Inserts enter level
0 and cascade upward like a binary counter; deletes leave tombstones that are
purged once a level accumulates ``2**i / 2`` of them.  Any level whose contents
change gets a fresh :class:`~omv.static.StaticOmv`.

Row and column ids are stable handles that are never recycled.  The logical
matrix lists live rows and live columns in increasing id order.
"""
from __future__ import annotations

import numpy as np

from .bitmatrix import BitMatrix, as_vector
from .static import StaticOmv, mv, preprocess


class InvariantError(AssertionError):
    pass


def _top_level(count: int) -> int:
    return max(count - 1, 0).bit_length()


class _IdSpace:
    """Monotone id allocator with liveness flags and cached logical positions."""

    def __init__(self, initial: int):
        self._live = np.ones(max(initial, 16), dtype=bool)
        self._live[initial:] = False
        self.size = initial
        self.count = initial
        self._pos: np.ndarray | None = None

    def allocate(self) -> int:
        if self.size == len(self._live):
            self._live = np.concatenate([self._live, np.zeros(len(self._live), dtype=bool)])
        new = self.size
        self._live[new] = True
        self.size += 1
        self.count += 1
        self._pos = None
        return new

    def kill(self, ident: int) -> None:
        self._live[ident] = False
        self.count -= 1
        self._pos = None

    def is_live(self, ident) -> bool:
        return isinstance(ident, (int, np.integer)) and 0 <= ident < self.size and bool(self._live[ident])

    def live_ids(self) -> np.ndarray:
        return np.flatnonzero(self._live[: self.size])

    def positions(self) -> np.ndarray:
        """id -> logical position, or -1 for dead ids."""
        if self._pos is None:
            live = self._live[: self.size]
            pos = np.cumsum(live, dtype=np.int64) - 1
            pos[~live] = -1
            self._pos = pos
        return self._pos


class _Bucket:
    __slots__ = ("ids", "bits", "tombs", "engine")

    def __init__(self, nrows: int):
        self.ids = np.zeros(0, dtype=np.int64)
        self.bits = np.zeros((nrows, 0), dtype=bool)
        self.tombs: set[int] = set()
        self.engine: StaticOmv | None = None

    def live(self):
        if not self.tombs:
            return self.ids, self.bits
        keep = np.array([c not in self.tombs for c in self.ids.tolist()], dtype=bool)
        return self.ids[keep], self.bits[:, keep]


class ColBuckets:
    """Column-dynamic OMv over a fixed set of rows."""

    def __init__(self, nrows: int, ids=None, bits=None):
        self.nrows = nrows
        self.buckets: list[_Bucket] = []
        self.where: dict[int, int] = {}
        self.rebuilt_columns = 0
        self.rebuilds = 0
        if ids is not None and len(ids):
            self._fill(_top_level(len(ids)), np.asarray(ids, dtype=np.int64), np.asarray(bits, dtype=bool))

    def _level(self, i: int) -> _Bucket:
        while len(self.buckets) <= i:
            self.buckets.append(_Bucket(self.nrows))
        return self.buckets[i]

    def _fill(self, i: int, ids: np.ndarray, bits: np.ndarray) -> None:
        b = self._level(i)
        b.ids = ids
        b.bits = bits
        b.tombs = set()
        b.engine = preprocess(BitMatrix.from_dense(bits)) if len(ids) else None
        for c in ids.tolist():
            self.where[c] = i
        self.rebuilt_columns += len(ids)
        self.rebuilds += 1

    def insert(self, cid: int, column: np.ndarray) -> None:
        ids = np.array([cid], dtype=np.int64)
        bits = np.asarray(column, dtype=bool).reshape(self.nrows, 1)
        i = 0
        while True:
            b = self._level(i)
            if len(b.ids):
                lid, lbits = b.live()
                ids = np.concatenate([lid, ids])
                bits = np.hstack([lbits, bits])
            if len(ids) > (1 << i):
                # Overflow: everything still live moves up a level.
                b.ids = np.zeros(0, dtype=np.int64)
                b.bits = np.zeros((self.nrows, 0), dtype=bool)
                b.tombs = set()
                b.engine = None
                i += 1
                continue
            self._fill(i, ids, bits)
            return

    def delete(self, cid: int) -> None:
        i = self.where.pop(cid)
        b = self.buckets[i]
        b.tombs.add(cid)
        if len(b.tombs) >= (1 << i) / 2:
            self._fill(i, *b.live())

    def query(self, colpos: np.ndarray, vext: np.ndarray, stats: list[int]):
        """Sum of bucket products; ``vext[-1]`` is 0 and absorbs dead columns."""
        out = None
        for b in self.buckets:
            if b.engine is None:
                continue
            part, st = mv(b.engine, vext[colpos[b.ids]])
            stats[0] += st.touched_nonzeros
            stats[1] += st.dense_ops
            out = part if out is None else out + part
        return out

    def dense(self, colpos: np.ndarray, ncols: int) -> np.ndarray:
        block = np.zeros((self.nrows, ncols), dtype=bool)
        for b in self.buckets:
            if len(b.ids):
                p = colpos[b.ids]
                keep = p >= 0
                block[:, p[keep]] = b.bits[:, keep]
        return block

    def stored_columns(self) -> int:
        return sum(len(b.ids) for b in self.buckets)


class _Stripe:
    __slots__ = ("row_ids", "tombs", "cols")

    def __init__(self, row_ids: np.ndarray, cols: ColBuckets):
        self.row_ids = row_ids
        self.tombs: set[int] = set()
        self.cols = cols


class DynOmv:
    """Dynamic ``Mv`` with row/column insertions and deletions.

    Updates must be serialized; queries between updates are read-only.
    """

    def __init__(self, M: BitMatrix | None = None):
        if M is None:
            M = BitMatrix(0, 0)
        m, n = M.shape
        self._rows = _IdSpace(m)
        self._cols = _IdSpace(n)
        self.stripes: list[_Stripe | None] = []
        self.row_where: dict[int, int] = {}
        self.rebuilt_rows = 0
        self.last_stats = (0, 0)
        if m:
            self._set_stripe(_top_level(m), np.arange(m, dtype=np.int64), M.to_dense())

    # -- shape and ids ----------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self._rows.count, self._cols.count

    def row_ids(self) -> np.ndarray:
        return self._rows.live_ids()

    def col_ids(self) -> np.ndarray:
        return self._cols.live_ids()

    def row_positions(self, ids) -> np.ndarray:
        """Logical positions of the given row ids (-1 for dead ids)."""
        return self._rows.positions()[np.asarray(ids, dtype=np.int64)]

    def col_positions(self, ids) -> np.ndarray:
        return self._cols.positions()[np.asarray(ids, dtype=np.int64)]

    @property
    def rebuilt_columns(self) -> int:
        return sum(s.cols.rebuilt_columns for s in self.stripes if s is not None)

    # -- internals --------------------------------------------------------

    def _set_stripe(self, j: int, row_ids: np.ndarray, block: np.ndarray) -> None:
        while len(self.stripes) <= j:
            self.stripes.append(None)
        if len(row_ids) == 0:
            self.stripes[j] = None
            return
        cols = ColBuckets(len(row_ids), self._cols.live_ids(), block)
        self.stripes[j] = _Stripe(row_ids, cols)
        for r in row_ids.tolist():
            self.row_where[r] = j
        self.rebuilt_rows += len(row_ids)

    def _live_block(self, s: _Stripe):
        block = s.cols.dense(self._cols.positions(), self._cols.count)
        if not s.tombs:
            return s.row_ids, block
        keep = np.array([r not in s.tombs for r in s.row_ids.tolist()], dtype=bool)
        return s.row_ids[keep], block[keep]

    def _require_row(self, rid) -> None:
        if not self._rows.is_live(rid):
            raise KeyError(f"unknown or deleted row id {rid}")

    def _require_col(self, cid) -> None:
        if not self._cols.is_live(cid):
            raise KeyError(f"unknown or deleted column id {cid}")

    # -- updates ----------------------------------------------------------

    def insert_col(self, bits) -> int:
        bits = np.asarray(bits, dtype=bool).reshape(-1)
        if len(bits) != self._rows.count:
            raise ValueError(f"column has length {len(bits)}, expected {self._rows.count}")
        cid = self._cols.allocate()
        rowpos = self._rows.positions()
        bext = np.append(bits, False)
        for s in self.stripes:
            if s is not None:
                s.cols.insert(cid, bext[rowpos[s.row_ids]])
        return cid

    def delete_col(self, cid: int) -> None:
        self._require_col(cid)
        self._cols.kill(cid)
        for s in self.stripes:
            if s is not None:
                s.cols.delete(cid)

    def insert_row(self, bits) -> int:
        bits = np.asarray(bits, dtype=bool).reshape(-1)
        if len(bits) != self._cols.count:
            raise ValueError(f"row has length {len(bits)}, expected {self._cols.count}")
        rid = self._rows.allocate()
        ids = np.array([rid], dtype=np.int64)
        block = bits[None, :]
        j = 0
        while True:
            s = self.stripes[j] if j < len(self.stripes) else None
            if s is not None:
                lid, lblock = self._live_block(s)
                ids = np.concatenate([lid, ids])
                block = np.vstack([lblock, block])
            if len(ids) > (1 << j):
                if s is not None:
                    self.stripes[j] = None
                j += 1
                continue
            self._set_stripe(j, ids, block)
            return rid

    def delete_row(self, rid: int) -> None:
        self._require_row(rid)
        self._rows.kill(rid)
        j = self.row_where.pop(rid)
        s = self.stripes[j]
        s.tombs.add(rid)
        if len(s.tombs) >= (1 << j) / 2:
            self._set_stripe(j, *self._live_block(s))

    # -- queries ----------------------------------------------------------

    def query(self, v) -> np.ndarray:
        v = as_vector(v, self._cols.count)
        colpos = self._cols.positions()
        vext = np.append(v, v.dtype.type(0))
        rowpos = self._rows.positions()
        out = np.zeros(self._rows.count + 1, dtype=v.dtype)
        stats = [0, 0]
        for s in self.stripes:
            if s is None:
                continue
            part = s.cols.query(colpos, vext, stats)
            if part is not None:
                out[rowpos[s.row_ids]] = part
        self.last_stats = tuple(stats)
        return out[:-1]

    def to_bitmatrix(self) -> BitMatrix:
        dense = np.zeros(self.shape, dtype=bool)
        rowpos = self._rows.positions()
        for s in self.stripes:
            if s is not None:
                lid, block = self._live_block(s)
                dense[rowpos[lid]] = block
        return BitMatrix.from_dense(dense)

    # -- audit ------------------------------------------------------------

    def check_invariants(self, deep: bool = False) -> None:
        """Walk every stripe and bucket, raising :class:`InvariantError` on a violation.

        ``deep`` also checks the id -> slot maps and compares each bucket
        engine's matrix with its stored bits.
        """
        row_live = self._rows._live
        seen = []
        for j, s in enumerate(self.stripes):
            if s is None:
                continue
            cap = 1 << j
            if len(s.row_ids) > cap:
                raise InvariantError(f"stripe {j} stores {len(s.row_ids)} rows > {cap}")
            if len(s.tombs) >= cap / 2:
                raise InvariantError(f"stripe {j} holds {len(s.tombs)} row tombstones")
            dead = ~row_live[s.row_ids]
            if set(s.row_ids[dead].tolist()) != s.tombs:
                raise InvariantError(f"row liveness disagrees with stripe {j} tombstones")
            seen.append(s.row_ids[~dead])
            if deep and any(self.row_where.get(r) != j for r in s.row_ids[~dead].tolist()):
                raise InvariantError(f"row misfiled in stripe {j}")
            self._check_buckets(j, s.cols, deep)
        seen = np.sort(np.concatenate(seen)) if seen else np.zeros(0, dtype=np.int64)
        if not np.array_equal(seen, self._rows.live_ids()):
            raise InvariantError("live rows are not partitioned by the stripes")

    def _check_buckets(self, j: int, cb: ColBuckets, deep: bool) -> None:
        col_live = self._cols._live
        seen = []
        for i, b in enumerate(cb.buckets):
            cap = 1 << i
            if len(b.ids) > cap:
                raise InvariantError(f"stripe {j} bucket {i} stores {len(b.ids)} columns > {cap}")
            if len(b.tombs) >= cap / 2:
                raise InvariantError(f"stripe {j} bucket {i} holds {len(b.tombs)} tombstones")
            if b.bits.shape != (cb.nrows, len(b.ids)):
                raise InvariantError(f"stripe {j} bucket {i} bit block has wrong shape")
            if (b.engine is None) != (len(b.ids) == 0):
                raise InvariantError(f"stripe {j} bucket {i} engine out of date")
            dead = ~col_live[b.ids]
            if set(b.ids[dead].tolist()) != b.tombs:
                raise InvariantError(f"column liveness disagrees with stripe {j} bucket {i} tombstones")
            seen.append(b.ids[~dead])
            if deep:
                if b.engine is not None and not np.array_equal(b.engine.matrix.to_dense(), b.bits):
                    raise InvariantError(f"stripe {j} bucket {i} engine matrix differs from its bits")
                if any(cb.where.get(c) != i for c in b.ids[~dead].tolist()):
                    raise InvariantError(f"column misfiled in stripe {j} bucket {i}")
        seen = np.sort(np.concatenate(seen)) if seen else np.zeros(0, dtype=np.int64)
        if not np.array_equal(seen, self._cols.live_ids()):
            raise InvariantError(f"stripe {j} buckets do not partition the live columns")

