"""Undirected dynamic graphs on top of the dynamic OMv engine.

Each vertex owns one row id and one column id of a :class:`DynOmv` holding the
symmetric adjacency matrix.  Vectors passed in and out are indexed by live
vertices in increasing vertex id order.
"""
from __future__ import annotations

from typing import IO, Iterable

import numpy as np

from .bitmatrix import BitMatrix, MatrixFormatError, _content_lines, _parse_header, as_vector
from .dynamic import DynOmv, InvariantError
from .static import bmm, preprocess


class DynGraph:
    def __init__(self, n: int = 0, edges: Iterable[tuple[int, int]] = ()):
        self.nbrs: dict[int, set[int]] = {v: set() for v in range(n)}
        for u, w in edges:
            self._check_edge(u, w)
            self.nbrs[u].add(w)
            self.nbrs[w].add(u)
        A = np.zeros((n, n), dtype=bool)
        for u, ws in self.nbrs.items():
            A[u, list(ws)] = True
        self.adj = DynOmv(BitMatrix.from_dense(A))
        self.row_of = {v: v for v in range(n)}
        self.col_of = {v: v for v in range(n)}
        self._next = n
        self.version = 0
        self._order: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        # trace(A^3) = sum_i a_i . (A a_i), one column product per vertex.
        self.s = int((bmm(preprocess(self.adj.to_bitmatrix()), BitMatrix.from_dense(A)) * A).sum()) if n else 0

    # -- bookkeeping ------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.nbrs)

    def vertices(self) -> np.ndarray:
        return np.array(sorted(self.nbrs), dtype=np.int64)

    def degree(self) -> np.ndarray:
        return np.array([len(self.nbrs[v]) for v in self.vertices().tolist()], dtype=np.int64)

    def edge_count(self) -> int:
        return sum(len(w) for w in self.nbrs.values()) // 2

    def is_connected(self) -> bool:
        if not self.nbrs:
            return True
        start = next(iter(self.nbrs))
        seen = {start}
        todo = [start]
        while todo:
            for u in self.nbrs[todo.pop()]:
                if u not in seen:
                    seen.add(u)
                    todo.append(u)
        return len(seen) == len(self.nbrs)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, w) for u in sorted(self.nbrs) for w in sorted(self.nbrs[u]) if u < w]

    def _check_vertex(self, v) -> None:
        if v not in self.nbrs:
            raise KeyError(f"unknown vertex {v}")

    def _check_edge(self, u, w) -> None:
        self._check_vertex(u)
        self._check_vertex(w)
        if u == w:
            raise ValueError(f"self-loop at vertex {u}")

    def _layout(self):
        """(vertices, logical row position, logical column position), cached between updates."""
        if self._order is None:
            vs = self.vertices()
            rows = self.adj.row_positions([self.row_of[v] for v in vs.tolist()])
            cols = self.adj.col_positions([self.col_of[v] for v in vs.tolist()])
            self._order = (vs, rows, cols)
        return self._order

    def _index(self, v: int) -> int:
        vs = self._layout()[0]
        return int(np.searchsorted(vs, v))

    def adj_mv(self, v) -> np.ndarray:
        """``A v`` with ``v`` indexed by sorted vertex id."""
        vs, rows, cols = self._layout()
        v = as_vector(v, len(vs))
        w = np.zeros(len(vs), dtype=v.dtype)
        w[cols] = v
        return self.adj.query(w)[rows]

    def dense_adjacency(self) -> np.ndarray:
        vs, rows, cols = self._layout()
        return self.adj.to_bitmatrix().to_dense()[np.ix_(rows, cols)]

    # -- updates ----------------------------------------------------------

    def _indicator(self, members: set[int], vs: np.ndarray) -> np.ndarray:
        return np.isin(vs, np.fromiter(members, dtype=np.int64, count=len(members)))

    def vertex_update(self, v: int, nbrs: Iterable[int]) -> None:
        """Replace the neighbourhood of ``v``, keeping ``s = trace(A^3)`` current."""
        self._check_vertex(v)
        new = set(int(u) for u in nbrs)
        for u in new:
            self._check_edge(v, u)
        old = self.nbrs[v]

        self.adj.delete_row(self.row_of.pop(v))
        self.adj.delete_col(self.col_of.pop(v))
        del self.nbrs[v]
        self._order = None

        # Both quadratic forms are taken on the matrix without v; since a_v = 0
        # no closed walk through v's own diagonal is counted.
        vs = self.vertices()
        a_old = self._indicator(old, vs).astype(np.int64)
        a_new = self._indicator(new, vs).astype(np.int64)
        t_old = int(a_old @ self.adj_mv(a_old)) if old else 0
        t_new = int(a_new @ self.adj_mv(a_new)) if new else 0
        self.s += 3 * (t_new - t_old)

        _, rows, _ = self._layout()
        col = np.zeros(len(vs), dtype=bool)
        col[rows] = a_new.astype(bool)
        self.col_of[v] = self.adj.insert_col(col)
        self.nbrs[v] = new
        for u in old - new:
            self.nbrs[u].discard(v)
        for u in new - old:
            self.nbrs[u].add(v)
        vs = self.vertices()
        cols = self.adj.col_positions([self.col_of[u] for u in vs.tolist()])
        row = np.zeros(len(vs), dtype=bool)
        row[cols[self._indicator(new, vs)]] = True
        self.row_of[v] = self.adj.insert_row(row)
        self._order = None
        self.version += 1

    def insert_vertex(self, nbrs: Iterable[int] = ()) -> int:
        v = self._next
        self._next += 1
        self.col_of[v] = self.adj.insert_col(np.zeros(self.n, dtype=bool))
        self.nbrs[v] = set()
        self._order = None
        self.row_of[v] = self.adj.insert_row(np.zeros(self.n, dtype=bool))
        self._order = None
        self.version += 1
        nbrs = list(nbrs)
        if nbrs:
            self.vertex_update(v, nbrs)
        return v

    def delete_vertex(self, v: int) -> None:
        self._check_vertex(v)
        if self.nbrs[v]:
            self.vertex_update(v, ())
        self.adj.delete_row(self.row_of.pop(v))
        self.adj.delete_col(self.col_of.pop(v))
        del self.nbrs[v]
        self._order = None
        self.version += 1

    def add_edge(self, u: int, w: int) -> None:
        self._check_edge(u, w)
        self.vertex_update(u, self.nbrs[u] | {w})

    def remove_edge(self, u: int, w: int) -> None:
        self._check_edge(u, w)
        self.vertex_update(u, self.nbrs[u] - {w})

    # -- queries ----------------------------------------------------------

    def has_triangle(self) -> bool:
        return self.s > 0

    def triangle_count(self) -> int:
        return self.s // 6

    def bounded_sssp(self, u: int, dmax: int) -> np.ndarray:
        """Hop distances from ``u`` (``inf`` beyond ``dmax``), by repeated thresholded ``A w``."""
        self._check_vertex(u)
        if dmax < 0:
            raise ValueError("dmax must be nonnegative")
        vs = self._layout()[0]
        dist = np.full(len(vs), np.inf)
        w = np.zeros(len(vs), dtype=np.int64)
        w[self._index(u)] = 1
        dist[self._index(u)] = 0
        prev = [w]
        for step in range(1, dmax + 1):
            w = (self.adj_mv(w) > 0).astype(np.int64)
            fresh = (w > 0) & np.isinf(dist)
            dist[fresh] = step
            # Walk-reach sets are eventually periodic with period 1 or 2;
            # once one repeats nothing new can appear.
            if not w.any() or any(np.array_equal(w, p) for p in prev):
                break
            prev = [prev[-1], w]
        return dist

    def laplacian_mv(self, v) -> np.ndarray:
        vs = self._layout()[0]
        v = as_vector(v, len(vs))
        return self.degree() * v - self.adj_mv(v)

    def normalized_laplacian_mv(self, v) -> np.ndarray:
        """``(I - D^-1/2 A D^-1/2) v`` on non-isolated vertices, 0 on isolated ones."""
        vs = self._layout()[0]
        v = as_vector(v, len(vs)).astype(np.float64)
        deg = self.degree().astype(np.float64)
        inv_sqrt = np.zeros_like(deg)
        nz = deg > 0
        inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
        w = inv_sqrt * v
        return inv_sqrt * (deg * w - self.adj_mv(w))

    # -- audit ------------------------------------------------------------

    def check_invariants(self) -> None:
        self.adj.check_invariants()
        A = self.dense_adjacency()
        if not np.array_equal(A, A.T):
            raise InvariantError("adjacency matrix is not symmetric")
        if A.diagonal().any():
            raise InvariantError("adjacency matrix has a nonzero diagonal")
        vs = self.vertices()
        for k, v in enumerate(vs.tolist()):
            if set(vs[A[k]].tolist()) != self.nbrs[v]:
                raise InvariantError(f"neighbour set of vertex {v} disagrees with the matrix")
        if self.s < 0 or self.s % 6:
            raise InvariantError(f"triangle trace {self.s} is not a nonnegative multiple of 6")


def read_graph(stream: IO[str]) -> DynGraph:
    lines = _content_lines(stream)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MatrixFormatError(1, "empty file") from None
    n, m = _parse_header(lineno, header, "graph")
    seen: set[tuple[int, int]] = set()
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 2:
            raise MatrixFormatError(lineno, f"expected 'u v', got {line!r}")
        try:
            u, w = int(parts[0]), int(parts[1])
        except ValueError:
            raise MatrixFormatError(lineno, f"non-integer vertex in {line!r}") from None
        if not (0 <= u < n and 0 <= w < n):
            raise MatrixFormatError(lineno, f"edge ({u}, {w}) outside a {n}-vertex graph")
        if u == w:
            raise MatrixFormatError(lineno, f"self-loop at vertex {u}")
        key = (min(u, w), max(u, w))
        if key in seen:
            raise MatrixFormatError(lineno, f"duplicate edge {key}")
        seen.add(key)
    if len(seen) != m:
        raise MatrixFormatError(lineno + 1, f"found {len(seen)} edges, header says {m}")
    return DynGraph(n, sorted(seen))


def write_graph(G: DynGraph, stream: IO[str]) -> None:
    edges = G.edges()
    stream.write(f"%%OMV graph {G.n} {len(edges)}\n")
    for u, w in edges:
        stream.write(f"{u} {w}\n")
