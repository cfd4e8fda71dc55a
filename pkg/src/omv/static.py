"""Static OMv engine: preprocess a Boolean matrix once, then answer ``Mv`` quickly.

Two spanning trees are built.  The row tree (over rows of ``M``) drives the
root-to-leaf recurrence ``phi[x] = phi[parent] + <delta, v>``; the column tree
drives subtree sums ``sigma`` followed by ``sum_e label_e * sigma_e``.  Both cost
O(weight + n + m) and :func:`mv` picks the cheaper one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitmatrix import BitMatrix, as_vector
from .tree import DeltaTree, build_mst


@dataclass
class QueryStats:
    touched_nonzeros: int
    dense_ops: int
    algo: str = ""


class StaticOmv:
    __slots__ = ("matrix", "col_tree", "row_tree", "cost_row", "cost_col")

    def __init__(self, matrix: BitMatrix, col_tree: DeltaTree, row_tree: DeltaTree):
        m, n = matrix.shape
        self.matrix = matrix
        self.col_tree = col_tree
        self.row_tree = row_tree
        self.cost_row = row_tree.weight + n + m
        self.cost_col = col_tree.weight + n + m

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def dfs_order(self) -> tuple[np.ndarray, np.ndarray]:
        return self.row_tree.order, self.col_tree.order

    @property
    def preferred(self) -> str:
        return "row" if self.cost_row <= self.cost_col else "col"

    def mv(self, v):
        return mv(self, v)

    def __repr__(self) -> str:
        m, n = self.shape
        return (f"StaticOmv({m}x{n}, row_weight={self.row_tree.weight}, "
                f"col_weight={self.col_tree.weight})")


def preprocess(M: BitMatrix) -> StaticOmv:
    return StaticOmv(M, build_mst(M), build_mst(M.transpose()))


def _edge_dots(T: DeltaTree, v: np.ndarray) -> np.ndarray:
    """<label_x, v> for every node x."""
    contrib = T.label_sign * v[T.label_idx]
    if v.dtype.kind == "f":
        return np.bincount(T.owner, weights=contrib, minlength=T.node_count)
    cs = np.zeros(len(contrib) + 1, dtype=np.int64)
    np.cumsum(contrib, out=cs[1:])
    return cs[T.label_ptr[1:]] - cs[T.label_ptr[:-1]]


def mv_rowtree(S: StaticOmv, v):
    """Root-to-leaf accumulation over the row tree (the zero root row has phi = 0)."""
    m, n = S.shape
    v = as_vector(v, n)
    T = S.row_tree
    d = _edge_dots(T, v)
    # phi[x] is the sum of d over x and its ancestors: add d at the start of
    # each subtree's preorder slice, subtract it at the end, prefix-sum.
    acc = np.zeros(T.node_count + 1, dtype=d.dtype)
    acc[T.tin] = d
    np.add.at(acc, T.tout, -d)
    phi = np.cumsum(acc)[T.tin]
    stats = QueryStats(T.weight, T.node_count + n + m, "row")
    return phi[:m], stats


def mv_coltree(S: StaticOmv, v):
    """Subtree sums over the column tree, then one sparse pass over the labels."""
    m, n = S.shape
    v = as_vector(v, n)
    T = S.col_tree
    pre = np.append(v, v.dtype.type(0))[T.order]
    cs = np.zeros(T.node_count + 1, dtype=v.dtype)
    np.cumsum(pre, out=cs[1:])
    sigma = cs[T.tout] - cs[T.tin]
    contrib = T.label_sign * sigma[T.owner]
    if v.dtype.kind == "f":
        out = np.bincount(T.label_idx, weights=contrib, minlength=m)
    else:
        out = np.zeros(m, dtype=np.int64)
        np.add.at(out, T.label_idx, contrib)
    stats = QueryStats(T.weight, T.node_count + n + m, "col")
    return out, stats


def mv(S: StaticOmv, v):
    if S.cost_row <= S.cost_col:
        return mv_rowtree(S, v)
    return mv_coltree(S, v)


def bmm(S: StaticOmv, B: BitMatrix) -> np.ndarray:
    """Integer product ``A @ B`` column by column; threshold at 1 for the Boolean product."""
    m, n = S.shape
    if B.rows != n:
        raise ValueError(f"inner dimensions differ: A is {m}x{n}, B is {B.rows}x{B.cols}")
    cols = B.to_dense().astype(np.int64)
    out = np.zeros((m, B.cols), dtype=np.int64)
    for j in range(B.cols):
        out[:, j] = mv(S, cols[:, j])[0]
    return out
