"""Delta-labeled spanning trees over the columns of a Boolean matrix.

Every tree carries a virtual all-zero root (node id ``n``) so that composing
edge labels along the root path of a column reproduces that column exactly.
Labels are kept flattened: the entries of node ``x``'s label are
``label_idx[label_ptr[x]:label_ptr[x + 1]]`` with matching ``label_sign``.
"""
from __future__ import annotations

from functools import cached_property
from typing import IO

import numpy as np

from .bitmatrix import BitMatrix, SparseDelta, hamming_to_all, unpack_bits

# Odd multipliers for the 1-D hash used when grouping identical columns.
_HASH_MULT = np.random.default_rng(0x5EED).integers(1, 2**63, size=4096, dtype=np.uint64) | np.uint64(1)

# Above this many K*K*words cells Prim computes distance rows on the fly.
_DENSE_DIST_CELLS = 1 << 22


class DeltaTree:
    """Rooted spanning tree with sparse signed edge labels.

    ``parent[root] == -1``.  ``order`` is a preorder (parents first) and each
    subtree occupies the contiguous preorder slice ``[tin[x], tout[x])``.
    """

    def __init__(self, parent, root, dim, label_ptr, label_idx, label_sign, order):
        self.parent = np.asarray(parent, dtype=np.int64)
        self.node_count = len(self.parent)
        self.root = int(root)
        self.dim = int(dim)
        self.label_ptr = label_ptr
        self.label_idx = label_idx
        self.label_sign = label_sign
        self.order = np.asarray(order, dtype=np.int64)
        self.weight = int(len(label_idx))
        self.tin = np.empty(self.node_count, dtype=np.int64)
        self.tin[self.order] = np.arange(self.node_count)
        self.tout = self._subtree_ends()

    def _subtree_ends(self) -> np.ndarray:
        # Subtree sizes by accumulating children into parents in reverse preorder.
        size = np.ones(self.node_count, dtype=np.int64)
        par = self.parent
        for x in self.order[:0:-1].tolist():
            size[par[x]] += size[x]
        return self.tin + size

    @cached_property
    def owner(self) -> np.ndarray:
        """Node id owning each flattened label entry."""
        return np.repeat(np.arange(self.node_count, dtype=np.int64), np.diff(self.label_ptr))

    @cached_property
    def by_dim(self) -> tuple[np.ndarray, np.ndarray]:
        """Permutation sorting label entries by coordinate, plus segment bounds."""
        perm = np.argsort(self.label_idx, kind="stable")
        bounds = np.searchsorted(self.label_idx[perm], np.arange(self.dim + 1))
        return perm, bounds

    @cached_property
    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(self.node_count)]
        for x in self.order[1:].tolist():
            kids[self.parent[x]].append(x)
        return kids

    def label(self, x: int) -> SparseDelta:
        lo, hi = self.label_ptr[x], self.label_ptr[x + 1]
        return SparseDelta(self.label_idx[lo:hi].copy(), self.label_sign[lo:hi].copy())

    def label_sizes(self) -> np.ndarray:
        return np.diff(self.label_ptr)

    def edges(self) -> list[tuple[int, int]]:
        return [(int(self.parent[x]), int(x)) for x in self.order[1:]]

    def is_path(self) -> bool:
        return all(len(k) <= 1 for k in self.children)

    def dump(self, stream: IO[str]) -> None:
        stream.write(f"%%OMV dtree {self.node_count} {self.weight}\n")
        sizes = self.label_sizes()
        for x in range(self.node_count):
            p = "-" if self.parent[x] < 0 else str(self.parent[x])
            stream.write(f"{x} {p} {sizes[x]}\n")

    def __repr__(self) -> str:
        return f"DeltaTree(nodes={self.node_count}, weight={self.weight})"


def tree_weight(T: DeltaTree) -> int:
    return T.weight


def _labels(packed: np.ndarray, parent: np.ndarray, root: int, dim: int):
    """Flattened labels for edge parent[x] -> x; ``packed`` has a zero row at ``root``."""
    src = parent.copy()
    src[root] = root
    diff = packed ^ packed[src]
    rows, coords = np.nonzero(unpack_bits(diff, dim))
    sign = np.where(unpack_bits(packed, dim)[rows, coords], 1, -1).astype(np.int8)
    ptr = np.zeros(len(parent) + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=len(parent)), out=ptr[1:])
    return ptr, coords.astype(np.int64), sign


def _group_identical(packed: np.ndarray):
    """Return (reps, cls): first index of each distinct row (ascending) and class ids."""
    nrows, words = packed.shape
    if nrows == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if words == 0:
        return np.zeros(1, dtype=np.int64), np.zeros(nrows, dtype=np.int64)
    if words == 1:
        keys = packed[:, 0]
    elif words <= len(_HASH_MULT):
        keys = (packed * _HASH_MULT[:words]).sum(axis=1, dtype=np.uint64)
    else:
        keys = None
    if keys is not None:
        _, first, cls = np.unique(keys, return_index=True, return_inverse=True)
        if words > 1 and not np.array_equal(packed, packed[first[cls]]):
            keys = None
    if keys is None:
        _, first, cls = np.unique(packed, axis=0, return_index=True, return_inverse=True)
    cls = cls.reshape(-1)
    rank = np.argsort(first, kind="stable")
    relabel = np.empty_like(rank)
    relabel[rank] = np.arange(len(rank))
    return first[rank].astype(np.int64), relabel[cls].astype(np.int64)


def _prim(points: np.ndarray, start: int) -> tuple[np.ndarray, list[int]]:
    """Exact Prim MST on packed points under Hamming distance.

    Returns the parent of every point (``-1`` at ``start``) and the order in
    which points joined the tree.  Ties go to the smallest index.
    """
    k, words = points.shape
    parent = np.full(k, start, dtype=np.int64)
    parent[start] = -1
    if k == 1:
        return parent, [start]
    dense = None
    if k * k * max(words, 1) <= _DENSE_DIST_CELLS:
        dense = np.bitwise_count(points[:, None, :] ^ points[None, :, :]).sum(axis=2, dtype=np.int64)
    big = np.iinfo(np.int64).max
    best = (dense[start] if dense is not None else hamming_to_all(points, start)).copy()
    in_tree = np.zeros(k, dtype=bool)
    in_tree[start] = True
    best[start] = big
    joined = [start]
    for _ in range(k - 1):
        j = int(np.argmin(best))
        joined.append(j)
        in_tree[j] = True
        best[j] = big
        d = dense[j] if dense is not None else hamming_to_all(points, j)
        closer = d < best
        closer &= ~in_tree
        best[closer] = d[closer]
        parent[closer] = j
    return parent, joined


def _skeleton_preorder(local_parent: np.ndarray, joined: list[int]) -> list[int]:
    kids: list[list[int]] = [[] for _ in range(len(local_parent))]
    for x in sorted(joined[1:]):
        kids[local_parent[x]].append(x)
    out = []
    stack = [joined[0]]
    while stack:
        x = stack.pop()
        out.append(x)
        stack.extend(reversed(kids[x]))
    return out


def build_mst(M: BitMatrix) -> DeltaTree:
    """Minimum Hamming spanning tree over the columns of ``M`` plus a zero root.

    The real columns form an exact MST; the virtual root (node ``n``) hangs the
    lightest column (smallest index on ties).  Identical columns are collapsed
    before Prim and re-attached to their first occurrence with empty labels.
    """
    n, m = M.cols, M.rows
    root = n
    cols = M.colbits
    packed = np.vstack([cols, np.zeros((1, cols.shape[1]), dtype=np.uint64)])
    parent = np.full(n + 1, -1, dtype=np.int64)
    if n == 0:
        ptr = np.zeros(2, dtype=np.int64)
        return DeltaTree(parent, root, m, ptr, np.zeros(0, np.int64), np.zeros(0, np.int8), [root])

    reps, cls = _group_identical(cols)
    weights = np.bitwise_count(cols[reps]).sum(axis=1, dtype=np.int64)
    start = int(np.argmin(weights))
    local_parent, joined = _prim(cols[reps], start)

    parent[:n] = reps[cls]
    has_parent = local_parent >= 0
    parent[reps[has_parent]] = reps[local_parent[has_parent]]
    parent[reps[start]] = root

    # Preorder: walk the tree of distinct columns, emitting each representative
    # followed immediately by its duplicates (which are leaves).
    skeleton = _skeleton_preorder(local_parent, joined)
    members = np.argsort(cls, kind="stable")
    bounds = np.searchsorted(cls[members], np.arange(len(reps) + 1))
    order = np.concatenate([[root]] + [members[bounds[c] : bounds[c + 1]] for c in skeleton])

    ptr, idx, sign = _labels(packed, parent, root, m)
    return DeltaTree(parent, root, m, ptr, idx, sign, order)


def tree_from_parents(M: BitMatrix, parent, order=None) -> DeltaTree:
    """Label an arbitrary spanning tree (root = node ``n``) against ``M``'s columns."""
    n = M.cols
    parent = np.asarray(parent, dtype=np.int64)
    if len(parent) != n + 1 or parent[n] != -1:
        raise ValueError("parent array must cover n columns plus the root at index n")
    packed = np.vstack([M.colbits, np.zeros((1, M.colbits.shape[1]), dtype=np.uint64)])
    if order is None:
        kids: list[list[int]] = [[] for _ in range(n + 1)]
        for x in range(n):
            kids[parent[x]].append(x)
        order = []
        stack = [n]
        while stack:
            x = stack.pop()
            order.append(x)
            stack.extend(reversed(kids[x]))
        if len(order) != n + 1:
            raise ValueError("parent array does not describe a tree rooted at n")
    ptr, idx, sign = _labels(packed, parent, n, M.rows)
    return DeltaTree(parent, n, M.rows, ptr, idx, sign, order)


def linearize(T: DeltaTree, M: BitMatrix) -> DeltaTree:
    """Re-hang the columns as a single path in the preorder of ``T``.

    The walk along consecutive preorder columns crosses every edge of ``T`` at
    most twice, so the path weighs at most ``2 * weight(T)``; the root edge
    costs at most ``m`` more.
    """
    n = M.cols
    if T.node_count != n + 1:
        raise ValueError("tree does not span this matrix's columns")
    seq = [x for x in T.order.tolist() if x != T.root]
    parent = np.full(n + 1, -1, dtype=np.int64)
    prev = n
    for x in seq:
        parent[x] = prev
        prev = x
    return tree_from_parents(M, parent, order=[n] + seq)
