import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from omv.bitmatrix import BitMatrix, naive_mv
from omv.static import bmm, mv, mv_coltree, mv_rowtree, preprocess
from oracles import loop_boolean_product

shapes = st.tuples(st.integers(0, 40), st.integers(0, 40))


def test_zero_matrix_trees_weightless():
    S = preprocess(BitMatrix.zeros(6, 4))
    assert S.row_tree.weight == 0 and S.col_tree.weight == 0


def test_identity_weights():
    S = preprocess(BitMatrix.from_dense(np.eye(3, dtype=bool)))
    assert S.col_tree.weight == 5 and S.row_tree.weight == 5


def test_rowtree_examples():
    rng = np.random.default_rng(0)
    S = preprocess(BitMatrix.from_dense(rng.random((9, 7)) < 0.5))
    assert not mv_rowtree(S, np.zeros(7, dtype=np.int64))[0].any()
    eye = preprocess(BitMatrix.from_dense(np.eye(3, dtype=bool)))
    assert mv_rowtree(eye, [5, -2, 7])[0].tolist() == [5, -2, 7]


def test_coltree_one_hot_reconstructs_column():
    rng = np.random.default_rng(1)
    dense = rng.random((12, 9)) < 0.5
    S = preprocess(BitMatrix.from_dense(dense))
    for j in range(9):
        e = np.zeros(9, dtype=np.int64)
        e[j] = 1
        assert np.array_equal(mv_coltree(S, e)[0], dense[:, j].astype(np.int64))


def test_identical_columns_only_root_edge_work():
    c = np.array([1, 0, 1, 1], bool)
    S = preprocess(BitMatrix.from_dense(np.tile(c[:, None], (1, 6))))
    out, stats = mv_coltree(S, [1, 2, 3, 4, 5, 6])
    assert out.tolist() == (21 * c).tolist()
    assert stats.touched_nonzeros == int(c.sum())


def test_random_pairs_exact_both_trees():
    rng = np.random.default_rng(2)
    for _ in range(200):
        m, n = (int(x) for x in rng.integers(0, 60, 2))
        M = BitMatrix.from_dense(rng.random((m, n)) < rng.random())
        S = preprocess(M)
        v = rng.integers(-(2**20), 2**20, n)
        want = naive_mv(M, v)
        assert np.array_equal(mv_rowtree(S, v)[0], want)
        assert np.array_equal(mv_coltree(S, v)[0], want)


def test_dispatch_prefers_cheaper_tree():
    row = np.array([[1, 0, 1, 1, 0, 1, 0, 0]], bool)
    S = preprocess(BitMatrix.from_dense(np.tile(row, (10, 1))))
    assert S.row_tree.weight == 4 and S.preferred == "row"
    assert mv(S, np.arange(8))[1].algo == "row"
    S = preprocess(BitMatrix.from_dense(np.tile(row.T, (1, 10))))
    assert S.col_tree.weight == 4 and S.preferred == "col"
    assert mv(S, np.arange(10))[1].algo == "col"


def test_float_vectors_within_tolerance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m, n = (int(x) for x in rng.integers(1, 80, 2))
        M = BitMatrix.from_dense(rng.random((m, n)) < 0.5)
        S = preprocess(M)
        v = rng.standard_normal(n) * 1e3
        tol = 1e-9 * (1 + np.abs(v).sum())
        want = M.to_dense().astype(float) @ v
        assert np.max(np.abs(mv_rowtree(S, v)[0] - want), initial=0) <= tol
        assert np.max(np.abs(mv_coltree(S, v)[0] - want), initial=0) <= tol


@settings(max_examples=60, deadline=None)
@given(shapes.flatmap(lambda s: arrays(np.bool_, s)), st.data())
def test_linearity_and_cost_bounds(dense, data):
    m, n = dense.shape
    S = preprocess(BitMatrix.from_dense(dense))
    ints = st.lists(st.integers(-1000, 1000), min_size=n, max_size=n)
    u = np.array(data.draw(ints), dtype=np.int64)
    v = np.array(data.draw(ints), dtype=np.int64)
    a, b = data.draw(st.integers(-50, 50)), data.draw(st.integers(-50, 50))
    for fn, tree in ((mv_rowtree, S.row_tree), (mv_coltree, S.col_tree)):
        out, stats = fn(S, a * u + b * v)
        assert np.array_equal(out, a * fn(S, u)[0] + b * fn(S, v)[0])
        assert stats.touched_nonzeros <= tree.weight
        assert stats.dense_ops <= 2 * (m + n) + 1


def test_dfs_orders_visit_every_node_once():
    rng = np.random.default_rng(4)
    S = preprocess(BitMatrix.from_dense(rng.random((64, 64)) < 0.3))
    for T, order in zip((S.row_tree, S.col_tree), S.dfs_order):
        assert sorted(order.tolist()) == list(range(T.node_count))


def test_dimension_mismatch():
    S = preprocess(BitMatrix.zeros(2, 3))
    with pytest.raises(ValueError):
        mv(S, [1, 2])
    with pytest.raises(ValueError):
        bmm(S, BitMatrix.zeros(2, 2))


def test_empty_columns_returns_zero_vector():
    S = preprocess(BitMatrix.zeros(4, 0))
    assert mv(S, [])[0].tolist() == [0, 0, 0, 0]


def test_bmm_examples():
    rng = np.random.default_rng(5)
    A = BitMatrix.from_dense(rng.random((5, 5)) < 0.5)
    S = preprocess(A)
    assert np.array_equal(bmm(S, BitMatrix.from_dense(np.eye(5, dtype=bool))), A.to_dense().astype(np.int64))
    ones = preprocess(BitMatrix.from_dense(np.ones((2, 2), bool)))
    out = bmm(ones, BitMatrix.from_dense(np.ones((2, 2), bool)))
    assert out.tolist() == [[2, 2], [2, 2]]
    assert (out >= 1).all()


def test_bmm_random_against_triple_loop():
    rng = np.random.default_rng(6)
    for _ in range(5):
        A = rng.random((12, 9)) < 0.3
        B = rng.random((9, 7)) < 0.3
        got = bmm(preprocess(BitMatrix.from_dense(A)), BitMatrix.from_dense(B)) >= 1
        assert np.array_equal(got, loop_boolean_product(A, B))
