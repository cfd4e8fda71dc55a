import math

import numpy as np
import pytest

from omv.graphapps import DynGraph
from omv.lapsolve import (
    DisconnectedGraphError, SolverState, center, effective_resistance, graph_edges, pcg, solve,
)
from oracles import dense_laplacian, random_connected_graph


def energy_error(G: DynGraph, x: np.ndarray, b: np.ndarray) -> float:
    L = dense_laplacian(G.dense_adjacency())
    xs = np.linalg.pinv(L, hermitian=True) @ b
    e = x - xs
    return math.sqrt(max(e @ L @ e, 0)) / math.sqrt(xs @ L @ xs)


def test_zero_rhs():
    G = DynGraph(4, [(0, 1), (1, 2), (2, 3)])
    assert not solve(SolverState(G), np.zeros(4)).any()


def test_p3_unit_flow():
    G = DynGraph(3, [(0, 1), (1, 2)])
    x = solve(SolverState(G), [1.0, 0.0, -1.0])
    assert np.allclose(x - x.mean(), [1, 0, -1], atol=1e-9)


def test_random_gnp_accuracy():
    rng = np.random.default_rng(0)
    G = DynGraph(100, random_connected_graph(rng, 100, 0.1))
    S = SolverState(G, seed=1, verify=True)
    b = center(rng.standard_normal(100))
    x = solve(S, b, 1e-8)
    assert energy_error(G, x, b) <= 1e-8
    assert abs(x.sum()) <= 1e-12 * np.abs(x).sum()


def test_tree_is_its_own_sparsifier():
    rng = np.random.default_rng(1)
    G = DynGraph(30, [(int(rng.integers(u)), u) for u in range(1, 30)])
    S = SolverState(G)
    S.refresh_sparsifier()
    assert len(S.H) == 29 and np.allclose(S.H.weight, 1)


def test_single_edge_sparsifier():
    S = SolverState(DynGraph(2, [(0, 1)]))
    S.refresh_sparsifier()
    assert len(S.H) == 1 and S.H.weight.tolist() == [1.0]


def test_k32_sparsifier_size_and_probes():
    n = 32
    G = DynGraph(n, [(a, b) for a in range(n) for b in range(a + 1, n)])
    S = SolverState(G, seed=3)
    S.refresh_sparsifier()
    E = graph_edges(G)
    assert len(S.H) <= min(S.sample_count(n), len(E))
    assert not S.exact_fallback
    rng = np.random.default_rng(4)
    for _ in range(100):
        x = center(rng.standard_normal(n))
        g, h = E.quadratic(x), S.H.quadratic(x)
        assert 0.5 * g <= h <= 1.5 * g
    assert S.H.component_count() == 1


def test_richardson_contracts_by_two_thirds():
    rng = np.random.default_rng(5)
    for seed in range(5):
        n = int(rng.integers(20, 80))
        G = DynGraph(n, random_connected_graph(rng, n, 0.15))
        S = SolverState(G, seed=seed)
        S.refresh_sparsifier()
        L = dense_laplacian(G.dense_adjacency())
        b = center(rng.standard_normal(n))
        xs = np.linalg.pinv(L, hermitian=True) @ b
        x = pcg(S.H, b, S.inner_tol)
        prev = math.sqrt((x - xs) @ L @ (x - xs))
        for _ in range(8):
            x = center(x - pcg(S.H, center(G.laplacian_mv(x) - b), S.inner_tol))
            err = math.sqrt(max((x - xs) @ L @ (x - xs), 0))
            if prev < 1e-12:
                break
            assert err <= (2 / 3) * prev
            prev = err


def test_resistance_examples():
    assert effective_resistance(SolverState(DynGraph(2, [(0, 1)])), 0, 1) == pytest.approx(1, rel=1e-8)
    for n in (3, 10, 40):
        S = SolverState(DynGraph(n, [(i, i + 1) for i in range(n - 1)]))
        assert effective_resistance(S, 0, n - 1) == pytest.approx(n - 1, rel=1e-6)
    K4 = SolverState(DynGraph(4, [(a, b) for a in range(4) for b in range(a + 1, 4)]))
    for a in range(4):
        for b in range(a + 1, 4):
            assert abs(effective_resistance(K4, a, b) - 0.5) <= 1e-8
    assert effective_resistance(K4, 2, 2) == 0.0


def test_resistance_metric_properties():
    rng = np.random.default_rng(6)
    for _ in range(50):
        n = int(rng.integers(4, 25))
        S = SolverState(DynGraph(n, random_connected_graph(rng, n, 0.2)))
        a, b, c = rng.choice(n, 3, replace=False).tolist()
        rab = effective_resistance(S, a, b)
        assert rab == pytest.approx(effective_resistance(S, b, a), rel=1e-7)
        assert rab <= effective_resistance(S, a, c) + effective_resistance(S, c, b) + 1e-7


def test_rayleigh_monotonicity():
    rng = np.random.default_rng(7)
    eps = 1e-8
    for _ in range(10):
        n = 15
        edges = random_connected_graph(rng, n, 0.15)
        G = DynGraph(n, edges)
        S = SolverState(G, seed=2)
        missing = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in set(edges)]
        pairs = [tuple(rng.choice(n, 2, replace=False).tolist()) for _ in range(3)]
        before = [effective_resistance(S, a, b, eps) for a, b in pairs]
        a, b = missing[int(rng.integers(len(missing)))]
        G.add_edge(a, b)
        S2 = SolverState(G, seed=2)
        after = [effective_resistance(S2, u, v, eps) for u, v in pairs]
        for r0, r1 in zip(before, after):
            assert r1 <= r0 * (1 + 3 * eps)


def test_stale_sparsifier_still_converges():
    rng = np.random.default_rng(8)
    n = 60
    G = DynGraph(n, random_connected_graph(rng, n, 0.1))
    S = SolverState(G, refresh_period=1000)
    b = center(rng.standard_normal(n))
    solve(S, b)
    refreshes = S.refreshes
    for _ in range(10):
        v = int(rng.integers(n))
        G.vertex_update(v, rng.choice([u for u in range(n) if u != v], 8, replace=False).tolist())
    if not G.is_connected():
        pytest.skip("updates disconnected the graph")
    x = solve(S, b, 1e-8)
    assert energy_error(G, x, b) <= 1e-8
    assert S.refreshes >= refreshes


def test_refresh_on_period_and_vertex_change():
    G = DynGraph(8, [(i, i + 1) for i in range(7)])
    S = SolverState(G)
    assert S.period() == 2 and S.stale()
    solve(S, center(np.arange(8.0)))
    assert S.refreshes >= 1 and not S.stale()
    G.vertex_update(0, [1, 2])
    assert S.updates_since_refresh == 1 and not S.stale()
    G.vertex_update(3, [2, 4, 5])
    assert S.stale()
    S.refresh_sparsifier()
    assert not S.stale()
    G.insert_vertex([0])
    assert S.stale()
    x = solve(S, center(np.arange(9.0)))
    assert not S.stale() and len(x) == 9


def test_errors():
    G = DynGraph(4, [(0, 1), (2, 3)])
    with pytest.raises(DisconnectedGraphError):
        solve(SolverState(G), [1.0, -1.0, 0.0, 0.0])
    H = DynGraph(3, [(0, 1), (1, 2)])
    with pytest.raises(ValueError, match="orthogonal"):
        solve(SolverState(H), [1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        solve(SolverState(H), [1.0, -1.0])
    with pytest.raises(KeyError):
        effective_resistance(SolverState(H), 0, 9)


def test_disconnected_graph_sparsifier_per_component():
    G = DynGraph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    S = SolverState(G)
    S.refresh_sparsifier()
    assert S.H.component_count() == 2
