"""Benchmark sweeps: generate, preprocess, query, and count the work done.

Records are plain dicts so they serialize straight to JSON.  Counts are the
primary metric; wall times are informational.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .rng import stream
from .static import mv, preprocess
from .synthgen import SynthSpec, corruption_budget, generate
from .tree import linearize

SCHEMA = 1

# Field list of one record, in output order.
RECORD_FIELDS = (
    "family", "n", "m", "rep", "seed", "claimed_d", "corruption_c", "corruption_per_row",
    "row_weight", "col_weight", "linearized_weight", "naive_ops", "algo",
    "touched_nonzeros", "dense_ops", "preprocess_seconds", "query_seconds", "engine_version",
)


def parse_sizes(text: str) -> list[int]:
    """``"64..1024"`` doubles from 64 to 1024; ``"10,20,30"`` is taken literally."""
    text = text.strip()
    if ".." in text:
        lo, hi = (int(x) for x in text.split("..", 1))
        if lo <= 0 or hi < lo:
            raise ValueError(f"bad size range {text!r}")
        out = []
        while lo <= hi:
            out.append(lo)
            lo *= 2
        return out
    sizes = [int(x) for x in text.split(",") if x.strip()]
    if not sizes or any(s < 0 for s in sizes):
        raise ValueError(f"bad size list {text!r}")
    return sizes


def run_cell(family: str, n: int, rep: int, seed: int, corruption: float, queries: int,
             want_linear: bool = False) -> dict:
    claimed = SynthSpec(family, n).claimed_d
    per_row = corruption_budget(corruption, n, claimed)
    spec = SynthSpec(family, n, n, per_row, seed=seed * 1_000_003 + rep)
    M = generate(spec)
    t0 = time.perf_counter()
    S = preprocess(M)
    t1 = time.perf_counter()
    rng = stream(seed, "bench:queries", n, rep)
    touched, dense_ops, algo = [], [], S.preferred
    for _ in range(queries):
        v = rng.integers(-1000, 1001, size=n)
        _, st = mv(S, v)
        touched.append(st.touched_nonzeros)
        dense_ops.append(st.dense_ops)
    t2 = time.perf_counter()
    return {
        "family": family, "n": n, "m": n, "rep": rep, "seed": seed, "claimed_d": claimed,
        "corruption_c": corruption, "corruption_per_row": per_row,
        "row_weight": S.row_tree.weight, "col_weight": S.col_tree.weight,
        "linearized_weight": linearize(S.col_tree, M).weight if want_linear else None,
        "naive_ops": n * n, "algo": algo,
        "touched_nonzeros": touched, "dense_ops": dense_ops,
        "preprocess_seconds": t1 - t0, "query_seconds": t2 - t1,
        "engine_version": __version__,
    }


def worker_count(cells: int) -> int:
    cap = os.environ.get("OMV_THREADS")
    workers = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(workers, cells))


def run_sweep(family: str, sizes: list[int], reps: int, seed: int, corruption: float,
              queries: int, want_linear: bool = False) -> list[dict]:
    cells = [(family, n, r, seed, corruption, queries, want_linear) for n in sizes for r in range(reps)]
    workers = worker_count(len(cells))
    if workers == 1:
        return [run_cell(*c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_cell, *zip(*cells)))


def fit_slope(records: list[dict], key: str = "col_weight") -> float | None:
    """Least-squares slope of log(mean weight) against log n, over sizes with positive weight."""
    by_n: dict[int, list[int]] = {}
    for r in records:
        by_n.setdefault(r["n"], []).append(r[key])
    pts = [(n, float(np.mean(w))) for n, w in sorted(by_n.items()) if n > 0 and np.mean(w) > 0]
    if len(pts) < 2:
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def report(family: str, sizes: list[int], reps: int, seed: int, corruption: float, queries: int,
           fit: bool = False, want_linear: bool = False) -> dict:
    records = run_sweep(family, sizes, reps, seed, corruption, queries, want_linear)
    out = {
        "schema": SCHEMA,
        "engine_version": __version__,
        "family": family,
        "sizes": sizes,
        "reps": reps,
        "seed": seed,
        "corruption_c": corruption,
        "queries": queries,
        "records": records,
    }
    if fit:
        out["fit"] = {"x": "log n", "y": "log col_weight", "slope": fit_slope(records)}
    return out

