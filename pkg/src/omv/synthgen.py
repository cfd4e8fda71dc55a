"""Structured Boolean matrices with known (corrupted) VC-dimension."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitmatrix import BitMatrix
from .rng import stream

FAMILIES = ("interval", "grid", "halfplane", "random", "hadamard_like")

# Documented VC-dimension bounds; reported in benchmarks, never used by the engine.
CLAIMED_D = {"interval": 2, "grid": 4, "halfplane": 3, "random": None, "hadamard_like": None}


@dataclass(frozen=True)
class SynthSpec:
    family: str
    n: int
    m: int | None = None
    corruption_per_row: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.n < 0 or (self.m is not None and self.m < 0):
            raise ValueError("dimensions must be nonnegative")
        if self.corruption_per_row < 0:
            raise ValueError("corruption_per_row must be nonnegative")

    @property
    def rows(self) -> int:
        return self.n if self.m is None else self.m

    @property
    def claimed_d(self) -> int | None:
        return CLAIMED_D[self.family]


def interval_matrix(lefts, rights, m: int, n: int) -> np.ndarray:
    """Intersection pattern of intervals: row i vs column j, self pairs excluded."""
    lefts = np.asarray(lefts, dtype=np.float64)
    rights = np.asarray(rights, dtype=np.float64)
    li, ri = lefts[:m, None], rights[:m, None]
    lj, rj = lefts[None, :n], rights[None, :n]
    out = (li <= rj) & (lj <= ri)
    k = min(m, n)
    out[np.arange(k), np.arange(k)] = False
    return out


def _interval(rng, m, n):
    k = max(m, n)
    ends = np.sort(rng.random((k, 2)), axis=1)
    return interval_matrix(ends[:, 0], ends[:, 1], m, n)


def _grid(rng, m, n):
    side = math.isqrt(n)
    if side * side != n:
        raise ValueError(f"grid family needs a square n, got {n}")
    r, c = np.divmod(np.arange(n), side)
    adj = (np.abs(r[:, None] - r[None, :]) + np.abs(c[:, None] - c[None, :])) == 1
    return adj[np.arange(m) % n] if n else np.zeros((m, 0), dtype=bool)


def _halfplane(rng, m, n):
    angle = rng.uniform(0, 2 * np.pi, m)
    normals = np.stack([np.cos(angle), np.sin(angle)], axis=1)
    anchors = rng.random((m, 2))
    offsets = np.einsum("ij,ij->i", normals, anchors)
    points = rng.random((n, 2))
    return normals @ points.T >= offsets[:, None]


def _random(rng, m, n):
    return rng.random((m, n)) < 0.5


def _hadamard_like(rng, m, n):
    i = np.arange(m, dtype=np.uint64)[:, None]
    j = np.arange(n, dtype=np.uint64)[None, :]
    return (np.bitwise_count(i & j) & 1).astype(bool)


_BUILDERS = {
    "interval": _interval,
    "grid": _grid,
    "halfplane": _halfplane,
    "random": _random,
    "hadamard_like": _hadamard_like,
}


def base_matrix(spec: SynthSpec) -> np.ndarray:
    rng = stream(spec.seed, "synth:" + spec.family)
    return _BUILDERS[spec.family](rng, spec.rows, spec.n)


def corrupt(dense: np.ndarray, per_row: int, rng: np.random.Generator) -> np.ndarray:
    """Flip exactly ``min(per_row, n)`` distinct entries in every row."""
    out = dense.copy()
    m, n = out.shape
    k = min(per_row, n)
    if k == 0:
        return out
    # argpartition of iid keys = a uniform k-subset per row, without a Python loop.
    picks = np.argpartition(rng.random((m, n)), k - 1, axis=1)[:, :k]
    rows = np.repeat(np.arange(m), k)
    out[rows, picks.reshape(-1)] ^= True
    return out


def generate_dense(spec: SynthSpec) -> np.ndarray:
    dense = base_matrix(spec)
    if spec.corruption_per_row:
        dense = corrupt(dense, spec.corruption_per_row, stream(spec.seed, "synth:corrupt"))
    return dense


def generate(spec: SynthSpec) -> BitMatrix:
    return BitMatrix.from_dense(generate_dense(spec))


def corruption_budget(c: float, n: int, d: int | None) -> int:
    """``floor(c * n^(1 - 1/d))``; unstructured families (d = None) use ``floor(c * n)``."""
    exponent = 1.0 if d is None else 1.0 - 1.0 / d
    return int(math.floor(c * n**exponent))
