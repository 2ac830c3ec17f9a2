"""R-MAT edge generator (desk scale)."""

from __future__ import annotations

import numpy as np

from .graph import Graph

__all__ = ["GRAPH500_PARAMS", "MAX_SCALE", "rmat_edges", "rmat_generate", "rmat_graph"]

GRAPH500_PARAMS = (0.57, 0.19, 0.19, 0.05)
MAX_SCALE = 24


def rmat_generate(
    scale: int,
    edge_factor: int = 16,
    a: float = 0.57,
    b: float = 0.19,
    c: float = 0.19,
    d: float = 0.05,
    seed: int = 0,
) -> np.ndarray:
    """``edge_factor * 2**scale`` sampled (src, dst) pairs as an ``(m, 2)`` uint64 array.

    Each of the ``scale`` bit levels picks a quadrant with probabilities
    ``a, b, c, d`` (top-left, top-right, bottom-left, bottom-right).
    Self-loops and repeats are left in; ingestion cleans them.
    """
    if not 0 <= scale <= MAX_SCALE:
        raise ValueError(f"scale must be in [0, {MAX_SCALE}], got {scale}")
    probs = np.array([a, b, c, d], dtype=float)
    if (probs < 0).any() or not np.isclose(probs.sum(), 1.0):
        raise ValueError("quadrant probabilities must be non-negative and sum to 1")
    rng = np.random.default_rng(seed)
    m = edge_factor << scale
    src = np.zeros(m, dtype=np.uint64)
    dst = np.zeros(m, dtype=np.uint64)
    cuts = np.cumsum(probs)[:3]
    for level in range(scale):
        quadrant = np.searchsorted(cuts, rng.random(m), side="right")
        bit = np.uint64(1 << (scale - 1 - level))
        src |= np.where(quadrant >= 2, bit, np.uint64(0))
        dst |= np.where(quadrant % 2 == 1, bit, np.uint64(0))
    return np.stack([src, dst], axis=1)


def rmat_edges(scale: int, edge_factor: int = 16, *, seed: int = 0, params=GRAPH500_PARAMS) -> list[tuple[int, int]]:
    pairs = rmat_generate(scale, edge_factor, *params, seed=seed)
    return [(int(u), int(v)) for u, v in pairs.tolist()]


def rmat_graph(
    scale: int,
    edge_factor: int = 16,
    *,
    seed: int = 0,
    params=GRAPH500_PARAMS,
    timestamps: tuple[int, int] | None = None,
    labels: int | None = None,
) -> Graph:
    """Cleaned R-MAT graph, optionally with random edge timestamps and vertex labels.

    ``timestamps=(lo, hi)`` draws an integer timestamp per sampled edge and
    keeps the earliest one for repeated pairs.  ``labels=k`` gives every
    vertex one of ``k`` text labels.
    """
    pairs = rmat_generate(scale, edge_factor, *params, seed=seed).tolist()
    rng = np.random.default_rng([seed, 1])
    if timestamps is not None:
        ts = rng.integers(timestamps[0], timestamps[1], size=len(pairs)).tolist()
        g = Graph.from_edges(((u, v, t) for (u, v), t in zip(pairs, ts)), dedup_keep_min_meta=True)
    else:
        g = Graph.from_edges(pairs)
    if labels is not None:
        vs = sorted(g.vertices())
        picks = rng.integers(0, labels, size=len(vs)).tolist()
        g.vertex_meta = {v: f"L{k}" for v, k in zip(vs, picks)}
    return g
