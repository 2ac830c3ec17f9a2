import random

from hypothesis import HealthCheck, settings

from tripoll import Graph

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def gnp(n: int, p: float, seed: int, *, timestamps: bool = False, labels: int | None = None) -> Graph:
    """Seeded G(n, p) with optional integer timestamps and text vertex labels."""
    rng = random.Random(seed)
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v, rng.randrange(1_000)) if timestamps else (u, v))
    vmeta = {v: f"L{rng.randrange(labels)}" for v in range(n)} if labels else None
    return Graph.from_edges(edges, vmeta)


def complete(n: int) -> Graph:
    return Graph.from_edges([(u, v) for u in range(n) for v in range(u + 1, n)])
