"""Hand-built graphs with known structure, shared by tests and experiment scripts."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import Graph

__all__ = ["HubFixture", "hub_graph"]


@dataclass(frozen=True)
class HubFixture:
    """Ids of the interesting vertices in :func:`hub_graph`."""

    graph: Graph
    hub: int
    super_hubs: tuple[int, ...]
    pivots: tuple[int, ...]


def hub_graph(pivots: int = 1600, hub_degree: int = 2000, super_hubs: int = 4, super_leaves: int = 500) -> HubFixture:
    """A hub whose undirected degree is large but whose out-degree is tiny.

    Every pivot touches the hub and each super-hub, so the pivots' out-lists
    are ``[hub, super-hubs...]`` and every pivot proposes a wedge check at
    the hub.  The super-hubs have even higher degree (they also touch all
    pivots plus their own leaves), which leaves the hub with out-degree
    ``super_hubs``.  Leaves pad the hub up to ``hub_degree``.
    """
    if hub_degree < pivots + super_hubs:
        raise ValueError("hub_degree must cover the pivots and super-hubs")
    hub = 0
    supers = tuple(range(1, 1 + super_hubs))
    piv = tuple(range(1 + super_hubs, 1 + super_hubs + pivots))
    nxt = piv[-1] + 1 if piv else 1 + super_hubs
    edges = []
    for p in piv:
        edges.append((p, hub))
        edges.extend((p, s) for s in supers)
    for i, s in enumerate(supers):
        edges.append((hub, s))
        edges.extend((s, t) for t in supers[i + 1 :])
    for _ in range(hub_degree - pivots - super_hubs):
        edges.append((hub, nxt))
        nxt += 1
    for s in supers:
        for _ in range(super_leaves):
            edges.append((s, nxt))
            nxt += 1
    return HubFixture(Graph.from_edges(edges), hub, supers, piv)
