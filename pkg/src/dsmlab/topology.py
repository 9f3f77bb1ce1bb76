"""Emulated backbone topology: nodes, links, liveness, and graph analysis helpers."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

NodeRef = int


class TopologyError(ValueError):
    pass


@dataclass
class Link:
    a: NodeRef
    b: NodeRef
    latency_ms: int
    up: bool = True


def _link_key(a: NodeRef, b: NodeRef) -> tuple[NodeRef, NodeRef]:
    return (a, b) if a < b else (b, a)


@dataclass
class TopologyGraph:
    """Undirected backbone graph with per-node and per-link up/down state.

    A Down node contributes no usable links: every incident link behaves as
    Down while the node is Down, without touching the link's own state.
    """

    node_up: dict[NodeRef, bool] = field(default_factory=dict)
    links: dict[tuple[NodeRef, NodeRef], Link] = field(default_factory=dict)

    def add_node(self, ref: NodeRef) -> None:
        if ref in self.node_up:
            raise TopologyError(f"duplicate node {ref}")
        self.node_up[ref] = True

    def add_link(self, a: NodeRef, b: NodeRef, latency_ms: int) -> None:
        if a == b:
            raise TopologyError(f"self-loop on node {a}")
        if a not in self.node_up or b not in self.node_up:
            raise TopologyError(f"link {a}-{b} references unknown node")
        key = _link_key(a, b)
        if key in self.links:
            raise TopologyError(f"duplicate link {a}-{b}")
        if latency_ms <= 0:
            raise TopologyError(f"link {a}-{b} latency must be > 0, got {latency_ms}")
        self.links[key] = Link(key[0], key[1], latency_ms)

    def has_node(self, ref: NodeRef) -> bool:
        return ref in self.node_up

    def has_link(self, a: NodeRef, b: NodeRef) -> bool:
        return _link_key(a, b) in self.links

    def set_node(self, ref: NodeRef, up: bool) -> None:
        if ref not in self.node_up:
            raise TopologyError(f"unknown node {ref}")
        self.node_up[ref] = up

    def set_link(self, a: NodeRef, b: NodeRef, up: bool) -> None:
        key = _link_key(a, b)
        if key not in self.links:
            raise TopologyError(f"unknown link {a}-{b}")
        self.links[key].up = up

    def is_up(self, ref: NodeRef) -> bool:
        return self.node_up.get(ref, False)

    def link_usable(self, a: NodeRef, b: NodeRef) -> bool:
        link = self.links.get(_link_key(a, b))
        if link is None:
            return False
        return link.up and self.is_up(a) and self.is_up(b)

    def latency_ms(self, a: NodeRef, b: NodeRef) -> int:
        return self.links[_link_key(a, b)].latency_ms

    def nodes(self) -> list[NodeRef]:
        return sorted(self.node_up)

    def live_nodes(self) -> list[NodeRef]:
        return sorted(ref for ref, up in self.node_up.items() if up)

    def neighbors(self, ref: NodeRef) -> list[NodeRef]:
        """Neighbors reachable over currently usable links, in ref order."""
        out = []
        for (a, b), link in self.links.items():
            if ref == a and self.link_usable(a, b):
                out.append(b)
            elif ref == b and self.link_usable(a, b):
                out.append(a)
        return sorted(out)


def connected_components(graph: TopologyGraph) -> list[list[NodeRef]]:
    """Partition of Up nodes over usable links, each component sorted, components
    ordered by their smallest member."""
    seen: set[NodeRef] = set()
    parts: list[list[NodeRef]] = []
    for start in graph.live_nodes():
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            cur = stack.pop()
            comp.append(cur)
            for nxt in graph.neighbors(cur):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        parts.append(sorted(comp))
    return parts


def articulation_points(graph: TopologyGraph) -> set[NodeRef]:
    """Cut vertices of the live subgraph (iterative Tarjan lowlink)."""
    live = graph.live_nodes()
    disc: dict[NodeRef, int] = {}
    low: dict[NodeRef, int] = {}
    cuts: set[NodeRef] = set()
    counter = [0]

    for root in live:
        if root in disc:
            continue
        root_children = 0
        stack: list[tuple[NodeRef, NodeRef | None, list[NodeRef], int]] = []
        disc[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append((root, None, graph.neighbors(root), 0))
        while stack:
            node, parent, neigh, idx = stack.pop()
            if idx < len(neigh):
                stack.append((node, parent, neigh, idx + 1))
                nxt = neigh[idx]
                if nxt == parent:
                    continue
                if nxt in disc:
                    low[node] = min(low[node], disc[nxt])
                else:
                    if node == root:
                        root_children += 1
                    disc[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append((nxt, node, graph.neighbors(nxt), 0))
            else:
                if parent is not None:
                    low[parent] = min(low[parent], low[node])
                    if parent != root and low[node] >= disc[parent]:
                        cuts.add(parent)
        if root_children > 1:
            cuts.add(root)
    return cuts


def random_connected_topology(n: int, rng: random.Random,
                              extra_links: int | None = None,
                              latency_range: tuple[int, int] = (1, 5)) -> TopologyGraph:
    """Seeded random connected graph: random spanning tree plus extra chords."""
    if n < 1:
        raise TopologyError("need at least one node")
    graph = TopologyGraph()
    for ref in range(n):
        graph.add_node(ref)
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        a = order[i]
        b = order[rng.randrange(i)]
        graph.add_link(a, b, rng.randint(*latency_range))
    if extra_links is None:
        extra_links = n // 3
    tries = 0
    added = 0
    while added < extra_links and tries < 10 * extra_links + 20:
        tries += 1
        a = rng.randrange(n)
        b = rng.randrange(n)
        if a == b or graph.has_link(a, b):
            continue
        graph.add_link(a, b, rng.randint(*latency_range))
        added += 1
    return graph
