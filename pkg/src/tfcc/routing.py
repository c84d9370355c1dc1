"""Next-hop routing toward the sink over the trusted subgraph.

Routes are hop-count shortest paths. Among equal-length routes the one with
the largest bottleneck (minimum) link trust wins, then the lowest next-hop id.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping


@dataclass(frozen=True)
class Route:
    next_hop: int | None
    hop_count: int
    path_min_trust: float

    @property
    def reachable(self) -> bool:
        return self.next_hop is not None or self.hop_count == 0


UNREACHABLE = Route(None, -1, 0.0)


@dataclass
class TrustedGraph:
    nodes: set[int]
    # (sender, receiver) -> sender's trust in the receiver
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def successors(self, node: int) -> list[int]:
        return sorted(v for (u, v) in self.edges if u == node)

    def predecessors_map(self) -> dict[int, list[int]]:
        preds: dict[int, list[int]] = {n: [] for n in self.nodes}
        for u, v in self.edges:
            preds[v].append(u)
        return preds


@dataclass
class RoutingTable:
    sink: int
    routes: dict[int, Route]

    def __getitem__(self, node: int) -> Route:
        return self.routes.get(node, UNREACHABLE)

    def next_hop(self, node: int) -> int | None:
        return self[node].next_hop

    def path(self, node: int) -> list[int]:
        out = [node]
        while out[-1] != self.sink:
            nxt = self.next_hop(out[-1])
            if nxt is None or len(out) > len(self.routes) + 1:
                raise ValueError(f"no route from {node}")
            out.append(nxt)
        return out


def build_trusted_graph(positions: Mapping[int, tuple[float, float]],
                        trust: Callable[[int, int], float], radio_range: float,
                        threshold: float = 0.5, blocked: Iterable[int] = ()) -> TrustedGraph:
    """Directed edge ``u -> v`` iff in range, neither end blocked and ``trust(u, v) >= threshold``.

    ``trust(u, v)`` is the trust ``u`` holds in ``v`` as a forwarder.
    """
    blocked = set(blocked)
    nodes = {n for n in positions if n not in blocked}
    graph = TrustedGraph(nodes)
    ordered = sorted(nodes)
    r2 = radio_range * radio_range
    for u in ordered:
        xu, yu = positions[u]
        for v in ordered:
            if u == v:
                continue
            xv, yv = positions[v]
            if (xu - xv) ** 2 + (yu - yv) ** 2 > r2:
                continue
            t = trust(u, v)
            if t >= threshold:
                graph.edges[(u, v)] = t
    return graph


def compute_routes(graph: TrustedGraph, sink: int) -> RoutingTable:
    if sink not in graph.nodes:
        raise KeyError(f"sink {sink} not in the trusted graph")
    preds = graph.predecessors_map()
    dist = {sink: 0}
    frontier = deque([sink])
    while frontier:
        v = frontier.popleft()
        for u in preds[v]:
            if u not in dist:
                dist[u] = dist[v] + 1
                frontier.append(u)

    routes = {sink: Route(None, 0, math.inf)}
    for u in sorted((n for n in dist if n != sink), key=lambda n: (dist[n], n)):
        best = None
        for v in graph.successors(u):
            if dist.get(v) != dist[u] - 1:
                continue
            bottleneck = min(graph.edges[(u, v)], routes[v].path_min_trust)
            if best is None or bottleneck > best[0]:
                best = (bottleneck, v)
        routes[u] = Route(best[1], dist[u], best[0])
    for n in graph.nodes:
        routes.setdefault(n, UNREACHABLE)
    return RoutingTable(sink, routes)
