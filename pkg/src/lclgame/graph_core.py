"""Graphs, labelings and radius-t balls.

Vertices are dense 0-based integers. Everything here is immutable once
built, so graphs and balls can be shared and used as cache keys.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Hashable, Iterable, Sequence

#: Label of a vertex that has not decided yet.
BOTTOM = None


class GraphError(ValueError):
    """Raised for malformed graph documents or family specs."""


@dataclass(frozen=True)
class Graph:
    n: int
    adjacency: tuple[tuple[int, ...], ...]
    delta: int

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if v in nbrs[u]:
                raise GraphError(f"duplicate edge ({u}, {v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        g = cls._from_sets(nbrs)
        if not g.is_connected():
            raise GraphError("graph is disconnected")
        return g

    @classmethod
    def _from_sets(cls, nbrs: Sequence[set[int]]) -> "Graph":
        adjacency = tuple(tuple(sorted(s)) for s in nbrs)
        observed = max((len(a) for a in adjacency), default=0)
        return cls(len(adjacency), adjacency, max(2, observed))

    def __post_init__(self):
        if self.n < 1 or len(self.adjacency) != self.n:
            raise GraphError("adjacency length must equal n >= 1")

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    def is_connected(self) -> bool:
        return len(bfs_distances(self, 0)) == self.n

    def diameter(self) -> int:
        return max(max(bfs_distances(self, v).values()) for v in range(self.n))

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "edges": [list(e) for e in self.edges()]})

    def render(self) -> str:
        """Edge-list document accepted by :func:`parse_graph`."""
        lines = [f"n {self.n}"] + [f"{u} {v}" for u, v in self.edges()]
        return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    """Parse an edge-list document: a header ``n <count>`` then ``u v`` lines.

    Blank lines and ``#`` comments are ignored. Errors carry the 1-based
    line number of the offending line.
    """
    n = None
    seen: set[tuple[int, int]] = set()
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise GraphError(f"line {lineno}: expected header 'n <count>'")
            try:
                n = int(parts[1])
            except ValueError:
                raise GraphError(f"line {lineno}: bad vertex count {parts[1]!r}") from None
            if n < 1:
                raise GraphError(f"line {lineno}: vertex count must be positive")
            continue
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'u v'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer endpoint") from None
        if u == v:
            raise GraphError(f"line {lineno}: self-loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"line {lineno}: vertex out of range for n={n}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphError(f"line {lineno}: duplicate edge {key}")
        seen.add(key)
        edges.append(key)
    if n is None:
        raise GraphError("line 1: missing header 'n <count>'")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    g = Graph._from_sets(nbrs)
    if not g.is_connected():
        raise GraphError(f"line {lineno}: graph is disconnected")
    return g


def graph_from_json(text: str) -> Graph:
    doc = json.loads(text)
    return Graph.from_edges(doc["n"], [tuple(e) for e in doc["edges"]])


def make_family(name: str, *params: int, seed: int | None = None) -> Graph:
    """Build a graph from a named family.

    ``k2``, ``path(n)``, ``cycle(n)``, ``complete(n)`` and
    ``random_bounded(n, delta, seed)``. The random family is connected,
    has maximum degree at most ``delta`` and depends only on the seed.
    """
    if name == "k2":
        return Graph.from_edges(2, [(0, 1)])
    if name == "path":
        (n,) = params
        if n < 2:
            raise GraphError("path needs n >= 2")
        return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    if name == "cycle":
        (n,) = params
        if n < 3:
            raise GraphError("cycle needs n >= 3")
        return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
    if name == "complete":
        (n,) = params
        if n < 2:
            raise GraphError("complete needs n >= 2")
        return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])
    if name == "random_bounded":
        if len(params) == 3:
            n, delta, seed = params
        else:
            n, delta = params
        if seed is None:
            raise GraphError("random_bounded needs a seed")
        return _random_bounded(n, delta, seed)
    raise GraphError(f"unknown graph family {name!r}")


def _random_bounded(n: int, delta: int, seed: int) -> Graph:
    if n < 2:
        raise GraphError("random_bounded needs n >= 2")
    if delta < 2 and n > 2:
        raise GraphError("random_bounded needs delta >= 2 for n > 2")
    rng = random.Random(seed)
    nbrs: list[set[int]] = [set() for _ in range(n)]
    order = list(range(n))
    rng.shuffle(order)
    # random spanning tree, attaching only to vertices with spare degree
    for i in range(1, n):
        v = order[i]
        hosts = [u for u in order[:i] if len(nbrs[u]) < delta]
        u = rng.choice(hosts)
        nbrs[u].add(v)
        nbrs[v].add(u)
    candidates = [(u, v) for u in range(n) for v in range(u + 1, n) if v not in nbrs[u]]
    rng.shuffle(candidates)
    for u, v in candidates[: n]:
        if len(nbrs[u]) < delta and len(nbrs[v]) < delta:
            nbrs[u].add(v)
            nbrs[v].add(u)
    return Graph._from_sets(nbrs)


def parse_family(spec: str) -> Graph:
    """CLI family syntax: ``k2``, ``cycle:4``, ``random_bounded:10:3:7``."""
    name, *rest = spec.split(":")
    try:
        params = [int(p) for p in rest]
    except ValueError:
        raise GraphError(f"bad family spec {spec!r}") from None
    try:
        return make_family(name, *params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, GraphError):
            raise
        raise GraphError(f"bad parameters for family {name!r}: {spec!r}") from None


def bfs_distances(graph: Graph, source: int, limit: int | None = None) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if limit is not None and dist[u] == limit:
            continue
        for w in graph.adjacency[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


@dataclass(frozen=True)
class BallShape:
    """Structure of a radius-t ball: vertex ids kept from the host graph."""

    center: int
    radius: int
    vertices: tuple[int, ...]
    distance: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    def index(self, v: int) -> int:
        return self.vertices.index(v)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(sorted({b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v}))


@lru_cache(maxsize=None)
def ball_shape(graph: Graph, v: int, t: int) -> BallShape:
    if not 0 <= v < graph.n:
        raise IndexError(f"vertex {v} out of range")
    if t < 0:
        raise ValueError("radius must be >= 0")
    dist = bfs_distances(graph, v, limit=t)
    verts = tuple(sorted(dist))
    inside = set(verts)
    edges = tuple((a, b) for a in verts for b in graph.adjacency[a] if a < b and b in inside)
    return BallShape(v, t, verts, tuple(dist[u] for u in verts), edges)


@dataclass(frozen=True)
class Ball:
    """A radius-t ball with the labels of its vertices (``None`` is bottom)."""

    shape: BallShape
    labels: tuple[Hashable, ...]

    @property
    def center(self) -> int:
        return self.shape.center

    @property
    def radius(self) -> int:
        return self.shape.radius

    @property
    def vertices(self) -> tuple[int, ...]:
        return self.shape.vertices

    def label(self, v: int) -> Hashable:
        return self.labels[self.shape.index(v)]

    def center_label(self) -> Hashable:
        return self.label(self.shape.center)

    def neighbor_labels(self) -> list[Hashable]:
        """Labels of the center's neighbors."""
        return [lab for lab, d in zip(self.labels, self.shape.distance) if d == 1]

    def is_complete(self) -> bool:
        return all(lab is not BOTTOM for lab in self.labels)

    def with_labels(self, labels: Sequence[Hashable]) -> "Ball":
        return Ball(self.shape, tuple(labels))

    def key(self) -> str:
        """Canonical encoding used by preference tables.

        Center label, then the sorted ``distance:label`` pairs of the other
        vertices, e.g. ``"1|1:0,1:0"`` for an MIS member with two neighbors.
        """
        others = sorted(
            f"{d}:{lab}" for lab, d in zip(self.labels, self.shape.distance) if d > 0
        )
        return f"{self.center_label()}|{','.join(others)}"


def ball(graph: Graph, labeling: Sequence[Hashable], v: int, t: int) -> Ball:
    """The radius-``t`` ball around ``v`` with labels copied from ``labeling``."""
    if len(labeling) != graph.n:
        raise ValueError("labeling length must equal n")
    shape = ball_shape(graph, v, t)
    return Ball(shape, tuple(labeling[u] for u in shape.vertices))
