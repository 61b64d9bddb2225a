"""Finite graphs with paired directed edges.

Every edge comes with a reverse partner (a fixed-point-free involution on
the edge set), so an undirected connection is a pair of half-edges.  This
is the substrate for underlying graphs of graphs of groups, for quotient
trees and for expanded spaces.  Graphs are immutable after construction
and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, Set, Tuple

from .errors import DisconnectedGraph, UnknownVertex

VertexId = Hashable
EdgeId = Hashable


def id_key(x):
    """Deterministic sort key for mixed vertex/edge id types."""
    if isinstance(x, bool):
        return (1, repr(x))
    if isinstance(x, (int, float)):
        return (0, x)
    if isinstance(x, str):
        return (1, x)
    if isinstance(x, tuple):
        return (2, tuple(id_key(y) for y in x))
    return (3, repr(x))


@dataclass(frozen=True)
class Graph:
    vertices: FrozenSet[VertexId]
    edges: FrozenSet[EdgeId]
    source: Mapping[EdgeId, VertexId]
    target: Mapping[EdgeId, VertexId]
    reverse: Mapping[EdgeId, EdgeId]

    def __post_init__(self):
        for e in self.edges:
            r = self.reverse[e]
            if r == e or self.reverse[r] != e:
                raise ValueError(f"edge involution broken at {e!r}")
            if self.source[self.reverse[e]] != self.target[e]:
                raise ValueError(f"reverse of {e!r} does not swap endpoints")
            if self.source[e] not in self.vertices or self.target[e] not in self.vertices:
                raise ValueError(f"edge {e!r} has endpoint outside the vertex set")

    # -- construction ---------------------------------------------------

    @classmethod
    def from_edge_pairs(
        cls,
        vertices: Iterable[VertexId],
        pairs: Iterable[Tuple[EdgeId, VertexId, VertexId]],
    ) -> "Graph":
        """Build a graph from one declaration per undirected connection.

        Each ``(name, u, v)`` yields the half-edge ``(name, 1)`` from u to v
        and its reverse ``(name, -1)``.
        """
        vs = frozenset(vertices)
        source: Dict[EdgeId, VertexId] = {}
        target: Dict[EdgeId, VertexId] = {}
        reverse: Dict[EdgeId, EdgeId] = {}
        for name, u, v in pairs:
            fwd, bwd = (name, 1), (name, -1)
            if fwd in source:
                raise ValueError(f"duplicate edge name {name!r}")
            source[fwd], target[fwd] = u, v
            source[bwd], target[bwd] = v, u
            reverse[fwd], reverse[bwd] = bwd, fwd
        return cls(vs, frozenset(source), source, target, reverse)

    # -- basic queries ---------------------------------------------------

    def sorted_vertices(self) -> List[VertexId]:
        return sorted(self.vertices, key=id_key)

    def sorted_edges(self) -> List[EdgeId]:
        return sorted(self.edges, key=id_key)

    def edges_from(self, v: VertexId) -> List[EdgeId]:
        return sorted((e for e in self.edges if self.source[e] == v), key=id_key)

    def edge_pairs(self) -> List[Tuple[EdgeId, EdgeId]]:
        """One canonical (edge, reverse) tuple per involution pair."""
        out = []
        seen: Set[EdgeId] = set()
        for e in self.sorted_edges():
            if e in seen:
                continue
            seen.add(e)
            seen.add(self.reverse[e])
            out.append((e, self.reverse[e]))
        return out

    def neighbors(self, v: VertexId) -> List[VertexId]:
        return sorted({self.target[e] for e in self.edges if self.source[e] == v}, key=id_key)

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        seen = self._component(next(iter(self.sorted_vertices())))
        return len(seen) == len(self.vertices)

    def _component(self, start: VertexId) -> Set[VertexId]:
        seen = {start}
        frontier = [start]
        while frontier:
            v = frontier.pop()
            for w in self.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        return seen

    def is_tree(self) -> bool:
        return self.is_connected() and len(self.edges) == 2 * (len(self.vertices) - 1)


# -- operations ----------------------------------------------------------


def spanning_tree(g: Graph) -> FrozenSet[EdgeId]:
    """Edge pairs of the BFS spanning tree rooted at the least vertex id.

    Returns the set of half-edges (both orientations) of the tree.
    """
    if not g.vertices:
        raise DisconnectedGraph("empty graph has no spanning tree")
    root = g.sorted_vertices()[0]
    seen = {root}
    tree: Set[EdgeId] = set()
    frontier = [root]
    while frontier:
        next_frontier = []
        for v in frontier:
            for e in g.edges_from(v):
                w = g.target[e]
                if w not in seen:
                    seen.add(w)
                    tree.add(e)
                    tree.add(g.reverse[e])
                    next_frontier.append(w)
        frontier = next_frontier
    if len(seen) != len(g.vertices):
        raise DisconnectedGraph(f"graph has {len(g.vertices) - len(seen)} unreachable vertices")
    return frozenset(tree)


def induced_subgraph(g: Graph, vertex_set: Iterable[VertexId]) -> Graph:
    u = frozenset(vertex_set)
    unknown = u - g.vertices
    if unknown:
        raise UnknownVertex(f"not in graph: {sorted(unknown, key=id_key)!r}")
    edges = frozenset(e for e in g.edges if g.source[e] in u and g.target[e] in u)
    return Graph(
        u,
        edges,
        {e: g.source[e] for e in edges},
        {e: g.target[e] for e in edges},
        {e: g.reverse[e] for e in edges},
    )


def components_minus_vertex(g: Graph, v: VertexId) -> List[FrozenSet[VertexId]]:
    """Connected components of the graph with ``v`` deleted, sorted by least member."""
    if v not in g.vertices:
        raise UnknownVertex(repr(v))
    rest = induced_subgraph(g, g.vertices - {v})
    out: List[FrozenSet[VertexId]] = []
    remaining = set(rest.vertices)
    while remaining:
        start = min(remaining, key=id_key)
        comp = rest._component(start)
        remaining -= comp
        out.append(frozenset(comp))
    out.sort(key=lambda c: id_key(min(c, key=id_key)))
    return out


def to_dot(g: Graph, name: str = "G", labels: Mapping[VertexId, str] | None = None) -> str:
    """DOT export with one undirected edge per involution pair."""
    lines = [f"graph {name} {{"]
    for v in g.sorted_vertices():
        label = labels.get(v, str(v)) if labels else str(v)
        lines.append(f'  "{v}" [label="{label}"];')
    for e, _ in g.edge_pairs():
        lines.append(f'  "{g.source[e]}" -- "{g.target[e]}" [label="{e[0] if isinstance(e, tuple) else e}"];')
    lines.append("}")
    return "\n".join(lines)
