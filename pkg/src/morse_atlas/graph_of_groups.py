"""Graphs of groups and finite balls of their expanded spaces and trees.

A graph of groups assigns a group descriptor to every vertex and every
edge pair, together with injections sending edge-group generators to
words in the target vertex group.  From this we synthesize fundamental
presentations relative to a spanning tree, collapse connected vertex
sets to single vertices, and expand finite balls of the associated
space X (vertices (g, v), generator and stable-letter edges) and its
quotient tree T of cosets.

Ball expansion supports graphs of groups with trivial edge groups,
where the fundamental group is a free product of the vertex groups and
free letters, so normal forms are exact.  A lazy space object exposes
exact distances, projections and chosen geodesics without materializing
a ball, which keeps large-radius experiments tractable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from sympy import Matrix
from sympy.matrices.normalforms import smith_normal_form

from . import words as W
from .errors import (
    BallTooLarge,
    DisconnectedGraph,
    InvalidSpanningTree,
    MalformedBall,
    NotConnected,
    NotInBall,
    OverlappingSets,
    WordProblemUnavailable,
)
from .graph_core import EdgeId, Graph, VertexId, id_key, induced_subgraph, spanning_tree
from .group_kb import (
    Ball,
    GroupDescriptor,
    NormalForm,
    Presentation,
    _FreeProductNF,
    Z,
    _default_gens,
    free_product,
    from_presentation,
    max_cells_cap,
    normal_form_engine,
    presentation_of,
)
from .words import Letter, Word


@dataclass(frozen=True)
class GraphOfGroups:
    graph: Graph
    vertex_group: Mapping[VertexId, GroupDescriptor]
    edge_group: Mapping[EdgeId, GroupDescriptor]
    injection: Mapping[EdgeId, Tuple[Word, ...]]

    def __post_init__(self):
        g = self.graph
        if not g.is_connected():
            raise DisconnectedGraph("underlying graph must be connected")
        for v in g.vertices:
            if v not in self.vertex_group:
                raise ValueError(f"vertex {v!r} has no group")
        for e in g.edges:
            d = self.edge_group[e]
            if d != self.edge_group[g.reverse[e]]:
                raise ValueError(f"edge group differs across involution at {e!r}")
            inj = self.injection.get(e, ())
            gens = _default_gens(d)
            if d.tag == "Trivial":
                if inj:
                    raise ValueError(f"trivial edge group with nonempty injection at {e!r}")
                continue
            if len(inj) != len(gens):
                raise ValueError(
                    f"injection at {e!r} has {len(inj)} images for {len(gens)} generators"
                )
            target = self.vertex_group[g.target[e]]
            target_gens = _generator_names(target)
            if target_gens is None:
                continue  # symbolic vertex group, injection words not checkable
            for w in inj:
                for name, _ in w:
                    if name not in target_gens:
                        raise ValueError(
                            f"injection word at {e!r} uses unknown generator {name!r}"
                        )

    def vertex_prefix(self, v: VertexId) -> str:
        return f"v{self.graph.sorted_vertices().index(v)}."

    def base_vertex(self) -> VertexId:
        return self.graph.sorted_vertices()[0]


def simple_gog(
    vertices: Mapping[VertexId, GroupDescriptor],
    edges: Iterable[Tuple[EdgeId, VertexId, VertexId, GroupDescriptor, Sequence[Word], Sequence[Word]]],
) -> GraphOfGroups:
    """Convenience builder.

    Each edge entry is (name, u, v, edge_group, images_in_u, images_in_v):
    the half-edge (name, 1) runs u -> v carrying the images in v, its
    reverse carries the images in u.
    """
    pairs = []
    edge_group: Dict[EdgeId, GroupDescriptor] = {}
    injection: Dict[EdgeId, Tuple[Word, ...]] = {}
    for name, u, v, d, into_u, into_v in edges:
        pairs.append((name, u, v))
        edge_group[(name, 1)] = edge_group[(name, -1)] = d
        injection[(name, 1)] = tuple(tuple(w) for w in into_v)
        injection[(name, -1)] = tuple(tuple(w) for w in into_u)
    g = Graph.from_edge_pairs(vertices.keys(), pairs)
    return GraphOfGroups(g, dict(vertices), edge_group, injection)


# ---------------------------------------------------------------------------
# fundamental presentation


def _generator_names(d: GroupDescriptor):
    """Generator names of a descriptor, or None for symbolic tags."""
    try:
        return set(presentation_of(d).generators)
    except WordProblemUnavailable:
        return None


def _vertex_presentations(gog: GraphOfGroups):
    """Per-vertex prefixed presentations plus the generator rename maps."""
    pres: Dict[VertexId, Presentation] = {}
    rename: Dict[VertexId, Dict[str, str]] = {}
    for v in gog.graph.sorted_vertices():
        prefix = gog.vertex_prefix(v)
        d = gog.vertex_group[v]
        base = d.presentation if d.tag == "Presentation" else presentation_of(d)
        ren = {g: prefix + g for g in base.generators}
        rn = lambda w, ren=ren: tuple((ren[g], e) for g, e in w)
        pres[v] = Presentation(
            tuple(ren[g] for g in base.generators),
            tuple(rn(r) for r in base.relators),
        )
        rename[v] = ren
    return pres, rename


def _stable_letters(gog: GraphOfGroups, st: FrozenSet[EdgeId]):
    """One stable-letter name per off-tree canonical edge pair."""
    out: Dict[EdgeId, Optional[str]] = {}
    for e, r in gog.graph.edge_pairs():
        if e in st:
            out[e] = out[r] = None
        else:
            out[e] = out[r] = f"t.{e[0] if isinstance(e, tuple) else e}"
    return out


def _check_spanning(gog: GraphOfGroups, st: FrozenSet[EdgeId]) -> None:
    for e in st:
        if e not in gog.graph.edges:
            raise InvalidSpanningTree(f"unknown edge {e!r}")
        if gog.graph.reverse[e] not in st:
            raise InvalidSpanningTree(f"{e!r} in tree without its reverse")
    if len(st) != 2 * (len(gog.graph.vertices) - 1):
        raise InvalidSpanningTree("wrong number of tree edges")
    sub = Graph(
        gog.graph.vertices,
        frozenset(st),
        {e: gog.graph.source[e] for e in st},
        {e: gog.graph.target[e] for e in st},
        {e: gog.graph.reverse[e] for e in st},
    )
    if not sub.is_tree():
        raise InvalidSpanningTree("edge set is not a spanning tree")


def presentation_data(gog: GraphOfGroups, st: Optional[FrozenSet[EdgeId]] = None):
    """Presentation plus renames and stable-letter assignment."""
    if st is None:
        st = spanning_tree(gog.graph)
    else:
        st = frozenset(st)
        _check_spanning(gog, st)
    pres, rename = _vertex_presentations(gog)
    stable = _stable_letters(gog, st)

    gens: List[str] = []
    relators: List[Word] = []
    for v in gog.graph.sorted_vertices():
        gens.extend(pres[v].generators)
        relators.extend(pres[v].relators)
    for e, _ in gog.graph.edge_pairs():
        if stable[e] is not None:
            gens.append(stable[e])

    g = gog.graph
    for e, r in g.edge_pairs():
        d = gog.edge_group[e]
        if d.tag == "Trivial":
            continue
        t: Word = ((stable[e], 1),) if stable[e] else ()
        ren_plus = rename[g.target[e]]
        ren_minus = rename[g.source[e]]
        img_plus = gog.injection[e]       # f_alpha(h) in G at target(e)
        img_minus = gog.injection[r]      # f_albar(h) in G at source(e)
        for wp, wm in zip(img_plus, img_minus):
            fp = tuple((ren_plus[g_], s) for g_, s in wp)
            fm = tuple((ren_minus[g_], s) for g_, s in wm)
            relators.append(W.concat(fm, t, W.inverse(fp), W.inverse(t)))
    return Presentation(tuple(gens), tuple(relators)), rename, stable


def fundamental_presentation(
    gog: GraphOfGroups, st: Optional[FrozenSet[EdgeId]] = None
) -> Presentation:
    return presentation_data(gog, st)[0]


def abelianization(p: Presentation) -> Tuple[int, Tuple[int, ...]]:
    """(free rank, torsion coefficients > 1), via Smith normal form."""
    gens = list(p.generators)
    if not p.relators:
        return len(gens), ()
    idx = {g: i for i, g in enumerate(gens)}
    rows = []
    for rel in p.relators:
        row = [0] * len(gens)
        for g, e in rel:
            row[idx[g]] += e
        rows.append(row)
    m = smith_normal_form(Matrix(rows))
    diag = [abs(m[i, i]) for i in range(min(m.shape)) if m[i, i] != 0]
    rank = len(gens) - len(diag)
    torsion = tuple(d for d in diag if d > 1)
    return rank, torsion


# ---------------------------------------------------------------------------
# collapse


def _recognize_trivial_edge_pi1(sub: GraphOfGroups) -> Optional[GroupDescriptor]:
    """Free-product descriptor of pi1 when all internal edge groups are trivial.

    Factors in sorted-vertex order followed by one Z per off-tree edge
    pair, flattened; returns None when some edge group is nontrivial.
    """
    if any(sub.edge_group[e].tag != "Trivial" for e in sub.graph.edges):
        return None
    st = spanning_tree(sub.graph)
    factors: List[GroupDescriptor] = [
        sub.vertex_group[v] for v in sub.graph.sorted_vertices()
    ]
    for e, _ in sub.graph.edge_pairs():
        if e not in st:
            factors.append(Z())
    factors = [f for f in factors if f.tag != "Trivial"] or [factors[0]]
    flat: List[GroupDescriptor] = []
    for f in factors:
        flat.extend(f.factors if f.tag == "FreeProduct" else [f])
    if len(flat) == 1:
        return flat[0]
    return free_product(*flat)


def _collapsed_group(sub: GraphOfGroups):
    """(descriptor, rename) for the collapsed vertex.

    rename maps (vertex of sub, generator name) to a generator name of
    the returned descriptor.
    """
    pres, ren, stable = presentation_data(sub)
    recognized = _recognize_trivial_edge_pi1(sub)
    if recognized is None:
        d = from_presentation(pres)
        return d, {
            (v, g): ren[v][g] for v in sub.graph.vertices for g in ren[v]
        }
    if recognized.tag != "FreeProduct":
        # single factor; its generators keep their own names
        verts = [v for v in sub.graph.sorted_vertices()
                 if sub.vertex_group[v].tag != "Trivial"]
        v = verts[0] if verts else sub.graph.sorted_vertices()[0]
        return recognized, {
            (v, g): g for g in _default_gens(sub.vertex_group[v])
        }
    rename: Dict[Tuple[VertexId, str], str] = {}
    i = 0
    for v in sub.graph.sorted_vertices():
        d = sub.vertex_group[v]
        gens = _default_gens(d)
        if d.tag == "Trivial":
            continue
        if d.tag == "FreeProduct":
            for j, f in enumerate(d.factors):
                for g in _default_gens(f):
                    rename[(v, f"f{j}_{g}")] = f"f{i}_{g}"
                i += 1
        else:
            for g in gens:
                rename[(v, g)] = f"f{i}_{g}"
            i += 1
    # off-tree stable letters become Z factors; no injections refer to them
    return recognized, rename


def collapse(gog: GraphOfGroups, Y: Iterable[VertexId]) -> GraphOfGroups:
    """Contract the connected vertex set Y to a single vertex.

    The new vertex reuses the least id of Y and carries the fundamental
    group of the restriction to Y; outgoing injections are rewritten
    into the new group's generators.
    """
    Yset = frozenset(Y)
    sub_graph = induced_subgraph(gog.graph, Yset)
    if not sub_graph.is_connected():
        raise NotConnected(f"collapse set not connected: {sorted(Yset, key=id_key)!r}")
    if Yset == gog.graph.vertices and len(Yset) == 1:
        return gog
    sub = GraphOfGroups(
        sub_graph,
        {v: gog.vertex_group[v] for v in Yset},
        {e: gog.edge_group[e] for e in sub_graph.edges},
        {e: gog.injection.get(e, ()) for e in sub_graph.edges},
    )
    y = min(Yset, key=id_key)
    new_desc, rename = _collapsed_group(sub)

    g = gog.graph
    keep_edges = frozenset(e for e in g.edges if e not in sub_graph.edges)
    new_vertices = (g.vertices - Yset) | {y}
    source, target, reverse = {}, {}, {}
    edge_group: Dict[EdgeId, GroupDescriptor] = {}
    injection: Dict[EdgeId, Tuple[Word, ...]] = {}
    for e in keep_edges:
        s = y if g.source[e] in Yset else g.source[e]
        t = y if g.target[e] in Yset else g.target[e]
        source[e], target[e], reverse[e] = s, t, g.reverse[e]
        edge_group[e] = gog.edge_group[e]
        inj = gog.injection.get(e, ())
        if g.target[e] in Yset and inj:
            old_v = g.target[e]
            inj = tuple(
                tuple((rename[(old_v, name)], s_) for name, s_ in w) for w in inj
            )
        injection[e] = inj
    new_graph = Graph(frozenset(new_vertices), keep_edges, source, target, reverse)
    vertex_group = {v: gog.vertex_group[v] for v in new_vertices if v != y}
    vertex_group[y] = new_desc
    return GraphOfGroups(new_graph, vertex_group, edge_group, injection)


def collapse_many(
    gog: GraphOfGroups, sets: Sequence[Iterable[VertexId]]
) -> GraphOfGroups:
    fsets = [frozenset(s) for s in sets]
    seen: Set[VertexId] = set()
    for s in fsets:
        if seen & s:
            raise OverlappingSets(f"overlap at {sorted(seen & s, key=id_key)!r}")
        seen |= s
    out = gog
    for s in fsets:
        out = collapse(out, s)
    return out


# ---------------------------------------------------------------------------
# Bass-Serre space (trivial edge groups)


class TrivialEdgeSpace:
    """Lazy Bass-Serre space of a graph of groups with trivial edge groups.

    Vertices are pairs (g, v) of a normal-form word and a vertex of the
    underlying graph; adjacency, exact distances, projections to the
    tree of cosets and a fixed choice of geodesics are all computed
    on demand.
    """

    def __init__(self, gog: GraphOfGroups):
        for e in gog.graph.edges:
            if gog.edge_group[e].tag != "Trivial":
                raise WordProblemUnavailable(
                    "ball expansion needs trivial edge groups"
                )
        self.gog = gog
        g = gog.graph
        self.base_vertex = gog.base_vertex()
        self.st = spanning_tree(g) if g.edges else frozenset()
        self.stable = _stable_letters(gog, self.st) if g.edges else {}

        parts: List[NormalForm] = []
        self.letter_vertex: Dict[str, VertexId] = {}
        self.vertex_engine: Dict[VertexId, NormalForm] = {}
        for v in g.sorted_vertices():
            eng = normal_form_engine(gog.vertex_group[v], gog.vertex_prefix(v))
            self.vertex_engine[v] = eng
            parts.append(eng)
            for name, _ in eng.letters:
                self.letter_vertex[name] = v
        self.letter_move: Dict[Letter, Tuple[VertexId, VertexId]] = {}
        for e, _ in g.edge_pairs():
            t = self.stable.get(e)
            if t is None:
                continue
            eng = _IntLetter(t)
            parts.append(eng)
            self.letter_move[(t, 1)] = (g.source[e], g.target[e])
            self.letter_move[(t, -1)] = (g.target[e], g.source[e])
        self.engine = _FreeProductNF(parts) if len(parts) > 1 else parts[0]
        self.basepoint = (W.EMPTY, self.base_vertex)

        # spanning-tree distances and paths on the underlying graph
        self._st_next: Dict[Tuple[VertexId, VertexId], Tuple[EdgeId, VertexId]] = {}
        self._st_dist: Dict[Tuple[VertexId, VertexId], int] = {}
        for a in g.sorted_vertices():
            dist = {a: 0}
            frontier = [a]
            while frontier:
                nxt = []
                for u in frontier:
                    for e in g.edges_from(u):
                        if e not in self.st and g.edges:
                            continue
                        w_ = g.target[e]
                        if w_ not in dist:
                            dist[w_] = dist[u] + 1
                            nxt.append(w_)
                frontier = nxt
            for b, d_ in dist.items():
                self._st_dist[(a, b)] = d_
        for a in g.sorted_vertices():
            for b in g.sorted_vertices():
                if a == b:
                    continue
                # first step of the tree path a -> b
                for e in g.edges_from(a):
                    if g.edges and e not in self.st:
                        continue
                    if self._st_dist[(g.target[e], b)] == self._st_dist[(a, b)] - 1:
                        self._st_next[(a, b)] = (e, g.target[e])
                        break

    # -- words ----------------------------------------------------------

    def normal(self, w: Sequence[Letter]) -> Word:
        return self.engine.normal(w)

    def _syllables(self, w: Word):
        """Split a normal-form word into located syllables.

        Yields (letters, start_vertex, end_vertex) where vertex-group
        syllables start and end at their vertex and each stable letter
        is its own syllable moving along its edge.
        """
        i = 0
        while i < len(w):
            name, exp = w[i]
            if name in self.letter_vertex:
                v = self.letter_vertex[name]
                j = i
                while j < len(w) and w[j][0] in self.letter_vertex and self.letter_vertex[w[j][0]] == v:
                    j += 1
                yield w[i:j], v, v
                i = j
            else:
                s, t = self.letter_move[(name, exp)]
                yield (w[i],), s, t
                i += 1

    # -- metric ---------------------------------------------------------

    def dist(self, x: Tuple[Word, VertexId], y: Tuple[Word, VertexId]) -> int:
        (g1, u), (g2, v) = x, y
        w = self.normal(W.concat(W.inverse(g1), g2))
        total = 0
        cur = u
        for syl, s, t in self._syllables(w):
            total += self._st_dist[(cur, s)] + len(syl)
            cur = t
        total += self._st_dist[(cur, v)]
        return total

    def depth(self, x: Tuple[Word, VertexId]) -> int:
        return self.dist(self.basepoint, x)

    def _st_path(self, a: VertexId, b: VertexId) -> List[Tuple[EdgeId, VertexId]]:
        out = []
        while a != b:
            e, a = self._st_next[(a, b)]
            out.append((e, a))
        return out

    def geodesic(self, x: Tuple[Word, VertexId], y: Tuple[Word, VertexId]):
        """The chosen geodesic from x to y as a vertex list.

        Follows normal-form syllables, crossing spanning-tree edges
        between them; this choice is fixed once and reused everywhere.
        """
        (g1, u), (g2, v) = x, y
        w = self.normal(W.concat(W.inverse(g1), g2))
        path = [x]
        cur_g, cur_v = g1, u
        for syl, s, t in self._syllables(w):
            for _, nv in self._st_path(cur_v, s):
                cur_v = nv
                path.append((cur_g, cur_v))
            for l in syl:
                if l[0] in self.letter_vertex:
                    cur_g = self.normal(cur_g + (l,))
                    path.append((cur_g, cur_v))
                else:
                    cur_g = self.normal(cur_g + (l,))
                    cur_v = self.letter_move[l][1]
                    path.append((cur_g, cur_v))
        for _, nv in self._st_path(cur_v, v):
            cur_v = nv
            path.append((cur_g, cur_v))
        return path

    # -- adjacency -------------------------------------------------------

    def neighbors(self, x: Tuple[Word, VertexId]):
        g_, v = x
        out: List[Tuple[str, Tuple[Word, VertexId]]] = []
        for l in self.vertex_engine[v].letters:
            label = l[0] if l[1] == 1 else f"{l[0]}^-1"
            out.append((label, (self.normal(g_ + (l,)), v)))
        for e in self.gog.graph.edges_from(v):
            t = self.stable.get(e)
            if t is None:
                name = e[0] if isinstance(e, tuple) else e
                out.append((f"edge.{name}", (g_, self.gog.graph.target[e])))
            else:
                l = (t, 1) if self.letter_move[(t, 1)][0] == v else (t, -1)
                out.append((t, (self.normal(g_ + (l,)), self.gog.graph.target[e])))
        return out

    # -- tree of cosets ---------------------------------------------------

    def project(self, x: Tuple[Word, VertexId]) -> Tuple[Word, VertexId]:
        """Coset label of x: strip the trailing syllable in x's own factor."""
        g_, v = x
        mine = {l[0] for l in self.vertex_engine[v].letters}
        i = len(g_)
        while i > 0 and g_[i - 1][0] in mine:
            i -= 1
        return (g_[:i], v)

    def tree_path(self, label: Tuple[Word, VertexId]) -> List[Tuple[Word, VertexId]]:
        """Tree geodesic from the root coset to the given coset label."""
        g_, v = label
        path = [self.project((W.EMPTY, self.base_vertex))]
        prefix: Word = W.EMPTY
        cur_v = self.base_vertex
        for syl, s, t in self._syllables(g_):
            for _, nv in self._st_path(cur_v, s):
                cur_v = nv
                _append_label(path, self.project((prefix, cur_v)))
            prefix = self.normal(prefix + tuple(syl))
            cur_v = t
            _append_label(path, self.project((prefix, cur_v)))
        for _, nv in self._st_path(cur_v, v):
            cur_v = nv
            _append_label(path, self.project((prefix, cur_v)))
        if path[-1] != label:
            _append_label(path, label)
        return path

    def tree_dist(self, a, b) -> int:
        pa, pb = self.tree_path(a), self.tree_path(b)
        k = 0
        while k < min(len(pa), len(pb)) and pa[k] == pb[k]:
            k += 1
        return (len(pa) - k) + (len(pb) - k)

    def in_subtree(self, c, edge: Tuple) -> bool:
        """Whether coset c lies behind the outgoing tree edge (parent, child)."""
        parent, child = edge
        path = self.tree_path(c)
        for a, b in zip(path, path[1:]):
            if (a, b) == (parent, child):
                return True
        return False

    def star_point(self, label: Tuple[Word, VertexId]) -> Tuple[Word, VertexId]:
        """Closest space vertex of the coset to the basepoint.

        The coset representative itself realizes the minimum: appending a
        nontrivial factor element only lengthens the word and never
        shortens the connecting walk.
        """
        return label


class _IntLetter(NormalForm):
    """Z normal form over a single named letter (stable letters)."""

    def __init__(self, name: str):
        self.name = name
        self.letters = ((name, 1), (name, -1))

    def normal(self, w):
        k = sum(e for _, e in w)
        return ((self.name, 1 if k > 0 else -1),) * abs(k)


def _append_label(path, label):
    if path[-1] != label:
        path.append(label)


# ---------------------------------------------------------------------------
# materialized balls


@dataclass
class SpaceBall:
    """Finite radius ball of the Bass-Serre space around (1, base)."""

    graph: Graph
    underlying_element: Mapping[Tuple, Word]
    gamma_vertex: Mapping[Tuple, VertexId]
    tree_label: Mapping[Tuple, Tuple]
    basepoint: Tuple
    radius: int
    ball: Ball = None
    space: TrivialEdgeSpace = None

    def dist(self, x, y) -> int:
        return self.ball.dist(x, y)

    def fiber(self, label) -> List[Tuple]:
        return [v for v in self.ball.vertices() if self.tree_label[v] == label]


@dataclass
class TreeBall:
    """Projection of a SpaceBall to the tree of cosets."""

    graph: Graph
    root: Tuple
    outgoing: Mapping[EdgeId, bool]
    star_point: Mapping[object, Tuple]
    depth: int

    def dist(self, a, b) -> int:
        if a == b:
            return 0
        seen = {a: 0}
        frontier = [a]
        while frontier:
            nxt = []
            for u in frontier:
                for w_ in self.graph.neighbors(u):
                    if w_ not in seen:
                        seen[w_] = seen[u] + 1
                        if w_ == b:
                            return seen[w_]
                        nxt.append(w_)
            frontier = nxt
        raise NotInBall(f"{b!r} unreachable from {a!r}")

    def path_from_root(self, v) -> List:
        if v == self.root:
            return [self.root]
        prev = {self.root: None}
        frontier = [self.root]
        while frontier and v not in prev:
            nxt = []
            for u in frontier:
                for w_ in self.graph.neighbors(u):
                    if w_ not in prev:
                        prev[w_] = u
                        nxt.append(w_)
            frontier = nxt
        if v not in prev:
            raise NotInBall(repr(v))
        path = [v]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        return list(reversed(path))

    def in_subtree(self, v, w) -> bool:
        """Whether v lies in the subtree behind w (w on the root path of v)."""
        return w in self.path_from_root(v)


def bass_serre_ball(
    gog: GraphOfGroups, radius: int, max_cells: Optional[int] = None
) -> SpaceBall:
    """BFS ball of the Bass-Serre space; deterministic frontier order."""
    space = TrivialEdgeSpace(gog)
    cap = max_cells if max_cells is not None else max_cells_cap()
    base = space.basepoint
    depth: Dict[Tuple, int] = {base: 0}
    order = [base]
    frontier = [base]
    for r in range(1, radius + 1):
        nxt = []
        for x in frontier:
            for _, y in space.neighbors(x):
                if y not in depth:
                    depth[y] = r
                    order.append(y)
                    nxt.append(y)
                    if len(depth) > cap:
                        raise BallTooLarge(f"space ball exceeds {cap} vertices")
        frontier = nxt

    adj: Dict[Tuple, List[Tuple[str, Tuple]]] = {}
    pairs = []
    seen_pairs = set()
    for x in order:
        nbrs = []
        for label, y in space.neighbors(x):
            if y in depth:
                nbrs.append((label, y))
                key = (x, y) if id_key(x) <= id_key(y) else (y, x)
                if key not in seen_pairs:
                    seen_pairs.add(key)
                    pairs.append(((key[0], label if key == (x, y) else label, key[1]), key[0], key[1]))
        adj[x] = nbrs
    graph = Graph.from_edge_pairs(order, pairs)
    ball = Ball(
        basepoint=base,
        radius=radius,
        depth=depth,
        adj=adj,
        word={x: x[0] for x in depth},
        sort_key={x: (depth[x], space.engine.key(x[0]), id_key(x[1])) for x in depth},
    )
    return SpaceBall(
        graph=graph,
        underlying_element={x: x[0] for x in depth},
        gamma_vertex={x: x[1] for x in depth},
        tree_label={x: space.project(x) for x in depth},
        basepoint=base,
        radius=radius,
        ball=ball,
        space=space,
    )


def project_tree(ball: SpaceBall) -> TreeBall:
    """Quotient of a SpaceBall by its coset labels, verified to be a tree."""
    labels = sorted(set(ball.tree_label.values()), key=id_key)
    root = ball.tree_label[ball.basepoint]
    pairs = []
    seen = set()
    edge_fibers: Dict[Tuple, List[Tuple]] = {}
    for x in ball.ball.vertices():
        for _, y in ball.ball.adj[x]:
            lx, ly = ball.tree_label[x], ball.tree_label[y]
            if lx == ly:
                continue
            key = (lx, ly) if id_key(lx) <= id_key(ly) else (ly, lx)
            if key not in seen:
                seen.add(key)
                pairs.append((key, key[0], key[1]))
            edge_fibers.setdefault((lx, ly), []).append(y)
    graph = Graph.from_edge_pairs(labels, pairs)
    if not graph.is_tree():
        raise MalformedBall("coset quotient is not a tree")

    # distances from the root
    dist = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for w_ in graph.neighbors(u):
                if w_ not in dist:
                    dist[w_] = dist[u] + 1
                    nxt.append(w_)
        frontier = nxt

    outgoing: Dict[EdgeId, bool] = {}
    for e in graph.edges:
        outgoing[e] = dist[graph.source[e]] < dist[graph.target[e]]

    def closest(cands: Iterable[Tuple]) -> Tuple:
        return min(cands, key=lambda x: ball.ball.sort_key[x])

    star: Dict[object, Tuple] = {}
    for label in labels:
        star[label] = closest(
            x for x in ball.ball.vertices() if ball.tree_label[x] == label
        )
    for e in graph.edges:
        if outgoing[e]:
            plus = edge_fibers.get((graph.source[e], graph.target[e]), [])
            if plus:
                star[e] = closest(plus)
    star[root] = ball.basepoint
    return TreeBall(graph=graph, root=root, outgoing=outgoing, star_point=star, depth=ball.radius)
