"""Symbolic group descriptors, the curated property table and Cayley balls.

Two layers live here.  The symbolic layer assigns each descriptor tag the
properties needed by the classifiers (hyperbolicity, wideness, boundary
type of a single factor), loaded from a versioned data file so tests can
pin exact values.  The concrete layer computes normal forms and finite
Cayley balls for groups with a decidable word problem: the built-in
families (trivial, finite cyclic, free abelian, free) together with their
free and direct products, and finitely presented groups equipped with a
shortlex-confluent rewriting system.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from . import words as W
from .errors import BallTooLarge, WordProblemUnavailable
from .rewriting import RewritingSystem, validate
from .words import Letter, Word

DEFAULT_MAX_CELLS = 2_000_000


def max_cells_cap() -> int:
    env = os.environ.get("MORSE_ATLAS_MAX_CELLS")
    return int(env) if env else DEFAULT_MAX_CELLS


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class Presentation:
    """Finite presentation with an optional confluent rewriting system."""

    generators: Tuple[str, ...]
    relators: Tuple[Word, ...]
    rules: Tuple[Tuple[Word, Word], ...] = ()

    def letters(self) -> Tuple[Letter, ...]:
        out: List[Letter] = []
        for g in self.generators:
            out.append((g, 1))
            out.append((g, -1))
        return tuple(out)


SYMBOLIC_3MFLD_TAGS = frozenset(
    {
        "ClosedHyperbolic3MfldGroup",
        "FiniteVolumeHyperbolic3MfldGroup",
        "SeifertFiberedGroup",
        "SolGroup",
        "NilGroup",
        "H2xRGroup",
        "PSL2RtildeGroup",
        "S2xRGroup",
    }
)

_VALID_TAGS = SYMBOLIC_3MFLD_TAGS | {
    "Trivial",
    "FiniteCyclic",
    "Z",
    "ZPow",
    "Free",
    "Presentation",
    "FreeProduct",
    "DirectProduct",
}


@dataclass(frozen=True)
class GroupDescriptor:
    tag: str
    n: Optional[int] = None  # FiniteCyclic order / ZPow rank / Free rank
    presentation: Optional[Presentation] = None
    factors: Tuple["GroupDescriptor", ...] = ()
    name: str = ""  # optional display name

    def __post_init__(self):
        if self.tag not in _VALID_TAGS:
            raise ValueError(f"unknown group tag {self.tag!r}")
        if self.tag == "ZPow" and (self.n is None or self.n < 2):
            raise ValueError("ZPow needs rank >= 2")
        if self.tag == "Free" and (self.n is None or self.n < 2):
            raise ValueError("Free needs rank >= 2")
        if self.tag == "FiniteCyclic" and (self.n is None or self.n < 1):
            raise ValueError("FiniteCyclic needs order >= 1")
        if self.tag == "Presentation" and self.presentation is None:
            raise ValueError("Presentation tag needs presentation data")
        if self.tag in ("FreeProduct", "DirectProduct") and len(self.factors) < 2:
            raise ValueError(f"{self.tag} needs at least two factors")
        if self.tag == "Presentation" and self.presentation.rules:
            validate(
                RewritingSystem(self.presentation.letters(), self.presentation.rules)
            )

    def describe(self) -> str:
        if self.name:
            return self.name
        if self.tag in ("FiniteCyclic", "ZPow", "Free"):
            return f"{self.tag}({self.n})"
        if self.tag in ("FreeProduct", "DirectProduct"):
            sep = " * " if self.tag == "FreeProduct" else " x "
            return "(" + sep.join(f.describe() for f in self.factors) + ")"
        return self.tag


def trivial() -> GroupDescriptor:
    return GroupDescriptor("Trivial")


def finite_cyclic(n: int) -> GroupDescriptor:
    return GroupDescriptor("FiniteCyclic", n=n)


def Z() -> GroupDescriptor:
    return GroupDescriptor("Z")


def z_pow(n: int) -> GroupDescriptor:
    return GroupDescriptor("ZPow", n=n)


def free(rank: int) -> GroupDescriptor:
    return GroupDescriptor("Free", n=rank)


def free_product(*factors: GroupDescriptor) -> GroupDescriptor:
    return GroupDescriptor("FreeProduct", factors=tuple(factors))


def direct_product(*factors: GroupDescriptor) -> GroupDescriptor:
    return GroupDescriptor("DirectProduct", factors=tuple(factors))


def from_presentation(p: Presentation, name: str = "") -> GroupDescriptor:
    return GroupDescriptor("Presentation", presentation=p, name=name)


# ---------------------------------------------------------------------------
# property table


@dataclass(frozen=True)
class GroupProperties:
    is_infinite: Optional[bool]
    is_virtually_cyclic: Optional[bool]
    is_hyperbolic: Optional[bool]
    is_wide: Optional[bool]
    has_empty_morse_boundary: Optional[bool]
    morse_boundary: Optional[str]  # factor boundary name; None = unknown
    relative_peripheral_kinds: Tuple[str, ...] = ()
    estimated: FrozenSet[str] = frozenset()  # fields whose value is an estimate

    def __post_init__(self):
        if self.morse_boundary is not None:
            expected = self.morse_boundary == "Empty"
            if self.has_empty_morse_boundary not in (None, expected):
                raise ValueError("has_empty_morse_boundary inconsistent with morse_boundary")


@lru_cache(maxsize=1)
def kb_table() -> dict:
    data = resources.files("morse_atlas.data").joinpath("kb_table.json").read_text()
    return json.loads(data)


def properties_of(d: GroupDescriptor, estimate_radius: int = 6) -> GroupProperties:
    """Property lookup; presentation tags get only decidable fields."""
    table = kb_table()["tags"]
    if d.tag in table:
        row = dict(table[d.tag])
        if d.tag == "FiniteCyclic" and d.n == 1:
            row = dict(table["Trivial"])
        mb = row["morse_boundary"]
        return GroupProperties(
            is_infinite=row["is_infinite"],
            is_virtually_cyclic=row["is_virtually_cyclic"],
            is_hyperbolic=row["is_hyperbolic"],
            is_wide=row["is_wide"],
            has_empty_morse_boundary=(mb == "Empty") if mb else None,
            morse_boundary=mb,
            relative_peripheral_kinds=tuple(row.get("relative_peripheral_kinds", ())),
        )
    if d.tag == "FreeProduct":
        props = [properties_of(f) for f in d.factors]
        nontrivial = [p for p in props if p.is_infinite is not False or p.is_virtually_cyclic is False]
        infinite = any(p.is_infinite for p in props) or len(
            [p for p in props if p.is_infinite is not False]
        ) >= 2 or len(props) >= 2
        hyperbolic = all(p.is_hyperbolic for p in props) if all(
            p.is_hyperbolic is not None for p in props
        ) else None
        return GroupProperties(
            is_infinite=infinite,
            is_virtually_cyclic=False if len(nontrivial) >= 2 else None,
            is_hyperbolic=hyperbolic,
            is_wide=False,
            has_empty_morse_boundary=False if len(nontrivial) >= 2 else None,
            morse_boundary=None,
        )
    if d.tag == "DirectProduct":
        props = [properties_of(f) for f in d.factors]
        infinites = [p for p in props if p.is_infinite]
        if len(infinites) >= 2:
            return GroupProperties(
                is_infinite=True,
                is_virtually_cyclic=False,
                is_hyperbolic=False,
                is_wide=True,
                has_empty_morse_boundary=True,
                morse_boundary="Empty",
            )
        if len(infinites) == 1 and all(p.is_infinite is not None for p in props):
            inner = infinites[0]
            return inner
        return GroupProperties(None, None, None, None, None, None)
    # raw presentation: only decidable/estimated fields
    est: Optional[bool] = None
    estimated: FrozenSet[str] = frozenset()
    if has_normal_form(d):
        counts = [len(ball_elements(d, r)) for r in (estimate_radius - 1, estimate_radius)]
        est = counts[1] > counts[0]
        estimated = frozenset({"is_infinite"})
    return GroupProperties(
        is_infinite=est,
        is_virtually_cyclic=None,
        is_hyperbolic=None,
        is_wide=None,
        has_empty_morse_boundary=None,
        morse_boundary=None,
        estimated=estimated,
    )


# ---------------------------------------------------------------------------
# normal forms


class NormalForm:
    """Canonical-word engine for one group."""

    letters: Tuple[Letter, ...]

    def normal(self, w: Sequence[Letter]) -> Word:
        raise NotImplementedError

    def mult(self, w: Word, l: Letter) -> Word:
        return self.normal(tuple(w) + (l,))

    def key(self, w: Sequence[Letter]):
        return W.shortlex_key(w, self.letters)


class _TrivialNF(NormalForm):
    letters = ()

    def normal(self, w):
        return W.EMPTY


class _FreeNF(NormalForm):
    def __init__(self, gens: Sequence[str]):
        self.gens = tuple(gens)
        self.letters = tuple(l for g in gens for l in ((g, 1), (g, -1)))

    def normal(self, w):
        return W.free_reduce(l for l in w)


class _CyclicNF(NormalForm):
    def __init__(self, gen: str, order: int):
        self.gen, self.order = gen, order
        self.letters = ((gen, 1), (gen, -1)) if order > 1 else ()

    def normal(self, w):
        k = sum(e for _, e in w) % self.order
        if k == 0:
            return W.EMPTY
        if k <= self.order // 2:
            return ((self.gen, 1),) * k
        return ((self.gen, -1),) * (self.order - k)


class _FreeAbelianNF(NormalForm):
    def __init__(self, gens: Sequence[str]):
        self.gens = tuple(gens)
        self.letters = tuple(l for g in gens for l in ((g, 1), (g, -1)))

    def normal(self, w):
        exps = {g: 0 for g in self.gens}
        for g, e in w:
            exps[g] += e
        out: List[Letter] = []
        for g in self.gens:
            k = exps[g]
            out.extend([(g, 1 if k > 0 else -1)] * abs(k))
        return tuple(out)


class _IntNF(NormalForm):
    def __init__(self, gen: str):
        self.gen = gen
        self.letters = ((gen, 1), (gen, -1))

    def normal(self, w):
        k = sum(e for _, e in w)
        return ((self.gen, 1 if k > 0 else -1),) * abs(k)


class _RewriteNF(NormalForm):
    def __init__(self, p: Presentation):
        if not p.rules:
            raise WordProblemUnavailable(
                "presentation carries no confluent rewriting system"
            )
        self.system = RewritingSystem(p.letters(), p.rules)
        self.letters = p.letters()

    def normal(self, w):
        return self.system.normal_form(w)


class _FreeProductNF(NormalForm):
    """Syllable normal form over factor engines with disjoint generators."""

    def __init__(self, parts: Sequence[NormalForm]):
        self.parts = tuple(parts)
        self.owner: Dict[str, NormalForm] = {}
        letters: List[Letter] = []
        for p in parts:
            for l in p.letters:
                if l[0] not in self.owner:
                    self.owner[l[0]] = p
                letters.append(l)
        self.letters = tuple(dict.fromkeys(letters))

    def normal(self, w):
        stack: List[Tuple[NormalForm, Word]] = []
        for l in w:
            part = self.owner[l[0]]
            if stack and stack[-1][0] is part:
                merged = part.normal(stack[-1][1] + (l,))
                stack.pop()
                if merged:
                    stack.append((part, merged))
            else:
                syl = part.normal((l,))
                if syl:
                    stack.append((part, syl))
        out: List[Letter] = []
        for _, syl in stack:
            out.extend(syl)
        return tuple(out)


class _DirectProductNF(NormalForm):
    def __init__(self, parts: Sequence[NormalForm]):
        self.parts = tuple(parts)
        self.owner: Dict[str, int] = {}
        letters: List[Letter] = []
        for i, p in enumerate(parts):
            for l in p.letters:
                self.owner.setdefault(l[0], i)
                letters.append(l)
        self.letters = tuple(dict.fromkeys(letters))

    def normal(self, w):
        split: List[List[Letter]] = [[] for _ in self.parts]
        for l in w:
            split[self.owner[l[0]]].append(l)
        out: List[Letter] = []
        for part, sub in zip(self.parts, split):
            out.extend(part.normal(tuple(sub)))
        return tuple(out)


def _default_gens(d: GroupDescriptor, prefix: str = "") -> List[str]:
    if d.tag == "Z":
        return [prefix + "a"]
    if d.tag == "FiniteCyclic":
        return [prefix + "a"]
    if d.tag == "ZPow":
        return [f"{prefix}a{i + 1}" for i in range(d.n)]
    if d.tag == "Free":
        return [f"{prefix}x{i + 1}" for i in range(d.n)]
    if d.tag == "Presentation":
        return list(d.presentation.generators)
    return []


def normal_form_engine(d: GroupDescriptor, prefix: str = "") -> NormalForm:
    """Engine for a descriptor; generators get ``prefix`` prepended.

    Raises WordProblemUnavailable for symbolic tags and for raw
    presentations without a rewriting system.
    """
    if d.tag == "Trivial":
        return _TrivialNF()
    if d.tag == "FiniteCyclic":
        if d.n == 1:
            return _TrivialNF()
        return _CyclicNF(prefix + "a", d.n)
    if d.tag == "Z":
        return _IntNF(prefix + "a")
    if d.tag == "ZPow":
        return _FreeAbelianNF(_default_gens(d, prefix))
    if d.tag == "Free":
        return _FreeNF(_default_gens(d, prefix))
    if d.tag == "Presentation":
        if prefix:
            raise WordProblemUnavailable("cannot prefix a raw presentation")
        return _RewriteNF(d.presentation)
    if d.tag == "FreeProduct":
        return _FreeProductNF(
            [normal_form_engine(f, f"{prefix}f{i}_") for i, f in enumerate(d.factors)]
        )
    if d.tag == "DirectProduct":
        return _DirectProductNF(
            [normal_form_engine(f, f"{prefix}f{i}_") for i, f in enumerate(d.factors)]
        )
    raise WordProblemUnavailable(f"no normal form for symbolic tag {d.tag}")


def has_normal_form(d: GroupDescriptor) -> bool:
    try:
        normal_form_engine(d)
        return True
    except WordProblemUnavailable:
        return False


def presentation_of(d: GroupDescriptor, prefix: str = "") -> Presentation:
    """Finite presentation with generators named as in the ball engine."""
    gens = _default_gens(d, prefix)
    if d.tag in ("Trivial",):
        return Presentation((), ())
    if d.tag == "FiniteCyclic":
        if d.n == 1:
            return Presentation((), ())
        return Presentation(tuple(gens), (((gens[0], 1),) * d.n,))
    if d.tag in ("Z", "Free"):
        return Presentation(tuple(gens), ())
    if d.tag == "ZPow":
        rels = []
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                a, b = gens[i], gens[j]
                rels.append(((a, 1), (b, 1), (a, -1), (b, -1)))
        return Presentation(tuple(gens), tuple(rels))
    if d.tag == "Presentation":
        if prefix:
            p = d.presentation
            ren = {g: prefix + g for g in p.generators}
            rename = lambda w: tuple((ren[g], e) for g, e in w)
            return Presentation(
                tuple(ren[g] for g in p.generators),
                tuple(rename(r) for r in p.relators),
                tuple((rename(l), rename(r)) for l, r in p.rules),
            )
        return d.presentation
    if d.tag in ("FreeProduct", "DirectProduct"):
        gens_all: List[str] = []
        rels_all: List[Word] = []
        subs = [
            presentation_of(f, f"{prefix}f{i}_") for i, f in enumerate(d.factors)
        ]
        for sub in subs:
            gens_all.extend(sub.generators)
            rels_all.extend(sub.relators)
        if d.tag == "DirectProduct":
            for i in range(len(subs)):
                for j in range(i + 1, len(subs)):
                    for a in subs[i].generators:
                        for b in subs[j].generators:
                            rels_all.append(((a, 1), (b, 1), (a, -1), (b, -1)))
        return Presentation(tuple(gens_all), tuple(rels_all))
    raise WordProblemUnavailable(f"no presentation for symbolic tag {d.tag}")


# ---------------------------------------------------------------------------
# balls


@dataclass
class Ball:
    """Finite BFS ball with the ball's intrinsic metric.

    ``adj`` maps each vertex key to a deterministically ordered list of
    ``(edge_label, neighbor_key)`` pairs restricted to the ball.
    """

    basepoint: object
    radius: int
    depth: Dict[object, int]
    adj: Dict[object, List[Tuple[str, object]]]
    word: Dict[object, Word]
    sort_key: Dict[object, tuple] = field(default_factory=dict)

    def __post_init__(self):
        if not self.sort_key:
            self.sort_key = {
                k: (self.depth[k], tuple(repr(l) for l in self.word[k]), repr(k))
                for k in self.depth
            }
        self._dist_cache: Dict[object, Dict[object, int]] = {}

    def __contains__(self, key):
        return key in self.depth

    def vertices(self) -> List[object]:
        return sorted(self.depth, key=self.sort_key.__getitem__)

    def dist_from(self, x) -> Dict[object, int]:
        """Single-source distances inside the ball (intrinsic metric)."""
        if x not in self.depth:
            raise KeyError(x)
        cached = self._dist_cache.get(x)
        if cached is not None:
            return cached
        dist = {x: 0}
        frontier = [x]
        while frontier:
            nxt = []
            for v in frontier:
                for _, w in self.adj[v]:
                    if w not in dist:
                        dist[w] = dist[v] + 1
                        nxt.append(w)
            frontier = nxt
        self._dist_cache[x] = dist
        return dist

    def dist(self, x, y) -> int:
        return self.dist_from(x)[y]

    def on_boundary(self, key) -> bool:
        return self.depth[key] >= self.radius


def cayley_ball(
    d: GroupDescriptor, radius: int, max_cells: Optional[int] = None
) -> Ball:
    """Ball of normal-form words of length <= radius, basepoint the identity."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    engine = normal_form_engine(d)
    cap = max_cells if max_cells is not None else max_cells_cap()
    return _bfs_ball(engine, radius, cap)


def _bfs_ball(engine: NormalForm, radius: int, cap: int) -> Ball:
    depth: Dict[Word, int] = {W.EMPTY: 0}
    order = [W.EMPTY]
    frontier = [W.EMPTY]
    for r in range(1, radius + 1):
        nxt: List[Word] = []
        for w in frontier:
            for l in engine.letters:
                nb = engine.mult(w, l)
                if nb not in depth:
                    depth[nb] = r
                    order.append(nb)
                    nxt.append(nb)
                    if len(depth) > cap:
                        raise BallTooLarge(f"cayley ball exceeds {cap} vertices")
        frontier = nxt
    adj: Dict[Word, List[Tuple[str, Word]]] = {}
    for w in order:
        nbrs = []
        for l in engine.letters:
            nb = engine.mult(w, l)
            if nb in depth:
                label = l[0] if l[1] == 1 else f"{l[0]}^-1"
                nbrs.append((label, nb))
        adj[w] = nbrs
    sort_key = {w: (depth[w], engine.key(w)) for w in depth}
    return Ball(
        basepoint=W.EMPTY,
        radius=radius,
        depth=depth,
        adj=adj,
        word={w: w for w in depth},
        sort_key=sort_key,
    )


def ball_elements(d: GroupDescriptor, radius: int) -> List[Word]:
    engine = normal_form_engine(d)
    ball = _bfs_ball(engine, radius, max_cells_cap())
    return ball.vertices()
