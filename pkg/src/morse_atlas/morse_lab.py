"""Desk-scale Morse geometry inside finite balls.

Everything here is a verdict at a scale: quantifiers over quasi-geodesics
are bounded by the explicit length cap lambda*d + eps forced by the
defining inequality, and every reported value carries the cap and ball
radius it was computed at.  Exact enumeration is used where caps are
small; a sound certificate search (which exhibits an actual admissible
quasi-geodesic) provides lower bounds where full enumeration is out of
reach.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import (
    BadBasepoint,
    NotGeodesic,
    NotInBall,
    NoSplitAtScale,
    ScaleMismatch,
)
from .group_kb import Ball
from .graph_of_groups import SpaceBall, TrivialEdgeSpace
from .words import Letter, Word

QC = Tuple[float, float]  # quasi-geodesic constant (lambda, eps)


# ---------------------------------------------------------------------------
# Morse gauges


@dataclass(frozen=True)
class MorseGauge:
    """Monotone map (lambda, eps) -> bound, as a closed-form callable."""

    fn: Callable[[float, float], float]
    name: str
    monotone: bool = True

    def __call__(self, lam: float, eps: Optional[float] = None) -> float:
        if eps is None:
            eps = lam
        return self.fn(lam, eps)


def linear_gauge(a: float, b: float, c: float) -> MorseGauge:
    """The gauge a*lambda + b*eps + c."""
    if a < 0 or b < 0 or c < 0:
        raise ValueError("gauge coefficients must be nonnegative")
    return MorseGauge(lambda l, e: a * l + b * e + c, f"{a}*l+{b}*e+{c}")


def gauge_from_string(text: str) -> MorseGauge:
    """Parse gauges like "l+e", "2*l+3*e+1" or "l"."""
    a = b = c = 0.0
    for term in text.replace("-", "+-").split("+"):
        term = term.strip()
        if not term:
            continue
        if term.endswith("l") or term.endswith("e"):
            coeff_s = term[:-1].rstrip("*").strip()
            coeff = float(coeff_s) if coeff_s else 1.0
            if term.endswith("l"):
                a += coeff
            else:
                b += coeff
        else:
            c += float(term)
    return linear_gauge(a, b, c)


def delta_M(M: MorseGauge) -> float:
    """max{4*M(1, 2*M(5,0)) + 2*M(5,0), 8*M(3,0)}."""
    m50 = M(5, 0)
    return max(4 * M(1, 2 * m50) + 2 * m50, 8 * M(3, 0))


DEFAULT_GRID: Tuple[QC, ...] = ((1, 0), (2, 0), (3, 0), (3, 3), (5, 0))


# ---------------------------------------------------------------------------
# path enumeration

Path = Tuple  # tuple of ball vertex keys


def _require(ball: Ball, *xs) -> None:
    for x in xs:
        if x not in ball.depth:
            raise NotInBall(repr(x))


def geodesics(ball: Ball, x, y) -> List[Path]:
    """All shortest paths from x to y in the ball's intrinsic metric."""
    _require(ball, x, y)
    dist_y = ball.dist_from(y)
    if x not in dist_y:
        raise NotInBall(f"{y!r} unreachable from {x!r} inside the ball")
    out: List[Path] = []

    def extend(path: List):
        v = path[-1]
        if v == y:
            out.append(tuple(path))
            return
        for _, w in sorted(ball.adj[v], key=lambda p: ball.sort_key[p[1]]):
            if dist_y.get(w, -1) == dist_y[v] - 1:
                path.append(w)
                extend(path)
                path.pop()

    extend([x])
    return out


def is_geodesic(ball: Ball, path: Sequence) -> bool:
    if len(path) < 1:
        return False
    for a, b in zip(path, path[1:]):
        if b not in {w for _, w in ball.adj[a]}:
            return False
    return len(path) - 1 == ball.dist(path[0], path[-1])


class _DistOracle:
    """Ball distances with cheap anchor bounds before exact BFS.

    For anchors a, |d(a,u) - d(a,v)| <= d(u,v) <= d(a,u) + d(a,v); the
    anchor tables are shared single-source BFS runs, so most subpath
    checks avoid BFS from arbitrary interior vertices.
    """

    def __init__(self, ball: Ball, anchors: Sequence):
        self.ball = ball
        self.tables = [ball.dist_from(a) for a in dict.fromkeys(anchors)]

    def bounds(self, u, v) -> Tuple[int, int]:
        lo, hi = 0, None
        for t in self.tables:
            du, dv = t.get(u), t.get(v)
            if du is None or dv is None:
                continue
            lo = max(lo, abs(du - dv))
            s = du + dv
            hi = s if hi is None else min(hi, s)
        return lo, hi if hi is not None else len(self.ball.depth)

    def exact(self, u, v) -> int:
        return self.ball.dist(u, v)

    def subpath_ok(self, path: Sequence, lam: float, eps: float, new_index: int) -> bool:
        """Check the subpath conditions for subpaths ending at path[new_index]."""
        j = new_index
        for i in range(j):
            gap = j - i
            if gap <= eps:
                continue
            lo, hi = self.bounds(path[i], path[j])
            if gap <= lam * lo + eps:
                continue
            if gap > lam * hi + eps:
                return False
            if gap > lam * self.exact(path[i], path[j]) + eps:
                return False
        return True


def _subpath_ok(ball: Ball, path: Sequence, lam: float, eps: float, new_index: int) -> bool:
    """Check the subpath conditions ending at path[new_index]."""
    return _DistOracle(ball, path[:1]).subpath_ok(path, lam, eps, new_index)


def quasi_geodesics(
    ball: Ball,
    x,
    y,
    lam: float,
    eps: float,
    length_cap: int,
    oracle: Optional[_DistOracle] = None,
) -> Iterator[Path]:
    """All paths x -> y of length <= cap whose every subpath p[i..j]
    satisfies (j - i) <= lam * d(p_i, p_j) + eps; deterministic DFS order."""
    if lam < 1 or eps < 0:
        raise ValueError("need lambda >= 1, eps >= 0")
    _require(ball, x, y)
    if oracle is None:
        oracle = _DistOracle(ball, (x, y, ball.basepoint))
    dist_y = ball.dist_from(y)

    def extend(path: List) -> Iterator[Path]:
        v = path[-1]
        if v == y and len(path) >= 1:
            yield tuple(path)
        if len(path) - 1 >= length_cap:
            return
        remaining = length_cap - (len(path) - 1)
        for _, w in sorted(ball.adj[v], key=lambda p: ball.sort_key[p[1]]):
            if dist_y.get(w, length_cap + 1) > remaining - 1:
                continue
            path.append(w)
            if oracle.subpath_ok(path, lam, eps, len(path) - 1):
                yield from extend(path)
            path.pop()

    if x == y:
        yield (x,)
        # nontrivial admissible loops at x also count (eps permitting)
    yield from (p for p in extend([x]) if len(p) > 1 or x != y)


def path_deviation(ball: Ball, path: Sequence, seg: Sequence) -> int:
    """Max over path points of the distance to the segment."""
    tables = [ball.dist_from(s) for s in seg]
    return max(min(t[v] for t in tables) for v in path)


@dataclass(frozen=True)
class ValueAtScale:
    value: float
    exact: bool
    cap: int
    radius: int
    witness: Optional[Path] = None

    def __repr__(self):
        tag = "=" if self.exact else ">="
        return f"ValueAtScale({tag}{self.value}, cap={self.cap}, r={self.radius})"


def critical_value(
    ball: Ball, seg: Sequence, C: QC, length_cap: Optional[int] = None
) -> ValueAtScale:
    """Worst deviation over enumerated C-quasi-geodesics with endpoints on seg.

    Exact within the cap; flagged inexact (a lower bound) if enumeration
    touched the ball boundary, where admissible paths may be cut off.
    """
    if not is_geodesic(ball, seg):
        raise NotGeodesic("critical_value needs a geodesic segment")
    lam, eps = C
    if length_cap is None:
        length_cap = int(lam * (len(seg) - 1) + eps)
    best = 0
    witness: Optional[Path] = None
    touched_boundary = False
    oracle = _DistOracle(ball, tuple(seg) + (ball.basepoint,))
    for i in range(len(seg)):
        for j in range(i, len(seg)):
            for p in quasi_geodesics(
                ball, seg[i], seg[j], lam, eps, length_cap, oracle=oracle
            ):
                if any(ball.on_boundary(v) for v in p):
                    touched_boundary = True
                d = path_deviation(ball, p, seg)
                if d > best:
                    best, witness = d, p
    return ValueAtScale(best, not touched_boundary, length_cap, ball.radius, witness)


# -- certificate search ------------------------------------------------------


def _routes_down(ball: Ball, table_a: Dict, p) -> List[Path]:
    """A few chosen geodesics a -> p, using only the table dist_from(a)."""
    if p not in table_a:
        return []

    def walk(pick_last: bool) -> Path:
        path = [p]
        while table_a[path[-1]] > 0:
            steps = [
                w
                for _, w in sorted(ball.adj[path[-1]], key=lambda q: ball.sort_key[q[1]])
                if table_a.get(w, -1) == table_a[path[-1]] - 1
            ]
            path.append(steps[-1] if pick_last else steps[0])
        return tuple(reversed(path))

    return sorted({walk(False), walk(True)})


def _is_admissible(
    ball: Ball, path: Sequence, lam: float, eps: float, oracle: Optional[_DistOracle] = None
) -> bool:
    if oracle is None:
        oracle = _DistOracle(ball, (path[0], path[-1], ball.basepoint))
    n = len(path)
    if eps < 2:
        # an immediate backtrack is a length-2 subpath at distance 0
        for j in range(2, n):
            if path[j] == path[j - 2]:
                return False
    for j in range(1, n):
        if not oracle.subpath_ok(path, lam, eps, j):
            return False
    return True


def deviation_at_least(
    ball: Ball, seg: Sequence, C: QC, n: int
) -> Optional[Path]:
    """Certificate search: an admissible C-quasi-geodesic with endpoints on
    seg deviating >= n from it, or None if none was found at this scale.

    Sound but not complete: candidates are peak-routed paths built from a
    small set of chosen geodesics through each candidate peak.
    """
    if n <= 0:
        return tuple(seg[:1])
    lam, eps = C
    tables = [ball.dist_from(s) for s in seg]
    oracle = _DistOracle(ball, tuple(seg) + (ball.basepoint,))

    def seg_dist(v) -> int:
        return min(t[v] for t in tables)

    # the cheapest certificates route through peaks close to the bound
    peaks = sorted(
        (v for v in ball.vertices() if seg_dist(v) >= n),
        key=lambda v: (seg_dist(v), ball.sort_key[v]),
    )
    ends = range(len(seg))
    for p in peaks:
        for i in ends:
            di = tables[i][p]
            for j in ends:
                if j < i:
                    continue
                if di + tables[j][p] > lam * (j - i) + eps:
                    continue
                for r1 in _routes_down(ball, tables[i], p):
                    for r2 in _routes_down(ball, tables[j], p):
                        cand = r1 + tuple(reversed(r2))[1:]
                        if _is_admissible(ball, cand, lam, eps, oracle):
                            return cand
    return None


@dataclass(frozen=True)
class BadSegment:
    segment: Path
    certificate: Path
    threshold: int
    C: QC


def find_bad_segments(
    ball: Ball, C: QC, threshold: int, max_length: Optional[int] = None
) -> List[BadSegment]:
    """Geodesic segments from the basepoint with certified deviation >=
    threshold at C.  Segments through the basepoint are covered up to the
    left action by translating them to start there.
    """
    out: List[BadSegment] = []
    base = ball.basepoint
    max_length = max_length if max_length is not None else ball.radius
    for y in ball.vertices():
        d = ball.dist(base, y)
        if d == 0 or d > max_length:
            continue
        for seg in geodesics(ball, base, y):
            cert = deviation_at_least(ball, seg, C, threshold)
            if cert is not None:
                out.append(BadSegment(seg, cert, threshold, C))
    return out


def split_bad_segment(ball: Ball, seg: Sequence, C: QC):
    """Split a bad geodesic segment into halves that stay bad at inflated
    constants.

    With witnessed deviation n of seg at C, searches for the smallest k
    such that seg[0..k+1] certifies deviation >= n at (3a, 3b); the
    halves seg[0..k], seg[k..] then certify >= n at (3a+2, 3b+2).
    """
    lam, eps = C
    if not is_geodesic(ball, seg):
        raise NotGeodesic("split needs a geodesic segment")
    l = len(seg) - 1
    if l < 2:
        raise NoSplitAtScale("no interior split point")
    C3 = (3 * lam, 3 * eps)
    C3p2 = (3 * lam + 2, 3 * eps + 2)
    n = 0
    while deviation_at_least(ball, seg, C, n + 1) is not None:
        n += 1
    if n < 1:
        raise NoSplitAtScale("segment certifies no deviation at this scale")
    k1 = None
    for k in range(0, l):
        if deviation_at_least(ball, seg[: k + 2], C3, n) is not None:
            k1 = k
            break
    if k1 is None:
        raise NoSplitAtScale("no admissible split index at this scale")
    k0 = max(k1, 1)
    a, b = tuple(seg[: k0 + 1]), tuple(seg[k0:])
    cert_a = deviation_at_least(ball, a, C3p2, n)
    cert_b = deviation_at_least(ball, b, C3p2, n)
    if cert_a is None or cert_b is None:
        raise NoSplitAtScale("halves fail to certify the bound at this scale")
    return a, b, k0, n, cert_a, cert_b


# ---------------------------------------------------------------------------
# Morse verdicts


@dataclass(frozen=True)
class MorseVerdict:
    passed: bool
    gauge: str
    grid: Tuple[QC, ...]
    radius: int
    witness: Optional[Path] = None
    witness_constant: Optional[QC] = None


def is_morse_at_scale(
    ball: Ball, seg: Sequence, M: MorseGauge, grid: Sequence[QC] = DEFAULT_GRID
) -> MorseVerdict:
    """PASS if every enumerated quasi-geodesic with endpoints on seg stays
    within M(lambda, eps) of it, for every grid constant."""
    if not is_geodesic(ball, seg):
        raise NotGeodesic("Morse check needs a geodesic segment")
    oracle = _DistOracle(ball, tuple(seg) + (ball.basepoint,))
    for lam, eps in grid:
        cap = int(lam * (len(seg) - 1) + eps)
        for i in range(len(seg)):
            for j in range(i, len(seg)):
                for p in quasi_geodesics(
                    ball, seg[i], seg[j], lam, eps, cap, oracle=oracle
                ):
                    if path_deviation(ball, p, seg) > M(lam, eps):
                        return MorseVerdict(
                            False, M.name, tuple(grid), ball.radius, p, (lam, eps)
                        )
    return MorseVerdict(True, M.name, tuple(grid), ball.radius)


def neighborhood_member(
    ball: Ball, xi: Sequence, eta: Sequence, n: int, M: MorseGauge
) -> bool:
    """Whether d(eta(t), xi(t)) < delta_M for all integer t in [0, n]."""
    if not xi or not eta or xi[0] != eta[0]:
        raise BadBasepoint("paths must start at the same vertex")
    if n > min(len(xi), len(eta)) - 1:
        raise ValueError("n exceeds a path length")
    bound = delta_M(M)
    return all(ball.dist(eta[t], xi[t]) < bound for t in range(n + 1))


# ---------------------------------------------------------------------------
# combinatorial rays and realisations


@dataclass(frozen=True)
class TailSpec:
    """Eventually periodic direction u * w^inf in a vertex group.

    Letters are in the space's prefixed alphabet for the terminal vertex.
    """

    head: Word
    period: Word

    def __post_init__(self):
        if not self.period:
            raise ValueError("tail period must be nonempty")


@dataclass(frozen=True)
class CombinatorialRay:
    """Root-based geodesic edge path in the tree, with an optional tail.

    Edges are (parent_label, child_label) coset pairs; finite kind carries
    a tail in the terminal vertex group, infinite kind is a prefix of an
    infinite edge path.
    """

    kind: str  # "finite" | "infinite"
    edges: Tuple[Tuple, ...]
    tail: Optional[TailSpec] = None

    def __post_init__(self):
        if self.kind not in ("finite", "infinite"):
            raise ValueError("kind must be finite or infinite")
        if self.kind == "finite" and self.tail is None:
            raise ValueError("finite rays need a tail")
        if self.kind == "infinite" and self.tail is not None:
            raise ValueError("infinite rays have no tail")

    def length(self) -> int:
        return len(self.edges)


def _check_root_path(space: TrivialEdgeSpace, edges: Sequence[Tuple]) -> None:
    prev = space.project(space.basepoint)
    for parent, child in edges:
        if parent != prev:
            raise NotInBall(f"edge {parent!r}->{child!r} does not extend the path")
        path = space.tree_path(child)
        if len(path) < 2 or path[-2] != parent or path[-1] != child:
            raise NotInBall(f"{child!r} is not a child of {parent!r}")
        prev = child


def realisation(
    space: TrivialEdgeSpace, r: CombinatorialRay, radius: int
) -> Tuple[List, int]:
    """Concatenation of the chosen geodesics between consecutive edge
    basepoints, followed by the tail realisation, truncated at the given
    radius.  Returns (path, achieved edge-prefix length)."""
    _check_root_path(space, r.edges)
    path: List = [space.basepoint]
    achieved = 0
    for parent, child in r.edges:
        target = space.star_point(child)
        if space.depth(target) > radius:
            return path, achieved
        piece = space.geodesic(path[-1], target)
        path.extend(piece[1:])
        achieved += 1
    if r.kind == "finite":
        g, v = path[-1]
        letters = itertools.chain(r.tail.head, itertools.cycle(r.tail.period))
        for l in letters:
            g = space.normal(g + (l,))
            nxt = (g, v)
            if space.depth(nxt) > radius:
                break
            path.append(nxt)
            if len(path) > 4 * radius + 4:
                break
    return path, achieved


def edges_lying_on(space: TrivialEdgeSpace, gamma: Sequence) -> List[Tuple]:
    """Outgoing tree edges below the projection of the path's endpoint.

    An edge lies on the path when the projected suffix stays behind it;
    at finite scale that means the final projection sits in its subtree.
    """
    if not gamma:
        return []
    if gamma[0] != space.basepoint:
        raise BadBasepoint("path must start at the basepoint")
    end_label = space.project(gamma[-1])
    path = space.tree_path(end_label)
    return list(zip(path, path[1:]))


def combinatorial_neighborhood(
    space: TrivialEdgeSpace,
    r: CombinatorialRay,
    r2: CombinatorialRay,
    k: int,
    M: MorseGauge,
    radius: int,
    inflation: Callable[[float], float] = lambda x: 3 * x + 3,
) -> bool:
    """V_k membership of r2 around r at gauge M.

    Infinite kind: r2 extends past k edges and agrees with r on edge k.
    Finite kind: r2 is at least as long and the terminal realisations stay
    pointwise within delta of each other up to time k, at the inflated
    gauge standing in for the universal comparison gauge.
    """
    if r.kind != r2.kind:
        raise ScaleMismatch("rays have different kinds")
    if r.kind == "infinite":
        if k < 1 or r.length() < k:
            raise ScaleMismatch("ray prefix shorter than k")
        return r2.length() >= k and r2.edges[k - 1] == r.edges[k - 1]
    if r2.length() < r.length() or r2.edges != r.edges:
        return False
    p1, _ = realisation(space, r, radius)
    p2, _ = realisation(space, r2, radius)
    bound = delta_M(MorseGauge(lambda l, e: inflation(M(l, e)), f"infl({M.name})"))
    for t in range(min(k + 1, len(p1), len(p2))):
        if space.dist(p1[t], p2[t]) >= bound:
            return False
    return True
