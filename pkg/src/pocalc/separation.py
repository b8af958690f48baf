"""m-separation on conditional mixed graphs.

Fixed vertices may appear in the left-hand set only; as non-endpoints they
always block.  :func:`m_separated` uses a reachability walk; the exhaustive
path enumerator :func:`all_paths` together with :func:`path_blocked` is the
reference implementation it is tested against.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import MalformedQuery
from .graph import MixedGraph

__all__ = [
    "PathWitness",
    "m_separated",
    "connecting_witness",
    "all_paths",
    "path_blocked",
    "m_separated_bruteforce",
]


@dataclass(frozen=True)
class PathWitness:
    """An open path: vertices and, per step, the (mark at left, mark at right) pair."""

    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __str__(self):
        out = [self.vertices[0]]
        for (lm, rm), v in zip(self.edges, self.vertices[1:]):
            left = "<" if lm == "arrow" else ""
            right = ">" if rm == "arrow" else ""
            out.append(f" {left}-{right} " if left or right else " - ")
            out.append(v)
        return "".join(out)

    def to_dict(self):
        return {"vertices": list(self.vertices), "edges": [list(e) for e in self.edges]}


def _validate(g: MixedGraph, left, right, given):
    left, right, given = frozenset(left), frozenset(right), frozenset(given)
    g.check(left | right | given)
    fixed = frozenset(g.fixed)
    if (right | given) & fixed:
        raise MalformedQuery("fixed vertices may only appear in the left set")
    if left & right or left & given or right & given:
        raise MalformedQuery("separation sets must be pairwise disjoint")
    return left, right, given


def m_separated(g: MixedGraph, left: Iterable[str], right: Iterable[str], given: Iterable[str] = ()) -> bool:
    """True iff every path between ``left`` and ``right`` is blocked by ``given``."""
    left, right, given = _validate(g, left, right, given)
    if not left or not right:
        return True
    return not _reachable(g, left, given) & right


def _reachable(g: MixedGraph, left: frozenset, given: frozenset) -> frozenset:
    """Vertices reachable from ``left`` by an open walk."""
    fixed = frozenset(g.fixed)
    opens = g.ancestors(given) if given else frozenset()
    # state: (vertex, arrowhead at vertex on the edge we arrived by)
    queue = deque()
    seen = set()
    reached = set()
    for s in left:
        for w, _, mw in g.adjacent_edges(s):
            st = (w, mw == "arrow")
            if st not in seen:
                seen.add(st)
                queue.append(st)
    while queue:
        v, into = queue.popleft()
        reached.add(v)
        if v in fixed:
            continue
        for w, mv, mw in g.adjacent_edges(v):
            collider = into and mv == "arrow"
            if collider:
                if v not in opens:
                    continue
            elif v in given:
                continue
            st = (w, mw == "arrow")
            if st not in seen:
                seen.add(st)
                queue.append(st)
    return frozenset(reached)


# -- exhaustive reference ---------------------------------------------------------


def all_paths(g: MixedGraph, source: str, target: str) -> Iterator[PathWitness]:
    """Every simple path from ``source`` to ``target`` whose interior is random.

    Parallel edges (a directed and a bidirected edge on one pair) give distinct paths.
    """
    fixed = frozenset(g.fixed)

    def rec(v, verts, marks, visited):
        for w, mv, mw in g.adjacent_edges(v):
            if w in visited:
                continue
            step = (mv, mw)
            if w == target:
                yield PathWitness(verts + (w,), marks + (step,))
            elif w not in fixed:
                yield from rec(w, verts + (w,), marks + (step,), visited | {w})

    if source == target:
        return
    yield from rec(source, (source,), (), frozenset([source]))


def path_blocked(g: MixedGraph, path: PathWitness, given: Iterable[str]) -> bool:
    """Blocking rule for a single path, stated directly on the path's marks."""
    given = frozenset(given)
    fixed = frozenset(g.fixed)
    for i in range(1, len(path.vertices) - 1):
        v = path.vertices[i]
        if v in fixed:
            return True
        arrow_in = path.edges[i - 1][1] == "arrow"
        arrow_out = path.edges[i][0] == "arrow"
        if arrow_in and arrow_out:
            if v not in given and not (g.descendants([v]) & given):
                return True
        elif v in given:
            return True
    return False


def m_separated_bruteforce(g: MixedGraph, left, right, given=()) -> bool:
    left, right, given = _validate(g, left, right, given)
    for l in left:
        for r in right:
            for p in all_paths(g, l, r):
                if not path_blocked(g, p, given):
                    return False
    return True


def connecting_witness(g: MixedGraph, left, right, given=()) -> PathWitness | None:
    """Shortest open path (ties: canonical vertex order, directed before bidirected).

    Returns ``None`` when the sets are m-separated.
    """
    left, right, given = _validate(g, left, right, given)
    if not left or not right or m_separated(g, left, right, given):
        return None
    fixed = frozenset(g.fixed)
    mark_rank = {("tail", "arrow"): 0, ("arrow", "tail"): 1, ("arrow", "arrow"): 2}

    def key(p: PathWitness):
        return (
            len(p.vertices),
            tuple(g.rank[v] for v in p.vertices),
            tuple(mark_rank[e] for e in p.edges),
        )

    # breadth-first over simple paths, one length at a time
    frontier = [PathWitness((s,), ()) for s in g.sort(left)]
    while frontier:
        found = []
        nxt = []
        for p in frontier:
            v = p.vertices[-1]
            for w, mv, mw in g.adjacent_edges(v):
                if w in p.vertices:
                    continue
                q = PathWitness(p.vertices + (w,), p.edges + ((mv, mw),))
                if w in right:
                    if not path_blocked(g, q, given):
                        found.append(q)
                elif w not in fixed and not _prefix_blocked(g, q, given):
                    nxt.append(q)
        if found:
            return min(found, key=key)
        frontier = nxt
    return None


def _prefix_blocked(g: MixedGraph, p: PathWitness, given: frozenset) -> bool:
    # the last vertex is still an endpoint, so only the interior is judged
    return len(p.vertices) >= 3 and path_blocked(g, p, given)
