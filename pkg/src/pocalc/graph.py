"""Conditional acyclic directed mixed graphs.

One value type, :class:`MixedGraph`, covers DAGs with hidden vertices, ADMGs,
conditional graphs (CADMGs) and single-world intervention graphs.  Graphs are
immutable; every operation returns a new graph.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .errors import (
    CycleError,
    DanglingEdge,
    DuplicateVertex,
    FixedViolation,
    GraphError,
    ParseError,
    UnknownVertex,
)

__all__ = [
    "GraphDecl",
    "MixedGraph",
    "build_graph",
    "relatives",
    "districts",
    "induced_subgraph",
    "mutilate",
    "parse_graph_text",
    "loads",
    "dumps",
]

NAME_RE = re.compile(r"^[A-Za-z0-9_]+(\^[A-Za-z0-9_]+)?$")


def _bi(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True, eq=False)
class MixedGraph:
    """A mixed graph with random and fixed vertices.

    ``random`` is stored in a canonical topological order (ties broken by the
    order the vertices were given in).  ``bidirected`` holds sorted pairs.
    """

    random: tuple[str, ...] = ()
    fixed: tuple[str, ...] = ()
    directed: frozenset = frozenset()
    bidirected: frozenset = frozenset()
    hidden: frozenset = frozenset()
    det_edges: frozenset = frozenset()

    def __post_init__(self):
        random = tuple(self.random)
        fixed = tuple(self.fixed)
        directed = frozenset((str(t), str(h)) for t, h in self.directed)
        bidirected = frozenset(_bi(a, b) for a, b in self.bidirected)
        hidden = frozenset(self.hidden)
        det = frozenset(tuple(e) for e in self.det_edges)

        names = random + fixed
        if len(set(names)) != len(names):
            seen = set()
            dup = next(n for n in names if n in seen or seen.add(n))
            raise DuplicateVertex(f"duplicate vertex {dup}")
        universe = set(names)
        for t, h in directed:
            if t not in universe or h not in universe:
                raise DanglingEdge(f"edge {t} -> {h} has an undeclared endpoint")
            if t == h:
                raise GraphError(f"self edge on {t}")
        for a, b in bidirected:
            if a not in universe or b not in universe:
                raise DanglingEdge(f"edge {a} <-> {b} has an undeclared endpoint")
            if a == b:
                raise GraphError(f"self edge on {a}")
        fixed_set = set(fixed)
        for t, h in directed:
            if h in fixed_set:
                raise FixedViolation(f"fixed vertex {h} has incoming edge from {t}")
        for a, b in bidirected:
            if a in fixed_set or b in fixed_set:
                raise FixedViolation(f"fixed vertex in bidirected edge {a} <-> {b}")
        if not hidden <= set(random):
            raise GraphError("hidden vertices must be random")
        if not det <= directed:
            raise GraphError("deterministic edges must be directed edges")
        for t, h in det:
            if sum(1 for _, hh in directed if hh == h) != 1:
                raise GraphError(f"copy vertex {h} must have exactly one parent")
            if any(h in e for e in bidirected):
                raise GraphError(f"copy vertex {h} cannot have bidirected edges")

        order = _topological(names, directed)
        object.__setattr__(self, "random", tuple(v for v in order if v not in fixed_set))
        object.__setattr__(self, "fixed", tuple(v for v in order if v in fixed_set))
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "bidirected", bidirected)
        object.__setattr__(self, "hidden", hidden)
        object.__setattr__(self, "det_edges", det)

    # -- identity -----------------------------------------------------------

    def _key(self):
        return (
            frozenset(self.random),
            frozenset(self.fixed),
            self.directed,
            self.bidirected,
            self.hidden,
            self.det_edges,
        )

    def __eq__(self, other):
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        parts = [f"{t}->{h}" for t, h in sorted(self.directed)]
        parts += [f"{a}<->{b}" for a, b in sorted(self.bidirected)]
        fx = f" fixed={list(self.fixed)}" if self.fixed else ""
        return f"MixedGraph({list(self.random)}{fx}; {', '.join(parts)})"

    # -- structure ----------------------------------------------------------

    @cached_property
    def order(self) -> tuple[str, ...]:
        """All vertices (random and fixed) in canonical topological order."""
        return _topological(self.random + self.fixed, self.directed)

    @cached_property
    def rank(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.order)}

    @cached_property
    def vertices(self) -> frozenset:
        return frozenset(self.random) | frozenset(self.fixed)

    @cached_property
    def _pa(self) -> dict[str, tuple[str, ...]]:
        out = {v: [] for v in self.order}
        for t, h in self.directed:
            out[h].append(t)
        return {v: tuple(sorted(ps, key=self.rank.__getitem__)) for v, ps in out.items()}

    @cached_property
    def _ch(self) -> dict[str, tuple[str, ...]]:
        out = {v: [] for v in self.order}
        for t, h in self.directed:
            out[t].append(h)
        return {v: tuple(sorted(cs, key=self.rank.__getitem__)) for v, cs in out.items()}

    @cached_property
    def _sib(self) -> dict[str, tuple[str, ...]]:
        out = {v: [] for v in self.order}
        for a, b in self.bidirected:
            out[a].append(b)
            out[b].append(a)
        return {v: tuple(sorted(s, key=self.rank.__getitem__)) for v, s in out.items()}

    def sort(self, vs: Iterable[str]) -> tuple[str, ...]:
        """Sort vertices by canonical order."""
        return tuple(sorted(set(vs), key=self.rank.__getitem__))

    def check(self, vs: Iterable[str], *, random_only: bool = False) -> frozenset:
        vs = frozenset(vs)
        pool = frozenset(self.random) if random_only else self.vertices
        missing = vs - pool
        if missing:
            what = "random vertex" if random_only else "vertex"
            raise UnknownVertex(f"unknown {what}: {', '.join(sorted(missing))}")
        return vs

    def parents(self, v: str) -> tuple[str, ...]:
        self.check([v])
        return self._pa[v]

    def children(self, v: str) -> tuple[str, ...]:
        self.check([v])
        return self._ch[v]

    def siblings(self, v: str) -> tuple[str, ...]:
        self.check([v])
        return self._sib[v]

    def parents_of(self, vs: Iterable[str]) -> frozenset:
        return frozenset(p for v in vs for p in self._pa[v])

    def ancestors(self, vs: Iterable[str]) -> frozenset:
        stack = list(self.check(vs))
        seen = set(stack)
        while stack:
            for p in self._pa[stack.pop()]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return frozenset(seen)

    def descendants(self, vs: Iterable[str]) -> frozenset:
        stack = list(self.check(vs))
        seen = set(stack)
        while stack:
            for c in self._ch[stack.pop()]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return frozenset(seen)

    def district(self, v: str) -> frozenset:
        self.check([v], random_only=True)
        stack, seen = [v], {v}
        while stack:
            for s in self._sib[stack.pop()]:
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
        return frozenset(seen)

    @cached_property
    def districts(self) -> tuple[frozenset, ...]:
        """Bidirected components of the random vertices, in canonical order."""
        out, seen = [], set()
        for v in self.random:
            if v not in seen:
                d = self.district(v)
                seen |= d
                out.append(d)
        return tuple(out)

    @cached_property
    def copy_source(self) -> dict[str, str]:
        """Map from each deterministic copy vertex to the vertex it copies."""
        return {h: t for t, h in self.det_edges}

    def adjacent_edges(self, v: str):
        """Yield ``(other, mark_at_v, mark_at_other)`` for every edge at ``v``.

        Marks are ``"tail"`` or ``"arrow"``.
        """
        for c in self._ch[v]:
            yield c, "tail", "arrow"
        for p in self._pa[v]:
            yield p, "arrow", "tail"
        for s in self._sib[v]:
            yield s, "arrow", "arrow"

    # -- derived graphs -----------------------------------------------------

    def replace(self, **kw) -> "MixedGraph":
        base = dict(
            random=self.random,
            fixed=self.fixed,
            directed=self.directed,
            bidirected=self.bidirected,
            hidden=self.hidden,
            det_edges=self.det_edges,
        )
        base.update(kw)
        if "directed" in kw and "det_edges" not in kw:
            base["det_edges"] = frozenset(e for e in self.det_edges if e in base["directed"])
        return MixedGraph(**base)

    def induced(self, vs: Iterable[str]) -> "MixedGraph":
        keep = self.check(vs)
        return MixedGraph(
            random=tuple(v for v in self.random if v in keep),
            fixed=tuple(v for v in self.fixed if v in keep),
            directed=frozenset(e for e in self.directed if e[0] in keep and e[1] in keep),
            bidirected=frozenset(e for e in self.bidirected if e[0] in keep and e[1] in keep),
            hidden=self.hidden & keep,
            det_edges=frozenset(e for e in self.det_edges if e[0] in keep and e[1] in keep),
        )

    def is_dag(self) -> bool:
        return not self.bidirected


def _topological(names: tuple[str, ...], directed) -> tuple[str, ...]:
    import heapq

    index = {v: i for i, v in enumerate(names)}
    indeg = {v: 0 for v in names}
    ch: dict[str, list[str]] = {v: [] for v in names}
    for t, h in directed:
        indeg[h] += 1
        ch[t].append(h)
    heap = [(index[v], v) for v in names if indeg[v] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        _, v = heapq.heappop(heap)
        out.append(v)
        for c in ch[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, (index[c], c))
    if len(out) != len(names):
        raise CycleError(_find_cycle([v for v in names if indeg[v] > 0], ch))
    return tuple(out)


def _find_cycle(candidates, ch):
    # every leftover vertex has a leftover parent, so walking parents must loop
    cand = set(candidates)
    pa: dict[str, list[str]] = {v: [] for v in cand}
    for t, hs in ch.items():
        if t in cand:
            for h in hs:
                if h in cand:
                    pa[h].append(t)
    v = candidates[0]
    path, pos = [v], {v: 0}
    while True:
        v = pa[v][0]
        if v in pos:
            cyc = path[pos[v]:]
            return list(reversed(cyc)) + [cyc[-1]] if len(cyc) > 0 else [v]
        pos[v] = len(path)
        path.append(v)


# -- declarations ---------------------------------------------------------------


@dataclass
class GraphDecl:
    """A raw, unvalidated graph declaration (e.g. parsed from text)."""

    vertices: list = field(default_factory=list)  # names in declaration order
    hidden: list = field(default_factory=list)
    fixed: list = field(default_factory=list)
    directed: list = field(default_factory=list)
    bidirected: list = field(default_factory=list)
    det_edges: list = field(default_factory=list)
    values: dict = field(default_factory=dict)  # fixed vertex -> value token
    labels: dict = field(default_factory=dict)  # random vertex -> label text


def build_graph(decl: GraphDecl) -> MixedGraph:
    """Validate a declaration and build the graph.

    Rejects duplicate vertices, dangling endpoints, self edges, parallel
    duplicate edges, edges into fixed vertices and directed cycles.
    """
    names = list(decl.vertices) + list(decl.fixed)
    seen = set()
    for n in names:
        if n in seen:
            raise DuplicateVertex(f"duplicate vertex {n}")
        seen.add(n)
    det_heads = {h for _, h in decl.det_edges}
    for n in names:
        if not NAME_RE.match(n):
            raise GraphError(f"invalid vertex name {n!r}")
        if "^" in n and n not in det_heads:
            raise GraphError(f"copy-suffixed name {n!r} is reserved for extended graphs")
    dir_seen = set()
    for e in decl.directed:
        e = tuple(e)
        if e in dir_seen:
            raise GraphError(f"parallel edge {e[0]} -> {e[1]}")
        dir_seen.add(e)
    bi_seen = set()
    for a, b in decl.bidirected:
        k = _bi(a, b)
        if k in bi_seen:
            raise GraphError(f"parallel edge {a} <-> {b}")
        bi_seen.add(k)
    for h in decl.hidden:
        if h not in decl.vertices:
            raise DanglingEdge(f"hidden marker on undeclared vertex {h}")
    return MixedGraph(
        random=tuple(decl.vertices),
        fixed=tuple(decl.fixed),
        directed=frozenset(tuple(e) for e in decl.directed),
        bidirected=frozenset(tuple(e) for e in decl.bidirected),
        hidden=frozenset(decl.hidden),
        det_edges=frozenset(tuple(e) for e in decl.det_edges),
    )


# -- module-level operations --------------------------------------------------------


def relatives(g: MixedGraph, s: Iterable[str], kind: str) -> frozenset:
    """Parents, children, ancestors or descendants of a vertex set.

    Ancestors and descendants are reflexive; parents and children are not.
    """
    s = g.check(s)
    if kind == "parents":
        return frozenset(p for v in s for p in g._pa[v])
    if kind == "children":
        return frozenset(c for v in s for c in g._ch[v])
    if kind == "ancestors":
        return g.ancestors(s)
    if kind == "descendants":
        return g.descendants(s)
    raise ValueError(f"unknown relation {kind!r}")


def districts(g: MixedGraph) -> tuple[frozenset, ...]:
    return g.districts


def induced_subgraph(g: MixedGraph, s: Iterable[str]) -> MixedGraph:
    """Subgraph on random vertices ``s``; fixed vertices are dropped."""
    s = g.check(s, random_only=True)
    return g.induced(s)


def mutilate(g: MixedGraph, remove_into: Iterable[str] = (), remove_out_of: Iterable[str] = ()) -> MixedGraph:
    """Delete edges with an arrowhead at ``remove_into`` and directed edges out of ``remove_out_of``."""
    into = g.check(remove_into, random_only=True)
    out = g.check(remove_out_of, random_only=True)
    directed = frozenset(e for e in g.directed if e[1] not in into and e[0] not in out)
    bidirected = frozenset(e for e in g.bidirected if e[0] not in into and e[1] not in into)
    return g.replace(directed=directed, bidirected=bidirected)


# -- text format ------------------------------------------------------------------

_FIXED_RE = re.compile(r"^([A-Za-z0-9_^]+)(?:=(\S+))?$")


def parse_graph_text(text: str) -> GraphDecl:
    """Parse the line-oriented graph format into a declaration.

    ::

        var <name> [hidden]
        fixed <name>[=<value>]
        edge <tail> -> <head> [det]
        edge <a> <-> <b>
        label <name> <text>
    """
    decl = GraphDecl()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        kw = toks[0]
        try:
            if kw == "var":
                if len(toks) not in (2, 3) or (len(toks) == 3 and toks[2] != "hidden"):
                    raise ValueError("expected 'var <name> [hidden]'")
                decl.vertices.append(toks[1])
                if len(toks) == 3:
                    decl.hidden.append(toks[1])
            elif kw == "fixed":
                m = _FIXED_RE.match(toks[1]) if len(toks) == 2 else None
                if not m:
                    raise ValueError("expected 'fixed <name>[=<value>]'")
                decl.fixed.append(m.group(1))
                if m.group(2) is not None:
                    decl.values[m.group(1)] = m.group(2)
            elif kw == "edge":
                if len(toks) == 4 and toks[2] == "->":
                    decl.directed.append((toks[1], toks[3]))
                elif len(toks) == 5 and toks[2] == "->" and toks[4] == "det":
                    decl.directed.append((toks[1], toks[3]))
                    decl.det_edges.append((toks[1], toks[3]))
                elif len(toks) == 4 and toks[2] == "<->":
                    decl.bidirected.append((toks[1], toks[3]))
                else:
                    raise ValueError("expected 'edge <a> -> <b> [det]' or 'edge <a> <-> <b>'")
            elif kw == "label":
                if len(toks) < 3:
                    raise ValueError("expected 'label <name> <text>'")
                decl.labels[toks[1]] = " ".join(toks[2:])
            else:
                raise ValueError(f"unknown keyword {kw!r}")
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    return decl


def loads(text: str) -> MixedGraph:
    return build_graph(parse_graph_text(text))


def dumps(
    g: MixedGraph,
    values: Mapping[str, str] | None = None,
    labels: Mapping[str, str] | None = None,
) -> str:
    """Serialize a graph; ``loads(dumps(g)) == g``."""
    values = values or {}
    labels = labels or {}
    lines = []
    for v in g.random:
        lines.append(f"var {v}" + (" hidden" if v in g.hidden else ""))
    for v in g.fixed:
        lines.append(f"fixed {v}" + (f"={values[v]}" if v in values else ""))
    for t, h in sorted(g.directed, key=lambda e: (g.rank[e[0]], g.rank[e[1]])):
        lines.append(f"edge {t} -> {h}" + (" det" if (t, h) in g.det_edges else ""))
    for a, b in sorted(g.bidirected, key=lambda e: (g.rank[e[0]], g.rank[e[1]])):
        lines.append(f"edge {a} <-> {b}")
    for v in g.random:
        if v in labels:
            lines.append(f"label {v} {labels[v]}")
    return "\n".join(lines) + "\n"
