"""Graph-to-graph constructions.

Latent projection, node splitting into single-world intervention graphs,
extended graphs with one deterministic copy per treatment-child edge, and the
copy assignment that turns a path-specific counterfactual into an ordinary
intervention on copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import (
    EdgeInconsistent,
    GraphError,
    ImproperPath,
    MismatchedTreatments,
    ValueOutOfRange,
)
from .graph import MixedGraph

__all__ = [
    "Swig",
    "PathSet",
    "ExtendedAssignment",
    "latent_project",
    "split",
    "fixed_name",
    "copy_name",
    "extend",
    "contract",
    "all_proper_paths",
    "pathwise_assignment",
]


def latent_project(g: MixedGraph) -> MixedGraph:
    """Project out ``g.hidden``.

    Directed edges come from directed paths whose interior is hidden; a
    bidirected edge joins two visible vertices sharing a hidden ancestor
    reachable through hidden vertices only.
    """
    hidden = g.hidden
    if not hidden:
        return g
    for a, b in g.bidirected:
        if a in hidden or b in hidden:
            raise GraphError("hidden vertices may not carry bidirected edges")
    keep = [v for v in g.order if v not in hidden]

    def hidden_reach(v):
        # visible vertices reachable from v along a directed path through hidden vertices
        out, stack, seen = set(), [v], {v}
        while stack:
            for c in g._ch[stack.pop()]:
                if c in hidden:
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
                else:
                    out.add(c)
        return out

    directed = {(v, w) for v in keep for w in hidden_reach(v)}
    bidirected = set(g.bidirected)
    for h in hidden:
        if any(p in hidden for p in g._pa[h]):
            continue  # covered by its hidden root ancestors
        reach = sorted(w for w in hidden_reach(h) if w not in g.fixed)
        for i, a in enumerate(reach):
            for b in reach[i + 1:]:
                bidirected.add((a, b))
    # a hidden vertex with hidden parents is reached from those roots, so the
    # roots alone generate every fork; any hidden vertex is below some root
    return MixedGraph(
        random=tuple(v for v in g.random if v not in hidden),
        fixed=g.fixed,
        directed=frozenset(directed),
        bidirected=frozenset(bidirected),
        det_edges=frozenset(e for e in g.det_edges if e in directed),
    )


# -- splitting ----------------------------------------------------------------------


def fixed_name(g: MixedGraph, v: str) -> str:
    """Name of the fixed half created when ``v`` is split."""
    low = v.lower()
    if low != v and low not in g.vertices:
        return low
    return v + "_do"


@dataclass(frozen=True)
class Swig:
    graph: MixedGraph
    fixed_of: Mapping[str, str]  # split vertex -> its fixed half
    values: Mapping[str, str]  # fixed half -> value token
    labels: Mapping[str, str]  # random vertex -> counterfactual label
    origin: MixedGraph
    intervention: Mapping[str, str]

    def fixed(self, vs: Iterable[str]) -> frozenset:
        return frozenset(self.fixed_of[v] for v in vs)


def split(g: MixedGraph, iv: Mapping[str, str], cards: Mapping[str, int] | None = None) -> Swig:
    """Split every vertex in ``iv`` into a random half and a fixed half.

    The random half keeps incoming directed and bidirected edges; the fixed
    half takes the outgoing directed edges.
    """
    iv = dict(iv)
    g.check(iv, random_only=True)
    if cards is not None:
        for v, val in iv.items():
            if isinstance(val, int) and not 0 <= val < cards[v]:
                raise ValueOutOfRange(f"value {val} out of range for {v}")
    fixed_of = {v: fixed_name(g, v) for v in g.sort(iv)}
    directed = set()
    det = set()
    for t, h in g.directed:
        tail = fixed_of.get(t, t)
        directed.add((tail, h))
        if (t, h) in g.det_edges:
            det.add((tail, h))
    fixed = g.fixed + tuple(fixed_of[v] for v in g.sort(iv))
    new = MixedGraph(
        random=g.random,
        fixed=fixed,
        directed=frozenset(directed),
        bidirected=g.bidirected,
        hidden=g.hidden,
        det_edges=frozenset(det),
    )
    values = {fixed_of[v]: str(iv[v]) for v in iv}
    labels = {}
    for v in new.random:
        anc = [a for a in new.order if a in values and a in new.ancestors([v])]
        labels[v] = v + ("(" + ", ".join(values[a] for a in anc) + ")" if anc else "")
    return Swig(new, fixed_of, values, labels, g, {v: str(iv[v]) for v in iv})


# -- extended graphs ------------------------------------------------------------------


def copy_name(a: str, child: str) -> str:
    return f"{a}^{child}"


def extend(g: MixedGraph, treatments: Iterable[str], hidden_ok: bool = False) -> MixedGraph:
    """Insert a deterministic copy ``A^V`` on every edge ``A -> V`` out of a treatment.

    Graphs with hidden vertices are refused unless ``hidden_ok`` is set; that
    form exists for checking that extension commutes with projection.
    """
    treatments = g.check(treatments, random_only=True)
    if g.hidden and not hidden_ok:
        raise GraphError("project out hidden vertices before extending")
    if treatments & g.hidden:
        raise GraphError("hidden vertices cannot be treatments")
    if not treatments:
        return g
    directed = set()
    det = set(g.det_edges)
    copies = []
    for t, h in g.directed:
        if t in treatments:
            c = copy_name(t, h)
            if c in g.vertices:
                raise GraphError(f"copy name {c} collides with an existing vertex")
            copies.append(c)
            directed.add((t, c))
            directed.add((c, h))
            det.add((t, c))
        else:
            directed.add((t, h))
    # keep each copy next to its source in the canonical order
    random = []
    for v in g.random:
        random.append(v)
        if v in treatments:
            random.extend(copy_name(v, c) for c in g._ch[v])
    return MixedGraph(
        random=tuple(random),
        fixed=g.fixed,
        directed=frozenset(directed),
        bidirected=g.bidirected,
        hidden=g.hidden,
        det_edges=frozenset(det),
    )


def contract(g: MixedGraph) -> MixedGraph:
    """Undo :func:`extend`: replace every ``A -> A^V -> V`` by ``A -> V``."""
    src = g.copy_source
    if not src:
        return g
    directed = set()
    for t, h in g.directed:
        if h in src:
            continue
        directed.add((src.get(t, t), h))
    return MixedGraph(
        random=tuple(v for v in g.random if v not in src),
        fixed=g.fixed,
        directed=frozenset(directed),
        bidirected=g.bidirected,
        hidden=g.hidden,
    )


# -- path sets and the copy assignment ------------------------------------------------


@dataclass(frozen=True)
class PathSet:
    """Directed paths, each a vertex tuple starting at a treatment.

    With ``first_edges=True`` every element is a single edge standing for all
    proper causal paths that begin with it.
    """

    paths: frozenset
    first_edges: bool = False

    @classmethod
    def of(cls, *paths, first_edges=False):
        return cls(frozenset(tuple(p) for p in paths), first_edges)

    def edges(self, g: MixedGraph, treatments: frozenset) -> frozenset:
        """Edges lying on some path (the path closure in first-edge form)."""
        out = set()
        for p in self.paths:
            out.update(zip(p, p[1:]))
        if self.first_edges:
            stack = [h for _, h in out]
            seen = set(stack)
            while stack:
                v = stack.pop()
                for c in g._ch[v]:
                    if c in treatments:
                        continue
                    out.add((v, c))
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
        return frozenset(out)

    def first(self) -> frozenset:
        return frozenset(p[:2] for p in self.paths)

    def __str__(self):
        return "{" + ", ".join(" -> ".join(p) for p in sorted(self.paths)) + "}"


def all_proper_paths(g: MixedGraph, treatments: Iterable[str]) -> PathSet:
    """Every proper causal path (leaving the treatment set at its source only)."""
    treatments = g.check(treatments, random_only=True)
    out = set()

    def rec(path):
        for c in g._ch[path[-1]]:
            if c in treatments or c in path:
                continue
            out.add(path + (c,))
            rec(path + (c,))

    for a in g.sort(treatments):
        rec((a,))
    return PathSet(frozenset(out))


@dataclass(frozen=True)
class ExtendedAssignment:
    """Values for the copy vertices ``A^V`` of an extended graph."""

    copy_values: Mapping[str, str]
    treatments: tuple[str, ...]
    a: Mapping[str, str]
    a_prime: Mapping[str, str]
    pi: PathSet
    pi_edges: frozenset

    def value_of_edge(self, t: str, h: str) -> str:
        return self.copy_values[copy_name(t, h)]


def _check_paths(g: MixedGraph, pi: PathSet, treatments: frozenset):
    for p in pi.paths:
        if len(p) < 2:
            raise ImproperPath(f"path {p} has no edges")
        g.check(p, random_only=True)
        if p[0] not in treatments:
            raise ImproperPath(f"path {' -> '.join(p)} does not start at a treatment")
        for t, h in zip(p, p[1:]):
            if (t, h) not in g.directed:
                raise ImproperPath(f"{t} -> {h} is not an edge")
        if any(v in treatments for v in p[1:]):
            raise ImproperPath(f"path {' -> '.join(p)} re-enters the treatment set")
        if len(set(p)) != len(p):
            raise ImproperPath(f"path {' -> '.join(p)} is not simple")


def pathwise_assignment(
    g: MixedGraph,
    pi: PathSet,
    a: Mapping[str, str],
    a_prime: Mapping[str, str],
    targets: Iterable[str] | None = None,
) -> ExtendedAssignment:
    """Check edge consistency and build the copy assignment.

    Expands the nested counterfactual backwards from ``targets`` (default:
    every non-treatment vertex), tagging each vertex with the contexts it is
    needed in: along ``pi`` or under the baseline ``a_prime``.  A vertex needed
    in both contexts whose along-``pi`` version depends on a treatment value
    that differs between ``a`` and ``a_prime`` raises :class:`EdgeInconsistent`.
    """
    if set(a) != set(a_prime):
        raise MismatchedTreatments("a and a_prime must assign the same treatments")
    treatments = g.check(a, random_only=True)
    _check_paths(g, pi, treatments)
    edges = pi.edges(g, treatments)
    if targets is None:
        targets = [v for v in g.random if v not in treatments]
    targets = g.check(targets, random_only=True)

    # treatments whose a-value reaches v through pi edges only
    reach: dict[str, set] = {v: set() for v in g.order}
    for v in g.order:
        if v in treatments:
            continue
        for p in g._pa[v]:
            if (p, v) in edges:
                reach[v] |= {p} if p in treatments else reach[p]

    contexts: dict[str, set] = {}
    stack = [(v, "pi") for v in g.sort(targets) if v not in treatments]
    while stack:
        v, ctx = stack.pop()
        if ctx in contexts.setdefault(v, set()):
            continue
        contexts[v].add(ctx)
        if v in treatments:
            continue
        for p in g._pa[v]:
            stack.append((p, "pi" if ctx == "pi" and (p, v) in edges else "ap"))

    for v in g.order:
        if v in treatments or contexts.get(v, set()) != {"pi", "ap"}:
            continue
        for t in g.sort(reach[v]):
            if a[t] != a_prime[t]:
                raise EdgeInconsistent(v, t)

    # a child needed only under the baseline sees a', even along an edge of pi
    copy_values = {}
    for t in g.sort(treatments):
        for c in g._ch[t]:
            along = (t, c) in edges and contexts.get(c, {"pi"}) != {"ap"}
            copy_values[copy_name(t, c)] = a[t] if along else a_prime[t]
    return ExtendedAssignment(
        copy_values=copy_values,
        treatments=g.sort(treatments),
        a=dict(a),
        a_prime=dict(a_prime),
        pi=pi,
        pi_edges=edges,
    )
