"""Fixing on conditional mixed graphs and their kernels.

A vertex is fixable when no other member of its district is also its
descendant.  Fixing it in the graph removes every edge with an arrowhead at
it and turns it into a fixed vertex; fixing it in a kernel divides by its
conditional given its Markov blanket.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import FixedAlready, NotFixable, NotFixableSet, UnknownVertex
from .expr import Expr, Joint, Marginal, Quotient
from .graph import MixedGraph

__all__ = [
    "FixingState",
    "fixable",
    "fix_graph",
    "markov_blanket",
    "initial_state",
    "fix_kernel",
    "fix_sequence",
    "fixing_sequence",
    "all_fixing_sequences",
    "reachable",
    "intrinsic",
    "district_factorization",
    "hedge_superset",
]


def _check_random(g: MixedGraph, v: str):
    if v in g.fixed:
        raise FixedAlready(f"{v} is already fixed")
    if v not in g.vertices:
        raise UnknownVertex(f"unknown vertex: {v}")


def fixable(g: MixedGraph, v: str) -> bool:
    _check_random(g, v)
    return g.descendants([v]) & g.district(v) == {v}


def fix_graph(g: MixedGraph, v: str) -> MixedGraph:
    if not fixable(g, v):
        raise NotFixable(f"{v} is not fixable")
    return MixedGraph(
        random=tuple(x for x in g.random if x != v),
        fixed=g.fixed + (v,),
        directed=frozenset(e for e in g.directed if e[1] != v),
        bidirected=frozenset(e for e in g.bidirected if v not in e),
        hidden=g.hidden - {v},
        det_edges=frozenset(e for e in g.det_edges if e[1] != v),
    )


def markov_blanket(g: MixedGraph, v: str) -> frozenset:
    """District of ``v`` together with the parents of that district, minus ``v``."""
    _check_random(g, v)
    dis = g.district(v)
    return (dis | g.parents_of(dis)) - {v}


@dataclass(frozen=True)
class FixingState:
    graph: MixedGraph
    kernel: Expr
    history: tuple[str, ...] = ()


def initial_state(g: MixedGraph, base: Expr | None = None) -> FixingState:
    return FixingState(g, base if base is not None else Joint(g.random), ())


def fix_kernel(st: FixingState, v: str) -> FixingState:
    g = st.graph
    if not fixable(g, v):
        raise NotFixable(f"{v} is not fixable")
    mb = markov_blanket(g, v)
    rest = [x for x in g.random if x not in mb and x != v]
    q = st.kernel
    # q(v | mb, W) = sum_{R \ (mb, v)} q / sum_{R \ mb} q
    cond = Quotient(Marginal(q, tuple(rest)), Marginal(q, tuple(rest) + (v,)))
    return FixingState(fix_graph(g, v), Quotient(q, cond), st.history + (v,))


def fix_sequence(st: FixingState, seq: Iterable[str]) -> FixingState:
    for v in seq:
        st = fix_kernel(st, v)
    return st


def fixing_sequence(g: MixedGraph, z: Iterable[str]) -> tuple[str, ...]:
    """Greedy valid fixing order for ``z``: always the first fixable member in canonical order.

    Raises :class:`NotFixableSet` with the residual set when none exists.
    """
    todo = list(g.sort(g.check(z, random_only=True)))
    seq = []
    while todo:
        for v in todo:
            if fixable(g, v):
                g = fix_graph(g, v)
                seq.append(v)
                todo.remove(v)
                break
        else:
            raise NotFixableSet(todo)
    return tuple(seq)


def all_fixing_sequences(g: MixedGraph, z: Iterable[str]) -> Iterator[tuple[str, ...]]:
    """Every valid fixing order of ``z`` (exhaustive; for small sets)."""
    z = g.check(z, random_only=True)

    def rec(h, todo, prefix):
        if not todo:
            yield prefix
            return
        for v in h.sort(todo):
            if fixable(h, v):
                yield from rec(fix_graph(h, v), todo - {v}, prefix + (v,))

    yield from rec(g, frozenset(z), ())


def _fix_all(g: MixedGraph, seq) -> MixedGraph:
    for v in seq:
        g = fix_graph(g, v)
    return g


def reachable(g: MixedGraph, r: Iterable[str]) -> bool:
    r = g.check(r, random_only=True)
    try:
        fixing_sequence(g, set(g.random) - r)
    except NotFixableSet:
        return False
    return True


def intrinsic(g: MixedGraph, r: Iterable[str]) -> bool:
    """True iff ``r`` is reachable and forms a single district once the rest is fixed."""
    r = g.check(r, random_only=True)
    if not r:
        return False
    try:
        seq = fixing_sequence(g, set(g.random) - r)
    except NotFixableSet:
        return False
    return len(_fix_all(g, seq).districts) == 1


def hedge_superset(g: MixedGraph, d: Iterable[str]) -> frozenset:
    """Smallest set reached by fixing towards ``d``.

    Alternately keeps the ancestors of ``d`` and the district containing
    ``d``.  The result equals ``d`` iff ``d`` is intrinsic; otherwise it is
    the larger set of a hedge for ``d``.
    """
    d = g.check(d, random_only=True)
    t = frozenset(g.random)
    while True:
        h = g.induced(t)
        t2 = h.ancestors(d) & t
        h = g.induced(t2)
        t2 = h.district(next(iter(d)))
        if t2 == t:
            return t
        t = t2


def district_factorization(
    g: MixedGraph, base: Expr | None = None, z_fixed: Iterable[str] = ()
) -> list[tuple[frozenset, Expr]]:
    """Kernels ``phi_{V \\ D}(base)`` for each district ``D`` of ``phi_Z(g)``."""
    st = fix_sequence(initial_state(g, base), fixing_sequence(g, z_fixed))
    out = []
    for d in st.graph.districts:
        rest = set(st.graph.random) - d
        out.append((d, fix_sequence(st, fixing_sequence(st.graph, rest)).kernel))
    return out
