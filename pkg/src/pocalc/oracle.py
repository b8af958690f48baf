"""Exact ground truth from finite discrete structural causal models.

Every vertex ``V`` has its own noise ``eps_V`` and a total mechanism table
``f_V[pa..., eps]``.  Distributions are computed by enumerating every joint
noise configuration, so counterfactuals that mix several worlds share noise
exactly as recursive substitution requires.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    CardinalityZero,
    ChildrenConstraintViolated,
    GraphError,
    MismatchedTreatments,
    NotAHedge,
    PocalcError,
    UnknownVertex,
    ValueOutOfRange,
)
from .graph import MixedGraph
from .table import Table
from .transforms import PathSet, _check_paths, contract, copy_name

__all__ = [
    "DiscreteSCM",
    "MAX_CONFIGS",
    "POSITIVITY_FLOOR",
    "realize_bidirected",
    "random_scm",
    "observed_joint",
    "interventional",
    "path_specific",
    "g_formula",
    "edge_g_formula",
    "extend_scm",
    "eval_functional",
    "parity_counterexample",
    "hedge_gap",
    "dumps_scm",
    "loads_scm",
]

MAX_CONFIGS = 10**6
POSITIVITY_FLOOR = 0.01


@dataclass(frozen=True, eq=False)
class DiscreteSCM:
    """A finite structural causal model on a DAG (hidden vertices allowed).

    ``mechanisms[v]`` is an integer array indexed by the states of
    ``parents[v]`` (in that order) and then by the noise state.
    """

    graph: MixedGraph
    cards: Mapping[str, int]
    parents: Mapping[str, tuple[str, ...]]
    mechanisms: Mapping[str, np.ndarray]
    noise: Mapping[str, np.ndarray]
    _grid_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        g = self.graph
        if g.bidirected:
            raise GraphError("an SCM graph must be a DAG; realize bidirected edges first")
        for v in g.random:
            if self.cards.get(v, 0) < 1:
                raise CardinalityZero(f"vertex {v} has no states")
            if set(self.parents[v]) != set(g._pa[v]):
                raise GraphError(f"mechanism parents of {v} do not match the graph")
            shape = tuple(self.cards[p] for p in self.parents[v]) + (len(self.noise[v]),)
            if self.mechanisms[v].shape != shape:
                raise GraphError(f"mechanism of {v} has shape {self.mechanisms[v].shape}, expected {shape}")
            if abs(float(self.noise[v].sum()) - 1.0) > 1e-12:
                raise GraphError(f"noise of {v} does not sum to 1")

    @property
    def observed(self) -> tuple[str, ...]:
        return tuple(v for v in self.graph.random if v not in self.graph.hidden)

    @cached_property
    def _grid(self):
        # (noise index per vertex, weight per configuration)
        vs = [v for v in self.graph.random if len(self.noise[v]) > 1]
        shape = tuple(len(self.noise[v]) for v in vs)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if n > MAX_CONFIGS:
            raise PocalcError(f"{n} noise configurations exceeds the cap of {MAX_CONFIGS}")
        idx = np.unravel_index(np.arange(n), shape) if shape else ()
        noise_idx = {v: np.zeros(n, dtype=np.intp) for v in self.graph.random}
        weight = np.ones(n)
        for v, ix in zip(vs, idx):
            noise_idx[v] = ix.astype(np.intp)
            weight = weight * self.noise[v][ix]
        return noise_idx, weight

    def world(self, iv: Mapping[str, int] | None = None) -> dict[str, np.ndarray]:
        """Natural values of every vertex when children of ``iv`` see the set values."""
        iv = dict(iv or {})
        noise_idx, weight = self._grid
        n = len(weight)
        val: dict[str, np.ndarray] = {}
        for v in self.graph.random:
            args = [np.full(n, iv[p], dtype=np.intp) if p in iv else val[p] for p in self.parents[v]]
            val[v] = self.mechanisms[v][tuple(args) + (noise_idx[v],)]
        return val

    def tabulate(self, vars: Iterable[str], values: Mapping[str, np.ndarray]) -> Table:
        vars = tuple(vars)
        _, weight = self._grid
        shape = tuple(self.cards[v] for v in vars)
        if not vars:
            return Table((), np.asarray(weight.sum()))
        flat = np.ravel_multi_index(tuple(values[v] for v in vars), shape)
        counts = np.bincount(flat, weights=weight, minlength=int(np.prod(shape)))
        return Table(vars, counts.reshape(shape))


# -- construction -----------------------------------------------------------------


def realize_bidirected(g: MixedGraph) -> tuple[MixedGraph, dict[tuple[str, str], str]]:
    """Replace each bidirected edge by a fresh hidden common parent."""
    names = set(g.vertices)
    hidden, directed, made = [], set(g.directed), {}
    for a, b in sorted(g.bidirected, key=lambda e: (g.rank[e[0]], g.rank[e[1]])):
        u = f"U_{a}_{b}"
        while u in names:
            u += "_"
        names.add(u)
        hidden.append(u)
        directed |= {(u, a), (u, b)}
        made[(a, b)] = u
    dag = MixedGraph(
        random=tuple(hidden) + g.random,
        fixed=g.fixed,
        directed=frozenset(directed),
        hidden=g.hidden | set(hidden),
        det_edges=g.det_edges,
    )
    return dag, made


def _card_map(g: MixedGraph, cards, hidden_card: int) -> dict[str, int]:
    out = {}
    for v in g.random:
        if v in g.copy_source:
            continue
        if isinstance(cards, Mapping):
            c = cards.get(v, hidden_card if v in g.hidden else None)
            if c is None:
                raise UnknownVertex(f"no cardinality given for {v}")
        else:
            c = hidden_card if v in g.hidden else cards
        if int(c) < 1:
            raise CardinalityZero(f"vertex {v} has cardinality {c}")
        out[v] = int(c)
    for c, src in g.copy_source.items():
        out[c] = out[src]
    return out


def random_scm(g: MixedGraph, cards=2, seed: int = 0, hidden_card: int = 2) -> DiscreteSCM:
    """Seeded random SCM on ``g`` with every noise probability at least the floor.

    ``g`` may be a hidden-variable DAG, an ADMG or an extended ADMG; each
    bidirected edge becomes one hidden parent.  Each mechanism maps noise onto
    states surjectively for every parent configuration, so every observed
    configuration has positive probability.
    """
    if g.fixed:
        raise GraphError("SCMs are defined on graphs without fixed vertices")
    dag, _ = realize_bidirected(g)
    card = _card_map(dag, cards, hidden_card)
    rng = np.random.default_rng(seed)
    parents, mech, noise = {}, {}, {}
    for v in dag.random:
        pa = dag._pa[v]
        parents[v] = pa
        k = card[v]
        if v in dag.copy_source:
            src = pa[0]
            mech[v] = np.arange(card[src], dtype=np.intp).reshape(card[src], 1)
            noise[v] = np.ones(1)
            continue
        if not pa and v in dag.hidden:
            m = k  # a hidden root is its own noise
            mech[v] = np.arange(k, dtype=np.intp)
        else:
            m = k + 1
            shape = tuple(card[p] for p in pa)
            cells = int(np.prod(shape, dtype=np.int64)) if shape else 1
            table = np.empty((cells, m), dtype=np.intp)
            for i in range(cells):
                table[i, :k] = rng.permutation(k)
                table[i, k] = rng.integers(k)
            mech[v] = table.reshape(shape + (m,))
        p = rng.dirichlet(np.ones(m))
        p = POSITIVITY_FLOOR + (1.0 - POSITIVITY_FLOOR * m) * p
        noise[v] = p / p.sum()
    return DiscreteSCM(dag, card, parents, mech, noise)


# -- distributions ------------------------------------------------------------------


def observed_joint(scm: DiscreteSCM) -> Table:
    return scm.tabulate(scm.observed, scm.world())


def _check_iv(scm: DiscreteSCM, iv: Mapping[str, int]):
    for v, x in iv.items():
        if v not in scm.observed:
            raise UnknownVertex(f"cannot intervene on {v}")
        if not 0 <= int(x) < scm.cards[v]:
            raise ValueOutOfRange(f"value {x} out of range for {v}")


def interventional(scm: DiscreteSCM, iv: Mapping[str, int], targets: Iterable[str] | None = None) -> Table:
    """``p(targets(iv))`` by recursive substitution."""
    iv = {v: int(x) for v, x in iv.items()}
    _check_iv(scm, iv)
    if targets is None:
        targets = [v for v in scm.observed if v not in iv]
    return scm.tabulate(scm.graph.sort(targets), scm.world(iv))


def _pse_values(scm: DiscreteSCM, pi: PathSet, a, a_prime) -> dict[str, np.ndarray]:
    if set(a) != set(a_prime):
        raise MismatchedTreatments("a and a_prime must assign the same treatments")
    a = {v: int(x) for v, x in a.items()}
    a_prime = {v: int(x) for v, x in a_prime.items()}
    _check_iv(scm, a)
    _check_iv(scm, a_prime)
    g = scm.graph
    treat = frozenset(a)
    _check_paths(g, pi, treat)
    edges = pi.edges(g, treat)
    ap = scm.world(a_prime)
    noise_idx, weight = scm._grid
    n = len(weight)
    val: dict[str, np.ndarray] = {}
    for v in g.random:
        if v in treat:
            val[v] = np.full(n, a[v], dtype=np.intp)
            continue
        args = []
        for p in scm.parents[v]:
            if (p, v) in edges:
                args.append(val[p])
            elif p in treat:
                args.append(np.full(n, a_prime[p], dtype=np.intp))
            else:
                args.append(ap[p])
        val[v] = scm.mechanisms[v][tuple(args) + (noise_idx[v],)]
    return val


def path_specific(
    scm: DiscreteSCM,
    pi: PathSet,
    a: Mapping[str, int],
    a_prime: Mapping[str, int],
    targets: Iterable[str],
    given: Iterable[str] | None = None,
) -> Table:
    """Distribution of ``targets(pi, a, a')``, conditioned on ``given(pi, a, a')`` when supplied.

    Along an edge on a path in ``pi`` a vertex sees its parent's
    path-specific value; along any other edge it sees the parent's value in
    the world where every treatment is set to ``a'``.
    """
    val = _pse_values(scm, pi, a, a_prime)
    targets = tuple(targets)
    given = tuple(given or ())
    t = scm.tabulate(scm.graph.sort(set(targets) | set(given)), val)
    return t.conditional(given) if given else t


def g_formula(joint: Table, g: MixedGraph, iv: Mapping[str, int], targets: Iterable[str] | None = None) -> Table:
    """Truncated factorization on a hidden-free DAG."""
    if g.bidirected or g.hidden:
        raise GraphError("the g-formula needs a DAG without hidden vertices")
    iv = {v: int(x) for v, x in iv.items()}
    rest = [v for v in g.random if v not in iv]
    if targets is None:
        targets = rest
    out = Table.scalar(1.0)
    for v in rest:
        pa = g._pa[v]
        cpt = joint.marginal((v,) + pa).conditional(pa)
        out = out * cpt.select({p: iv[p] for p in pa if p in iv})
    return out.marginal(targets).transpose(g.sort(targets))


def edge_g_formula(
    joint: Table,
    g: MixedGraph,
    pi: PathSet,
    a: Mapping[str, int],
    a_prime: Mapping[str, int],
    targets: Iterable[str] | None = None,
) -> Table:
    """Edge g-formula: treatment parents along ``pi`` take ``a``, the others ``a'``."""
    if g.bidirected or g.hidden:
        raise GraphError("the edge g-formula needs a DAG without hidden vertices")
    treat = frozenset(a)
    edges = pi.edges(g, treat)
    rest = [v for v in g.random if v not in treat]
    if targets is None:
        targets = rest
    out = Table.scalar(1.0)
    for v in rest:
        pa = g._pa[v]
        cpt = joint.marginal((v,) + pa).conditional(pa)
        sel = {p: (a[p] if (p, v) in edges else a_prime[p]) for p in pa if p in treat}
        out = out * cpt.select(sel)
    return out.marginal(targets).transpose(g.sort(targets))


def extend_scm(scm: DiscreteSCM, treatments: Iterable[str]) -> DiscreteSCM:
    """The restricted model on the extended graph: each copy ``A^V`` equals ``A``."""
    g = scm.graph
    treat = g.check(treatments, random_only=True)
    directed, det, random = set(), set(g.det_edges), []
    parents = dict(scm.parents)
    mech = dict(scm.mechanisms)
    noise = dict(scm.noise)
    cards = dict(scm.cards)
    for t, h in g.directed:
        if t in treat:
            c = copy_name(t, h)
            directed |= {(t, c), (c, h)}
            det.add((t, c))
            parents[h] = tuple(c if p == t else p for p in parents[h])
        else:
            directed.add((t, h))
    for v in g.random:
        random.append(v)
        if v in treat:
            for ch in g._ch[v]:
                c = copy_name(v, ch)
                random.append(c)
                parents[c] = (v,)
                mech[c] = np.arange(cards[v], dtype=np.intp).reshape(cards[v], 1)
                noise[c] = np.ones(1)
                cards[c] = cards[v]
    eg = MixedGraph(
        random=tuple(random),
        directed=frozenset(directed),
        hidden=g.hidden,
        det_edges=frozenset(det),
    )
    return DiscreteSCM(eg, cards, parents, mech, noise)


def eval_functional(f, joint: Table, values: Mapping[str, int] | None = None) -> Table:
    """Evaluate a :class:`~pocalc.identify.Functional` or a bare expression."""
    from .expr import evaluate

    expr = f.expr() if hasattr(f, "expr") else f
    return evaluate(expr, joint, values)


# -- the bit-parity construction for hedges ------------------------------------------


def _spanning_tree(g: MixedGraph, first: frozenset, whole: frozenset) -> list[tuple[str, str]]:
    # bidirected spanning tree of ``whole`` containing one of ``first``
    tree, seen = [], set()

    def grow(pool):
        stack = [v for v in g.sort(seen)] if seen else [g.sort(pool)[0]]
        seen.update(stack)
        while stack:
            v = stack.pop()
            for s in g._sib[v]:
                if s in pool and s not in seen:
                    seen.add(s)
                    tree.append((v, s))
                    stack.append(s)

    grow(first)
    grow(whole)
    if seen != set(whole):
        raise NotAHedge("the hedge superset is not bidirected-connected")
    return tree


def parity_counterexample(g: MixedGraph, hedge) -> tuple[DiscreteSCM, DiscreteSCM]:
    """Two binary parity models that agree on ``p(V)`` but not on the hedge's intervention.

    ``hedge`` is a hedge witness (district ``D`` inside superset ``F``).  Both
    models use one uniform hidden bit per edge of a bidirected spanning tree
    of ``F`` and a directed forest draining ``F`` into ``D``; every vertex of
    ``F`` is the parity of its inputs.  The second model cuts every input of
    ``D`` coming from ``F \\ D``.  Vertices outside ``F`` are fair coins.
    """
    if getattr(hedge, "kind", None) != "hedge":
        raise NotAHedge("witness is not a hedge")
    g = contract(g)
    d, f = frozenset(hedge.district), frozenset(hedge.superset)
    if not d < f or not f <= set(g.random):
        raise NotAHedge("a hedge needs its district strictly inside the superset")
    tree = _spanning_tree(g, d, f)
    # directed forest: each vertex keeps at most one child, moving towards D
    dist = {v: 0 for v in d}
    frontier = list(g.sort(d))
    while frontier:
        nxt = []
        for v in frontier:
            for p in g._pa[v]:
                if p in f and p not in dist:
                    dist[p] = dist[v] + 1
                    nxt.append(p)
        frontier = nxt
    if set(dist) != set(f):
        raise NotAHedge("some vertex of the superset is not an ancestor of the district")
    child = {}
    for v in g.sort(f):
        if v in d:
            inside = [c for c in g._ch[v] if c in d]
            if inside:
                child[v] = inside[0]
        else:
            child[v] = next(c for c in g._ch[v] if c in f and dist.get(c, -1) == dist[v] - 1)
    counts: dict[str, int] = {}
    for v, c in child.items():
        counts[v] = counts.get(v, 0) + 1
        if counts[v] > 1:
            raise ChildrenConstraintViolated(f"{v} would need more than one child")
    inputs = {v: [p for p, c in child.items() if c == v] for v in f}
    hid = {}
    for a, b in tree:
        u = f"U_{a}_{b}" if g.rank[a] < g.rank[b] else f"U_{b}_{a}"
        hid[u] = (a, b)

    def build(cut: bool) -> DiscreteSCM:
        hidden = tuple(hid)
        directed = set(g.directed)
        for u, (a, b) in hid.items():
            directed |= {(u, a), (u, b)}
        dag = MixedGraph(random=hidden + g.random, directed=frozenset(directed), hidden=frozenset(hidden))
        cards = {v: 2 for v in dag.random}
        parents, mech, noise = {}, {}, {}
        for v in dag.random:
            pa = dag._pa[v]
            parents[v] = pa
            if v in hid:
                mech[v] = np.arange(2, dtype=np.intp)
                noise[v] = np.full(2, 0.5)
                continue
            if v not in f:
                used = []
                noise[v] = np.full(2, 0.5)
            else:
                used = list(inputs[v]) + [u for u, e in hid.items() if v in e]
                if cut and v in d:
                    used = [p for p in used if p not in f - d and not (p in hid and set(hid[p]) - d)]
                noise[v] = np.ones(1)
            pos = [pa.index(p) for p in used]
            grid = np.indices(tuple(2 for _ in pa) + (len(noise[v]),))
            table = grid[-1].copy()
            for i in pos:
                table = table ^ grid[i]
            mech[v] = table.astype(np.intp)
        return DiscreteSCM(dag, cards, parents, mech, noise)

    m1, m2 = build(False), build(True)
    if observed_joint(m1).max_abs_diff(observed_joint(m2)) > 1e-12:
        raise PocalcError("parity construction failed: observed joints differ")
    return m1, m2


def hedge_gap(g: MixedGraph, hedge, m1: DiscreteSCM, m2: DiscreteSCM) -> float:
    """Largest total-variation gap of ``p(D(do(F \\ D)))`` over settings of ``F \\ D``."""
    g = contract(g)
    d, f = frozenset(hedge.district), frozenset(hedge.superset)
    outside = g.sort(f - d)
    best = 0.0
    for xs in product(range(2), repeat=len(outside)):
        iv = dict(zip(outside, xs))
        t1 = interventional(m1, iv, d)
        t2 = interventional(m2, iv, d)
        best = max(best, t1.total_variation(t2))
    return best


# -- text format -----------------------------------------------------------------------


def dumps_scm(scm: DiscreteSCM) -> str:
    """Graph lines followed by ``card``, ``noise`` and ``mech`` lines."""
    from .graph import dumps

    lines = [dumps(scm.graph).rstrip("\n")]
    for v in scm.graph.random:
        lines.append(f"card {v} {scm.cards[v]}")
    for v in scm.graph.random:
        lines.append(f"noise {v} " + " ".join(repr(float(x)) for x in scm.noise[v]))
    for v in scm.graph.random:
        pa = ",".join(scm.parents[v]) or "-"
        lines.append(f"mech {v} {pa} " + " ".join(str(int(x)) for x in scm.mechanisms[v].ravel()))
    return "\n".join(lines) + "\n"


def loads_scm(text: str) -> DiscreteSCM:
    from .graph import loads

    graph_lines, cards, noise, mech, parents = [], {}, {}, {}, {}
    for line in text.splitlines():
        toks = line.split()
        if toks and toks[0] == "card":
            cards[toks[1]] = int(toks[2])
        elif toks and toks[0] == "noise":
            noise[toks[1]] = np.array([float(x) for x in toks[2:]])
        elif toks and toks[0] == "mech":
            parents[toks[1]] = tuple(toks[2].split(",")) if toks[2] != "-" else ()
            mech[toks[1]] = [int(x) for x in toks[3:]]
        else:
            graph_lines.append(line)
    g = loads("\n".join(graph_lines))
    tables = {}
    for v, flat in mech.items():
        shape = tuple(cards[p] for p in parents[v]) + (len(noise[v]),)
        tables[v] = np.array(flat, dtype=np.intp).reshape(shape)
    return DiscreteSCM(g, cards, parents, tables, noise)
