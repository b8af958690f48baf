"""Graphs and helpers shared by the test modules."""

from __future__ import annotations

import itertools
import random
from pathlib import Path

import numpy as np

from pocalc import PathQuery, PathSet, Table, all_proper_paths, interventional, loads

GRAPHS = Path(__file__).resolve().parent.parent / "graphs"


def graph(name: str):
    return loads((GRAPHS / f"{name}.txt").read_text())


# hidden-variable DAG with confounders C<->M and C<->Y after projection
MEDIATION_CONFOUNDED = "mediation_confounded"
# C -> M added and only the C<->Y confounder kept
MEDIATION_SIDE = "mediation_side"
# complete DAG on C, A, M, Y
TRIANGLE = "triangle"
BOW = "bow"

MEDIATION_DISPLAY = "Σ_M [([Σ_C p(Y,M|A=a,C) p(C)] [Σ_C p(M|A=a',C) p(C)]) / (Σ_C p(M|A=a,C) p(C))]"
SIDE_DISPLAY = "Σ_M p(Y|M,A=a,C) p(M|A=a',C)"
TRIANGLE_DISPLAY = "Σ_{C,M} p(Y|M,A=a,C) p(M|A=a',C) p(C)"


def mediation_query(conditioners=()):
    return PathQuery(("Y",), tuple(conditioners), ("A",), PathSet.of(("A", "Y")), {"A": "a"}, {"A": "a'"})


def states(q: PathQuery) -> dict:
    out = {}
    for t in q.treatments:
        out[q.a_prime[t]] = 0
        out[q.a[t]] = 1
    return out


def numeric(q: PathQuery):
    return {t: 1 for t in q.treatments}, {t: 0 for t in q.treatments}


def widen(t: Table, like: Table) -> Table:
    """Broadcast ``t`` over the axes of ``like`` it lacks."""
    extra = [v for v in like.vars if v not in t.vars]
    return t * Table(extra, np.ones([like.cards[v] for v in extra]))


def random_sets(rng: random.Random, g, labels="yzxw-"):
    vs = list(g.random)
    rng.shuffle(vs)
    tags = [rng.choice(labels) for _ in vs]
    out = {k: [v for v, t in zip(vs, tags) if t == k] for k in "yzxw"}
    if not out["y"]:
        out["y"] = [vs[0]]
        for k in "zxw":
            if vs[0] in out[k]:
                out[k].remove(vs[0])
    return out


def random_path_query(rng: random.Random, g, max_treat=2, max_out=2):
    vs = list(g.random)
    rng.shuffle(vs)
    a = vs[: rng.randint(1, max_treat)]
    rest = vs[len(a):]
    if len(rest) < 2:
        return None
    y = rest[: rng.randint(1, max_out)]
    w = [v for v in rest[len(y):] if rng.random() < 0.7]
    paths = sorted(all_proper_paths(g, a).paths)
    pi = PathSet(frozenset(p for p in paths if rng.random() < 0.5))
    return PathQuery(
        tuple(y), tuple(w), g.sort(a), pi, {t: "a" + t.lower() for t in a}, {t: "b" + t.lower() for t in a}
    )


def rule_gap(scm, rule, y, z, x, w, rng: random.Random) -> float:
    """Largest deviation from the distributional equality a rule asserts."""
    xv = {v: rng.randrange(scm.cards[v]) for v in x}
    worst = 0.0
    for zs in itertools.product(*[range(scm.cards[v]) for v in z]):
        zv = dict(zip(z, zs))
        if rule == "1":
            t = interventional(scm, xv, y + z + w)
            lhs = t.conditional(z + w)
            rhs = widen(t.marginal(y + w).conditional(w), lhs)
            worst = max(worst, lhs.max_abs_diff(rhs))
            break
        if rule == "2":
            lhs = interventional(scm, {**xv, **zv}, y + w).conditional(w)
            rhs = interventional(scm, xv, y + w + z).conditional(w + z).select(zv)
        elif rule == "3":
            lhs = interventional(scm, {**xv, **zv}, y + w).conditional(w)
            rhs = interventional(scm, xv, y + w).conditional(w)
        else:
            lhs = interventional(scm, {**xv, **zv}, y)
            rhs = interventional(scm, xv, y)
        worst = max(worst, lhs.max_abs_diff(rhs))
    return worst


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []
