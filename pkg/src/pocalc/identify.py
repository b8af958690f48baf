"""Rule checks and identification of (conditional) path-specific distributions.

``rule_applies`` decides the preconditions of the potential-outcome rules on
split graphs; ``docalc_equivalent`` decides the matching do-calculus
conditions on mutilated graphs and exists to cross-check the former.
``ps_id`` and ``ps_idc`` return a :class:`Functional` or raise
:class:`~pocalc.errors.NotIdentified` carrying a :class:`NonIdWitness`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import MalformedQuery, MalformedSets, NotIdentified, QueryTargetsCopy
from .expr import (
    ONE,
    PIN,
    Cond,
    Expr,
    Joint,
    Product,
    Quotient,
    SumOver,
    Substitute,
    simplify,
    substitute,
    to_latex,
    to_text,
)
from .fixing import fix_sequence, fixing_sequence, hedge_superset, initial_state, intrinsic
from .graph import MixedGraph, mutilate
from .separation import PathWitness, connecting_witness
from .transforms import (
    ExtendedAssignment,
    PathSet,
    contract,
    extend,
    latent_project,
    pathwise_assignment,
    split,
)

__all__ = [
    "RULES",
    "SeparationCert",
    "RuleCheck",
    "rule_applies",
    "docalc_equivalent",
    "NonIdWitness",
    "Factor",
    "Functional",
    "PathQuery",
    "own_value",
    "ps_id",
    "maximal_rule2_set",
    "ps_idc",
    "identify_query",
]

RULES = ("1", "2", "3", "3star")


# -- rule checks -----------------------------------------------------------------------


@dataclass(frozen=True)
class SeparationCert:
    """One m-separation statement and its outcome."""

    statement: str
    graph: MixedGraph
    left: tuple[str, ...]
    right: tuple[str, ...]
    given: tuple[str, ...]
    holds: bool
    witness: PathWitness | None = None

    def to_dict(self):
        out = {
            "statement": self.statement,
            "left": list(self.left),
            "right": list(self.right),
            "given": list(self.given),
            "holds": self.holds,
        }
        if self.witness is not None:
            out["witness"] = str(self.witness)
        return out

    def __str__(self):
        s = f"{self.statement}: {'holds' if self.holds else 'fails'}"
        return s + (f" (open path {self.witness})" if self.witness else "")


def _sep(g: MixedGraph, left, right, given, statement: str) -> SeparationCert:
    left, right, given = g.sort(left), g.sort(right), g.sort(given)
    w = connecting_witness(g, left, right, given)
    return SeparationCert(statement, g, left, right, given, w is None, w)


@dataclass(frozen=True)
class RuleCheck:
    rule: str
    y: tuple[str, ...]
    z: tuple[str, ...]
    x: tuple[str, ...]
    w: tuple[str, ...]
    verdict: bool
    certificates: tuple[SeparationCert, ...]
    z1: tuple[str, ...] = ()
    z2: tuple[str, ...] = ()

    def to_dict(self):
        out = {
            "rule": self.rule,
            "y": list(self.y),
            "z": list(self.z),
            "x": list(self.x),
            "w": list(self.w),
            "verdict": self.verdict,
            "certificates": [c.to_dict() for c in self.certificates],
        }
        if self.rule == "3":
            out["z1"], out["z2"] = list(self.z1), list(self.z2)
        return out


def _rule_sets(g: MixedGraph, rule, y, z, x, w):
    if rule not in RULES:
        raise MalformedSets(f"unknown rule {rule!r}; expected one of {', '.join(RULES)}")
    sets = [frozenset(s) for s in (y, z, x, w)]
    for s in sets:
        g.check(s, random_only=True)
    if not sets[0]:
        raise MalformedSets("the outcome set is empty")
    for i in range(4):
        for j in range(i + 1, 4):
            if sets[i] & sets[j]:
                raise MalformedSets("rule sets must be pairwise disjoint")
    return sets


def _lab(vs, args) -> str:
    inner = ",".join(v.lower() for v in args)
    return ",".join(vs) + (f"({inner})" if inner else "") if vs else "∅"


def _low(vs) -> str:
    return ",".join(v.lower() for v in vs) or "∅"


def rule_applies(g: MixedGraph, rule: str, y, z, x=(), w=()) -> RuleCheck:
    """Check a potential-outcome rule precondition in the relevant split graphs."""
    rule = str(rule)
    y, z, x, w = _rule_sets(g, rule, y, z, x, w)
    s = g.sort
    tok = lambda vs: {v: v.lower() for v in vs}  # noqa: E731
    if rule == "1":
        sw = split(g, tok(x))
        stmt = f"({_lab(s(y), s(x))} ⊥ {_lab(s(z), s(x))} | {_lab(s(w), s(x))}) in G({_low(s(x))})"
        certs = (_sep(sw.graph, y, z, w, stmt),)
    elif rule == "2":
        xz = s(x | z)
        sw = split(g, tok(x | z))
        stmt = f"({_lab(s(y), xz)} ⊥ {_lab(s(z), xz)} | {_lab(s(w), xz)}) in G({_low(xz)})"
        certs = (_sep(sw.graph, y, z, w, stmt),)
    elif rule == "3star":
        xz = s(x | z)
        sw = split(g, tok(x | z))
        stmt = f"({_lab(s(y), xz)} ⊥ {','.join(v.lower() for v in s(z)) or '∅'}) in G({_low(xz)})"
        certs = (_sep(sw.graph, sw.fixed(z), y, (), stmt),)
    else:
        gx = split(g, tok(x)).graph
        anc = gx.ancestors(w) if w else frozenset()
        z1 = z - anc
        z2 = z & anc
        xz1 = s(x | z1)
        sw = split(g, tok(x | z1))
        c1 = _sep(
            sw.graph,
            sw.fixed(z1),
            y | w,
            (),
            f"({_lab(s(y | w), xz1)} ⊥ {','.join(v.lower() for v in s(z1)) or '∅'}) in G({_low(xz1)})",
        )
        c2 = _sep(
            sw.graph,
            y,
            z2,
            w,
            f"({_lab(s(y), xz1)} ⊥ {_lab(s(z2), xz1)} | {_lab(s(w), xz1)}) in G({_low(xz1)})",
        )
        return RuleCheck(rule, s(y), s(z), s(x), s(w), c1.holds and c2.holds, (c1, c2), s(z1), s(z2))
    return RuleCheck(rule, s(y), s(z), s(x), s(w), all(c.holds for c in certs), certs)


def docalc_equivalent(g: MixedGraph, rule: str, y, z, x=(), w=()) -> bool:
    """The do-calculus precondition of the same rule, on mutilated graphs."""
    from .separation import m_separated

    rule = str(rule)
    y, z, x, w = _rule_sets(g, rule, y, z, x, w)
    if rule == "1":
        return m_separated(mutilate(g, x), y, z, w | x)
    if rule == "2":
        return m_separated(mutilate(g, x, z), y, z, w | x)
    if rule == "3star":
        return m_separated(mutilate(g, x | z), y, z, x)
    gx = mutilate(g, x)
    zw = z - (gx.ancestors(w) if w else frozenset())
    return m_separated(mutilate(g, x | zw), y, z, w | x)


# -- results ------------------------------------------------------------------------------


@dataclass(frozen=True)
class NonIdWitness:
    """Why a query is not identified.

    ``kind`` is ``"hedge"``, ``"recanting-district"`` or ``"recanting-witness"``.
    """

    kind: str
    narrative: str
    district: frozenset = frozenset()
    superset: frozenset = frozenset()
    treatment: str | None = None
    vertex: str | None = None
    copies: tuple = ()

    def to_dict(self):
        out = {"kind": self.kind, "narrative": self.narrative}
        if self.district:
            out["district"] = sorted(self.district)
        if self.superset:
            out["superset"] = sorted(self.superset)
        if self.treatment is not None:
            out["treatment"] = self.treatment
        if self.vertex is not None:
            out["vertex"] = self.vertex
        if self.copies:
            out["copies"] = {c: t for c, t in self.copies}
        return out


def _set(vs) -> str:
    return "{" + ",".join(vs) + "}"


@dataclass(frozen=True)
class Factor:
    """One district's kernel with its treatment substitution.

    ``kernel`` is the lazy fixing expression on the contracted graph;
    ``substitution`` records the copy values it uses and ``values`` the same
    values keyed by treatment.  ``pins`` are arguments the kernel does not
    depend on.  ``display`` is an equivalent closed form for printing.
    """

    district: tuple[str, ...]
    kernel: Expr
    substitution: tuple[tuple[str, str], ...]
    values: tuple[tuple[str, str], ...]
    pins: tuple[str, ...]
    display: Expr

    def expr(self) -> Expr:
        mapping = self.values + tuple((v, PIN) for v in self.pins)
        return Substitute(self.kernel, mapping) if mapping else self.kernel


@dataclass(frozen=True)
class Functional:
    """An identifying functional of the observed joint ``p(observed)``."""

    observed: tuple[str, ...]
    outcomes: tuple[str, ...]
    conditioners: tuple[str, ...]
    promoted: tuple[str, ...]
    sum_over: tuple[str, ...]
    factors: tuple[Factor, ...]
    rank: Mapping[str, int] = field(compare=False)
    certificates: tuple[SeparationCert, ...] = field(default=(), compare=False)

    @property
    def conditional(self) -> bool:
        return bool(self.conditioners)

    @property
    def variables(self) -> tuple[str, ...]:
        """Free variables: outcomes, remaining conditioners and promoted conditioners."""
        vs = set(self.outcomes) | set(self.conditioners) | set(self.promoted)
        return tuple(sorted(vs, key=self.rank.__getitem__))

    def _assemble(self, parts) -> Expr:
        body = parts[0] if len(parts) == 1 else Product(tuple(parts))
        num = SumOver(body, self.sum_over) if self.sum_over else body
        if not self.conditional:
            return num
        return Quotient(num, SumOver(num, self.outcomes))

    def expr(self) -> Expr:
        """Lazy expression used for evaluation."""
        return self._assemble([f.expr() for f in self.factors] or [ONE])

    def display(self) -> Expr:
        return simplify(self._assemble([f.display for f in self.factors] or [ONE]), self.rank)

    def text(self) -> str:
        return to_text(self.display(), self.rank)

    def latex(self) -> str:
        return to_latex(self.display(), self.rank)

    def key(self):
        """Canonical form for syntactic comparison."""
        return (
            frozenset(self.outcomes),
            frozenset(self.conditioners),
            frozenset(self.promoted),
            frozenset(self.sum_over),
            tuple(
                sorted(
                    ((tuple(sorted(f.district)), tuple(sorted(f.values))) for f in self.factors),
                )
            ),
        )

    def __str__(self):
        return self.text()

    def to_dict(self):
        return {
            "observed": list(self.observed),
            "outcomes": list(self.outcomes),
            "conditioners": list(self.conditioners),
            "promoted": list(self.promoted),
            "sum_over": list(self.sum_over),
            "factors": [
                {
                    "district": list(f.district),
                    "substitution": {c: t for c, t in f.substitution},
                    "kernel": to_text(f.display, self.rank),
                }
                for f in self.factors
            ],
            "text": self.text(),
            "latex": self.latex(),
        }


# -- closed forms for display ---------------------------------------------------------------


def _district_factor(g: MixedGraph, s: frozenset) -> Expr:
    # Q[S] as a product of p(V_i | Markov blanket of V_i among its predecessors)
    fs = []
    for i, v in enumerate(g.random):
        if v not in s:
            continue
        pre = g.induced(g.random[: i + 1])
        dis = pre.district(v)
        mb = (dis | pre.parents_of(dis)) - {v}
        fs.append(Cond((v,), g.sort(mb)))
    return Product(tuple(fs))


def _closed_form(g: MixedGraph, c: frozenset, t: frozenset, q: Expr) -> Expr | None:
    h = g.induced(t)
    anc = h.ancestors(c)
    if anc == c:
        return SumOver(q, g.sort(t - c)) if t - c else q
    if anc == t:
        return None
    qa = SumOver(q, g.sort(t - anc))
    t2 = g.induced(anc).district(next(iter(c)))
    order = [v for v in g.random if v in anc]
    fs = []
    for i, v in enumerate(order):
        if v not in t2:
            continue
        num = SumOver(qa, tuple(order[i + 1:])) if order[i + 1:] else qa
        den = SumOver(qa, tuple(order[i:])) if i else ONE
        fs.append(Quotient(num, den) if den is not ONE else num)
    return _closed_form(g, c, t2, Product(tuple(fs)))


def _display_kernel(g: MixedGraph, d: frozenset) -> Expr | None:
    s = g.district(next(iter(d)))
    return _closed_form(g, d, s, _district_factor(g, s))


# -- identification ------------------------------------------------------------------------------


def own_value(z: str) -> str:
    """Value token meaning "the observed value of ``z``" (for promoted conditioners)."""
    return f"<{z}>"


def _is_own(token: str) -> bool:
    return token.startswith("<")


def ps_id(g_ext: MixedGraph, y: Iterable[str], apx: ExtendedAssignment) -> Functional:
    """Identify ``p(Y(a^pi))`` in an extended ADMG.

    Each district of the subgraph on the ancestors of ``Y`` (with the
    treatments' outgoing edges cut) must see a single value per treatment
    and must be intrinsic in the contracted graph.
    """
    copies = g_ext.copy_source
    y = frozenset(y)
    if y & set(copies):
        raise QueryTargetsCopy("copy vertices cannot be query targets: " + ",".join(sorted(y & set(copies))))
    y = g_ext.check(y, random_only=True)
    treat = frozenset(apx.treatments)
    if y & treat:
        raise MalformedQuery("outcomes may not be treatments")
    g = contract(g_ext)
    base = [v for v in g_ext.random if v not in copies]
    ystar = g_ext.induced(base).ancestors(y) - treat
    gy = g.induced(ystar)
    dists = gy.districts

    tokens = {}
    for d in dists:
        seen: dict[str, dict[str, str]] = {}
        for c in g_ext.sort(g_ext.parents_of(d)):
            if c in copies:
                seen.setdefault(copies[c], {})[c] = apx.copy_values[c]
        for t in g.sort(seen):
            if len(set(seen[t].values())) > 1:
                dd = g.sort(d)
                detail = ", ".join(f"{c}={v}" for c, v in seen[t].items())
                raise NotIdentified(
                    NonIdWitness(
                        "recanting-district",
                        f"recanting district {_set(dd)}: its parents among the copies of "
                        f"treatment {t} take both values ({detail})",
                        district=frozenset(d),
                        treatment=t,
                        copies=tuple(seen[t].items()),
                    )
                )
        tokens[d] = {t: next(iter(vals.values())) for t, vals in seen.items()}

    for d in dists:
        if not intrinsic(g, d):
            f = hedge_superset(g, d)
            dd, ff = g.sort(d), g.sort(f)
            raise NotIdentified(
                NonIdWitness(
                    "hedge",
                    f"hedge: district {_set(dd)} is not intrinsic; fixing stops at {_set(ff)}, "
                    f"a single district whose members are all ancestors of {_set(dd)}",
                    district=frozenset(d),
                    superset=f,
                )
            )

    joint = Joint(g.random)
    promoted = {t for t in treat if _is_own(apx.a[t])}
    factors = []
    for d in dists:
        seq = fixing_sequence(g, set(g.random) - d)
        kernel = fix_sequence(initial_state(g, joint), seq).kernel
        vals = {t: v for t, v in tokens[d].items() if not _is_own(v)}
        pins = [v for v in g.random if v not in ystar and v not in vals and v not in promoted]
        sub = tuple(
            (c, apx.copy_values[c]) for c in g_ext.sort(g_ext.parents_of(d)) if c in copies
        )
        closed = _display_kernel(g, d)
        if closed is None:
            closed = simplify(kernel, g.rank)
        shown = substitute(closed, vals)
        extra = shown.free() - ystar - promoted
        if extra:
            shown = substitute(shown, {v: PIN for v in extra})
        factors.append(
            Factor(
                district=g.sort(d),
                kernel=kernel,
                substitution=sub,
                values=tuple(sorted(vals.items(), key=lambda kv: g.rank[kv[0]])),
                pins=tuple(pins),
                display=shown,
            )
        )
    factors.sort(key=lambda f: tuple(-g.rank[v] for v in reversed(f.district)))
    return Functional(
        observed=g.random,
        outcomes=g.sort(y),
        conditioners=(),
        promoted=g.sort(promoted),
        sum_over=g.sort(ystar - y),
        factors=tuple(factors),
        rank=dict(g.rank),
    )


def _promote(g_ext: MixedGraph, apx: ExtendedAssignment, zs) -> tuple[MixedGraph, ExtendedAssignment]:
    g = contract(g_ext)
    zs = g.sort(zs)
    treat = set(apx.treatments) | set(zs)
    g2 = extend(g, treat)
    a = dict(apx.a)
    a_prime = dict(apx.a_prime)
    copy_values = dict(apx.copy_values)
    edges = set(apx.pi_edges)
    for z in zs:
        a[z] = a_prime[z] = own_value(z)
        for c in g._ch[z]:
            edges.add((z, c))
            copy_values[f"{z}^{c}"] = own_value(z)
    return g2, ExtendedAssignment(
        copy_values=copy_values,
        treatments=g.sort(treat),
        a=a,
        a_prime=a_prime,
        pi=apx.pi,
        pi_edges=frozenset(edges),
    )


def _rule2_search(g_ext, y, w, apx, order=None):
    g = contract(g_ext)
    w = list(order) if order is not None else list(g.sort(w))
    promoted: list[str] = []
    certs = []
    iv = dict(apx.copy_values)
    changed = True
    while changed:
        changed = False
        for z in w:
            rest = [v for v in w if v != z]
            sw = split(g_ext, {**iv, **{p: p.lower() for p in promoted + [z]}})
            lab = ",".join(["a^π"] + [p.lower() for p in promoted + [z]])
            stmt = f"({','.join(g.sort(y))} ⊥ {z} | {','.join(g.sort(rest)) or '∅'}) in G^e({lab})"
            c = _sep(sw.graph, y, [z], rest, stmt)
            certs.append(c)
            if c.holds:
                promoted.append(z)
                w = rest
                changed = True
                break
    return frozenset(promoted), tuple(certs)


def maximal_rule2_set(
    g_ext: MixedGraph,
    y: Iterable[str],
    w: Iterable[str],
    apx: ExtendedAssignment,
    order: Sequence[str] | None = None,
) -> frozenset:
    """Largest subset of ``w`` that can be moved into the intervention by Rule 2.

    ``order`` sets the order in which candidates are tried; the result does
    not depend on it.
    """
    y, w = frozenset(y), frozenset(w)
    if order is not None and (set(order) != w or len(order) != len(w)):
        raise MalformedQuery("order must be a permutation of w")
    return _rule2_search(g_ext, y, w, apx, order)[0]


def ps_idc(
    g_ext: MixedGraph,
    y: Iterable[str],
    w: Iterable[str],
    apx: ExtendedAssignment,
    order: Sequence[str] | None = None,
) -> Functional:
    """Identify ``p(Y(a^pi) | W(a^pi))``."""
    y, w = frozenset(y), frozenset(w)
    copies = set(g_ext.copy_source)
    if (y | w) & copies:
        raise QueryTargetsCopy("copy vertices cannot be query targets")
    g_ext.check(y | w, random_only=True)
    if y & w:
        raise MalformedQuery("outcomes and conditioners must be disjoint")
    if (y | w) & set(apx.treatments):
        raise MalformedQuery("outcomes and conditioners may not be treatments")
    if order is not None and (set(order) != w or len(order) != len(w)):
        raise MalformedQuery("order must be a permutation of w")
    z, certs = _rule2_search(g_ext, y, w, apx, order)
    if z:
        g_ext, apx = _promote(g_ext, apx, z)
    rest = w - z
    f = ps_id(g_ext, y | rest, apx)
    return Functional(
        observed=f.observed,
        outcomes=f.outcomes if not rest else tuple(v for v in f.outcomes if v in y),
        conditioners=tuple(v for v in f.outcomes if v in rest),
        promoted=f.promoted,
        sum_over=f.sum_over,
        factors=f.factors,
        rank=f.rank,
        certificates=certs,
    )


# -- queries ------------------------------------------------------------------------------


@dataclass(frozen=True)
class PathQuery:
    """``p(Y(pi, a, a') | W(pi, a, a'))``."""

    outcomes: tuple[str, ...]
    conditioners: tuple[str, ...]
    treatments: tuple[str, ...]
    pi: PathSet
    a: Mapping[str, str]
    a_prime: Mapping[str, str]

    def assignment(self, g: MixedGraph) -> ExtendedAssignment:
        return pathwise_assignment(
            g, self.pi, self.a, self.a_prime, targets=set(self.outcomes) | set(self.conditioners)
        )


def identify_query(g: MixedGraph, q: PathQuery, order: Sequence[str] | None = None) -> Functional:
    """Project, check edge consistency, extend and run PS-IDC.

    Raises :class:`~pocalc.errors.EdgeInconsistent` or
    :class:`~pocalc.errors.NotIdentified`.
    """
    g = latent_project(g)
    apx = q.assignment(g)
    g_ext = extend(g, q.treatments)
    return ps_idc(g_ext, q.outcomes, q.conditioners, apx, order)
