"""Parsing and printing nested counterfactual queries.

Grammar::

    query   := "P(" targets ("|" names)? ")"
    targets := name ("(" argued ")")? ("," targets)?
    argued  := assign ("," argued)?
    assign  := name "=" value | name "(" argued ")"

A nested term ``M(A=a')`` inside ``Y(...)`` must name a parent of ``Y``.  Its
assignments override the enclosing ones; parents that are not mentioned
inherit the enclosing assignments.  Unrolling the recursion gives one leaf per
causal path from a treatment, and the paths whose leaf carries the treatment's
first-mentioned value form ``pi``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .errors import ParseError, SemanticError, UnsupportedNesting
from .graph import MixedGraph
from .identify import PathQuery
from .transforms import PathSet, copy_name, latent_project

__all__ = ["parse_query", "print_query", "query_key", "value_states"]

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*'*)|(?P<num>[0-9]+'*)|(?P<op>[()=,|]))")


@dataclass
class _Value:
    name: str
    value: str
    pos: int


@dataclass
class _Term:
    name: str
    args: list
    pos: int


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        i = 0
        while i < len(text):
            if text[i:].strip() == "":
                break
            m = _TOKEN.match(text, i)
            if not m or m.end() == i:
                raise ParseError(f"unexpected character {text[i]!r}", i)
            start = m.start(m.lastgroup)
            self.toks.append((m.lastgroup, m.group(m.lastgroup), start))
            i = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", "", len(self.text))

    def take(self, kind, value=None, expected=None):
        k, v, pos = self.peek()
        if k != kind or (value is not None and v != value):
            what = "end of input" if k == "eof" else repr(v)
            raise ParseError(f"unexpected {what}", pos, expected or (repr(value) if value else kind,))
        self.i += 1
        return v, pos

    def ident(self):
        v, pos = self.take("name", expected=("variable name",))
        if v.endswith("'"):
            raise ParseError(f"variable names cannot carry primes: {v!r}", pos)
        return v, pos

    def query(self):
        head, pos = self.take("name", expected=("'P('",))
        if head != "P":
            raise ParseError(f"unexpected {head!r}", pos, ("'P('",))
        self.take("op", "(")
        targets = [self.target()]
        while self.peek()[:2] == ("op", ","):
            self.i += 1
            targets.append(self.target())
        given = []
        if self.peek()[:2] == ("op", "|"):
            self.i += 1
            given.append(self.target())
            while self.peek()[:2] == ("op", ","):
                self.i += 1
                given.append(self.target())
        self.take("op", ")", expected=("','", "'|'", "')'") if not given else ("','", "')'"))
        k, v, pos = self.peek()
        if k != "eof":
            raise ParseError(f"trailing input {v!r}", pos, ("end of input",))
        return targets, given

    def target(self):
        name, pos = self.ident()
        args = []
        if self.peek()[:2] == ("op", "("):
            self.i += 1
            args = self.argued()
        return _Term(name, args, pos)

    def argued(self):
        out = [self.assign()]
        while self.peek()[:2] == ("op", ","):
            self.i += 1
            out.append(self.assign())
        self.take("op", ")", expected=("','", "')'"))
        return out

    def assign(self):
        name, pos = self.ident()
        k, v, p = self.peek()
        if (k, v) == ("op", "="):
            self.i += 1
            k, v, p = self.peek()
            if k not in ("name", "num"):
                raise ParseError("missing value", p, ("value",))
            self.i += 1
            return _Value(name, v, p)
        if (k, v) == ("op", "("):
            self.i += 1
            return _Term(name, self.argued(), pos)
        raise ParseError(f"unexpected {v!r}" if k != "eof" else "unexpected end of input", p, ("'='", "'('"))


def _walk_values(terms, out):
    for t in terms:
        for x in t.args:
            if isinstance(x, _Value):
                out.append(x)
            else:
                _walk_values([x], out)
    return out


def _walk_terms(terms, out):
    for t in terms:
        out.append(t)
        _walk_terms([x for x in t.args if isinstance(x, _Term)], out)
    return out


def parse_query(text: str, g: MixedGraph) -> PathQuery:
    """Parse ``text`` against ``g`` (hidden vertices are projected out first)."""
    if g.hidden:
        g = latent_project(g)
    targets, given = _Parser(text).query()

    def known(name, pos):
        if name not in g.vertices or name in g.fixed:
            raise SemanticError(f"unknown variable {name!r} at column {pos + 1}")

    top = targets + given
    values = _walk_values(top, [])
    terms = _walk_terms(top, [])
    for t in terms:
        known(t.name, t.pos)
    for v in values:
        known(v.name, v.pos)

    seen: dict[str, list[str]] = {}
    for v in values:
        toks = seen.setdefault(v.name, [])
        if v.value not in toks:
            toks.append(v.value)
    treatments = frozenset(seen)
    for t, toks in seen.items():
        if len(toks) > 2:
            raise UnsupportedNesting(f"{t} takes more than two values: {', '.join(toks)}")
    for t in terms:
        if t.name in treatments and not any(t is x for x in top):
            raise UnsupportedNesting(f"{t.name} is both assigned and nested at column {t.pos + 1}")
    a = {t: toks[0] for t, toks in seen.items()}
    a_prime = {t: toks[-1] for t, toks in seen.items()}

    relevant = g.descendants(treatments) if treatments else frozenset()
    leaves: list[tuple[tuple[str, ...], str]] = []

    def walk(v, ctx, nested, suffix):
        for n, sub in nested.items():
            if n not in g._pa[v]:
                raise SemanticError(f"{n} is not a parent of {v} (column {sub.pos + 1})")
        for p in g._pa[v]:
            if p in nested:
                sub = nested[p]
                ctx2 = dict(ctx)
                ctx2.update({x.name: x.value for x in sub.args if isinstance(x, _Value)})
                inner = {x.name: x for x in sub.args if isinstance(x, _Term)}
                walk(p, ctx2, inner, (p,) + suffix)
            elif p in treatments:
                if p not in ctx:
                    raise UnsupportedNesting(f"no value given for treatment {p} as a parent of {v}")
                leaves.append(((p,) + suffix, ctx[p]))
            elif p in relevant:
                walk(p, ctx, {}, (p,) + suffix)

    listed = []
    for t in top:
        if t.name in listed:
            raise SemanticError(f"{t.name} is listed twice")
        listed.append(t.name)
        ctx = {x.name: x.value for x in t.args if isinstance(x, _Value)}
        nested = {}
        for x in t.args:
            if isinstance(x, _Term):
                if x.name in nested:
                    raise SemanticError(f"{x.name} is nested twice under {t.name}")
                nested[x.name] = x
        if t.name not in treatments:
            walk(t.name, ctx, nested, (t.name,))
    for x in terms:
        names = [y.name for y in x.args if isinstance(y, _Term)]
        if len(names) != len(set(names)):
            raise SemanticError(f"a parent is nested twice under {x.name}")

    pi_paths = frozenset(p for p, tok in leaves if tok == a[p[0]])
    pi_edges = {e for p in pi_paths for e in zip(p, p[1:])}
    for p, tok in leaves:
        t = p[0]
        if a[t] == a_prime[t]:
            continue
        along = all(e in pi_edges for e in zip(p, p[1:]))
        if along != (tok == a[t]):
            raise UnsupportedNesting(
                f"path {' -> '.join(p)} takes {tok} but shares every edge with paths taking {a[t]}"
            )
    return PathQuery(
        outcomes=tuple(listed[: len(targets)]),
        conditioners=tuple(listed[len(targets) :]),
        treatments=g.sort(treatments),
        pi=PathSet(pi_paths),
        a=a,
        a_prime=a_prime,
    )


def print_query(q: PathQuery, g: MixedGraph) -> str:
    """Write ``q`` with every nested term explicit."""
    if g.hidden:
        g = latent_project(g)
    apx = q.assignment(g)
    treat = set(q.treatments)
    relevant = g.descendants(treat) if treat else frozenset()

    def occ(v):
        args = []
        for p in g.sort(g._pa[v]):
            if p in treat:
                args.append(f"{p}={apx.copy_values[copy_name(p, v)]}")
            elif p in relevant:
                args.append(occ(p))
        return f"{v}({', '.join(args)})" if args else v

    body = ", ".join(occ(y) for y in q.outcomes)
    if q.conditioners:
        body += " | " + ", ".join(occ(w) for w in q.conditioners)
    return f"P({body})"


def query_key(q: PathQuery, g: MixedGraph):
    """What a query means: outcomes, conditioners, treatments and copy values."""
    if g.hidden:
        g = latent_project(g)
    apx = q.assignment(g)
    # only copies feeding a non-treatment ancestor of the targets carry meaning
    treat = set(q.treatments)
    rest = g.induced([v for v in g.random if v not in treat])
    live = rest.ancestors(set(q.outcomes) | set(q.conditioners) - treat)
    copies = {c: tok for c, tok in apx.copy_values.items() if c.split("^")[1] in live}
    return (
        frozenset(q.outcomes),
        frozenset(q.conditioners),
        frozenset(c.split("^")[0] for c in copies),
        tuple(sorted(copies.items())),
    )


def value_states(q: PathQuery) -> Mapping[str, int]:
    # concrete states for verification: a -> 1, a' -> 0, numeric tokens as written
    out = {}
    for t in q.treatments:
        for tok, state in ((q.a_prime[t], 0), (q.a[t], 1)):
            out[tok] = int(tok) if tok.isdigit() else state
    return out
