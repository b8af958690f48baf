"""Symbolic probability expressions over an observed joint.

Two families of trees share these node types.  Kernels built by the fixing
operator are lazy: a :class:`Joint` leaf combined by :class:`Marginal` and
:class:`Quotient`.  Display forms are built from :class:`Cond` atoms and are
rewritten by :func:`simplify`.  Evaluation never depends on simplification.

Value tokens are strings.  ``PIN`` marks an argument the expression does not
depend on; it evaluates to state 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import FreeVariableMissing
from .table import Table

__all__ = [
    "PIN",
    "Expr",
    "Joint",
    "Cond",
    "Product",
    "Quotient",
    "SumOver",
    "Marginal",
    "Substitute",
    "ONE",
    "evaluate",
    "to_text",
    "to_latex",
    "simplify",
    "substitute",
]

PIN = "*"


class Expr:
    def free(self) -> frozenset:
        raise NotImplementedError

    def __mul__(self, other: "Expr") -> "Expr":
        return Product((self, other))

    def __truediv__(self, other: "Expr") -> "Expr":
        return Quotient(self, other)


@dataclass(frozen=True)
class Joint(Expr):
    """The observed joint over ``vars``."""

    vars: tuple[str, ...]

    def free(self):
        return frozenset(self.vars)


@dataclass(frozen=True)
class Cond(Expr):
    """The conditional ``p(head | given)`` of the observed joint.

    ``values`` pins some of its variables to value tokens.
    """

    head: tuple[str, ...]
    given: tuple[str, ...] = ()
    values: tuple[tuple[str, str], ...] = ()

    def free(self):
        pinned = {v for v, _ in self.values}
        return frozenset(v for v in self.head + self.given if v not in pinned)

    def value_map(self) -> dict[str, str]:
        return dict(self.values)


@dataclass(frozen=True)
class Product(Expr):
    factors: tuple[Expr, ...]

    def free(self):
        return frozenset().union(*(f.free() for f in self.factors))


ONE = Product(())


@dataclass(frozen=True)
class Quotient(Expr):
    num: Expr
    den: Expr

    def free(self):
        return self.num.free() | self.den.free()


@dataclass(frozen=True)
class SumOver(Expr):
    body: Expr
    over: tuple[str, ...]

    def free(self):
        return self.body.free() - set(self.over)


@dataclass(frozen=True)
class Marginal(SumOver):
    """A kernel summed over some of its random variables."""


@dataclass(frozen=True)
class Substitute(Expr):
    body: Expr
    mapping: tuple[tuple[str, str], ...]

    def free(self):
        return self.body.free() - {v for v, _ in self.mapping}


# -- evaluation ---------------------------------------------------------------------


def evaluate(expr: Expr, joint: Table, values: Mapping[str, int] | None = None) -> Table:
    """Evaluate ``expr`` on an observed joint.

    ``values`` maps value tokens to states.  Zero denominators give NaN cells.
    """
    values = dict(values or {})
    missing = expr.free() - set(joint.vars)
    if missing:
        raise FreeVariableMissing(f"joint lacks variables: {', '.join(sorted(missing))}")
    memo: dict[int, Table] = {}
    marg: dict[frozenset, Table] = {}

    def margin(keep) -> Table:
        key = frozenset(keep)
        if key not in marg:
            marg[key] = joint.marginal(key)
        return marg[key]

    def state(token: str) -> int:
        if token == PIN:
            return 0
        if token in values:
            return values[token]
        if token.isdigit():
            return int(token)
        raise FreeVariableMissing(f"no state given for value token {token!r}")

    def ev(e: Expr) -> Table:
        k = id(e)
        if k in memo:
            return memo[k]
        if isinstance(e, Joint):
            out = margin(e.vars)
        elif isinstance(e, Cond):
            m = margin(e.head + e.given)
            out = m / margin(e.given) if e.given else m
            if e.values:
                out = out.select({v: state(t) for v, t in e.values})
        elif isinstance(e, Product):
            out = Table.scalar(1.0)
            for f in e.factors:
                out = out * ev(f)
        elif isinstance(e, Quotient):
            out = ev(e.num) / ev(e.den)
        elif isinstance(e, SumOver):
            out = ev(e.body).sum_out(e.over)
        elif isinstance(e, Substitute):
            body = ev(e.body)
            out = body.select({v: state(t) for v, t in e.mapping if v in body.vars})
        else:
            raise TypeError(f"unknown node {type(e).__name__}")
        memo[k] = out
        return out

    return ev(expr)


# -- printing ------------------------------------------------------------------------


class _Printer:
    def __init__(self, rank: Mapping[str, int] | None, latex: bool):
        self.rank = rank or {}
        self.latex = latex

    def order(self, vs, reverse=False):
        return sorted(vs, key=lambda v: (self.rank.get(v, 1 << 30), v), reverse=reverse)

    def names(self, vs):
        return (", " if self.latex else ",").join(vs)

    def sum_sub(self, over):
        vs = self.names(self.order(over))
        if self.latex:
            return "\\sum_{" + vs + "}"
        return "Σ_" + (vs if len(over) == 1 else "{" + vs + "}")

    def cond(self, e: Cond) -> str:
        vals = e.value_map()

        def item(v):
            if v not in vals:
                return v
            if self.latex:
                return vals[v] if vals[v] != PIN else v + "{=}\\ast"
            return f"{v}={vals[v]}"

        head = self.names(item(v) for v in self.order(e.head, reverse=True))
        if not e.given:
            return f"p({head})"
        given = self.names(item(v) for v in self.order(e.given, reverse=True))
        bar = " \\mid " if self.latex else "|"
        return f"p({head}{bar}{given})"

    def wrap(self, s):
        return f"\\left[{s}\\right]" if self.latex else f"[{s}]"

    def __call__(self, e: Expr) -> str:
        if isinstance(e, Cond):
            return self.cond(e)
        if isinstance(e, Joint):
            return "p(" + self.names(self.order(e.vars)) + ")"
        if isinstance(e, Product):
            if not e.factors:
                return "1"
            parts = []
            for f in e.factors:
                s = self(f)
                if len(e.factors) > 1 and isinstance(f, (SumOver, Quotient, Substitute)):
                    s = self.wrap(s)
                parts.append(s)
            return ("\\, " if self.latex else " ").join(parts)
        if isinstance(e, Quotient):
            if self.latex:
                return "\\frac{" + self(e.num) + "}{" + self(e.den) + "}"

            def side(x):
                s = self(x)
                return s if isinstance(x, (Cond, Joint)) else f"({s})"

            return side(e.num) + " / " + side(e.den)
        if isinstance(e, SumOver):
            body = self(e.body)
            if isinstance(e.body, (Quotient, Substitute)):
                body = self.wrap(body)
            return self.sum_sub(e.over) + " " + body
        if isinstance(e, Substitute):
            m = ", ".join(f"{v}={t}" for v, t in sorted(e.mapping))
            if self.latex:
                return "\\left." + self(e.body) + "\\right|_{" + m + "}"
            return self.wrap(self(e.body)) + "|_{" + m + "}"
        raise TypeError(f"unknown node {type(e).__name__}")


def to_text(expr: Expr, rank: Mapping[str, int] | None = None) -> str:
    return _Printer(rank, latex=False)(expr)


def to_latex(expr: Expr, rank: Mapping[str, int] | None = None) -> str:
    return _Printer(rank, latex=True)(expr)


# -- simplification --------------------------------------------------------------------


def substitute(expr: Expr, mapping: Mapping[str, str]) -> Expr:
    """Push a value substitution down to the atoms.

    Bound variables shadow the mapping.  Lazy :class:`Joint` leaves keep an
    explicit :class:`Substitute` node.
    """
    mapping = {v: t for v, t in mapping.items() if v in expr.free()}
    if not mapping:
        return expr
    if isinstance(expr, Cond):
        vals = expr.value_map()
        vals.update(mapping)
        return Cond(expr.head, expr.given, tuple(sorted(vals.items())))
    if isinstance(expr, Product):
        return Product(tuple(substitute(f, mapping) for f in expr.factors))
    if isinstance(expr, Quotient):
        return Quotient(substitute(expr.num, mapping), substitute(expr.den, mapping))
    if isinstance(expr, SumOver):
        inner = {v: t for v, t in mapping.items() if v not in expr.over}
        return type(expr)(substitute(expr.body, inner), expr.over)
    return Substitute(expr, tuple(sorted(mapping.items())))


def _factors(e: Expr) -> list[Expr]:
    return list(e.factors) if isinstance(e, Product) else [e]


def _prod(fs: Iterable[Expr]) -> Expr:
    fs = list(fs)
    return fs[0] if len(fs) == 1 else Product(tuple(fs))


class _Simplifier:
    def __init__(self, rank: Mapping[str, int]):
        self.rank = rank

    def r(self, v):
        return self.rank.get(v, 1 << 30)

    def canon_cond(self, e: Cond) -> Cond:
        return Cond(
            tuple(sorted(e.head, key=self.r)),
            tuple(sorted(e.given, key=self.r)),
            tuple(sorted(e.values)),
        )

    def heads(self, e: Expr) -> set:
        if isinstance(e, Cond):
            return set(e.head)
        if isinstance(e, Joint):
            return set(e.vars)
        if isinstance(e, Product):
            return set().union(*(self.heads(f) for f in e.factors)) if e.factors else set()
        if isinstance(e, Quotient):
            return self.heads(e.num)
        if isinstance(e, SumOver):
            return self.heads(e.body) - set(e.over)
        if isinstance(e, Substitute):
            return self.heads(e.body)
        return set()

    def key(self, e: Expr):
        hs = self.heads(e)
        top = max((self.r(v) for v in hs), default=-1)
        return (-top, not isinstance(e, Cond), repr(e))

    def product(self, fs: list[Expr]) -> Expr:
        flat = []
        for f in fs:
            flat.extend(_factors(f))
        flat = [f for f in flat if f != ONE]
        nums, dens = [], []
        for f in flat:
            if isinstance(f, Quotient):
                nums.extend(_factors(f.num))
                dens.extend(_factors(f.den))
            else:
                nums.append(f)
        if dens:
            return self.quotient(_prod(nums) if nums else ONE, _prod(dens))
        nums.sort(key=self.key)
        return _prod(nums) if nums else ONE

    def quotient(self, num: Expr, den: Expr) -> Expr:
        # (n1/d1) / (n2/d2) = (n1 d2) / (d1 n2)
        n_f, d_f = [], []
        for part, same, other in ((num, n_f, d_f), (den, d_f, n_f)):
            for f in _factors(part):
                if isinstance(f, Quotient):
                    same.extend(_factors(f.num))
                    other.extend(_factors(f.den))
                elif f != ONE:
                    same.append(f)
        rest = []
        for f in d_f:
            if f in n_f:
                n_f.remove(f)
                continue
            j = self._marginalizes(n_f, f)
            if j is not None:
                n = n_f[j]
                n_f[j] = self.canon_cond(Cond(tuple(h for h in n.head if h not in f.head), n.given))
                continue
            i = self._conditions(n_f, f)
            if i is None:
                rest.append(f)
            else:
                n = n_f[i]
                n_f[i] = self.canon_cond(
                    Cond(tuple(h for h in n.head if h not in f.head), n.given + f.head, n.values)
                )
        n = self.product(n_f) if n_f else ONE
        if not rest:
            return n
        return Quotient(n, self.product(rest))

    def _conditions(self, nums: list, d: Expr):
        # p(H1,H2|G) / p(H1|G) = p(H2|G,H1)
        if not isinstance(d, Cond) or d.values:
            return None
        for i, n in enumerate(nums):
            if not isinstance(n, Cond) or n.values or not set(d.head) < set(n.head):
                continue
            if set(n.given) == set(d.given):
                return i
        return None

    def _marginalizes(self, nums: list, d: Expr):
        # p(H,K|G) / p(K|G,H) = p(H|G)
        if not isinstance(d, Cond) or d.values:
            return None
        for i, n in enumerate(nums):
            if not isinstance(n, Cond) or n.values or not set(d.head) < set(n.head):
                continue
            rest = set(n.head) - set(d.head)
            if set(d.given) == set(n.given) | rest:
                return i
        return None

    def sum_over(self, body: Expr, over) -> Expr:
        over = [v for v in over if v in body.free()]
        if not over:
            return body
        if isinstance(body, SumOver) and not set(body.over) & set(over):
            return self.sum_over(body.body, list(over) + list(body.over))
        if isinstance(body, Quotient):
            if not body.den.free() & set(over):
                return self.quotient(self.sum_over(body.num, over), body.den)
            return SumOver(body, tuple(sorted(over, key=self.r)))
        fs = _factors(body)
        changed = True
        while changed:
            changed = False
            for v in list(over):
                users = [i for i, f in enumerate(fs) if v in f.free()]
                if len(users) == 1:
                    f = fs[users[0]]
                    # a summed given variable used only here would lose its last user
                    stranded = any(
                        u in getattr(f, "given", ()) and [i for i, g in enumerate(fs) if u in g.free()] == users
                        for u in over
                    )
                    if isinstance(f, Cond) and v in f.head and v not in f.value_map() and not stranded:
                        head = tuple(h for h in f.head if h != v)
                        fs[users[0]] = Cond(head, f.given, f.values) if head else ONE
                        over.remove(v)
                        changed = True
                elif not users:
                    over.remove(v)
                    changed = True
        fs = [f for f in fs if f != ONE]
        inside = [f for f in fs if f.free() & set(over)]
        outside = [f for f in fs if not f.free() & set(over)]
        if not over:
            return self.product(fs)
        inner = SumOver(self.product(inside), tuple(sorted(over, key=self.r)))
        return self.product(outside + [inner]) if outside else inner

    def run(self, e: Expr) -> Expr:
        if isinstance(e, Joint):
            return self.canon_cond(Cond(e.vars, ()))
        if isinstance(e, Cond):
            return self.canon_cond(e)
        if isinstance(e, Product):
            return self.product([self.run(f) for f in e.factors])
        if isinstance(e, Quotient):
            return self.quotient(self.run(e.num), self.run(e.den))
        if isinstance(e, SumOver):
            return self.sum_over(self.run(e.body), list(e.over))
        if isinstance(e, Substitute):
            inner = self.run(e.body)
            pushed = substitute(inner, dict(e.mapping))
            return pushed if pushed is not e and not isinstance(pushed, Substitute) else Substitute(inner, e.mapping)
        return e

    def merge_chains(self, e: Expr) -> Expr:
        """``p(H1|G) p(H2|G,H1)`` becomes ``p(H1,H2|G)``."""
        if isinstance(e, Product):
            fs = [self.merge_chains(f) for f in e.factors]
            merged = True
            while merged:
                merged = False
                for i, f in enumerate(fs):
                    for j, h in enumerate(fs):
                        if i == j or not (isinstance(f, Cond) and isinstance(h, Cond)):
                            continue
                        m = self._merge(f, h)
                        if m is not None:
                            fs = [x for k, x in enumerate(fs) if k not in (i, j)] + [m]
                            merged = True
                            break
                    if merged:
                        break
            return self.product(fs)
        if isinstance(e, Quotient):
            return Quotient(self.merge_chains(e.num), self.merge_chains(e.den))
        if isinstance(e, SumOver):
            return SumOver(self.merge_chains(e.body), e.over)
        return e

    def _merge(self, f: Cond, h: Cond):
        fv, hv = f.value_map(), h.value_map()
        if any(v in fv for v in f.head) or any(v in hv for v in h.head):
            return None
        f_given = {(v, fv.get(v)) for v in f.given}
        h_given = {(v, hv.get(v)) for v in h.given}
        if h_given != f_given | {(v, None) for v in f.head}:
            return None
        vals = tuple(sorted((v, t) for v, t in fv.items()))
        return self.canon_cond(Cond(f.head + h.head, f.given, vals))


def simplify(expr: Expr, rank: Mapping[str, int] | None = None) -> Expr:
    """Algebraic clean-up for display.

    Sums over a variable that is the head of exactly one conditional are
    eliminated, factors free of the summed variables are pulled out of sums,
    common factors of a quotient cancel, and chains of conditionals merge.
    """
    s = _Simplifier(rank or {})
    prev = None
    cur = expr
    while cur != prev:
        prev, cur = cur, s.run(cur)
    cur = s.merge_chains(cur)
    prev = None
    while cur != prev:
        prev, cur = cur, s.run(cur)
    return cur
