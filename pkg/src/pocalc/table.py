"""Dense probability tables with named axes."""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

__all__ = ["Table", "DistTable"]


class Table:
    """A numpy array whose axes are named by variables.

    Cells that came from a zero-probability conditioning event hold NaN and
    count as undefined.
    """

    __slots__ = ("vars", "data")

    def __init__(self, vars: Iterable[str], data):
        self.vars = tuple(vars)
        self.data = np.asarray(data, dtype=float)
        if self.data.ndim != len(self.vars):
            raise ValueError(f"{len(self.vars)} variables but array has {self.data.ndim} axes")
        if len(set(self.vars)) != len(self.vars):
            raise ValueError("duplicate axis names")

    @classmethod
    def scalar(cls, x: float) -> "Table":
        return cls((), np.asarray(x, dtype=float))

    @property
    def cards(self) -> dict[str, int]:
        return dict(zip(self.vars, self.data.shape))

    def __repr__(self):
        return f"Table({self.vars}, shape={self.data.shape})"

    # -- axis manipulation ----------------------------------------------------------

    def transpose(self, vars: Iterable[str]) -> "Table":
        vars = tuple(vars)
        if set(vars) != set(self.vars):
            raise ValueError(f"cannot reorder {self.vars} as {vars}")
        return Table(vars, np.transpose(self.data, [self.vars.index(v) for v in vars]))

    def _expand(self, vars: tuple, cards: Mapping[str, int]) -> np.ndarray:
        # view of the data broadcastable against an array with axes ``vars``
        own = [v for v in vars if v in self.vars]
        arr = np.transpose(self.data, [self.vars.index(v) for v in own])
        shape = [cards[v] if v in self.vars else 1 for v in vars]
        return arr.reshape(shape)

    def _binary(self, other: "Table", op) -> "Table":
        vars = self.vars + tuple(v for v in other.vars if v not in self.vars)
        cards = {**other.cards, **self.cards}
        for v in set(self.vars) & set(other.vars):
            if self.cards[v] != other.cards[v]:
                raise ValueError(f"cardinality mismatch on {v}")
        return Table(vars, op(self._expand(vars, cards), other._expand(vars, cards)))

    def __mul__(self, other: "Table") -> "Table":
        return self._binary(other, np.multiply)

    def __truediv__(self, other: "Table") -> "Table":
        def div(x, y):
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.divide(x, y)
            return np.where(np.broadcast_to(y, out.shape) == 0, np.nan, out)

        return self._binary(other, div)

    def sum_out(self, vars: Iterable[str]) -> "Table":
        drop = [v for v in vars if v in self.vars]
        if not drop:
            return self
        axes = tuple(self.vars.index(v) for v in drop)
        return Table([v for v in self.vars if v not in drop], self.data.sum(axis=axes))

    def marginal(self, keep: Iterable[str]) -> "Table":
        keep = set(keep)
        return self.sum_out([v for v in self.vars if v not in keep])

    def select(self, assignment: Mapping[str, int]) -> "Table":
        """Fix some axes to given indices, dropping them."""
        idx = []
        for v in self.vars:
            if v in assignment:
                k = int(assignment[v])
                if not 0 <= k < self.cards[v]:
                    raise IndexError(f"value {k} out of range for {v}")
                idx.append(k)
            else:
                idx.append(slice(None))
        return Table([v for v in self.vars if v not in assignment], self.data[tuple(idx)])

    def conditional(self, given: Iterable[str]) -> "Table":
        """``p(rest | given)`` with the same axes."""
        return self / self.marginal(given)

    def normalize(self) -> "Table":
        return Table(self.vars, self.data / self.data.sum())

    # -- comparison -------------------------------------------------------------------

    def max_abs_diff(self, other: "Table") -> float:
        """Largest deviation over cells defined in both tables."""
        if set(self.vars) != set(other.vars):
            raise ValueError(f"axis mismatch: {self.vars} vs {other.vars}")
        a = self.data
        b = other.transpose(self.vars).data
        ok = ~(np.isnan(a) | np.isnan(b))
        if not ok.any():
            return 0.0
        return float(np.max(np.abs(a[ok] - b[ok])))

    def allclose(self, other: "Table", atol: float = 1e-9) -> bool:
        return self.max_abs_diff(other) <= atol

    def total_variation(self, other: "Table") -> float:
        return 0.5 * float(np.abs(self.data - other.transpose(self.vars).data).sum())

    def to_dict(self) -> dict:
        return {
            "variables": list(self.vars),
            "shape": list(self.data.shape),
            "values": [None if np.isnan(x) else float(x) for x in self.data.ravel()],
        }


DistTable = Table
