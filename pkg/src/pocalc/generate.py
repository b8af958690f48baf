"""Random graphs for property tests and benchmarks."""

from __future__ import annotations

import random

from .graph import MixedGraph

__all__ = ["vertex_names", "random_admg", "random_hidden_dag"]


def vertex_names(n: int) -> list[str]:
    return [f"V{i}" for i in range(n)]


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def random_admg(seed, n: int | None = None, p_dir: float = 0.4, p_bi: float = 0.25, max_n: int = 7) -> MixedGraph:
    """ADMG on ``n`` vertices (drawn from 2..max_n when omitted) with edges along a random order."""
    rng = _rng(seed)
    n = n if n is not None else rng.randint(2, max_n)
    names = vertex_names(n)
    order = names[:]
    rng.shuffle(order)
    directed, bidirected = set(), set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p_dir:
                directed.add((order[i], order[j]))
            if rng.random() < p_bi:
                bidirected.add(tuple(sorted((order[i], order[j]))))
    return MixedGraph(random=tuple(names), directed=frozenset(directed), bidirected=frozenset(bidirected))


def random_hidden_dag(
    seed, n_obs: int | None = None, n_hidden: int | None = None, p_dir: float = 0.4, max_n: int = 6
) -> MixedGraph:
    """DAG whose hidden vertices are roots with two or more observed children."""
    rng = _rng(seed)
    n_obs = n_obs if n_obs is not None else rng.randint(2, max_n)
    n_hidden = n_hidden if n_hidden is not None else rng.randint(0, 3)
    obs = vertex_names(n_obs)
    order = obs[:]
    rng.shuffle(order)
    directed = set()
    for i in range(n_obs):
        for j in range(i + 1, n_obs):
            if rng.random() < p_dir:
                directed.add((order[i], order[j]))
    hidden = []
    for k in range(n_hidden):
        if n_obs < 2:
            break
        h = f"H{k}"
        hidden.append(h)
        kids = rng.sample(obs, rng.randint(2, min(3, n_obs)))
        directed.update((h, c) for c in kids)
    return MixedGraph(
        random=tuple(hidden + obs),
        directed=frozenset(directed),
        hidden=frozenset(hidden),
    )
