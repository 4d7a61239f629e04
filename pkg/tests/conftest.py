"""Shared instances and independent test-side oracles."""

import itertools

import numpy as np
import pytest

from sparsecut import Cut, InstancePair, WeightedGraph, cut_weight, parse_instance


def make_pair(gw, hw) -> InstancePair:
    return InstancePair(WeightedGraph(np.asarray(gw, dtype=float)),
                        WeightedGraph(np.asarray(hw, dtype=float)))


def path_edge_pair() -> InstancePair:
    """Unit path 0-1-2 against the single demand edge (0, 2)."""
    return parse_instance("n 3\ng 0 1 1\ng 1 2 1\nh 0 2 1\n")


def c4_uniform_pair() -> InstancePair:
    """Unit 4-cycle against the uniform clique with self-loops."""
    g = np.zeros((4, 4))
    for u, v in ((0, 1), (1, 2), (2, 3), (3, 0)):
        g[u, v] = g[v, u] = 1.0
    return make_pair(g, np.ones((4, 4)))


def single_edge_pair() -> InstancePair:
    return parse_instance("n 2\ng 0 1 1\nh 0 1 1\n")


def iter_nontrivial_cuts(n):
    """Every partition once, represented by the side containing vertex 0."""
    rest = list(range(1, n))
    for r in range(0, n - 1):
        for extra in itertools.combinations(rest, r):
            yield Cut(frozenset((0,) + extra), n)


def slow_sparsest(pair) -> tuple:
    """Pure-loop sparsest cut oracle, independent of the library enumeration."""
    best_sigma, best_members = None, None
    n = pair.n
    for cut in iter_nontrivial_cuts(n):
        num = 0.0
        den = 0.0
        ind = cut.indicator()
        for u in range(n):
            for v in range(n):
                crossing = abs(ind[u] - ind[v])
                num += pair.g.nbar[u, v] * crossing
                den += pair.h.nbar[u, v] * crossing
        if den > 0:
            sigma = num / den
            members = cut.sorted_members
            if best_sigma is None or sigma < best_sigma or \
                    (sigma == best_sigma and members < best_members):
                best_sigma, best_members = sigma, members
    return best_sigma, best_members


def brute_min_st_cut(g: WeightedGraph, s: int, t: int) -> float:
    """Minimum normalized s-t cut capacity by subset enumeration."""
    n = g.n
    others = [v for v in range(n) if v not in (s, t)]
    best = None
    for r in range(len(others) + 1):
        for extra in itertools.combinations(others, r):
            cut = Cut(frozenset((s,) + extra), n)
            cap = cut_weight(g, cut)
            if best is None or cap < best:
                best = cap
    return best


@pytest.fixture
def path_edge():
    return path_edge_pair()


@pytest.fixture
def c4_uniform():
    return c4_uniform_pair()


@pytest.fixture
def single_edge():
    return single_edge_pair()
