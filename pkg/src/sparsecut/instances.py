"""Instance constructions: the mixing reduction and gap-instance generators.

The mixing reduction replaces the demand graph by a convex combination of
the normalized cost and demand graphs.  A cut that is sparse for the mixed
instance unmixes to a cut that is eps/delta-sparse for the original one,
which turns any fixed-threshold solver into a multiplicative approximation.

The generators produce the two families on which single relaxations fail:
an expander-vs-clique pair (Leighton-Rao gap) and a lollipop pair --- an
expander with a pendant path, demand clique on the expander plus the far
path endpoint --- whose spectral value decays like 1/k while the true
sparsest cut stays bounded away from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import SolverError, ValidationError
from .graphs import (Cut, InstancePair, WeightedGraph, brute_force_opt, cut_weight,
                     sparsity)

EXPANDER_GAP_MIN = 0.1
_EXPANDER_BUDGET = 64


@dataclass(frozen=True)
class MixParams:
    """Target sparsity guess eps and mixing threshold delta."""

    eps: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.eps <= self.delta <= 1.0):
            raise ValidationError(
                f"mix parameters must satisfy 0 < eps <= delta <= 1, got {self.eps!r}, {self.delta!r}")


@dataclass(frozen=True)
class UnmixReport:
    sigma_mixed: float
    sigma_original: float
    threshold: float  # eps / delta
    antecedent: bool  # sigma_mixed <= 1/2
    holds: bool


@dataclass(frozen=True)
class SdpGapReport:
    opt_original: float
    sdp_original: float
    opt_mixed: float
    sdp_mixed: float


@dataclass(frozen=True)
class GeneratorSpec:
    """CLI-facing description of one generator invocation."""

    kind: str  # "lollipop" | "expander_clique" | "random"
    seed: int
    k: int | None = None
    n: int | None = None
    d: int | None = None
    density: float | None = None
    rank1: bool = False

    def generate(self):
        if self.kind == "lollipop":
            return gen_lollipop(self.k, self.seed)
        if self.kind == "expander_clique":
            return gen_expander_clique(self.n, self.d, self.seed), None
        if self.kind == "random":
            return gen_random(self.n, self.density, self.rank1, self.seed), None
        raise ValidationError(f"unknown generator kind {self.kind!r}")


# ---------------------------------------------------------------------------
# mixing
# ---------------------------------------------------------------------------

def mix_instance(pair: InstancePair, p: MixParams) -> InstancePair:
    """Return (gbar, (1 - eps/delta) gbar + (eps/delta) hbar), both of total 1.

    If the original optimum is at most eps, the mixed optimum is at most
    delta; mixing with eps = delta reproduces the normalized original.
    """
    a = p.eps / p.delta
    g_new = WeightedGraph(pair.g.nbar.copy())
    h_new = WeightedGraph((1.0 - a) * pair.g.nbar + a * pair.h.nbar)
    return InstancePair(g_new, h_new)


def unmix_cut_check(pair: InstancePair, p: MixParams, cut: Cut,
                    tol: float = 1e-9) -> UnmixReport:
    """Check: mixed sparsity <= 1/2 implies original sparsity <= eps/delta."""
    mixed = mix_instance(pair, p)
    sigma_mixed = sparsity(mixed, cut).sigma
    sigma_orig = sparsity(pair, cut).sigma
    threshold = p.eps / p.delta
    antecedent = sigma_mixed <= 0.5
    holds = (not antecedent) or (sigma_orig <= threshold + tol)
    return UnmixReport(sigma_mixed=sigma_mixed, sigma_original=sigma_orig,
                       threshold=threshold, antecedent=antecedent, holds=holds)


def sdp_gap_mix(pair: InstancePair, p: MixParams, oracle_tol: float = 1e-9):
    """Mix at eps = optimum and report measured optima and relaxation values.

    The caller must set eps to the instance's oracle optimum (checked); the
    report contains the measured numbers for both instances, not the
    asymptotic amplification claim.
    """
    from .relaxations import solve_goemans_linial

    _, rep = brute_force_opt(pair)
    if abs(rep.sigma - p.eps) > oracle_tol:
        raise ValidationError(
            f"eps {p.eps!r} must equal the oracle optimum {rep.sigma!r}")
    mixed = mix_instance(pair, p)
    _, rep_mixed = brute_force_opt(mixed)
    sdp_orig = solve_goemans_linial(pair).value
    sdp_mixed = solve_goemans_linial(mixed).value
    report = SdpGapReport(opt_original=rep.sigma, sdp_original=sdp_orig,
                          opt_mixed=rep_mixed.sigma, sdp_mixed=sdp_mixed)
    return mixed, report


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _normalized_lap_gap(adj: np.ndarray, d: int) -> float:
    lap = np.eye(adj.shape[0]) - adj / d
    return float(np.linalg.eigvalsh(lap)[1])


def _certified_regular_adj(n: int, d: int, seed: int,
                           gap_min: float = EXPANDER_GAP_MIN) -> np.ndarray:
    """Random d-regular adjacency with normalized spectral gap >= gap_min."""
    if d >= n or d < 3:
        raise ValidationError(f"degree {d} infeasible for {n} vertices")
    if (n * d) % 2 != 0:
        raise ValidationError(f"no {d}-regular graph on {n} vertices (parity)")
    for attempt in range(_EXPANDER_BUDGET):
        graph = nx.random_regular_graph(d, n, seed=seed + 7919 * attempt)
        adj = nx.to_numpy_array(graph)
        if _normalized_lap_gap(adj, d) >= gap_min:
            return adj
    raise SolverError(
        f"no certified expander after {_EXPANDER_BUDGET} samples (n={n}, d={d})")


def _clique_with_loops(n: int, members) -> WeightedGraph:
    w = np.zeros((n, n))
    idx = np.array(sorted(members), dtype=int)
    w[np.ix_(idx, idx)] = 1.0
    return WeightedGraph(w)


def gen_lollipop(k: int, seed: int):
    """Expander with a pendant length-k path; demand clique spans the
    expander plus the far path endpoint.

    Vertices 0..k are the path (vertex k belongs to the expander side),
    vertices k..2k-1 the expander: complete for k <= 8, certified random
    regular (degree 3, or 4 when 3k is odd) beyond.  Returns the pair and
    the explicit low-cost spectral witness x_j = min(j/k, 1).
    """
    if k < 2:
        raise ValidationError("lollipop parameter k must be at least 2")
    n = 2 * k
    w = np.zeros((n, n))
    if k <= 8:
        w[k:, k:] = 1.0
        w[np.arange(k, n), np.arange(k, n)] = 0.0
    else:
        d = 3 if (3 * k) % 2 == 0 else 4
        w[k:, k:] = _certified_regular_adj(k, d, seed)
    for i in range(k):
        w[i, i + 1] = w[i + 1, i] = 1.0
    g = WeightedGraph(w)
    h = _clique_with_loops(n, [0] + list(range(k, n)))
    witness = np.minimum(np.arange(n) / k, 1.0)
    return InstancePair(g, h), witness


def gen_expander_clique(n: int, d: int, seed: int,
                        gap_min: float = EXPANDER_GAP_MIN) -> InstancePair:
    """Certified d-regular expander versus the uniform clique with self-loops."""
    adj = _certified_regular_adj(n, d, seed, gap_min)
    return InstancePair(WeightedGraph(adj), _clique_with_loops(n, range(n)))


def gen_random(n: int, density: float, rank1: bool, seed: int) -> InstancePair:
    """Random connected weighted cost graph with a random (or rank-1) demand.

    The cost graph is a random spanning tree plus density-sampled extra
    edges, weights uniform in [0.5, 1.5).  Rank-1 demands are scaled outer
    products of a Dirichlet measure; general demands are density-sampled
    with at least one off-diagonal edge forced.
    """
    if n < 2:
        raise ValidationError("need at least two vertices")
    if not (0.0 < density <= 1.0):
        raise ValidationError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    w = np.zeros((n, n))
    perm = rng.permutation(n)
    for i in range(1, n):
        u = int(perm[i])
        v = int(perm[rng.integers(0, i)])
        w[u, v] = w[v, u] = rng.uniform(0.5, 1.5)
    for u in range(n):
        for v in range(u + 1, n):
            if w[u, v] == 0.0 and rng.random() < density:
                w[u, v] = w[v, u] = rng.uniform(0.5, 1.5)
    g = WeightedGraph(w)
    if rank1:
        mu = rng.dirichlet(np.ones(n))
        h = WeightedGraph(np.outer(mu, mu) * n * n)
    else:
        hw = np.zeros((n, n))
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < density:
                    hw[u, v] = hw[v, u] = rng.uniform(0.5, 1.5)
        if hw.sum() == 0.0:
            u, v = sorted(rng.choice(n, size=2, replace=False).tolist())
            hw[u, v] = hw[v, u] = 1.0
        h = WeightedGraph(hw)
    return InstancePair(g, h)
