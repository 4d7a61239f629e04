"""Weighted graph pairs, cut sparsity, and desk-scale exhaustive oracles.

Conventions used throughout the package:

* Weights live in a full symmetric matrix ``w`` whose diagonal stores
  self-loop weights.  Every pair sum runs over *ordered* pairs, so the
  total weight ``w.sum()`` counts each undirected edge twice and each
  self-loop once.
* ``wbar = w / w.sum()`` is a probability distribution over ordered
  vertex pairs.  Cut masses, sparsities and Laplacian quadratic forms
  are all stated in terms of ``wbar``.
* The normalized cut mass of a vertex set S is
  ``sum_{u,v} wbar(u,v) * |1_S(u) - 1_S(v)|``; self-loops never cross.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InstanceFormatError, ValidationError

RANK1_TOL = 1e-9
ORACLE_MAX_N = 24
ORACLE_EXTENDED_MAX_N = 32

_ENUM_CHUNK = 1 << 18


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric nonnegative weight matrix with ordered-pair totals."""

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValidationError(f"weight matrix must be square, got shape {w.shape}")
        if not np.isfinite(w).all():
            raise ValidationError("weight matrix contains non-finite entries")
        if (w < 0).any():
            raise ValidationError("negative weight in graph")
        if not np.array_equal(w, w.T):
            raise ValidationError("weight matrix must be symmetric")
        if w.sum() <= 0:
            raise ValidationError("zero total weight")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @cached_property
    def total(self) -> float:
        """Ordered-pair total: every edge twice, every self-loop once."""
        return float(self.w.sum())

    @cached_property
    def nbar(self) -> np.ndarray:
        """Normalized weights, a probability distribution over ordered pairs."""
        nb = self.w / self.total
        nb.setflags(write=False)
        return nb

    @cached_property
    def offdiag(self) -> np.ndarray:
        off = self.w.copy()
        np.fill_diagonal(off, 0.0)
        off.setflags(write=False)
        return off

    def degrees(self) -> np.ndarray:
        """Weighted degrees (row sums, self-loops counted once)."""
        return self.w.sum(axis=1)


@dataclass(frozen=True, eq=False)
class InstancePair:
    """A (G, H) instance: G carries the cut cost, H the demand."""

    g: WeightedGraph
    h: WeightedGraph

    def __post_init__(self):
        if self.g.n != self.h.n:
            raise ValidationError(f"graph sizes differ: {self.g.n} vs {self.h.n}")

    @property
    def n(self) -> int:
        return self.g.n


@dataclass(frozen=True)
class Cut:
    """A vertex subset with indicator semantics."""

    members: frozenset
    n: int

    def __post_init__(self):
        members = frozenset(int(v) for v in self.members)
        if any(v < 0 or v >= self.n for v in members):
            raise ValidationError("cut member out of range")
        object.__setattr__(self, "members", members)

    @property
    def sorted_members(self) -> tuple:
        return tuple(sorted(self.members))

    @property
    def is_nontrivial(self) -> bool:
        return 0 < len(self.members) < self.n

    def indicator(self) -> np.ndarray:
        s = np.zeros(self.n)
        if self.members:
            s[list(self.members)] = 1.0
        return s

    def complement(self) -> "Cut":
        return Cut(frozenset(range(self.n)) - self.members, self.n)

    def canonical_members(self) -> tuple:
        """Sorted members of the side containing vertex 0 (partition representative)."""
        side = self.members if 0 in self.members else frozenset(range(self.n)) - self.members
        return tuple(sorted(side))

    def same_partition(self, other: "Cut") -> bool:
        return self.n == other.n and self.canonical_members() == other.canonical_members()


@dataclass(frozen=True)
class SparsityReport:
    """Sparsity of one cut plus the classical per-cut quantities."""

    sigma: float
    g_cut: float
    h_cut: float
    h_const: float
    cond: float


@dataclass(frozen=True, eq=False)
class Rank1Measure:
    """Probability measure mu with hbar(u,v) = mu(u)mu(v), and f = sqrt(H_tot)*mu."""

    mu: np.ndarray
    f: np.ndarray
    residual: float


# ---------------------------------------------------------------------------
# instance file format
# ---------------------------------------------------------------------------

def parse_instance(text: str) -> InstancePair:
    """Parse the line-oriented ``graphpair v1`` format into an InstancePair.

    The header line is optional on input (writers always emit it); '#' starts
    a comment; each unordered pair may be listed once per section and is
    symmetrized.
    """
    n = None
    entries = {"g": {}, "h": {}}
    header_seen = False
    body_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "graphpair":
            if body_seen or header_seen:
                raise InstanceFormatError(f"malformed line {lineno}: stray header")
            if tok[1:] != ["v1"]:
                raise InstanceFormatError(f"unsupported format version on line {lineno}: {line!r}")
            header_seen = True
            continue
        body_seen = True
        if tok[0] == "n":
            if n is not None:
                raise InstanceFormatError(f"malformed line {lineno}: duplicate n")
            if len(tok) != 2:
                raise InstanceFormatError(f"malformed line {lineno}: expected 'n <N>'")
            try:
                n = int(tok[1])
            except ValueError:
                raise InstanceFormatError(f"malformed line {lineno}: bad vertex count {tok[1]!r}")
            if n <= 0:
                raise InstanceFormatError(f"malformed line {lineno}: vertex count must be positive")
        elif tok[0] in ("g", "h"):
            if n is None:
                raise InstanceFormatError(f"malformed line {lineno}: edge before 'n' line")
            if len(tok) != 4:
                raise InstanceFormatError(f"malformed line {lineno}: expected '{tok[0]} <u> <v> <w>'")
            try:
                u, v = int(tok[1]), int(tok[2])
                wt = float(tok[3])
            except ValueError:
                raise InstanceFormatError(f"malformed line {lineno}: {line!r}")
            if u < 0 or v < 0 or u >= n or v >= n:
                raise InstanceFormatError(f"line {lineno}: vertex index out of range (n={n})")
            if not math.isfinite(wt):
                raise InstanceFormatError(f"line {lineno}: non-finite weight")
            if wt < 0:
                raise InstanceFormatError(f"line {lineno}: negative weight")
            key = (min(u, v), max(u, v))
            if key in entries[tok[0]]:
                raise InstanceFormatError(f"line {lineno}: duplicate {tok[0]}-edge {key}")
            entries[tok[0]][key] = wt
        else:
            raise InstanceFormatError(f"malformed line {lineno}: {line!r}")
    if n is None:
        raise InstanceFormatError("malformed input: missing 'n' line")
    if not entries["h"]:
        raise InstanceFormatError("empty demand graph (no h-lines)")
    if not entries["g"]:
        raise InstanceFormatError("empty cost graph (no g-lines)")
    mats = {}
    for name, edge_map in entries.items():
        w = np.zeros((n, n))
        for (u, v), wt in edge_map.items():
            w[u, v] = wt
            w[v, u] = wt
        if w.sum() <= 0:
            raise InstanceFormatError(f"zero total weight in {name}-graph")
        mats[name] = WeightedGraph(w)
    return InstancePair(mats["g"], mats["h"])


def format_instance(pair: InstancePair) -> str:
    """Serialize a pair in the graphpair v1 format, edges sorted by (u, v)."""
    lines = ["graphpair v1", f"n {pair.n}"]
    for name, graph in (("g", pair.g), ("h", pair.h)):
        for u in range(pair.n):
            for v in range(u, pair.n):
                wt = float(graph.w[u, v])
                if wt != 0.0:
                    lines.append(f"{name} {u} {v} {wt!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# cut quantities
# ---------------------------------------------------------------------------

def cut_weight(g: WeightedGraph, s: Cut) -> float:
    """Normalized cut mass: (1/total) * sum over ordered pairs crossing S."""
    ind = s.indicator()
    return 2.0 * float(ind @ g.offdiag @ (1.0 - ind)) / g.total


def boundary_weight(g: WeightedGraph, s: Cut) -> float:
    """Raw one-directional cut weight: sum_{u in S, v not in S} w(u, v)."""
    ind = s.indicator()
    return float(ind @ g.offdiag @ (1.0 - ind))


def sparsity(pair: InstancePair, s: Cut) -> SparsityReport:
    """Sparsity sigma = gbar(S) / hbar(S); +inf sentinel when hbar(S) = 0.

    Also reports the per-cut Cheeger value (average-degree normalization)
    and conductance (volume normalization) of the cost graph.
    """
    g_cut = cut_weight(pair.g, s)
    h_cut = cut_weight(pair.h, s)
    sigma = g_cut / h_cut if h_cut > 0 else math.inf
    raw = boundary_weight(pair.g, s)
    k = len(s.members)
    small = min(k, pair.n - k)
    dbar = pair.g.total / pair.n
    h_const = raw / (dbar * small) if small > 0 else math.inf
    deg = pair.g.degrees()
    ind = s.indicator()
    vol = min(float(deg @ ind), float(deg @ (1.0 - ind)))
    cond = raw / vol if vol > 0 else math.inf
    return SparsityReport(sigma=sigma, g_cut=g_cut, h_cut=h_cut, h_const=h_const, cond=cond)


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Laplacian of the normalized graph under the ordered-pair convention.

    Satisfies x' L x = sum over ordered pairs of nbar(u,v) (x_u - x_v)^2,
    which is twice the classical Laplacian form of nbar; self-loops drop out.
    """
    off = g.nbar.copy()
    np.fill_diagonal(off, 0.0)
    return 2.0 * (np.diag(off.sum(axis=1)) - off)


# ---------------------------------------------------------------------------
# rank-1 demand graphs
# ---------------------------------------------------------------------------

def rank1_decompose(h: WeightedGraph, tol: float = RANK1_TOL):
    """Try to factor hbar as an outer product mu x mu of a probability vector.

    mu is the row-marginal of hbar.  Succeeds when the worst entry deviation
    between hbar and mu x mu is at most ``tol`` relative to hbar's largest
    entry; returns None otherwise so callers can branch without try/except.
    """
    hbar = h.nbar
    mu = hbar.sum(axis=1)
    residual = float(np.abs(hbar - np.outer(mu, mu)).max())
    if residual > tol * float(hbar.max()):
        return None
    f = math.sqrt(h.total) * mu
    return Rank1Measure(mu=mu, f=f, residual=residual)


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------

def _indicator_chunks(n: int):
    """Yield (indices, indicators) for all subsets containing vertex 0.

    Index i encodes members {0} + {b+1 : bit b of i set}; the last index
    (all bits set) is the full vertex set and must be filtered by callers.
    """
    total = 1 << (n - 1)
    bits = np.arange(n - 1)
    for base in range(0, total, _ENUM_CHUNK):
        m = min(_ENUM_CHUNK, total - base)
        idx = np.arange(base, base + m, dtype=np.int64)
        s = np.ones((m, n))
        s[:, 1:] = (idx[:, None] >> bits[None, :]) & 1
        yield idx, s


def _members_from_index(idx: int, n: int) -> tuple:
    return (0,) + tuple(b + 1 for b in range(n - 1) if (idx >> b) & 1)


def _argmin_lex(values: np.ndarray, idx: np.ndarray, n: int, best):
    """Fold a chunk of cut values into the running (value, members) best.

    Ties on the exact float value are broken by the lexicographically
    smallest sorted member tuple.
    """
    pos = int(np.argmin(values))
    vmin = float(values[pos])
    if not math.isfinite(vmin):
        return best
    if best is None or vmin < best[0]:
        best = (vmin, None)
        tie_idx = idx[values == vmin]
        return (vmin, min(_members_from_index(int(i), n) for i in tie_idx))
    if vmin == best[0]:
        tie_idx = idx[values == vmin]
        cand = min(_members_from_index(int(i), n) for i in tie_idx)
        if cand < best[1]:
            best = (vmin, cand)
    return best


def brute_force_opt(pair: InstancePair, max_n: int = ORACLE_MAX_N):
    """Minimize sparsity over all nontrivial cuts with positive demand mass.

    Exact enumeration of the 2^(n-1) cut sides containing vertex 0; ties go
    to the lexicographically smallest member set.  The default guard stops at
    n = 24.  Raising ``max_n`` (up to 32) switches to a Gray-code scan whose
    tie-break is first-hit in scan order and whose running sums carry ~1e-12
    relative drift; the sparsity of the returned cut is always recomputed
    exactly.
    """
    n = pair.n
    if max_n > ORACLE_EXTENDED_MAX_N:
        raise ValidationError(f"oracle guard cannot exceed n={ORACLE_EXTENDED_MAX_N}")
    if n > max_n:
        raise ValidationError(f"instance too large for oracle (n={n} > {max_n})")
    if n < 2:
        raise ValidationError("need at least two vertices")
    if n <= ORACLE_MAX_N:
        members = _scan_numpy(pair)
    else:
        members = _scan_gray(pair)
    cut = Cut(frozenset(members), n)
    return cut, sparsity(pair, cut)


def _scan_numpy(pair: InstancePair) -> tuple:
    n = pair.n
    gb = pair.g.offdiag / pair.g.total
    hb = pair.h.offdiag / pair.h.total
    full = (1 << (n - 1)) - 1
    best = None
    for idx, s in _indicator_chunks(n):
        comp = 1.0 - s
        g_mass = 2.0 * np.einsum("ij,ij->i", s @ gb, comp)
        h_mass = 2.0 * np.einsum("ij,ij->i", s @ hb, comp)
        vals = np.where(h_mass > 0.0, g_mass / np.where(h_mass > 0.0, h_mass, 1.0), np.inf)
        vals[idx == full] = np.inf
        best = _argmin_lex(vals, idx, n, best)
    if best is None:
        raise ValidationError("no nontrivial cut with positive demand mass")
    return best[1]


def _csr_neighbors(wbar_off: np.ndarray):
    n = wbar_off.shape[0]
    idx, off, wts = [], [0], []
    for v in range(n):
        nz = np.nonzero(wbar_off[v])[0]
        idx.extend(int(u) for u in nz)
        wts.extend(float(x) for x in wbar_off[v, nz])
        off.append(len(idx))
    return (np.array(idx, dtype=np.int64), np.array(off, dtype=np.int64),
            np.array(wts, dtype=np.float64))


_GRAY_SCAN = None


def _gray_scan_kernel():
    """Compile (once) the Gray-code subset scan used for 24 < n <= 32."""
    global _GRAY_SCAN
    if _GRAY_SCAN is not None:
        return _GRAY_SCAN
    from numba import njit

    @njit(cache=True)
    def scan(gi, go, gw, hi, ho, hw, mu, use_mu, n):
        s = np.zeros(n, np.uint8)
        s[0] = 1
        g_cross = 0.0
        for j in range(go[0], go[1]):
            g_cross += 2.0 * gw[j]
        mu_s = mu[0]
        h_cross = 0.0
        if use_mu:
            h_cross = 2.0 * mu_s * (1.0 - mu_s)
        else:
            for j in range(ho[0], ho[1]):
                h_cross += 2.0 * hw[j]
        one = np.uint64(1)
        mask = one
        full = np.uint64((1 << n) - 1) if n < 64 else ~np.uint64(0)
        best = np.inf
        best_mask = mask
        if h_cross > 1e-15 and mask != full:
            best = g_cross / h_cross
        for it in range(1, 1 << (n - 1)):
            x = it
            b = 0
            while (x >> b) & 1 == 0:
                b += 1
            v = b + 1
            newval = 1 - s[v]
            sign = 1.0 if newval == 1 else -1.0
            for j in range(go[v], go[v + 1]):
                u = gi[j]
                if s[u] == 1:
                    g_cross -= sign * 2.0 * gw[j]
                else:
                    g_cross += sign * 2.0 * gw[j]
            if use_mu:
                mu_s += sign * mu[v]
                h_cross = 2.0 * mu_s * (1.0 - mu_s)
            else:
                for j in range(ho[v], ho[v + 1]):
                    u = hi[j]
                    if s[u] == 1:
                        h_cross -= sign * 2.0 * hw[j]
                    else:
                        h_cross += sign * 2.0 * hw[j]
            s[v] = newval
            mask ^= one << np.uint64(v)
            if mask != full and h_cross > 1e-15:
                val = g_cross / h_cross
                if val < best:
                    best = val
                    best_mask = mask
        return best, best_mask

    _GRAY_SCAN = scan
    return scan


def _scan_gray(pair: InstancePair) -> tuple:
    n = pair.n
    gi, go, gw = _csr_neighbors(pair.g.offdiag / pair.g.total)
    r1 = rank1_decompose(pair.h)
    if r1 is not None:
        hi = np.zeros(0, dtype=np.int64)
        ho = np.zeros(n + 1, dtype=np.int64)
        hw = np.zeros(0)
        mu = np.ascontiguousarray(r1.mu)
        use_mu = True
    else:
        hi, ho, hw = _csr_neighbors(pair.h.offdiag / pair.h.total)
        mu = np.zeros(n)
        use_mu = False
    scan = _gray_scan_kernel()
    best, mask = scan(gi, go, gw, hi, ho, hw, mu, use_mu, n)
    if not math.isfinite(best):
        raise ValidationError("no nontrivial cut with positive demand mass")
    return tuple(v for v in range(n) if (int(mask) >> v) & 1)


# ---------------------------------------------------------------------------
# Cheeger constant and conductance
# ---------------------------------------------------------------------------

def _classical_min(g: WeightedGraph, denom_of, heuristic: bool, max_n: int):
    n = g.n
    if not heuristic:
        if n > max_n:
            raise ValidationError(f"graph too large for exhaustive mode (n={n} > {max_n})")
        best = None
        for idx, s in _indicator_chunks(n):
            raw = np.einsum("ij,ij->i", s @ g.offdiag, 1.0 - s)
            sizes = s.sum(axis=1)
            den = denom_of(g, s, sizes)
            vals = np.where(den > 0.0, raw / np.where(den > 0.0, den, 1.0), np.inf)
            best = _argmin_lex(vals, idx, n, best)
        if best is None:
            raise ValidationError("no nontrivial cut")
        cut = Cut(frozenset(best[1]), n)
        return best[0], cut
    return _sweep_classical(g, denom_of)


def _sweep_classical(g: WeightedGraph, denom_of):
    """Heuristic mode: threshold sweep of a Fiedler-style eigenvector."""
    import scipy.linalg

    deg = g.offdiag.sum(axis=1)
    scale = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    lap = np.diag(deg) - g.offdiag
    sym = lap * scale[:, None] * scale[None, :]
    _, vecs = scipy.linalg.eigh(sym)
    x = vecs[:, 1] * scale
    order = np.argsort(x, kind="stable")
    best_val, best_cut = math.inf, None
    for k in range(1, g.n):
        if x[order[k - 1]] == x[order[k]]:
            continue
        s = np.zeros((1, g.n))
        s[0, order[:k]] = 1.0
        raw = float(s[0] @ g.offdiag @ (1.0 - s[0]))
        den = float(denom_of(g, s, s.sum(axis=1))[0])
        if den > 0 and raw / den < best_val:
            best_val = raw / den
            best_cut = Cut(frozenset(int(v) for v in order[:k]), g.n)
    if best_cut is None:
        raise ValidationError("degenerate graph: no sweep cut")
    return best_val, best_cut


def cheeger_constant(g: WeightedGraph, heuristic: bool = False, max_n: int = ORACLE_MAX_N):
    """h(G) = min_S boundary(S) / (dbar * min{|S|, |V-S|}) with dbar = total/n."""
    dbar = g.total / g.n

    def denom(graph, s, sizes):
        return dbar * np.minimum(sizes, graph.n - sizes)

    return _classical_min(g, denom, heuristic, max_n)


def conductance(g: WeightedGraph, heuristic: bool = False, max_n: int = ORACLE_MAX_N):
    """cond(G) = min_S boundary(S) / min{vol(S), vol(V-S)}."""
    deg = g.degrees()

    def denom(graph, s, sizes):
        vol = s @ deg
        return np.minimum(vol, graph.total - vol)

    return _classical_min(g, denom, heuristic, max_n)
