"""Cut extraction from geometric relaxation witnesses, with certified bounds.

The rank-1 pipeline: solve the semidefinite relaxation, read off squared
point distances d, and split on a dichotomy over the demand measure mu --
either at least half the mu-mass sits in a radius-1/4 ball around some
vertex (round the distance-to-center map with a threshold sweep, bound
8 * value), or at least half the mu x mu pair mass is 1/4-separated (embed
the points into l1 with verified distortion 2 and sweep every coordinate,
bound 8 * sqrt(value)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import SolverError, ValidationError
from .graphs import Cut, InstancePair, Rank1Measure, SparsityReport, rank1_decompose, sparsity
from .relaxations import SemiMetric, VectorEmbedding, solve_goemans_linial

CERT_TOL = 1e-7
NORM_TOL = 1e-6
BALL_RADIUS = 0.25
_EMBED_LOG_FACTOR = 64
_EMBED_RETRIES_BEFORE_DOUBLING = 3
_EMBED_MAX_DOUBLINGS = 64


@dataclass(frozen=True, eq=False)
class L1Embedding:
    """Vertex coordinates whose l1 distances approximate a target metric."""

    coords: np.ndarray

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class BallCase:
    center: int
    ball: frozenset
    mass: float


@dataclass(frozen=True)
class SpreadCase:
    far_pair_mass: float


@dataclass(frozen=True)
class DichotomyOutcome:
    """Which of the two rounding-friendly conditions hold (possibly both)."""

    ball: BallCase | None
    spread: SpreadCase | None
    expectation: float

    @property
    def case(self) -> str:
        return "ball" if self.ball is not None else "spread"


@dataclass(frozen=True, eq=False)
class RoundingCertificate:
    cut: Cut
    report: SparsityReport
    relax_value: float
    branch: str  # "frechet" | "cauchy-schwarz"
    bound: float
    bound_holds: bool
    ball_center: int | None = None
    ball_mass: float | None = None
    far_pair_mass: float | None = None
    approx_c1: float | None = None
    approx_c2: float | None = None
    seed: int | None = None

    @property
    def sparsity(self) -> float:
        return self.report.sigma


# ---------------------------------------------------------------------------
# threshold sweeps
# ---------------------------------------------------------------------------

def _sweep_key(rep: SparsityReport, cut: Cut):
    small = min(len(cut.members), cut.n - len(cut.members))
    return (rep.sigma, small, cut.canonical_members())


def sweep_cut(x: np.ndarray, pair: InstancePair):
    """Best threshold cut of a one-dimensional vertex embedding.

    Evaluates S_t = {v : x_v <= t} for every threshold between consecutive
    distinct values and returns the minimum-sparsity cut; ties prefer the
    smaller cut side, then the lexicographically smallest member set.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (pair.n,):
        raise ValidationError(f"embedding has wrong shape {x.shape}")
    order = np.argsort(x, kind="stable")
    if x[order[0]] == x[order[-1]]:
        raise ValidationError("sweep embedding is constant")
    best = None
    for k in range(1, pair.n):
        if x[order[k - 1]] == x[order[k]]:
            continue
        cut = Cut(frozenset(int(v) for v in order[:k]), pair.n)
        rep = sparsity(pair, cut)
        key = _sweep_key(rep, cut)
        if best is None or key < best[0]:
            best = (key, cut, rep)
    return best[1], best[2]


def l1_round(f: L1Embedding, pair: InstancePair):
    """Sweep every coordinate of an l1 embedding and keep the best cut.

    The winner's sparsity never exceeds the embedding's l1 cost ratio
    (sum of per-coordinate costs; the best coordinate beats the mediant).
    """
    best = None
    for j in range(f.dim):
        col = f.coords[:, j]
        if col.min() == col.max():
            continue
        cut, rep = sweep_cut(col, pair)
        key = _sweep_key(rep, cut)
        if best is None or key < best[0]:
            best = (key, cut, rep)
    if best is None:
        raise ValidationError("every embedding coordinate is constant")
    return best[1], best[2]


# ---------------------------------------------------------------------------
# the dichotomy
# ---------------------------------------------------------------------------

def _distance_matrix(d) -> np.ndarray:
    if isinstance(d, SemiMetric):
        return d.d
    if isinstance(d, VectorEmbedding):
        return d.squared_distances()
    return np.asarray(d, dtype=float)


def pair_expectation(d, mu: np.ndarray) -> float:
    """E_{u,v ~ mu} d(u,v) over ordered pairs."""
    dm = _distance_matrix(d)
    return float(mu @ dm @ mu)


def dichotomy_case(d, mu: Rank1Measure | np.ndarray,
                   norm_tol: float = NORM_TOL) -> DichotomyOutcome:
    """Ball-versus-spread split of a unit-expectation semimetric.

    Checks every vertex as a candidate ball center (the best mass wins,
    ties to the smallest index) and measures the 1/4-separated pair mass
    directly; at least one condition always holds at unit expectation.
    """
    mu = mu.mu if isinstance(mu, Rank1Measure) else np.asarray(mu, dtype=float)
    dm = _distance_matrix(d)
    expectation = float(mu @ dm @ mu)
    if abs(expectation - 1.0) > norm_tol:
        raise ValidationError(
            f"expected pair distance {expectation!r} is not 1 within {norm_tol!r}")
    in_ball = dm <= BALL_RADIUS
    masses = in_ball @ mu
    center = int(np.argmax(masses))
    ball = None
    if masses[center] >= 0.5:
        ball = BallCase(center=center,
                        ball=frozenset(int(v) for v in np.nonzero(in_ball[center])[0]),
                        mass=float(masses[center]))
    far = float(mu @ (dm >= BALL_RADIUS) @ mu)
    spread = SpreadCase(far_pair_mass=far) if far >= 0.5 else None
    if ball is None and spread is None:
        # impossible at unit expectation: no half-mass ball means the
        # complement bound forces far mass > 1/2
        raise SolverError("dichotomy failed; input is not a unit-expectation semimetric")
    return DichotomyOutcome(ball=ball, spread=spread, expectation=expectation)


# ---------------------------------------------------------------------------
# Frechet branch
# ---------------------------------------------------------------------------

def frechet_round(emb: VectorEmbedding, mu: Rank1Measure, z: int, pair: InstancePair,
                  norm_tol: float = NORM_TOL, cert_tol: float = CERT_TOL) -> RoundingCertificate:
    """Round via the distance-to-center map g(v) = d(z, v).

    g is 1-Lipschitz in the squared-distance semimetric (triangle
    inequality), so the swept numerator is at most the relaxation value;
    the half-mass ball pins the denominator above 1/8, giving the 8 * value
    certificate.
    """
    muv = mu.mu
    dm = emb.squared_distances()
    expectation = float(muv @ dm @ muv)
    if abs(expectation - 1.0) > norm_tol:
        raise ValidationError(
            f"expected pair distance {expectation!r} is not 1 within {norm_tol!r}")
    mass = float(muv @ (dm[z] <= BALL_RADIUS))
    if mass < 0.5:
        raise ValidationError(f"vertex {z} carries ball mass {mass!r} < 1/2")
    cut, rep = sweep_cut(dm[z], pair)
    gb0 = pair.g.nbar.copy()
    np.fill_diagonal(gb0, 0.0)
    value = float((gb0 * dm).sum())
    bound = 8.0 * value
    return RoundingCertificate(cut=cut, report=rep, relax_value=value, branch="frechet",
                               bound=bound, bound_holds=rep.sigma <= bound + cert_tol,
                               ball_center=z, ball_mass=mass)


# ---------------------------------------------------------------------------
# l2 -> l1 embedding (Las Vegas)
# ---------------------------------------------------------------------------

def _embed_with_retries(points, seed: int, log_factor: int):
    pts = points.points if isinstance(points, VectorEmbedding) else np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n < 2:
        raise ValidationError("need at least two points to embed")
    target = cdist(pts, pts, "euclidean")
    rng = np.random.default_rng(seed)
    m = int(math.ceil(log_factor * math.log(max(n, 2))))
    retries = 0
    failures = 0
    doublings = 0
    while True:
        scale = math.sqrt(math.pi / 2.0) * 0.75 / m
        coords = (pts @ rng.standard_normal((pts.shape[1], m))) * scale
        got = cdist(coords, coords, "cityblock")
        if np.all(got <= target) and np.all(target <= 2.0 * got):
            return L1Embedding(coords), retries
        retries += 1
        failures += 1
        if failures >= _EMBED_RETRIES_BEFORE_DOUBLING:
            failures = 0
            doublings += 1
            if doublings > _EMBED_MAX_DOUBLINGS:
                raise SolverError("l1 embedding budget exhausted")
            m *= 2


def l2_to_l1_embed(points: VectorEmbedding | np.ndarray, seed: int,
                   log_factor: int = _EMBED_LOG_FACTOR) -> L1Embedding:
    """Gaussian projection into l1 with a verified two-sided sandwich.

    Draws m = ceil(log_factor * ln n) coordinates scaled so the expected l1
    distance is 3/4 of the euclidean one, then checks

        ||f(x) - f(y)||_1 <= ||x - y|| <= 2 ||f(x) - f(y)||_1

    exhaustively on all pairs.  Failed draws are resampled; after three
    consecutive failures the dimension doubles, up to a hard budget.  The
    returned embedding always satisfies the sandwich exactly as verified.
    """
    emb, _ = _embed_with_retries(points, seed, log_factor)
    return emb


def embed_retry_count(points, seed: int, log_factor: int = _EMBED_LOG_FACTOR) -> int:
    """Number of rejected draws before l2_to_l1_embed's accepted one."""
    _, retries = _embed_with_retries(points, seed, log_factor)
    return retries


# ---------------------------------------------------------------------------
# Cauchy-Schwarz branch
# ---------------------------------------------------------------------------

def cauchy_schwarz_round(emb: VectorEmbedding, mu: Rank1Measure, pair: InstancePair,
                         seed: int, norm_tol: float = NORM_TOL,
                         cert_tol: float = CERT_TOL) -> RoundingCertificate:
    """Round the spread case by embedding the points (not their squares) in l1.

    E_G of the l1 distance is at most sqrt(value) by Cauchy-Schwarz, while
    the 1/4-separated pair mass keeps E_mu of it above 1/8; sweeping the
    coordinates yields the 8 * sqrt(value) certificate.
    """
    muv = mu.mu
    dm = emb.squared_distances()
    expectation = float(muv @ dm @ muv)
    if abs(expectation - 1.0) > norm_tol:
        raise ValidationError(
            f"expected pair distance {expectation!r} is not 1 within {norm_tol!r}")
    far = float(muv @ (dm >= BALL_RADIUS) @ muv)
    if far < 0.5:
        raise ValidationError(f"far pair mass {far!r} < 1/2")
    f = l2_to_l1_embed(emb, seed)
    cut, rep = l1_round(f, pair)
    gb0 = pair.g.nbar.copy()
    np.fill_diagonal(gb0, 0.0)
    value = float((gb0 * dm).sum())
    bound = 8.0 * math.sqrt(value)
    return RoundingCertificate(cut=cut, report=rep, relax_value=value,
                               branch="cauchy-schwarz", bound=bound,
                               bound_holds=rep.sigma <= bound + cert_tol,
                               far_pair_mass=far, seed=seed)


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------

def _certificate_key(cert: RoundingCertificate):
    return (cert.report.sigma, cert.bound, cert.branch)


def round_rank1(pair: InstancePair, seed: int = 0,
                cert_tol: float = CERT_TOL) -> RoundingCertificate:
    """Certified rounding for a rank-1 demand graph.

    Solves the semidefinite relaxation (with tightened triangle separation so
    the certificate arithmetic is not polluted by feasibility slack), rescales
    the embedding to exact unit pair expectation under mu, applies the
    dichotomy, and runs every applicable branch, keeping the best cut.
    """
    mu = rank1_decompose(pair.h)
    if mu is None:
        raise ValidationError("demand graph is not rank-1")
    rv = solve_goemans_linial(pair, metric_tol=1e-8)
    emb: VectorEmbedding = rv.witness
    expectation = pair_expectation(emb, mu.mu)
    if expectation <= 0:
        raise SolverError("embedding carries no demand-pair mass")
    emb = VectorEmbedding(emb.points / math.sqrt(expectation))
    outcome = dichotomy_case(emb, mu)
    candidates = []
    if outcome.ball is not None:
        candidates.append(frechet_round(emb, mu, outcome.ball.center, pair,
                                        cert_tol=cert_tol))
    if outcome.spread is not None:
        candidates.append(cauchy_schwarz_round(emb, mu, pair, seed, cert_tol=cert_tol))
    best = min(candidates, key=_certificate_key)
    if outcome.spread is not None and best.far_pair_mass is None:
        best = _with_far_mass(best, outcome.spread.far_pair_mass)
    return best


def _with_far_mass(cert: RoundingCertificate, far: float) -> RoundingCertificate:
    from dataclasses import replace

    return replace(cert, far_pair_mass=far)


def _cut_ratio_bounds(h, h_approx):
    """Exact (c1, c2) over every nontrivial cut: c1 H'(S) <= H(S) <= c2 H'(S).

    Raw (unnormalized) cut weights on both sides; exhaustive over the
    2^(n-1) cut sides containing vertex 0.
    """
    from .graphs import _indicator_chunks

    n = h.n
    full = (1 << (n - 1)) - 1
    c1, c2 = math.inf, 0.0
    for idx, s in _indicator_chunks(n):
        comp = 1.0 - s
        mass = 2.0 * np.einsum("ij,ij->i", s @ h.offdiag, comp)
        mass_apx = 2.0 * np.einsum("ij,ij->i", s @ h_approx.offdiag, comp)
        live = (idx != full)
        bad = live & (mass_apx == 0.0) & (mass > 0.0)
        if bad.any():
            raise ValidationError(
                "approximation misses a cut carried by the demand graph (c2 infinite)")
        ok = live & (mass_apx > 0.0)
        if ok.any():
            ratios = mass[ok] / mass_apx[ok]
            c1 = min(c1, float(ratios.min()))
            c2 = max(c2, float(ratios.max()))
    if not math.isfinite(c1):
        raise ValidationError("approximation carries no cut mass")
    if c1 <= 0:
        raise ValidationError("approximation over-covers a demand-free cut (c1 = 0)")
    return c1, c2


def round_rank1_via_approx(pair: InstancePair, h_approx, seed: int = 0,
                           cert_tol: float = CERT_TOL) -> RoundingCertificate:
    """Round (G, H) through a rank-1 (c1, c2)-approximation H' of H.

    Runs the rank-1 pipeline on (G, H') and re-measures the returned cut on
    the original pair; the certified bound is 8 (c2 / c1) sqrt(value of the
    (G, H') relaxation).
    """
    if pair.n > 24:
        raise ValidationError("cut-ratio enumeration guarded at n = 24")
    if rank1_decompose(h_approx) is None:
        raise ValidationError("approximation graph is not rank-1")
    c1, c2 = _cut_ratio_bounds(pair.h, h_approx)
    inner_pair = InstancePair(pair.g, h_approx)
    inner = round_rank1(inner_pair, seed=seed, cert_tol=cert_tol)
    rep = sparsity(pair, inner.cut)
    bound = 8.0 * (c2 / c1) * math.sqrt(inner.relax_value)
    return RoundingCertificate(cut=inner.cut, report=rep, relax_value=inner.relax_value,
                               branch=inner.branch, bound=bound,
                               bound_holds=rep.sigma <= bound + cert_tol,
                               ball_center=inner.ball_center, ball_mass=inner.ball_mass,
                               far_pair_mass=inner.far_pair_mass,
                               approx_c1=c1, approx_c2=c2, seed=inner.seed)


# ---------------------------------------------------------------------------
# certificate text serialization
# ---------------------------------------------------------------------------

def serialize_certificate(cert: RoundingCertificate) -> str:
    lines = [
        "certificate v1",
        "cut " + " ".join(str(v) for v in cert.cut.sorted_members),
        f"branch {cert.branch}",
        f"relaxation-value {cert.relax_value!r}",
        f"sparsity {cert.report.sigma!r}",
        f"bound {cert.bound!r}",
        f"bound-holds {str(cert.bound_holds).lower()}",
    ]
    if cert.ball_center is not None:
        lines.append(f"ball-center {cert.ball_center}")
        lines.append(f"ball-mass {cert.ball_mass!r}")
    if cert.far_pair_mass is not None:
        lines.append(f"far-pair-mass {cert.far_pair_mass!r}")
    if cert.approx_c1 is not None:
        lines.append(f"approx-c1 {cert.approx_c1!r}")
        lines.append(f"approx-c2 {cert.approx_c2!r}")
    if cert.seed is not None:
        lines.append(f"seed {cert.seed}")
    return "\n".join(lines) + "\n"
