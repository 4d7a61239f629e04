import math

import numpy as np
import pytest

from sparsecut import (Cut, Rank1Measure, SolverError, ValidationError,
                       VectorEmbedding, WeightedGraph, brute_force_opt,
                       cauchy_schwarz_round, dichotomy_case, frechet_round, l1_round,
                       l2_to_l1_embed, rank1_decompose, round_rank1,
                       round_rank1_via_approx, solve_goemans_linial, sparsity,
                       sweep_cut)
from sparsecut.rounding import L1Embedding, embed_retry_count, serialize_certificate
from sparsecut.instances import gen_random

from conftest import make_pair, path_edge_pair


def _uniform_measure(n, support=None):
    mu = np.zeros(n)
    support = range(n) if support is None else support
    mu[list(support)] = 1.0 / len(list(support))
    return Rank1Measure(mu=mu, f=mu, residual=0.0)


# ---------------------------------------------------------------------------
# sweep_cut
# ---------------------------------------------------------------------------

def test_sweep_path_edge(path_edge):
    cut, rep = sweep_cut(np.array([0.0, 0.5, 1.0]), path_edge)
    assert rep.sigma == 0.5
    assert cut.canonical_members() in ((0,), (0, 1))


def test_sweep_indicator_recovers_cut(path_edge):
    target = Cut(frozenset({0}), 3)
    cut, _ = sweep_cut(target.indicator(), path_edge)
    assert cut.same_partition(target)


def test_sweep_constant_errors(path_edge):
    with pytest.raises(ValidationError, match="constant"):
        sweep_cut(np.ones(3), path_edge)


def test_sweep_never_beats_one_dimensional_ratio():
    rng = np.random.default_rng(31)
    for trial in range(20):
        pair = gen_random(8, density=0.5, rank1=False, seed=200 + trial)
        x = rng.standard_normal(8)
        cut, rep = sweep_cut(x, pair)
        diff = np.abs(x[:, None] - x[None, :])
        num = float((pair.g.nbar * diff).sum())
        den = float((pair.h.nbar * diff).sum())
        if den > 0:
            assert rep.sigma <= num / den + 1e-9


# ---------------------------------------------------------------------------
# l1_round
# ---------------------------------------------------------------------------

def test_l1_round_single_column_is_sweep(path_edge):
    x = np.array([0.0, 0.5, 1.0])
    c1, r1 = l1_round(L1Embedding(x.reshape(-1, 1)), path_edge)
    c2, r2 = sweep_cut(x, path_edge)
    assert c1.same_partition(c2)
    assert r1.sigma == r2.sigma


def test_l1_round_indicator_embedding(path_edge):
    opt_cut, opt_rep = brute_force_opt(path_edge)
    coords = np.zeros((3, 2))
    coords[:, 0] = opt_cut.indicator()
    cut, rep = l1_round(L1Embedding(coords), path_edge)
    assert cut.same_partition(opt_cut)
    diff = np.abs(coords[:, None, :] - coords[None, :, :]).sum(axis=2)
    ratio = float((path_edge.g.nbar * diff).sum()) / float((path_edge.h.nbar * diff).sum())
    assert rep.sigma == pytest.approx(ratio, abs=1e-12)


def test_l1_round_bounded_by_l1_ratio_random():
    rng = np.random.default_rng(77)
    for trial in range(15):
        pair = gen_random(8, density=0.6, rank1=False, seed=300 + trial)
        coords = rng.standard_normal((8, 3))
        cut, rep = l1_round(L1Embedding(coords), pair)
        diff = np.abs(coords[:, None, :] - coords[None, :, :]).sum(axis=2)
        num = float((pair.g.nbar * diff).sum())
        den = float((pair.h.nbar * diff).sum())
        assert rep.sigma <= num / den + 1e-9


def test_l1_round_all_constant_errors(path_edge):
    with pytest.raises(ValidationError, match="constant"):
        l1_round(L1Embedding(np.ones((3, 2))), path_edge)


# ---------------------------------------------------------------------------
# dichotomy
# ---------------------------------------------------------------------------

def test_dichotomy_two_points_both_cases():
    d = np.array([[0.0, 2.0], [2.0, 0.0]])
    out = dichotomy_case(d, _uniform_measure(2))
    assert out.expectation == pytest.approx(1.0, abs=1e-15)
    assert out.ball is not None and out.ball.center == 0
    assert out.ball.mass == 0.5
    assert out.spread is not None and out.spread.far_pair_mass == 0.5


def test_dichotomy_rejects_point_mass():
    d = np.array([[0.0, 2.0], [2.0, 0.0]])
    mu = np.array([1.0, 0.0])
    with pytest.raises(ValidationError, match="not 1"):
        dichotomy_case(d, Rank1Measure(mu=mu, f=mu, residual=0.0))


@pytest.mark.parametrize("n", [4, 6, 10])
def test_dichotomy_equilateral_spread(n):
    d = np.full((n, n), n / (n - 1))
    np.fill_diagonal(d, 0.0)
    out = dichotomy_case(d, _uniform_measure(n))
    assert out.ball is None
    assert out.spread.far_pair_mass == pytest.approx(1.0 - 1.0 / n, abs=1e-14)


def test_dichotomy_totality_random():
    rng = np.random.default_rng(13)
    for trial in range(40):
        n = int(rng.integers(2, 10))
        pts = rng.standard_normal((n, 3))
        d = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        mu = rng.dirichlet(np.ones(n))
        e = float(mu @ d @ mu)
        if e <= 0:
            continue
        d = d / e
        out = dichotomy_case(d, Rank1Measure(mu=mu, f=mu, residual=0.0),
                             norm_tol=1e-9)
        # the returned case's defining inequality holds literally
        if out.ball is not None:
            mass = float(mu @ (d[out.ball.center] <= 0.25))
            assert mass >= 0.5
        if out.spread is not None:
            far = float(mu @ (d >= 0.25) @ mu)
            assert far >= 0.5
        assert out.ball is not None or out.spread is not None


# ---------------------------------------------------------------------------
# Frechet branch
# ---------------------------------------------------------------------------

def _two_cluster_instance(bridge_weight=0.0):
    """Four points: {0,1} at the origin, {2,3} at squared distance 2 from it.

    Uniform demand clique with self-loops; pair expectation is exactly 1.
    """
    pts = np.zeros((4, 1))
    pts[2:] = math.sqrt(2.0)
    g = np.zeros((4, 4))
    g[0, 1] = g[1, 0] = 1.0
    g[2, 3] = g[3, 2] = 1.0
    if bridge_weight:
        g[1, 2] = g[2, 1] = bridge_weight
    pair = make_pair(g, np.ones((4, 4)))
    return pair, VectorEmbedding(pts)


def test_frechet_separated_clusters_zero_cost():
    pair, emb = _two_cluster_instance()
    mu = rank1_decompose(pair.h)
    cert = frechet_round(emb, mu, z=0, pair=pair)
    assert cert.branch == "frechet"
    assert cert.relax_value == pytest.approx(0.0, abs=1e-15)
    assert cert.report.sigma == pytest.approx(0.0, abs=1e-12)
    assert cert.bound_holds
    assert cert.ball_mass == 0.5


def test_frechet_with_bridge_respects_bound():
    pair, emb = _two_cluster_instance(bridge_weight=0.25)
    mu = rank1_decompose(pair.h)
    cert = frechet_round(emb, mu, z=0, pair=pair)
    assert cert.report.sigma <= 8.0 * cert.relax_value + 1e-7
    assert cert.bound_holds


def test_frechet_rejects_all_points_in_ball():
    # every pair within distance 1/4 forces expectation <= 1/4, never 1
    pts = np.zeros((5, 2))
    pts[1:, 0] = 0.4  # squared distances <= 0.16
    pair = make_pair(np.ones((5, 5)) - np.eye(5), np.ones((5, 5)))
    mu = rank1_decompose(pair.h)
    with pytest.raises(ValidationError, match="not 1"):
        frechet_round(VectorEmbedding(pts), mu, z=0, pair=pair)


def test_frechet_rejects_low_mass_center():
    pair, emb = _two_cluster_instance()
    mu = rank1_decompose(pair.h)
    # center 0 has mass 1/2; shrink demand on its cluster to break the ball
    h = np.ones((4, 4))
    h[np.ix_([0, 1], [0, 1])] = 0.01
    pair_skewed = make_pair(pair.g.w, h)
    mu2 = rank1_decompose(pair_skewed.h)
    if mu2 is not None:
        d = emb.squared_distances()
        e = float(mu2.mu @ d @ mu2.mu)
        scaled = VectorEmbedding(emb.points / math.sqrt(e))
        with pytest.raises(ValidationError, match="ball mass"):
            frechet_round(scaled, mu2, z=0, pair=pair_skewed)


def test_frechet_on_solved_sdp_instances():
    for seed in range(6):
        pair = gen_random(8, density=0.5, rank1=True, seed=500 + seed)
        rv = solve_goemans_linial(pair, metric_tol=1e-8)
        mu = rank1_decompose(pair.h)
        emb = rv.witness
        d = emb.squared_distances()
        e = float(mu.mu @ d @ mu.mu)
        emb = VectorEmbedding(emb.points / math.sqrt(e))
        out = dichotomy_case(emb, mu)
        if out.ball is None:
            continue
        cert = frechet_round(emb, mu, out.ball.center, pair)
        assert cert.report.sigma <= 8.0 * cert.relax_value + 1e-7
        assert cert.bound_holds


# ---------------------------------------------------------------------------
# l2 -> l1 embedding
# ---------------------------------------------------------------------------

def test_embed_two_points():
    pts = np.array([[0.0], [1.0]])
    emb = l2_to_l1_embed(pts, seed=1)
    l1 = float(np.abs(emb.coords[0] - emb.coords[1]).sum())
    assert 0.5 <= l1 <= 1.0


def test_embed_identical_points():
    pts = np.zeros((4, 3))
    emb = l2_to_l1_embed(pts, seed=2)
    assert np.abs(emb.coords[:, None, :] - emb.coords[None, :, :]).sum() == 0.0


def test_embed_sandwich_verified():
    rng = np.random.default_rng(3)
    pts = rng.standard_normal((10, 5))
    emb = l2_to_l1_embed(pts, seed=7)
    l2 = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    l1 = np.abs(emb.coords[:, None, :] - emb.coords[None, :, :]).sum(axis=2)
    assert np.all(l1 <= l2)
    assert np.all(l2 <= 2.0 * l1)


def test_embed_deterministic():
    rng = np.random.default_rng(4)
    pts = rng.standard_normal((6, 4))
    a = l2_to_l1_embed(pts, seed=11)
    b = l2_to_l1_embed(pts, seed=11)
    assert np.array_equal(a.coords, b.coords)


def test_embed_single_point_rejected():
    with pytest.raises(ValidationError, match="two points"):
        l2_to_l1_embed(np.zeros((1, 2)), seed=0)


# ---------------------------------------------------------------------------
# Cauchy-Schwarz branch
# ---------------------------------------------------------------------------

def _equilateral_instance(n):
    scale = math.sqrt(n / (n - 1) / 2.0)
    pts = np.eye(n) * scale
    pair = make_pair(np.ones((n, n)) - np.eye(n), np.ones((n, n)))
    return pair, VectorEmbedding(pts)


def test_cs_round_equilateral():
    pair, emb = _equilateral_instance(6)
    mu = rank1_decompose(pair.h)
    cert = cauchy_schwarz_round(emb, mu, pair, seed=5)
    assert cert.branch == "cauchy-schwarz"
    assert cert.report.sigma <= 8.0 * math.sqrt(cert.relax_value) + 1e-7
    assert cert.bound_holds
    assert cert.far_pair_mass >= 0.5


def test_cs_round_zero_cost_groups():
    # cost edges only inside coincident-point groups: swept sparsity is 0
    pts = np.zeros((6, 1))
    pts[3:] = 1.0  # squared distance 1 across groups
    g = np.zeros((6, 6))
    for u, v in ((0, 1), (1, 2), (3, 4), (4, 5)):
        g[u, v] = g[v, u] = 1.0
    pair = make_pair(g, np.ones((6, 6)))
    mu = rank1_decompose(pair.h)
    d = VectorEmbedding(pts).squared_distances()
    e = float(mu.mu @ d @ mu.mu)
    emb = VectorEmbedding(pts / math.sqrt(e))
    cert = cauchy_schwarz_round(emb, mu, pair, seed=9)
    assert cert.relax_value == pytest.approx(0.0, abs=1e-15)
    assert cert.report.sigma == pytest.approx(0.0, abs=1e-12)


def test_cs_round_rejects_bunched_points():
    pair, emb = _two_cluster = _two_cluster_instance()
    mu = rank1_decompose(pair.h)
    # shrink distances so no pair is 1/4-separated, breaking the spread case
    near = VectorEmbedding(emb.points * 0.1)
    with pytest.raises(ValidationError):
        cauchy_schwarz_round(near, mu, pair, seed=1)


def test_embed_retry_count_small():
    rng = np.random.default_rng(6)
    retries = [embed_retry_count(rng.standard_normal((12, 4)), seed=s)
               for s in range(10)]
    assert sorted(retries)[len(retries) // 2] <= 3


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------

def test_round_rank1_disconnected_zero():
    g = np.zeros((6, 6))
    for u, v in ((0, 1), (1, 2), (3, 4), (4, 5)):
        g[u, v] = g[v, u] = 1.0
    pair = make_pair(g, np.ones((6, 6)))
    cert = round_rank1(pair, seed=3)
    assert cert.report.sigma == pytest.approx(0.0, abs=1e-9)
    assert cert.bound_holds


def test_round_rank1_dumbbell():
    w = np.zeros((8, 8))
    w[:4, :4] = 1.0
    w[4:, 4:] = 1.0
    np.fill_diagonal(w, 0.0)
    w[3, 4] = w[4, 3] = 1.0
    pair = make_pair(w, np.ones((8, 8)))
    cert = round_rank1(pair, seed=2)
    _, rep = brute_force_opt(pair)
    sdp = solve_goemans_linial(pair).value
    assert cert.report.sigma <= 8.0 * math.sqrt(sdp) + 1e-7
    assert cert.report.sigma >= rep.sigma - 1e-12
    assert cert.bound_holds


def test_round_rank1_random_suite():
    for seed in range(6):
        pair = gen_random(6 + seed, density=0.5, rank1=True, seed=700 + seed)
        cert = round_rank1(pair, seed=seed)
        _, rep = brute_force_opt(pair)
        assert cert.bound_holds
        assert cert.report.sigma >= rep.sigma - 1e-12


def test_round_rank1_rejects_non_rank1(path_edge):
    with pytest.raises(ValidationError, match="rank-1"):
        round_rank1(path_edge, seed=0)


def test_round_rank1_deterministic():
    pair = gen_random(9, density=0.5, rank1=True, seed=901)
    a = round_rank1(pair, seed=42)
    b = round_rank1(pair, seed=42)
    assert serialize_certificate(a) == serialize_certificate(b)


# ---------------------------------------------------------------------------
# (c1, c2)-approximation wrapper
# ---------------------------------------------------------------------------

def test_via_approx_identity():
    pair = gen_random(7, density=0.5, rank1=True, seed=800)
    direct = round_rank1(pair, seed=1)
    via = round_rank1_via_approx(pair, pair.h, seed=1)
    assert via.approx_c1 == pytest.approx(1.0, abs=1e-9)
    assert via.approx_c2 == pytest.approx(1.0, abs=1e-9)
    assert via.cut.same_partition(direct.cut)
    assert via.report.sigma == direct.report.sigma


def test_via_approx_complete_bipartite():
    m = 3
    n = 2 * m
    h = np.zeros((n, n))
    h[:m, m:] = 1.0
    h[m:, :m] = 1.0
    rng = np.random.default_rng(5)
    g = rng.random((n, n)) * (rng.random((n, n)) < 0.7)
    g = np.triu(g, 1)
    g = g + g.T
    g[0, 1] = g[1, 0] = 1.0
    pair = make_pair(g, h)
    approx = WeightedGraph(np.ones((n, n)))
    cert = round_rank1_via_approx(pair, approx, seed=3)
    assert math.isfinite(cert.approx_c1) and math.isfinite(cert.approx_c2)
    assert cert.approx_c1 > 0
    assert cert.report.sigma <= cert.bound + 1e-7
    assert cert.bound_holds


def test_via_approx_single_edge_demand():
    g = np.zeros((5, 5))
    for u, v in ((0, 1), (1, 2), (2, 3), (3, 4), (0, 4)):
        g[u, v] = g[v, u] = 1.0
    h = np.zeros((5, 5))
    h[0, 3] = h[3, 0] = 1.0
    pair = make_pair(g, h)
    approx = np.zeros((5, 5))
    approx[np.ix_([0, 3], [0, 3])] = 1.0
    cert = round_rank1_via_approx(pair, WeightedGraph(approx), seed=4)
    _, rep = brute_force_opt(pair)
    assert cert.approx_c1 == pytest.approx(1.0, abs=1e-12)
    assert cert.approx_c2 == pytest.approx(1.0, abs=1e-12)
    assert cert.report.sigma >= rep.sigma - 1e-12
    assert cert.bound_holds


def test_via_approx_infinite_c2_rejected():
    g = np.zeros((4, 4))
    for u, v in ((0, 1), (1, 2), (2, 3)):
        g[u, v] = g[v, u] = 1.0
    h = np.ones((4, 4))  # uniform demand crosses every cut
    approx = np.zeros((4, 4))
    approx[np.ix_([0, 1], [0, 1])] = 1.0  # misses cuts inside {0, 1}
    pair = make_pair(g, h)
    with pytest.raises(ValidationError, match="c2"):
        round_rank1_via_approx(pair, WeightedGraph(approx), seed=0)
