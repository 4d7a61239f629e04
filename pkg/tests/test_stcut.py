import math

import numpy as np
import pytest

from sparsecut import (SolverError, ValidationError, WeightedGraph,
                       electrical_potentials, extract_flow, st_certificate, st_sweep)
from sparsecut.instances import gen_random
from sparsecut.stcut import serialize_flow

from conftest import brute_min_st_cut, make_pair


def _path3() -> WeightedGraph:
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 0] = 1.0
    w[1, 2] = w[2, 1] = 1.0
    return WeightedGraph(w)


def _parallel_paths() -> WeightedGraph:
    # s=0, t=3, middles 1 and 2 on disjoint paths
    w = np.zeros((4, 4))
    for u, v in ((0, 1), (1, 3), (0, 2), (2, 3)):
        w[u, v] = w[v, u] = 1.0
    return WeightedGraph(w)


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

def test_potentials_path():
    pot = electrical_potentials(_path3(), 0, 2)
    assert np.allclose(pot.x, [0.0, 0.5, 1.0], atol=1e-12)
    assert pot.energy == pytest.approx(0.25, abs=1e-12)


def test_potentials_single_edge():
    g = WeightedGraph(np.array([[0.0, 1.0], [1.0, 0.0]]))
    pot = electrical_potentials(g, 0, 1)
    assert np.array_equal(pot.x, [0.0, 1.0])
    assert pot.energy == pytest.approx(1.0, abs=1e-15)


def test_potentials_parallel_paths_symmetry():
    pot = electrical_potentials(_parallel_paths(), 0, 3)
    assert pot.x[1] == pytest.approx(0.5, abs=1e-12)
    assert pot.x[2] == pytest.approx(0.5, abs=1e-12)


def test_potentials_disconnected_flagged():
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = 1.0
    w[2, 3] = w[3, 2] = 1.0
    pot = electrical_potentials(WeightedGraph(w), 0, 3)
    assert pot.disconnected
    assert pot.energy == 0.0
    assert pot.x[0] == 0.0 and pot.x[3] == 1.0


def test_potentials_third_component_gets_zero():
    w = np.zeros((5, 5))
    w[0, 1] = w[1, 0] = 1.0
    w[1, 2] = w[2, 1] = 1.0
    w[3, 4] = w[4, 3] = 1.0  # island disconnected from both terminals
    pot = electrical_potentials(WeightedGraph(w), 0, 2)
    assert not pot.disconnected
    assert pot.x[3] == 0.0 and pot.x[4] == 0.0


def test_potentials_validation():
    with pytest.raises(ValidationError):
        electrical_potentials(_path3(), 1, 1)
    with pytest.raises(ValidationError):
        electrical_potentials(_path3(), 0, 7)


def test_maximum_principle_random():
    for seed in range(10):
        pair = gen_random(20, density=0.2, rank1=False, seed=seed)
        pot = electrical_potentials(pair.g, 0, 19)
        assert pot.x.min() >= 0.0
        assert pot.x.max() <= 1.0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def test_sweep_path_tight():
    g = _path3()
    pot = electrical_potentials(g, 0, 2)
    cut, frac = st_sweep(g, 0, 2, pot)
    assert frac == pytest.approx(0.5, abs=1e-12)
    assert frac <= math.sqrt(pot.energy) + 1e-9
    assert 0 in cut.members and 2 not in cut.members


def test_sweep_single_edge():
    g = WeightedGraph(np.array([[0.0, 1.0], [1.0, 0.0]]))
    pot = electrical_potentials(g, 0, 1)
    cut, frac = st_sweep(g, 0, 1, pot)
    assert frac == 1.0


def test_sweep_fraction_bound_random():
    for seed in range(12):
        n = 8 + 3 * seed
        pair = gen_random(n, density=0.25, rank1=False, seed=40 + seed)
        pot = electrical_potentials(pair.g, 0, n - 1)
        cut, frac = st_sweep(pair.g, 0, n - 1, pot)
        assert frac <= math.sqrt(pot.energy) + 1e-9
        assert (0 in cut.members) != (n - 1 in cut.members)


# ---------------------------------------------------------------------------
# flow
# ---------------------------------------------------------------------------

def test_flow_path():
    g = _path3()
    pot = electrical_potentials(g, 0, 2)
    flow = extract_flow(g, pot)
    assert flow.f[0, 1] == pytest.approx(0.25, abs=1e-12)
    assert flow.f[1, 2] == pytest.approx(0.25, abs=1e-12)
    assert flow.value == pytest.approx(pot.energy, abs=1e-12)
    # capacity under the doubled normalized convention
    assert abs(flow.f[0, 1]) <= 2.0 * g.nbar[0, 1]


def test_flow_single_edge():
    g = WeightedGraph(np.array([[0.0, 1.0], [1.0, 0.0]]))
    pot = electrical_potentials(g, 0, 1)
    flow = extract_flow(g, pot)
    assert flow.f[0, 1] == pytest.approx(1.0, abs=1e-15)
    assert flow.value == pytest.approx(1.0, abs=1e-15)


def test_flow_parallel_paths():
    g = _parallel_paths()
    pot = electrical_potentials(g, 0, 3)
    flow = extract_flow(g, pot)
    assert flow.f[0, 1] == pytest.approx(0.125, abs=1e-12)
    assert flow.f[0, 2] == pytest.approx(0.125, abs=1e-12)
    assert flow.value == pytest.approx(pot.energy, abs=1e-12)


def test_flow_checks_random():
    for seed in range(8):
        n = 10 + seed
        pair = gen_random(n, density=0.3, rank1=False, seed=60 + seed)
        pot = electrical_potentials(pair.g, 1, n - 2)
        flow = extract_flow(pair.g, pot)
        net_in = flow.f.sum(axis=0)
        interior = np.ones(n, dtype=bool)
        interior[[1, n - 2]] = False
        assert np.abs(net_in[interior]).max() <= 1e-8
        assert abs(flow.value - pot.energy) <= 1e-8


# ---------------------------------------------------------------------------
# certificate
# ---------------------------------------------------------------------------

def test_certificate_path_ratio_two():
    cert = st_certificate(_path3(), 0, 2)
    assert cert.ratio == pytest.approx(2.0, abs=1e-9)
    assert cert.ratio <= 1.0 / math.sqrt(cert.energy) * (1 + 1e-6)
    assert cert.bound_holds


def test_certificate_single_edge_ratio_one():
    g = WeightedGraph(np.array([[0.0, 1.0], [1.0, 0.0]]))
    cert = st_certificate(g, 0, 1)
    assert cert.ratio == pytest.approx(1.0, abs=1e-12)


def test_certificate_ratio_bound_random():
    for seed in range(10):
        n = 6 + 4 * seed
        pair = gen_random(n, density=0.3, rank1=False, seed=80 + seed)
        cert = st_certificate(pair.g, 0, n - 1)
        assert cert.bound_holds
        assert cert.ratio <= 1.0 / math.sqrt(cert.energy) * (1 + 1e-6)


def test_certificate_disconnected():
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = 1.0
    w[2, 3] = w[3, 2] = 1.0
    cert = st_certificate(WeightedGraph(w), 0, 3)
    assert cert.disconnected
    assert cert.cut_fraction == 0.0
    assert cert.bound_holds


def test_weak_duality_against_brute_min_cut():
    for seed in range(6):
        n = 8 + seed
        pair = gen_random(n, density=0.35, rank1=False, seed=90 + seed)
        pot = electrical_potentials(pair.g, 0, n - 1)
        mincut = brute_min_st_cut(pair.g, 0, n - 1)
        assert pot.energy <= mincut + 1e-10


def test_flow_serialization_roundtrippable_text():
    cert = st_certificate(_path3(), 0, 2)
    text = serialize_flow(cert)
    assert text.startswith("flow v1\n")
    assert "energy 0.25" in text
    assert "flow 0 1 0.25" in text
