import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from netcrt import EnsembleSpec, InvalidSpec, Network
from netcrt.netgen import (LATTICE_EDGES, SBM_BLOCKS, ba_edge_count, complete_graph,
                           conditional_binomials, generate, generate_ba, generate_er,
                           generate_matched, generate_sbm_lattice, read_edgelist,
                           sbm_probabilities, write_edgelist)


def rng(seed=0):
    return np.random.default_rng(seed)


def assert_simple(g: Network):
    e = g.edges
    assert np.all(e[:, 0] < e[:, 1])
    assert len(g.edge_set()) == g.edge_count
    assert e.size == 0 or e.max() < g.node_count


# ---------------------------------------------------------------- ER

def test_er_two_nodes_forced_edge():
    for s in range(20):
        g = generate_er(EnsembleSpec("ER", 2, 1.0), rng(s))
        assert g.edge_set() == {(0, 1)}


def test_er_zero_degree_is_empty():
    for s in range(5):
        assert generate_er(EnsembleSpec("ER", 50, 0.0), rng(s)).edge_count == 0


def test_er_mean_edge_count_binomial():
    n, k, R = 300, 4.0, 400
    pairs, p = n * (n - 1) // 2, k / (n - 1)
    counts = np.array([generate_er(EnsembleSpec("ER", n, k), rng(s)).edge_count for s in range(R)])
    se = math.sqrt(pairs * p * (1 - p) / R)
    assert abs(counts.mean() - pairs * p) <= 3 * se


def test_er_rejects_degree_above_n_minus_one():
    with pytest.raises(InvalidSpec):
        EnsembleSpec("ER", 10, 9.5)


# ---------------------------------------------------------------- BA

def test_ba_edge_count_matches_construction():
    spec = EnsembleSpec("BA", 300, 4.0)
    # seed clique K3 then 297 arrivals with two edges each
    assert ba_edge_count(300, 2) == 3 + 2 * 297
    for s in range(10):
        assert generate_ba(spec, rng(s)).edge_count == 3 + 2 * 297


def test_ba_n_equals_m_plus_one_is_complete():
    # mean_degree <= n - 1 leaves m_attach = 1 as the only case with n = m + 1
    spec = EnsembleSpec("BA", 2, 1.0)
    assert spec.m_attach == 1
    assert generate_ba(spec, rng()).edge_set() == complete_graph(2).edge_set()


def test_ba_rejects_small_n():
    with pytest.raises(InvalidSpec):
        EnsembleSpec("BA", 2, 4.0)


def test_ba_max_degree_exceeds_er():
    wins = 0
    for s in range(100):
        r = rng(s)
        ba = generate_ba(EnsembleSpec("BA", 300, 4.0), r).degrees.max()
        er = generate_er(EnsembleSpec("ER", 300, 4.0), r).degrees.max()
        wins += ba > er
    assert wins >= 95


def test_ba_heavier_tail_than_er():
    def pooled(kind):
        return np.concatenate([generate(EnsembleSpec(kind, 300, 4.0), rng(s)).degrees
                               for s in range(50)])
    ba, er = pooled("BA"), pooled("ER")
    assert np.quantile(ba, 0.99) > np.quantile(er, 0.99)
    assert ba.mean() == pytest.approx(2 * 597 / 300)


# ---------------------------------------------------------------- SBM

def test_sbm_within_probability():
    n, k = 300, 4.0
    probs = sbm_probabilities(n, k)
    assert np.allclose(np.diag(probs), 0.9 * k / (n / 10 - 1))


def test_sbm_between_budget_and_zero_pattern():
    n, k = 300, 4.0
    s = n // SBM_BLOCKS
    probs = sbm_probabilities(n, k)
    adjacent = {frozenset(e) for e in LATTICE_EDGES}
    for a, b in product(range(SBM_BLOCKS), repeat=2):
        if a != b and frozenset((a, b)) not in adjacent:
            assert probs[a, b] == 0.0
    between = probs.sum(axis=1) - np.diag(probs)
    assert np.allclose(between * s, 0.1 * k, rtol=0, atol=1e-12)
    assert np.allclose(probs, probs.T)


def test_sbm_edges_respect_lattice():
    adjacent = {frozenset(e) for e in LATTICE_EDGES}
    for s in range(20):
        g = generate_sbm_lattice(EnsembleSpec("SBM", 100, 4.0), rng(s))
        b = g.block_of
        for u, v in g.edges.tolist():
            assert b[u] == b[v] or frozenset((b[u], b[v])) in adjacent


def test_sbm_rejects_indivisible_n_and_dense_blocks():
    with pytest.raises(InvalidSpec):
        EnsembleSpec("SBM", 305, 4.0)
    with pytest.raises(InvalidSpec):
        EnsembleSpec("SBM", 20, 2.0)


@pytest.mark.parametrize("kind", ["ER", "BA", "SBM"])
def test_mean_degree_within_three_se(kind):
    R = 200
    means = np.array([generate(EnsembleSpec(kind, 300, 4.0), rng(s)).degrees.mean()
                      for s in range(R)])
    if kind == "BA":
        # fixed edge count, so no sampling spread
        assert means.mean() == pytest.approx(2 * 597 / 300)
        return
    assert abs(means.mean() - 4.0) <= 3 * means.std(ddof=1) / math.sqrt(R)


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(["ER", "BA", "SBM"]), seed=st.integers(0, 2**32 - 1),
       n=st.sampled_from([20, 50, 100]), k=st.floats(1.0, 8.0))
def test_generators_make_simple_graphs(kind, seed, n, k):
    try:
        spec = EnsembleSpec(kind, n, k)
    except InvalidSpec:
        assert kind == "SBM" and 0.9 * k / (n // 10 - 1) > 1
        return
    g = generate(spec, rng(seed))
    assert_simple(g)


# ---------------------------------------------------------------- matched pairs

@pytest.mark.parametrize("kind", ["ER", "BA", "SBM"])
def test_matched_clusters_share_edge_count(kind):
    for s in range(10):
        a, b = generate_matched(EnsembleSpec(kind, 100, 4.0), rng(s))
        assert a.edge_count == b.edge_count
        assert_simple(a)
        assert_simple(b)


def test_conditional_binomials_sum_and_law():
    slots, probs, total = (3, 4), (0.3, 0.6), 3
    # exact law of the first coordinate given the sum
    w = np.array([binom.pmf(i, 3, 0.3) * binom.pmf(total - i, 4, 0.6) for i in range(4)])
    exact = w / w.sum()
    r = rng(5)
    R = 20000
    draws = np.array([conditional_binomials(slots, probs, total, r) for _ in range(R)])
    assert np.all(draws.sum(axis=1) == total)
    freq = np.bincount(draws[:, 0], minlength=4) / R
    se = np.sqrt(exact * (1 - exact) / R)
    assert np.all(np.abs(freq - exact) <= 4 * se + 1e-12)


def test_conditional_binomials_rejects_impossible_total():
    with pytest.raises(InvalidSpec):
        conditional_binomials((2, 2), (0.5, 0.5), 5, rng())


def test_edgelist_roundtrip(tmp_path):
    g = generate_er(EnsembleSpec("ER", 40, 3.0), rng(3))
    path = tmp_path / "g.txt"
    write_edgelist(g, path)
    assert path.read_text().startswith("# nodes=40\n")
    back = read_edgelist(path)
    assert back.node_count == 40 and back.edge_set() == g.edge_set()


def test_network_rejects_bad_edges():
    with pytest.raises(InvalidSpec):
        Network(3, [[0, 0]])
    with pytest.raises(InvalidSpec):
        Network(3, [[0, 1], [1, 0]])
    with pytest.raises(InvalidSpec):
        Network(3, [[0, 3]])
