import math

import networkx as nx
import numpy as np
import pytest

from netcrt import EnsembleSpec, InvalidSpec, Network, StalledEpidemic
from netcrt.epidemic import (DEGREE, UNIT, SpreadParams, choose_seeds, sample_distinct,
                             simulate_si, simulate_spread, write_records)
from netcrt.mixing import make_pair, pair_arms
from netcrt.netgen import generate_matched
from oracles import si_time_distribution


def path_graph(n):
    return Network(n, [(i, i + 1) for i in range(n - 1)])


def er_pair(seed, n=300):
    a, b = generate_matched(EnsembleSpec("ER", n, 4.0), np.random.default_rng(seed))
    return make_pair(a, b)


def test_params_validation():
    with pytest.raises(InvalidSpec):
        SpreadParams(p0=0.2, p1=0.3)
    with pytest.raises(InvalidSpec):
        SpreadParams(seed_fraction=0.2, stop_fraction=0.1)
    with pytest.raises(InvalidSpec):
        SpreadParams(infectivity="both")


def test_seed_and_stop_counts():
    p = SpreadParams()
    assert p.seeds_per_cluster(100) == 1
    assert p.seeds_per_cluster(300) == 3
    assert p.seeds_per_cluster(50) == 1
    assert p.stop_count(600) == 60
    assert p.stop_count(601) == 61


def test_sample_distinct_uniform():
    rng = np.random.default_rng(0)
    R = 20000
    hits = np.zeros(10)
    for _ in range(R):
        s = sample_distinct(10, 3, rng)
        assert len(set(s.tolist())) == 3
        hits[s] += 1
    se = math.sqrt(0.3 * 0.7 / R)
    assert np.all(np.abs(hits / R - 0.3) <= 4 * se)


def test_seeds_split_between_clusters():
    seeds = choose_seeds(100, 3, np.random.default_rng(1))
    assert np.count_nonzero(seeds < 100) == 3 and np.count_nonzero(seeds >= 100) == 3


def test_zero_probability_stalls_with_only_seeds():
    pair = er_pair(0)
    params = SpreadParams(p0=0.0, p1=0.0, max_steps=50)
    with pytest.raises(StalledEpidemic) as info:
        simulate_si(pair, params, np.random.default_rng(0))
    rec = info.value.record
    assert np.count_nonzero(rec.infected_at >= 0) == 6
    assert np.all(rec.infected_at[rec.infected_at >= 0] == 0)


def test_degree_mode_certain_transmission_is_bfs():
    rng = np.random.default_rng(3)
    n = 60
    G = nx.connected_watts_strogatz_graph(2 * n, 4, 0.3, seed=3)
    graph = Network(2 * n, list(G.edges()))
    seeds = choose_seeds(n, 1, rng)
    rec = simulate_spread(graph, pair_arms(n), seeds, 1.0, 1.0, DEGREE, 2 * n + 1, 200, rng)
    dist = nx.multi_source_dijkstra_path_length(G, set(seeds.tolist()))
    expected = np.array([dist[v] for v in range(2 * n)])
    assert np.array_equal(rec.infected_at, expected)


def test_spread_follows_edges_and_seeds_at_zero():
    pair = er_pair(5)
    for s in range(20):
        rec = simulate_si(pair, SpreadParams(p0=0.6, p1=0.5), np.random.default_rng(s))
        at = rec.infected_at
        assert np.count_nonzero(at == 0) == 6
        indptr, indices = pair.graph.csr
        for v in np.flatnonzero(at > 0):
            nbrs = indices[indptr[v]:indptr[v + 1]]
            assert np.any((at[nbrs] >= 0) & (at[nbrs] < at[v]))
        c0, c1 = rec.final_count_by_arm
        assert c0 + c1 >= 60
        assert c0 + c1 == np.count_nonzero(at >= 0)


def test_isolated_node_never_infected():
    n = 50
    edges = [(i, i + 1) for i in range(n - 2)] + [(n + i, n + i + 1) for i in range(n - 1)]
    graph = Network(2 * n, edges)
    rng = np.random.default_rng(0)
    for s in range(20):
        seeds = np.array([0, n])
        rec = simulate_spread(graph, pair_arms(n), seeds, 1.0, 1.0, UNIT, 2 * n + 1, 500, rng)
        assert rec.infected_at[n - 1] == -1


def test_cumulative_counts_monotone():
    pair = er_pair(9)
    rec = simulate_si(pair, SpreadParams(), np.random.default_rng(9))
    by_step = rec.infected_by_step()
    assert np.all(np.diff(by_step, axis=0) >= 0)
    assert tuple(by_step[-1]) == rec.final_count_by_arm


def test_null_count_difference_is_symmetric():
    params = SpreadParams(p0=0.3, p1=0.3)
    diffs = []
    for s in range(600):
        pair = er_pair(s, n=100)
        rec = simulate_si(pair, params, np.random.default_rng(10_000 + s))
        c0, c1 = rec.final_count_by_arm
        diffs.append(c0 - c1)
    diffs = np.array(diffs)
    pos, neg = np.count_nonzero(diffs > 0), np.count_nonzero(diffs < 0)
    k = pos + neg
    assert abs(pos - k / 2) <= 3 * math.sqrt(k / 4)


def test_path_infection_times_match_markov_chain():
    n = 5
    graph = path_graph(n)
    adj = [[j for j in (i - 1, i + 1) if 0 <= j < n] for i in range(n)]
    horizon = 12
    exact = si_time_distribution(adj, [0], 0.5, horizon)
    R = 20000
    rng = np.random.default_rng(42)
    arm = np.zeros(n, dtype=np.int8)
    counts = np.zeros((n, horizon + 1))
    for _ in range(R):
        rec = simulate_spread(graph, arm, [0], 0.5, 0.5, UNIT, n + 1, horizon, rng)
        at = rec.infected_at
        hit = at >= 0
        counts[np.flatnonzero(hit), at[hit]] += 1
    freq = counts / R
    # node 2 distribution, the worked example
    se = np.sqrt(exact[2] * (1 - exact[2]) / R)
    assert np.all(np.abs(freq[2] - exact[2]) <= 4 * se + 1e-12)
    # node 1 is infected at step t with probability (1/2)^t
    assert np.allclose(exact[1, 1:6], 0.5 ** np.arange(1, 6))


def test_markov_oracle_degree_mode_on_triangle():
    # degree mode, certain transmission: everyone reached at step 1
    adj = [[1, 2], [0, 2], [0, 1]]
    probs = si_time_distribution(adj, [0], 1.0, 3, unit=False)
    assert probs[1, 1] == pytest.approx(1.0) and probs[2, 1] == pytest.approx(1.0)


def test_write_records(tmp_path):
    pair = er_pair(1, n=100)
    rec = simulate_si(pair, SpreadParams(), np.random.default_rng(1))
    path = tmp_path / "rec.csv"
    write_records(path, [(0, 0, rec)])
    lines = path.read_text().splitlines()
    assert lines[0] == "replicate,pair,node,arm,infected_at"
    assert len(lines) == 201
