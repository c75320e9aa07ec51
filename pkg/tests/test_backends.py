"""Compiled and pure-Python kernels must agree draw for draw."""
import numpy as np
import pytest

from netcrt import _backend, _fallback
from netcrt.mixing import pair_arms
from netcrt.trial import TrialConfig, run_trial

pytestmark = pytest.mark.skipif("cython" not in _backend.available(),
                                reason="compiled kernels not built")


def _both(fn_name, *args):
    out = []
    for mod in (_backend.load("cython"), _fallback):
        rng = np.random.default_rng(20240611)
        out.append((getattr(mod, fn_name)(*args, rng), rng.random()))
    return out


def _same(a, b):
    if isinstance(a, tuple):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            _same(x, y)
    else:
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


@pytest.mark.parametrize("n,p", [(1, 0.5), (2, 1.0), (50, 0.0), (50, 0.1), (300, 4 / 299)])
def test_er_edges(n, p):
    (a, ra), (b, rb) = _both("er_edges", n, p)
    _same(a, b)
    assert ra == rb


@pytest.mark.parametrize("n,m", [(2, 1), (10, 45), (300, 600), (1000, 2000)])
def test_gnm_edges(n, m):
    (a, ra), (b, rb) = _both("gnm_edges", n, m)
    _same(a, b)
    assert ra == rb
    assert len({tuple(e) for e in a.tolist()}) == m
    assert np.all(a[:, 0] < a[:, 1]) if m else True


def test_rect_m_edges():
    (a, ra), (b, rb) = _both("rect_m_edges", 7, 9, 20, 0, 30)
    _same(a, b)
    assert ra == rb


@pytest.mark.parametrize("n,m", [(5, 1), (300, 2), (100, 3)])
def test_ba_edges(n, m):
    (a, ra), (b, rb) = _both("ba_edges", n, m)
    _same(a, b)
    assert ra == rb


@pytest.mark.parametrize("gamma", [0.0, 0.1, 0.5, 0.9])
def test_rewire(gamma):
    rng = np.random.default_rng(5)
    n = 60
    k = _backend.load("cython")
    edges = np.concatenate([k.gnm_edges(n, 120, rng), k.gnm_edges(n, 120, rng) + n])
    arm = pair_arms(n)
    (a, ra), (b, rb) = _both("rewire", edges, arm, gamma, -1)
    _same(a, b)
    assert ra == rb


def test_rewire_enumeration_path():
    # dense arms force long rejection streaks and the enumeration fallback
    n = 8
    k = _backend.load("cython")
    rng = np.random.default_rng(1)
    edges = np.concatenate([k.gnm_edges(n, 26, rng), k.gnm_edges(n, 26, rng) + n])
    (a, ra), (b, rb) = _both("rewire", edges, pair_arms(n), 1.0, -1)
    _same(a, b)
    assert ra == rb


def test_rewire_shuffle_path(monkeypatch):
    # BA pairs pushed to gamma = 1 sometimes need the gamma-neutral exchange
    calls = []
    original = _fallback._shuffle_move
    monkeypatch.setattr(_fallback, "_shuffle_move",
                        lambda *a: calls.append(1) or original(*a))
    k = _backend.load("cython")
    n = 300
    for seed in range(40):
        rng = np.random.default_rng(seed)
        edges = np.concatenate([k.ba_edges(n, 2, rng), k.ba_edges(n, 2, rng) + n])
        (a, ra), (b, rb) = _both("rewire", edges, pair_arms(n), 1.0, -1)
        _same(a, b)
        assert ra == rb
        assert a[1] == 0
    assert calls


@pytest.mark.parametrize("degree_mode", [False, True])
def test_spread(degree_mode):
    k = _backend.load("cython")
    rng = np.random.default_rng(2)
    n = 200
    edges = np.concatenate([k.gnm_edges(n, 400, rng), k.gnm_edges(n, 400, rng) + n])
    indptr, indices = k.csr(2 * n, edges)
    _same(indptr, _fallback.csr(2 * n, edges)[0])
    _same(indices, _fallback.csr(2 * n, edges)[1])
    seeds = np.array([3, 7, n + 1, n + 9], dtype=np.int64)
    (a, ra), (b, rb) = _both("spread", indptr, indices, pair_arms(n), 0.3, 0.25,
                             degree_mode, seeds, 40, 4000)
    _same(a, b)
    assert ra == rb


@pytest.mark.parametrize("ensemble,infectivity,gamma", [
    ("ER", "unit", 0.3), ("BA", "degree", 0.1), ("SBM", "unit", 0.0)])
def test_whole_trial(ensemble, infectivity, gamma):
    cfg = TrialConfig(ensemble=ensemble, n=100, C=3, gamma=gamma, infectivity=infectivity)
    a = run_trial(cfg, np.random.default_rng(9), _backend.load("cython"))
    b = run_trial(cfg, np.random.default_rng(9), _fallback)
    _same(a.counts, b.counts)
    _same(a.events, b.events)
    _same(a.end_times, b.end_times)
