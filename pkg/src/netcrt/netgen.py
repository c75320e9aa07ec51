"""Within-cluster network ensembles: Erdős–Rényi, Barabási–Albert and a
stochastic blockmodel whose blocks sit on a triangular lattice.

All generators take a ``numpy.random.Generator`` and are pure given it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
from scipy.stats import binom

from . import _backend
from .errors import InvalidSpec

ER, BA, SBM = "ER", "BA", "SBM"
KINDS = (ER, BA, SBM)
_ALIASES = {"er": ER, "ba": BA, "sbm": SBM, "sbm-lattice": SBM, "sbm_lattice": SBM}

SBM_BLOCKS = 10
SBM_WITHIN_SHARE = 0.9

# Ten blocks in four rows (1, 2, 3, 4) of a triangular lattice; block ids are
# row-major, so block (row r, column c) has id r*(r+1)/2 + c.
LATTICE_EDGES = (
    (0, 1), (0, 2), (1, 2), (1, 3), (1, 4), (2, 4), (2, 5), (3, 4),
    (3, 6), (3, 7), (4, 5), (4, 7), (4, 8), (5, 8), (5, 9), (6, 7),
    (7, 8), (8, 9),
)


@dataclass(frozen=True, eq=False)
class Network:
    """Undirected simple graph on nodes ``0..node_count-1``.

    Edges are stored canonically: each row is ``(u, v)`` with ``u < v`` and
    rows sorted lexicographically. ``block_of`` is set for blockmodel graphs.
    """

    node_count: int
    edges: np.ndarray
    block_of: np.ndarray | None = None

    def __post_init__(self):
        if self.node_count < 1:
            raise InvalidSpec("node_count must be positive")
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 0 or e.max() >= self.node_count:
                raise InvalidSpec("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise InvalidSpec("self-loops are not allowed")
            e = np.sort(e, axis=1)
            e = e[np.lexsort((e[:, 1], e[:, 0]))]
            if np.any(np.all(e[1:] == e[:-1], axis=1)):
                raise InvalidSpec("duplicate edge")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)
        if self.block_of is not None:
            b = np.asarray(self.block_of, dtype=np.int64)
            if b.shape != (self.node_count,) or (b.size and b.min() < 0):
                raise InvalidSpec("block_of must assign a block to every node")
            b.setflags(write=False)
            object.__setattr__(self, "block_of", b)

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.node_count)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` adjacency; neighbours sorted ascending."""
        return _backend.kernels.csr(self.node_count, self.edges)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.edges.tolist()))

    def relabel(self, offset: int, node_count: int) -> "Network":
        """Shift node ids by ``offset`` inside a graph of ``node_count`` nodes."""
        return Network(node_count, self.edges + offset)


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    n: int
    mean_degree: float = 4.0
    blocks: int = SBM_BLOCKS

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise InvalidSpec(f"unknown ensemble kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.n < 2:
            raise InvalidSpec("n must be at least 2")
        if self.mean_degree < 0:
            raise InvalidSpec("mean_degree must be non-negative")
        if self.mean_degree > self.n - 1:
            raise InvalidSpec(f"mean_degree {self.mean_degree} exceeds n - 1 = {self.n - 1}")
        if kind == SBM:
            if self.blocks != SBM_BLOCKS:
                raise InvalidSpec(f"the lattice blockmodel has exactly {SBM_BLOCKS} blocks")
            if self.n % self.blocks:
                raise InvalidSpec(f"n={self.n} is not divisible by {self.blocks} blocks")
            if self.n // self.blocks < 2:
                raise InvalidSpec("blocks need at least two nodes each")
            sbm_probabilities(self.n, self.mean_degree)
        if kind == BA and self.n <= self.m_attach:
            raise InvalidSpec(f"n={self.n} must exceed m_attach={self.m_attach}")

    @property
    def m_attach(self) -> int:
        # half-up rounding, so mean_degree=1 attaches one edge
        return int(math.floor(self.mean_degree / 2 + 0.5))

    @property
    def edge_probability(self) -> float:
        return self.mean_degree / (self.n - 1)


def _require(spec, kind):
    if spec.kind != kind:
        raise InvalidSpec(f"expected a {kind} spec, got {spec.kind}")


def generate_er(spec: EnsembleSpec, rng: np.random.Generator) -> Network:
    """Each node pair is linked independently with probability ⟨k⟩/(n−1)."""
    _require(spec, ER)
    return Network(spec.n, _backend.kernels.er_edges(spec.n, spec.edge_probability, rng))


def generate_ba(spec: EnsembleSpec, rng: np.random.Generator) -> Network:
    """Preferential attachment.

    Starts from a complete graph on ``m_attach + 1`` nodes; every later node
    links to ``m_attach`` distinct existing nodes drawn with probability
    proportional to their current degree.
    """
    _require(spec, BA)
    m = spec.m_attach
    if m < 1:
        raise InvalidSpec("mean_degree must be at least 1 for preferential attachment")
    return Network(spec.n, _backend.kernels.ba_edges(spec.n, m, rng))


def ba_edge_count(n: int, m_attach: int) -> int:
    """Edges produced by :func:`generate_ba` (seed clique plus arrivals)."""
    return m_attach * (m_attach + 1) // 2 + m_attach * (n - m_attach - 1)


def lattice_neighbors() -> list[list[int]]:
    nbrs = [[] for _ in range(SBM_BLOCKS)]
    for a, b in LATTICE_EDGES:
        nbrs[a].append(b)
        nbrs[b].append(a)
    return nbrs


def sbm_probabilities(n: int, mean_degree: float) -> np.ndarray:
    """Block-to-block edge probabilities for the lattice blockmodel.

    The diagonal gives an expected within-block degree of 0.9⟨k⟩. Off the
    diagonal only lattice-adjacent blocks connect; the symmetric matrix is
    scaled so every node's expected between-block degree is 0.1⟨k⟩ whatever
    the number of lattice neighbours of its block.
    """
    s = n // SBM_BLOCKS
    probs = np.zeros((SBM_BLOCKS, SBM_BLOCKS))
    within = SBM_WITHIN_SHARE * mean_degree / (s - 1)
    if within > 1:
        raise InvalidSpec(f"within-block probability {within:.3g} exceeds 1; increase n")
    np.fill_diagonal(probs, within)
    target = (1 - SBM_WITHIN_SHARE) * mean_degree / s
    if target == 0:
        return probs
    adj = np.zeros((SBM_BLOCKS, SBM_BLOCKS))
    for a, b in LATTICE_EDGES:
        adj[a, b] = adj[b, a] = 1.0
    # symmetric matrix scaling: find x with x_a * sum_{b~a} x_b = target
    x = np.full(SBM_BLOCKS, math.sqrt(target / 4))
    for _ in range(10_000):
        nxt = np.sqrt(x * target / (adj @ x))
        if np.max(np.abs(nxt - x)) < 1e-16:
            x = nxt
            break
        x = nxt
    between = adj * np.outer(x, x)
    if between.max() > 1:
        raise InvalidSpec("between-block probability exceeds 1; increase n")
    return probs + between


@lru_cache(maxsize=64)
def _sbm_tables(n, mean_degree):
    probs = sbm_probabilities(n, mean_degree)
    slot_probs = np.array([probs[b, b] for b in range(SBM_BLOCKS)]
                          + [probs[a, b] for a, b in LATTICE_EDGES])
    slots = _sbm_slots(n // SBM_BLOCKS)
    slots.setflags(write=False)
    slot_probs.setflags(write=False)
    return slots, slot_probs


def _sbm_slots(s):
    """Pair-slot count per block pair: diagonal first, then lattice edges."""
    within = [s * (s - 1) // 2] * SBM_BLOCKS
    return np.array(within + [s * s] * len(LATTICE_EDGES), dtype=np.int64)


_SBM_PAIRS = np.array([(b, b) for b in range(SBM_BLOCKS)] + list(LATTICE_EDGES), dtype=np.int64)


def _sbm_place(n, counts, rng, kernels):
    return kernels.block_edges(n // SBM_BLOCKS, np.ascontiguousarray(counts, dtype=np.int64),
                               _SBM_PAIRS, rng)


def generate_sbm_lattice(spec: EnsembleSpec, rng: np.random.Generator) -> Network:
    """Lattice blockmodel: per-block-pair edge counts are binomial, and edges
    are then placed uniformly among that block pair's node pairs."""
    _require(spec, SBM)
    slots, probs = _sbm_tables(spec.n, float(spec.mean_degree))
    counts = rng.binomial(slots, probs)
    edges = _sbm_place(spec.n, counts, rng, _backend.kernels)
    return Network(spec.n, edges, block_of=np.arange(spec.n) // (spec.n // SBM_BLOCKS))


def generate(spec: EnsembleSpec, rng: np.random.Generator) -> Network:
    return {ER: generate_er, BA: generate_ba, SBM: generate_sbm_lattice}[spec.kind](spec, rng)


def complete_graph(n: int) -> Network:
    rows, cols = np.tril_indices(n, -1)
    return Network(n, np.column_stack((cols, rows)))


def matched_edges(spec: EnsembleSpec, rng, kernels=None):
    """Edge arrays for two clusters with the same edge count.

    The first cluster follows the ensemble exactly; the second is drawn from
    the ensemble conditioned on having the first cluster's edge count.
    """
    k = kernels or _backend.kernels
    n = spec.n
    if spec.kind == ER:
        m = int(rng.binomial(n * (n - 1) // 2, min(spec.edge_probability, 1.0)))
        return k.gnm_edges(n, m, rng), k.gnm_edges(n, m, rng)
    if spec.kind == BA:
        m = spec.m_attach
        if m < 1:
            raise InvalidSpec("mean_degree must be at least 1 for preferential attachment")
        return k.ba_edges(n, m, rng), k.ba_edges(n, m, rng)
    slots, probs = _sbm_tables(n, float(spec.mean_degree))
    first = rng.binomial(slots, probs)
    second = conditional_binomials(slots, probs, int(first.sum()), rng)
    return _sbm_place(n, first, rng, k), _sbm_place(n, second, rng, k)


@lru_cache(maxsize=32)
def _tail_sums(slots, probs, cap):
    """Binomial pmfs truncated at ``cap`` and ``tails[i][s]``, the probability
    that slots ``i..`` sum to ``s``."""
    pmfs = [binom.pmf(np.arange(min(N, cap) + 1), N, p) for N, p in zip(slots, probs)]
    tails = [None] * (len(slots) + 1)
    tails[-1] = np.zeros(cap + 1)
    tails[-1][0] = 1.0
    for i in range(len(slots) - 1, -1, -1):
        tails[i] = np.convolve(tails[i + 1], pmfs[i])[:cap + 1]
    return pmfs, tails


def conditional_binomials(slots, probs, total: int, rng: np.random.Generator) -> np.ndarray:
    """Independent Binomial(slots[i], probs[i]) counts conditioned on summing
    to ``total``, sampled exactly one coordinate at a time."""
    slots = tuple(int(x) for x in slots)
    probs = tuple(float(x) for x in probs)
    if not 0 <= total <= sum(slots):
        raise InvalidSpec(f"total {total} is outside the support")
    # round the cap up so nearby totals share one table
    cap = max(64, 1 << (int(total) - 1).bit_length())
    pmfs, tails = _tail_sums(slots, probs, cap)
    if tails[0][total] <= 0.0:
        raise InvalidSpec(f"total {total} has negligible probability")
    out = np.zeros(len(slots), dtype=np.int64)
    left = total
    u = rng.random(len(slots))
    for i in range(len(slots)):
        top = min(slots[i], left)
        weights = pmfs[i][:top + 1] * tails[i + 1][left - np.arange(top + 1)]
        cum = np.cumsum(weights)
        c = min(int(np.searchsorted(cum, u[i] * cum[-1], side="right")), top)
        out[i] = c
        left -= c
    return out


def generate_matched(spec: EnsembleSpec, rng: np.random.Generator) -> tuple[Network, Network]:
    """Two independent clusters from ``spec`` sharing one edge count."""
    a, b = matched_edges(spec, rng)
    block_of = np.arange(spec.n) // (spec.n // SBM_BLOCKS) if spec.kind == SBM else None
    return Network(spec.n, a, block_of), Network(spec.n, b, block_of)


def write_edgelist(network: Network, path) -> None:
    """Write ``# nodes=N`` followed by one zero-indexed ``u v`` pair per line."""
    lines = [f"# nodes={network.node_count}"]
    lines += [f"{u} {v}" for u, v in network.edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> Network:
    node_count = None
    pairs = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key.strip() == "nodes":
                node_count = int(value)
            continue
        u, v = line.split()
        pairs.append((int(u), int(v)))
    if node_count is None:
        raise InvalidSpec(f"{path}: missing '# nodes=N' header")
    return Network(node_count, np.array(pairs, dtype=np.int64).reshape(-1, 2))
