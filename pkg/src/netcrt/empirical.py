"""Mixing estimated from observed call data.

Zips are mapped onto ``2C`` contiguous clusters, clusters ``2k-1`` and
``2k`` form pair ``k``, and each randomization treats one cluster per pair
at random. γ is the (optionally call-weighted) share of contacts that join
the two arms.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import EmptyGraph, InvalidSpec


@dataclass(frozen=True, eq=False)
class CallEdgeList:
    """Symmetrized call counts between nodes ``0..node_count-1``.

    ``src < dst`` on every row and each pair appears once, carrying the total
    number of calls in either direction. ``zip_of[i]`` is node ``i``'s zip
    index in ``1..zip_count``; ``labels`` keeps the original node ids.
    """

    src: np.ndarray
    dst: np.ndarray
    count: np.ndarray
    zip_of: np.ndarray
    zip_count: int
    labels: tuple = ()

    @property
    def node_count(self) -> int:
        return int(self.zip_of.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.src.shape[0])

    @classmethod
    def from_records(cls, records, node_zip: dict) -> "CallEdgeList":
        """Build from ``(src, dst, count)`` records and a node → zip mapping.

        Zip labels are re-indexed to ``1..Z`` in sorted order; call records
        are summed over both directions.
        """
        if not node_zip:
            raise InvalidSpec("the zip map is empty")
        labels = sorted(node_zip, key=_sort_key)
        index = {label: i for i, label in enumerate(labels)}
        zips = sorted(set(node_zip.values()), key=_sort_key)
        zip_index = {z: k + 1 for k, z in enumerate(zips)}
        zip_of = np.array([zip_index[node_zip[label]] for label in labels], dtype=np.int64)

        totals: dict[tuple[int, int], int] = {}
        for src, dst, count in records:
            missing = [x for x in (src, dst) if x not in index]
            if missing:
                raise InvalidSpec(f"node {missing[0]!r} has no zip assignment")
            count = int(count)
            if count < 1:
                raise InvalidSpec(f"call count must be a positive integer, got {count}")
            a, b = index[src], index[dst]
            if a == b:
                raise InvalidSpec(f"node {src!r} calls itself")
            key = (a, b) if a < b else (b, a)
            totals[key] = totals.get(key, 0) + count
        keys = sorted(totals)
        pairs = np.array(keys, dtype=np.int64).reshape(-1, 2)
        counts = np.array([totals[k] for k in keys], dtype=np.int64)
        return cls(pairs[:, 0].copy(), pairs[:, 1].copy(), counts, zip_of, len(zips), tuple(labels))


def _sort_key(x):
    # numeric labels sort numerically, anything else lexicographically after them
    try:
        return (0, float(x), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(x))


def load_calls(calls_path, zips_path) -> CallEdgeList:
    """Read ``src,dst,count`` and ``node,zip`` CSV files (with headers)."""
    node_zip = {}
    with open(zips_path, newline="") as fh:
        for row in _rows(fh, ("node", "zip"), zips_path):
            if row["node"] in node_zip and node_zip[row["node"]] != row["zip"]:
                raise InvalidSpec(f"{zips_path}: node {row['node']!r} has two zips")
            node_zip[row["node"]] = row["zip"]
    with open(calls_path, newline="") as fh:
        records = [(r["src"], r["dst"], _int(r["count"], calls_path))
                   for r in _rows(fh, ("src", "dst", "count"), calls_path)]
    return CallEdgeList.from_records(records, node_zip)


def _rows(fh, columns, path):
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or any(c not in reader.fieldnames for c in columns):
        raise InvalidSpec(f"{path}: expected columns {','.join(columns)}")
    for row in reader:
        yield {c: row[c].strip() for c in columns}


def _int(text, path):
    try:
        return int(text)
    except ValueError as exc:
        raise InvalidSpec(f"{path}: call count {text!r} is not an integer") from exc


def write_calls(data: CallEdgeList, calls_path, zips_path) -> None:
    labels = data.labels or tuple(range(data.node_count))
    with open(calls_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "count"])
        for a, b, c in zip(data.src.tolist(), data.dst.tolist(), data.count.tolist()):
            w.writerow([labels[a], labels[b], c])
    with open(zips_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "zip"])
        for label, z in zip(labels, data.zip_of.tolist()):
            w.writerow([label, z])


# ---------------------------------------------------------------- clusters and γ

def assign_clusters(z, zip_count: int, C: int):
    """Cluster index ⌈(z / Z) · 2C⌉ in ``1..2C`` (integer arithmetic)."""
    if C < 1 or zip_count < 1:
        raise InvalidSpec("need C >= 1 and at least one zip")
    arr = np.asarray(z, dtype=np.int64)
    if np.any((arr < 1) | (arr > zip_count)):
        raise InvalidSpec(f"zip index outside 1..{zip_count}")
    out = -((-arr * 2 * C) // zip_count)
    return int(out) if np.ndim(z) == 0 else out


@dataclass(frozen=True)
class GammaSummary:
    C: int
    weighted: bool
    mean: float
    pct2_5: float
    pct97_5: float
    randomizations: int

    def row(self):
        return [self.C, int(self.weighted), f"{self.mean:.10g}", f"{self.pct2_5:.10g}",
                f"{self.pct97_5:.10g}", self.randomizations]


GAMMA_COLUMNS = ["C", "weighted", "mean_gamma", "pct2_5", "pct97_5", "randomizations"]


def gamma_samples(data: CallEdgeList, C: int, randomizations: int, weighted: bool,
                  rng: np.random.Generator) -> np.ndarray:
    """γ under ``randomizations`` independent per-pair treatment draws."""
    if data.edge_count == 0:
        raise EmptyGraph("the call list has no edges")
    if randomizations < 1:
        raise InvalidSpec("randomizations must be positive")
    cluster = assign_clusters(data.zip_of, data.zip_count, C) - 1
    pair, member = cluster // 2, cluster % 2
    w = data.count.astype(np.float64) if weighted else np.ones(data.edge_count)
    pa, pb = pair[data.src], pair[data.dst]
    parity = member[data.src] ^ member[data.dst]
    same = pa == pb
    # edges inside one pair cross the arms exactly when they join its two clusters
    fixed = w[same & (parity == 1)].sum()
    # other edges cross when parity xor flip(pa) xor flip(pb) is 1
    x = ~same
    keys, inverse = np.unique(np.column_stack((pa[x], pb[x], parity[x])), axis=0,
                              return_inverse=True)
    group_w = np.bincount(inverse.ravel(), weights=w[x], minlength=keys.shape[0])
    flips = rng.integers(0, 2, size=(randomizations, C), dtype=np.int64)
    crossing = keys[None, :, 2] ^ flips[:, keys[:, 0]] ^ flips[:, keys[:, 1]]
    return (fixed + crossing.astype(np.float64) @ group_w) / w.sum()


def estimate_gamma_distribution(data: CallEdgeList, C: int, randomizations: int = 200,
                                weighted: bool = False,
                                rng: np.random.Generator | None = None) -> GammaSummary:
    if randomizations < 2:
        raise InvalidSpec("need at least two randomizations")
    g = gamma_samples(data, C, randomizations, weighted, rng or np.random.default_rng())
    lo, hi = np.percentile(g, [2.5, 97.5])
    mean = float(g.mean())
    # guard the summary invariant against rounding when all draws agree
    return GammaSummary(C, weighted, mean, float(min(lo, mean)), float(max(hi, mean)),
                        randomizations)


# ---------------------------------------------------------------- degrees

def node_degrees(data: CallEdgeList, weighted: bool = False) -> np.ndarray:
    """Distinct contacts per node, or total calls when ``weighted``."""
    w = data.count if weighted else np.ones(data.edge_count, dtype=np.int64)
    return (np.bincount(data.src, weights=w, minlength=data.node_count)
            + np.bincount(data.dst, weights=w, minlength=data.node_count)).astype(np.int64)


@dataclass(frozen=True)
class DegreeHistogram:
    low: np.ndarray      # inclusive bin edges
    high: np.ndarray     # exclusive bin edges
    count: np.ndarray
    degrees: np.ndarray

    @property
    def density(self) -> np.ndarray:
        """Fraction of nodes per unit degree in each bin."""
        return self.count / (self.count.sum() * (self.high - self.low))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_low", "bin_high", "count", "density"])
            for lo, hi, c, d in zip(self.low.tolist(), self.high.tolist(), self.count.tolist(),
                                    self.density.tolist()):
                w.writerow([lo, hi, c, f"{d:.10g}"])


def degree_distribution(data: CallEdgeList, weighted: bool = False) -> DegreeHistogram:
    """Degrees of nodes with at least one contact, in doubling bins [2^j, 2^(j+1))."""
    if data.edge_count == 0:
        raise EmptyGraph("the call list has no edges")
    deg = node_degrees(data, weighted)
    deg = deg[deg > 0]
    top = int(deg.max()).bit_length()
    low = 2 ** np.arange(top, dtype=np.int64)
    high = low * 2
    idx = np.floor(np.log2(deg)).astype(np.int64)
    count = np.bincount(idx, minlength=top)
    return DegreeHistogram(low, high, count, deg)


def ccdf_slope(degrees, k_min: int = 1, min_tail: int = 10) -> float:
    """Least-squares slope of log P(D >= k) against log k.

    Uses distinct degrees ``k >= k_min`` whose tail still holds at least
    ``min_tail`` nodes, so the sparse extreme tail does not dominate.
    """
    d = np.sort(np.asarray(degrees, dtype=np.int64))
    d = d[d > 0]
    if d.size == 0:
        raise EmptyGraph("no positive degrees")
    ks = np.unique(d)
    tail = d.size - np.searchsorted(d, ks, side="left")
    keep = (ks >= k_min) & (tail >= min_tail)
    if keep.sum() < 2:
        raise InvalidSpec("too few distinct degrees to fit a slope")
    slope, _ = np.polyfit(np.log(ks[keep]), np.log(tail[keep] / d.size), 1)
    return float(slope)


# ---------------------------------------------------------------- synthetic fixtures

def local_fixture(nodes: int = 2000, zip_count: int = 100, rng=None, contacts: float = 6.0,
                  local_share: float = 0.9, radius: int = 2, near_calls: float = 6.0,
                  far_calls: float = 1.5) -> CallEdgeList:
    """Spatially local calling on a line of zips.

    Each node makes Poisson(``contacts``/2) contacts. A share ``local_share``
    goes to nodes within ``radius`` zips (heavy callers, mean ``near_calls``);
    the rest go anywhere (light callers, mean ``far_calls``).
    """
    rng = rng or np.random.default_rng()
    zip_of = np.sort(rng.integers(1, zip_count + 1, size=nodes))
    by_zip = [np.flatnonzero(zip_of == z) for z in range(zip_count + 1)]
    records = []
    for i in range(nodes):
        for _ in range(rng.poisson(contacts / 2)):
            if rng.random() < local_share:
                z = int(np.clip(zip_of[i] + rng.integers(-radius, radius + 1), 1, zip_count))
                pool = by_zip[z]
                mean = near_calls
            else:
                pool = None
                mean = far_calls
            j = int(rng.integers(nodes)) if pool is None or pool.size == 0 else int(rng.choice(pool))
            if j != i:
                records.append((i, j, 1 + rng.poisson(mean - 1)))
    return CallEdgeList.from_records(records, {i: int(z) for i, z in enumerate(zip_of)})


def single_zip_fixture(nodes: int = 50, rng=None) -> CallEdgeList:
    """Random calls among nodes that all share one zip."""
    rng = rng or np.random.default_rng()
    records = [(int(a), int(b), int(1 + rng.poisson(2)))
               for a, b in rng.integers(nodes, size=(4 * nodes, 2)) if a != b]
    return CallEdgeList.from_records(records, {i: 7 for i in range(nodes)})


def cross_only_fixture(per_zip: int = 10, rng=None) -> CallEdgeList:
    """Four zips; every call joins a zip-1 node to a zip-3 node."""
    rng = rng or np.random.default_rng()
    node_zip = {i: 1 + i // per_zip for i in range(4 * per_zip)}
    z1, z3 = range(0, per_zip), range(2 * per_zip, 3 * per_zip)
    records = [(a, b, int(1 + rng.poisson(3))) for a in z1 for b in z3 if rng.random() < 0.5]
    if not records:
        records = [(0, 2 * per_zip, 1)]
    return CallEdgeList.from_records(records, node_zip)


def powerlaw_fixture(nodes: int = 20000, exponent: float = 2.5, k_min: int = 2,
                     rng=None) -> CallEdgeList:
    """Configuration-model calls with a discrete power-law degree sequence
    P(k) ∝ k^-exponent for ``k >= k_min``; loops and repeats are dropped."""
    rng = rng or np.random.default_rng()
    u = rng.random(nodes)
    # continuous Pareto rounded down, tail exponent `exponent` for the density
    deg = np.floor(k_min * (1 - u) ** (-1 / (exponent - 1))).astype(np.int64)
    deg = np.minimum(deg, nodes - 1)
    if deg.sum() % 2:
        deg[0] += 1
    stubs = rng.permutation(np.repeat(np.arange(nodes), deg))
    a, b = stubs[0::2], stubs[1::2]
    keep = a != b
    records = list(zip(a[keep].tolist(), b[keep].tolist(), [1] * int(keep.sum())))
    # repeated stub pairs add up to call counts; contacts are the distinct pairs
    return CallEdgeList.from_records(records, {i: 1 for i in range(nodes)})


FIXTURES = {"local": local_fixture, "single-zip": single_zip_fixture,
            "cross-only": cross_only_fixture, "powerlaw": powerlaw_fixture}


def make_fixture(kind: str, rng: np.random.Generator) -> CallEdgeList:
    try:
        builder = FIXTURES[kind]
    except KeyError:
        raise InvalidSpec(f"unknown fixture {kind!r}; choose from {', '.join(FIXTURES)}") from None
    return builder(rng=rng)
