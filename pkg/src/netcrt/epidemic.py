"""Discrete-time SI spreading on a cluster pair.

At every step each infected node contacts ``q`` neighbours (one random
neighbour under unit infectivity, all of them under degree infectivity) and
infects each contacted susceptible with the transmission probability of its
own arm. Updates are synchronous: infections drawn during step ``t`` take
effect at ``t + 1``. A contact that lands on an infected neighbour is wasted.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import InvalidSpec, StalledEpidemic
from .mixing import CONTROL, TREATMENT, ClusterPair
from .netgen import Network

UNIT, DEGREE = "unit", "degree"


@dataclass(frozen=True)
class SpreadParams:
    p0: float = 0.30
    p1: float = 0.25
    infectivity: str = UNIT
    seed_fraction: float = 0.01
    stop_fraction: float = 0.10
    max_steps: int | None = None

    def __post_init__(self):
        mode = str(self.infectivity).lower()
        if mode not in (UNIT, DEGREE):
            raise InvalidSpec(f"infectivity must be 'unit' or 'degree', got {self.infectivity!r}")
        object.__setattr__(self, "infectivity", mode)
        if not 0.0 <= self.p1 <= self.p0 <= 1.0:
            raise InvalidSpec("need 0 <= p1 <= p0 <= 1")
        if not 0.0 < self.seed_fraction < self.stop_fraction <= 1.0:
            raise InvalidSpec("need 0 < seed_fraction < stop_fraction <= 1")
        if self.max_steps is not None and self.max_steps < 1:
            raise InvalidSpec("max_steps must be positive")

    def seeds_per_cluster(self, n: int) -> int:
        return max(1, math.floor(self.seed_fraction * n + 0.5))

    def stop_count(self, total_nodes: int) -> int:
        """Smallest infected count whose share of ``total_nodes`` reaches the stop fraction."""
        k = max(0, math.floor(self.stop_fraction * total_nodes) - 1)
        while k / total_nodes < self.stop_fraction:
            k += 1
        return k

    def step_cap(self, n: int) -> int:
        return self.max_steps if self.max_steps is not None else 10 * n


@dataclass(frozen=True, eq=False)
class InfectionRecord:
    """Outcome of one spreading run.

    ``infected_at[i]`` is the step at which node ``i`` became infected, or -1
    if it never was. Seeds carry step 0.
    """

    infected_at: np.ndarray
    arm_of: np.ndarray
    end_time: int
    reached: bool = True

    @property
    def final_count_by_arm(self) -> tuple[int, int]:
        hit = (self.infected_at >= 0) & (self.infected_at <= self.end_time)
        return (int(np.count_nonzero(hit & (self.arm_of == CONTROL))),
                int(np.count_nonzero(hit & (self.arm_of == TREATMENT))))

    def infected_by_step(self, horizon: int | None = None) -> np.ndarray:
        """Cumulative infected counts per arm for steps ``0..horizon``; shape (T+1, 2)."""
        horizon = self.end_time if horizon is None else horizon
        out = np.zeros((horizon + 1, 2), dtype=np.int64)
        for r in (CONTROL, TREATMENT):
            t = self.infected_at[(self.arm_of == r) & (self.infected_at >= 0)]
            t = t[t <= horizon]
            out[:, r] = np.cumsum(np.bincount(t, minlength=horizon + 1))
        return out


def sample_distinct(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` distinct uniform draws from ``range(n)`` (Floyd's algorithm)."""
    u = rng.random(k).tolist()
    seen: set[int] = set()
    for i, j in enumerate(range(n - k, n)):
        t = min(int(u[i] * (j + 1)), j)
        seen.add(j if t in seen else t)
    return np.fromiter(seen, dtype=np.int64, count=k)


def choose_seeds(n: int, per_cluster: int, rng: np.random.Generator) -> np.ndarray:
    """Distinct uniform seeds in each of the two clusters ``[0, n)`` and ``[n, 2n)``."""
    if per_cluster > n:
        raise InvalidSpec("more seeds than nodes in a cluster")
    a = sample_distinct(n, per_cluster, rng)
    b = sample_distinct(n, per_cluster, rng) + n
    return np.sort(np.concatenate([a, b]))


def simulate_spread(graph: Network, arm_of, seeds, p0: float, p1: float, infectivity: str,
                    stop_count: int, max_steps: int, rng: np.random.Generator) -> InfectionRecord:
    """Run the SI process from explicit seeds until ``stop_count`` nodes are
    infected or ``max_steps`` steps have passed (``reached`` tells which)."""
    arm = np.ascontiguousarray(arm_of, dtype=np.int8)
    indptr, indices = graph.csr
    at, t, reached = _backend.kernels.spread(
        indptr, indices, arm, float(p0), float(p1), infectivity == DEGREE,
        np.ascontiguousarray(seeds, dtype=np.int64), int(stop_count), int(max_steps), rng)
    return InfectionRecord(at, arm, int(t), bool(reached))


def simulate_si(pair: ClusterPair, params: SpreadParams, rng: np.random.Generator) -> InfectionRecord:
    """Seed each cluster, then spread until the pair-wide infected share reaches
    ``params.stop_fraction``.

    Raises :class:`StalledEpidemic` (carrying the partial record) if the
    stopping share is not reached within the step cap.
    """
    n = pair.cluster_size
    seeds = choose_seeds(n, params.seeds_per_cluster(n), rng)
    record = simulate_spread(pair.graph, pair.arm_of, seeds, params.p0, params.p1,
                             params.infectivity, params.stop_count(2 * n),
                             params.step_cap(n), rng)
    if not record.reached:
        raise StalledEpidemic(
            f"infected share stayed below {params.stop_fraction} after {record.end_time} steps",
            record)
    return record


def write_records(path, rows) -> None:
    """Write ``replicate,pair,node,arm,infected_at`` rows.

    ``rows`` yields ``(replicate, pair_index, InfectionRecord)``; nodes never
    infected get an empty ``infected_at`` field.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", "pair", "node", "arm", "infected_at"])
        for rep, pair_index, rec in rows:
            for node, (arm, t) in enumerate(zip(rec.arm_of.tolist(), rec.infected_at.tolist())):
                w.writerow([rep, pair_index, node, arm, t if t >= 0 else ""])
