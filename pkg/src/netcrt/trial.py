"""Simulated matched-pair trials: C cluster pairs, each generated, mixed to a
target γ and run through the SI process.

Replicate ``r`` of phase ``k`` in grid cell ``c`` draws from
``SeedSequence([master_seed, c, k, r])``, so results do not depend on the
thread count or the order in which replicates finish.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import _backend
from .epidemic import DEGREE, InfectionRecord, SpreadParams, choose_seeds
from .errors import InvalidSpec
from .mixing import pair_arms, rewire_edges
from .netgen import EnsembleSpec, matched_edges

log = logging.getLogger(__name__)

NULL_PHASE, ALT_PHASE, PERM_PHASE = 0, 1, 2
THREADS_ENV = "NETCRT_THREADS"


@dataclass(frozen=True)
class TrialConfig:
    ensemble: str = "ER"
    n: int = 300
    C: int = 20
    mean_degree: float = 4.0
    gamma: float = 0.0
    infectivity: str = "unit"
    p0: float = 0.30
    p1: float = 0.25
    seed_fraction: float = 0.01
    stop_fraction: float = 0.10
    max_steps: int | None = None

    def __post_init__(self):
        if self.C < 1:
            raise InvalidSpec("C must be at least 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidSpec(f"gamma {self.gamma} outside [0, 1]")
        # normalises names and checks ranges
        object.__setattr__(self, "ensemble", self.ensemble_spec.kind)
        object.__setattr__(self, "infectivity", self.spread_params.infectivity)

    @property
    def ensemble_spec(self) -> EnsembleSpec:
        return EnsembleSpec(self.ensemble, self.n, self.mean_degree)

    @property
    def spread_params(self) -> SpreadParams:
        return SpreadParams(self.p0, self.p1, self.infectivity, self.seed_fraction,
                            self.stop_fraction, self.max_steps)

    def null(self) -> "TrialConfig":
        """Same design with no treatment effect (p1 = p0)."""
        return replace(self, p1=self.p0)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class TrialOutcome:
    """Per-pair results of one simulated trial.

    ``counts[c, r]`` is the final number of infected nodes in arm ``r`` of
    pair ``c``; ``events[c, r, t]`` the number infected at step ``t``
    (seeds at ``t = 0``), zero beyond that pair's ``end_times[c]``.
    """

    config: TrialConfig
    counts: np.ndarray
    end_times: np.ndarray
    events: np.ndarray
    seeds_per_cluster: int
    stalled: bool = False
    records: list[InfectionRecord] | None = field(default=None, repr=False)

    @property
    def proportions(self) -> np.ndarray:
        return self.counts / self.config.n

    @property
    def pairs(self) -> int:
        return int(self.counts.shape[0])


def replicate_rng(master_seed: int, cell: int, phase: int, replicate: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([int(master_seed), int(cell), int(phase), int(replicate)])))


def run_trial(config: TrialConfig, rng: np.random.Generator, kernels=None,
              keep_records: bool = False) -> TrialOutcome:
    """Simulate one trial of ``config.C`` independent cluster pairs."""
    k = kernels or _backend.kernels
    spec = config.ensemble_spec
    params = config.spread_params
    n = config.n
    arm = pair_arms(n)
    seeds_per = params.seeds_per_cluster(n)
    stop = params.stop_count(2 * n)
    cap = params.step_cap(n)
    degree_mode = params.infectivity == DEGREE

    end_times = np.zeros(config.C, dtype=np.int64)
    infected = np.full((config.C, 2 * n), -1, dtype=np.int32)
    records = [] if keep_records else None
    stalled = False
    for c in range(config.C):
        a, b = matched_edges(spec, rng, k)
        edges = rewire_edges(np.concatenate([a, b + n]), arm, config.gamma, rng, k)
        indptr, indices = k.csr(2 * n, edges)
        seeds = choose_seeds(n, seeds_per, rng)
        at, t, reached = k.spread(indptr, indices, arm, params.p0, params.p1, degree_mode,
                                  seeds, stop, cap, rng)
        if keep_records:
            records.append(InfectionRecord(at, arm, int(t), bool(reached)))
        if not reached:
            stalled = True
            break
        end_times[c] = t
        infected[c] = at

    if stalled:
        counts = np.zeros((config.C, 2), dtype=np.int64)
        events = np.zeros((config.C, 2, 1), dtype=np.int32)
    else:
        # one bincount over (pair, arm, step) cells
        width = int(end_times.max()) + 1
        cell = (np.arange(config.C)[:, None] * 2 + arm[None, :]) * width + infected
        events = np.bincount(cell[infected >= 0], minlength=config.C * 2 * width)
        events = events.reshape(config.C, 2, width).astype(np.int32)
        counts = events.sum(axis=2, dtype=np.int64)
    return TrialOutcome(config, counts, end_times, events, seeds_per, stalled, records)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise InvalidSpec(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, value)


def run_trials(config: TrialConfig, replicates: int, master_seed: int, cell: int = 0,
               phase: int = ALT_PHASE, threads: int | None = None,
               keep_records: bool = False, kernels=None) -> list[TrialOutcome]:
    """Simulate ``replicates`` independent trials, in replicate order."""
    threads = thread_count() if threads is None else max(1, threads)

    def one(r):
        return run_trial(config, replicate_rng(master_seed, cell, phase, r), kernels, keep_records)

    log.debug("cell %d phase %d: %d trials of %s", cell, phase, replicates, config)
    if threads == 1 or replicates < 2:
        return [one(r) for r in range(replicates)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(replicates)))
