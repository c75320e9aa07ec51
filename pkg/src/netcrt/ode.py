"""Mass-action approximation of a cluster pair.

With infected fractions I0 (control) and I1 (treatment)::

    dI0/dt = [(1 - γ) p0 I0 + γ p1 I1] (1 - I0)
    dI1/dt = [(1 - γ) p1 I1 + γ p0 I0] (1 - I1)

Infections are driven at the infector's rate. One simulation step is one
unit of ODE time.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec, OdeInstability
from .epidemic import UNIT, choose_seeds, simulate_spread
from .mixing import pair_arms, rewire_edges
from .netgen import Network, complete_graph


@dataclass(frozen=True)
class OdeParams:
    p0: float = 0.30
    p1: float = 0.25
    gamma: float = 0.0
    i0: float = 0.01
    t_end: int = 40
    dt: float = 0.01

    def __post_init__(self):
        if self.dt <= 0:
            raise InvalidSpec("dt must be positive")
        steps = 1.0 / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise InvalidSpec("dt must divide one time unit")
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidSpec("gamma must lie in [0, 1]")
        if not 0.0 < self.i0 < 1.0:
            raise InvalidSpec("i0 must lie in (0, 1)")
        if self.p0 < 0 or self.p1 < 0:
            raise InvalidSpec("rates must be non-negative")
        if self.t_end < 1 or int(self.t_end) != self.t_end:
            raise InvalidSpec("t_end must be a positive integer")

    @property
    def steps_per_unit(self) -> int:
        return int(round(1.0 / self.dt))


def _rhs(y, p0, p1, g):
    i0, i1 = y
    return np.array([((1 - g) * p0 * i0 + g * p1 * i1) * (1 - i0),
                     ((1 - g) * p1 * i1 + g * p0 * i0) * (1 - i1)])


def solve_pair_ode(params: OdeParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classical RK4 at step ``dt``; returns ``(t, I0, I1)`` at t = 0, 1, ..., t_end."""
    p0, p1, g, h = params.p0, params.p1, params.gamma, params.dt
    k = params.steps_per_unit
    out = np.empty((params.t_end + 1, 2))
    y = np.array([params.i0, params.i0])
    out[0] = y
    for t in range(1, params.t_end + 1):
        for _ in range(k):
            a = _rhs(y, p0, p1, g)
            b = _rhs(y + h / 2 * a, p0, p1, g)
            c = _rhs(y + h / 2 * b, p0, p1, g)
            d = _rhs(y + h * c, p0, p1, g)
            y = y + h / 6 * (a + 2 * b + 2 * c + d)
            if not np.all((y >= 0) & (y <= 1)):
                raise OdeInstability(f"solution left [0, 1] near t={t}; reduce dt")
        out[t] = y
    return np.arange(params.t_end + 1, dtype=float), out[:, 0], out[:, 1]


def logistic(t, p: float, i0: float):
    """Closed-form solution of dI/dt = p I (1 - I)."""
    e = np.exp(p * np.asarray(t, dtype=float))
    return i0 * e / (1 - i0 + i0 * e)


@dataclass(frozen=True)
class OdeComparison:
    gamma: float
    t: np.ndarray
    ode: np.ndarray          # (T+1, 2)
    sim_mean: np.ndarray     # (T+1, 2)
    sim_se: np.ndarray       # Monte Carlo standard error of sim_mean
    stop_index: int          # last compared time
    max_gap: float
    mean_bias: float         # average of sim - ODE over the window
    sim_below: bool          # sim - ODE <= 3 standard errors throughout the window

    def rows(self):
        for j, t in enumerate(self.t):
            yield (self.gamma, int(t), self.ode[j, 0], self.ode[j, 1],
                   self.sim_mean[j, 0], self.sim_mean[j, 1])


def compare_ode_vs_network(params: OdeParams, n: int, replicates: int,
                           rng: np.random.Generator, stop_fraction: float = 0.10
                           ) -> OdeComparison:
    """Average unit-infectivity runs on complete-graph clusters rewired to
    ``params.gamma`` and compare them with the ODE.

    At γ = 1 the pair is drawn directly as K_{n,n} minus a uniform perfect
    matching. Each replicate seeds ``round(i0 * n)`` nodes per cluster and runs for
    ``t_end`` steps without a stopping rule. The gap is measured up to the
    first time the ODE's pair-wide mean reaches ``stop_fraction``.
    """
    if replicates < 1:
        raise InvalidSpec("replicates must be positive")
    seeds_per = max(1, math.floor(params.i0 * n + 0.5))
    if not math.isclose(seeds_per / n, params.i0):
        raise InvalidSpec(f"i0={params.i0} is not a whole number of seeds for n={n}")
    t, i0, i1 = solve_pair_ode(params)
    ode = np.column_stack([i0, i1])
    arm = pair_arms(n)
    base = complete_graph(n).edges
    edges0 = np.concatenate([base, base + n])
    totals = np.zeros((params.t_end + 1, 2))
    squares = np.zeros_like(totals)
    for _ in range(replicates):
        if params.gamma == 1.0:
            edges = _bipartite_complement_of_matching(n, rng)
        else:
            edges = rewire_edges(edges0, arm, params.gamma, rng)
        graph = Network(2 * n, edges)
        seeds = choose_seeds(n, seeds_per, rng)
        rec = simulate_spread(graph, arm, seeds, params.p0, params.p1, UNIT,
                              2 * n + 1, params.t_end, rng)
        frac = rec.infected_by_step(params.t_end) / n
        totals += frac
        squares += frac ** 2
    sim = totals / replicates
    var = np.maximum(squares / replicates - sim ** 2, 0.0)
    se = np.sqrt(var / max(replicates - 1, 1))
    reached = np.flatnonzero(ode.mean(axis=1) >= stop_fraction)
    stop = int(reached[0]) if reached.size else params.t_end
    window = slice(0, stop + 1)
    diff = sim[window] - ode[window]
    below = bool(np.all(diff <= 3 * se[window] + 1e-12))
    return OdeComparison(params.gamma, t, ode, sim, se, stop, float(np.max(np.abs(diff))),
                         float(diff.mean()), below)


def _bipartite_complement_of_matching(n, rng):
    """Uniform degree-(n-1) graph with every edge across the arms.

    Swaps stall before converting every edge of two complete clusters; the
    only graphs with the same degrees and γ = 1 are K_{n,n} minus a perfect
    matching, so a uniform matching gives a uniform draw.
    """
    partner = rng.permutation(n)
    i, j = np.nonzero(np.arange(n)[None, :] != partner[:, None])
    return np.column_stack((i, j + n))


def ode_only(params: OdeParams) -> OdeComparison:
    """ODE trajectories with the simulation columns left empty (NaN)."""
    t, i0, i1 = solve_pair_ode(params)
    nan = np.full((t.shape[0], 2), np.nan)
    return OdeComparison(params.gamma, t, np.column_stack([i0, i1]), nan, nan, params.t_end,
                         float("nan"), float("nan"), True)


TRAJECTORY_COLUMNS = ["gamma", "t", "I0_ode", "I1_ode", "I0_sim_mean", "I1_sim_mean"]


def write_trajectories(target, comparisons) -> None:
    """CSV with ``gamma,t,I0_ode,I1_ode,I0_sim_mean,I1_sim_mean`` to a path or
    open text file; missing simulation values are left blank."""
    if hasattr(target, "write"):
        _write_rows(target, comparisons)
    else:
        with open(target, "w", newline="") as fh:
            _write_rows(fh, comparisons)


def _write_rows(fh, comparisons):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for comp in comparisons:
        for row in comp.rows():
            w.writerow([_fmt(x) for x in row])


def _fmt(x):
    if isinstance(x, int):
        return x
    return "" if math.isnan(x) else f"{x:.10g}"
