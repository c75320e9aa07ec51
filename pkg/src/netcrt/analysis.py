"""Test statistics, permutation tests, empirical power, ICC and the analytic
power comparison.

Analytic power
--------------
``analytic_power_hayes`` uses the design-effect form of the two-proportion
comparison for an unmatched cluster design with ``C`` clusters of ``n``
individuals per arm::

    DE  = 1 + (n - 1) * icc
    z_b = sqrt(C * n * (pi0 - pi1)**2 / (DE * (pi0*(1-pi0) + pi1*(1-pi1)))) - z_{alpha/2}
    power = Phi(z_b)

With ``icc = 0`` and ``n = 1`` this is the textbook power of a two-sample
comparison of proportions with ``C`` subjects per arm.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import InvalidSpec, NoEvents, StalledReplicates, ZeroArm
from .trial import ALT_PHASE, NULL_PHASE, PERM_PHASE, TrialConfig, TrialOutcome, replicate_rng, run_trials

SCENARIO_RR, SCENARIO_LOGRANK = 1, 2
EXACT_PAIR_LIMIT = 12
STALL_LIMIT = 0.01
ICC_BAND = (0.003, 0.06)
# |Z| comparisons treat values this close as ties (floating-point noise)
_TIE = 1e-9


# ---------------------------------------------------------------- Scenario 1

def _proportions(counts, n, continuity):
    counts = np.asarray(counts, dtype=np.float64)
    if np.any(counts <= 0):
        if not continuity:
            raise ZeroArm("an arm has no infections; the log ratio is undefined")
        counts = counts + 0.5
    return counts / n


def log_risk_ratio(outcome: TrialOutcome | None = None, *, counts=None, n=None,
                   continuity: bool = False) -> float:
    """Mean over pairs of log(I_control / I_treatment) using final proportions.

    Pass a :class:`TrialOutcome`, or ``counts`` of shape (C, 2) plus the
    cluster size ``n``. With ``continuity=True`` a trial containing a zero
    arm count gets 0.5 added to every arm count instead of raising
    :class:`ZeroArm`.
    """
    if outcome is not None:
        counts, n = outcome.counts, outcome.config.n
    if counts is None or n is None:
        raise InvalidSpec("need an outcome or counts and n")
    p = _proportions(counts, n, continuity).reshape(-1, 2)
    return float(np.mean(np.log(p[:, 0]) - np.log(p[:, 1])))


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        raise InvalidSpec("need at least one trial")
    z = norm.ppf(0.5 + level / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class PowerEstimate:
    power: float
    replicates: int
    ci95: tuple[float, float]
    scenario: int
    stalled: int = 0
    cutoffs: tuple[float, float] | None = None
    statistics: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_rejections(cls, rejected, scenario, stalled=0, cutoffs=None, statistics=None):
        rejected = np.asarray(rejected, dtype=bool)
        k, r = int(rejected.sum()), int(rejected.size)
        return cls(k / r, r, wilson_interval(k, r), scenario, stalled, cutoffs, statistics)


def usable_outcomes(outcomes, label="alternative"):
    """Drop stalled trials, raising :class:`StalledReplicates` above the 1% limit."""
    stalled = sum(o.stalled for o in outcomes)
    if stalled > STALL_LIMIT * len(outcomes):
        raise StalledReplicates(
            f"{stalled} of {len(outcomes)} {label} trials stalled (limit {STALL_LIMIT:.0%})",
            stalled, len(outcomes))
    return [o for o in outcomes if not o.stalled], stalled


def rr_statistics(outcomes, continuity: bool = True) -> np.ndarray:
    return np.array([log_risk_ratio(o, continuity=continuity) for o in outcomes])


def null_cutoffs(null_stats, alpha: float = 0.05) -> tuple[float, float]:
    lo, hi = np.quantile(np.asarray(null_stats, dtype=float), [alpha / 2, 1 - alpha / 2])
    return float(lo), float(hi)


def scenario1_from_statistics(null_stats, alt_stats, alpha: float = 0.05,
                              stalled: int = 0) -> PowerEstimate:
    """Reject when the statistic falls strictly outside the null quantile cutoffs."""
    _check_alpha(alpha)
    lo, hi = null_cutoffs(null_stats, alpha)
    alt = np.asarray(alt_stats, dtype=float)
    return PowerEstimate.from_rejections((alt < lo) | (alt > hi), SCENARIO_RR, stalled,
                                         (lo, hi), alt)


def scenario1_from_outcomes(null_outcomes, alt_outcomes, alpha: float = 0.05) -> PowerEstimate:
    null_ok, s0 = usable_outcomes(null_outcomes, "null")
    alt_ok, s1 = usable_outcomes(alt_outcomes, "alternative")
    return scenario1_from_statistics(rr_statistics(null_ok), rr_statistics(alt_ok), alpha, s0 + s1)


def scenario1_power(config: TrialConfig, null_reps: int, alt_reps: int, alpha: float = 0.05,
                    seed: int = 0, cell: int = 0, threads: int | None = None) -> PowerEstimate:
    """Simulated-cutoff test of the log risk ratio.

    ``null_reps`` trials with p1 = p0 fix the cutoffs, then ``alt_reps``
    trials under ``config`` are tested against them. Stalled trials are
    dropped and counted; more than 1% stalled raises :class:`StalledReplicates`.
    """
    if null_reps < 1 or alt_reps < 1:
        raise InvalidSpec("replicate counts must be positive")
    null = run_trials(config.null(), null_reps, seed, cell, NULL_PHASE, threads)
    alt = run_trials(config, alt_reps, seed, cell, ALT_PHASE, threads)
    return scenario1_from_outcomes(null, alt, alpha)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise InvalidSpec(f"alpha must lie in (0, 1), got {alpha}")


# ---------------------------------------------------------------- Scenario 2

def _risk_table(times, horizon):
    """Per-time at-risk and event counts for one arm, times 0..H."""
    times = np.asarray(times, dtype=np.int64).ravel()
    horizon = np.broadcast_to(np.asarray(horizon, dtype=np.int64), times.shape)
    event = (times >= 0) & (times <= horizon)
    exit_time = np.where(event, times, horizon)
    H = int(max(exit_time.max(initial=0), 0))
    # a subject is at risk at t when t <= its exit time
    exits = np.bincount(exit_time[exit_time >= 0], minlength=H + 1)
    at_risk = exits[::-1].cumsum()[::-1]
    events = np.bincount(times[event], minlength=H + 1)
    return at_risk, events


def _pad(a, size):
    out = np.zeros(size, dtype=np.float64)
    out[:a.shape[0]] = a
    return out


def _z_from_tables(y0, d0, y, d):
    """Logrank Z (control observed minus expected) from pooled tables.

    ``y0``/``d0`` may carry a leading batch axis; ``y``/``d`` are totals.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(y > 0, y0 / y, 0.0)
        o_minus_e = (d0 - d * frac).sum(axis=-1)
        v = np.where(y > 1, d * frac * (1 - frac) * (y - d) / (y - 1), 0.0).sum(axis=-1)
    return o_minus_e, v


def logrank_statistic(times_control, times_treatment, horizon) -> float:
    """Two-sample logrank Z for grouped discrete event times.

    Times are integers; a negative time means no event. Subjects without an
    event by ``horizon`` (a scalar, or one value per subject given as a
    ``(control, treatment)`` pair of arrays) are censored there and stay at
    risk through ``horizon``. Positive values mean more control events than
    expected. Raises :class:`NoEvents` when the variance is zero.
    """
    if isinstance(horizon, tuple):
        h0, h1 = horizon
    else:
        h0 = h1 = horizon
    y0, d0 = _risk_table(times_control, h0)
    y1, d1 = _risk_table(times_treatment, h1)
    size = max(y0.shape[0], y1.shape[0])
    y0, d0, y1, d1 = (_pad(a, size) for a in (y0, d0, y1, d1))
    o_minus_e, v = _z_from_tables(y0, d0, y0 + y1, d0 + d1)
    if v <= 0:
        raise NoEvents("logrank variance is zero")
    return float(o_minus_e / math.sqrt(v))


@dataclass(frozen=True)
class PairTables:
    """Per-pair risk tables for times 1..H (seeds at time 0 are left out).

    ``at_risk[c, r, t]`` and ``events[c, r, t]`` for arm ``r`` of pair ``c``.
    """

    at_risk: np.ndarray
    events: np.ndarray

    @classmethod
    def from_outcome(cls, outcome: TrialOutcome) -> "PairTables":
        ev = outcome.events.astype(np.float64)[:, :, 1:]
        C, _, H = ev.shape
        n_risk = outcome.config.n - outcome.events[:, :, 0].astype(np.float64)
        before = np.concatenate([np.zeros((C, 2, 1)), np.cumsum(ev, axis=2)[:, :, :-1]], axis=2)
        at_risk = n_risk[:, :, None] - before
        t = np.arange(1, H + 1)
        at_risk *= (t[None, None, :] <= outcome.end_times[:, None, None])
        return cls(at_risk, ev)

    def z(self, flips) -> np.ndarray:
        """Pooled logrank Z for each row of ``flips`` (1 = swap that pair's arms)."""
        flips = np.atleast_2d(np.asarray(flips, dtype=np.float64))
        y0 = self.at_risk[:, 0].sum(axis=0) + flips @ (self.at_risk[:, 1] - self.at_risk[:, 0])
        d0 = self.events[:, 0].sum(axis=0) + flips @ (self.events[:, 1] - self.events[:, 0])
        y = self.at_risk.sum(axis=(0, 1))
        d = self.events.sum(axis=(0, 1))
        o_minus_e, v = _z_from_tables(y0, d0, y, d)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(v > 0, o_minus_e / np.sqrt(v), 0.0)

    def observed(self) -> float:
        v = _z_from_tables(self.at_risk[:, 0].sum(0), self.events[:, 0].sum(0),
                           self.at_risk.sum(axis=(0, 1)), self.events.sum(axis=(0, 1)))[1]
        if v <= 0:
            raise NoEvents("no post-seed infections in this trial")
        return float(self.z(np.zeros(self.at_risk.shape[0]))[0])


def all_flips(C: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=C)), dtype=np.int8)


def permutation_test(outcome: TrialOutcome, n_perm: int, rng: np.random.Generator,
                     exact: bool | None = None) -> float:
    """Per-pair label-flip permutation p-value of the pooled logrank statistic.

    Up to 12 pairs every flip pattern is enumerated and the p-value is the
    fraction with ``|Z| >= |Z_obs|``; beyond that ``n_perm`` patterns are
    sampled and ``(1 + hits) / (1 + n_perm)`` is returned.
    """
    tables = PairTables.from_outcome(outcome)
    return flip_p_value(tables, n_perm, rng, exact)


def flip_p_value(tables: PairTables, n_perm: int, rng, exact: bool | None = None) -> float:
    C = tables.at_risk.shape[0]
    if C < 2:
        raise InvalidSpec("the permutation test needs at least two pairs")
    observed = abs(tables.observed())
    if exact is None:
        exact = C <= EXACT_PAIR_LIMIT
    if exact:
        z = np.abs(tables.z(all_flips(C)))
        return float(np.mean(z >= observed - _TIE))
    if n_perm < 1:
        raise InvalidSpec("n_perm must be positive")
    hits = 0
    for start in range(0, n_perm, 4096):
        k = min(4096, n_perm - start)
        flips = rng.integers(0, 2, size=(k, C), dtype=np.int8)
        hits += int(np.count_nonzero(np.abs(tables.z(flips)) >= observed - _TIE))
    return (1 + hits) / (1 + n_perm)


def scenario2_from_outcomes(outcomes, n_perm: int, alpha: float = 0.05, seed: int = 0,
                            cell: int = 0) -> PowerEstimate:
    """Power of the permutation logrank test; trial ``r`` permutes with the
    generator of (seed, cell, permutation phase, r)."""
    _check_alpha(alpha)
    ok, stalled = usable_outcomes(outcomes, "alternative")
    pvals = []
    for r, o in enumerate(outcomes):
        if o.stalled:
            continue
        pvals.append(permutation_test(o, n_perm, replicate_rng(seed, cell, PERM_PHASE, r)))
    pvals = np.array(pvals)
    return PowerEstimate.from_rejections(pvals < alpha, SCENARIO_LOGRANK, stalled,
                                         statistics=pvals)


def scenario2_power(config: TrialConfig, trial_reps: int, n_perm: int, alpha: float = 0.05,
                    seed: int = 0, cell: int = 0, threads: int | None = None) -> PowerEstimate:
    outcomes = run_trials(config, trial_reps, seed, cell, ALT_PHASE, threads)
    return scenario2_from_outcomes(outcomes, n_perm, alpha, seed, cell)


# ---------------------------------------------------------------- ICC and analytic power

def _check_props(props):
    p = np.asarray(props, dtype=np.float64).ravel()
    if p.size == 0 or np.any((p < 0) | (p > 1)):
        raise InvalidSpec("proportions must lie in [0, 1]")
    mean = p.mean()
    if mean <= 0 or mean >= 1:
        raise InvalidSpec("ICC is undefined when the mean proportion is 0 or 1")
    return p, mean


def icc(cluster_proportions) -> float:
    """Between-cluster share of the binary outcome variance:
    Var(π_c) / (π̄(1 − π̄)), with the population variance over clusters."""
    p, mean = _check_props(cluster_proportions)
    return float(np.mean((p - mean) ** 2) / (mean * (1 - mean)))


def within_variance_ratio(cluster_proportions) -> float:
    """⟨π_c(1 − π_c)⟩ / (π̄(1 − π̄)); equals ``1 - icc``."""
    p, mean = _check_props(cluster_proportions)
    return float(np.mean(p * (1 - p)) / (mean * (1 - mean)))


def trial_icc(outcome: TrialOutcome) -> float:
    """ICC of final cluster proportions, computed within each arm and averaged."""
    props = outcome.proportions
    return float(np.mean([icc(props[:, r]) for r in (0, 1)]))


def analytic_power_hayes(C: int, n: int, p0_expected: float, p1_expected: float,
                         icc_value: float, alpha: float = 0.05) -> float:
    """Design-effect power for ``C`` clusters of ``n`` per arm (see module notes)."""
    if C < 1 or n < 1:
        raise InvalidSpec("C and n must be positive")
    if not (0 < p0_expected < 1 and 0 < p1_expected < 1):
        raise InvalidSpec("expected proportions must lie in (0, 1)")
    if not 0 <= icc_value <= 1:
        raise InvalidSpec("icc must lie in [0, 1]")
    _check_alpha(alpha)
    de = 1 + (n - 1) * icc_value
    var = p0_expected * (1 - p0_expected) + p1_expected * (1 - p1_expected)
    zb = math.sqrt(C * n * (p0_expected - p1_expected) ** 2 / (de * var)) - norm.ppf(1 - alpha / 2)
    return float(norm.cdf(zb))


def hayes_band(C: int, n: int, p0_expected: float, p1_expected: float,
               icc_range=ICC_BAND, alpha: float = 0.05) -> tuple[float, float]:
    """Analytic power at the high and low ends of ``icc_range`` (low, high power)."""
    lo_icc, hi_icc = icc_range
    return (analytic_power_hayes(C, n, p0_expected, p1_expected, hi_icc, alpha),
            analytic_power_hayes(C, n, p0_expected, p1_expected, lo_icc, alpha))
