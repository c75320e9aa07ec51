"""Command-line entry point: ``netcrt <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 too many stalled replicates,
1 any other failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

import numpy as np

from . import _backend
from .analysis import (PowerEstimate, hayes_band, rr_statistics, scenario1_from_outcomes,
                       scenario2_from_outcomes, trial_icc, usable_outcomes)
from .config import PRESETS, ExperimentConfig, load_config
from .empirical import (GAMMA_COLUMNS, FIXTURES, degree_distribution, estimate_gamma_distribution,
                        load_calls, make_fixture, write_calls)
from .errors import ConfigError, InvalidSpec, NetcrtError, StalledReplicates
from .ode import OdeParams, compare_ode_vs_network, ode_only, write_trajectories
from .trial import ALT_PHASE, NULL_PHASE, THREADS_ENV, replicate_rng, run_trials

log = logging.getLogger("netcrt")

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_STALLED = 0, 1, 2, 3

POWER_COLUMNS = ["ensemble", "infectivity", "gamma", "n", "C", "scenario", "power",
                 "ci_low", "ci_high", "replicates", "stalled"]
HAYES_COLUMNS = ["ensemble", "infectivity", "gamma", "n", "C", "pi0", "pi1",
                 "power_icc_high", "power_icc_low"]
METRIC_COLUMNS = ["ensemble", "infectivity", "gamma", "n", "C", "mean_log_rr", "sd_log_rr",
                  "replicates", "stalled"]
ICC_COLUMNS = ["ensemble", "infectivity", "gamma", "n", "C", "icc", "replicates", "stalled"]


def _num(x) -> str:
    return f"{x:.10g}"


def _cell_fields(trial):
    return [trial.ensemble, trial.infectivity, _num(trial.gamma), trial.n, trial.C]


class _Output:
    """Rows collected in memory and written once, so a failed run leaves no partial file."""

    def __init__(self, columns):
        self.buffer = io.StringIO()
        self.writer = csv.writer(self.buffer, lineterminator="\n")
        self.writer.writerow(columns)

    def add(self, row):
        self.writer.writerow(row)

    def save(self, path):
        if path is None or path == "-":
            sys.stdout.write(self.buffer.getvalue())
        else:
            with open(path, "w", newline="") as fh:
                fh.write(self.buffer.getvalue())


# ---------------------------------------------------------------- simulation commands

def _alt_outcomes(exp: ExperimentConfig, cell, trial, count, threads):
    return run_trials(trial, count, exp.master_seed, cell, ALT_PHASE, threads)


def cmd_power(exp: ExperimentConfig, threads=None, hayes_out=None) -> _Output:
    out = _Output(POWER_COLUMNS)
    hayes = _Output(HAYES_COLUMNS) if hayes_out else None
    for cell, trial in exp.cells():
        alt_count = max(exp.alt_reps if 1 in exp.scenarios else 0,
                        exp.trial_reps if 2 in exp.scenarios else 0)
        log.info("cell %d: %s gamma=%g n=%d C=%d (%s)", cell, trial.ensemble, trial.gamma,
                 trial.n, trial.C, trial.infectivity)
        alt = _alt_outcomes(exp, cell, trial, alt_count, threads)
        for scenario in sorted(exp.scenarios):
            if scenario == 1:
                null = run_trials(trial.null(), exp.null_reps, exp.master_seed, cell,
                                  NULL_PHASE, threads)
                est = scenario1_from_outcomes(null, alt[:exp.alt_reps], exp.alpha)
            else:
                est = scenario2_from_outcomes(alt[:exp.trial_reps], exp.n_perm, exp.alpha,
                                              exp.master_seed, cell)
            out.add(_power_row(trial, scenario, est))
        if hayes is not None:
            done = [o for o in alt if not o.stalled]
            props = np.mean([o.proportions.mean(axis=0) for o in done], axis=0)
            lo, hi = hayes_band(trial.C, trial.n, props[0], props[1], alpha=exp.alpha)
            hayes.add(_cell_fields(trial) + [_num(props[0]), _num(props[1]), _num(lo), _num(hi)])
    if hayes is not None:
        hayes.save(hayes_out)
    return out


def _power_row(trial, scenario, est: PowerEstimate):
    return _cell_fields(trial) + [scenario, _num(est.power), _num(est.ci95[0]),
                                  _num(est.ci95[1]), est.replicates, est.stalled]


def cmd_metrics(exp: ExperimentConfig, threads=None) -> _Output:
    out = _Output(METRIC_COLUMNS)
    for cell, trial in exp.cells():
        ok, stalled = usable_outcomes(_alt_outcomes(exp, cell, trial, exp.alt_reps, threads))
        stats = rr_statistics(ok)
        sd = float(np.std(stats, ddof=1)) if stats.size > 1 else 0.0
        out.add(_cell_fields(trial) + [_num(stats.mean()), _num(sd), stats.size, stalled])
    return out


def cmd_icc(exp: ExperimentConfig, threads=None) -> _Output:
    out = _Output(ICC_COLUMNS)
    for cell, trial in exp.cells():
        ok, stalled = usable_outcomes(_alt_outcomes(exp, cell, trial, exp.alt_reps, threads))
        value = float(np.mean([trial_icc(o) for o in ok]))
        out.add(_cell_fields(trial) + [_num(value), len(ok), stalled])
    return out


# ---------------------------------------------------------------- argument parsing

def _csv_list(kind):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        if kind is float and len(items) == 1 and items[0].count(":") == 2:
            start, stop, step = (float(x) for x in items[0].split(":"))
            if step <= 0:
                raise argparse.ArgumentTypeError("range step must be positive")
            count = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 10) for i in range(count)]
        try:
            return [kind(t) for t in items]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _add_experiment_args(p):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--ensembles", type=_csv_list(str), help="e.g. ER,BA,SBM")
    p.add_argument("--infectivities", type=_csv_list(str), help="unit,degree")
    p.add_argument("--gammas", type=_csv_list(float), help="list or start:stop:step")
    p.add_argument("--n", type=_csv_list(int))
    p.add_argument("--C", type=_csv_list(int))
    p.add_argument("--mean-degree", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--p1", type=float)
    p.add_argument("--scenarios", type=_csv_list(int))
    p.add_argument("--null-reps", type=int)
    p.add_argument("--alt-reps", type=int)
    p.add_argument("--trial-reps", type=int)
    p.add_argument("--n-perm", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int, dest="master_seed")
    p.add_argument("--out", dest="output", help="output CSV (default: stdout)")
    p.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")


_OVERRIDES = ("ensembles", "infectivities", "gammas", "n", "C", "mean_degree", "p0", "p1",
              "scenarios", "null_reps", "alt_reps", "trial_reps", "n_perm", "alpha",
              "master_seed", "output")


def _add_common(p, verbose_default, backend_default):
    p.add_argument("-v", "--verbose", action="count", default=verbose_default,
                   help="more logging on stderr (repeatable)")
    p.add_argument("--backend", choices=("cython", "python"), default=backend_default,
                   help="kernel implementation (default: compiled if available)")


def _with_parents(add_parser, common):
    def add(name, **kwargs):
        return add_parser(name, parents=[common], **kwargs)
    return add


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netcrt", description=(
        "Power of matched-pair cluster randomized trials for infections spreading "
        "on contact networks."))
    _add_common(parser, 0, None)
    sub = parser.add_subparsers(dest="command", required=True)
    # the same switches after the subcommand, without clobbering earlier values
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, argparse.SUPPRESS, argparse.SUPPRESS)
    sub.add_parser = _with_parents(sub.add_parser, common)

    p = sub.add_parser("power", help="power sweep CSV")
    _add_experiment_args(p)
    p.add_argument("--hayes-out", help="also write the analytic power band per cell")
    p = sub.add_parser("metrics", help="mean and sd of the log risk ratio per cell")
    _add_experiment_args(p)
    p = sub.add_parser("icc", help="ICC per cell")
    _add_experiment_args(p)

    p = sub.add_parser("ode", help="mass-action trajectories, optionally against simulation")
    p.add_argument("--gammas", type=_csv_list(float), default=[0.0, 0.1, 0.2, 1.0])
    p.add_argument("--p0", type=float, default=0.30)
    p.add_argument("--p1", type=float, default=0.25)
    p.add_argument("--i0", type=float, default=0.01)
    p.add_argument("--t-end", type=int, default=40)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--replicates", type=int, default=200, help="0 skips the simulation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("gamma", help="mixing estimated from call data")
    p.add_argument("--calls", required=True, help="CSV src,dst,count")
    p.add_argument("--zips", required=True, help="CSV node,zip")
    p.add_argument("--C", type=_csv_list(int), required=True)
    p.add_argument("--randomizations", type=int, default=200)
    p.add_argument("--weighted", choices=("no", "yes", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--degrees-out", help="also write the unweighted degree histogram")

    p = sub.add_parser("fixtures", help="write synthetic call data")
    p.add_argument("--kind", choices=sorted(FIXTURES), default="local")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--calls-out", required=True)
    p.add_argument("--zips-out", required=True)
    return parser


def _experiment(args) -> ExperimentConfig:
    overrides = {k: getattr(args, k) for k in _OVERRIDES}
    return load_config(args.config, args.preset, overrides)


def _run(args) -> None:
    if args.command in ("power", "metrics", "icc"):
        exp = _experiment(args)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be positive")
        if args.command == "power":
            out = cmd_power(exp, args.threads, args.hayes_out)
        elif args.command == "metrics":
            out = cmd_metrics(exp, args.threads)
        else:
            out = cmd_icc(exp, args.threads)
        out.save(exp.output)
    elif args.command == "ode":
        cmd_ode(args)
    elif args.command == "gamma":
        cmd_gamma(args)
    else:
        data = make_fixture(args.kind, np.random.default_rng(args.seed))
        write_calls(data, args.calls_out, args.zips_out)


def cmd_ode(args) -> None:
    comparisons = []
    for i, g in enumerate(args.gammas):
        params = OdeParams(args.p0, args.p1, g, args.i0, args.t_end, args.dt)
        if args.replicates > 0:
            comparisons.append(compare_ode_vs_network(params, args.n, args.replicates,
                                                      replicate_rng(args.seed, i, 0, 0)))
        else:
            comparisons.append(ode_only(params))
    write_trajectories(args.out or sys.stdout, comparisons)
    for c in comparisons:
        if not np.isnan(c.max_gap):
            log.info("gamma=%g: max gap %.4f up to t=%d, mean bias %+.4f", c.gamma, c.max_gap,
                     c.stop_index, c.mean_bias)


def cmd_gamma(args) -> None:
    data = load_calls(args.calls, args.zips)
    modes = {"no": [False], "yes": [True], "both": [False, True]}[args.weighted]
    out = _Output(GAMMA_COLUMNS)
    for i, C in enumerate(args.C):
        for weighted in modes:
            rng = replicate_rng(args.seed, i, int(weighted), 0)
            out.add(estimate_gamma_distribution(data, C, args.randomizations, weighted, rng).row())
    out.save(args.out)
    if args.degrees_out:
        degree_distribution(data, weighted=False).write_csv(args.degrees_out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    saved = _backend.kernels, _backend.name
    try:
        if args.backend:
            _backend.kernels, _backend.name = _backend.load(args.backend), args.backend
        _run(args)
    except ImportError as exc:
        log.error("backend %s is unavailable: %s", args.backend, exc)
        return EXIT_FAILURE
    except (ConfigError, InvalidSpec) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except StalledReplicates as exc:
        log.error("%s", exc)
        return EXIT_STALLED
    except (NetcrtError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_FAILURE
    finally:
        _backend.kernels, _backend.name = saved
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
