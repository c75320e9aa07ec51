"""Statistical power of matched-pair cluster randomized trials when an
infection spreads over contact networks that link the two arms."""
from . import _backend
from .analysis import (PowerEstimate, analytic_power_hayes, icc, log_risk_ratio,
                       logrank_statistic, permutation_test, scenario1_power, scenario2_power,
                       trial_icc)
from .errors import (ConfigError, EmptyGraph, InvalidSpec, NetcrtError, NoEvents,
                     OdeInstability, RewiringError, StalledEpidemic, StalledReplicates, ZeroArm)
from .mixing import ClusterPair, make_pair, mixing_fraction, modularity, rewire_to_gamma
from .netgen import EnsembleSpec, Network, generate, generate_matched
from .ode import OdeParams, compare_ode_vs_network, solve_pair_ode
from .trial import TrialConfig, TrialOutcome, run_trial, run_trials

__version__ = "0.1.0"
BACKEND = _backend.name

__all__ = [
    "BACKEND", "ClusterPair", "ConfigError", "EmptyGraph", "EnsembleSpec", "InvalidSpec",
    "NetcrtError", "Network", "NoEvents", "OdeInstability", "OdeParams", "PowerEstimate",
    "RewiringError", "StalledEpidemic", "StalledReplicates", "TrialConfig", "TrialOutcome",
    "ZeroArm", "analytic_power_hayes", "compare_ode_vs_network", "generate",
    "generate_matched", "icc", "log_risk_ratio", "logrank_statistic", "make_pair",
    "mixing_fraction", "modularity", "permutation_test", "rewire_to_gamma", "run_trial",
    "run_trials", "scenario1_power", "scenario2_power", "solve_pair_ode", "trial_icc",
]
