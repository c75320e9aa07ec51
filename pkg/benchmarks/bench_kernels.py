"""Time the compiled and pure-Python kernel backends on identical work.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--trials 5]

Each case runs with the same seed on both backends. The outputs are checked
for equality before any timing is reported.
"""
import argparse
import time

import numpy as np

from netcrt import _backend
from netcrt.mixing import pair_arms
from netcrt.netgen import EnsembleSpec, matched_edges
from netcrt.trial import TrialConfig, run_trial


def _pair_edges(kind, n, rng, k):
    a, b = matched_edges(EnsembleSpec(kind, n, 4.0), rng, k)
    return np.concatenate([a, b + n])


def case_generate(k, kind, n=300):
    return lambda rng: _pair_edges(kind, n, rng, k)


def case_rewire(k, kind, gamma, n=300):
    arm = pair_arms(n)

    def run(rng):
        edges = _pair_edges(kind, n, rng, k)
        return k.rewire(edges, arm, gamma, -1, rng)[0]
    return run


def case_spread(k, n=300):
    arm = pair_arms(n)

    def run(rng):
        indptr, indices = k.csr(2 * n, _pair_edges("ER", n, rng, k))
        seeds = np.array([0, 1, 2, n, n + 1, n + 2], dtype=np.int64)
        return k.spread(indptr, indices, arm, 0.3, 0.25, False, seeds, 60, 300, rng)[0]
    return run


def case_trial(k, ensemble):
    config = TrialConfig(ensemble=ensemble, gamma=0.25)
    return lambda rng: run_trial(config, rng, kernels=k).events


CASES = {
    "generate ER pair (n=300)": lambda k: case_generate(k, "ER"),
    "generate BA pair (n=300)": lambda k: case_generate(k, "BA"),
    "generate SBM pair (n=300)": lambda k: case_generate(k, "SBM"),
    "rewire ER to gamma 0.5": lambda k: case_rewire(k, "ER", 0.5),
    "rewire BA to gamma 1.0": lambda k: case_rewire(k, "BA", 1.0),
    "SI spread on ER pair": case_spread,
    "trial ER, C=20, gamma 0.25": lambda k: case_trial(k, "ER"),
    "trial BA, C=20, gamma 0.25": lambda k: case_trial(k, "BA"),
}


def best_time(fn, repeat, trials, seed):
    best = float("inf")
    for _ in range(repeat):
        rng = np.random.default_rng(seed)
        start = time.perf_counter()
        for _ in range(trials):
            fn(rng)
        best = min(best, (time.perf_counter() - start) / trials)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    if "cython" not in _backend.available():
        raise SystemExit("compiled extension missing; run `python3 setup.py build_ext --inplace`")
    backends = {name: _backend.load(name) for name in ("cython", "python")}

    print(f"{'case':<30} {'cython ms':>10} {'python ms':>10} {'speedup':>8}")
    for label, make in CASES.items():
        fns = {name: make(k) for name, k in backends.items()}
        outs = [fns[name](np.random.default_rng(args.seed)) for name in backends]
        if not np.array_equal(outs[0], outs[1]):
            raise SystemExit(f"{label}: backends disagree")
        ms = {name: 1e3 * best_time(fn, args.repeat, args.trials, args.seed)
              for name, fn in fns.items()}
        print(f"{label:<30} {ms['cython']:>10.3f} {ms['python']:>10.3f} "
              f"{ms['python'] / ms['cython']:>7.1f}x")


if __name__ == "__main__":
    main()
