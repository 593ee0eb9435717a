#!/usr/bin/env python3
"""Check that two-component mixtures specialize to opposite walker modes.

Two variants per seed:
  * vanilla: train a k=2 mixture from scratch
  * splitting: train a single Gaussian halfway, split it into two
    components, then continue training the mixture
"""

import argparse
from dataclasses import replace

from evoes.cli import parse_config
from evoes.experiments import component_mean_bcs, split_checkpoint
from evoes.trainer import init_checkpoint, train_generation


def _steps(state, n):
    for _ in range(n):
        state, _, _ = train_generation(state)
    return state


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6])
    args = ap.parse_args()

    for seed in args.seeds:
        base = parse_config("desk-maxent")
        vanilla = _steps(init_checkpoint(replace(base, run_seed=seed, mixture_k=2)), base.generations)
        half = base.generations // 2
        single = _steps(init_checkpoint(replace(base, run_seed=seed)), half)
        split = _steps(split_checkpoint(single, 2, seed=seed), base.generations - half)
        for name, state in (("vanilla", vanilla), ("splitting", split)):
            a, b = component_mean_bcs(state)[:, 0]
            verdict = "specialized" if (a * b < 0 or abs(a - b) >= 1.0) else "collapsed"
            print(f"seed {seed} {name}: component BCs {a:+.2f}, {b:+.2f} -> {verdict}")


if __name__ == "__main__":
    main()
