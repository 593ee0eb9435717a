#!/usr/bin/env python3
"""Measure how well a diversity-trained population adapts to a direction.

Two probes from the same MaxVar checkpoint:
  * best-of-k mutation screening toward +x and -x (one-shot adaptation)
  * standard ES warm-started from the checkpoint vs a fresh initialization,
    compared at generations 5, 10, and 20.
"""

import argparse
from dataclasses import replace

from evoes.cli import parse_config
from evoes.experiments import adapt_best_of_k, seed_standard_es
from evoes.trainer import init_checkpoint, train_generation


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--k", type=int, default=32)
    args = ap.parse_args()

    for seed in args.seeds:
        cfg = replace(parse_config("desk-maxvar"), run_seed=seed)
        state = init_checkpoint(cfg)
        for _ in range(cfg.generations):
            state, _, _ = train_generation(state)

        for objective in ("+x", "-x"):
            rep = adapt_best_of_k(state, objective, k=args.k, n_eval=4, seed=seed)
            print(f"seed {seed} adapt {objective}: best-of-{args.k} score {rep.best_score:.2f}")

        seeded = seed_standard_es(state, "+x", 20)
        fresh_cfg = replace(parse_config("desk-standard"), run_seed=seed, generations=20)
        fresh_state = init_checkpoint(fresh_cfg)
        fresh = []
        for _ in range(20):
            fresh_state, stats, _ = train_generation(fresh_state)
            fresh.append(stats)
        for gen in (5, 10, 20):
            print(
                f"seed {seed} gen {gen}: warm-start {seeded[gen - 1].fitness_mean:.2f} "
                f"vs fresh {fresh[gen - 1].fitness_mean:.2f}"
            )


if __name__ == "__main__":
    main()
