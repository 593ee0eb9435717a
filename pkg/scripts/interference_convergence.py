#!/usr/bin/env python3
"""Run the interference benchmark under both diversity objectives.

The oscillator fitness is identically zero, so only a diversity-seeking
gradient can move the population mean; both objectives should drive |mu|
to the envelope argmax 5*pi/2 ~= 7.854.
"""

import argparse
from dataclasses import replace

import numpy as np

from evoes.cli import parse_config
from evoes.trainer import init_checkpoint, train_generation

TARGET = 5.0 * np.pi / 2.0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--generations", type=int, default=None)
    args = ap.parse_args()

    for preset in ("interference-maxvar", "interference-maxent"):
        print(f"== {preset} (target |mu| = {TARGET:.4f}) ==")
        for seed in args.seeds:
            cfg = replace(parse_config(preset), run_seed=seed)
            gens = args.generations or cfg.generations
            state = init_checkpoint(cfg)
            for _ in range(gens):
                state, stats, _ = train_generation(state)
            mu = float(state.dist.mean[0])
            print(
                f"seed {seed}: mu = {mu:+.4f}  | |mu| - target | = "
                f"{abs(abs(mu) - TARGET):.4f}  (loss {stats.loss:.4f})"
            )


if __name__ == "__main__":
    main()
