"""Deterministic parallel evaluation of an offspring batch.

Work is split into fixed-size chunks of offspring indices; the chunk
partition never depends on the worker count, every chunk is evaluated by
pure functions, and results are gathered by chunk index before any
reduction.  Evaluation is therefore bit-identical for any ``workers``
value, and any single offspring can be reconstructed later from its
recorded 64-bit seed alone.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import IsoGaussian, PopulationDistribution
from .envs import EnvDef, evaluate_genomes, get_env
from .policy import MlpSpec, ObsNormalizer
from .rng import child_rng, mix64

CHUNK = 64

# Stream tag separating the "keep states for the obs normalizer?" draw
# from the genome-sampling stream of the same offspring.
_STATE_TAG = 0x57A7E5


@dataclass(frozen=True)
class EvalBatch:
    """One generation's offspring, sorted by offspring index."""

    seeds: np.ndarray  # (n,) uint64, per-offspring stream seeds
    components: np.ndarray  # (n,) component index (0 for unimodal)
    genomes: np.ndarray  # (n, dim)
    bcs: np.ndarray  # (n, bc_dim)
    fitness: np.ndarray  # (n,)
    generation: int
    states: np.ndarray | None = None  # sampled raw rollout states

    @property
    def n(self) -> int:
        return self.seeds.shape[0]


def offspring_seed(run_seed: int, generation: int, index: int) -> int:
    return mix64(run_seed, generation, index)


def _sample_chunk(dist: PopulationDistribution, seeds, mirrored: bool, start: int):
    dim = dist.dim
    comps = np.empty(len(seeds), dtype=np.int64)
    genomes = np.empty((len(seeds), dim))
    for j, s in enumerate(seeds):
        i = start + j
        if mirrored and i % 2 == 1:
            # Odd offspring mirrors its even partner's draw.
            rng = child_rng(offspring_pair_seed(seeds, j, i))
            comp, eps = _draw(dist, rng)
            genomes[j] = dist.means[comp] - dist.sigma * eps
        else:
            rng = child_rng(s)
            comp, eps = _draw(dist, rng)
            genomes[j] = dist.means[comp] + dist.sigma * eps
        comps[j] = comp
    return comps, genomes


def offspring_pair_seed(seeds, j: int, i: int) -> int:
    # Partner is offspring i-1, which lives in the same chunk except when a
    # chunk boundary splits the pair; chunk size is even so it never does.
    return int(seeds[j - 1])


def _draw(dist: PopulationDistribution, rng):
    if isinstance(dist, IsoGaussian):
        return 0, rng.standard_normal(dist.dim)
    comp = int(rng.integers(dist.n_components))
    return comp, rng.standard_normal(dist.dim)


def evaluate_population(
    dist: PopulationDistribution,
    env: str | EnvDef,
    spec: MlpSpec | None,
    normalizer: ObsNormalizer | None,
    n: int,
    run_seed: int,
    generation: int,
    workers: int = 1,
    mirrored: bool = False,
    state_sample_prob: float = 0.0,
) -> EvalBatch:
    """Sample, roll out, and gather one generation of offspring."""
    if n < 1 or workers < 1:
        raise ValueError("n and workers must be >= 1")
    envdef = get_env(env) if isinstance(env, str) else env
    seeds = np.array(
        [offspring_seed(run_seed, generation, i) for i in range(n)], dtype=np.uint64
    )

    def run_chunk(c0: int):
        sl = slice(c0, min(c0 + CHUNK, n))
        comps, genomes = _sample_chunk(dist, seeds[sl], mirrored, c0)
        keep = None
        if state_sample_prob > 0.0:
            keep = np.array(
                [
                    child_rng(int(s), _STATE_TAG).random() < state_sample_prob
                    for s in seeds[sl]
                ]
            )
        collect = keep is not None and bool(keep.any()) and envdef.needs_policy()
        out = evaluate_genomes(envdef, genomes, spec, normalizer, collect_states=collect)
        if collect:
            bcs, fit, states = out
            states = states[keep]
        else:
            bcs, fit = out[0], out[1]
            states = None
        return comps, genomes, bcs, fit, states

    starts = list(range(0, n, CHUNK))
    if workers == 1:
        results = [run_chunk(c0) for c0 in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, starts))

    comps = np.concatenate([r[0] for r in results])
    genomes = np.concatenate([r[1] for r in results])
    bcs = np.concatenate([r[2] for r in results])
    fitness = np.concatenate([r[3] for r in results])
    state_blocks = [r[4] for r in results if r[4] is not None]
    states = np.concatenate(state_blocks) if state_blocks else None
    return EvalBatch(
        seeds=seeds,
        components=comps,
        genomes=genomes,
        bcs=bcs,
        fitness=fitness,
        generation=generation,
        states=states,
    )
