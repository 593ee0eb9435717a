"""Evaluation-protocol drivers: adaptation, seeding, speciation, analysis."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .distributions import IsoGaussian
from .envs import evaluate_genomes, get_env
from .rng import child_rng, mix64
from .runtime import evaluate_population
from .trainer import (
    Checkpoint,
    GenStats,
    OptimizerState,
    objective_values,
    resolve_mlp_spec,
    train_generation,
)


@dataclass(frozen=True)
class AdaptReport:
    best_seed: int
    best_score: float
    all_scores: np.ndarray


@dataclass(frozen=True)
class BimodalityMetrics:
    frac_positive: float
    mean_abs_bc: float
    var_trace: float


def adapt_best_of_k(state: Checkpoint, objective: str, k: int, n_eval: int, seed: int) -> AdaptReport:
    """Best-of-k mutation adaptation from the population's central mean.

    Each mutation j is central_mean + sigma * noise from the stream keyed
    by mix64(seed, j), so nested seed sequences are prefix-stable: raising
    k reuses the first k mutations.  Scores average n_eval rollouts (all
    identical for the built-in deterministic envs, kept for interface
    parity with stochastic ones).
    """
    if k < 1 or n_eval < 1:
        raise ValueError("k and n_eval must be >= 1")
    cfg = state.config
    spec = resolve_mlp_spec(cfg)
    envdef = get_env(cfg.env)
    means = state.dist.means
    scores = np.empty(k)
    for j in range(k):
        mseed = mix64(seed, j)
        rng = child_rng(mseed)
        comp = 0 if means.shape[0] == 1 else int(rng.integers(means.shape[0]))
        genome = means[comp] + cfg.sigma * rng.standard_normal(means.shape[1])
        vals = []
        for _ in range(n_eval):
            bcs, fit = evaluate_genomes(envdef, genome[None, :], spec, state.normalizer)
            vals.append(objective_values(objective, bcs, fit)[0])
        scores[j] = np.mean(vals)
    best = int(np.argmax(scores))
    return AdaptReport(best_seed=mix64(seed, best), best_score=float(scores[best]), all_scores=scores)


def seed_standard_es(state: Checkpoint, objective: str, generations: int, workers: int = 1) -> list[GenStats]:
    """Continue a trained population with standard ES on a signed objective.

    The optimizer moments are reset (new objective, stale moments); the
    observation normalizer is kept so behavior is preserved at handoff.
    """
    cfg = replace(state.config, algo="standard_es", objective=objective)
    k, dim = state.dist.means.shape
    if cfg.optimizer == "adam":
        opt = OptimizerState("adam", 0, np.zeros((k, dim)), np.zeros((k, dim)))
    else:
        opt = OptimizerState("sgd")
    st = replace(state, config=cfg, optimizer_state=opt)
    curve = []
    for _ in range(generations):
        st, stats, _ = train_generation(st, workers)
        curve.append(stats)
    return curve


def bimodality_metrics(batch) -> BimodalityMetrics:
    """Sign balance and spread of a batch's behavior characteristics."""
    bcs = np.asarray(batch.bcs if hasattr(batch, "bcs") else batch, dtype=np.float64)
    if bcs.shape[0] < 100:
        raise ValueError("bimodality metrics need at least 100 samples")
    if bcs.shape[1] == 1:
        mean_abs = float(np.mean(np.abs(bcs[:, 0])))
    else:
        mean_abs = float(np.mean(np.linalg.norm(bcs, axis=1)))
    return BimodalityMetrics(
        frac_positive=float(np.mean(bcs[:, 0] > 0)),
        mean_abs_bc=mean_abs,
        var_trace=float(np.sum(bcs.var(axis=0))),
    )


def sample_final_batch(state: Checkpoint, n: int, workers: int = 1, seed_tag: int = 0xF1A1):
    """Fresh offspring batch from a trained checkpoint, for analysis."""
    cfg = state.config
    return evaluate_population(
        state.dist,
        cfg.env,
        resolve_mlp_spec(cfg),
        state.normalizer,
        n,
        mix64(cfg.run_seed, seed_tag),
        state.generation,
        workers=workers,
        mirrored=cfg.mirrored,
    )


@dataclass(frozen=True)
class Heatmap:
    bins: int
    range: float
    n: int
    out_of_range: int
    counts: np.ndarray  # (bins,) for 1-D BCs, (bins, bins) for 2-D


def export_heatmap(batch, bins: int, range_: float) -> Heatmap:
    """Histogram of BCs over [-range, range]^d; counts sum to n minus
    out-of-range offspring."""
    if bins < 1 or range_ <= 0:
        raise ValueError("bins >= 1 and range > 0 required")
    bcs = np.asarray(batch.bcs if hasattr(batch, "bcs") else batch, dtype=np.float64)
    n, d = bcs.shape
    edges = np.linspace(-range_, range_, bins + 1)
    if d == 1:
        counts, _ = np.histogram(bcs[:, 0], bins=edges)
    elif d == 2:
        counts, _, _ = np.histogram2d(bcs[:, 0], bcs[:, 1], bins=(edges, edges))
        counts = counts.astype(np.int64)
    else:
        raise ValueError(f"heatmaps support 1-D or 2-D BCs, got d={d}")
    counts = counts.astype(np.int64)
    return Heatmap(bins=bins, range=range_, n=n, out_of_range=int(n - counts.sum()), counts=counts)


def heatmap_to_csv(hm: Heatmap) -> str:
    """First row metadata, then row-major counts."""
    lines = [f"bins={hm.bins},range={hm.range!r},n={hm.n},out_of_range={hm.out_of_range}"]
    grid = hm.counts if hm.counts.ndim == 2 else hm.counts[None, :]
    for row in grid:
        lines.append(",".join(str(int(c)) for c in row))
    return "\n".join(lines) + "\n"


def heatmap_from_csv(text: str) -> Heatmap:
    lines = [ln for ln in text.strip().split("\n") if ln]
    meta = dict(kv.split("=") for kv in lines[0].split(","))
    counts = np.array([[int(c) for c in ln.split(",")] for ln in lines[1:]], dtype=np.int64)
    if counts.shape[0] == 1:
        counts = counts[0]
    return Heatmap(
        bins=int(meta["bins"]),
        range=float(meta["range"]),
        n=int(meta["n"]),
        out_of_range=int(meta["out_of_range"]),
        counts=counts,
    )


def component_mean_bcs(state: Checkpoint) -> np.ndarray:
    """BC of each mixture component's mean genome, shape (k, bc_dim)."""
    cfg = state.config
    spec = resolve_mlp_spec(cfg)
    envdef = get_env(cfg.env)
    bcs, _ = evaluate_genomes(envdef, state.dist.means, spec, state.normalizer)
    return bcs


def split_checkpoint(state: Checkpoint, k: int, seed: int) -> Checkpoint:
    """Turn a unimodal checkpoint into a k-component mixture (splitting GMM)."""
    from .distributions import split_population

    if not isinstance(state.dist, IsoGaussian):
        raise ValueError("split_checkpoint expects a unimodal checkpoint")
    mixture = split_population(state.dist, k, seed)
    cfg = replace(state.config, mixture_k=k)
    dim = state.dist.dim
    if state.optimizer_state.kind == "adam":
        opt = OptimizerState("adam", 0, np.zeros((k, dim)), np.zeros((k, dim)))
    else:
        opt = OptimizerState("sgd")
    return replace(state, config=cfg, dist=mixture, optimizer_state=opt)
