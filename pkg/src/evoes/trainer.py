"""Generation loop: sample, evaluate, shape, estimate, step, log, checkpoint."""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .distributions import (
    GaussianMixture,
    IsoGaussian,
    PopulationDistribution,
    component_log_densities,
    with_means,
)
from .envs import get_env
from .estimators import es_gradient, maxent_gradient, maxvar_gradient
from .policy import MlpSpec, ObsNormalizer, init_mlp, update_normalizer
from .rng import mix64
from .runtime import EvalBatch, evaluate_population
from .shaping import rank_normalize, whiten

ALGOS = ("standard_es", "maxvar_ees", "maxent_ees")
OBJECTIVES = ("+x", "-x", "+y", "-y")

CHECKPOINT_MAGIC = b"EVES"
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


class CheckpointError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    algo: str = "standard_es"
    env: str = "pointwalker1d"
    population_size: int = 500
    sigma: float = 0.02
    learning_rate: float = 0.01
    l2_coef: float = 0.0
    kernel_bandwidth: float = 1.0
    generations: int = 100
    optimizer: str = "sgd"
    mirrored: bool = False
    run_seed: int = 0
    mlp: MlpSpec | None = None
    mixture_k: int = 1
    objective: str = "+x"
    mu0: float | None = None  # scalar mean init for non-policy envs
    state_sample_prob: float = 0.01
    checkpoint_every: int = 0  # 0: final checkpoint only
    grad_clip_factor: float = 0.0  # 0: off; else clip at factor x running median
    record_walltime: bool = False
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ValueError(f"algo must be one of {ALGOS}, got {self.algo!r}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be sgd or adam, got {self.optimizer!r}")
        if self.population_size < 2:
            raise ValueError(f"population_size must be >= 2, got {self.population_size}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.l2_coef < 0:
            raise ValueError(f"l2_coef must be >= 0, got {self.l2_coef}")
        if self.kernel_bandwidth <= 0:
            raise ValueError(f"kernel_bandwidth must be > 0, got {self.kernel_bandwidth}")
        if self.mixture_k < 1:
            raise ValueError(f"mixture_k must be >= 1, got {self.mixture_k}")
        if self.generations < 0:
            raise ValueError(f"generations must be >= 0, got {self.generations}")


@dataclass(frozen=True)
class OptimizerState:
    kind: str
    t: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    # Recent raw gradient norms, kept only when gradient clipping is on.
    norm_history: tuple = ()


@dataclass(frozen=True)
class Checkpoint:
    version: int
    config: TrainConfig
    dist: PopulationDistribution
    optimizer_state: OptimizerState
    normalizer: ObsNormalizer
    generation: int


@dataclass(frozen=True)
class GenStats:
    generation: int
    loss: float
    grad_norm: float
    bc_mean: np.ndarray
    bc_var_trace: float
    fitness_mean: float
    wall_ms: float


def resolve_mlp_spec(config: TrainConfig) -> MlpSpec | None:
    envdef = get_env(config.env)
    if not envdef.needs_policy():
        return None
    if config.mlp is not None:
        return config.mlp
    return envdef.pointwalker.policy_spec()


def _genome_dim(config: TrainConfig) -> int:
    envdef = get_env(config.env)
    if envdef.needs_policy():
        from .policy import param_count

        return param_count(resolve_mlp_spec(config))
    return envdef.genome_dim


def init_distribution(config: TrainConfig) -> PopulationDistribution:
    envdef = get_env(config.env)
    if envdef.needs_policy():
        spec = resolve_mlp_spec(config)
        if config.mixture_k == 1:
            return IsoGaussian(init_mlp(spec, mix64(config.run_seed, 0x1217)), config.sigma)
        comps = tuple(
            IsoGaussian(init_mlp(spec, mix64(config.run_seed, 0x1217, j)), config.sigma)
            for j in range(config.mixture_k)
        )
        return GaussianMixture(comps)
    mu0 = 1.0 if config.mu0 is None else config.mu0
    base = np.full(envdef.genome_dim, mu0)
    if config.mixture_k == 1:
        return IsoGaussian(base, config.sigma)
    from .rng import child_rng

    comps = []
    for j in range(config.mixture_k):
        eps = child_rng(mix64(config.run_seed, 0x1217, j)).standard_normal(base.shape[0])
        comps.append(IsoGaussian(base + config.sigma * eps, config.sigma))
    return GaussianMixture(tuple(comps))


def init_checkpoint(config: TrainConfig) -> Checkpoint:
    dist = init_distribution(config)
    k, dim = dist.means.shape
    if config.optimizer == "adam":
        opt = OptimizerState("adam", 0, np.zeros((k, dim)), np.zeros((k, dim)))
    else:
        opt = OptimizerState("sgd")
    return Checkpoint(
        version=CHECKPOINT_VERSION,
        config=config,
        dist=dist,
        optimizer_state=opt,
        normalizer=ObsNormalizer(),
        generation=0,
    )


def objective_values(objective: str, bcs: np.ndarray, fitness: np.ndarray) -> np.ndarray:
    """Signed displacement along a coordinate axis."""
    axis = 0 if objective in ("+x", "-x") else 1
    if axis >= bcs.shape[1]:
        raise ValueError(f"objective {objective} needs a {axis + 1}-D BC")
    sign = 1.0 if objective[0] == "+" else -1.0
    return sign * bcs[:, axis]


def batch_scores(dist: PopulationDistribution, genomes: np.ndarray) -> np.ndarray:
    """Vectorized per-component scores, shape (n, k, dim)."""
    means = dist.means
    diff = genomes[:, None, :] - means[None, :, :]
    if isinstance(dist, IsoGaussian):
        return diff / dist.sigma**2
    ld = np.stack([component_log_densities(dist, z) for z in genomes])
    ld -= ld.max(axis=1, keepdims=True)
    r = np.exp(ld)
    r /= r.sum(axis=1, keepdims=True)
    return r[:, :, None] * diff / dist.sigma**2


def _adam_step(opt: OptimizerState, grad: np.ndarray, lr: float, b1: float, b2: float):
    eps = 1e-8
    t = opt.t + 1
    m = b1 * opt.m + (1 - b1) * grad
    v = b2 * opt.v + (1 - b2) * grad * grad
    mh = m / (1 - b1**t)
    vh = v / (1 - b2**t)
    return lr * mh / (np.sqrt(vh) + eps), replace(opt, t=t, m=m, v=v)


def train_generation(state: Checkpoint, workers: int = 1) -> tuple[Checkpoint, GenStats, EvalBatch]:
    """Advance the population by one generation; pure in (state,)."""
    t0 = time.perf_counter()
    cfg = state.config
    spec = resolve_mlp_spec(cfg)
    envdef = get_env(cfg.env)
    prob = cfg.state_sample_prob if envdef.needs_policy() else 0.0
    batch = evaluate_population(
        state.dist,
        envdef,
        spec,
        state.normalizer,
        cfg.population_size,
        cfg.run_seed,
        state.generation,
        workers=workers,
        mirrored=cfg.mirrored,
        state_sample_prob=prob,
    )
    scores = batch_scores(state.dist, batch.genomes)
    if cfg.algo == "standard_es":
        fvals = (
            objective_values(cfg.objective, batch.bcs, batch.fitness)
            if envdef.needs_policy()
            else batch.fitness
        )
        est = es_gradient(rank_normalize(fvals), scores)
    elif cfg.algo == "maxvar_ees":
        est = maxvar_gradient(batch.bcs, scores)
    else:
        white, _ = whiten(batch.bcs)
        est = maxent_gradient(white, scores, cfg.kernel_bandwidth)

    if not np.all(np.isfinite(est.grad)):
        raise TrainingError(
            f"non-finite gradient at generation {state.generation} "
            f"(algo={cfg.algo}, env={cfg.env})"
        )

    grad = est.grad
    opt0 = state.optimizer_state
    if cfg.grad_clip_factor > 0.0:
        gnorm = float(np.linalg.norm(grad))
        hist = opt0.norm_history
        if len(hist) >= 5:
            cap = cfg.grad_clip_factor * float(np.median(hist))
            if gnorm > cap:
                grad = grad * (cap / gnorm)
        opt0 = replace(opt0, norm_history=(hist + (gnorm,))[-31:])

    means = state.dist.means
    step_grad = grad - cfg.l2_coef * means
    if cfg.optimizer == "adam":
        delta, opt = _adam_step(opt0, step_grad, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2)
    else:
        delta, opt = cfg.learning_rate * step_grad, opt0
    new_dist = with_means(state.dist, means + delta)

    norm = state.normalizer
    if batch.states is not None:
        norm = update_normalizer(norm, batch.states)

    stats = GenStats(
        generation=state.generation,
        loss=est.loss,
        grad_norm=float(np.linalg.norm(est.grad)),
        bc_mean=batch.bcs.mean(axis=0),
        bc_var_trace=float(np.sum(batch.bcs.var(axis=0))),
        fitness_mean=float(batch.fitness.mean()),
        wall_ms=(time.perf_counter() - t0) * 1e3,
    )
    new_state = replace(
        state, dist=new_dist, optimizer_state=opt, normalizer=norm, generation=state.generation + 1
    )
    return new_state, stats, batch


def stats_header(bc_dim: int) -> str:
    bc_cols = ",".join(f"bc_mean_{i}" for i in range(bc_dim))
    return f"generation,loss,grad_norm,{bc_cols},bc_var_trace,fitness_mean,wall_ms"


def stats_row(stats: GenStats, record_walltime: bool) -> str:
    bc = ",".join(repr(float(v)) for v in stats.bc_mean)
    wall = repr(float(stats.wall_ms)) if record_walltime else "0.0"
    return (
        f"{stats.generation},{float(stats.loss)!r},{float(stats.grad_norm)!r},{bc},"
        f"{float(stats.bc_var_trace)!r},{float(stats.fitness_mean)!r},{wall}"
    )


def train_run(config: TrainConfig, workers: int = 1, out_dir=None) -> Checkpoint:
    """Run config.generations generations, logging stats and checkpoints.

    The run log wall_ms column is written as 0.0 unless record_walltime is
    set, so identical (config, seed) runs produce byte-identical logs.
    """
    from pathlib import Path

    state = init_checkpoint(config)
    envdef = get_env(config.env)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise TrainingError(f"cannot create output directory {out}: {e}") from e
    log_lines = [stats_header(envdef.bc_dim)]
    for _ in range(config.generations):
        state, stats, _ = train_generation(state, workers)
        log_lines.append(stats_row(stats, config.record_walltime))
        if out is not None and config.checkpoint_every and state.generation % config.checkpoint_every == 0:
            save_checkpoint(state, out / f"ckpt_{state.generation:06d}.evch")
    if out is not None:
        try:
            (out / "log.csv").write_text("\n".join(log_lines) + "\n")
            save_checkpoint(state, out / "ckpt_final.evch")
        except OSError as e:
            raise TrainingError(f"cannot write run artifacts to {out}: {e}") from e
    return state


# ---------------------------------------------------------------------------
# Checkpoint serialization: little-endian binary, documented layout:
#   magic "EVES" | u32 version | u32 header_len | JSON header |
#   f64 means (k*dim) | [f64 adam m, v (k*dim each)] |
#   [f64 normalizer mean, m2 (obs_dim each)]
# ---------------------------------------------------------------------------

def _config_to_dict(cfg: TrainConfig) -> dict:
    d = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    if cfg.mlp is not None:
        d["mlp"] = {
            "input_dim": cfg.mlp.input_dim,
            "output_dim": cfg.mlp.output_dim,
            "hidden": list(cfg.mlp.hidden),
            "activation": cfg.mlp.activation,
            "output_activation": cfg.mlp.output_activation,
        }
    return d


def config_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    if d.get("mlp") is not None:
        m = d["mlp"]
        d["mlp"] = MlpSpec(
            m["input_dim"], m["output_dim"], tuple(m["hidden"]), m["activation"], m["output_activation"]
        )
    known = set(TrainConfig.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return TrainConfig(**d)


def save_checkpoint(state: Checkpoint, path) -> None:
    from pathlib import Path

    k, dim = state.dist.means.shape
    norm = state.normalizer
    header = {
        "config": _config_to_dict(state.config),
        "generation": state.generation,
        "k": k,
        "dim": dim,
        "optimizer": {
            "kind": state.optimizer_state.kind,
            "t": state.optimizer_state.t,
            "norm_history": list(state.optimizer_state.norm_history),
        },
        "normalizer_count": norm.count,
        "obs_dim": 0 if norm.count == 0 else int(norm.mean.shape[0]),
    }
    hjson = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    blob = bytearray()
    blob += CHECKPOINT_MAGIC
    blob += struct.pack("<I", CHECKPOINT_VERSION)
    blob += struct.pack("<I", len(hjson))
    blob += hjson
    blob += state.dist.means.astype("<f8").tobytes()
    if state.optimizer_state.kind == "adam":
        blob += state.optimizer_state.m.astype("<f8").tobytes()
        blob += state.optimizer_state.v.astype("<f8").tobytes()
    if norm.count > 0:
        blob += norm.mean.astype("<f8").tobytes()
        blob += norm.m2.astype("<f8").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path) -> Checkpoint:
    from pathlib import Path

    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    version, hlen = struct.unpack("<II", raw[4:12])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unknown checkpoint version {version} (supported: {CHECKPOINT_VERSION})"
        )
    try:
        header = json.loads(raw[12 : 12 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt header: {e}") from e
    off = 12 + hlen
    k, dim = header["k"], header["dim"]
    obs_dim = header["obs_dim"]
    n_arrays = k * dim
    if header["optimizer"]["kind"] == "adam":
        n_arrays += 2 * k * dim
    if header["normalizer_count"] > 0:
        n_arrays += 2 * obs_dim
    if len(raw) != off + 8 * n_arrays:
        raise CheckpointError(
            f"{path}: corrupt file, expected {off + 8 * n_arrays} bytes, got {len(raw)}"
        )

    def take(count):
        nonlocal off
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).copy()
        off += 8 * count
        return arr

    config = config_from_dict(header["config"])
    means = take(k * dim).reshape(k, dim)
    if dim != _genome_dim(config):
        raise CheckpointError(f"{path}: genome dim {dim} inconsistent with config")
    if k == 1:
        dist: PopulationDistribution = IsoGaussian(means[0], config.sigma)
    else:
        dist = GaussianMixture(tuple(IsoGaussian(m, config.sigma) for m in means))
    hist = tuple(header["optimizer"].get("norm_history", []))
    if header["optimizer"]["kind"] == "adam":
        opt = OptimizerState(
            "adam",
            header["optimizer"]["t"],
            take(k * dim).reshape(k, dim),
            take(k * dim).reshape(k, dim),
            norm_history=hist,
        )
    else:
        opt = OptimizerState("sgd", header["optimizer"]["t"], norm_history=hist)
    if header["normalizer_count"] > 0:
        norm = ObsNormalizer(header["normalizer_count"], take(obs_dim), take(obs_dim))
    else:
        norm = ObsNormalizer()
    return Checkpoint(
        version=version,
        config=config,
        dist=dist,
        optimizer_state=opt,
        normalizer=norm,
        generation=header["generation"],
    )
