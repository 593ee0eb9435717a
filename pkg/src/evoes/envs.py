"""Deterministic evaluation environments: genome -> (BC, fitness).

Environments are stateless specs looked up by name; rollouts are pure
functions, so any number of workers can evaluate offspring concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .policy import MlpSpec, ObsNormalizer, mlp_forward_batch, param_count


@dataclass(frozen=True)
class RolloutResult:
    bc: np.ndarray
    fitness: float
    steps: int


def interference_behavior(x: float) -> float:
    """Scalar interference pattern 5 sin(x/5) sin(20 x).

    The slow envelope controls how sensitive the behavior is to
    perturbations of x; its peak at |x| = 5 pi / 2 is where a population
    produces the most diverse offspring.
    """
    return 5.0 * np.sin(x / 5.0) * np.sin(20.0 * x)


@dataclass(frozen=True)
class PointWalkerSpec:
    """Velocity-integrating point agent, the desk-scale locomotion task.

    The policy reads (position, velocity, episode-time fraction) and emits
    a bounded acceleration; the BC is the final position and fitness the
    final x coordinate.
    """

    dims: int = 1
    horizon: int = 100
    dt: float = 0.1
    accel_bound: float = 1.0
    speed_bound: float = 2.0

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ValueError("dims must be 1 or 2")
        if self.horizon < 1 or self.dt <= 0 or self.accel_bound <= 0 or self.speed_bound <= 0:
            raise ValueError("horizon >= 1 and dt/bounds > 0 required")

    @property
    def obs_dim(self) -> int:
        return 2 * self.dims + 1

    def policy_spec(self, hidden=(16, 16)) -> MlpSpec:
        return MlpSpec(self.obs_dim, self.dims, tuple(hidden), "tanh", "tanh")


def pointwalker_rollout_batch(
    env: PointWalkerSpec,
    spec: MlpSpec,
    params: np.ndarray,
    normalizer: ObsNormalizer | None = None,
    collect_states: bool = False,
):
    """Roll out B genomes in lockstep; returns (bc (B, dims), fitness (B,)).

    With collect_states, also returns the raw observation sequences
    (B, horizon, obs_dim) for observation-normalizer updates.
    """
    if spec.input_dim != env.obs_dim or spec.output_dim != env.dims:
        raise ValueError(
            f"policy spec ({spec.input_dim}->{spec.output_dim}) does not match "
            f"env observation/action dims ({env.obs_dim}->{env.dims})"
        )
    p = np.atleast_2d(np.asarray(params, dtype=np.float64))
    nb = p.shape[0]
    pos = np.zeros((nb, env.dims))
    vel = np.zeros((nb, env.dims))
    states = np.empty((nb, env.horizon, env.obs_dim)) if collect_states else None
    for t in range(env.horizon):
        obs = np.concatenate([pos, vel, np.full((nb, 1), t / env.horizon)], axis=1)
        if collect_states:
            states[:, t] = obs
        act = env.accel_bound * mlp_forward_batch(spec, p, obs, normalizer)
        vel = np.clip(vel + act * env.dt, -env.speed_bound, env.speed_bound)
        pos = pos + vel * env.dt
    fitness = pos[:, 0].copy()
    if collect_states:
        return pos, fitness, states
    return pos, fitness


def pointwalker_rollout(
    env: PointWalkerSpec,
    spec: MlpSpec,
    params: np.ndarray,
    normalizer: ObsNormalizer | None = None,
) -> RolloutResult:
    bc, fitness = pointwalker_rollout_batch(env, spec, params[None, :], normalizer)
    return RolloutResult(bc=bc[0], fitness=float(fitness[0]), steps=env.horizon)


@dataclass(frozen=True)
class EnvDef:
    """Registry entry: how the trainer evaluates genomes in this env."""

    name: str
    genome_dim: int | None  # None: derived from the policy spec
    bc_dim: int
    pointwalker: PointWalkerSpec | None = None

    def needs_policy(self) -> bool:
        return self.pointwalker is not None


_REGISTRY = {
    "interference": EnvDef("interference", genome_dim=1, bc_dim=1),
    "pointwalker1d": EnvDef("pointwalker1d", genome_dim=None, bc_dim=1, pointwalker=PointWalkerSpec(dims=1)),
    "pointwalker2d": EnvDef("pointwalker2d", genome_dim=None, bc_dim=2, pointwalker=PointWalkerSpec(dims=2)),
}


def get_env(name: str) -> EnvDef:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown environment {name!r}; known: {sorted(_REGISTRY)}") from None


def evaluate_genomes(
    envdef: EnvDef,
    genomes: np.ndarray,
    spec: MlpSpec | None = None,
    normalizer: ObsNormalizer | None = None,
    collect_states: bool = False,
):
    """Vectorized (bcs, fitness[, states]) for a block of genomes."""
    g = np.atleast_2d(np.asarray(genomes, dtype=np.float64))
    if envdef.name == "interference":
        bc = interference_behavior(g[:, 0])
        out = bc[:, None], np.zeros(g.shape[0])
        return (*out, None) if collect_states else out
    assert envdef.pointwalker is not None
    if spec is None:
        raise ValueError(f"environment {envdef.name} needs a policy spec")
    if g.shape[1] != param_count(spec):
        raise ValueError(
            f"genome length {g.shape[1]} != policy parameter count {param_count(spec)}"
        )
    return pointwalker_rollout_batch(envdef.pointwalker, spec, g, normalizer, collect_states)
