"""Feedforward policies whose flattened weights are the ES genome."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import child_rng

OBS_STD_FLOOR = 1e-6


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    output_dim: int
    hidden: tuple = (16, 16)
    activation: str = "tanh"
    output_activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))
        widths = (self.input_dim, *self.hidden, self.output_dim)
        if any(w < 1 for w in widths):
            raise ValueError(f"all layer widths must be >= 1, got {widths}")
        if self.activation not in ("tanh", "relu"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.output_activation not in ("tanh", "linear"):
            raise ValueError(f"unknown output activation {self.output_activation!r}")

    @property
    def layer_dims(self) -> list:
        widths = (self.input_dim, *self.hidden, self.output_dim)
        return list(zip(widths[:-1], widths[1:]))


def param_count(spec: MlpSpec) -> int:
    return sum(fi * fo + fo for fi, fo in spec.layer_dims)


def init_mlp(spec: MlpSpec, seed: int) -> np.ndarray:
    """Zero-mean weights scaled by 1/sqrt(fan_in), zero biases.

    Flattening order: per layer, weight matrix (fan_in x fan_out,
    row-major) then bias; layers from input to output.
    """
    rng = child_rng(seed)
    parts = []
    for fi, fo in spec.layer_dims:
        parts.append(rng.standard_normal(fi * fo) / np.sqrt(fi))
        parts.append(np.zeros(fo))
    return np.concatenate(parts)


def unflatten(spec: MlpSpec, params: np.ndarray) -> list:
    """Views (W, b) per layer into the flat genome."""
    if params.shape[-1] != param_count(spec):
        raise ValueError(
            f"params length {params.shape[-1]} != param_count {param_count(spec)}"
        )
    layers = []
    off = 0
    lead = params.shape[:-1]
    for fi, fo in spec.layer_dims:
        w = params[..., off : off + fi * fo].reshape(*lead, fi, fo)
        off += fi * fo
        b = params[..., off : off + fo]
        off += fo
        layers.append((w, b))
    return layers


def flatten(spec: MlpSpec, layers) -> np.ndarray:
    parts = []
    for w, b in layers:
        parts.append(np.asarray(w, dtype=np.float64).reshape(-1))
        parts.append(np.asarray(b, dtype=np.float64).reshape(-1))
    return np.concatenate(parts)


_ACT = {"tanh": np.tanh, "relu": lambda x: np.maximum(x, 0.0), "linear": lambda x: x}


@dataclass(frozen=True)
class ObsNormalizer:
    """Streaming per-dimension mean / second central moment of seen states."""

    count: int = 0
    mean: np.ndarray | None = None
    m2: np.ndarray | None = None

    def std(self) -> np.ndarray:
        return np.maximum(np.sqrt(self.m2 / self.count), OBS_STD_FLOOR)

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        if self.count == 0:
            return obs
        return (obs - self.mean) / self.std()


def update_normalizer(norm: ObsNormalizer, states) -> ObsNormalizer:
    """Merge a batch of state vectors (Chan et al. parallel update)."""
    s = np.asarray(states, dtype=np.float64)
    if s.size == 0:
        return norm
    s = s.reshape(-1, s.shape[-1])
    nb = s.shape[0]
    bmean = s.mean(axis=0)
    bm2 = np.sum((s - bmean) ** 2, axis=0)
    if norm.count == 0:
        return ObsNormalizer(count=nb, mean=bmean, m2=bm2)
    tot = norm.count + nb
    delta = bmean - norm.mean
    mean = norm.mean + delta * (nb / tot)
    m2 = norm.m2 + bm2 + delta * delta * (norm.count * nb / tot)
    return ObsNormalizer(count=tot, mean=mean, m2=m2)


def mlp_forward(spec: MlpSpec, params: np.ndarray, obs, normalizer: ObsNormalizer | None = None) -> np.ndarray:
    """Deterministic forward pass for a single observation."""
    x = np.asarray(obs, dtype=np.float64)
    if x.shape[-1] != spec.input_dim:
        raise ValueError(f"obs dim {x.shape[-1]} != input_dim {spec.input_dim}")
    if normalizer is not None:
        x = normalizer.normalize(x)
    layers = unflatten(spec, np.asarray(params, dtype=np.float64))
    act = _ACT[spec.activation]
    for w, b in layers[:-1]:
        x = act(x @ w + b)
    w, b = layers[-1]
    return _ACT[spec.output_activation](x @ w + b)


def mlp_forward_batch(spec: MlpSpec, params: np.ndarray, obs: np.ndarray, normalizer: ObsNormalizer | None = None) -> np.ndarray:
    """Forward pass for B independent (genome, observation) pairs.

    params: (B, P); obs: (B, input_dim).  Row b uses genome b.  Row
    results are independent of the batch size, so chunked evaluation is
    bit-identical to one-at-a-time evaluation.
    """
    x = np.asarray(obs, dtype=np.float64)
    if normalizer is not None:
        x = normalizer.normalize(x)
    layers = unflatten(spec, np.asarray(params, dtype=np.float64))
    act = _ACT[spec.activation]
    for w, b in layers[:-1]:
        x = act(np.einsum("bi,bio->bo", x, w) + b)
    w, b = layers[-1]
    return _ACT[spec.output_activation](np.einsum("bi,bio->bo", x, w) + b)
