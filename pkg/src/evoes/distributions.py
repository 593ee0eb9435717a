"""Population distributions over flat parameter vectors.

Two variants: an isotropic Gaussian with a trainable mean and fixed scalar
sigma, and an equal-weight mixture of such Gaussians (only the component
means are trainable).  All operations are pure; sampling is a function of
(distribution, seed, index) only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .rng import child_rng, mix64


def as_param_vec(values) -> np.ndarray:
    """Validate and return a finite float64 1-D parameter vector."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"parameter vector must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("parameter vector has non-finite entries")
    return v


@dataclass(frozen=True, eq=False)
class IsoGaussian:
    """N(mean, sigma^2 I); sigma is a fixed hyperparameter, never trained."""

    mean: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "mean", as_param_vec(self.mean))
        if not (self.sigma >= 0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def n_components(self) -> int:
        return 1

    @property
    def means(self) -> np.ndarray:
        return self.mean[None, :]


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Equal-weight mixture of IsoGaussians sharing dim and sigma."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 2:
            raise ValueError("mixture needs at least 2 components")
        d0, s0 = comps[0].dim, comps[0].sigma
        for c in comps[1:]:
            if c.dim != d0:
                raise ValueError("mixture components must share dim")
            if c.sigma != s0:
                raise ValueError("mixture components must share sigma")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def sigma(self) -> float:
        return self.components[0].sigma

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def means(self) -> np.ndarray:
        return np.stack([c.mean for c in self.components])


# Either variant; a tagged union in spirit, duck-typed in practice.
PopulationDistribution = IsoGaussian | GaussianMixture


def with_means(dist: PopulationDistribution, means: np.ndarray) -> PopulationDistribution:
    """Copy of dist with trainable means replaced (shape (k, dim))."""
    means = np.asarray(means, dtype=np.float64)
    if isinstance(dist, IsoGaussian):
        return IsoGaussian(means[0], dist.sigma)
    return GaussianMixture(tuple(IsoGaussian(m, dist.sigma) for m in means))


def draw_offspring(dist: PopulationDistribution, offspring_seed: int):
    """One offspring from its dedicated stream: (component_index, genome).

    For mixtures the component is drawn uniformly first, then the Gaussian
    draw, from the same per-offspring generator.
    """
    rng = child_rng(offspring_seed)
    if isinstance(dist, IsoGaussian):
        comp = 0
        mean = dist.mean
    else:
        comp = int(rng.integers(dist.n_components))
        mean = dist.components[comp].mean
    eps = rng.standard_normal(dist.dim)
    return comp, mean + dist.sigma * eps


def sample_offspring(dist: PopulationDistribution, n: int, seed: int):
    """n offspring as (index, component_index, genome) triples.

    Offspring i is drawn from the stream keyed by mix64(seed, i), so the
    batch is a pure function of (dist, n, seed) regardless of evaluation
    order or parallelism.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    for i in range(n):
        comp, z = draw_offspring(dist, mix64(seed, i))
        out.append((i, comp, z))
    return out


def component_log_densities(dist: PopulationDistribution, z: np.ndarray) -> np.ndarray:
    """Per-component Gaussian log-densities at z, shape (k,)."""
    z = np.asarray(z, dtype=np.float64)
    means = dist.means
    d = dist.dim
    sigma = dist.sigma
    sq = np.sum((z - means) ** 2, axis=-1)
    return -0.5 * d * np.log(2.0 * np.pi * sigma**2) - sq / (2.0 * sigma**2)


def log_density(dist: PopulationDistribution, z: np.ndarray) -> float:
    """Exact log of the (mixture) Gaussian density at z."""
    comp_ld = component_log_densities(dist, z)
    if isinstance(dist, IsoGaussian):
        return float(comp_ld[0])
    return float(logsumexp(comp_ld) - np.log(dist.n_components))


def responsibilities(dist: PopulationDistribution, z: np.ndarray) -> np.ndarray:
    """Posterior component responsibilities at z; sums to 1.

    Computed in log space with max subtraction so well-separated
    components do not underflow.
    """
    if isinstance(dist, IsoGaussian):
        return np.ones(1)
    ld = component_log_densities(dist, z)
    ld = ld - ld.max()
    w = np.exp(ld)
    return w / w.sum()


def score(dist: PopulationDistribution, z: np.ndarray):
    """Gradient of log-density w.r.t. each trainable mean, shape (k, dim).

    IsoGaussian: the single row (z - mu) / sigma^2.  Mixture: row k is
    r_k(z) * (z - mu_k) / sigma^2 with r_k the posterior responsibility.
    """
    z = np.asarray(z, dtype=np.float64)
    r = responsibilities(dist, z)
    return r[:, None] * (z - dist.means) / dist.sigma**2


def split_population(dist: IsoGaussian, k: int, seed: int) -> GaussianMixture:
    """Break a unimodal population into a k-component mixture.

    Component means are independent samples from dist (stream mix64(seed, j)),
    which breaks symmetry while staying close to the trained solution.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    comps = []
    for j in range(k):
        _, m = draw_offspring(dist, mix64(seed, j))
        comps.append(IsoGaussian(m, dist.sigma))
    return GaussianMixture(tuple(comps))
