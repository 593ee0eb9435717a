"""Score-function loss/gradient estimators and the finite-difference oracle.

Three estimators share one shape: a per-offspring scalar weight times the
offspring's score vector, averaged over the batch.  The weights are
rank-normalized fitness (standard ES), squared whitened BC norm (MaxVar),
or the kernel-density entropy terms (MaxEnt).  Each gradient is the exact
derivative of the corresponding likelihood-ratio surrogate at the
sampling distribution, so a central finite difference of the Monte-Carlo
loss under common random numbers must agree up to sampling noise; the
oracle at the bottom of this module checks exactly that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import IsoGaussian, PopulationDistribution
from .fastgauss import direct_transform, gauss_transform_1d
from .shaping import rank_normalize, whiten

# Above this batch size, scalar-BC kernel sums go through the fast Gauss
# transform instead of the O(n^2) pairwise path.
_FGT_MIN_N = 2048


@dataclass(frozen=True)
class GradEstimate:
    loss: float
    grad: np.ndarray  # (n_components, dim), one row per trainable mean
    n_samples: int


def _check_scores(scores, n: int) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim == 2:  # (n, dim) convenience form for unimodal populations
        s = s[:, None, :]
    if s.ndim != 3 or s.shape[0] != n:
        raise ValueError(f"scores must be (n, k, dim) with n={n}, got {s.shape}")
    return s


def es_gradient(shaped_fitness, scores) -> GradEstimate:
    """Standard-ES estimate: grad = mean_i f_i * s_i, loss = mean_i f_i."""
    f = np.asarray(shaped_fitness, dtype=np.float64)
    s = _check_scores(scores, f.shape[0])
    grad = np.einsum("i,ikd->kd", f, s) / f.shape[0]
    return GradEstimate(loss=float(f.mean()), grad=grad, n_samples=f.shape[0])


def maxvar_gradient(bcs, scores) -> GradEstimate:
    """Offspring-diversity estimate from the BC variance objective.

    BCs are whitened internally; grad = mean_i |B~_i|^2 * s_i.  The
    reported loss is the trace of the raw BC covariance (the quantity
    being maximized), not the whitened one, which is identically d.
    """
    b = np.asarray(bcs, dtype=np.float64)
    n = b.shape[0]
    s = _check_scores(scores, n)
    white, _ = whiten(b)
    w = np.sum(white * white, axis=1)
    grad = np.einsum("i,ikd->kd", w, s) / n
    loss = float(np.sum(b.var(axis=0)))
    return GradEstimate(loss=loss, grad=grad, n_samples=n)


def _kernel_weighted_sums(bcs: np.ndarray, bandwidth: float, weights: np.ndarray) -> np.ndarray:
    """sum_j exp(-|b_i - b_j|^2 / (2 h^2)) * w_j for every i (self included)."""
    n, d = bcs.shape
    if d == 1 and n >= _FGT_MIN_N:
        return gauss_transform_1d(bcs[:, 0], weights, bandwidth)
    if d == 1:
        return direct_transform(bcs[:, 0], weights, bandwidth)
    squeeze = weights.ndim == 1
    w = weights[:, None] if squeeze else weights
    inv = 1.0 / (2.0 * bandwidth**2)
    out = np.empty((n, w.shape[1]))
    for i0 in range(0, n, 512):
        diff = bcs[i0 : i0 + 512, None, :] - bcs[None, :, :]
        k = np.exp(-inv * np.sum(diff * diff, axis=2))
        out[i0 : i0 + 512] = k @ w
    return out[:, 0] if squeeze else out


def maxent_loss(bcs, bandwidth: float) -> tuple[float, np.ndarray]:
    """KDE negative mean log-density: (-1/n) sum_i log p_i.

    p_i = (1/n) sum_j phi(B_j - B_i); the j = i self term keeps p_i > 0.
    Returns (loss, p) so the gradient can reuse the densities.
    """
    b = np.asarray(bcs, dtype=np.float64)
    n, d = b.shape
    norm = (2.0 * np.pi * bandwidth**2) ** (-0.5 * d)
    p = norm / n * _kernel_weighted_sums(b, bandwidth, np.ones(n))
    return float(-np.mean(np.log(p))), p


def maxent_gradient(bcs, scores, bandwidth: float) -> GradEstimate:
    """Entropy-style estimate from the kernel density of the batch BCs.

    grad = -(1/n) sum_i [ log(p_i) s_i + (1/p_i)(1/n) sum_j phi_ij s_j ].
    BCs are expected pre-whitened by the caller for training use; the
    estimator itself takes them as given.
    """
    b = np.asarray(bcs, dtype=np.float64)
    n, d = b.shape
    if n < 2:
        raise ValueError("maxent_gradient needs n >= 2")
    s = _check_scores(scores, n)
    k, dim = s.shape[1], s.shape[2]
    loss, p = maxent_loss(b, bandwidth)

    norm = (2.0 * np.pi * bandwidth**2) ** (-0.5 * d)
    # sum_i (1/p_i)(1/n) sum_j phi_ij s_j == (1/n) sum_j q_j s_j
    # with q_j = sum_i phi_ij / p_i, by kernel symmetry.
    q = norm * _kernel_weighted_sums(b, bandwidth, 1.0 / p)
    flat = s.reshape(n, k * dim)
    term1 = np.log(p) @ flat / n
    term2 = (q @ flat) / (n * n)
    grad = -(term1 + term2).reshape(k, dim)
    return GradEstimate(loss=loss, grad=grad, n_samples=n)


# ---------------------------------------------------------------------------
# Finite-difference oracle (test instrumentation, not a training path).
# ---------------------------------------------------------------------------

def _frozen_rank_map(base_fitness: np.ndarray):
    """Monotone map fitness -> shaped value frozen from the base batch."""
    order = np.argsort(base_fitness, kind="stable")
    xs = base_fitness[order]
    ys = rank_normalize(base_fitness)[order]
    return lambda f: np.interp(f, xs, ys)


def _batch_loss(estimator, bcs, fitness, bandwidth, frozen):
    if estimator == "es":
        f = frozen["shape"](fitness) if "shape" in frozen else fitness
        return float(np.mean(f))
    if estimator == "maxvar":
        white = (bcs - frozen["mean"]) / frozen["std"]
        return float(np.mean(np.sum(white * white, axis=1)))
    if estimator == "maxent":
        white = (bcs - frozen["mean"]) / frozen["std"]
        return maxent_loss(white, bandwidth)[0]
    raise ValueError(f"unknown estimator {estimator!r}")


def score_function_gradient(
    estimator: str,
    dist: IsoGaussian,
    env,
    n: int,
    seed: int,
    bandwidth: float = 1.0,
    shaped: bool = False,
) -> GradEstimate:
    """The estimator under test, run on the batch keyed by seed.

    env is a callable mapping genomes (n, dim) to (bcs (n, d), fitness (n,)).
    Whitening stats come from the batch itself, as in training.
    """
    from .rng import child_rng

    eps = child_rng(seed).standard_normal((n, dist.dim))
    z = dist.mean + dist.sigma * eps
    bcs, fitness = env(z)
    scores = eps / dist.sigma  # (z - mu) / sigma^2
    if estimator == "es":
        f = rank_normalize(fitness) if shaped else fitness
        return es_gradient(f, scores)
    if estimator == "maxvar":
        return maxvar_gradient(bcs, scores)
    if estimator == "maxent":
        white, _ = whiten(bcs)
        return maxent_gradient(white, scores, bandwidth)
    raise ValueError(f"unknown estimator {estimator!r}")


def finite_difference_check(
    estimator: str,
    dist: IsoGaussian,
    env,
    n: int,
    h: float,
    seed: int,
    bandwidth: float = 1.0,
    shaped: bool = False,
) -> np.ndarray:
    """Central finite difference of the Monte-Carlo loss at mu +- h e_k.

    The same standard-normal draws are reused at every evaluation point
    (common random numbers), and batch-derived transforms (whitening
    stats, the rank map) are frozen at the base point, matching how the
    surrogate treats them as parameter-independent.
    """
    from .rng import child_rng

    eps = child_rng(seed).standard_normal((n, dist.dim))
    base_bcs, base_fit = env(dist.mean + dist.sigma * eps)
    frozen: dict = {}
    if estimator == "es" and shaped:
        frozen["shape"] = _frozen_rank_map(np.asarray(base_fit, dtype=np.float64))
    if estimator in ("maxvar", "maxent"):
        _, stats = whiten(base_bcs)
        frozen["mean"], frozen["std"] = stats.mean, stats.std

    grad = np.empty(dist.dim)
    for kdim in range(dist.dim):
        shift = np.zeros(dist.dim)
        shift[kdim] = h
        bc_p, f_p = env(dist.mean + shift + dist.sigma * eps)
        bc_m, f_m = env(dist.mean - shift + dist.sigma * eps)
        lp = _batch_loss(estimator, np.asarray(bc_p, dtype=np.float64), np.asarray(f_p, dtype=np.float64), bandwidth, frozen)
        lm = _batch_loss(estimator, np.asarray(bc_m, dtype=np.float64), np.asarray(f_m, dtype=np.float64), bandwidth, frozen)
        grad[kdim] = (lp - lm) / (2.0 * h)
    return grad


def scores_for_batch(dist: PopulationDistribution, genomes: np.ndarray) -> np.ndarray:
    """Per-offspring, per-component score vectors, shape (n, k, dim)."""
    from .distributions import score

    return np.stack([score(dist, z) for z in genomes])
