"""Fitness rank normalization, BC whitening, and the entropy kernel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

STD_FLOOR = 1e-8


def rank_normalize(values) -> np.ndarray:
    """Map values to symmetric ranks in [-0.5, 0.5].

    output_i = rank_i / (n - 1) - 0.5 with 0-based ascending ranks; ties
    get the mean of the ranks they span.  n = 1 maps to [0.0].  Invariant
    under any strictly increasing transform of the input.
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[0]
    if n == 0:
        raise ValueError("rank_normalize needs at least one value")
    if not np.all(np.isfinite(v)):
        raise ValueError("rank_normalize: non-finite fitness")
    if n == 1:
        return np.zeros(1)
    ranks = rankdata(v, method="average") - 1.0
    return ranks / (n - 1) - 0.5


@dataclass(frozen=True)
class WhitenStats:
    """Per-column mean and (floored) population std; allows exact inversion."""

    mean: np.ndarray
    std: np.ndarray


def whiten(bcs) -> tuple[np.ndarray, WhitenStats]:
    """Standardize each BC column to mean 0, population (divisor-n) std 1.

    Constant columns hit the std floor and map to all zeros.
    """
    b = np.asarray(bcs, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] < 2:
        raise ValueError("whiten expects an (n >= 2, d) matrix")
    mean = b.mean(axis=0)
    std = np.maximum(b.std(axis=0), STD_FLOOR)
    return (b - mean) / std, WhitenStats(mean=mean, std=std)


def unwhiten(white: np.ndarray, stats: WhitenStats) -> np.ndarray:
    return white * stats.std + stats.mean


def gaussian_kernel(u, bandwidth: float) -> float:
    """Isotropic Gaussian kernel (2*pi*h^2)^(-d/2) * exp(-|u|^2 / (2 h^2))."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    u = np.asarray(u, dtype=np.float64)
    d = u.shape[-1] if u.ndim else 1
    h2 = bandwidth**2
    norm = (2.0 * np.pi * h2) ** (-0.5 * d)
    return float(norm * np.exp(-np.sum(u * u) / (2.0 * h2)))
