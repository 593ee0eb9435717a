"""Fast 1-D weighted Gauss transform via Hermite/Taylor expansions.

Computes G_i = sum_j w_j * exp(-(y_i - x_j)^2 / (2 h^2)) for all targets
y_i in O((n + n_boxes^2 p^2) ) instead of O(n^2), with absolute error far
below 1e-12 per unit weight.  Sources are binned into boxes of half-width
r (in units of sqrt(2) h); each box accumulates Hermite moments, moments
are translated into local Taylor series at every target box, and targets
evaluate their local polynomial.

Used by the MaxEnt estimator for scalar behavior characteristics at large
population sizes; the direct pairwise path remains the reference and the
two are cross-checked in the tests.
"""

from __future__ import annotations

import math

import numpy as np

# Half-width of a box in scaled (sqrt(2) h) units and expansion order.
# Truncation error ~ (sqrt(2) r)^P / sqrt(P!) is ~1e-17 at these settings.
_R = 0.125
_P = 22
# exp(-d^2) < 1e-36 beyond this center distance (scaled units).
_CUTOFF = 9.0 + 2 * _R


def _hermite_funcs(d: np.ndarray, order: int) -> np.ndarray:
    """h_a(d) = (-1)^a (d/dt)^a exp(-t^2) | t=d, for a = 0..order-1.

    Shape (order, len(d)).  Recurrence h_{a+1} = 2 d h_a - 2 a h_{a-1}.
    """
    out = np.empty((order, d.shape[0]))
    out[0] = np.exp(-d * d)
    if order > 1:
        out[1] = 2.0 * d * out[0]
    for a in range(1, order - 1):
        out[a + 1] = 2.0 * d * out[a] - 2.0 * a * out[a - 1]
    return out


def gauss_transform_1d(x, weights, bandwidth: float, targets=None) -> np.ndarray:
    """Weighted Gaussian-kernel sums over all (target, source) pairs.

    x: (n,) source positions; weights: (n,) or (n, m); returns (n_t, m)
    (or (n_t,) for 1-D weights).  The kernel carries no normalization
    constant; multiply by (2 pi h^2)^(-1/2) at the call site if needed.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    squeeze = w.ndim == 1
    if squeeze:
        w = w[:, None]
    y = x if targets is None else np.asarray(targets, dtype=np.float64)
    n, m = w.shape

    scale = 1.0 / (np.sqrt(2.0) * bandwidth)
    u = x * scale
    v = y * scale

    lo = min(u.min(), v.min())
    width = 2.0 * _R
    src_box = np.floor((u - lo) / width).astype(np.int64)
    tgt_box = np.floor((v - lo) / width).astype(np.int64)
    n_boxes = int(max(src_box.max(), tgt_box.max())) + 1
    centers = lo + (np.arange(n_boxes) + 0.5) * width

    # Hermite moments per occupied source box: M[b, a, :] = sum_j w_j s^a / a!
    occupied_src = np.unique(src_box)
    moments = {}
    for b in occupied_src:
        idx = np.nonzero(src_box == b)[0]
        s = u[idx] - centers[b]
        pw = np.ones_like(s)
        M = np.empty((_P, m))
        M[0] = w[idx].sum(axis=0)
        for a in range(1, _P):
            pw = pw * s / a
            M[a] = pw @ w[idx]
        moments[b] = M

    # Translate moments into local Taylor coefficients at each target box:
    # L_beta = (-1)^beta / beta! * sum_alpha M_alpha h_{alpha+beta}(D).
    occupied_tgt = np.unique(tgt_box)
    inv_fact = 1.0 / np.array([math.factorial(b) for b in range(_P)], dtype=np.float64)
    sign = np.where(np.arange(_P) % 2 == 0, 1.0, -1.0)
    local = {b: np.zeros((_P, m)) for b in occupied_tgt}
    for bs in occupied_src:
        M = moments[bs]
        near = occupied_tgt[np.abs(centers[occupied_tgt] - centers[bs]) <= _CUTOFF]
        if near.size == 0:
            continue
        D = centers[near] - centers[bs]
        H = _hermite_funcs(D, 2 * _P - 1)  # (2P-1, n_near)
        for k, bt in enumerate(near):
            # T[beta, alpha] = h_{alpha+beta}(D_k)
            T = np.lib.stride_tricks.sliding_window_view(H[:, k], _P)  # (P, P)
            local[bt] += (sign * inv_fact)[:, None] * (T @ M)

    # Evaluate local polynomials at the targets.
    out = np.zeros((y.shape[0], m))
    for bt in occupied_tgt:
        idx = np.nonzero(tgt_box == bt)[0]
        tau = v[idx] - centers[bt]
        L = local[bt]
        acc = np.full((idx.shape[0], m), L[_P - 1])
        for a in range(_P - 2, -1, -1):  # Horner in tau
            acc = acc * tau[:, None] + L[a]
        out[idx] = acc
    return out[:, 0] if squeeze else out


def direct_transform(x, weights, bandwidth: float, targets=None, block: int = 512) -> np.ndarray:
    """Reference O(n^2) pairwise computation (blockwise, float64)."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    squeeze = w.ndim == 1
    if squeeze:
        w = w[:, None]
    y = x if targets is None else np.asarray(targets, dtype=np.float64)
    inv = 1.0 / (2.0 * bandwidth**2)
    out = np.empty((y.shape[0], w.shape[1]))
    for i0 in range(0, y.shape[0], block):
        d = y[i0 : i0 + block, None] - x[None, :]
        k = np.exp(-inv * d * d)
        out[i0 : i0 + block] = k @ w
    return out[:, 0] if squeeze else out
