"""A ReLU network that flips between two functions under weight perturbation.

Given 2-layer ReLU approximations of g and h on [0, input_bound]^n, builds
a 5-hidden-layer ReLU network with one designated weight w_k = 0 such that
perturbing w_k by delta in (delta1, delta2) makes the network epsilon-close
to g, and by -delta epsilon-close to h.  The construction survives i.i.d.
uniform perturbation of every other weight at the same scale, because the
flip signal is amplified before any noisy threshold is applied.

Mechanism: a constant gate node K = B_K feeds one edge (the designated
weight) into a gate K' whose bias puts it at 4u unperturbed, >= 11u for
positive flips and 0 for negative ones, where u bounds the i.i.d. noise on
K's pre-activation.  Ramp pairs ReLU(x/a) - ReLU(x/a - 1) convert the three
regimes into switch values (sigma1, sigma2) in {0, 1}, which gate the g and
h branches via large subtractive weights inside a final ReLU.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .rng import child_rng


class FlipBuildError(ValueError):
    """Requested tolerance unattainable; message names the binding term."""


@dataclass(frozen=True)
class TwoLayerNet:
    """ReLU net with one hidden layer: x -> w2 . relu(W1 x + b1) + b2."""

    w1: np.ndarray  # (hidden, n)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float

    def __post_init__(self):
        if self.w1.shape != (self.w2.shape[0], self.input_dim) or self.b1.shape != self.w2.shape:
            raise ValueError("inconsistent 2-layer net shapes")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.maximum(x @ self.w1.T + self.b1, 0.0) @ self.w2 + self.b2

    def hidden_bounds(self, input_bound: float) -> np.ndarray:
        """Per-unit max activation over [0, input_bound]^n."""
        return np.maximum(self.b1 + np.maximum(self.w1, 0.0).sum(axis=1) * input_bound, 0.0)

    def output_bound(self, input_bound: float) -> float:
        return float(abs(self.b2) + np.abs(self.w2) @ self.hidden_bounds(input_bound))


def identity_net() -> TwoLayerNet:
    """g(x) = x on [0, B], exactly: x = relu(x) for x >= 0."""
    return TwoLayerNet(np.array([[1.0]]), np.zeros(1), np.array([1.0]), 0.0)


def negation_net() -> TwoLayerNet:
    """h(x) = -x on [0, B], exactly: -x = -relu(x)."""
    return TwoLayerNet(np.array([[1.0]]), np.zeros(1), np.array([-1.0]), 0.0)


@dataclass(frozen=True)
class FlipNet:
    weights: tuple  # 6 (W, b) pairs: 5 hidden ReLU layers + linear output
    designated: tuple  # (layer index, row, col) of w_k
    delta1: float
    delta2: float
    epsilon: float
    input_bound: float
    g_net: TwoLayerNet
    h_net: TwoLayerNet
    merge_offset: float  # unperturbed output is g + h + merge_offset

    @property
    def input_dim(self) -> int:
        return self.weights[0][0].shape[1]


def flip_forward(net: FlipNet, x: np.ndarray, perturb=None, designated_delta: float = 0.0):
    """Evaluate the network; perturb is an optional list of (W, b) offsets.

    designated_delta is added to w_k on top of any perturbation already
    present at that entry.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    a = x
    dl, dr, dc = net.designated
    for li, (w, b) in enumerate(net.weights):
        if perturb is not None:
            w = w + perturb[li][0]
            b = b + perturb[li][1]
        if li == dl and designated_delta != 0.0:
            w = w.copy()
            w[dr, dc] += designated_delta
        a = a @ w.T + b
        if li < len(net.weights) - 1:
            a = np.maximum(a, 0.0)
    return a[:, 0]


def build_flip_network(
    g_approx: TwoLayerNet,
    h_approx: TwoLayerNet,
    delta1: float,
    delta2: float,
    epsilon: float,
    input_bound: float = 1.0,
    sharpness: float = 1.0,
) -> FlipNet:
    if g_approx.input_dim != h_approx.input_dim:
        raise ValueError("g and h approximations must share an input dimension")
    if not (0 < delta1 < delta2):
        raise ValueError("need 0 < delta1 < delta2")
    if epsilon <= 0 or input_bound <= 0 or sharpness <= 0:
        raise ValueError("epsilon, input_bound, sharpness must be > 0")
    n = g_approx.input_dim
    hg, hh = g_approx.w2.shape[0], h_approx.w2.shape[0]

    g_hid = g_approx.hidden_bounds(input_bound)
    h_hid = h_approx.hidden_bounds(input_bound)
    # Noise bound on the gate's pre-activation under i.i.d. +-delta2 on
    # every non-designated weight: one edge per layer-1 node plus the bias.
    s1 = float(g_hid.sum() + h_hid.sum())
    u = delta2 * (s1 + 2.0)
    # Layout unit for the gate thresholds.  The ramp width 2u/sharpness must
    # fit between the gate's three regimes, so widen the whole layout when
    # sharpness < 1 instead of letting the ramps overlap.
    unit = u * max(1.0, 1.0 / sharpness)
    big_k = 8.0 * unit / delta1  # signal delta1 * B_K = 8 unit, >> noise u
    mg = g_approx.output_bound(input_bound)
    mh = h_approx.output_bound(input_bound)
    c = max(mg, mh) + 1.0
    w_gate = max(mg, mh) + c + 1.0

    # Error budget; each term is named so an infeasible epsilon can report
    # the binding sub-tolerance.
    budget = {
        # K's activation leaking through perturbed zero-weights into the
        # g/h branch nodes.
        "gate_leak": delta2 * big_k,
        # i.i.d. noise accumulated along the g/h branches themselves.
        "branch_noise": 4.0 * delta2 * (s1 + mg + mh + 2.0 * c + 4.0),
        # switch slack: imperfect sigma in {0,1} scaled by the gating weight.
        "switch_noise": 4.0 * w_gate * delta2 * (mg + mh + 2.0 * c + 2.0),
    }
    total = sum(budget.values())
    if total >= epsilon:
        binding = max(budget, key=budget.get)
        raise FlipBuildError(
            f"epsilon={epsilon} unattainable: predicted error {total:.3g}, "
            f"binding sub-tolerance {binding}={budget[binding]:.3g} "
            f"(budget: {budget})"
        )

    width = 2.0 * u / sharpness  # ramp width; <= 2 * unit by construction

    # Layer 1: g hidden | h hidden | K (constant B_K via bias).
    w1 = np.zeros((hg + hh + 1, n))
    b1 = np.zeros(hg + hh + 1)
    w1[:hg] = g_approx.w1
    b1[:hg] = g_approx.b1
    w1[hg : hg + hh] = h_approx.w1
    b1[hg : hg + hh] = h_approx.b1
    b1[-1] = big_k

    # Layer 2: Gnode = g + C, Hnode = h + C, K' = relu(w_k K + 4u), w_k = 0.
    w2 = np.zeros((3, hg + hh + 1))
    b2 = np.zeros(3)
    w2[0, :hg] = g_approx.w2
    b2[0] = g_approx.b2 + c
    w2[1, hg : hg + hh] = h_approx.w2
    b2[1] = h_approx.b2 + c
    b2[2] = 4.0 * unit
    designated = (1, 2, hg + hh)

    # Layer 3: ramp legs on K' plus pass-throughs.
    #   q1, q2: positive detector ramp opening over [6u, 6u + width]
    #   q3, q4: mid detector ramp opening over [u, u + width]
    #   Gp, Hp: relu pass-through (both positive by construction)
    w3 = np.zeros((6, 3))
    b3 = np.zeros(6)
    for i, lo in ((0, 6.0 * unit), (1, 6.0 * unit + width), (2, unit), (3, unit + width)):
        w3[i, 2] = 1.0 / width
        b3[i] = -lo / width
    w3[4, 0] = 1.0
    w3[5, 1] = 1.0

    # Layer 4: sigma1 = q1 - q2, sigma2 = 1 - (q3 - q4), pass-throughs.
    w4 = np.zeros((4, 6))
    b4 = np.zeros(4)
    w4[0, 0], w4[0, 1] = 1.0, -1.0
    w4[1, 2], w4[1, 3], b4[1] = -1.0, 1.0, 1.0
    w4[2, 4] = 1.0
    w4[3, 5] = 1.0

    # Layer 5: gated branches.
    w5 = np.zeros((2, 4))
    b5 = np.zeros(2)
    w5[0, 2], w5[0, 1] = 1.0, -w_gate  # Ghat = relu(Gnode - W sigma2)
    w5[1, 3], w5[1, 0] = 1.0, -w_gate  # Hhat = relu(Hnode - W sigma1)

    w6 = np.array([[1.0, 1.0]])
    b6 = np.array([-c])

    net = FlipNet(
        weights=((w1, b1), (w2, b2), (w3, b3), (w4, b4), (w5, b5), (w6, b6)),
        designated=designated,
        delta1=delta1,
        delta2=delta2,
        epsilon=epsilon,
        input_bound=input_bound,
        g_net=g_approx,
        h_net=h_approx,
        merge_offset=c,
    )
    _validate_build(net, big_k, unit, w_gate, mg, mh, c)
    return net


def _validate_build(net: FlipNet, big_k, unit, w_gate, mg, mh, c):
    dl, dr, dc = net.designated
    assert net.weights[dl][0][dr, dc] == 0.0, "designated weight must start at 0"
    assert net.delta1 * big_k >= 8.0 * unit - 1e-12, "flip signal below noise margin"
    assert w_gate >= max(mg, mh) + c + 1.0 - 1e-12, "gating weight too small"
    # Unperturbed merge: F = g + h + C on a coarse probe grid.
    grid = _grid(net, 17, None)
    f0 = flip_forward(net, grid)
    merge = net.g_net(grid) + net.h_net(grid) + net.merge_offset
    assert np.max(np.abs(f0 - merge)) < 1e-9, "unperturbed merge mismatch"


def _grid(net: FlipNet, points: int, rng) -> np.ndarray:
    if net.input_dim == 1:
        return np.linspace(0.0, net.input_bound, points)[:, None]
    r = rng if rng is not None else child_rng(0x961D)
    return r.uniform(0.0, net.input_bound, size=(points, net.input_dim))


def _sup_errors(net: FlipNet, grid, perturb, delta):
    f = flip_forward(net, grid, perturb, delta)
    return (
        float(np.max(np.abs(f - net.g_net(grid)))),
        float(np.max(np.abs(f - net.h_net(grid)))),
    )


@dataclass(frozen=True)
class FlipReport:
    mode: str
    sup_error_pos: float
    sup_error_neg: float
    flip_rate_pos: float
    flip_rate_neg: float
    theorem_bound: float
    passed: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode": self.mode,
                "sup_error_pos": self.sup_error_pos,
                "sup_error_neg": self.sup_error_neg,
                "flip_rate_pos": self.flip_rate_pos,
                "flip_rate_neg": self.flip_rate_neg,
                "theorem_bound": self.theorem_bound,
                "passed": self.passed,
            },
            sort_keys=True,
        )


def verify_flip(
    net: FlipNet,
    grid_points: int = 201,
    mode: str = "designated_only",
    scale: float | None = None,
    trials: int = 1000,
    seed: int = 0,
) -> FlipReport:
    """Check the flip property.

    designated_only: deterministic evaluation at +-(delta1 + delta2)/2 on
    the designated weight alone.  full_iid: every weight and bias drawn
    i.i.d. uniform(+-scale); a trial counts toward flip_rate_pos when the
    designated draw is positive and the output is sup-close to g (mirror
    for h).  theorem_bound is P(delta1 < U < delta2) for one side under
    the uniform draw.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    if mode not in ("designated_only", "full_iid"):
        raise ValueError(f"mode must be designated_only or full_iid, got {mode!r}")
    rng = child_rng(seed, 0xF11B)
    grid = _grid(net, grid_points, rng if net.input_dim > 1 else None)

    if mode == "designated_only":
        mid = 0.5 * (net.delta1 + net.delta2)
        err_pos = _sup_errors(net, grid, None, +mid)[0]
        err_neg = _sup_errors(net, grid, None, -mid)[1]
        ok = err_pos < net.epsilon and err_neg < net.epsilon
        return FlipReport("designated_only", err_pos, err_neg, float(err_pos < net.epsilon),
                          float(err_neg < net.epsilon), 1.0, ok)

    if scale is None:
        scale = net.delta2
    if not (0 < scale <= net.delta2):
        raise ValueError("full_iid scale must be in (0, delta2]")
    dl, dr, dc = net.designated
    bound = (min(scale, net.delta2) - net.delta1) / (2.0 * scale)
    hits_pos = hits_neg = 0
    worst_pos = worst_neg = 0.0
    for _ in range(trials):
        perturb = [
            (rng.uniform(-scale, scale, w.shape), rng.uniform(-scale, scale, b.shape))
            for w, b in net.weights
        ]
        draw = perturb[dl][0][dr, dc]
        eg, eh = _sup_errors(net, grid, perturb, 0.0)
        if draw > 0:
            hits_pos += eg < net.epsilon
            if net.delta1 < draw < net.delta2:
                worst_pos = max(worst_pos, eg)
        else:
            hits_neg += eh < net.epsilon
            if net.delta1 < -draw < net.delta2:
                worst_neg = max(worst_neg, eh)
    rate_pos = hits_pos / trials
    rate_neg = hits_neg / trials
    se = np.sqrt(bound * (1 - bound) / trials)
    ok = bool(rate_pos >= bound - 3 * se and rate_neg >= bound - 3 * se)
    return FlipReport("full_iid", worst_pos, worst_neg, float(rate_pos), float(rate_neg), float(bound), ok)
