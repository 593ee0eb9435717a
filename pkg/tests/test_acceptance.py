"""Acceptance gate: one test per shipped claim, at stated tolerances.

Each test prints a single ``ACCEPTANCE <n>: PASS|FAIL`` line (visible with
``pytest -s``; the verbose test status carries the same information).
Long-running training fixtures are module-scoped and shared across criteria
that use the same runs; their wall time is tracked so runtime budgets are
asserted against the real cost of the work.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from evoes.cli import dispatch, parse_config
from evoes.distributions import IsoGaussian
from evoes.estimators import (
    finite_difference_check,
    maxent_loss,
    score_function_gradient,
)
from evoes.experiments import (
    bimodality_metrics,
    component_mean_bcs,
    sample_final_batch,
    seed_standard_es,
    split_checkpoint,
)
from evoes.rng import child_rng
from evoes.shaping import gaussian_kernel, rank_normalize, unwhiten, whiten
from evoes.theoremnet import build_flip_network, identity_net, negation_net, verify_flip
from evoes.trainer import init_checkpoint, train_generation

TARGET = 5.0 * np.pi / 2.0


def _report(n: int, ok: bool, detail: str = "") -> None:
    print(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"acceptance criterion {n} failed: {detail}"


def _train_loop(cfg, generations=None):
    state = init_checkpoint(cfg)
    stats_seq = []
    for _ in range(cfg.generations if generations is None else generations):
        state, stats, _ = train_generation(state)
        stats_seq.append(stats)
    return state, stats_seq


# ---------------------------------------------------------------------------
# Shared training runs (module-scoped; wall time recorded for budget checks)
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def desk_maxvar_runs():
    t0 = time.perf_counter()
    states = {}
    for seed in (1, 2, 3):
        cfg = replace(parse_config("desk-maxvar"), run_seed=seed)
        states[seed], _ = _train_loop(cfg)
    return states, time.perf_counter() - t0


@pytest.fixture(scope="module")
def desk_maxent_runs():
    t0 = time.perf_counter()
    states = {}
    for seed in (1, 2, 3):
        cfg = replace(parse_config("desk-maxent"), run_seed=seed)
        states[seed], _ = _train_loop(cfg)
    return states, time.perf_counter() - t0


@pytest.fixture(scope="module")
def desk_standard_ref():
    t0 = time.perf_counter()
    cfg = replace(parse_config("desk-standard"), run_seed=1)
    _, stats_seq = _train_loop(cfg)
    return stats_seq[-1].fitness_mean, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# 1 & 2: interference convergence to the envelope argmax, both objectives
# ---------------------------------------------------------------------------

def _interference_criterion(n, preset):
    details = []
    ok = True
    for seed in (1, 2, 3):
        cfg = replace(parse_config(preset), run_seed=seed)
        t0 = time.perf_counter()
        state, _ = _train_loop(cfg)
        elapsed = time.perf_counter() - t0
        mu = float(state.dist.mean[0])
        gap = abs(abs(mu) - TARGET)
        ok = ok and gap < 0.5 and elapsed < 30.0
        details.append(f"seed {seed}: mu={mu:.3f} gap={gap:.3f} t={elapsed:.1f}s")
    _report(n, ok, "; ".join(details))


def test_criterion_1_interference_maxvar():
    _interference_criterion(1, "interference-maxvar")


def test_criterion_2_interference_maxent():
    _interference_criterion(2, "interference-maxent")


# ---------------------------------------------------------------------------
# 3: gradient-oracle suite, all estimators, 1-D and 5-D
# ---------------------------------------------------------------------------

def test_criterion_3_gradient_oracles():
    def quad(z):
        return z[:, :1].copy(), np.sum(z * z, axis=1)

    def waves(z):
        amps = 1.0 + 0.5 * np.arange(z.shape[1])
        b = np.sin(z + 0.3 * np.arange(z.shape[1])) @ amps
        return b[:, None], b

    t0 = time.perf_counter()
    ok = True
    details = []
    for est in ("es", "maxvar", "maxent"):
        for dim in (1, 5):
            dist = IsoGaussian(np.linspace(0.3, 1.0, dim), 0.5)
            env = quad if est == "es" else waves
            g = score_function_gradient(est, dist, env, 100_000, seed=1)
            fd = finite_difference_check(est, dist, env, 100_000, 1e-4, seed=1)
            a = g.grad.ravel()
            cos = float(a @ fd / (np.linalg.norm(a) * np.linalg.norm(fd)))
            mag = float(abs(np.linalg.norm(a) / np.linalg.norm(fd) - 1.0))
            ok = ok and cos > 0.99 and mag < 0.10
            details.append(f"{est}/{dim}d cos={cos:.4f} mag={mag:.3f}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60.0
    _report(3, ok, "; ".join(details) + f"; t={elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 4: analytic cross-entropy value for a Gaussian BC
# ---------------------------------------------------------------------------

def test_criterion_4_maxent_analytic():
    sigma, h = 0.5, 1.0
    z = 3.0 + sigma * child_rng(1, 0xACC4).standard_normal((10_000, 1))
    loss, _ = maxent_loss(z, h)
    expect = 0.5 * np.log(2 * np.pi * (sigma**2 + h**2)) + sigma**2 / (2 * (sigma**2 + h**2))
    ok = abs(loss - 1.1305) < 0.02 and abs(expect - 1.1305) < 1e-3
    _report(4, ok, f"loss={loss:.4f} oracle={expect:.4f}")


# ---------------------------------------------------------------------------
# 5: MaxVar null case — symmetric weights cancel for B(z) = z
# ---------------------------------------------------------------------------

def test_criterion_5_maxvar_null():
    n, sigma = 10_000, 0.5
    eps = child_rng(1, 0xACC5).standard_normal((n, 1))
    scores = eps / sigma  # score of the mean for z = mu + sigma * eps
    white, _ = whiten(eps * sigma)  # B(z) = z, shift-invariant whitening
    per_sample = np.sum(white * white, axis=1) * scores[:, 0]
    grad = per_sample.mean()
    se = per_sample.std() / np.sqrt(n)
    ok = abs(grad) < 3 * se
    _report(5, ok, f"grad={grad:.4f} 3se={3 * se:.4f}")


# ---------------------------------------------------------------------------
# 6: walker bimodality under both diversity objectives
# ---------------------------------------------------------------------------

def test_criterion_6_walker_bimodality(desk_maxvar_runs, desk_maxent_runs, desk_standard_ref):
    ref_fitness, t_ref = desk_standard_ref
    maxvar_states, t_mv = desk_maxvar_runs
    maxent_states, t_me = desk_maxent_runs
    t0 = time.perf_counter()
    ok = True
    details = [f"ref={ref_fitness:.2f}"]
    for label, states in (("maxvar", maxvar_states), ("maxent", maxent_states)):
        for seed, state in states.items():
            batch = sample_final_batch(state, 2000)
            m = bimodality_metrics(batch.bcs)
            cell = (
                0.3 <= m.frac_positive <= 0.7
                and m.mean_abs_bc >= 0.5 * ref_fitness
            )
            ok = ok and cell
            details.append(
                f"{label}/s{seed}: frac={m.frac_positive:.2f} mean_abs={m.mean_abs_bc:.2f}"
            )
    total = t_ref + t_mv + t_me + (time.perf_counter() - t0)
    ok = ok and total < 300.0
    _report(6, ok, "; ".join(details) + f"; t={total:.0f}s")


# ---------------------------------------------------------------------------
# 7: diversity checkpoints warm-start directed search
# ---------------------------------------------------------------------------

def test_criterion_7_seeding_beats_fresh(desk_maxvar_runs):
    states, _ = desk_maxvar_runs
    ok = True
    details = []
    for seed, state in states.items():
        seeded = seed_standard_es(state, "+x", 20)
        fresh_cfg = replace(parse_config("desk-standard"), run_seed=seed, generations=20)
        _, fresh = _train_loop(fresh_cfg)
        for gen in (5, 10, 20):
            s, f = seeded[gen - 1].fitness_mean, fresh[gen - 1].fitness_mean
            ok = ok and s > f
            details.append(f"s{seed}@g{gen}: {s:.2f} vs {f:.2f}")
    _report(7, ok, "; ".join(details))


# ---------------------------------------------------------------------------
# 8: two-component mixtures specialize (vanilla and split variants)
# ---------------------------------------------------------------------------

def _components_separated(state) -> bool:
    bcs = component_mean_bcs(state)[:, 0]
    return bool(np.sign(bcs[0]) != np.sign(bcs[1]) or abs(bcs[0] - bcs[1]) >= 1.0)


def test_criterion_8_mixture_specialization():
    ok = True
    details = []
    for variant in ("vanilla", "splitting"):
        wins = 0
        for seed in range(1, 7):
            if variant == "vanilla":
                cfg = replace(parse_config("desk-maxent"), run_seed=seed, mixture_k=2)
                state, _ = _train_loop(cfg)
            else:
                cfg = replace(parse_config("desk-maxent"), run_seed=seed)
                state, _ = _train_loop(cfg, generations=75)
                state = split_checkpoint(state, 2, seed=seed)
                for _ in range(75):
                    state, _, _ = train_generation(state)
            wins += _components_separated(state)
        ok = ok and wins >= 4
        details.append(f"{variant}: {wins}/6")
    _report(8, ok, "; ".join(details))


# ---------------------------------------------------------------------------
# 9: designated-weight function flip, deterministic and under i.i.d. noise
# ---------------------------------------------------------------------------

def test_criterion_9_theorem_demo():
    t0 = time.perf_counter()
    net = build_flip_network(identity_net(), negation_net(), 1e-6, 1e-5, 0.05)
    det = verify_flip(net, 201, "designated_only")
    iid = verify_flip(net, 201, "full_iid", trials=1000, seed=1)
    se = np.sqrt(iid.theorem_bound * (1 - iid.theorem_bound) / 1000)
    elapsed = time.perf_counter() - t0
    ok = (
        det.sup_error_pos < 0.05
        and det.sup_error_neg < 0.05
        and iid.flip_rate_pos >= iid.theorem_bound - 3 * se
        and iid.flip_rate_neg >= iid.theorem_bound - 3 * se
        and elapsed < 10.0
    )
    _report(
        9,
        ok,
        f"sup=({det.sup_error_pos:.3g},{det.sup_error_neg:.3g}) "
        f"rates=({iid.flip_rate_pos:.3f},{iid.flip_rate_neg:.3f}) "
        f"bound={iid.theorem_bound:.3f} t={elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 10: byte-identical artifacts across repeats and worker counts
# ---------------------------------------------------------------------------

def test_criterion_10_byte_determinism(tmp_path):
    outs = []
    for name, workers in (("a", 1), ("b", 1), ("c", 4)):
        out = tmp_path / name
        rc = dispatch(
            [
                "train",
                "--preset", "interference-maxvar",
                "--seed", "1",
                "--generations", "50",
                "--workers", str(workers),
                "--out", str(out),
            ]
        )
        assert rc == 0
        outs.append(out)
    ckpts = [(o / "ckpt_final.evch").read_bytes() for o in outs]
    logs = [(o / "log.csv").read_bytes() for o in outs]
    ok = all(c == ckpts[0] for c in ckpts) and all(l == logs[0] for l in logs)
    _report(10, ok, "repeat + workers {1,4} artifacts byte-identical")


# ---------------------------------------------------------------------------
# 11: shaping primitives match their stated values exactly
# ---------------------------------------------------------------------------

def test_criterion_11_shaping_properties():
    ok = True
    # rank-normalize examples and monotone invariance
    ok = ok and np.allclose(rank_normalize([10, 30, 20]), [-0.5, 0.5, 0.0])
    vals = child_rng(11).standard_normal(100)
    ok = ok and np.allclose(
        rank_normalize(vals), rank_normalize(np.exp(vals)), atol=1e-12
    )
    # whitening round trip
    b = child_rng(12).standard_normal((200, 3)) * [1.0, 10.0, 0.01] + [5.0, -2.0, 0.0]
    w, stats = whiten(b)
    ok = ok and np.max(np.abs(unwhiten(w, stats) - b)) < 1e-10
    # kernel analytic values
    ok = ok and abs(gaussian_kernel([0.0], 1.0) - 0.3989422804) < 1e-8
    ok = ok and abs(gaussian_kernel([2.0], 1.0) - 0.0539909665) < 1e-8
    ok = ok and abs(gaussian_kernel([0.0, 0.0], 1.0) - 0.1591549431) < 1e-8
    _report(11, ok)
