import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evoes.envs import (
    PointWalkerSpec,
    evaluate_genomes,
    get_env,
    interference_behavior,
    pointwalker_rollout,
    pointwalker_rollout_batch,
)
from evoes.policy import MlpSpec, init_mlp, param_count


def test_interference_examples():
    assert interference_behavior(0.0) == 0.0
    assert interference_behavior(5 * np.pi / 2) == pytest.approx(0.0, abs=1e-12)
    assert interference_behavior(0.1) == pytest.approx(5 * np.sin(0.02) * np.sin(2.0), abs=1e-12)
    assert interference_behavior(0.1) == pytest.approx(0.09093, abs=1e-4)


@given(st.floats(min_value=-20, max_value=20, allow_nan=False))
@settings(max_examples=100)
def test_interference_even(x):
    assert interference_behavior(-x) == pytest.approx(interference_behavior(x), abs=1e-12)


def test_pointwalker_zero_params():
    env = PointWalkerSpec(dims=1)
    spec = env.policy_spec()
    res = pointwalker_rollout(env, spec, np.zeros(param_count(spec)))
    assert res.fitness == 0.0
    assert np.array_equal(res.bc, np.zeros(1))
    assert res.steps == env.horizon


def test_pointwalker_constant_acceleration():
    # Linear-output policy with zero weights and output bias 1: a_t = 1.
    env = PointWalkerSpec(dims=1, horizon=10)
    spec = MlpSpec(env.obs_dim, 1, (), output_activation="linear")
    params = np.zeros(param_count(spec))
    params[-1] = 1.0  # output bias
    res = pointwalker_rollout(env, spec, params)
    assert res.fitness == pytest.approx(0.55, abs=1e-12)


def test_pointwalker_deterministic():
    env = PointWalkerSpec(dims=2)
    spec = env.policy_spec()
    params = init_mlp(spec, 3)
    a = pointwalker_rollout(env, spec, params)
    b = pointwalker_rollout(env, spec, params)
    assert np.array_equal(a.bc, b.bc) and a.fitness == b.fitness


def test_pointwalker_speed_clamp_reachability():
    env = PointWalkerSpec(dims=1)
    spec = env.policy_spec()
    bound = env.speed_bound * env.dt * env.horizon
    for seed in range(5):
        res = pointwalker_rollout(env, spec, 50.0 * init_mlp(spec, seed))
        assert np.linalg.norm(res.bc) <= bound + 1e-9


def test_pointwalker_batch_matches_loop():
    env = PointWalkerSpec(dims=1, horizon=20)
    spec = env.policy_spec()
    params = np.stack([init_mlp(spec, s) for s in range(4)])
    bcs, fit = pointwalker_rollout_batch(env, spec, params)
    for i in range(4):
        single = pointwalker_rollout(env, spec, params[i])
        assert bcs[i] == pytest.approx(single.bc, abs=1e-14)
        assert fit[i] == pytest.approx(single.fitness, abs=1e-14)


def test_pointwalker_spec_validation():
    with pytest.raises(ValueError):
        PointWalkerSpec(dims=3)
    with pytest.raises(ValueError):
        PointWalkerSpec(dims=1, dt=0.0)
    env = PointWalkerSpec(dims=1)
    with pytest.raises(ValueError):
        pointwalker_rollout_batch(env, MlpSpec(2, 1), np.zeros((1, param_count(MlpSpec(2, 1)))))


def test_registry():
    assert get_env("interference").bc_dim == 1
    assert get_env("pointwalker1d").needs_policy()
    assert get_env("pointwalker2d").bc_dim == 2
    with pytest.raises(KeyError):
        get_env("halfcheetah")


def test_evaluate_genomes_interference():
    envdef = get_env("interference")
    bcs, fit = evaluate_genomes(envdef, np.array([[0.0], [0.1]]))
    assert bcs[0, 0] == 0.0
    assert bcs[1, 0] == pytest.approx(0.09093, abs=1e-4)
    assert np.array_equal(fit, np.zeros(2))


def test_evaluate_genomes_needs_spec():
    with pytest.raises(ValueError):
        evaluate_genomes(get_env("pointwalker1d"), np.zeros((1, 5)))
