import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evoes.policy import (
    MlpSpec,
    ObsNormalizer,
    flatten,
    init_mlp,
    mlp_forward,
    mlp_forward_batch,
    param_count,
    unflatten,
    update_normalizer,
)

small_specs = st.builds(
    MlpSpec,
    input_dim=st.integers(1, 4),
    output_dim=st.integers(1, 3),
    hidden=st.lists(st.integers(1, 6), max_size=3).map(tuple),
)


def test_param_count_example():
    assert param_count(MlpSpec(1, 1, (2,))) == 7


def test_init_deterministic_and_zero_biases():
    spec = MlpSpec(3, 2, (5, 4))
    a = init_mlp(spec, 42)
    b = init_mlp(spec, 42)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, init_mlp(spec, 43))
    for _, bias in unflatten(spec, a):
        assert np.array_equal(bias, np.zeros_like(bias))


def test_forward_zero_params():
    spec = MlpSpec(2, 1, (3,), output_activation="linear")
    out = mlp_forward(spec, np.zeros(param_count(spec)), [0.4, -1.0])
    assert out == pytest.approx([0.0])


def test_forward_identity_affine():
    spec = MlpSpec(1, 1, (), output_activation="linear")
    params = np.array([1.0, 0.0])  # weight 1, bias 0
    assert mlp_forward(spec, params, [3.0]) == pytest.approx([3.0])


@given(small_specs, st.integers(0, 1000))
@settings(max_examples=50)
def test_tanh_output_in_range(spec, seed):
    params = init_mlp(spec, seed) * 10
    obs = np.linspace(-2, 2, spec.input_dim)
    out = mlp_forward(spec, params, obs)
    # tanh saturates to exactly +-1.0 in float64 for large pre-activations
    assert np.all(np.abs(out) <= 1.0)


@given(small_specs, st.integers(0, 1000))
@settings(max_examples=50)
def test_flatten_unflatten_round_trip(spec, seed):
    params = init_mlp(spec, seed)
    assert np.array_equal(flatten(spec, unflatten(spec, params)), params)


def test_forward_batch_matches_single():
    spec = MlpSpec(3, 2)
    params = np.stack([init_mlp(spec, s) for s in range(5)])
    obs = np.arange(15.0).reshape(5, 3) / 10
    batch = mlp_forward_batch(spec, params, obs)
    for i in range(5):
        assert batch[i] == pytest.approx(mlp_forward(spec, params[i], obs[i]), abs=1e-14)


def test_lipschitz_smoke():
    spec = MlpSpec(3, 1)
    base = init_mlp(spec, 7)
    obs = np.array([0.5, -0.5, 1.0])
    y0 = mlp_forward(spec, base, obs)
    for delta in (1e-3, 1e-2):
        y1 = mlp_forward(spec, base + delta, obs)
        assert np.abs(y1 - y0).max() < 100 * delta * param_count(spec)


def test_normalizer_empty_update():
    n = ObsNormalizer()
    assert update_normalizer(n, np.empty((0, 3))) is n
    assert np.array_equal(n.normalize(np.array([1.0, 2.0])), np.array([1.0, 2.0]))


def test_normalizer_two_points():
    n = update_normalizer(ObsNormalizer(), np.array([[1.0], [3.0]]))
    assert n.count == 2
    assert n.mean == pytest.approx([2.0])
    assert n.std() == pytest.approx([1.0])


def test_normalizer_merge_commutative():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(50, 2)), rng.normal(loc=3, size=(30, 2))
    ab = update_normalizer(update_normalizer(ObsNormalizer(), a), b)
    ba = update_normalizer(update_normalizer(ObsNormalizer(), b), a)
    assert ab.mean == pytest.approx(ba.mean, abs=1e-9)
    assert ab.m2 == pytest.approx(ba.m2, abs=1e-9)


def test_normalizer_matches_direct():
    rng = np.random.default_rng(1)
    chunks = [rng.normal(size=(n, 3)) for n in (10, 40, 25)]
    norm = ObsNormalizer()
    for c in chunks:
        norm = update_normalizer(norm, c)
    allx = np.concatenate(chunks)
    assert norm.mean == pytest.approx(allx.mean(axis=0), abs=1e-9)
    assert norm.std() == pytest.approx(allx.std(axis=0), abs=1e-9)


def test_spec_validation():
    with pytest.raises(ValueError):
        MlpSpec(0, 1)
    with pytest.raises(ValueError):
        MlpSpec(1, 1, activation="sigmoid")
    with pytest.raises(ValueError):
        MlpSpec(1, 1, output_activation="relu")
