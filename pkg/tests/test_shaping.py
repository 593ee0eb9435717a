import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from evoes.shaping import STD_FLOOR, gaussian_kernel, rank_normalize, unwhiten, whiten

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def test_rank_normalize_examples():
    assert rank_normalize([10, 30, 20]) == pytest.approx([-0.5, 0.5, 0.0])
    assert rank_normalize([7]) == pytest.approx([0.0])
    assert rank_normalize([5, 5]) == pytest.approx([0.0, 0.0])


def test_rank_normalize_rejects_bad_input():
    with pytest.raises(ValueError):
        rank_normalize([])
    with pytest.raises(ValueError):
        rank_normalize([1.0, np.nan])


@given(st.lists(finite_floats, min_size=2, max_size=40, unique=True))
@settings(max_examples=100)
def test_rank_normalize_distinct_properties(vals):
    out = rank_normalize(vals)
    assert out.sum() == pytest.approx(0.0, abs=1e-9)
    assert out.min() == pytest.approx(-0.5)
    assert out.max() == pytest.approx(0.5)


@given(st.lists(st.floats(min_value=-50, max_value=50, allow_nan=False), min_size=1, max_size=30))
@settings(max_examples=100)
def test_rank_normalize_monotone_invariance(vals):
    arr = np.asarray(vals)
    # float rounding can merge nearly-equal inputs into ties under a
    # monotone transform; invariance only holds when distinctness survives
    for transformed in (np.exp(arr / 10), 3.0 * arr + 7.0):
        assume(len(np.unique(transformed)) == len(np.unique(arr)))
    base = rank_normalize(vals)
    assert base == pytest.approx(rank_normalize(np.exp(arr / 10)), abs=1e-12)
    assert base == pytest.approx(rank_normalize(3.0 * arr + 7.0), abs=1e-12)


def test_whiten_examples():
    w, _ = whiten(np.array([[1.0], [2.0], [3.0]]))
    assert w[:, 0] == pytest.approx([-1.224744871, 0.0, 1.224744871], abs=1e-8)
    wc, _ = whiten(np.array([[2.0], [2.0], [2.0]]))
    assert np.array_equal(wc, np.zeros((3, 1)))


def test_whiten_defining_property():
    rng = np.random.default_rng(0)
    b = rng.normal(size=(200, 3)) * [1, 10, 0.01] + [5, -2, 0]
    w, _ = whiten(b)
    assert np.max(np.abs(w.mean(axis=0))) < 1e-12
    assert np.max(np.abs(w.std(axis=0) - 1.0)) < 1e-12


@given(st.integers(min_value=2, max_value=30), st.integers(min_value=1, max_value=4), st.integers())
@settings(max_examples=60)
def test_whiten_round_trip(n, d, seed):
    rng = np.random.default_rng(seed % (1 << 32))
    b = rng.normal(scale=3.0, size=(n, d))
    w, stats = whiten(b)
    assert np.all(stats.std >= STD_FLOOR)
    assert np.max(np.abs(unwhiten(w, stats) - b)) < 1e-10


def test_gaussian_kernel_analytic_values():
    assert gaussian_kernel([0.0], 1.0) == pytest.approx(0.3989422804, abs=1e-8)
    assert gaussian_kernel([2.0], 1.0) == pytest.approx(0.0539909665, abs=1e-8)
    assert gaussian_kernel([0.0, 0.0], 1.0) == pytest.approx(0.1591549431, abs=1e-8)


def test_gaussian_kernel_monotone_decreasing():
    vals = [gaussian_kernel([r], 0.7) for r in np.linspace(0, 5, 40)]
    assert vals[0] == max(vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_gaussian_kernel_bad_bandwidth():
    with pytest.raises(ValueError):
        gaussian_kernel([0.0], 0.0)
