import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from evoes.rng import child_rng, mix64, splitmix64

U64 = 1 << 64


def test_splitmix64_reference_vector():
    # First outputs of the published SplitMix64 sequence from state 0.
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4
    assert splitmix64(2 * 0x9E3779B97F4A7C15 % U64) == 0x06C45D188009454F


def test_mix64_requires_words():
    with pytest.raises(ValueError):
        mix64()


def test_mix64_fold_definition():
    a, b, c = 12345, 678, 910
    assert mix64(a) == splitmix64(a)
    assert mix64(a, b) == splitmix64(splitmix64(a) ^ b)
    assert mix64(a, b, c) == splitmix64(mix64(a, b) ^ c)


def test_mix64_order_sensitive():
    assert mix64(1, 2) != mix64(2, 1)


def test_child_rng_reproducible():
    a = child_rng(7, 3).standard_normal(5)
    b = child_rng(7, 3).standard_normal(5)
    assert np.array_equal(a, b)
    c = child_rng(7, 4).standard_normal(5)
    assert not np.array_equal(a, c)


def test_numpy_uint64_inputs_accepted():
    s = np.uint64(0xDEADBEEF12345678)
    assert mix64(s, np.uint64(3)) == mix64(0xDEADBEEF12345678, 3)


@given(st.integers(min_value=0, max_value=U64 - 1))
def test_splitmix64_range(x):
    y = splitmix64(x)
    assert 0 <= y < U64


@given(st.integers(), st.integers())
def test_mix64_masks_to_64_bits(a, b):
    assert mix64(a, b) == mix64(a % U64, b % U64)
