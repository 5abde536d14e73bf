"""Tests for counter-based random streams"""

import numpy as np
import pytest

from src.core.rng import Stream, chain_streams, substream


def test_same_key_same_draws():
    """Test that a key always gives the same draws"""
    assert np.array_equal(substream(5, Stream.ESCAPE, 2).random(8), substream(5, Stream.ESCAPE, 2).random(8))


def test_keys_are_independent_of_use_order():
    """Test that using other streams first does not shift a stream"""
    expected = substream(1, Stream.ZZD, 3).random(4)
    chains = chain_streams(1, Stream.ZZD, 4)
    for rng in chains[:3]:
        rng.random(100)
    assert np.array_equal(chains[3].random(4), expected)


def test_different_keys_differ():
    """Test that streams and seeds are separated"""
    a = substream(0, Stream.ESCAPE).random(4)
    assert not np.array_equal(a, substream(0, Stream.ZZD).random(4))
    assert not np.array_equal(a, substream(1, Stream.ESCAPE).random(4))


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    """Test the 64-bit seed check"""
    with pytest.raises(ValueError):
        substream(seed, Stream.ESCAPE)
