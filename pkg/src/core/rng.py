"""Counter-based random stream derivation

Every random draw in a run comes from a generator keyed by (seed, stream id, counters...).
Streams are Philox bit generators seeded through ``numpy.random.SeedSequence`` spawn keys, so
the draws of one key never depend on how many other keys were used or in which order.
"""

from enum import IntEnum
from typing import List

import numpy as np


class Stream(IntEnum):
    """Top-level stream identifiers, one per experiment family"""

    ESCAPE = 1
    ZZD = 2
    SCALING_DISCRETE = 3
    SCALING_CONTINUOUS = 4
    HYBRID_STEP = 5
    HYBRID_PARTICLE = 6
    VALIDATE = 7
    HYBRID_INIT = 9


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream keyed by ``(seed, *keys)``"""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))


def chain_streams(seed: int, stream: int, count: int) -> List[np.random.Generator]:
    """One independent generator per chain"""
    return [substream(seed, stream, index) for index in range(count)]


class StepStreams:
    """Per-step generators for the hybrid sampler

    ``step()`` serves the drift, OU and refreshment draws of one step; ``particle(i)`` serves the
    thinned jump proposals of particle ``i`` in that step.
    """

    def __init__(self, seed: int, step_index: int):
        self.seed = seed
        self.step_index = step_index

    def step(self) -> np.random.Generator:
        return substream(self.seed, Stream.HYBRID_STEP, self.step_index)

    def particle(self, index: int) -> np.random.Generator:
        return substream(self.seed, Stream.HYBRID_PARTICLE, self.step_index, index)
