"""
Deterministic random streams.

A stream is a (seed, counter) pair. Every draw hands out a fresh numpy
Generator keyed by both numbers and bumps the counter, so identical
(seed, counter) states always yield identical draws. Workers never share a
stream; they derive substreams keyed by what they are computing.
"""

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass
class RngStream:
    seed: int
    counter: int = 0

    def __post_init__(self):
        self.seed = int(self.seed) & _MASK64
        self.counter = int(self.counter) & _MASK64

    def next(self) -> np.random.Generator:
        """Generator for the current counter value; advances the stream"""
        gen = np.random.default_rng([self.seed, self.counter])
        self.counter = (self.counter + 1) & _MASK64
        return gen

    def substream(self, *keys: int) -> "RngStream":
        """Independent stream identified by integer keys (epoch, step, purpose, ...)"""
        state = np.random.SeedSequence([self.seed, *[int(k) & _MASK64 for k in keys]])
        child_seed = int(state.generate_state(1, dtype=np.uint64)[0])
        return RngStream(child_seed, 0)

    def copy(self) -> "RngStream":
        return RngStream(self.seed, self.counter)
