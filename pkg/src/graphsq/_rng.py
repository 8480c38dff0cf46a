"""Seed handling and a buffered uniform stream for the event loops."""
from __future__ import annotations

import math

import numpy as np

_BLOCK = 4096


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    """Child seed sequence for ``(seed, *key)``.

    The key is mixed into the entropy, so the stream for key ``(i,)`` does not
    depend on how many other keys are in use.
    """
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    return np.random.SeedSequence([int(seed), *(int(k) for k in key)])


def make_generator(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *key)))


class UniformStream:
    """Scalar uniforms on [0, 1) served from blocks drawn by a numpy Generator.

    Calling ``Generator.random()`` once per event costs far more than a list
    pop, and block draws keep the sequence identical for a given seed.
    """

    __slots__ = ("_gen", "_buf", "_pos")

    def __init__(self, gen: np.random.Generator):
        self._gen = gen
        self._buf: list[float] = []
        self._pos = 0

    @classmethod
    def from_seed(cls, seed: int, *key: int) -> "UniformStream":
        return cls(make_generator(seed, *key))

    def random(self) -> float:
        pos = self._pos
        if pos >= len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]

    def exponential(self, rate: float = 1.0) -> float:
        return -math.log1p(-self.random()) / rate

    def integer(self, n: int) -> int:
        """Uniform integer in ``range(n)``."""
        k = int(self.random() * n)
        return k if k < n else n - 1
