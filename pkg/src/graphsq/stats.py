"""Replication statistics with exact, order-independent accumulation.

Sums are kept as :class:`fractions.Fraction` (every float converts exactly),
so merging partial results from parallel workers in any order gives the same
bits as a single pass over all values.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable


class Accumulator:
    __slots__ = ("count", "total", "total_sq")

    def __init__(self):
        self.count = 0
        self.total = Fraction(0)
        self.total_sq = Fraction(0)

    def add(self, x: float) -> None:
        v = Fraction(x)
        self.count += 1
        self.total += v
        self.total_sq += v * v

    def extend(self, xs: Iterable[float]) -> "Accumulator":
        for x in xs:
            self.add(x)
        return self

    def merge(self, other: "Accumulator") -> "Accumulator":
        out = Accumulator()
        out.count = self.count + other.count
        out.total = self.total + other.total
        out.total_sq = self.total_sq + other.total_sq
        return out

    @property
    def mean(self) -> float:
        if not self.count:
            return math.nan
        return float(self.total / self.count)

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        if self.count < 2:
            return math.nan
        num = self.total_sq - self.total * self.total / self.count
        return float(num / (self.count - 1))

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return math.nan
        return math.sqrt(self.variance / self.count)


def batch_stats(values) -> tuple[float, float]:
    """``(mean, stderr)`` of a complete sample, computed in one go."""
    xs = [Fraction(float(v)) for v in values]
    n = len(xs)
    if n == 0:
        return math.nan, math.nan
    s = sum(xs, Fraction(0))
    mean = float(s / n)
    if n < 2:
        return mean, math.nan
    ss = sum((x * x for x in xs), Fraction(0))
    var = float((ss - s * s / n) / (n - 1))
    return mean, math.sqrt(var / n)


def covariance(a, b) -> tuple[float, float]:
    """Sample covariance of paired draws and its standard error.

    The standard error is that of the mean of ``(a_r - mean a)(b_r - mean b)``.
    """
    n = len(a)
    if n != len(b) or n < 3:
        raise ValueError("need at least three paired replications")
    ma = math.fsum(a) / n
    mb = math.fsum(b) / n
    z = [(x - ma) * (y - mb) for x, y in zip(a, b)]
    cov = math.fsum(z) / (n - 1)
    mz = math.fsum(z) / n
    var_z = math.fsum((v - mz) ** 2 for v in z) / (n - 1)
    return cov, math.sqrt(var_z / n)
