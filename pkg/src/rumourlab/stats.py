"""Monte Carlo support: deterministic seed derivation and interval estimates."""

from __future__ import annotations

import math
from statistics import NormalDist

import numpy as np

_MASK64 = (1 << 64) - 1

# two-sided 99% normal quantile
Z99 = NormalDist().inv_cdf(0.995)


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix64(*parts: int) -> int:
    """Fold integers into one 64-bit seed.

    Commutative aggregation schemes rely on per-trial seeds being a pure
    function of (master seed, indices), independent of evaluation order.
    """
    h = 0x243F6A8885A308D3  # nonzero start so mix64(0) != 0
    for part in parts:
        h = _splitmix64(h ^ _splitmix64(part & _MASK64))
    return h


def make_rng(*parts: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(mix64(*parts)))


def wilson_interval(successes: int, trials: int, z: float = Z99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (phat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def mean_interval(values: np.ndarray, z: float = Z99) -> tuple[float, float, float]:
    """(mean, lo, hi) normal-approximation interval for the mean of a sample."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n == 0:
        raise ValueError("need at least one value")
    mean = math.fsum(values.tolist()) / n
    if n == 1:
        return mean, mean, mean
    var = math.fsum(((v - mean) ** 2 for v in values.tolist())) / (n - 1)
    half = z * math.sqrt(var / n)
    return mean, mean - half, mean + half
