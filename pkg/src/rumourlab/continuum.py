"""Poisson Boolean model on the positive orthant (d = 1, 2).

Points fall as a Poisson process of intensity lam on [0, T]^d; each point
x grows a block x + [0, rho]^d with rho drawn from a continuous heavy- or
light-tailed law.  The 1D sweep finds the supremum of the k-deficient
set exactly; the 2D variant rasterizes onto a pixel grid (discretization
bias of order resolution * boundary density, documented not corrected).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rumourlab.distributions import DistParseError
from rumourlab.stats import mean_interval, mix64, make_rng

_MAX_PIXELS = 2**31


@dataclass(frozen=True)
class ContinuousLaw:
    """Base for continuous radius laws given by their survival function."""

    def survival(self, x: float) -> float:
        raise NotImplementedError

    def quantile_from_uniform(self, u: np.ndarray) -> np.ndarray:
        """rho with P(rho > quantile(u)) = u; u in (0, 1]."""
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class ParetoCont(ContinuousLaw):
    """P(rho > x) = min(1, alpha/x)."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def survival(self, x: float) -> float:
        if x <= self.alpha:
            return 1.0
        return self.alpha / x

    def quantile_from_uniform(self, u: np.ndarray) -> np.ndarray:
        return self.alpha / u

    def spec_string(self) -> str:
        return f"pareto:alpha={self.alpha:g}"


@dataclass(frozen=True)
class PowerCont(ContinuousLaw):
    """P(rho > x) = min(1, x^(-beta))."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    def survival(self, x: float) -> float:
        if x <= 1.0:
            return 1.0
        return x ** (-self.beta)

    def quantile_from_uniform(self, u: np.ndarray) -> np.ndarray:
        return u ** (-1.0 / self.beta)

    def spec_string(self) -> str:
        return f"power:beta={self.beta:g}"


@dataclass(frozen=True)
class ConstCont(ContinuousLaw):
    r: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"r must be nonnegative, got {self.r}")

    def survival(self, x: float) -> float:
        return 1.0 if x <= self.r else 0.0

    def quantile_from_uniform(self, u: np.ndarray) -> np.ndarray:
        return np.full(np.shape(u), float(self.r))

    def spec_string(self) -> str:
        return f"const:r={self.r:g}"


def parse_continuous_law(spec: str) -> ContinuousLaw:
    """Same grammar as the lattice laws, continuous families only."""
    head, _, rest = spec.partition(":")
    try:
        if head == "pareto":
            key, _, val = rest.partition("=")
            if key != "alpha":
                raise DistParseError(rest, "expected 'alpha=<float>'")
            return ParetoCont(float(val))
        if head == "power":
            key, _, val = rest.partition("=")
            if key != "beta":
                raise DistParseError(rest, "expected 'beta=<float>'")
            return PowerCont(float(val))
        if head == "const":
            key, _, val = rest.partition("=")
            if key != "r":
                raise DistParseError(rest, "expected 'r=<float>'")
            return ConstCont(float(val))
    except DistParseError:
        raise
    except ValueError as e:
        raise DistParseError(rest, str(e)) from None
    raise DistParseError(head, "unknown continuous family (want pareto|power|const)")


@dataclass(frozen=True)
class ContinuumConfig:
    dimension: int
    lam: float
    window_t: float
    radius_law: ContinuousLaw
    k: int
    seed: int
    resolution: float = 1.0

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.window_t > 0:
            raise ValueError(f"window must be positive, got {self.window_t}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if self.dimension == 2:
            pixels = math.ceil(self.window_t / self.resolution) ** 2
            if pixels > _MAX_PIXELS:
                raise ValueError(f"pixel grid has {pixels} cells (> {_MAX_PIXELS})")


@dataclass
class PointSet:
    """Sampled points: coordinates shape (N, d) in [0, T]^d, radii shape (N,)."""

    coordinates: np.ndarray
    radii: np.ndarray


def sample_ppp(config: ContinuumConfig) -> PointSet:
    """Poisson(lam * T^d) many uniform points with i.i.d. radii, per seed."""
    rng = make_rng(config.seed)
    mean = config.lam * config.window_t**config.dimension
    n = int(rng.poisson(mean))
    coords = rng.random((n, config.dimension)) * config.window_t
    radii = config.radius_law.quantile_from_uniform(1.0 - rng.random(n))
    return PointSet(coords, radii)


def k_cover_last_gap_1d(points: PointSet, k: int, window_t: float):
    """Supremum of {x in [0, T] : fewer than k intervals [x_i, x_i + r_i) cover x}.

    None when coverage is at least k on all of [0, T].  Intervals are
    half-open so counts change only at endpoints.
    """
    starts = points.coordinates[:, 0]
    ends = starts + points.radii
    t = float(window_t)

    def count_at(x):
        return np.count_nonzero((starts <= x) & (x < ends))

    if count_at(t) < k:
        return t

    # breakpoints where the count can change, rightmost first
    bps = np.unique(np.concatenate([[0.0], starts[starts < t], ends[ends < t]]))
    bps = bps[(bps >= 0.0) & (bps < t)]
    ss = np.sort(starts)
    es = np.sort(ends)
    # count on [bps[i], next breakpoint) is the count at bps[i]
    cnt = np.searchsorted(ss, bps, side="right") - np.searchsorted(es, bps, side="right")
    deficient = np.flatnonzero(cnt < k)
    if deficient.size == 0:
        return None
    last = deficient[-1]
    # the deficient segment ends at the next breakpoint (or T)
    return float(bps[last + 1]) if last + 1 < bps.size else t


def k_cover_deficit_2d(points: PointSet, k: int, window_t: float, resolution: float):
    """(deficient pixel fraction, witness pixel centre or None) on a corner grid.

    Pixel (a, b) counts as covered by a block when its lower-left corner
    (a*res, b*res) lies in the closed block; radii reaching past the
    window are clamped (clamp irrelevant to the reported fraction).
    """
    m = math.ceil(window_t / resolution)
    if m * m > _MAX_PIXELS:
        raise ValueError(f"pixel grid has {m * m} cells (> {_MAX_PIXELS})")
    diff = np.zeros((m + 1, m + 1), dtype=np.int64)
    if points.coordinates.shape[0]:
        x = points.coordinates[:, 0]
        y = points.coordinates[:, 1]
        hix = np.minimum(x + points.radii, window_t)
        hiy = np.minimum(y + points.radii, window_t)
        a_lo = np.ceil(x / resolution).astype(np.int64)
        b_lo = np.ceil(y / resolution).astype(np.int64)
        a_hi = np.minimum(np.floor(hix / resolution), m - 1).astype(np.int64)
        b_hi = np.minimum(np.floor(hiy / resolution), m - 1).astype(np.int64)
        keep = (a_lo <= a_hi) & (b_lo <= b_hi)
        a_lo, b_lo, a_hi, b_hi = a_lo[keep], b_lo[keep], a_hi[keep], b_hi[keep]
        np.add.at(diff, (a_lo, b_lo), 1)
        np.add.at(diff, (a_lo, b_hi + 1), -1)
        np.add.at(diff, (a_hi + 1, b_lo), -1)
        np.add.at(diff, (a_hi + 1, b_hi + 1), 1)
    counts = diff[:m, :m].copy()
    np.cumsum(counts, axis=0, out=counts)
    np.cumsum(counts, axis=1, out=counts)
    bad = counts < k
    fraction = float(np.count_nonzero(bad)) / (m * m)
    if fraction == 0.0:
        return fraction, None
    rows, cols = np.nonzero(bad)
    # lexicographically largest (row, col) deficient pixel
    a, b = int(rows[-1]), int(cols[rows == rows[-1]][-1])
    witness = ((a + 0.5) * resolution, (b + 0.5) * resolution)
    return fraction, witness


@dataclass
class LambdaSummary:
    lam: float
    trials: int
    mean: float
    ci_low: float
    ci_high: float
    values: np.ndarray


def trial_statistic(config: ContinuumConfig) -> float:
    """Normalized deficiency for one realization: last-gap/T (1D) or pixel fraction (2D)."""
    points = sample_ppp(config)
    if config.dimension == 1:
        gap = k_cover_last_gap_1d(points, config.k, config.window_t)
        return 0.0 if gap is None else gap / config.window_t
    fraction, _ = k_cover_deficit_2d(points, config.k, config.window_t, config.resolution)
    return fraction


def scan_lambda(config: ContinuumConfig, lambdas, trials: int) -> list[LambdaSummary]:
    """Per-intensity deficiency summaries for bracketing the covered phase.

    Trials use seeds mix64(seed, grid index, trial); draws are independent
    across intensities, so monotonicity holds in expectation only.
    """
    lambdas = list(lambdas)
    if any(l2 < l1 for l1, l2 in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be sorted ascending")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = []
    for li, lam in enumerate(lambdas):
        vals = np.empty(trials, dtype=np.float64)
        for t in range(trials):
            cfg = ContinuumConfig(
                config.dimension,
                lam,
                config.window_t,
                config.radius_law,
                config.k,
                mix64(config.seed, li, t),
                config.resolution,
            )
            vals[t] = trial_statistic(cfg)
        mean, lo, hi = mean_interval(vals)
        out.append(LambdaSummary(lam, trials, mean, lo, hi, vals))
    return out
