"""Binomial point estimates with Wilson score intervals."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from statistics import NormalDist

Z95 = NormalDist().inv_cdf(0.975)


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("wilson_interval needs at least one trial")
    if not 0 <= successes <= n:
        raise ValueError("successes must lie in [0, n]")
    phat = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (phat + z2 / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / denom
    lo = max(0.0, center - half)
    hi = min(1.0, center + half)
    # exact endpoints at the extremes; guards against rounding putting phat outside
    if successes == 0:
        lo = 0.0
    if successes == n:
        hi = 1.0
    return min(lo, phat), max(hi, phat)


@dataclass(frozen=True)
class EstimateResult:
    point: float
    ci_low: float
    ci_high: float
    n_samples: int
    seed: int
    quantity: str
    successes: int

    @property
    def se(self) -> float:
        """Plug-in binomial standard error (zero when the estimate is 0 or 1)."""
        return math.sqrt(self.point * (1.0 - self.point) / self.n_samples)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateResult":
        return cls(**d)


def estimate_from_counts(successes: int, n: int, seed: int, quantity: str) -> EstimateResult:
    lo, hi = wilson_interval(successes, n)
    return EstimateResult(successes / n, lo, hi, n, seed, quantity, successes)


def two_sample_se(a: EstimateResult, b: EstimateResult) -> float:
    return math.sqrt(a.se**2 + b.se**2)


def max_failures_for(n: int, threshold: float, z: float = Z95) -> int:
    """Largest failure count whose Wilson lower bound still exceeds ``threshold``.

    Returns -1 when even zero failures out of ``n`` do not clear it.
    """
    lo, hi = 0, n
    if wilson_interval(n, n, z)[0] <= threshold:
        return -1
    # lower bound is decreasing in the failure count
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if wilson_interval(n - mid, n, z)[0] > threshold:
            lo = mid
        else:
            hi = mid - 1
    return lo
