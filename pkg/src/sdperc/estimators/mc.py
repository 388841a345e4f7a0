"""Monte Carlo estimates of one-arm and crossing probabilities of sdp."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .. import _kernels as K
from ..engine import occupied_horizontal, vacant_vertical
from ..errors import InvariantViolation
from ..lattice import ORIGIN, Ball, Window, rectangle_window
from ..rng import RngKey, Stream
from ..sdp import DestructionRule, SdpParams, sample_z
from .runner import replicate_counts
from .stats import EstimateResult, estimate_from_counts


def _one_arm(z: np.ndarray, n: int) -> bool:
    labels = K.label(z, True, False)
    return bool(K.reaches_distance(labels, n, n, n))


def estimate_theta(
    params: SdpParams,
    n: int,
    rule: DestructionRule,
    samples: int,
    seed: int,
    threads: int = 1,
) -> EstimateResult:
    """Frequency of the origin's occupied cluster reaching L1 distance ``n``.

    The region is the square bounding ``B(0, n)``.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    region = Ball(ORIGIN, n).bounding_window()

    def work(i: int):
        return (_one_arm(sample_z(region, params, rule, RngKey(seed, i)), n),)

    (hits,) = replicate_counts(work, 0, samples, threads)
    return estimate_from_counts(int(hits), samples, seed, f"theta_n p={params.p:g} delta={params.delta:g} n={n} {rule}")


def crossing_indicators(z: np.ndarray) -> tuple[bool, bool]:
    """(occupied horizontal 4-crossing, vacant vertical 8-crossing)."""
    return occupied_horizontal(z), vacant_vertical(z)


def check_dual(z: np.ndarray) -> bool:
    a, b = crossing_indicators(z)
    if a == b:
        raise InvariantViolation(
            f"duality broken: occupied horizontal={a}, vacant vertical *-crossing={b}"
        )
    return a


def estimate_crossing(
    params: SdpParams,
    rho: Fraction | int | float | str,
    s: int,
    rule: DestructionRule,
    samples: int,
    seed: int,
    threads: int = 1,
    check_duality: bool = True,
) -> EstimateResult:
    """Frequency of an occupied horizontal crossing of the ``floor(rho*s) x s`` rectangle.

    With ``check_duality`` every draw also evaluates the vacant vertical
    *-crossing and raises :class:`InvariantViolation` unless exactly one of
    the two occurs.
    """
    region = rectangle_window(rho, s)

    def work(i: int):
        z = sample_z(region, params, rule, RngKey(seed, i))
        return (check_dual(z) if check_duality else occupied_horizontal(z),)

    (hits,) = replicate_counts(work, 0, samples, threads)
    return estimate_from_counts(
        int(hits),
        samples,
        seed,
        f"crossing p={params.p:g} delta={params.delta:g} rho={Fraction(rho)} s={s} {rule}",
    )


def ordinary_crossing(density: float, s: int, samples: int, seed: int, threads: int = 1) -> EstimateResult:
    """Square crossing frequency for plain Bernoulli(density) site percolation.

    Replicate keys are shared across densities, so the estimate is
    nondecreasing in ``density`` for fixed ``seed``.
    """
    region = Window(s, s)

    def work(i: int):
        key = RngKey(seed, i, Stream.FIELD)
        z = K.bernoulli_field(np.uint64(key.base), 0, 0, s, s, float(density))
        return (occupied_horizontal(z),)

    (hits,) = replicate_counts(work, 0, samples, threads)
    return estimate_from_counts(int(hits), samples, seed, f"ordinary crossing d={density:g} s={region.width}")


@dataclass
class PcEstimate:
    point: float
    lo: float
    hi: float
    s: int
    samples: int
    seed: int
    history: list[tuple[float, float]] = field(default_factory=list)  # (density, f_hat)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "lo": self.lo,
            "hi": self.hi,
            "width": self.width,
            "s": self.s,
            "samples": self.samples,
            "seed": self.seed,
            "history": [list(h) for h in self.history],
        }


def estimate_pc(
    s_list: list[int],
    samples: int,
    seed: int,
    lo: float = 0.4,
    hi: float = 0.8,
    steps: int = 6,
    threads: int = 1,
) -> PcEstimate:
    """Bisect for the density at which the square crossing frequency passes 1/2.

    Uses the largest size in ``s_list``. The result only serves to place
    sub- and supercritical test points.
    """
    s = max(s_list)
    hist = []
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        f = ordinary_crossing(mid, s, samples, seed, threads).point
        hist.append((mid, f))
        if f < 0.5:
            lo = mid
        else:
            hi = mid
    return PcEstimate(0.5 * (lo + hi), lo, hi, s, samples, seed, hist)


@dataclass
class UniquenessReport:
    params: SdpParams
    n: int
    histogram: dict[int, int]
    samples: int

    @property
    def fraction_multiple(self) -> float:
        return sum(c for k, c in self.histogram.items() if k >= 2) / self.samples


def uniqueness_diagnostic(
    params: SdpParams, n: int, rule: DestructionRule, samples: int, seed: int
) -> UniquenessReport:
    """Distribution of the number of distinct occupied clusters joining left and right of an n x n box."""
    region = Window(n, n)
    hist: dict[int, int] = {}
    for i in range(samples):
        z = sample_z(region, params, rule, RngKey(seed, i))
        c = int(K.count_spanning(K.label(z, True, False), True))
        hist[c] = hist.get(c, 0) + 1
    return UniquenessReport(params, n, dict(sorted(hist.items())), samples)
