"""Poisson-clock construction of sdp and its couplings.

Each site carries a unit-rate Poisson clock. Sites start vacant and become
occupied at their first ring. At the destruction time ``tau`` the clusters
selected by the destruction rule are emptied; afterwards any ring occupies a
vacant site again. The configuration at time ``t`` has the sdp law with
``p = 1 - exp(-tau)`` and ``delta = 1 - exp(-(t - tau))``.

One :class:`ClockField` realises every ``(tau, t)`` at once, which is the
coupling all monotone comparisons below are made under. A ring exactly at
``tau`` or ``t`` counts as having happened by then; simultaneous rings at
different sites need no ordering because each site's state only depends on
its own clock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .engine import SiteField, occupied_horizontal
from .errors import ContractViolation
from .lattice import Window
from .rng import RngKey, Stream
from .sdp import DestructionRule, SdpParams, destroy_bits


@dataclass(frozen=True)
class DynParams:
    tau: float
    t: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau <= self.t:
            raise ContractViolation(f"need 0 <= tau <= t, got tau={self.tau}, t={self.t}")


@dataclass(frozen=True, eq=False)
class ClockField:
    window: Window
    offsets: np.ndarray  # int64, size window.size + 1
    times: np.ndarray  # float64 arrival times, sorted within each site
    horizon: float

    def arrivals(self, index: int) -> np.ndarray:
        return self.times[self.offsets[index] : self.offsets[index + 1]]

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets).reshape(self.window.shape)

    def _check(self, t: float) -> None:
        if t > self.horizon:
            raise ContractViolation(f"time {t} beyond clock horizon {self.horizon}")
        if t < 0:
            raise ContractViolation("time must be nonnegative")


def sample_clocks(w: Window, t_max: float, key: RngKey) -> ClockField:
    if not t_max > 0:
        raise ContractViolation("clock horizon must be positive")
    base = np.uint64(key.with_stream(Stream.CLOCK).base)
    offsets, times = K.clock_arrivals(base, w.origin.x, w.origin.y, w.width, w.height, float(t_max))
    return ClockField(w, offsets, times, float(t_max))


def config_at(c: ClockField, t: float) -> SiteField:
    """Occupation without destruction: a site is occupied once its clock has rung."""
    c._check(t)
    return SiteField(c.window, K.first_arrival_before(c.offsets, c.times, float(t)).reshape(c.window.shape))


def evolve_destruct(
    c: ClockField, d: DynParams, rule: DestructionRule, region: Window | None = None
) -> SiteField:
    """Configuration at time ``t`` with destruction at ``tau``, on ``region``.

    ``region`` defaults to the clock window minus the margin the rule needs.
    """
    c._check(d.t)
    m = rule.margin
    if region is None:
        if c.window.width <= 2 * m or c.window.height <= 2 * m:
            raise ContractViolation(f"{c.window} too small for {rule}")
        region = c.window.sub(m, m, c.window.width - 2 * m, c.window.height - 2 * m)
    if not c.window.contains_window(region.enlarged(m)):
        raise ContractViolation(f"{rule} on {region} needs margin {m} inside {c.window}")
    at_tau = K.first_arrival_before(c.offsets, c.times, float(d.tau)).reshape(c.window.shape)
    rows, cols = c.window.slices(region)
    survivors = destroy_bits(at_tau, rule, rows, cols)
    later = K.arrival_in(c.offsets, c.times, float(d.tau), float(d.t)).reshape(c.window.shape)
    return SiteField(region, survivors | later[rows, cols])


def params_from_times(d: DynParams) -> SdpParams:
    return SdpParams(-math.expm1(-d.tau), -math.expm1(-(d.t - d.tau)))


def times_from_params(s: SdpParams) -> DynParams:
    if s.p >= 1.0 or s.delta >= 1.0:
        raise ContractViolation("p = 1 or delta = 1 has no finite time preimage")
    tau = -math.log1p(-s.p)
    return DynParams(tau, tau - math.log1p(-s.delta))


@dataclass
class QuadrantReport:
    """Outcome of comparing two ``(tau, t)`` views of one clock realisation.

    ``asserted`` lists the comparisons that are pointwise facts of the coupling
    (violations must be zero); ``reported`` carries comparisons that only hold
    in distribution, given as densities.
    """

    d1: DynParams
    d2: DynParams
    asserted: dict[str, int] = field(default_factory=dict)
    reported: dict[str, float] = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return sum(self.asserted.values())


def quadrant_monotonicity_check(
    c: ClockField, d1: DynParams, d2: DynParams, rule: DestructionRule
) -> QuadrantReport:
    rep = QuadrantReport(d1, d2)
    w1 = evolve_destruct(c, d1, rule)
    w2 = evolve_destruct(c, d2, rule)
    region = w1.window
    for name, d, w in (("d1", d1, w1), ("d2", d2, w2)):
        plain = config_at(c, d.t).restrict(region)
        rep.asserted[f"omega(tau,t) <= omega(t) [{name}]"] = int(np.sum(w.bits & ~plain.bits))
    if d1 == d2:
        rep.asserted["identical views"] = int(np.sum(w1.bits != w2.bits))
    elif d1.tau == d2.tau:
        lo, hi = (w1, w2) if d1.t <= d2.t else (w2, w1)
        rep.asserted["increasing in t"] = int(np.sum(lo.bits & ~hi.bits))
    elif d1.t == d2.t:
        # decreasing in tau only in distribution
        rep.reported["density tau1"] = w1.density()
        rep.reported["density tau2"] = w2.density()
        rep.reported["crossing tau1"] = float(occupied_horizontal(w1.bits))
        rep.reported["crossing tau2"] = float(occupied_horizontal(w2.bits))
    else:
        rep.reported["density d1"] = w1.density()
        rep.reported["density d2"] = w2.density()
    return rep


def crossing_estimate_dynamics(
    region: Window, d: DynParams, rule: DestructionRule, samples: int, seed: int
):
    """Occupied horizontal crossing frequency of ``region`` at time ``t``."""
    from .estimators.stats import estimate_from_counts

    window = region.enlarged(rule.margin)
    hits = 0
    for i in range(samples):
        c = sample_clocks(window, d.t, RngKey(seed, i))
        hits += occupied_horizontal(evolve_destruct(c, d, rule, region).bits)
    return estimate_from_counts(hits, samples, seed, f"dynamics crossing tau={d.tau:g} t={d.t:g}")


@dataclass(frozen=True)
class DominationReport:
    first: SdpParams
    second: SdpParams
    f_first: "object"
    f_second: "object"

    @property
    def holds(self) -> bool:
        from .estimators.stats import two_sample_se

        return self.f_first.point >= self.f_second.point - 4.0 * two_sample_se(self.f_first, self.f_second)


def domination_check(
    first: SdpParams,
    second: SdpParams,
    region: Window,
    rule: DestructionRule,
    samples: int,
    seed: int,
) -> DominationReport:
    """Crossing-probability check of the monotone domination between two parameter pairs.

    Requires ``second.p >= first.p`` and the second pair's effective density
    not above the first's; then the first law dominates the second. Both are
    run through the same clocks (``tau`` larger and ``t`` smaller for the
    second pair).
    """
    if second.p < first.p or second.effective_density > first.effective_density + 1e-15:
        raise ContractViolation("domination needs p2 >= p1 and p2+(1-p2)d2 <= p1+(1-p1)d1")
    d1 = times_from_params(first)
    d2 = times_from_params(second)
    from .estimators.stats import estimate_from_counts

    window = region.enlarged(rule.margin)
    h1 = h2 = 0
    horizon = max(d1.t, d2.t)
    for i in range(samples):
        c = sample_clocks(window, horizon, RngKey(seed, i))
        h1 += occupied_horizontal(evolve_destruct(c, d1, rule, region).bits)
        h2 += occupied_horizontal(evolve_destruct(c, d2, rule, region).bits)
    return DominationReport(
        first,
        second,
        estimate_from_counts(h1, samples, seed, f"crossing p={first.p:g} delta={first.delta:g}"),
        estimate_from_counts(h2, samples, seed, f"crossing p={second.p:g} delta={second.delta:g}"),
    )
