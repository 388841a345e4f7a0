"""Self-destructive percolation: destruction rules and sdp draws.

A draw has three layers on a region of interest:

* ``x``: Bernoulli(p) initial configuration (on the region plus any margin
  the destruction rule needs),
* ``x_star``: ``x`` with the "infinite" occupied sites removed,
* ``z = x_star | y`` with ``y`` an independent Bernoulli(delta) enhancement.

"Infinite" has no canonical meaning in a finite window, so the rule is a
parameter. ``FINITE_RANGE(k)`` removes a site whose cluster reaches L1
distance ``k``; it is a well-defined model on the infinite lattice whose
values at sites more than ``2k`` apart are exactly independent.
``WINDOW_BOUNDARY`` removes every cluster that touches the edge of the sampled
window, the usual finite-volume stand-in for the infinite cluster.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels as K
from .engine import (
    SiteField,
    occupied_horizontal,
    sample_field,
)
from .errors import ContractViolation
from .lattice import Window
from .rng import RngKey, Stream


@dataclass(frozen=True)
class SdpParams:
    p: float
    delta: float

    def __post_init__(self) -> None:
        for name in ("p", "delta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ContractViolation(f"{name}={v} outside [0, 1]")

    @property
    def effective_density(self) -> float:
        """Density of the product measure that an sdp draw reduces to when nothing is destroyed."""
        return self.p + (1.0 - self.p) * self.delta


class RuleKind(Enum):
    FINITE_RANGE = "finite-range"
    WINDOW_BOUNDARY = "window-boundary"
    NONE = "none"


@dataclass(frozen=True)
class DestructionRule:
    kind: RuleKind
    k: int = 0

    def __post_init__(self) -> None:
        if self.kind is RuleKind.FINITE_RANGE and self.k < 1:
            raise ContractViolation("FINITE_RANGE needs a positive cutoff k")
        if self.kind is not RuleKind.FINITE_RANGE and self.k != 0:
            raise ContractViolation(f"{self.kind.value} takes no cutoff")

    @classmethod
    def finite_range(cls, k: int) -> "DestructionRule":
        return cls(RuleKind.FINITE_RANGE, k)

    @classmethod
    def window_boundary(cls) -> "DestructionRule":
        return cls(RuleKind.WINDOW_BOUNDARY)

    @classmethod
    def none(cls) -> "DestructionRule":
        return cls(RuleKind.NONE)

    @classmethod
    def parse(cls, name: str, k: int | None = None) -> "DestructionRule":
        kind = RuleKind(name)
        if kind is RuleKind.FINITE_RANGE:
            return cls(kind, 1 if k is None else k)
        return cls(kind)

    @property
    def margin(self) -> int:
        return self.k if self.kind is RuleKind.FINITE_RANGE else 0

    def __str__(self) -> str:
        if self.kind is RuleKind.FINITE_RANGE:
            return f"finite-range(k={self.k})"
        return self.kind.value


WINDOW_BOUNDARY = DestructionRule.window_boundary()
NO_DESTRUCTION = DestructionRule.none()


@dataclass(frozen=True, eq=False)
class SdpSample:
    x: SiteField  # on the sampled window (region plus margin)
    y: SiteField  # on the region
    x_star: SiteField  # on the region
    z: SiteField  # on the region
    rule: DestructionRule
    params: SdpParams

    @property
    def region(self) -> Window:
        return self.z.window


def sampling_window(region: Window, rule: DestructionRule) -> Window:
    return region.enlarged(rule.margin)


def destroy_bits(x_bits: np.ndarray, rule: DestructionRule, rows: slice, cols: slice) -> np.ndarray:
    """Array version of :func:`destroy`; returns survivors on ``x_bits[rows, cols]``."""
    if rule.kind is RuleKind.NONE:
        return x_bits[rows, cols].copy()
    labels = K.label(x_bits, True, False)
    if rule.kind is RuleKind.WINDOW_BOUNDARY:
        return K.destroy_touching_boundary(labels)[rows, cols]
    return K.destroy_finite_range(
        labels, rule.k, rows.start, cols.start, rows.stop - rows.start, cols.stop - cols.start
    )


def destroy(x: SiteField, rule: DestructionRule, region: Window | None = None) -> SiteField:
    """Remove the occupied sites the rule deems infinite; result lives on ``region``.

    ``WINDOW_BOUNDARY`` judges clusters in the whole of ``x.window``.
    ``FINITE_RANGE(k)`` needs ``x.window`` to contain ``region`` enlarged by
    ``k`` and is exact on ``region``.
    """
    region = region or (x.window if rule.margin == 0 else _shrink(x.window, rule.margin))
    if not x.window.contains_window(region.enlarged(rule.margin)):
        raise ContractViolation(
            f"{rule} on {region} needs a margin of {rule.margin} inside {x.window}"
        )
    rows, cols = x.window.slices(region)
    return SiteField(region, destroy_bits(x.bits, rule, rows, cols))


def _shrink(w: Window, m: int) -> Window:
    if w.width <= 2 * m or w.height <= 2 * m:
        raise ContractViolation(f"{w} has no interior at margin {m}")
    return Window(w.width - 2 * m, w.height - 2 * m, type(w.origin)(w.origin.x + m, w.origin.y + m))


def sample_sdp(region: Window, params: SdpParams, rule: DestructionRule, key: RngKey) -> SdpSample:
    """One sdp draw on ``region``; ``x`` and ``y`` use distinct substreams of ``key``."""
    window = sampling_window(region, rule)
    x = sample_field(window, params.p, key.with_stream(Stream.X))
    y = sample_field(region, params.delta, key.with_stream(Stream.Y))
    x_star = destroy(x, rule, region)
    z = SiteField(region, x_star.bits | y.bits)
    return SdpSample(x, y, x_star, z, rule, params)


def sample_z(region: Window, params: SdpParams, rule: DestructionRule, key: RngKey) -> np.ndarray:
    """Final configuration only, as a bool array; the hot path of the estimators."""
    window = sampling_window(region, rule)
    o = window.origin
    x = K.bernoulli_field(np.uint64(key.with_stream(Stream.X).base), o.x, o.y, window.width, window.height, params.p)
    y = K.bernoulli_field(
        np.uint64(key.with_stream(Stream.Y).base),
        region.origin.x,
        region.origin.y,
        region.width,
        region.height,
        params.delta,
    )
    m = rule.margin
    x_star = destroy_bits(x, rule, slice(m, m + region.height), slice(m, m + region.width))
    return x_star | y


def occupancy_identity(params: SdpParams, pi_k: float) -> float:
    """Probability a site is occupied in the final configuration.

    ``pi_k`` is the probability that the site belongs to a destroyed cluster
    (at finite range: the site connects to distance ``k`` in ``x``).
    """
    if not 0.0 <= pi_k <= params.p + 1e-15:
        raise ContractViolation(f"connection probability {pi_k} exceeds density {params.p}")
    return params.delta + (1.0 - params.delta) * (params.p - pi_k)


@dataclass(frozen=True)
class ReductionReport:
    params: SdpParams
    sdp: "object"  # EstimateResult
    direct: "object"
    gap: float
    se: float
    z_score: float
    boundary_touch_rate: float  # fraction of draws where destruction removed anything
    bit_identical: bool

    @property
    def within(self) -> bool:
        return abs(self.gap) <= 4.0 * self.se


def subcritical_reduction_check(
    region: Window,
    params: SdpParams,
    samples: int,
    seed: int,
    p_threshold: float | None = None,
) -> ReductionReport:
    """Compare sdp crossings with direct Bernoulli(p + (1-p) delta) crossings.

    Both sides draw from the enhancement substream of the same replicate key,
    so at ``p = 0`` they coincide bit for bit. For ``p > 0`` destruction of
    boundary-touching clusters opens a finite-volume gap; the report measures
    it and how often destruction fired at all.
    """
    from .estimators.stats import estimate_from_counts, two_sample_se

    if p_threshold is not None and params.p > p_threshold:
        raise ContractViolation(f"p={params.p} above the subcritical threshold {p_threshold}")
    hits_sdp = 0
    hits_direct = 0
    fired = 0
    identical = True
    q = params.effective_density
    for i in range(samples):
        key = RngKey(seed, i)
        s = sample_sdp(region, params, WINDOW_BOUNDARY, key)
        direct = sample_field(region, q, key.with_stream(Stream.Y))
        a = occupied_horizontal(s.z.bits)
        b = occupied_horizontal(direct.bits)
        hits_sdp += a
        hits_direct += b
        fired += bool(np.any(s.x.bits & ~s.x_star.bits))
        identical &= bool(np.array_equal(s.z.bits, direct.bits))
    label = f"crossing {region.width}x{region.height}"
    e_sdp = estimate_from_counts(hits_sdp, samples, seed, f"sdp {label}")
    e_direct = estimate_from_counts(hits_direct, samples, seed, f"bernoulli({q:.6g}) {label}")
    se = two_sample_se(e_sdp, e_direct)
    gap = e_sdp.point - e_direct.point
    return ReductionReport(
        params,
        e_sdp,
        e_direct,
        gap,
        se,
        gap / se if se > 0 else 0.0,
        fired / samples,
        identical,
    )
