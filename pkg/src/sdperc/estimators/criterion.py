"""Finite-size supercriticality criterion and the events its proof is built on.

Notation: ``f(rho, n)`` is the probability of an occupied horizontal crossing
of the ``floor(rho n) x n`` rectangle, ``h(rho, n) = 1 - f(rho, n)`` that of a
vacant vertical *-crossing. The criterion holds at scale ``n`` when
``n >= n_hat`` and ``f(3, n) > 1 - alpha`` for an ``alpha`` with
``49 alpha^2 < alpha / 4``; it then forces ``h(3, 3^k n) < alpha / 2^k`` for
all ``k`` and an infinite occupied path with probability at least
``1 - 2 alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels as K
from ..engine import occupied_horizontal, vacant_vertical
from ..errors import ContractViolation, InvariantViolation
from ..lattice import Window, rectangle_window
from ..rng import RngKey, stable_hash
from ..sdp import DestructionRule, SdpParams, sample_z
from .mc import check_dual
from .runner import replicate_counts
from .stats import EstimateResult, estimate_from_counts, max_failures_for


def _vacant_horizontal(z: np.ndarray) -> bool:
    return bool(K.spans(K.label(z, False, True), True))


def _sub(z: np.ndarray, c0: int, c1: int, r0: int, r1: int) -> np.ndarray:
    return np.ascontiguousarray(z[r0:r1, c0:c1])


def estimate_h(
    params: SdpParams, rho, n: int, rule: DestructionRule, samples: int, seed: int, threads: int = 1
) -> EstimateResult:
    """Vacant vertical *-crossing frequency of the ``floor(rho n) x n`` rectangle."""
    region = rectangle_window(rho, n)

    def work(i: int):
        return (vacant_vertical(sample_z(region, params, rule, RngKey(seed, i))),)

    (hits,) = replicate_counts(work, 0, samples, threads)
    return estimate_from_counts(int(hits), samples, seed, f"h({rho},{n}) p={params.p:g} delta={params.delta:g} {rule}")


@dataclass
class AbcReport:
    n: int
    h_a: EstimateResult  # h(3, 3n)
    h_b: EstimateResult  # h(9, n), bottom strip
    h_c: EstimateResult  # h(9, n), top strip
    violations: int


def abc_event_check(
    params: SdpParams,
    n: int,
    rule: DestructionRule,
    samples: int,
    seed: int,
    threads: int = 1,
    strict: bool = True,
) -> AbcReport:
    """Evaluate A (whole 9n x 3n box), B (bottom n rows) and C (top n rows) on each draw.

    Each event is a vacant vertical *-crossing. A implies B and C on every
    draw; with ``strict`` a counterexample raises.
    """
    region = Window(9 * n, 3 * n)

    def work(i: int):
        z = sample_z(region, params, rule, RngKey(seed, i))
        a = vacant_vertical(z)
        b = vacant_vertical(_sub(z, 0, 9 * n, 0, n))
        c = vacant_vertical(_sub(z, 0, 9 * n, 2 * n, 3 * n))
        return a, b, c, a and not (b and c)

    na, nb, nc, bad = (int(v) for v in replicate_counts(work, 0, samples, threads))
    if strict and bad:
        raise InvariantViolation(f"A without B and C in {bad} of {samples} draws")
    tag = f"p={params.p:g} delta={params.delta:g} {rule}"
    return AbcReport(
        n,
        estimate_from_counts(na, samples, seed, f"A: h(3,{3 * n}) {tag}"),
        estimate_from_counts(nb, samples, seed, f"B: h(9,{n}) {tag}"),
        estimate_from_counts(nc, samples, seed, f"C: h(9,{n}) {tag}"),
        bad,
    )


def seven_boxes(n: int) -> list[tuple[int, int, bool]]:
    """Column ranges ``[c0, c1)`` inside a 9n-wide strip and whether the crossing is vertical.

    If the strip has a vacant vertical *-crossing, one of these boxes has the
    listed vacant *-crossing.
    """
    vertical = [(0, 3 * n), (2 * n, 5 * n), (4 * n, 7 * n), (6 * n, 9 * n)]
    horizontal = [(2 * n, 3 * n), (4 * n, 5 * n), (6 * n, 7 * n)]
    return [(a, b, True) for a, b in vertical] + [(a, b, False) for a, b in horizontal]


@dataclass
class SubadditivityReport:
    n: int
    h9: EstimateResult
    h3: EstimateResult
    h1: EstimateResult
    witness_violations: int
    box_frequencies: list[float]

    @property
    def bound_4_3(self) -> float:
        return 4 * self.h3.point + 3 * self.h1.point

    @property
    def se_4_3(self) -> float:
        return math.sqrt(self.h9.se**2 + 16 * self.h3.se**2 + 9 * self.h1.se**2)

    @property
    def se_7(self) -> float:
        return math.sqrt(self.h9.se**2 + 49 * self.h3.se**2)

    @property
    def holds_4_3(self) -> bool:
        return self.h9.point <= self.bound_4_3 + 4 * self.se_4_3

    @property
    def holds_7(self) -> bool:
        return self.h9.point <= 7 * self.h3.point + 4 * self.se_7


def subadditivity_check(
    params: SdpParams,
    n: int,
    rule: DestructionRule,
    samples: int,
    seed: int,
    threads: int = 1,
    strict: bool = True,
) -> SubadditivityReport:
    """Union-bound witness on each 9n x n draw plus independent h(3, n), h(1, n) estimates."""
    region = Window(9 * n, n)
    boxes = seven_boxes(n)

    def work(i: int):
        z = sample_z(region, params, rule, RngKey(seed, i))
        b = vacant_vertical(z)
        hits = [
            vacant_vertical(_sub(z, c0, c1, 0, n)) if vert else _vacant_horizontal(_sub(z, c0, c1, 0, n))
            for c0, c1, vert in boxes
        ]
        return [b, b and not any(hits), *hits]

    counts = [int(v) for v in replicate_counts(work, 0, samples, threads)]
    nb, bad, box_counts = counts[0], counts[1], counts[2:]
    if strict and bad:
        raise InvariantViolation(f"strip crossed but none of the seven boxes in {bad} draws")
    h3 = estimate_h(params, 3, n, rule, samples, stable_hash(seed, 3), threads)
    h1 = estimate_h(params, 1, n, rule, samples, stable_hash(seed, 1), threads)
    return SubadditivityReport(
        n,
        estimate_from_counts(nb, samples, seed, f"h(9,{n}) p={params.p:g} delta={params.delta:g} {rule}"),
        h3,
        h1,
        bad,
        [c / samples for c in box_counts],
    )


@dataclass
class RecursionReport:
    n: int
    h33n: EstimateResult
    h3n: EstimateResult

    @property
    def residual(self) -> float:
        """``h(3, 3n) - 49 h(3, n)^2``; when positive, a lower bound for the dependency term."""
        return self.h33n.point - 49 * self.h3n.point ** 2

    @property
    def residual_se(self) -> float:
        return math.sqrt(self.h33n.se**2 + (98 * self.h3n.point * self.h3n.se) ** 2)


def recursion_audit(
    params: SdpParams, n: int, rule: DestructionRule, samples: int, seed: int, threads: int = 1
) -> RecursionReport:
    return RecursionReport(
        n,
        estimate_h(params, 3, 3 * n, rule, samples, stable_hash(seed, 33), threads),
        estimate_h(params, 3, n, rule, samples, stable_hash(seed, 3), threads),
    )


@dataclass
class PhiEstimate:
    p: float
    phi: float
    lower_bound: bool  # True when no blocked cluster was seen and phi is only bounded below
    q: list[EstimateResult]
    k_list: list[int]
    residuals: list[float] = field(default_factory=list)
    slope: float | None = None  # free-intercept fit; ignores the k-independent prefactor

    @property
    def fit_se(self) -> float:
        """Standard error of the slope from the fit residuals (inf with a single point)."""
        pts = [k for k, q in zip(self.k_list, self.q) if q.successes > 0]
        if len(pts) < 2:
            return math.inf
        rss = sum(r * r for r in self.residuals)
        return math.sqrt(rss / (len(pts) - 1) / sum(k * k for k in pts))


def estimate_phi(
    p: float, k_list: list[int], samples: int, seed: int, threads: int = 1
) -> PhiEstimate:
    """Decay rate of blocked-cluster probabilities under Bernoulli(p).

    ``q_k`` is the frequency with which the origin's occupied cluster reaches
    distance ``k`` but avoids the boundary of a common square window of
    half-width ``2 max(k_list)``. Sharing window and draws across ``k`` makes
    the estimates nonincreasing in ``k``. The rate is the least-squares slope
    of ``-log q_k`` against ``k`` through the origin.
    """
    if not 0 < p < 1:
        raise ContractViolation("p must lie in (0, 1)")
    ks = sorted(set(int(k) for k in k_list))
    if ks[0] < 1:
        raise ContractViolation("cutoffs must be positive")
    half = 2 * ks[-1]
    side = 2 * half + 1

    def work(i: int):
        key = RngKey(seed, i)
        x = K.bernoulli_field(np.uint64(key.base), -half, -half, side, side, float(p))
        labels = K.label(x, True, False)
        if labels[half, half] < 0 or K.touches_boundary(labels, half, half):
            return [0] * len(ks)
        umin, umax, vmin, vmax = K.cluster_extent(labels)
        lab = labels[half, half]
        u0 = 2 * half  # col + row of the origin; col - row is 0
        reach = max(umax[lab] - u0, u0 - umin[lab], vmax[lab], -vmin[lab])
        return [reach >= k for k in ks]

    counts = replicate_counts(work, 0, samples, threads)
    q = [
        estimate_from_counts(int(c), samples, seed, f"blocked cluster p={p:g} k={k}")
        for c, k in zip(counts, ks)
    ]
    pts = [(k, e.point) for k, e in zip(ks, q) if e.successes > 0]
    if not pts:
        # q_k <= upper_k, and q_k ~ exp(-phi k) gives phi >= -log(upper_k) / k
        bound = max(-math.log(e.ci_high) / k for k, e in zip(ks, q))
        return PhiEstimate(p, bound, True, q, ks)
    phi = -sum(k * math.log(v) for k, v in pts) / sum(k * k for k, _ in pts)
    resid = [math.log(v) + phi * k for k, v in pts]
    slope = None
    if len(pts) >= 2:
        kk = np.array([k for k, _ in pts], dtype=float)
        ll = np.log([v for _, v in pts])
        slope = float(-np.polyfit(kk, ll, 1)[0])
    return PhiEstimate(p, phi, False, q, ks, resid, slope)


def n_hat_from_phi(alpha: float, phi: float) -> int:
    """Smallest positive integer N with ``exp(-N phi) < alpha / 4``."""
    if phi <= 0:
        raise ContractViolation("decay rate must be positive")
    n = max(1, math.floor(math.log(4 / alpha) / phi))
    while math.exp(-n * phi) >= alpha / 4:
        n += 1
    while n > 1 and math.exp(-(n - 1) * phi) < alpha / 4:
        n -= 1
    return n


@dataclass(frozen=True)
class CriterionConfig:
    alpha: float
    n: int
    n_hat: int = 1
    phi_estimate: float | None = None

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and 49 * self.alpha**2 < self.alpha / 4):
            raise ContractViolation(f"alpha={self.alpha} violates 49 alpha^2 < alpha/4 (alpha < 1/196)")
        if self.n < 1 or self.n_hat < 1:
            raise ContractViolation("scales must be positive")

    @classmethod
    def from_phi(cls, alpha: float, n: int, phi: float) -> "CriterionConfig":
        return cls(alpha, n, n_hat_from_phi(alpha, phi), phi)

    def at(self, n: int) -> "CriterionConfig":
        return CriterionConfig(self.alpha, n, self.n_hat, self.phi_estimate)


@dataclass
class CriterionVerdict:
    holds: bool
    f3n: EstimateResult
    margin: float
    config: CriterionConfig
    stopped_early: bool = False
    scale_chain: list[EstimateResult] | None = None

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "f3n": self.f3n.to_dict(),
            "margin": self.margin,
            "alpha": self.config.alpha,
            "n": self.config.n,
            "n_hat": self.config.n_hat,
            "phi_estimate": self.config.phi_estimate,
            "stopped_early": self.stopped_early,
            "scale_chain": None if self.scale_chain is None else [e.to_dict() for e in self.scale_chain],
        }


def finite_size_criterion(
    params: SdpParams,
    cfg: CriterionConfig,
    rule: DestructionRule,
    samples: int,
    seed: int,
    threads: int = 1,
    batch: int = 2000,
    chain_samples: int = 0,
    check_duality: bool = True,
) -> CriterionVerdict:
    """Check ``f(3, n) > 1 - alpha`` at ``n = cfg.n`` through the Wilson lower bound.

    Draws are processed in fixed batches; once the failures exceed what the
    full sample budget could tolerate the run stops, which cannot change the
    verdict. ``chain_samples > 0`` appends estimates of ``h(3, 3^k n)`` for
    ``k = 0, 1, 2`` (reported only).
    """
    n = cfg.n
    if n < cfg.n_hat:
        raise ContractViolation(f"scale {n} below the admissible scale {cfg.n_hat}")
    region = rectangle_window(3, n)
    max_fail = max_failures_for(samples, 1 - cfg.alpha)

    def work(i: int):
        z = sample_z(region, params, rule, RngKey(seed, i))
        return (check_dual(z) if check_duality else occupied_horizontal(z),)

    hits = 0
    done = 0
    stopped = False
    while done < samples:
        stop = min(samples, done + batch)
        hits += int(replicate_counts(work, done, stop, threads)[0])
        done = stop
        if done - hits > max_fail:
            stopped = done < samples
            break
    f3n = estimate_from_counts(
        hits, done, seed, f"f(3,{n}) p={params.p:g} delta={params.delta:g} {rule}"
    )
    holds = (not stopped) and done - hits <= max_fail and f3n.ci_low > 1 - cfg.alpha
    chain = None
    if chain_samples:
        chain = [
            estimate_h(params, 3, n * 3**k, rule, chain_samples, stable_hash(seed, 100 + k), threads)
            for k in range(3)
        ]
    return CriterionVerdict(holds, f3n, f3n.ci_low - (1 - cfg.alpha), cfg, stopped, chain)


@dataclass
class ScaleSearch:
    verdicts: list[CriterionVerdict]

    @property
    def qualifying(self) -> CriterionVerdict | None:
        return next((v for v in self.verdicts if v.holds), None)


def scale_search(
    params: SdpParams,
    base: CriterionConfig,
    scales: list[int],
    rule: DestructionRule,
    samples: int,
    seed: int,
    threads: int = 1,
    stop_at_first: bool = True,
) -> ScaleSearch:
    """Evaluate the criterion at each admissible scale (``n >= n_hat``) in order."""
    out = []
    for n in scales:
        if n < base.n_hat:
            continue
        v = finite_size_criterion(params, base.at(n), rule, samples, stable_hash(seed, n), threads)
        out.append(v)
        if v.holds and stop_at_first:
            break
    return ScaleSearch(out)


def pasting_bound(alpha: float) -> float:
    """Lower bound ``1 - 2 alpha`` on the infinite-path probability once the criterion holds."""
    return 1 - 2 * alpha

