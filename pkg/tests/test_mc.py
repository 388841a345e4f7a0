from fractions import Fraction

import numpy as np
import pytest

from sdperc import _kernels as K
from sdperc.errors import DegenerateRectangle, InvariantViolation
from sdperc.estimators.mc import (
    check_dual,
    estimate_crossing,
    estimate_pc,
    estimate_theta,
    ordinary_crossing,
    uniqueness_diagnostic,
)
from sdperc.estimators.runner import replicate_counts
from sdperc.estimators.stats import two_sample_se
from sdperc.lattice import ORIGIN, Ball
from sdperc.rng import RngKey, Stream
from sdperc.sdp import WINDOW_BOUNDARY, DestructionRule, SdpParams


def test_theta_trivial():
    assert estimate_theta(SdpParams(0.4, 1.0), 6, WINDOW_BOUNDARY, 50, 1).point == 1.0
    assert estimate_theta(SdpParams(0.0, 0.0), 6, WINDOW_BOUNDARY, 50, 1).point == 0.0


def test_theta_p0_matches_ordinary_one_arm():
    n = 32
    est = estimate_theta(SdpParams(0.0, 0.7), n, WINDOW_BOUNDARY, 1500, 2)
    region = Ball(ORIGIN, n).bounding_window()
    hits = 0
    for i in range(1500):
        key = RngKey(999, i, Stream.FIELD)
        x = K.bernoulli_field(np.uint64(key.base), region.origin.x, region.origin.y, region.width, region.height, 0.7)
        hits += bool(K.reaches_distance(K.label(x, True, False), n, n, n))
    from sdperc.estimators.stats import estimate_from_counts

    ref = estimate_from_counts(hits, 1500, 999, "one-arm")
    assert abs(est.point - ref.point) <= 4 * two_sample_se(est, ref)


def test_crossing_trivial_and_degenerate():
    assert estimate_crossing(SdpParams(0.0, 1.0), 3, 16, WINDOW_BOUNDARY, 10, 1).point == 1.0
    assert estimate_crossing(SdpParams(0.0, 0.0), 3, 16, WINDOW_BOUNDARY, 10, 1).point == 0.0
    with pytest.raises(DegenerateRectangle):
        estimate_crossing(SdpParams(0.5, 0.5), Fraction(1, 40), 16, WINDOW_BOUNDARY, 10, 1)


def test_crossing_decreasing_in_rho():
    params = SdpParams(0.3, 0.45)
    ests = [estimate_crossing(params, rho, 24, WINDOW_BOUNDARY, 2000, 5) for rho in (1, 2, 3)]
    for a, b in zip(ests, ests[1:]):
        assert a.point >= b.point - 4 * two_sample_se(a, b)


def test_check_dual_raises_on_broken_field():
    z = np.zeros((3, 3), bool)
    assert check_dual(z) is False
    with pytest.raises(InvariantViolation):
        # a horizontal crossing with an incorrectly labelled dual cannot be built from a real
        # field, so patch the indicator pair directly
        from sdperc.estimators import mc

        orig = mc.crossing_indicators
        mc.crossing_indicators = lambda z: (True, True)
        try:
            check_dual(z)
        finally:
            mc.crossing_indicators = orig


def test_thread_count_does_not_change_results():
    params = SdpParams(0.6, 0.3)
    a = estimate_crossing(params, 2, 16, DestructionRule.finite_range(2), 300, 7, threads=1)
    b = estimate_crossing(params, 2, 16, DestructionRule.finite_range(2), 300, 7, threads=4)
    assert a == b
    assert list(replicate_counts(lambda i: (i % 3 == 0, 1), 0, 100, 3)) == [34, 100]


def test_ordinary_crossing_monotone_in_density():
    vals = [ordinary_crossing(d, 32, 400, 3).point for d in (0.45, 0.55, 0.6, 0.65, 0.75)]
    assert vals == sorted(vals)


def test_pc_bracket_and_drift():
    lo = ordinary_crossing(0.4, 64, 1000, 1)
    hi = ordinary_crossing(0.8, 64, 1000, 1)
    assert lo.ci_high < 0.5 < hi.ci_low
    a = estimate_pc([64], 1500, 4, steps=6)
    b = estimate_pc([32, 128], 1500, 4, steps=6)
    assert b.s == 128 and a.width <= 0.02 and b.width <= 0.02
    assert abs(a.point - b.point) <= 0.02
    assert len(a.history) == 6


def test_critical_square_crossing_near_half():
    pc = estimate_pc([64], 2000, 8, steps=8).point
    for s in (32, 64):
        e = estimate_crossing(SdpParams(0.0, pc), 1, s, WINDOW_BOUNDARY, 1000, 9)
        assert abs(e.point - 0.5) < 0.1


def test_uniqueness_examples():
    rep = uniqueness_diagnostic(SdpParams(0.3, 1.0), 16, WINDOW_BOUNDARY, 20, 1)
    assert rep.histogram == {1: 20}
    rep = uniqueness_diagnostic(SdpParams(0.0, 0.0), 16, WINDOW_BOUNDARY, 20, 1)
    assert rep.histogram == {0: 20} and rep.fraction_multiple == 0.0
    rep = uniqueness_diagnostic(SdpParams(0.65, 0.75), 64, WINDOW_BOUNDARY, 100, 1)
    assert sum(rep.histogram.values()) == 100 and 0.0 <= rep.fraction_multiple <= 1.0
