import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdperc.dynamics import (
    DynParams,
    config_at,
    crossing_estimate_dynamics,
    domination_check,
    evolve_destruct,
    params_from_times,
    quadrant_monotonicity_check,
    sample_clocks,
    times_from_params,
)
from sdperc.engine import SiteField
from sdperc.errors import ContractViolation
from sdperc.estimators.mc import estimate_crossing
from sdperc.estimators.stats import two_sample_se
from sdperc.lattice import Window
from sdperc.rng import RngKey
from sdperc.sdp import NO_DESTRUCTION, WINDOW_BOUNDARY, DestructionRule, SdpParams

W = Window(64, 64)


def test_clock_invariants_and_determinism():
    c = sample_clocks(Window(16, 16), 3.0, RngKey(1))
    for i in range(c.window.size):
        a = c.arrivals(i)
        assert (np.diff(a) > 0).all() and (a <= 3.0).all() and (a > 0).all()
    d = sample_clocks(Window(16, 16), 3.0, RngKey(1))
    assert np.array_equal(c.times, d.times) and np.array_equal(c.offsets, d.offsets)


def test_poisson_mean():
    t_max = 2.5
    c = sample_clocks(W, t_max, RngKey(2))
    counts = c.counts()
    se = math.sqrt(t_max / counts.size)
    assert abs(counts.mean() - t_max) < 4 * se


def test_short_horizon_mostly_empty():
    c = sample_clocks(W, 0.01, RngKey(3))
    frac_empty = float((c.counts() == 0).mean())
    q = math.exp(-0.01)
    assert abs(frac_empty - q) < 4 * math.sqrt(q * (1 - q) / W.size)


def test_config_at():
    c = sample_clocks(W, 2.0, RngKey(4))
    assert not config_at(c, 0.0).bits.any()
    prev = config_at(c, 0.0)
    for t in (0.3, 0.9, 1.5, 2.0):
        cur = config_at(c, t)
        assert prev <= cur
        prev = cur
    with pytest.raises(ContractViolation):
        config_at(c, 2.5)


def test_config_density():
    t = 0.8
    dens = np.mean([config_at(sample_clocks(W, t, RngKey(5, i)), t).density() for i in range(20)])
    q = 1 - math.exp(-t)
    assert abs(dens - q) < 4 * math.sqrt(q * (1 - q) / (20 * W.size))


def test_evolve_examples():
    c = sample_clocks(Window(20, 20), 2.0, RngKey(6))
    assert evolve_destruct(c, DynParams(0.0, 1.3), WINDOW_BOUNDARY) == config_at(c, 1.3)
    # t = tau on a saturated field: everything touches the boundary
    c2 = sample_clocks(Window(10, 10), 30.0, RngKey(7))
    assert config_at(c2, 30.0).bits.all()
    assert not evolve_destruct(c2, DynParams(30.0, 30.0), WINDOW_BOUNDARY).bits.any()
    with pytest.raises(ContractViolation):
        evolve_destruct(c, DynParams(1.0, 2.5), WINDOW_BOUNDARY)


def test_dyn_params_validation():
    with pytest.raises(ContractViolation):
        DynParams(1.0, 0.5)
    with pytest.raises(ContractViolation):
        DynParams(-0.1, 0.5)


def test_parameter_map_examples():
    s = params_from_times(DynParams(math.log(2), 2 * math.log(2)))
    assert s.p == pytest.approx(0.5, abs=1e-15) and s.delta == pytest.approx(0.5, abs=1e-15)
    assert params_from_times(DynParams(0.0, 0.7)).p == 0.0
    with pytest.raises(ContractViolation):
        times_from_params(SdpParams(1.0, 0.2))
    with pytest.raises(ContractViolation):
        times_from_params(SdpParams(0.2, 1.0))


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_parameter_map_roundtrip(p, d):
    back = params_from_times(times_from_params(SdpParams(p, d)))
    assert abs(back.p - p) + abs(back.delta - d) < 1e-12


@pytest.mark.parametrize("rule", [WINDOW_BOUNDARY, DestructionRule.finite_range(2), NO_DESTRUCTION])
def test_t_monotone_pointwise(rule):
    for i in range(100):
        c = sample_clocks(Window(24, 24), 2.0, RngKey(8, i))
        rep = quadrant_monotonicity_check(c, DynParams(0.8, 1.1), DynParams(0.8, 1.9), rule)
        assert rep.violations == 0 and "increasing in t" in rep.asserted


def test_identical_params_identical_fields():
    c = sample_clocks(Window(16, 16), 2.0, RngKey(9))
    rep = quadrant_monotonicity_check(c, DynParams(0.5, 1.0), DynParams(0.5, 1.0), WINDOW_BOUNDARY)
    assert rep.asserted["identical views"] == 0


def test_tau_comparison_is_reported_only():
    c = sample_clocks(Window(16, 16), 2.0, RngKey(10))
    rep = quadrant_monotonicity_check(c, DynParams(0.5, 1.5), DynParams(1.0, 1.5), WINDOW_BOUNDARY)
    assert "density tau1" in rep.reported and "increasing in t" not in rep.asserted


def test_tau_decreasing_statistically():
    region = Window(32, 16)
    t = 1.6
    ests = [crossing_estimate_dynamics(region, DynParams(tau, t), WINDOW_BOUNDARY, 600, 11) for tau in (0.2, 0.5, 0.8, 1.1, 1.4)]
    for a, b in zip(ests, ests[1:]):
        assert a.point >= b.point - 4 * two_sample_se(a, b)


def test_dynamics_matches_sdp_in_distribution():
    # 16 x 32 keeps the crossing probability near 0.4, where the comparison has power
    region = Window(16, 32)
    d = DynParams(0.9, 1.6)
    dyn = crossing_estimate_dynamics(region, d, WINDOW_BOUNDARY, 2000, 12)
    direct = estimate_crossing(params_from_times(d), "1/2", 32, WINDOW_BOUNDARY, 2000, 13)
    assert abs(dyn.point - direct.point) <= 4 * two_sample_se(dyn, direct)


def test_domination():
    rep = domination_check(SdpParams(0.5, 0.5), SdpParams(0.6, 0.3), Window(24, 24), WINDOW_BOUNDARY, 500, 14)
    assert rep.holds
    with pytest.raises(ContractViolation):
        domination_check(SdpParams(0.6, 0.5), SdpParams(0.5, 0.3), Window(8, 8), WINDOW_BOUNDARY, 10, 1)
