import math

import numpy as np
import pytest

from sdperc.errors import BudgetExceeded, ContractViolation
from sdperc.estimators.exact import (
    connection_probability,
    enumerate_exact,
    pattern_to_array,
    survivor_law,
    z_law,
)
from sdperc.estimators.fkg import CATALOG_3X3
from sdperc.lattice import Window
from sdperc.rng import RngKey
from sdperc.sdp import NO_DESTRUCTION, WINDOW_BOUNDARY, DestructionRule, SdpParams, occupancy_identity, sample_z

FR1 = DestructionRule.finite_range(1)
W3 = Window(3, 3)


def test_law_is_a_distribution():
    for rule in (FR1, WINDOW_BOUNDARY):
        law = z_law(W3, SdpParams(0.45, 0.3), rule)
        assert law.shape == (512,) and (law >= 0).all()
        assert abs(math.fsum(law.tolist()) - 1.0) < 1e-12
    assert enumerate_exact(Window(2, 2), SdpParams(0.6, 0.2), FR1, lambda z: True) == pytest.approx(1.0, abs=1e-12)


def test_p0_reduces_to_bernoulli_delta():
    d = 0.35
    law = z_law(W3, SdpParams(0.0, d), FR1)
    for pat in (0, 5, 511, 300):
        k = bin(pat).count("1")
        assert law[pat] == pytest.approx(d**k * (1 - d) ** (9 - k), abs=1e-15)


def test_connection_probability_radius_one():
    for p in (0.0, 0.2, 0.6, 1.0):
        assert connection_probability(p, 1) == pytest.approx(p * (1 - (1 - p) ** 4), abs=1e-15)


@pytest.mark.parametrize("p,d", [(0.6, 0.2), (0.3, 0.7)])
def test_centre_occupancy_identity(p, d):
    params = SdpParams(p, d)
    exact = enumerate_exact(W3, params, FR1, lambda z: bool(z[1, 1]))
    assert abs(exact - occupancy_identity(params, connection_probability(p, 1))) < 1e-12


def test_survivor_law_against_brute_force_small():
    # 1x2 region with k=1: brute-force over the 8 relevant x sites by hand-rolled BFS
    region = Window(2, 1)
    p = 0.55
    law = survivor_law(region, p, FR1)
    xs = [(x, y) for y in (-1, 0, 1) for x in (-1, 0, 1, 2) if abs(y) + min(abs(x), abs(x - 1)) <= 1]
    ref = np.zeros(4)
    for conf in range(1 << len(xs)):
        occ = {s for j, s in enumerate(xs) if conf >> j & 1}
        w = p ** len(occ) * (1 - p) ** (len(xs) - len(occ))
        pat = 0
        for j, site in enumerate([(0, 0), (1, 0)]):
            if site not in occ:
                continue
            # cluster of site restricted to its ball of radius 1 suffices for k=1
            ball = [(site[0] + dx, site[1] + dy) for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))]
            if not any(b in occ for b in ball):
                pat |= 1 << j
        ref[pat] += w
    assert np.allclose(law, ref, atol=1e-15)


def test_budget_refusals():
    with pytest.raises(BudgetExceeded):
        z_law(Window(5, 5), SdpParams(0.5, 0.5), FR1)
    with pytest.raises(BudgetExceeded):
        z_law(Window(4, 4), SdpParams(0.5, 0.5), DestructionRule.finite_range(2))
    with pytest.raises(ContractViolation):
        z_law(W3, SdpParams(0.5, 0.5), NO_DESTRUCTION)


def test_pattern_layout_is_row_major():
    z = pattern_to_array(0b000000110, W3)
    assert z[0, 1] and z[0, 2] and z.sum() == 2


def test_monte_carlo_matches_oracle_on_catalogue():
    params = SdpParams(0.6, 0.2)
    events = [e for pair in CATALOG_3X3 for e in pair]
    law = z_law(W3, params, FR1)
    n = 20000
    zs = [sample_z(W3, params, FR1, RngKey(2024, i)) for i in range(n)]
    for ev in events:
        exact = math.fsum(law[a] for a in range(512) if ev(pattern_to_array(a, W3)))
        hits = sum(bool(ev(z)) for z in zs)
        se = math.sqrt(max(exact * (1 - exact), 1e-12) / n)
        assert abs(hits / n - exact) <= 4 * se, ev
