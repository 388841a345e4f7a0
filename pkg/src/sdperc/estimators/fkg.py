"""Positive correlation of increasing events.

Events are evaluated on the final configuration as a bool array laid out on
the region. Only increasing events are offered (occupied sites, occupied
crossings, occupied connections), so every pair in a catalogue is a valid
input for the correlation inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import _kernels as K
from ..engine import Direction
from ..lattice import Window
from ..rng import RngKey
from ..sdp import DestructionRule, SdpParams, sample_z
from .exact import pattern_to_array, z_law


@dataclass(frozen=True)
class Occupied:
    """All listed cells occupied; cells are ``(col, row)`` relative to the region."""

    cells: tuple[tuple[int, int], ...]

    def __call__(self, z: np.ndarray) -> bool:
        return all(z[r, c] for c, r in self.cells)


@dataclass(frozen=True)
class Crossing:
    """Occupied crossing of a sub-rectangle ``(col0, row0, width, height)``."""

    box: tuple[int, int, int, int]
    direction: Direction = Direction.HORIZONTAL

    def __call__(self, z: np.ndarray) -> bool:
        c0, r0, w, h = self.box
        sub = np.ascontiguousarray(z[r0 : r0 + h, c0 : c0 + w])
        return bool(K.spans(K.label(sub, True, False), self.direction is Direction.HORIZONTAL))


@dataclass(frozen=True)
class Connected:
    """Occupied 4-path between two cells inside the region."""

    a: tuple[int, int]
    b: tuple[int, int]

    def __call__(self, z: np.ndarray) -> bool:
        lab = K.label(np.ascontiguousarray(z), True, False)
        la = lab[self.a[1], self.a[0]]
        return bool(la >= 0 and la == lab[self.b[1], self.b[0]])


# increasing event pairs on a 3x3 region
CATALOG_3X3 = (
    (Occupied(((0, 0),)), Occupied(((1, 0),))),
    (Occupied(((1, 1),)), Occupied(((1, 2),))),
    (Occupied(((0, 0),)), Occupied(((2, 2),))),
    (Crossing((0, 0, 3, 1)), Crossing((0, 2, 3, 1))),
    (Crossing((0, 0, 3, 3)), Crossing((0, 0, 3, 3), Direction.VERTICAL)),
    (Connected((0, 0), (2, 0)), Connected((0, 2), (2, 2))),
    (Connected((0, 0), (2, 2)), Occupied(((1, 1),))),
    (Crossing((0, 0, 3, 3)), Occupied(((1, 1), (1, 0)))),
    (Crossing((0, 0, 2, 3), Direction.VERTICAL), Crossing((1, 0, 2, 3), Direction.VERTICAL)),
    (Occupied(((0, 1), (2, 1))), Connected((1, 0), (1, 2))),
)


@dataclass(frozen=True)
class FkgResult:
    p_ab: float
    p_a: float
    p_b: float
    se: float = 0.0  # standard error of p_ab - p_a p_b, zero for exact values
    samples: int = 0

    @property
    def covariance(self) -> float:
        return self.p_ab - self.p_a * self.p_b

    def holds(self, n_se: float = 4.0, atol: float = 0.0) -> bool:
        return self.covariance >= -n_se * self.se - atol


@lru_cache(maxsize=256)
def indicator(region: Window, event) -> np.ndarray:
    """Event value on every bit pattern of the region."""
    return np.array(
        [bool(event(pattern_to_array(pat, region))) for pat in range(1 << region.size)],
        dtype=np.bool_,
    )


def fkg_exact(region: Window, params: SdpParams, rule: DestructionRule, a, b) -> FkgResult:
    law = z_law(region, params, rule)
    ia = indicator(region, a)
    ib = indicator(region, b)
    return FkgResult(
        math.fsum(law[ia & ib].tolist()),
        math.fsum(law[ia].tolist()),
        math.fsum(law[ib].tolist()),
    )


def _cov_se(n11: int, n10: int, n01: int, n: int) -> float:
    """Delta-method standard error of the empirical covariance of two indicators."""
    pa = (n11 + n10) / n
    pb = (n11 + n01) / n
    # influence of one draw: ab - pb*a - pa*b
    cells = ((1, 1, n11), (1, 0, n10), (0, 1, n01), (0, 0, n - n11 - n10 - n01))
    vals = [(a * b - pb * a - pa * b, c) for a, b, c in cells]
    mean = sum(v * c for v, c in vals) / n
    var = sum(c * (v - mean) ** 2 for v, c in vals) / n
    return math.sqrt(var / n)


def fkg_check(
    params: SdpParams,
    rule: DestructionRule,
    region: Window,
    a,
    b,
    samples: int,
    seed: int,
) -> FkgResult:
    n11 = n10 = n01 = 0
    for i in range(samples):
        z = sample_z(region, params, rule, RngKey(seed, i))
        ia, ib = a(z), b(z)
        n11 += ia and ib
        n10 += ia and not ib
        n01 += ib and not ia
    return FkgResult(
        n11 / samples,
        (n11 + n10) / samples,
        (n11 + n01) / samples,
        _cov_se(n11, n10, n01, samples),
        samples,
    )
