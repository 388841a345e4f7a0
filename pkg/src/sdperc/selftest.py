"""Quick invariant suite behind ``sdperc selftest``.

Each check returns a :class:`Check`; the suite passes iff all of them do.
Sample counts scale with the ``samples`` argument so the suite stays fast.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as K
from .dynamics import DynParams, params_from_times, quadrant_monotonicity_check, sample_clocks, times_from_params
from .estimators.exact import connection_probability, enumerate_exact
from .estimators.fkg import CATALOG_3X3, fkg_check, fkg_exact
from .errors import InvariantViolation
from .estimators.mc import check_dual
from .lattice import Window
from .rng import RngKey, stable_hash
from .sdp import WINDOW_BOUNDARY, DestructionRule, SdpParams, occupancy_identity, sample_z


@dataclass
class Check:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.name}: {self.detail}"


def bfs_labels(bits: np.ndarray, state: bool, eight: bool) -> np.ndarray:
    """Reference labelling by breadth-first search; label = smallest flat index in the cluster."""
    h, w = bits.shape
    steps = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    if eight:
        steps += [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    out = np.full((h, w), -1, dtype=np.int64)
    for r in range(h):
        for c in range(w):
            if bits[r, c] != state or out[r, c] >= 0:
                continue
            lab = r * w + c
            out[r, c] = lab
            todo = deque([(r, c)])
            while todo:
                i, j = todo.popleft()
                for di, dj in steps:
                    a, b = i + di, j + dj
                    if 0 <= a < h and 0 <= b < w and bits[a, b] == state and out[a, b] < 0:
                        out[a, b] = lab
                        todo.append((a, b))
    return out


def check_labelling(samples: int, seed: int) -> Check:
    rng = np.random.default_rng(seed)
    bad = 0
    n = max(50, samples // 10)
    for _ in range(n):
        h, w = rng.integers(1, 12, size=2)
        bits = rng.random((h, w)) < rng.random()
        for state, eight in ((True, False), (False, True)):
            bad += not np.array_equal(K.label(bits, state, eight), bfs_labels(bits, state, eight))
    return Check("labelling vs BFS", bad == 0, f"{bad} mismatches over {n} random fields")


def check_duality(samples: int, seed: int) -> Check:
    region = Window(24, 8)
    n = max(10, samples // 10)
    draws = 0
    for p in (0.3, 0.6, 0.9):
        for d in (0.3, 0.6, 0.9):
            for i in range(n):
                check_dual(sample_z(region, SdpParams(p, d), WINDOW_BOUNDARY, RngKey(seed, i)))
                draws += 1
    return Check("crossing duality", True, f"{draws} draws, no violation")


def check_oracles(samples: int, seed: int) -> Check:
    region = Window(3, 3)
    rule = DestructionRule.finite_range(1)
    centre = lambda z: bool(z[1, 1])  # noqa: E731
    worst = 0.0
    zmax = 0.0
    for p, d in ((0.6, 0.2), (0.3, 0.7)):
        params = SdpParams(p, d)
        exact = enumerate_exact(region, params, rule, centre)
        ident = occupancy_identity(params, connection_probability(p, 1))
        worst = max(worst, abs(exact - ident))
        hits = sum(
            bool(sample_z(region, params, rule, RngKey(stable_hash(seed, 11), i))[1, 1]) for i in range(samples)
        )
        se = math.sqrt(exact * (1 - exact) / samples)
        zmax = max(zmax, abs(hits / samples - exact) / se)
    ok = worst < 1e-12 and zmax < 4.0
    return Check("exact oracle", ok, f"|exact-identity|={worst:.2e}, max |MC z|={zmax:.2f}")


def check_coupling(samples: int, seed: int) -> Check:
    w = Window(20, 20)
    n = max(10, samples // 20)
    bad = 0
    for i in range(n):
        c = sample_clocks(w, 2.0, RngKey(seed, i))
        bad += quadrant_monotonicity_check(c, DynParams(0.7, 1.0), DynParams(0.7, 1.8), WINDOW_BOUNDARY).violations
    return Check("coupling monotonicity", bad == 0, f"{bad} pointwise violations over {n} clock fields")


def check_fkg(samples: int, seed: int) -> Check:
    region = Window(3, 3)
    params = SdpParams(0.6, 0.3)
    worst = min(fkg_exact(region, params, WINDOW_BOUNDARY, a, b).covariance for a, b in CATALOG_3X3)
    mc_bad = 0
    for j, (a, b) in enumerate(CATALOG_3X3[:3]):
        r = fkg_check(params, WINDOW_BOUNDARY, region, a, b, samples, stable_hash(seed, j))
        mc_bad += not r.holds()
    ok = worst >= -1e-12 and mc_bad == 0
    return Check("FKG catalogue", ok, f"min exact covariance {worst:.3e}, MC violations {mc_bad}")


def check_roundtrip(samples: int, seed: int) -> Check:
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(samples):
        s = SdpParams(rng.random(), rng.random())
        back = params_from_times(times_from_params(s))
        worst = max(worst, abs(back.p - s.p) + abs(back.delta - s.delta))
    return Check("parameter map roundtrip", worst < 1e-12, f"max error {worst:.2e} over {samples} pairs")


CHECKS: tuple[Callable[[int, int], Check], ...] = (
    check_labelling,
    check_duality,
    check_oracles,
    check_coupling,
    check_fkg,
    check_roundtrip,
)


def run_selftest(samples: int = 1000, seed: int = 7, emit: Callable[[str], None] | None = None) -> list[Check]:
    out = []
    for fn in CHECKS:
        try:
            c = fn(samples, seed)
        except InvariantViolation as exc:
            c = Check(fn.__name__.removeprefix("check_"), False, str(exc))
        out.append(c)
        if emit:
            emit(c.line())
    return out

