"""Exact laws of the final configuration on tiny regions by total enumeration.

This is a test oracle and shares no code with the sampling path: the
destroyed set is recomputed here by repeated neighbour propagation on
boolean tables instead of union-find, and probabilities are assembled from
integer configuration counts so that the only floating-point work is one
``math.fsum`` per output cell and a per-site enhancement channel.

The law of ``z`` on a region with ``R`` sites is returned as a vector of
length ``2**R`` indexed by the bit pattern ``sum(z_j << j)`` where ``j`` is
the row-major index of the site in the region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from ..errors import BudgetExceeded, ContractViolation
from ..lattice import Ball, Site, Window, l1
from ..sdp import DestructionRule, RuleKind, SdpParams

MAX_X_SITES = 24
MAX_REGION_SITES = 16
_CHUNK = 1 << 20

_STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1))


@dataclass(frozen=True)
class _Plan:
    """Which ``x`` sites matter and how each region site's survival is decided."""

    x_sites: tuple[Site, ...]
    region_sites: tuple[Site, ...]
    # per region site: (indices into x_sites of the allowed set, seeds, targets, adjacency)
    tests: tuple


def _adjacency(sites: list[Site]) -> list[list[int]]:
    pos = {s: i for i, s in enumerate(sites)}
    return [
        [pos[(s[0] + dx, s[1] + dy)] for dx, dy in _STEPS if (s[0] + dx, s[1] + dy) in pos]
        for s in sites
    ]


@lru_cache(maxsize=32)
def _plan(region: Window, rule: DestructionRule) -> _Plan:
    region_sites = tuple(region.sites())
    if len(region_sites) > MAX_REGION_SITES:
        raise BudgetExceeded(f"region has {len(region_sites)} sites, limit {MAX_REGION_SITES}")
    if rule.kind is RuleKind.FINITE_RANGE:
        union: dict[Site, None] = {}
        for s in region_sites:
            for b in Ball(s, rule.k).sites():
                union[b] = None
        x_sites = tuple(sorted(union, key=lambda s: (s[1], s[0])))
    elif rule.kind is RuleKind.WINDOW_BOUNDARY:
        x_sites = region_sites
    else:
        raise ContractViolation("exact enumeration supports finite-range and window-boundary rules")
    if len(x_sites) > MAX_X_SITES:
        raise BudgetExceeded(
            f"{len(x_sites)} initial-configuration sites influence the region, limit {MAX_X_SITES}"
        )
    index = {s: i for i, s in enumerate(x_sites)}
    tests = []
    if rule.kind is RuleKind.FINITE_RANGE:
        for s in region_sites:
            ball = Ball(s, rule.k).sites()
            allowed = [index[b] for b in ball]
            local_adj = _adjacency(ball)
            seed = [ball.index(s)]
            target = [j for j, b in enumerate(ball) if l1(b, s) == rule.k]
            tests.append((tuple(allowed), tuple(seed), tuple(target), local_adj))
    else:
        sites = list(x_sites)
        adj = _adjacency(sites)
        seeds = [i for i, s in enumerate(sites) if region.is_boundary(s)]
        tests.append((tuple(range(len(sites))), tuple(seeds), (), adj))
    return _Plan(x_sites, region_sites, tuple(tests))


def _propagate(occ: np.ndarray, seeds, adj) -> np.ndarray:
    """Sites of ``occ`` (shape (m, n)) connected to a seed through occupied sites."""
    reach = np.zeros_like(occ)
    for s in seeds:
        reach[:, s] = occ[:, s]
    while True:
        grown = reach.copy()
        for j, nbrs in enumerate(adj):
            if nbrs:
                any_nbr = reach[:, nbrs[0]].copy()
                for q in nbrs[1:]:
                    any_nbr |= reach[:, q]
                grown[:, j] |= occ[:, j] & any_nbr
        if np.array_equal(grown, reach):
            return reach
        reach = grown


def _survivors(bits: np.ndarray, plan: _Plan, rule: DestructionRule) -> np.ndarray:
    """Survivor pattern on the region for a batch of x configurations (m, n_x)."""
    m = bits.shape[0]
    pattern = np.zeros(m, dtype=np.int64)
    if rule.kind is RuleKind.FINITE_RANGE:
        for j, (allowed, seed, target, adj) in enumerate(plan.tests):
            local = bits[:, list(allowed)]
            reach = _propagate(local, seed, adj)
            hit = reach[:, list(target)].any(axis=1)
            alive = local[:, seed[0]] & ~hit
            pattern |= alive.astype(np.int64) << j
    else:
        allowed, seeds, _, adj = plan.tests[0]
        reach = _propagate(bits, seeds, adj)
        alive = bits & ~reach
        for j in range(bits.shape[1]):
            pattern |= alive[:, j].astype(np.int64) << j
    return pattern


@lru_cache(maxsize=32)
def survivor_counts(region: Window, rule: DestructionRule) -> np.ndarray:
    """Integer table ``C[c, a]``: number of x configurations with ``c``
    occupied sites whose survivor pattern on the region is ``a``.

    Independent of ``p``; exact.
    """
    plan = _plan(region, rule)
    n = len(plan.x_sites)
    r = len(plan.region_sites)
    table = np.zeros((n + 1) * (1 << r), dtype=np.int64)
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, 1 << n, _CHUNK):
        conf = np.arange(start, min(start + _CHUNK, 1 << n), dtype=np.int64)
        bits = ((conf[:, None] >> shifts) & 1).astype(np.bool_)
        pop = bits.sum(axis=1)
        pattern = _survivors(bits, plan, rule)
        table += np.bincount(pop * (1 << r) + pattern, minlength=table.size)
    return table.reshape(n + 1, 1 << r)


def survivor_law(region: Window, p: float, rule: DestructionRule) -> np.ndarray:
    """Exact law of ``x_star`` on the region."""
    counts = survivor_counts(region, rule)
    n = counts.shape[0] - 1
    weights = [p**c * (1.0 - p) ** (n - c) for c in range(n + 1)]
    out = np.empty(counts.shape[1])
    for a in range(counts.shape[1]):
        col = counts[:, a]
        out[a] = math.fsum(int(col[c]) * weights[c] for c in range(n + 1) if col[c])
    return out


def z_law(region: Window, params: SdpParams, rule: DestructionRule) -> np.ndarray:
    """Exact law of the final configuration on ``region``."""
    law = survivor_law(region, params.p, rule)
    r = len(region.sites())
    d = params.delta
    # enhancement channel, one site at a time: a vacant survivor site turns occupied w.p. delta
    t = law.reshape((2,) * r)  # axis 0 is the highest bit
    for axis in range(r):
        t = np.moveaxis(t, axis, 0)
        vac, occ = t[0], t[1]
        t = np.stack([(1.0 - d) * vac, occ + d * vac])
        t = np.moveaxis(t, 0, axis)
    return t.reshape(-1)


def pattern_to_array(pattern: int, region: Window) -> np.ndarray:
    n = region.size
    bits = np.array([(pattern >> j) & 1 for j in range(n)], dtype=np.bool_)
    return bits.reshape(region.shape)


def enumerate_exact(
    region: Window,
    params: SdpParams,
    rule: DestructionRule,
    predicate: Callable[[np.ndarray], bool],
) -> float:
    """Exact probability that ``predicate(z)`` holds; ``z`` is passed as a bool array on ``region``."""
    law = z_law(region, params, rule)
    return math.fsum(
        float(law[a]) for a in range(law.size) if predicate(pattern_to_array(a, region))
    )


def connection_probability(p: float, k: int) -> float:
    """P(origin connects to distance ``k`` in Bernoulli(p)), by enumeration over ``B(0, k)``."""
    ball = Ball(Site(0, 0), k).sites()
    n = len(ball)
    if n > MAX_X_SITES:
        raise BudgetExceeded(f"ball of radius {k} has {n} sites")
    adj = _adjacency(ball)
    seed = (ball.index(Site(0, 0)),)
    target = [j for j, b in enumerate(ball) if l1(b, Site(0, 0)) == k]
    conf = np.arange(1 << n, dtype=np.int64)
    bits = ((conf[:, None] >> np.arange(n)) & 1).astype(np.bool_)
    hit = _propagate(bits, seed, adj)[:, target].any(axis=1)
    pop = bits.sum(axis=1)
    counts = np.bincount(pop[hit], minlength=n + 1)
    return math.fsum(int(counts[c]) * p**c * (1 - p) ** (n - c) for c in range(n + 1) if counts[c])
