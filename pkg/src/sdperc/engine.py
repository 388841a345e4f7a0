"""Bernoulli site fields, cluster labelling and crossing detection.

Occupied sites connect through the square lattice (4-neighbourhood), vacant
sites through the matching lattice (8-neighbourhood). With this pairing
exactly one of "occupied left-right crossing" and "vacant top-bottom
*-crossing" occurs in every rectangle, which the estimators rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from . import _kernels as K
from .errors import ContractViolation
from .lattice import Ball, Site, Window
from .rng import RngKey


class Connectivity(Enum):
    FOUR = 4
    EIGHT = 8


class Direction(Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


@dataclass(frozen=True, eq=False)
class SiteField:
    window: Window
    bits: np.ndarray  # bool, shape window.shape

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.bool_)
        if bits.shape != self.window.shape:
            raise ContractViolation(
                f"bits shape {bits.shape} does not match window {self.window.shape}"
            )
        object.__setattr__(self, "bits", bits)

    def __getitem__(self, s: Site) -> bool:
        return bool(self.bits.flat[self.window.flat_index(s)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SiteField):
            return NotImplemented
        return self.window == other.window and bool(np.array_equal(self.bits, other.bits))

    def __le__(self, other: "SiteField") -> bool:
        """Pointwise order on a common window."""
        if self.window != other.window:
            raise ContractViolation("pointwise comparison needs identical windows")
        return not bool(np.any(self.bits & ~other.bits))

    def restrict(self, inner: Window) -> "SiteField":
        rows, cols = self.window.slices(inner)
        return SiteField(inner, self.bits[rows, cols].copy())

    def density(self) -> float:
        return float(self.bits.mean())

    @classmethod
    def filled(cls, window: Window, value: bool) -> "SiteField":
        return cls(window, np.full(window.shape, value, dtype=np.bool_))

    @classmethod
    def from_sites(cls, window: Window, occupied: Iterable[Site]) -> "SiteField":
        bits = np.zeros(window.shape, dtype=np.bool_)
        for s in occupied:
            bits.flat[window.flat_index(s)] = True
        return cls(window, bits)


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    field: SiteField
    state: bool
    connectivity: Connectivity
    labels: np.ndarray  # int64, -1 off-state, else smallest flat index of the cluster
    cluster_sizes: dict[int, int] = field(default_factory=dict)

    def label_of(self, s: Site) -> int:
        return int(self.labels.flat[self.field.window.flat_index(s)])

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_sizes)


def _base(key: RngKey) -> np.uint64:
    return np.uint64(key.base)


def sample_uniforms(w: Window, key: RngKey) -> np.ndarray:
    """The per-site uniforms behind :func:`sample_field` for this key."""
    return K.uniform_field(_base(key), w.origin.x, w.origin.y, w.width, w.height)


def sample_field(w: Window, prob: float, key: RngKey) -> SiteField:
    """Independent Bernoulli(prob) occupation, site-keyed.

    A site is occupied iff its uniform is below ``prob``; the same key at a
    larger ``prob`` therefore gives a pointwise larger field, and a site's
    state does not depend on the window it was sampled through.
    """
    if not 0.0 <= prob <= 1.0:
        raise ContractViolation(f"probability {prob} outside [0, 1]")
    bits = K.bernoulli_field(_base(key), w.origin.x, w.origin.y, w.width, w.height, float(prob))
    return SiteField(w, bits)


def default_connectivity(state: bool) -> Connectivity:
    return Connectivity.FOUR if state else Connectivity.EIGHT


def label_array(bits: np.ndarray, state: bool, conn: Connectivity) -> np.ndarray:
    return K.label(bits, bool(state), conn is Connectivity.EIGHT)


def label_clusters(f: SiteField, state: bool = True, conn: Connectivity | None = None) -> ClusterLabeling:
    conn = conn or default_connectivity(state)
    labels = label_array(f.bits, state, conn)
    ids, counts = np.unique(labels[labels >= 0], return_counts=True)
    sizes = {int(i): int(c) for i, c in zip(ids, counts)}
    return ClusterLabeling(f, bool(state), conn, labels, sizes)


def has_crossing(
    f: SiteField,
    state: bool = True,
    conn: Connectivity | None = None,
    direction: Direction = Direction.HORIZONTAL,
) -> bool:
    """Some ``state``-path joins the two opposite sides of the window.

    HORIZONTAL joins first and last column, VERTICAL first and last row.
    """
    conn = conn or default_connectivity(state)
    labels = label_array(f.bits, state, conn)
    return bool(K.spans(labels, direction is Direction.HORIZONTAL))


def occupied_horizontal(bits: np.ndarray) -> bool:
    return bool(K.spans(K.label(bits, True, False), True))


def vacant_vertical(bits: np.ndarray) -> bool:
    return bool(K.spans(K.label(bits, False, True), False))


def cluster_reaches(labeling: ClusterLabeling, s: Site, target: Iterable[Site]) -> bool:
    lab = labeling.label_of(s)
    if lab < 0:
        return False
    return any(labeling.label_of(t) == lab for t in target)


def blocked_cluster_event(f: SiteField, i: Site, k: int) -> bool:
    """Occupied cluster of ``i`` reaches distance ``k`` yet avoids the window boundary.

    The boundary test stands in for finiteness of the cluster.
    """
    w = f.window
    ball = Ball(i, k)
    if k < 1 or not ball.inside(w) or w.is_boundary(i) or _ball_touches_boundary(ball, w):
        raise ContractViolation(f"ball B({tuple(i)}, {k}) must lie strictly inside {w}")
    if not f[i]:
        return False
    labels = K.label(f.bits, True, False)
    r = i[1] - w.origin.y
    c = i[0] - w.origin.x
    return bool(K.reaches_distance(labels, r, c, k)) and not bool(K.touches_boundary(labels, r, c))


def _ball_touches_boundary(ball: Ball, w: Window) -> bool:
    b = ball.bounding_window()
    return (
        b.origin.x <= w.origin.x
        or b.origin.y <= w.origin.y
        or b.x_max >= w.x_max
        or b.y_max >= w.y_max
    )
