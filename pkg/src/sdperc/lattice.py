"""Square-lattice geometry on finite windows.

Sites are integer pairs in absolute coordinates. A window is an axis-aligned
block of sites; inside a window sites are addressed by a row-major flat index
``(y - origin.y) * width + (x - origin.x)``, which matches the ``[row, col]``
layout of the numpy arrays used everywhere else.

Distances are L1 graph distances on the square lattice. The matching lattice
(diagonal adjacency) only changes which sites count as neighbours, never the
metric.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

from .errors import ContractViolation, DegenerateRectangle


class Site(NamedTuple):
    x: int
    y: int


ORIGIN = Site(0, 0)

# E, N, W, S
_AXIS = ((1, 0), (0, 1), (-1, 0), (0, -1))
# E, NE, N, NW, W, SW, S, SE (counter-clockwise from east)
_MATCHING = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


@dataclass(frozen=True)
class Window:
    width: int
    height: int
    origin: Site = ORIGIN

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ContractViolation(f"window must be at least 1x1, got {self.width}x{self.height}")
        object.__setattr__(self, "origin", Site(*self.origin))

    @property
    def shape(self) -> tuple[int, int]:
        """numpy shape ``(rows, cols)``."""
        return (self.height, self.width)

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def x_max(self) -> int:
        return self.origin.x + self.width - 1

    @property
    def y_max(self) -> int:
        return self.origin.y + self.height - 1

    def contains(self, s: Site) -> bool:
        return (
            self.origin.x <= s[0] < self.origin.x + self.width
            and self.origin.y <= s[1] < self.origin.y + self.height
        )

    def contains_window(self, other: "Window") -> bool:
        return self.contains(other.origin) and self.contains(Site(other.x_max, other.y_max))

    def flat_index(self, s: Site) -> int:
        self._require(s)
        return (s[1] - self.origin.y) * self.width + (s[0] - self.origin.x)

    def site_at(self, index: int) -> Site:
        if not 0 <= index < self.size:
            raise ContractViolation(f"flat index {index} outside window of {self.size} sites")
        row, col = divmod(index, self.width)
        return Site(self.origin.x + col, self.origin.y + row)

    def sites(self) -> list[Site]:
        return [self.site_at(i) for i in range(self.size)]

    def is_boundary(self, s: Site) -> bool:
        self._require(s)
        return s[0] in (self.origin.x, self.x_max) or s[1] in (self.origin.y, self.y_max)

    def enlarged(self, margin: int) -> "Window":
        if margin < 0:
            raise ContractViolation("margin must be nonnegative")
        return Window(
            self.width + 2 * margin,
            self.height + 2 * margin,
            Site(self.origin.x - margin, self.origin.y - margin),
        )

    def sub(self, x0: int, y0: int, width: int, height: int) -> "Window":
        """Sub-window given in coordinates relative to this window's origin."""
        w = Window(width, height, Site(self.origin.x + x0, self.origin.y + y0))
        if not self.contains_window(w):
            raise ContractViolation(f"{w} is not inside {self}")
        return w

    def slices(self, inner: "Window") -> tuple[slice, slice]:
        """Array slices selecting ``inner`` from an array laid out on this window."""
        if not self.contains_window(inner):
            raise ContractViolation(f"{inner} is not inside {self}")
        r0 = inner.origin.y - self.origin.y
        c0 = inner.origin.x - self.origin.x
        return slice(r0, r0 + inner.height), slice(c0, c0 + inner.width)

    def _require(self, s: Site) -> None:
        if not self.contains(s):
            raise ContractViolation(f"site {tuple(s)} outside {self}")


@dataclass(frozen=True)
class Ball:
    """L1 ball ``B(center, radius)``."""

    center: Site
    radius: int

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ContractViolation("ball radius must be nonnegative")
        object.__setattr__(self, "center", Site(*self.center))

    def contains(self, s: Site) -> bool:
        return l1(self.center, s) <= self.radius

    def sites(self) -> list[Site]:
        cx, cy = self.center
        r = self.radius
        return [
            Site(cx + dx, cy + dy)
            for dy in range(-r, r + 1)
            for dx in range(-r, r + 1)
            if abs(dx) + abs(dy) <= r
        ]

    def boundary(self) -> list[Site]:
        """Sites at distance exactly ``radius``."""
        return [s for s in self.sites() if l1(self.center, s) == self.radius]

    def bounding_window(self) -> Window:
        r = self.radius
        return Window(2 * r + 1, 2 * r + 1, Site(self.center.x - r, self.center.y - r))

    def inside(self, w: Window) -> bool:
        return w.contains_window(self.bounding_window())


def l1(a: Site, b: Site) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def neighbors4(s: Site, w: Window) -> list[Site]:
    """Square-lattice neighbours of ``s`` inside ``w``, in E, N, W, S order."""
    w._require(s)
    out = [Site(s[0] + dx, s[1] + dy) for dx, dy in _AXIS]
    return [t for t in out if w.contains(t)]


def neighbors8(s: Site, w: Window) -> list[Site]:
    """Matching-lattice neighbours, counter-clockwise starting east."""
    w._require(s)
    out = [Site(s[0] + dx, s[1] + dy) for dx, dy in _MATCHING]
    return [t for t in out if w.contains(t)]


def set_distance(v_set: Iterable[Site], w_set: Iterable[Site]) -> int:
    """``min |v - w|`` over both sets, L1 metric."""
    vs = list(v_set)
    ws = list(w_set)
    if not vs or not ws:
        raise ContractViolation("set_distance needs two nonempty sets")
    return min(l1(v, w) for v in vs for w in ws)


def rectangle_window(rho: Fraction | int | float | str, s: int) -> Window:
    """The ``floor(rho*s) x s`` rectangle at the origin.

    ``rho`` is converted to an exact :class:`~fractions.Fraction` before the
    floor is taken, so ``rho=1/3`` given as a string or fraction rounds
    consistently. Floats are converted exactly, so ``0.1`` is *not* ``1/10``.
    """
    if s < 1:
        raise ContractViolation("rectangle height must be positive")
    r = Fraction(rho)
    if r <= 0:
        raise ContractViolation("aspect ratio must be positive")
    width = (r * s).numerator // (r * s).denominator
    if width < 1:
        raise DegenerateRectangle(f"floor({r}*{s}) = 0")
    return Window(width, s)
