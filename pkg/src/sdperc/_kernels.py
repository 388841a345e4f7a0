"""Compiled inner loops.

Everything here works on plain numpy arrays laid out ``[row, col]`` and is
compiled with ``nogil`` so replicate batches can run on worker threads.
Labels are row-major flat indices; ``-1`` marks sites not of the labelled
state.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK32 = np.uint64(0xFFFFFFFF)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, nogil=True, inline="always")
def mix64(z):
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True, inline="always")
def site_hash(base, x, y):
    enc = ((np.uint64(x) & _MASK32) << np.uint64(32)) | (np.uint64(y) & _MASK32)
    return mix64(base ^ mix64(enc))


@njit(cache=True, nogil=True, inline="always")
def to_unit(h):
    # [0, 1) with 53 random bits
    return np.float64(h >> np.uint64(11)) * _INV53


@njit(cache=True, nogil=True, inline="always")
def to_open_unit(h):
    # (0, 1), never 0
    return (np.float64(h >> np.uint64(11)) + 0.5) * _INV53


@njit(cache=True, nogil=True)
def uniform_field(base, x0, y0, width, height):
    out = np.empty((height, width), dtype=np.float64)
    for r in range(height):
        for c in range(width):
            out[r, c] = to_unit(site_hash(base, x0 + c, y0 + r))
    return out


@njit(cache=True, nogil=True)
def bernoulli_field(base, x0, y0, width, height, prob):
    out = np.empty((height, width), dtype=np.bool_)
    for r in range(height):
        for c in range(width):
            out[r, c] = to_unit(site_hash(base, x0 + c, y0 + r)) < prob
    return out


@njit(cache=True, nogil=True)
def clock_arrivals(base, x0, y0, width, height, horizon):
    """Unit-rate Poisson arrivals on ``[0, horizon]`` per site, CSR layout."""
    n = width * height
    counts = np.zeros(n, dtype=np.int64)
    for r in range(height):
        for c in range(width):
            h = site_hash(base, x0 + c, y0 + r)
            t = 0.0
            j = 0
            while True:
                j += 1
                t += -np.log(to_open_unit(mix64(h + np.uint64(j) * _GOLDEN)))
                if t > horizon:
                    break
                counts[r * width + c] += 1
    offsets = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        offsets[i + 1] = offsets[i] + counts[i]
    times = np.empty(offsets[n], dtype=np.float64)
    for r in range(height):
        for c in range(width):
            i = r * width + c
            h = site_hash(base, x0 + c, y0 + r)
            t = 0.0
            for j in range(counts[i]):
                t += -np.log(to_open_unit(mix64(h + np.uint64(j + 1) * _GOLDEN)))
                times[offsets[i] + j] = t
    return offsets, times


@njit(cache=True, nogil=True)
def first_arrival_before(offsets, times, t):
    n = offsets.shape[0] - 1
    out = np.empty(n, dtype=np.bool_)
    for i in range(n):
        out[i] = offsets[i + 1] > offsets[i] and times[offsets[i]] <= t
    return out


@njit(cache=True, nogil=True)
def arrival_in(offsets, times, lo, hi):
    """Per site: some arrival in the half-open interval ``(lo, hi]``."""
    n = offsets.shape[0] - 1
    out = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        for j in range(offsets[i], offsets[i + 1]):
            a = times[j]
            if a > hi:
                break
            if a > lo:
                out[i] = True
                break
    return out


@njit(cache=True, nogil=True, inline="always")
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True, nogil=True, inline="always")
def _link(parent, root, b):
    """Merge the tree of ``b`` into ``root``; the smaller index stays root."""
    rb = _find(parent, b)
    if root < rb:
        parent[rb] = root
        return root
    if rb < root:
        parent[root] = rb
        return rb
    return root


@njit(cache=True, nogil=True)
def label(bits, state, eight):
    """Union-find labelling of ``state`` sites; label = smallest flat index.

    Single raster scan. Parents always point to smaller indices, so one
    forward pass afterwards resolves every site to its root.
    """
    height, width = bits.shape
    n = height * width
    flat = bits.reshape(n)
    parent = np.empty(n, dtype=np.int64)
    for i in range(n):
        if flat[i] != state:
            parent[i] = -1
            continue
        c = i % width
        west = c > 0 and parent[i - 1] >= 0
        root = _find(parent, i - 1) if west else i
        if i >= width:
            j = i - width
            if parent[j] >= 0:
                root = _link(parent, root, j)
            elif eight:
                # with the south site in state, both diagonals are already joined to it
                if c > 0 and parent[j - 1] >= 0:
                    root = _link(parent, root, j - 1)
                if c < width - 1 and parent[j + 1] >= 0:
                    root = _link(parent, root, j + 1)
        parent[i] = root
    for i in range(n):
        if parent[i] >= 0:
            parent[i] = parent[parent[i]]
    return parent.reshape((height, width))


@njit(cache=True, nogil=True)
def spans(labels, horizontal):
    """True iff one cluster touches both opposite sides."""
    height, width = labels.shape
    mark = np.zeros(height * width, dtype=np.bool_)
    if horizontal:
        for r in range(height):
            if labels[r, 0] >= 0:
                mark[labels[r, 0]] = True
        for r in range(height):
            lab = labels[r, width - 1]
            if lab >= 0 and mark[lab]:
                return True
    else:
        for c in range(width):
            if labels[0, c] >= 0:
                mark[labels[0, c]] = True
        for c in range(width):
            lab = labels[height - 1, c]
            if lab >= 0 and mark[lab]:
                return True
    return False


@njit(cache=True, nogil=True)
def count_spanning(labels, horizontal):
    """Number of distinct clusters touching both opposite sides."""
    height, width = labels.shape
    first = np.zeros(height * width, dtype=np.bool_)
    seen = np.zeros(height * width, dtype=np.bool_)
    count = 0
    if horizontal:
        for r in range(height):
            if labels[r, 0] >= 0:
                first[labels[r, 0]] = True
        for r in range(height):
            lab = labels[r, width - 1]
            if lab >= 0 and first[lab] and not seen[lab]:
                seen[lab] = True
                count += 1
    else:
        for c in range(width):
            if labels[0, c] >= 0:
                first[labels[0, c]] = True
        for c in range(width):
            lab = labels[height - 1, c]
            if lab >= 0 and first[lab] and not seen[lab]:
                seen[lab] = True
                count += 1
    return count


@njit(cache=True, nogil=True)
def boundary_labels(labels):
    height, width = labels.shape
    mark = np.zeros(height * width, dtype=np.bool_)
    for c in range(width):
        if labels[0, c] >= 0:
            mark[labels[0, c]] = True
        if labels[height - 1, c] >= 0:
            mark[labels[height - 1, c]] = True
    for r in range(height):
        if labels[r, 0] >= 0:
            mark[labels[r, 0]] = True
        if labels[r, width - 1] >= 0:
            mark[labels[r, width - 1]] = True
    return mark


@njit(cache=True, nogil=True)
def destroy_touching_boundary(labels):
    """Occupied sites whose cluster avoids the window boundary."""
    height, width = labels.shape
    mark = boundary_labels(labels)
    out = np.zeros((height, width), dtype=np.bool_)
    for r in range(height):
        for c in range(width):
            lab = labels[r, c]
            if lab >= 0 and not mark[lab]:
                out[r, c] = True
    return out


@njit(cache=True, nogil=True)
def cluster_extent(labels):
    """Per-label extrema of ``col+row`` and ``col-row``.

    The largest L1 distance from a site to any site of a cluster is the
    largest of the four differences against these extrema.
    """
    height, width = labels.shape
    n = height * width
    umin = np.empty(n, dtype=np.int64)
    umax = np.empty(n, dtype=np.int64)
    vmin = np.empty(n, dtype=np.int64)
    vmax = np.empty(n, dtype=np.int64)
    for r in range(height):
        for c in range(width):
            lab = labels[r, c]
            if lab < 0:
                continue
            u = c + r
            v = c - r
            if lab == r * width + c:
                umin[lab] = u
                umax[lab] = u
                vmin[lab] = v
                vmax[lab] = v
            else:
                umin[lab] = min(umin[lab], u)
                umax[lab] = max(umax[lab], u)
                vmin[lab] = min(vmin[lab], v)
                vmax[lab] = max(vmax[lab], v)
    return umin, umax, vmin, vmax


@njit(cache=True, nogil=True)
def destroy_finite_range(labels, k, r0, c0, rh, rw):
    """Survivors on the region ``[r0:r0+rh, c0:c0+rw]``.

    A region site survives iff occupied and its cluster stays within L1
    distance ``k - 1``. The caller guarantees the labelled window contains
    every ball of radius ``k`` around region sites, which makes the test exact.
    """
    umin, umax, vmin, vmax = cluster_extent(labels)
    out = np.zeros((rh, rw), dtype=np.bool_)
    for r in range(rh):
        for c in range(rw):
            rr = r + r0
            cc = c + c0
            lab = labels[rr, cc]
            if lab < 0:
                continue
            u = cc + rr
            v = cc - rr
            reach = max(max(umax[lab] - u, u - umin[lab]), max(vmax[lab] - v, v - vmin[lab]))
            out[r, c] = reach < k
    return out


@njit(cache=True, nogil=True)
def reaches_distance(labels, r, c, k):
    """Cluster of ``(r, c)`` contains a site at L1 distance >= k from it."""
    lab = labels[r, c]
    if lab < 0:
        return False
    height, width = labels.shape
    for rr in range(height):
        for cc in range(width):
            if labels[rr, cc] == lab and abs(rr - r) + abs(cc - c) >= k:
                return True
    return False


@njit(cache=True, nogil=True)
def touches_boundary(labels, r, c):
    lab = labels[r, c]
    if lab < 0:
        return False
    return boundary_labels(labels)[lab]
