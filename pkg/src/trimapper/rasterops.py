"""Deterministic raster kernels.

Boolean mask algebra, an exact Euclidean distance transform, disk
morphology, and gradient-weighted geodesic distance.  The hot loops are
numba-compiled; everything is single-threaded and bit-deterministic so
simulation trajectories replay exactly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .core import as_image, as_mask, check_same_shape

# Sentinel cost for "no site": far above any attainable squared pixel
# distance ((2*4096)^2 ~ 6.7e7) yet small enough that adding offsets keeps
# float64 arithmetic exact.
_NO_SITE = 1.0e12

_SQRT2 = np.sqrt(2.0)


def mask_not(m: np.ndarray) -> np.ndarray:
    return ~as_mask(m)


def mask_and(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = as_mask(a)
    b = as_mask(b)
    check_same_shape(a, b, "mask operands")
    return a & b


def mask_or(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = as_mask(a)
    b = as_mask(b)
    check_same_shape(a, b, "mask operands")
    return a | b


@njit(cache=True)
def _lower_envelope_1d(f, d, v, z, n):
    # One scanline of the two-pass exact squared-distance transform: d[q] =
    # min_p (q - p)^2 + f[p], computed via the lower envelope of parabolas.
    k = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        dq = q - v[k]
        d[q] = dq * dq + f[v[k]]


@njit(cache=True)
def _squared_distance_to_sites(sites):
    # Exact squared Euclidean distance from every pixel to the nearest True
    # pixel of `sites`; _NO_SITE-sized values where no site exists at all.
    # All intermediate quantities are integers representable in float64, so
    # the result is exact, not approximate.
    h, w = sites.shape
    g = np.empty((h, w), np.float64)
    n = max(h, w)
    f = np.empty(n, np.float64)
    d = np.empty(n, np.float64)
    v = np.empty(n, np.int64)
    z = np.empty(n + 1, np.float64)
    for x in range(w):
        for y in range(h):
            f[y] = 0.0 if sites[y, x] else _NO_SITE
        _lower_envelope_1d(f, d, v, z, h)
        for y in range(h):
            g[y, x] = d[y]
    for y in range(h):
        for x in range(w):
            f[x] = g[y, x]
        _lower_envelope_1d(f, d, v, z, w)
        for x in range(w):
            g[y, x] = d[x]
    return g


def distance_transform(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance from each true pixel to the nearest false one.

    Pixels beyond the image border count as false, so a fully-true raster
    still has finite values.  False pixels map to 0.
    """
    m = as_mask(mask)
    h, w = m.shape
    sites = np.ones((h + 2, w + 2), dtype=bool)
    sites[1:-1, 1:-1] = ~m
    sq = _squared_distance_to_sites(sites)[1:-1, 1:-1]
    out = np.sqrt(sq)
    out.flags.writeable = False
    return out


def max_of(dist: np.ndarray) -> float:
    """Maximum value of a distance map (0 for an all-zero map)."""
    return float(np.max(dist))


def argmax_pixel(dist: np.ndarray) -> tuple[int, int]:
    """(x, y) of the maximum value; ties go to smallest y, then smallest x."""
    d = np.asarray(dist)
    if float(d.max(initial=0.0)) <= 0.0:
        raise ValueError("no error region: distance map is all zero")
    idx = int(np.argmax(d))  # row-major scan implements the tie rule
    y, x = divmod(idx, d.shape[1])
    return x, y


def dilate(mask: np.ndarray, radius: float) -> np.ndarray:
    """Morphological dilation by a Euclidean disk of the given radius."""
    m = as_mask(mask)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if not m.any():
        return m
    sq = _squared_distance_to_sites(m)
    out = sq <= float(radius) * float(radius)
    out.flags.writeable = False
    return out


def erode(mask: np.ndarray, radius: float) -> np.ndarray:
    """Morphological erosion: the complement of dilating the complement."""
    return mask_not(dilate(mask_not(mask), radius))


@njit(cache=True)
def _heap_push(costs, nodes, size, cost, node):
    i = size
    costs[i] = cost
    nodes[i] = node
    while i > 0:
        parent = (i - 1) >> 1
        if costs[parent] <= costs[i]:
            break
        costs[parent], costs[i] = costs[i], costs[parent]
        nodes[parent], nodes[i] = nodes[i], nodes[parent]
        i = parent
    return size + 1


@njit(cache=True)
def _heap_pop(costs, nodes, size):
    top_cost = costs[0]
    top_node = nodes[0]
    size -= 1
    costs[0] = costs[size]
    nodes[0] = nodes[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        child = left
        right = left + 1
        if right < size and costs[right] < costs[left]:
            child = right
        if costs[i] <= costs[child]:
            break
        costs[i], costs[child] = costs[child], costs[i]
        nodes[i], nodes[child] = nodes[child], nodes[i]
        i = child
    return top_cost, top_node, size


@njit(cache=True)
def _dijkstra_field(image, seeds, lam, allowed):
    # Multi-source Dijkstra over the 8-connected grid.  A step of Euclidean
    # length L between pixels p, q costs L * (1 + lam * ||image(p)-image(q)||).
    # Lazy deletion: every relaxation pushes, so the heap holds <= 8*n slots.
    h, w = seeds.shape
    n = h * w
    dist = np.full(n, np.inf)
    heap_costs = np.empty(8 * n + 1, np.float64)
    heap_nodes = np.empty(8 * n + 1, np.int64)
    size = 0
    for y in range(h):
        for x in range(w):
            if seeds[y, x]:
                idx = y * w + x
                dist[idx] = 0.0
                size = _heap_push(heap_costs, heap_nodes, size, 0.0, idx)
    dxs = (-1, 0, 1, -1, 1, -1, 0, 1)
    dys = (-1, -1, -1, 0, 0, 1, 1, 1)
    while size > 0:
        cost, node, size = _heap_pop(heap_costs, heap_nodes, size)
        if cost > dist[node]:
            continue
        y = node // w
        x = node - y * w
        for k in range(8):
            nx = x + dxs[k]
            ny = y + dys[k]
            if nx < 0 or nx >= w or ny < 0 or ny >= h:
                continue
            if not (allowed[ny, nx] or seeds[ny, nx]):
                continue
            step = 1.0 if dxs[k] == 0 or dys[k] == 0 else _SQRT2
            dr = image[y, x, 0] - image[ny, nx, 0]
            dg = image[y, x, 1] - image[ny, nx, 1]
            db = image[y, x, 2] - image[ny, nx, 2]
            grad = np.sqrt(dr * dr + dg * dg + db * db)
            nd = cost + step * (1.0 + lam * grad)
            nidx = ny * w + nx
            if nd < dist[nidx]:
                dist[nidx] = nd
                size = _heap_push(heap_costs, heap_nodes, size, nd, nidx)
    return dist.reshape(h, w)


def geodesic_distance(
    image: np.ndarray,
    seeds: np.ndarray,
    lam: float,
    allowed: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient-weighted shortest-path cost from a seed set.

    The field is 0 exactly on seeds and finite everywhere when ``allowed``
    is omitted (the full raster is traversable).  With an ``allowed`` mask,
    paths may only traverse allowed or seed pixels and unreachable pixels
    are ``inf``.
    """
    img = as_image(image)
    s = as_mask(seeds)
    check_same_shape(img, s, "image and seeds")
    if not s.any():
        raise ValueError("empty seed set: geodesic distance needs at least one seed pixel")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if allowed is None:
        allowed_arr = np.ones(s.shape, dtype=bool)
    else:
        allowed_arr = as_mask(allowed)
        check_same_shape(s, allowed_arr, "seeds and allowed mask")
    out = _dijkstra_field(
        np.ascontiguousarray(img),
        np.ascontiguousarray(s),
        float(lam),
        np.ascontiguousarray(allowed_arr),
    )
    out.flags.writeable = False
    return out


def warmup() -> None:
    """Force-compile the numba kernels (call once before latency-sensitive use)."""
    tiny = np.zeros((2, 2), dtype=bool)
    tiny[0, 0] = True
    distance_transform(tiny)
    dilate(tiny, 1.0)
    geodesic_distance(np.zeros((2, 2, 3)), tiny, 1.0)
