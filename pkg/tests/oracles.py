"""Independent reference implementations used as test oracles.

Everything here is deliberately naive (brute force, exhaustive enumeration,
heapq Dijkstra, finite differences) and shares no code with the package's
kernels.
"""

from __future__ import annotations

import heapq
import math

import numpy as np


def brute_force_distance_transform(mask: np.ndarray) -> np.ndarray:
    """Exact nearest-false search; pixels beyond the border count as false.

    O(n_true * n_false) pairwise search (chunked for memory).  Squared
    distances are formed in integer arithmetic and the square root is taken
    once at the end, so results are bitwise-comparable with any other exact
    method.
    """
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    out_sq = np.zeros((h, w), dtype=np.int64)
    yy_f, xx_f = np.nonzero(~m)
    yy_t, xx_t = np.nonzero(m)
    # nearest virtual outside pixel lies straight across the closest border
    border_sq = np.minimum.reduce([xx_t + 1, yy_t + 1, w - xx_t, h - yy_t]).astype(np.int64) ** 2
    best = border_sq
    if yy_f.size:
        for start in range(0, yy_t.size, 1024):
            sl = slice(start, start + 1024)
            d2 = (yy_t[sl, None] - yy_f[None, :]) ** 2 + (xx_t[sl, None] - xx_f[None, :]) ** 2
            best[sl] = np.minimum(best[sl], d2.min(axis=1))
    out_sq[yy_t, xx_t] = best
    return np.sqrt(out_sq.astype(np.float64))


def dijkstra_oracle(
    image: np.ndarray,
    seeds: np.ndarray,
    lam: float,
    allowed: np.ndarray | None = None,
) -> np.ndarray:
    """heapq-based shortest path over the 8-connected grid."""
    img = np.asarray(image, dtype=np.float64)
    s = np.asarray(seeds, dtype=bool)
    h, w = s.shape
    ok = np.ones((h, w), bool) if allowed is None else (np.asarray(allowed, bool) | s)
    dist = np.full((h, w), np.inf)
    heap = []
    for y in range(h):
        for x in range(w):
            if s[y, x]:
                dist[y, x] = 0.0
                heapq.heappush(heap, (0.0, y, x))
    neighbors = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
    while heap:
        cost, y, x = heapq.heappop(heap)
        if cost > dist[y, x]:
            continue
        for dx, dy in neighbors:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < w and 0 <= ny < h) or not ok[ny, nx]:
                continue
            step = 1.0 if dx == 0 or dy == 0 else math.sqrt(2.0)
            grad = math.sqrt(float(((img[y, x] - img[ny, nx]) ** 2).sum()))
            nd = cost + step * (1.0 + lam * grad)
            if nd < dist[ny, nx]:
                dist[ny, nx] = nd
                heapq.heappush(heap, (nd, ny, nx))
    return dist


def disk_mask(cx: int, cy: int, radius: float, width: int, height: int) -> np.ndarray:
    out = np.zeros((height, width), bool)
    for y in range(height):
        for x in range(width):
            if (x - cx) ** 2 + (y - cy) ** 2 <= radius * radius:
                out[y, x] = True
    return out


def enumerate_false_negative(pred: np.ndarray, gt: np.ndarray, label: int) -> np.ndarray:
    """Per-pixel Python-loop evaluation of 'gt is label and pred is not'."""
    h, w = pred.shape
    out = np.zeros((h, w), bool)
    for y in range(h):
        for x in range(w):
            out[y, x] = (gt[y, x] == label) and (pred[y, x] != label)
    return out


def finite_difference_gradient(f, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central differences of a scalar function of a flat vector."""
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def recover_alpha_least_squares(
    composited: np.ndarray, foreground: np.ndarray, background: np.ndarray
) -> np.ndarray:
    """Per-pixel least-squares alpha from a composite (valid when f != b)."""
    num = ((composited - background) * (foreground - background)).sum(axis=2)
    den = ((foreground - background) ** 2).sum(axis=2)
    return num / den


def cups_reference(d_f: float, d_b: float, d_u: float, d_t: float, alpha: float, beta: float) -> int:
    """Literal re-evaluation of the two-branch next-class rule.

    Returns the LabelClass code: unknown when the error level is strictly
    below alpha AND the unknown error size strictly above beta, else the
    argmax with ties resolved F < B < U.
    """
    e = max(d_f, d_b, d_u) / d_t
    if e < alpha and d_u > beta:
        return 2
    best, code = d_f, 0
    if d_b > best:
        best, code = d_b, 1
    if d_u > best:
        best, code = d_u, 2
    return code
