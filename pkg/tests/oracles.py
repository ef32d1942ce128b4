"""Independent brute-force reference implementations used as test oracles.

Everything here is deliberately slow and literal: plain loops over pixels,
no shared code with the package internals beyond basic numpy.
"""

import heapq
import math

import numpy as np


def brute_min_distance(seeds: np.ndarray) -> np.ndarray:
    """Per-pixel minimum Euclidean distance to any True seed pixel."""
    h, w = seeds.shape
    sr, sc = np.nonzero(seeds)
    out = np.empty((h, w))
    for r in range(h):
        dr2 = (sr - r) ** 2
        for c in range(w):
            out[r, c] = np.sqrt((dr2 + (sc - c) ** 2).min())
    return out


def dijkstra_geodesic(slowness: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """8-connected shortest path; edge weight = step length x mean endpoint slowness."""
    h, w = slowness.shape
    dist = np.full((h, w), np.inf)
    heap = []
    for r, c in zip(*np.nonzero(seeds)):
        dist[r, c] = 0.0
        heap.append((0.0, int(r), int(c)))
    heapq.heapify(heap)
    moves = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    while heap:
        d, r, c = heapq.heappop(heap)
        if d > dist[r, c]:
            continue
        for dr, dc in moves:
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w:
                step = math.hypot(dr, dc) * 0.5 * (slowness[r, c] + slowness[rr, cc])
                nd = d + step
                if nd < dist[rr, cc]:
                    dist[rr, cc] = nd
                    heapq.heappush(heap, (nd, rr, cc))
    return dist


def point_in_polygon_even_odd(px: float, py: float, verts) -> bool:
    """Even-odd crossing test, true also for points exactly on an edge."""
    n = len(verts)
    # on-edge check
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        cross = (px - x1) * (y2 - y1) - (py - y1) * (x2 - x1)
        if cross == 0:
            dot = (px - x1) * (x2 - x1) + (py - y1) * (y2 - y1)
            if 0 <= dot <= (x2 - x1) ** 2 + (y2 - y1) ** 2:
                return True
    inside = False
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < xint:
                inside = not inside
    return inside


def brute_boundary(mask: np.ndarray, exclude_border: bool) -> np.ndarray:
    """4-adjacency boundary via an explicit neighbor scan."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    for r in range(h):
        for c in range(w):
            if not mask[r, c]:
                continue
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and not mask[rr, cc]:
                    out[r, c] = True
                    break
    if exclude_border:
        out[0, :] = out[-1, :] = False
        out[:, 0] = out[:, -1] = False
    return out


def brute_local_means(img: np.ndarray, region: np.ndarray, radius: float):
    """Disk means by explicit scan, with the global-side-mean fallback."""
    h, w = img.shape
    glob_in = img[region].mean()
    glob_out = img[~region].mean()
    lc1 = np.empty((h, w))
    lc2 = np.empty((h, w))
    rad = int(math.ceil(radius))
    for r in range(h):
        for c in range(w):
            s1 = n1 = s2 = n2 = 0.0
            for rr in range(max(0, r - rad), min(h, r + rad + 1)):
                for cc in range(max(0, c - rad), min(w, c + rad + 1)):
                    if (rr - r) ** 2 + (cc - c) ** 2 < radius * radius:
                        if region[rr, cc]:
                            s1 += img[rr, cc]
                            n1 += 1
                        else:
                            s2 += img[rr, cc]
                            n2 += 1
            lc1[r, c] = s1 / n1 if n1 > 0 else glob_in
            lc2[r, c] = s2 / n2 if n2 > 0 else glob_out
    return lc1, lc2


def brute_lsf(img: np.ndarray, lc: np.ndarray, window: int) -> np.ndarray:
    """Inverse-distance weighted squared deviations over the window."""
    h, w = img.shape
    half = window // 2
    out = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            acc = 0.0
            for rr in range(max(0, r - half), min(h, r + half + 1)):
                for cc in range(max(0, c - half), min(w, c + half + 1)):
                    if rr == r and cc == c:
                        continue
                    d = math.hypot(rr - r, cc - c)
                    acc += (img[rr, cc] - lc[r, c]) ** 2 / d
            out[r, c] = acc
    return out


def brute_lsm_energy(img, di, T, window, radius, lam1, lam2):
    """Full double-loop evaluation of the two-sided similarity energy."""
    region = di <= T
    lc1, lc2 = brute_local_means(img, region, radius)
    lsf1 = brute_lsf(img, lc1, window)
    lsf2 = brute_lsf(img, lc2, window)
    return lam1 * lsf1[region].sum() + lam2 * lsf2[~region].sum()


def brute_dice(a: np.ndarray, b: np.ndarray) -> float:
    inter = 0
    na = nb = 0
    h, w = a.shape
    for r in range(h):
        for c in range(w):
            if a[r, c]:
                na += 1
            if b[r, c]:
                nb += 1
            if a[r, c] and b[r, c]:
                inter += 1
    return 2.0 * inter / (na + nb)


def brute_boundary_rmse(truth: np.ndarray, seg: np.ndarray) -> float:
    tb = brute_boundary(truth, True)
    sb = brute_boundary(seg, True)
    tpts = np.argwhere(tb)
    total = 0.0
    n = 0
    for r, c in np.argwhere(sb):
        d2 = ((tpts[:, 0] - r) ** 2 + (tpts[:, 1] - c) ** 2).min()
        total += d2
        n += 1
    return math.sqrt(total / n)
