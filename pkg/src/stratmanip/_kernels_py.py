"""Reference implementation of the hot kernels (numpy + Python loops).

The compiled module ``_kernels`` exposes the same functions with the same
signatures; ``kernels`` picks one at import time.
"""

from __future__ import annotations

import math

import numpy as np

FREE, BLOCKED, MIXED = 0, 1, 2
MODE_CONTACT, MODE_FREE, MODE_FIXED = 0, 1, 2
TWO_PI = 2.0 * math.pi
# Outward rounding applied to trigonometric interval bounds.
_PAD = 1e-12


def _cos_range(a, b):
    ca = np.cos(a)
    cb = np.cos(b)
    lo = np.minimum(ca, cb)
    hi = np.maximum(ca, cb)
    k = np.ceil(a / TWO_PI)
    hi = np.where(k * TWO_PI <= b, 1.0, hi)
    k = np.ceil((a - math.pi) / TWO_PI)
    lo = np.where(math.pi + k * TWO_PI <= b, -1.0, lo)
    return lo - _PAD, hi + _PAD


def _sin_range(a, b):
    return _cos_range(a - 0.5 * math.pi, b - 0.5 * math.pi)


def _min_abs(lo, hi):
    return np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))


def _max_abs(lo, hi):
    return np.maximum(np.abs(lo), np.abs(hi))


def _pair_gap(dx, dy, rsum):
    """Interval of |d| - rsum over the difference box (dx, dy)."""
    low = np.hypot(_min_abs(*dx), _min_abs(*dy)) - rsum
    high = np.hypot(_max_abs(*dx), _max_abs(*dy)) - rsum
    return low, high


def _points_signed_distance(px, py, verts):
    """Signed distance of points (arrays of equal shape) to a convex CCW polygon."""
    a = verts
    b = np.roll(verts, -1, axis=0)
    shape = px.shape
    px = px.reshape(-1, 1)
    py = py.reshape(-1, 1)
    ex = (b[:, 0] - a[:, 0])[None, :]
    ey = (b[:, 1] - a[:, 1])[None, :]
    apx = px - a[None, :, 0]
    apy = py - a[None, :, 1]
    cross = ex * apy - ey * apx
    inside = np.all(cross >= 0, axis=1)
    denom = ex * ex + ey * ey
    t = np.clip((apx * ex + apy * ey) / denom, 0.0, 1.0)
    d = np.hypot(apx - t * ex, apy - t * ey).min(axis=1)
    return np.where(inside, -d, d).reshape(shape)


def _box_polygon_gap(xl, xh, yl, yh, r, verts):
    """Lower and upper bounds of (signed distance - r) over a box of centres."""
    cx = np.stack([xl, xh, xh, xl], axis=1)
    cy = np.stack([yl, yl, yh, yh], axis=1)
    upper = _points_signed_distance(cx, cy, verts).max(axis=1) - r

    a = verts
    b = np.roll(verts, -1, axis=0)
    nx = b[:, 1] - a[:, 1]
    ny = -(b[:, 0] - a[:, 0])
    offs = nx * a[:, 0] + ny * a[:, 1]
    # Minimum of n . c over the box corners for each outward edge normal.
    proj_min = np.minimum(xl[:, None] * nx, xh[:, None] * nx) + np.minimum(
        yl[:, None] * ny, yh[:, None] * ny
    )
    separated = np.any(proj_min > offs[None, :], axis=1)
    separated |= (verts[:, 0].max() < xl) | (verts[:, 0].min() > xh)
    separated |= (verts[:, 1].max() < yl) | (verts[:, 1].min() > yh)

    lower = np.full(xl.shape, -np.inf)
    idx = np.nonzero(separated)[0]
    if len(idx):
        sxl, sxh, syl, syh = xl[idx], xh[idx], yl[idx], yh[idx]
        # Polygon vertices to the box.
        dx = np.maximum(np.maximum(sxl[:, None] - verts[None, :, 0], verts[None, :, 0] - sxh[:, None]), 0)
        dy = np.maximum(np.maximum(syl[:, None] - verts[None, :, 1], verts[None, :, 1] - syh[:, None]), 0)
        dist = np.hypot(dx, dy).min(axis=1)
        # Box corners to polygon edges (corners are outside since boxes are disjoint).
        scx = cx[idx].reshape(-1, 1)
        scy = cy[idx].reshape(-1, 1)
        ex = (b[:, 0] - a[:, 0])[None, :]
        ey = (b[:, 1] - a[:, 1])[None, :]
        apx = scx - a[None, :, 0]
        apy = scy - a[None, :, 1]
        t = np.clip((apx * ex + apy * ey) / (ex * ex + ey * ey), 0.0, 1.0)
        dc = np.hypot(apx - t * ex, apy - t * ey).min(axis=1).reshape(-1, 4).min(axis=1)
        lower[idx] = np.minimum(dist, dc) - r
    return lower, upper


def classify_boxes(lo, hi, ws, radii, mode, dim, fixed, rho, verts, start, tol):
    """Label chart boxes FREE (0), BLOCKED (1) or MIXED (2).

    lo, hi: (N, d) chart box bounds. Robot position occupies chart dims 0, 1.
    Object k is described by ``mode[k]``: contacted (angle at ``dim[k]``, offset
    radius ``rho[k]``), free (position at dims ``dim[k]``, ``dim[k]+1``) or fixed
    (placement interval ``fixed[k] = (xlo, xhi, ylo, yhi)``).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n_box = lo.shape[0]
    n = len(mode)
    free = np.ones(n_box, dtype=bool)
    blocked = np.zeros(n_box, dtype=bool)

    def strict(low, high):
        nonlocal free, blocked
        free &= low > 0
        blocked |= high <= 0

    def loose(low, high):
        nonlocal free, blocked
        free &= low >= -tol
        blocked |= high < -tol

    rx = (lo[:, 0], hi[:, 0])
    ry = (lo[:, 1], hi[:, 1])
    # Body boxes: robot first, then objects. Contacted objects also keep their
    # offset box relative to the robot for tighter pairwise bounds.
    bx = [rx]
    by = [ry]
    off = [None] * n
    for k in range(n):
        if mode[k] == MODE_CONTACT:
            a = dim[k]
            clo, chi = _cos_range(lo[:, a], hi[:, a])
            slo, shi = _sin_range(lo[:, a], hi[:, a])
            ox = (rho[k] * clo, rho[k] * chi)
            oy = (rho[k] * slo, rho[k] * shi)
            off[k] = (ox, oy)
            bx.append((rx[0] + ox[0], rx[1] + ox[1]))
            by.append((ry[0] + oy[0], ry[1] + oy[1]))
        elif mode[k] == MODE_FREE:
            a = dim[k]
            bx.append((lo[:, a], hi[:, a]))
            by.append((lo[:, a + 1], hi[:, a + 1]))
        else:
            bx.append((np.full(n_box, fixed[k, 0]), np.full(n_box, fixed[k, 1])))
            by.append((np.full(n_box, fixed[k, 2]), np.full(n_box, fixed[k, 3])))

    xmin, ymin, xmax, ymax = ws
    for b in range(n + 1):
        r = radii[b]
        xl, xh = bx[b]
        yl, yh = by[b]
        loose(xl - r - xmin, xh - r - xmin)
        loose(xmax - xh - r, xmax - xl - r)
        loose(yl - r - ymin, yh - r - ymin)
        loose(ymax - yh - r, ymax - yl - r)

    for p in range(len(start) - 1):
        pv = verts[start[p] : start[p + 1]]
        for b in range(n + 1):
            low, high = _box_polygon_gap(bx[b][0], bx[b][1], by[b][0], by[b][1], radii[b], pv)
            if b == 0:
                strict(low, high)
            else:
                loose(low, high)

    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            ki, kj = i - 1, j - 1
            ci = i > 0 and mode[ki] == MODE_CONTACT
            cj = mode[kj] == MODE_CONTACT
            if i == 0 and cj:
                continue  # contact by construction
            if ci and cj:
                (oxi, oyi), (oxj, oyj) = off[ki], off[kj]
                dx = (oxi[0] - oxj[1], oxi[1] - oxj[0])
                dy = (oyi[0] - oyj[1], oyi[1] - oyj[0])
            else:
                dx = (bx[i][0] - bx[j][1], bx[i][1] - bx[j][0])
                dy = (by[i][0] - by[j][1], by[i][1] - by[j][0])
            loose(*_pair_gap(dx, dy, radii[i] + radii[j]))

    out = np.full(n_box, MIXED, dtype=np.int8)
    out[blocked] = BLOCKED
    out[free & ~blocked] = FREE
    return out


# --- subdivision tree queries ----------------------------------------------


def query_leaves(node_split, node_mid, node_child, node_leaf, qlo, qhi):
    """Leaf ids whose half-open integer boxes meet the half-open box [qlo, qhi)."""
    out = []
    stack = [0]
    while stack:
        k = stack.pop()
        s = node_split[k]
        if s < 0:
            out.append(int(node_leaf[k]))
            continue
        m = node_mid[k]
        if qhi[s] > m:
            stack.append(node_child[k] + 1)
        if qlo[s] < m:
            stack.append(node_child[k])
    return out


def facet_pairs(node_split, node_mid, node_child, node_leaf, ilo, ihi, full, wrap):
    """All unordered pairs of leaves sharing a (d-1)-dimensional facet."""
    n_leaf, d = ilo.shape
    pairs = set()
    qlo = np.empty(d, dtype=np.int64)
    qhi = np.empty(d, dtype=np.int64)
    for a in range(n_leaf):
        for k in range(d):
            qlo[:] = ilo[a]
            qhi[:] = ihi[a]
            if ihi[a, k] < full[k]:
                qlo[k] = ihi[a, k]
            elif wrap[k] and not (ilo[a, k] == 0 and ihi[a, k] == full[k]):
                qlo[k] = 0
            else:
                continue
            qhi[k] = qlo[k] + 1
            for b in query_leaves(node_split, node_mid, node_child, node_leaf, qlo, qhi):
                if b != a:
                    pairs.add((a, b) if a < b else (b, a))
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    return np.array(sorted(pairs), dtype=np.int64)


def locate_points(node_split, node_mid, node_child, node_leaf, pts):
    """For each point (in fractional finest-grid units) the lowest-id leaf whose
    closed box contains it."""
    out = np.empty(len(pts), dtype=np.int64)
    for i, p in enumerate(pts):
        best = -1
        stack = [0]
        while stack:
            k = stack.pop()
            s = node_split[k]
            if s < 0:
                leaf = node_leaf[k]
                if best < 0 or leaf < best:
                    best = leaf
                continue
            m = node_mid[k]
            if p[s] <= m:
                stack.append(node_child[k])
            if p[s] >= m:
                stack.append(node_child[k] + 1)
        out[i] = best
    return out
