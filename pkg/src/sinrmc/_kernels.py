"""Compiled inner loops for the SINR computations.

All kernels take plain float64 arrays.  Transmitters are bucketed into a
uniform cell grid (counting sort) so that neighbourhood queries touch only the
cells overlapping the query disk.
"""
import math

import numpy as np
from numba import njit

INF = math.inf


@njit(cache=True, error_model="numpy")
def path_loss_sq(d2, alpha, b2):
    # path loss from a squared distance; b2 is the squared truncation radius
    if d2 >= b2:
        return 0.0
    if d2 == 0.0:
        return INF
    if alpha == 4.0:
        return 1.0 / (d2 * d2)
    return d2 ** (-0.5 * alpha)


@njit(cache=True, error_model="numpy")
def build_grid(pts, x0, y0, cs, nx, ny):
    """Counting sort of ``pts`` into ``nx*ny`` cells of side ``cs``.

    Returns ``(start, order)``: points of cell ``c`` are
    ``order[start[c]:start[c + 1]]``; cells are row-major in (ix, iy).
    """
    n = pts.shape[0]
    cell = np.empty(n, np.int64)
    counts = np.zeros(nx * ny + 1, np.int64)
    for k in range(n):
        ix = int(math.floor((pts[k, 0] - x0) / cs))
        iy = int(math.floor((pts[k, 1] - y0) / cs))
        ix = min(max(ix, 0), nx - 1)
        iy = min(max(iy, 0), ny - 1)
        c = ix * ny + iy
        cell[k] = c
        counts[c + 1] += 1
    for c in range(nx * ny):
        counts[c + 1] += counts[c]
    start = counts.copy()
    fill = counts[:-1].copy()
    order = np.empty(n, np.int64)
    for k in range(n):
        c = cell[k]
        order[fill[c]] = k
        fill[c] += 1
    return start, order


@njit(cache=True, error_model="numpy", fastmath={"reassoc", "contract", "arcp"})
def _row_sum(xs, ys, lo, hi, px, py, alpha, b2):
    acc = 0.0
    if alpha == 4.0:
        for k in range(lo, hi):
            dx = xs[k] - px
            dy = ys[k] - py
            d2 = dx * dx + dy * dy
            acc += 1.0 / (d2 * d2) if d2 < b2 else 0.0
    else:
        for k in range(lo, hi):
            dx = xs[k] - px
            dy = ys[k] - py
            d2 = dx * dx + dy * dy
            acc += d2 ** (-0.5 * alpha) if d2 < b2 else 0.0
    return acc


@njit(cache=True, error_model="numpy")
def _field_at(px, py, xs, ys, start, x0, y0, cs, nx, ny, reach, alpha, b2):
    # xs, ys are sorted by cell so that each grid column is one contiguous run
    ix = int(math.floor((px - x0) / cs))
    iy = int(math.floor((py - y0) / cs))
    lo_x = max(ix - reach, 0)
    hi_x = min(ix + reach, nx - 1)
    acc = 0.0
    for cx in range(lo_x, hi_x + 1):
        # smallest |dx| from the query to this column restricts the column's rows
        xl = x0 + cx * cs
        if px < xl:
            gx = xl - px
        elif px > xl + cs:
            gx = px - xl - cs
        else:
            gx = 0.0
        rem = b2 - gx * gx
        if rem <= 0.0:
            continue
        span = reach
        if rem < INF:
            span = min(reach, int(math.ceil(math.sqrt(rem) / cs)))
        lo_y = max(iy - span, 0)
        hi_y = min(iy + span, ny - 1)
        if lo_y > hi_y:
            continue
        acc += _row_sum(xs, ys, start[cx * ny + lo_y], start[cx * ny + hi_y + 1], px, py, alpha, b2)
    return acc


def grid_geometry(tx, cs):
    if tx.shape[0] == 0:
        return 0.0, 0.0, 1, 1
    x0 = float(tx[:, 0].min())
    y0 = float(tx[:, 1].min())
    nx = int(math.floor((float(tx[:, 0].max()) - x0) / cs)) + 1
    ny = int(math.floor((float(tx[:, 1].max()) - y0) / cs)) + 1
    return x0, y0, nx, ny


def reach_cells(radius, cs, nx, ny):
    if not math.isfinite(radius):
        return max(nx, ny)
    return min(int(math.ceil(radius / cs)), max(nx, ny))


@njit(cache=True, error_model="numpy")
def field_at_points(pts, xs, ys, start, x0, y0, cs, nx, ny, reach, alpha, b2):
    out = np.empty(pts.shape[0])
    for j in range(pts.shape[0]):
        out[j] = _field_at(pts[j, 0], pts[j, 1], xs, ys, start, x0, y0, cs, nx, ny, reach, alpha, b2)
    return out


@njit(cache=True, error_model="numpy")
def connect_counts(xs, ys, ins, rx, start, x0, y0, cs, nx, ny, reach, alpha, b2, base, t, rc):
    """Per-transmitter number of connectable receivers, in cell-sorted order.

    Only transmitters flagged in ``ins`` act as servers; all transmitters
    interfere.  ``base`` is the noise plus any constant far-field term.  The
    cell side ``cs`` must be at least the connection radius ``rc``.
    """
    counts = np.zeros(xs.shape[0], np.int64)
    rc2 = rc * rc
    cand = np.empty(64, np.int64)
    cand_s = np.empty(64)
    for j in range(rx.shape[0]):
        px = rx[j, 0]
        py = rx[j, 1]
        ix = int(math.floor((px - x0) / cs))
        iy = int(math.floor((py - y0) / cs))
        nc = 0
        smax = 0.0
        near = base
        for cx in range(max(ix - 1, 0), min(ix + 1, nx - 1) + 1):
            lo = start[cx * ny + max(iy - 1, 0)]
            hi = start[cx * ny + min(iy + 1, ny - 1) + 1]
            for k in range(lo, hi):
                dx = xs[k] - px
                dy = ys[k] - py
                d2 = dx * dx + dy * dy
                s = path_loss_sq(d2, alpha, b2)
                near += s
                if ins[k] and d2 <= rc2:
                    if nc == cand.shape[0]:
                        cand = np.concatenate((cand, np.empty(nc, np.int64)))
                        cand_s = np.concatenate((cand_s, np.empty(nc)))
                    cand[nc] = k
                    cand_s[nc] = s
                    smax = max(smax, s)
                    nc += 1
        if nc == 0:
            continue
        # the nearby field alone can already rule out every candidate
        if smax < INF and near < INF and smax < t * (near - smax):
            continue
        total = base + _field_at(px, py, xs, ys, start, x0, y0, cs, nx, ny, reach, alpha, b2)
        for m in range(nc):
            s = cand_s[m]
            if s == INF:
                counts[cand[m]] += 1
            elif total == INF:
                continue
            elif s >= t * (total - s):
                counts[cand[m]] += 1
    return counts


@njit(cache=True, error_model="numpy")
def good_cells_brute(tx, alpha, b2, w, t, rc, h, K):
    """Midpoint count of good cells by direct summation (reference path)."""
    rc2 = rc * rc
    count = 0
    for a in range(-K, K + 1):
        for c in range(-K, K + 1):
            py = c * h
            px = a * h
            r2 = px * px + py * py
            if r2 > rc2:
                continue
            s = path_loss_sq(r2, alpha, b2)
            acc = w
            for k in range(tx.shape[0]):
                dx = tx[k, 0] - px
                dy = tx[k, 1] - py
                acc += path_loss_sq(dx * dx + dy * dy, alpha, b2)
            if acc == INF:
                continue
            if s >= t * acc:
                count += 1
    return count


@njit(cache=True, error_model="numpy")
def _pl_dist(d, alpha, b):
    # path loss from a plain distance
    if d >= b:
        return 0.0
    if alpha == 4.0:
        d2 = d * d
        return 1.0 / (d2 * d2)
    return d ** (-alpha)


@njit(cache=True, error_model="numpy")
def good_cells_tiled(tx, alpha, b2, w, t, rc, h, K, tile, near):
    """Same count as ``good_cells_brute`` using tile-wise interference bounds.

    Cells are grouped in ``tile x tile`` blocks.  Transmitters within
    ``near`` of a block's bounding circle are summed exactly per cell; the rest
    contribute a per-block lower and upper bound.  A cell whose decision is not
    settled by the bounds falls back to the exact sum.
    """
    rc2 = rc * rc
    b = math.sqrt(b2)
    n = tx.shape[0]
    xs = np.ascontiguousarray(tx[:, 0])
    ys = np.ascontiguousarray(tx[:, 1])
    side = 2 * K + 1
    ntile = (side + tile - 1) // tile
    nxs = np.empty(n)
    nys = np.empty(n)
    fxs = np.empty(n)
    fys = np.empty(n)
    count = 0
    for ta in range(ntile):
        a0 = -K + ta * tile
        a1 = min(a0 + tile - 1, K)
        for tc in range(ntile):
            c0 = -K + tc * tile
            c1 = min(c0 + tile - 1, K)
            xa = a0 * h
            xb = a1 * h
            ya = c0 * h
            yb = c1 * h
            # skip tiles entirely outside the connection disk
            mx = 0.0 if xa <= 0.0 <= xb else min(abs(xa), abs(xb))
            my = 0.0 if ya <= 0.0 <= yb else min(abs(ya), abs(yb))
            if mx * mx + my * my > rc2:
                continue
            cx = 0.5 * (xa + xb)
            cy = 0.5 * (ya + yb)
            delta = 0.5 * math.sqrt((xb - xa) ** 2 + (yb - ya) ** 2)
            lim2 = (delta + near) ** 2
            nn = 0
            nf = 0
            far_lo = 0.0
            far_hi = 0.0
            for k in range(n):
                dx = xs[k] - cx
                dy = ys[k] - cy
                d2 = dx * dx + dy * dy
                if d2 <= lim2:
                    nxs[nn] = xs[k]
                    nys[nn] = ys[k]
                    nn += 1
                else:
                    d = math.sqrt(d2)
                    if d - delta >= b:
                        continue
                    fxs[nf] = xs[k]
                    fys[nf] = ys[k]
                    nf += 1
                    far_hi += _pl_dist(d - delta, alpha, b)
                    far_lo += _pl_dist(d + delta, alpha, b)
            for a in range(a0, a1 + 1):
                px = a * h
                for c in range(c0, c1 + 1):
                    py = c * h
                    r2 = px * px + py * py
                    if r2 > rc2:
                        continue
                    s = path_loss_sq(r2, alpha, b2)
                    acc = w + _row_sum(nxs, nys, 0, nn, px, py, alpha, b2)
                    if acc == INF:
                        continue
                    if s < t * (acc + far_lo) * (1.0 - 1e-12):
                        continue
                    if s >= t * (acc + far_hi) * (1.0 + 1e-12):
                        count += 1
                        continue
                    acc += _row_sum(fxs, fys, 0, nf, px, py, alpha, b2)
                    if s >= t * acc:
                        count += 1
    return count


@njit(cache=True, error_model="numpy")
def connect_counts_bounded(xs, ys, ins, rx, start, x0, y0, cs, nx, ny, reach, alpha, b2,
                           base, t, rc, near_reach, far_lo, far_hi):
    """``connect_counts`` with the far field replaced by per-cell bounds.

    ``far_lo`` / ``far_hi`` (shape ``nx*ny``) bound, for a receiver in a given
    cell, the field from all transmitters in cells at Chebyshev offset larger
    than ``near_reach``.  Cells within that offset are summed exactly.  When the
    bounds do not settle a candidate the receiver's full field is summed.
    """
    counts = np.zeros(xs.shape[0], np.int64)
    rc2 = rc * rc
    cand = np.empty(64, np.int64)
    cand_s = np.empty(64)
    for j in range(rx.shape[0]):
        px = rx[j, 0]
        py = rx[j, 1]
        ix = int(math.floor((px - x0) / cs))
        iy = int(math.floor((py - y0) / cs))
        nc = 0
        smax = 0.0
        near1 = base
        for cx in range(max(ix - 1, 0), min(ix + 1, nx - 1) + 1):
            lo = start[cx * ny + max(iy - 1, 0)]
            hi = start[cx * ny + min(iy + 1, ny - 1) + 1]
            for k in range(lo, hi):
                dx = xs[k] - px
                dy = ys[k] - py
                d2 = dx * dx + dy * dy
                s = path_loss_sq(d2, alpha, b2)
                near1 += s
                if ins[k] and d2 <= rc2:
                    if nc == cand.shape[0]:
                        cand = np.concatenate((cand, np.empty(nc, np.int64)))
                        cand_s = np.concatenate((cand_s, np.empty(nc)))
                    cand[nc] = k
                    cand_s[nc] = s
                    smax = max(smax, s)
                    nc += 1
        if nc == 0:
            continue
        if smax < INF and near1 < INF and smax < t * (near1 - smax):
            continue
        cix = min(max(ix, 0), nx - 1)
        ciy = min(max(iy, 0), ny - 1)
        on_grid = ix == cix and iy == ciy
        near = base
        for cx in range(max(ix - near_reach, 0), min(ix + near_reach, nx - 1) + 1):
            lo_y = max(iy - near_reach, 0)
            hi_y = min(iy + near_reach, ny - 1)
            if lo_y > hi_y:
                continue
            near += _row_sum(xs, ys, start[cx * ny + lo_y], start[cx * ny + hi_y + 1], px, py, alpha, b2)
        flo = near + far_lo[cix * ny + ciy] if on_grid else -INF
        fhi = near + far_hi[cix * ny + ciy] if on_grid else INF
        total = -1.0
        for m in range(nc):
            s = cand_s[m]
            if s == INF:
                counts[cand[m]] += 1
                continue
            if near == INF:
                continue
            if s >= t * (fhi - s) * (1.0 + 1e-9) + 1e-9:
                counts[cand[m]] += 1
                continue
            if s < t * (flo - s) * (1.0 - 1e-9) - 1e-9:
                continue
            if total < 0.0:
                total = base + _field_at(px, py, xs, ys, start, x0, y0, cs, nx, ny, reach, alpha, b2)
            if s >= t * (total - s):
                counts[cand[m]] += 1
    return counts
