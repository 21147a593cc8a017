"""Numba-compiled inner loops: wavefront propagation, ray casting, descent.

Everything here operates on plain numpy arrays indexed [row, col] so the
kernels stay cacheable and free of Python objects. Wrappers with friendlier
signatures live in the public modules.
"""

import numpy as np
from numba import njit

SQRT2 = np.sqrt(2.0)


@njit(cache=True)
def _heap_push(heap_v, heap_i, size, value, idx):
    heap_v[size] = value
    heap_i[size] = idx
    j = size
    while j > 0:
        p = (j - 1) // 2
        if heap_v[p] > heap_v[j] or (heap_v[p] == heap_v[j] and heap_i[p] > heap_i[j]):
            heap_v[p], heap_v[j] = heap_v[j], heap_v[p]
            heap_i[p], heap_i[j] = heap_i[j], heap_i[p]
            j = p
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(heap_v, heap_i, size):
    value = heap_v[0]
    idx = heap_i[0]
    size -= 1
    heap_v[0] = heap_v[size]
    heap_i[0] = heap_i[size]
    j = 0
    while True:
        l = 2 * j + 1
        r = l + 1
        s = j
        if l < size and (heap_v[l] < heap_v[s] or (heap_v[l] == heap_v[s] and heap_i[l] < heap_i[s])):
            s = l
        if r < size and (heap_v[r] < heap_v[s] or (heap_v[r] == heap_v[s] and heap_i[r] < heap_i[s])):
            s = r
        if s == j:
            break
        heap_v[j], heap_v[s] = heap_v[s], heap_v[j]
        heap_i[j], heap_i[s] = heap_i[s], heap_i[j]
        j = s
    return value, idx, size


@njit(cache=True)
def wavefront(speed, src_rows, src_cols, h, labels_out, want_labels):
    """Arrival times of a front crossing the 8-connected grid.

    speed[r, c] is the local front speed in m/s (<= 0 means impassable),
    h the cell edge length in meters. Ties pop by (value, row-major index)
    so the result is reproducible bit for bit. When want_labels is set,
    labels_out receives the index of the source whose front arrives first.
    Returns the arrival-time array with np.inf marking unreached cells.
    """
    H, W = speed.shape
    n = H * W
    times = np.full(n, np.inf)
    done = np.zeros(n, np.uint8)
    heap_v = np.empty(n + 8 * n, np.float64)
    heap_i = np.empty(n + 8 * n, np.int64)
    size = 0
    for k in range(src_rows.shape[0]):
        idx = src_rows[k] * W + src_cols[k]
        times[idx] = 0.0
        if want_labels:
            labels_out[idx] = k
        size = _heap_push(heap_v, heap_i, size, 0.0, idx)
    while size > 0:
        value, idx, size = _heap_pop(heap_v, heap_i, size)
        if done[idx]:
            continue
        done[idx] = 1
        row = idx // W
        col = idx % W
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                if dr == 0 and dc == 0:
                    continue
                nr = row + dr
                nc = col + dc
                if nr < 0 or nr >= H or nc < 0 or nc >= W:
                    continue
                nidx = nr * W + nc
                if done[nidx]:
                    continue
                f = speed[nr, nc]
                if f <= 0.0:
                    continue
                step = h if (dr == 0 or dc == 0) else h * SQRT2
                cand = value + step / f
                if cand < times[nidx]:
                    times[nidx] = cand
                    if want_labels:
                        labels_out[nidx] = labels_out[idx]
                    size = _heap_push(heap_v, heap_i, size, cand, nidx)
    return times.reshape(H, W)


@njit(cache=True)
def reachable_mask(passable, row0, col0):
    """8-connected flood fill over passable cells from one start cell."""
    H, W = passable.shape
    out = np.zeros((H, W), np.uint8)
    if not passable[row0, col0]:
        return out
    stack = np.empty((H * W, 2), np.int64)
    top = 0
    stack[top, 0] = row0
    stack[top, 1] = col0
    top += 1
    out[row0, col0] = 1
    while top > 0:
        top -= 1
        r = stack[top, 0]
        c = stack[top, 1]
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                if dr == 0 and dc == 0:
                    continue
                nr = r + dr
                nc = c + dc
                if nr < 0 or nr >= H or nc < 0 or nc >= W:
                    continue
                if out[nr, nc] or not passable[nr, nc]:
                    continue
                out[nr, nc] = 1
                stack[top, 0] = nr
                stack[top, 1] = nc
                top += 1
    return out


@njit(cache=True)
def descend_path(values, row0, col0, max_steps):
    """Steepest descent over the 8-neighborhood down to a zero-valued cell.

    Returns an (n, 2) array of [row, col] steps, or an empty (0, 2) array
    when the walk gets stuck in a positive-valued local minimum (which a
    consistent arrival-time field cannot produce).
    """
    H, W = values.shape
    path = np.empty((max_steps, 2), np.int64)
    r, c = row0, col0
    count = 0
    path[count, 0] = r
    path[count, 1] = c
    count += 1
    while values[r, c] > 0.0 and count < max_steps:
        # Neighbors scan in row-major order, so ties keep the lowest index.
        best = values[r, c]
        br, bc = -1, -1
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                if dr == 0 and dc == 0:
                    continue
                nr = r + dr
                nc = c + dc
                if nr < 0 or nr >= H or nc < 0 or nc >= W:
                    continue
                v = values[nr, nc]
                if v < best:
                    best = v
                    br, bc = nr, nc
        if br < 0:
            return np.empty((0, 2), np.int64)
        r, c = br, bc
        path[count, 0] = r
        path[count, 1] = c
        count += 1
    if values[r, c] > 0.0:
        return np.empty((0, 2), np.int64)
    return path[:count].copy()


@njit(cache=True)
def ray_clear(blocked, r0, c0, r1, c1):
    """Bresenham line-of-sight from (r0,c0) to (r1,c1) over cell centers.

    Intermediate cells must be unblocked; the target cell itself may be
    blocked (an obstacle terminating the ray is still visible). Diagonal
    steps squeezing between two touching blocked cells are rejected.
    """
    dx = abs(c1 - c0)
    dy = -abs(r1 - r0)
    sx = 1 if c0 < c1 else -1
    sy = 1 if r0 < r1 else -1
    err = dx + dy
    r, c = r0, c0
    while True:
        if r == r1 and c == c1:
            return True
        e2 = 2 * err
        step_x = e2 >= dy
        step_y = e2 <= dx
        if step_x and step_y:
            if blocked[r, c + sx] and blocked[r + sy, c]:
                return False
            err += dy + dx
            r += sy
            c += sx
        elif step_x:
            err += dy
            c += sx
        else:
            err += dx
            r += sy
        if r == r1 and c == c1:
            return True
        if blocked[r, c]:
            return False


@njit(cache=True)
def visibility_batch(blocked, r0, c0, rows, cols, r_cells):
    """Per-target visibility flags for explicit candidate cells."""
    n = rows.shape[0]
    out = np.zeros(n, np.uint8)
    limit2 = r_cells * r_cells
    for k in range(n):
        dr = rows[k] - r0
        dc = cols[k] - c0
        if dr * dr + dc * dc > limit2:
            continue
        if ray_clear(blocked, r0, c0, rows[k], cols[k]):
            out[k] = 1
    return out


@njit(cache=True)
def newly_visible_cells(blocked, candidate, r0, c0, r_cells):
    """Visible subset of a candidate mask around (r0,c0), as an (n,2) array."""
    H, W = candidate.shape
    rad = int(r_cells) + 1
    rlo = max(0, r0 - rad)
    rhi = min(H, r0 + rad + 1)
    clo = max(0, c0 - rad)
    chi = min(W, c0 + rad + 1)
    limit2 = r_cells * r_cells
    buf = np.empty(((rhi - rlo) * (chi - clo), 2), np.int64)
    count = 0
    for r in range(rlo, rhi):
        for c in range(clo, chi):
            if not candidate[r, c]:
                continue
            dr = r - r0
            dc = c - c0
            if dr * dr + dc * dc > limit2:
                continue
            if ray_clear(blocked, r0, c0, r, c):
                buf[count, 0] = r
                buf[count, 1] = c
                count += 1
    return buf[:count].copy()


@njit(cache=True)
def min_dist_to_cells(rows, cols, pr, pc):
    """Minimum center-to-center distance (in cells) from (pr,pc) to a cell list."""
    best = np.inf
    for k in range(rows.shape[0]):
        dr = rows[k] - pr
        dc = cols[k] - pc
        d = np.sqrt(dr * dr + dc * dc)
        if d < best:
            best = d
    return best


@njit(cache=True)
def path_obstacle_clearance(path_rows, path_cols, obs_rows, obs_cols):
    """Per-path-cell distance (in cells) to the nearest listed obstacle cell."""
    n = path_rows.shape[0]
    out = np.full(n, np.inf)
    for i in range(n):
        out[i] = min_dist_to_cells(obs_rows, obs_cols, path_rows[i], path_cols[i])
    return out


_WARMED = False


def warm_kernels():
    """Force-compile every jitted kernel on tiny inputs (cached thereafter)."""
    global _WARMED
    if _WARMED:
        return
    speed = np.ones((3, 3))
    rows = np.array([1], np.int64)
    cols = np.array([1], np.int64)
    labels = np.full(9, -1, np.int64)
    t = wavefront(speed, rows, cols, 0.1, labels, True)
    reachable_mask(speed > 0.0, 1, 1)
    descend_path(t, 0, 0, 10)
    blocked = np.zeros((3, 3), dtype=bool)
    ray_clear(blocked, 0, 0, 2, 2)
    visibility_batch(blocked, 0, 0, rows, cols, 5.0)
    newly_visible_cells(blocked, speed > 0.0, 1, 1, 5.0)
    min_dist_to_cells(rows, cols, 0, 0)
    path_obstacle_clearance(rows, cols, rows, cols)
    _WARMED = True
