"""Planar geometry helpers: convex hulls, polygon queries, raster coverage."""

import numpy as np

from .grid import Cell


def convex_hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Monotone-chain convex hull, counterclockwise, no collinear vertices.

    Degenerate inputs collapse: one unique point gives a single vertex,
    collinear points give the two extreme vertices.
    """
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    # All-collinear inputs collapse to the two extreme points.
    return hull if len(hull) >= 3 else [pts[0], pts[-1]]


def point_in_hull(x: float, y: float, hull: list[tuple[float, float]], eps: float = 1e-9) -> bool:
    """Point-inside-or-on test for a counterclockwise convex polygon."""
    n = len(hull)
    if n == 1:
        return abs(x - hull[0][0]) <= eps and abs(y - hull[0][1]) <= eps
    if n == 2:
        (x0, y0), (x1, y1) = hull
        dx, dy = x1 - x0, y1 - y0
        L2 = dx * dx + dy * dy
        t = ((x - x0) * dx + (y - y0) * dy) / L2
        if t < -eps or t > 1 + eps:
            return False
        px, py = x0 + t * dx, y0 + t * dy
        return (x - px) ** 2 + (y - py) ** 2 <= eps
    for i in range(n):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % n]
        if (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) < -eps:
            return False
    return True


def hulls_interiors_intersect(a: list[tuple[float, float]], b: list[tuple[float, float]]) -> bool:
    """Separating-axis test for positive-area overlap of two convex polygons.

    Touching boundaries do not count as intersection.
    """
    if len(a) < 3 or len(b) < 3:
        # Degenerate hulls have empty interiors.
        return False

    def axes(poly):
        out = []
        n = len(poly)
        for i in range(n):
            x0, y0 = poly[i]
            x1, y1 = poly[(i + 1) % n]
            out.append((y0 - y1, x1 - x0))
        return out

    for ax, ay in axes(a) + axes(b):
        pa = [ax * x + ay * y for x, y in a]
        pb = [ax * x + ay * y for x, y in b]
        if max(pa) <= min(pb) + 1e-12 or max(pb) <= min(pa) + 1e-12:
            return False
    return True


def rasterize_hull(hull: list[tuple[float, float]], resolution: float,
                   width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid cells whose centers lie inside or on a convex polygon.

    Returns (rows, cols) arrays. Coordinates are metric; cell (c, r) has
    its center at ((c + 0.5) * res, (r + 0.5) * res).
    """
    if not hull:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    xs = [p[0] for p in hull]
    ys = [p[1] for p in hull]
    c_lo = max(0, int(np.floor(min(xs) / resolution - 0.5)))
    c_hi = min(width - 1, int(np.ceil(max(xs) / resolution - 0.5)))
    r_lo = max(0, int(np.floor(min(ys) / resolution - 0.5)))
    r_hi = min(height - 1, int(np.ceil(max(ys) / resolution - 0.5)))
    if c_hi < c_lo or r_hi < r_lo:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    rows = []
    cols = []
    for r in range(r_lo, r_hi + 1):
        y = (r + 0.5) * resolution
        for c in range(c_lo, c_hi + 1):
            x = (c + 0.5) * resolution
            if point_in_hull(x, y, hull, eps=1e-9):
                rows.append(r)
                cols.append(c)
    return np.asarray(rows, np.int64), np.asarray(cols, np.int64)


def rect_corners(x: float, y: float, theta: float,
                 half_len: float, half_wid: float) -> list[tuple[float, float]]:
    """Corner coordinates of an oriented rectangle, counterclockwise."""
    ct, st = np.cos(theta), np.sin(theta)
    out = []
    for dx, dy in ((half_len, half_wid), (-half_len, half_wid),
                   (-half_len, -half_wid), (half_len, -half_wid)):
        out.append((x + dx * ct - dy * st, y + dx * st + dy * ct))
    return out


def point_rect_distance(px: float, py: float, x: float, y: float, theta: float,
                        half_len: float, half_wid: float) -> float:
    """Distance from a point to an oriented rectangle (0 inside)."""
    ct, st = np.cos(theta), np.sin(theta)
    lx = (px - x) * ct + (py - y) * st
    ly = -(px - x) * st + (py - y) * ct
    dx = max(abs(lx) - half_len, 0.0)
    dy = max(abs(ly) - half_wid, 0.0)
    return float(np.hypot(dx, dy))


def cells_in_rect(x: float, y: float, theta: float, half_len: float, half_wid: float,
                  resolution: float, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid cells whose centers fall within an oriented rectangle."""
    reach = np.hypot(half_len, half_wid)
    c_lo = max(0, int((x - reach) / resolution) - 1)
    c_hi = min(width - 1, int((x + reach) / resolution) + 1)
    r_lo = max(0, int((y - reach) / resolution) - 1)
    r_hi = min(height - 1, int((y + reach) / resolution) + 1)
    if c_hi < c_lo or r_hi < r_lo:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    cs = np.arange(c_lo, c_hi + 1)
    rs = np.arange(r_lo, r_hi + 1)
    cx = (cs + 0.5) * resolution - x
    cy = (rs + 0.5) * resolution - y
    gx, gy = np.meshgrid(cx, cy)
    ct, st = np.cos(theta), np.sin(theta)
    lx = gx * ct + gy * st
    ly = -gx * st + gy * ct
    inside = (np.abs(lx) <= half_len) & (np.abs(ly) <= half_wid)
    rr, cc = np.nonzero(inside)
    return rs[rr], cs[cc]


def disk_offsets(radius_cells: float) -> tuple[np.ndarray, np.ndarray]:
    """Relative (rows, cols) offsets covering a closed disk of the given radius."""
    r = int(np.floor(radius_cells + 1e-9))
    dr, dc = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    keep = dr * dr + dc * dc <= radius_cells * radius_cells + 1e-9
    return dr[keep], dc[keep]


def segment_cells(x0: float, y0: float, x1: float, y1: float, resolution: float,
                  width: int, height: int) -> list[Cell]:
    """Cells touched by sampling a metric segment at sub-cell spacing."""
    length = float(np.hypot(x1 - x0, y1 - y0))
    n = max(1, int(np.ceil(length / (0.5 * resolution))))
    out = []
    last = None
    for i in range(n + 1):
        t = i / n
        x = x0 + t * (x1 - x0)
        y = y0 + t * (y1 - y0)
        c = int(x / resolution)
        r = int(y / resolution)
        if 0 <= c < width and 0 <= r < height and (c, r) != last:
            out.append(Cell(c, r))
            last = (c, r)
    return out
