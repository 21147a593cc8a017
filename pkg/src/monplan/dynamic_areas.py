"""Moving-obstacle tracking and the convex dynamic areas built from it.

Visible non-map obstacle cells are clustered, matched to tracks by a
minimum-total-distance assignment with a distance gate, and each track's
recent trajectory is wrapped in a convex hull padded by one obstacle
footprint. Hulls that overlap merge. An area's density, occupied cells over
hull cells, later decides whether the planner treats it as impassable.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from . import geometry
from .grid import Cell, GridMap

FOOTPRINT_RADIUS = 0.3   # half the long side of a human-scale obstacle
ASSOCIATION_GATE_FLOOR = 1.0   # meters
ASSOCIATION_GATE_SPEED = 1.0   # meters per second of track age
HISTORY_WINDOW = 60.0    # seconds of trajectory kept for hulls
TRACK_STALE_AGE = 30.0   # prune a track unseen this long whose spot is visibly empty


class MemoryMode(Enum):
    MEMORIZE_ALL = "MemorizeAll"
    KEEP_POINTS_FORGET_EMPTY_AREAS = "KeepPointsForgetEmptyAreas"
    FORGET_ALL = "ForgetAll"
    FORGET_IN_LOS = "ForgetInLoS"


@dataclass
class ObstacleTrack:
    """Timestamped trajectory of one tracked moving obstacle."""

    id: int
    times: list[float] = field(default_factory=list)
    points: list[tuple[float, float]] = field(default_factory=list)
    last_cells: np.ndarray = field(default_factory=lambda: np.empty((0, 2), np.int64))
    last_seen: float = 0.0
    velocity: tuple[float, float] = (0.0, 0.0)
    suppressed: bool = False

    def observe(self, now: float, point: tuple[float, float], cells: np.ndarray):
        if self.times and now <= self.times[-1]:
            raise ValueError("track timestamps must strictly increase")
        if self.times:
            dt = now - self.times[-1]
            px, py = self.points[-1]
            self.velocity = ((point[0] - px) / dt, (point[1] - py) / dt)
        self.times.append(now)
        self.points.append(point)
        self.last_cells = cells
        self.last_seen = now

    def recent_points(self, now: float, window: float | None) -> list[tuple[float, float]]:
        if window is None:
            return list(self.points)
        cut = now - window
        return [p for t, p in zip(self.times, self.points) if t >= cut]


@dataclass
class DynamicArea:
    """Convex hull over one or more tracks' recent trajectories."""

    hull: list[tuple[float, float]]
    rows: np.ndarray
    cols: np.ndarray
    n_do: int
    density: float
    source_tracks: set[int]
    active: bool = True

    @property
    def member_count(self) -> int:
        return int(self.rows.shape[0])

    def contains_cell(self, row: int, col: int) -> bool:
        return bool(np.any((self.rows == row) & (self.cols == col)))


def cluster_detections(rows: np.ndarray, cols: np.ndarray,
                       gmap: GridMap) -> list[tuple[np.ndarray, tuple[float, float]]]:
    """Group detection cells by 8-connectivity; each cluster reports its
    cell array and metric centroid."""
    if rows.shape[0] == 0:
        return []
    grid = np.zeros((gmap.height, gmap.width), dtype=bool)
    grid[rows, cols] = True
    labels, n = ndimage.label(grid, structure=np.ones((3, 3), dtype=bool))
    out = []
    for g in range(1, n + 1):
        rr, cc = np.nonzero(labels == g)
        cx = float((cc.mean() + 0.5) * gmap.resolution)
        cy = float((rr.mean() + 0.5) * gmap.resolution)
        out.append((np.column_stack([rr, cc]), (cx, cy)))
    return out


def track_obstacles(detections: list[tuple[np.ndarray, tuple[float, float]]],
                    tracks: list[ObstacleTrack], now: float,
                    next_id: int) -> tuple[list[ObstacleTrack], int]:
    """Associate clustered detections to tracks and spawn tracks for the rest.

    Matching minimizes the total centroid distance (optimal assignment), and
    any pairing farther than the gate distance is rejected.
    """
    if not detections:
        return tracks, next_id
    if tracks:
        cost = np.empty((len(detections), len(tracks)))
        gates = np.empty(len(tracks))
        for j, trk in enumerate(tracks):
            gates[j] = max(ASSOCIATION_GATE_FLOOR,
                           ASSOCIATION_GATE_SPEED * (now - trk.last_seen))
            px, py = trk.points[-1]
            for i, (_, (cx, cy)) in enumerate(detections):
                cost[i, j] = np.hypot(cx - px, cy - py)
        feasible = cost <= gates[None, :]
        big = cost.max() + gates.max() + 1.0
        rows_idx, cols_idx = linear_sum_assignment(np.where(feasible, cost, big))
        matched = {}
        for i, j in zip(rows_idx, cols_idx):
            if feasible[i, j]:
                matched[i] = j
    else:
        matched = {}
    for i, (cells, centroid) in enumerate(detections):
        if i in matched:
            tracks[matched[i]].observe(now, centroid, cells)
        else:
            trk = ObstacleTrack(id=next_id)
            next_id += 1
            trk.observe(now, centroid, cells)
            tracks.append(trk)
    return tracks, next_id


def current_obstacle_cells(tracks: list[ObstacleTrack]) -> tuple[np.ndarray, np.ndarray]:
    """Last observed footprint cells over all tracks, deduplicated and sorted."""
    if not tracks:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    stacked = np.concatenate([t.last_cells for t in tracks if t.last_cells.shape[0]]) \
        if any(t.last_cells.shape[0] for t in tracks) else np.empty((0, 2), np.int64)
    if stacked.shape[0] == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    uniq = np.unique(stacked, axis=0)
    return uniq[:, 0], uniq[:, 1]


def _padded_points(points: list[tuple[float, float]], pad: float) -> list[tuple[float, float]]:
    out = []
    for x, y in points:
        out.extend(((x - pad, y - pad), (x - pad, y + pad), (x + pad, y - pad), (x + pad, y + pad)))
    return out


def build_areas(tracks: list[ObstacleTrack], gmap: GridMap, now: float,
                window: float | None = HISTORY_WINDOW,
                footprint_radius: float = FOOTPRINT_RADIUS) -> list[DynamicArea]:
    """One padded convex hull per track, merging hulls whose interiors overlap.

    Merging repeats until all hulls are pairwise interior-disjoint. Density
    is the fraction of hull cells covered by current obstacle footprints.
    """
    groups: list[tuple[set[int], list[tuple[float, float]], bool]] = []
    for trk in tracks:
        pts = trk.recent_points(now, window)
        if not pts:
            continue
        groups.append(({trk.id}, _padded_points(pts, footprint_radius), trk.suppressed))
    # Merge to a fixed point: hull unions can create new overlaps.
    changed = True
    hulls = [geometry.convex_hull(pts) for _, pts, _ in groups]
    while changed:
        changed = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                if geometry.hulls_interiors_intersect(hulls[i], hulls[j]):
                    ids_i, pts_i, sup_i = groups[i]
                    ids_j, pts_j, sup_j = groups[j]
                    groups[i] = (ids_i | ids_j, pts_i + pts_j, sup_i and sup_j)
                    hulls[i] = geometry.convex_hull(groups[i][1])
                    del groups[j]
                    del hulls[j]
                    changed = True
                    break
            if changed:
                break
    occ_rows, occ_cols = current_obstacle_cells(tracks)
    occupied = set(zip(occ_rows.tolist(), occ_cols.tolist()))
    areas = []
    for (ids, _, suppressed), hull in zip(groups, hulls):
        rows, cols = geometry.rasterize_hull(hull, gmap.resolution, gmap.width, gmap.height)
        if rows.shape[0] == 0:
            continue
        n_do = sum((int(r), int(c)) in occupied for r, c in zip(rows, cols))
        density = n_do / rows.shape[0]
        active = (not suppressed) or n_do > 0
        areas.append(DynamicArea(hull=hull, rows=rows, cols=cols, n_do=n_do,
                                 density=density, source_tracks=ids, active=active))
    return areas


def apply_memory_mode(areas: list[DynamicArea], tracks: list[ObstacleTrack],
                      visible: np.ndarray, mode: MemoryMode,
                      ) -> tuple[list[DynamicArea], list[ObstacleTrack]]:
    """Forget or suppress areas according to the configured memory policy.

    visible is a boolean grid of cells currently in line of sight. Suppression
    marks an area inactive without touching its tracks; deletion (ForgetAll)
    drops the source tracks and their histories entirely.
    """
    if not isinstance(mode, MemoryMode):
        raise ValueError(f"unknown memory mode: {mode!r}")
    if mode is MemoryMode.MEMORIZE_ALL:
        return areas, tracks
    by_id = {t.id: t for t in tracks}
    dead_tracks: set[int] = set()
    kept_areas: list[DynamicArea] = []
    for area in areas:
        fully_visible = bool(visible[area.rows, area.cols].all())
        if mode is MemoryMode.KEEP_POINTS_FORGET_EMPTY_AREAS:
            if area.n_do > 0:
                area.active = True
                for tid in area.source_tracks:
                    if tid in by_id:
                        by_id[tid].suppressed = False
            elif fully_visible:
                area.active = False
                for tid in area.source_tracks:
                    if tid in by_id:
                        by_id[tid].suppressed = True
            kept_areas.append(area)
        elif mode is MemoryMode.FORGET_ALL:
            if fully_visible and area.n_do == 0:
                dead_tracks |= area.source_tracks
            else:
                kept_areas.append(area)
        elif mode is MemoryMode.FORGET_IN_LOS:
            if bool(visible[area.rows, area.cols].any()):
                area.active = False
            kept_areas.append(area)
    if dead_tracks:
        tracks = [t for t in tracks if t.id not in dead_tracks]
    return kept_areas, tracks


def prune_stale_tracks(tracks: list[ObstacleTrack], now: float, visible: np.ndarray,
                       stale_age: float = TRACK_STALE_AGE) -> list[ObstacleTrack]:
    """Drop tracks unseen for a long time whose last position is visibly empty."""
    kept = []
    for trk in tracks:
        if now - trk.last_seen > stale_age and trk.last_cells.shape[0]:
            spots = visible[trk.last_cells[:, 0], trk.last_cells[:, 1]]
            if spots.all():
                continue
        kept.append(trk)
    return kept


def inflate(cells: set[Cell], safety: float, gmap: GridMap) -> set[Cell]:
    """Morphological dilation of a cell set by a closed disk of radius safety."""
    if safety < 0:
        raise ValueError("safety distance must be non-negative")
    if not cells or safety == 0:
        return set(cells)
    mask = np.zeros((gmap.height, gmap.width), dtype=bool)
    for c in cells:
        mask[c.row, c.col] = True
    out = inflate_mask(mask, safety / gmap.resolution)
    return {Cell(int(c), int(r)) for r, c in zip(*np.nonzero(out))}


def inflate_mask(mask: np.ndarray, radius_cells: float) -> np.ndarray:
    if radius_cells <= 0 or not mask.any():
        return mask.copy()
    r = int(np.floor(radius_cells + 1e-9))
    dr, dc = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    footprint = dr * dr + dc * dc <= radius_cells * radius_cells + 1e-9
    return ndimage.binary_dilation(mask, structure=footprint)


def project_tracks(tracks: list[ObstacleTrack], horizon: float,
                   gmap: GridMap) -> set[Cell]:
    """Pseudo-obstacle cells from straight-line extrapolation of each track.

    Includes every track's current footprint; moving tracks additionally paint
    the cells along their predicted travel up to the horizon, stopping at the
    first static obstacle.
    """
    if horizon < 0:
        raise ValueError("projection horizon must be non-negative")
    if horizon == 0:
        return set()
    out: set[Cell] = set()
    for trk in tracks:
        for r, c in trk.last_cells:
            out.add(Cell(int(c), int(r)))
        if len(trk.points) < 2:
            continue
        vx, vy = trk.velocity
        speed = float(np.hypot(vx, vy))
        if speed < 1e-9:
            continue
        x0, y0 = trk.points[-1]
        step = gmap.resolution / (2.0 * speed)
        t = step
        while t <= horizon + 1e-12:
            x = x0 + vx * t
            y = y0 + vy * t
            col = int(x / gmap.resolution)
            row = int(y / gmap.resolution)
            if not (0 <= col < gmap.width and 0 <= row < gmap.height):
                break
            if gmap.occupied[row, col]:
                break
            out.add(Cell(col, row))
            t += step
    return out
