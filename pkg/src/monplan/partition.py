"""Offline decomposition of the free space into wavefront-grown partitions.

Seeds are placed at clearance maxima of the static distance transform; every
free cell then joins the seed whose front, propagating at a speed equal to
the local clearance, reaches it first. Wide rooms flood quickly and collide
in doorways, so partition borders settle in the narrow passages. A partition
adjacency graph with travel-time edge costs guides the online planner.
"""

from dataclasses import dataclass, field

import numpy as np

from .fmm import ScalarField, VelocityField, solve_labeled
from .grid import Cell, GridMap

MIN_SEED_CLEARANCE = 0.36  # two robot radii; maxima below this do not seed


@dataclass
class Partition:
    """A connected free-space region grown from one clearance-maximal seed.

    d_min is the Euclidean distance from the seed to the nearest cell of
    the partition boundary, d_max the distance to the farthest member; both
    bound the viewing workload of the region.
    """

    id: int
    seed: Cell
    rows: np.ndarray
    cols: np.ndarray
    d_min: float
    d_max: float

    @property
    def size(self) -> int:
        return int(self.rows.shape[0])

    @property
    def members(self) -> set[Cell]:
        return {Cell(int(c), int(r)) for r, c in zip(self.rows, self.cols)}


@dataclass
class AdjacencyGraph:
    """Partition adjacency with seed-to-seed travel costs in seconds."""

    vertices: list[int]
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def cost(self, i: int, j: int) -> float:
        return self.edges[(i, j) if i < j else (j, i)]

    def neighbors(self, i: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)


def extract_partition_seeds(dso: ScalarField,
                            min_clearance: float = MIN_SEED_CLEARANCE) -> list[tuple[Cell, float]]:
    """Iteratively pick global clearance maxima, blanking a square window
    of half-width equal to the max value around each pick.

    Ties resolve to the lowest row-major index. Maxima below min_clearance
    stop the loop, which also bounds the seed count on noisy maps.
    """
    work = dso.values.copy()
    h = dso.resolution
    H, W = work.shape
    seeds: list[tuple[Cell, float]] = []
    while True:
        flat = int(np.argmax(work))
        v = float(work.flat[flat])
        if v < min_clearance or v <= 0.0:
            break
        r, c = divmod(flat, W)
        seeds.append((Cell(c, r), v))
        w_cells = int(round(v / h))
        work[max(0, r - w_cells):min(H, r + w_cells + 1),
             max(0, c - w_cells):min(W, c + w_cells + 1)] = 0.0
    return seeds


def compute_partitions(seeds: list[Cell], dso: ScalarField, gmap: GridMap) -> list[Partition]:
    """Assign every reachable free cell to the seed whose front arrives first.

    One labeled multi-source solve with the clearance field as the speed map;
    enclosed free pockets no front can reach belong to no partition.
    """
    if not seeds:
        raise ValueError("at least one partition seed is required")
    speed = VelocityField(values=dso.values, resolution=dso.resolution)
    _, labels = solve_labeled(seeds, speed)
    res = gmap.resolution
    parts: list[Partition] = []
    boundary = _boundary_mask(labels)
    for idx, seed in enumerate(seeds):
        rows, cols = np.nonzero(labels == idx)
        sx, sy = gmap.cell_center(seed)
        dx = (cols + 0.5) * res - sx
        dy = (rows + 0.5) * res - sy
        dist = np.hypot(dx, dy)
        on_edge = boundary[rows, cols]
        d_min = float(dist[on_edge].min()) if on_edge.any() else 0.0
        d_max = float(dist.max()) if dist.size else 0.0
        parts.append(Partition(id=idx, seed=seed, rows=rows, cols=cols,
                               d_min=d_min, d_max=d_max))
    return parts


def _boundary_mask(labels: np.ndarray) -> np.ndarray:
    """Cells whose 4-neighborhood leaves their own partition (or the map)."""
    H, W = labels.shape
    out = np.zeros((H, W), dtype=bool)
    out[0, :] = out[-1, :] = True
    out[:, 0] = out[:, -1] = True
    out[:-1, :] |= labels[:-1, :] != labels[1:, :]
    out[1:, :] |= labels[1:, :] != labels[:-1, :]
    out[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    out[:, 1:] |= labels[:, 1:] != labels[:, :-1]
    out[labels < 0] = False
    return out


def label_map(partitions: list[Partition], gmap: GridMap) -> np.ndarray:
    """Per-cell partition id, -1 where unassigned."""
    labels = np.full((gmap.height, gmap.width), -1, dtype=np.int64)
    for p in partitions:
        labels[p.rows, p.cols] = p.id
    return labels


def build_adjacency_graph(partitions: list[Partition], gmap: GridMap,
                          v_max: float) -> AdjacencyGraph:
    """Edges between partitions sharing a 4-adjacent free-cell pair; the cost
    is the straight seed-to-seed distance divided by the top robot speed."""
    labels = label_map(partitions, gmap)
    pairs: set[tuple[int, int]] = set()
    for a, b in ((labels[:, :-1], labels[:, 1:]), (labels[:-1, :], labels[1:, :])):
        diff = (a != b) & (a >= 0) & (b >= 0)
        if diff.any():
            for i, j in zip(a[diff].ravel(), b[diff].ravel()):
                pairs.add((min(int(i), int(j)), max(int(i), int(j))))
    seeds_xy = {p.id: gmap.cell_center(p.seed) for p in partitions}
    edges = {}
    for i, j in sorted(pairs):
        (xi, yi), (xj, yj) = seeds_xy[i], seeds_xy[j]
        edges[(i, j)] = float(np.hypot(xi - xj, yi - yj)) / v_max
    return AdjacencyGraph(vertices=sorted(p.id for p in partitions), edges=edges)


def star_shape_metric(partitions: list[Partition], gmap: GridMap) -> float:
    """Fraction of partition boundary cells with a clear straight line to
    their seed; grid discretization keeps this below 1 on real maps."""
    from . import _kernels

    labels = label_map(partitions, gmap)
    boundary = _boundary_mask(labels)
    good = 0
    total = 0
    for p in partitions:
        on_edge = boundary[p.rows, p.cols]
        rows = p.rows[on_edge]
        cols = p.cols[on_edge]
        total += rows.shape[0]
        flags = _kernels.visibility_batch(gmap.occupied, p.seed.row, p.seed.col,
                                          rows, cols, float(gmap.width + gmap.height))
        good += int(flags.sum())
    return good / total if total else 1.0
