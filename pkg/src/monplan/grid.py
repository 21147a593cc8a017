"""Static occupancy grids, line-of-sight visibility, and observation bookkeeping.

Cells are addressed as (col, row) pairs; arrays are indexed [row, col].
Metric coordinates put the center of cell (0, 0) at (0.5 * res, 0.5 * res).
"""

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from . import _kernels

DEFAULT_RESOLUTION = 0.1

UNSEEN = 0
SEEN = 1
DISCARDED = 2


class MapFormatError(ValueError):
    """Raised when a map file does not parse."""


class InvalidPoseError(ValueError):
    """Raised when an operation is asked to start from an occupied cell."""


class Cell(NamedTuple):
    col: int
    row: int


@dataclass(frozen=True)
class GridMap:
    """Binary occupancy grid with a metric resolution (meters per cell)."""

    occupied: np.ndarray  # bool, shape (height, width)
    resolution: float = DEFAULT_RESOLUTION

    def __post_init__(self):
        if self.occupied.ndim != 2 or self.occupied.size == 0:
            raise MapFormatError("grid must be a non-empty 2D array")
        if self.resolution <= 0:
            raise MapFormatError("resolution must be positive")

    @property
    def width(self) -> int:
        return self.occupied.shape[1]

    @property
    def height(self) -> int:
        return self.occupied.shape[0]

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell.col < self.width and 0 <= cell.row < self.height

    def is_free(self, cell: Cell) -> bool:
        if not self.in_bounds(cell):
            raise IndexError(f"cell {cell} outside {self.width}x{self.height} grid")
        return not self.occupied[cell.row, cell.col]

    def free_count(self) -> int:
        return int((~self.occupied).sum())

    def cell_center(self, cell: Cell) -> tuple[float, float]:
        return ((cell.col + 0.5) * self.resolution, (cell.row + 0.5) * self.resolution)

    def cell_of(self, x: float, y: float) -> Cell:
        col = min(max(int(x / self.resolution), 0), self.width - 1)
        row = min(max(int(y / self.resolution), 0), self.height - 1)
        return Cell(col, row)


def load_map(text: str, resolution: float = DEFAULT_RESOLUTION) -> GridMap:
    """Parse a text map: '#' occupied, '.' free, one row per line.

    An optional first line "resolution <meters>" overrides the default.
    Ragged rows, unknown characters, and empty input raise MapFormatError.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if lines and lines[0].startswith("resolution"):
        parts = lines[0].split()
        if len(parts) != 2:
            raise MapFormatError(f"bad resolution line: {lines[0]!r}")
        try:
            resolution = float(parts[1])
        except ValueError as exc:
            raise MapFormatError(f"bad resolution value: {parts[1]!r}") from exc
        if resolution <= 0:
            raise MapFormatError("resolution must be positive")
        lines = lines[1:]
    if not lines:
        raise MapFormatError("empty map")
    width = len(lines[0])
    rows = []
    for i, ln in enumerate(lines):
        if len(ln) != width:
            raise MapFormatError(f"ragged row {i}: expected {width} cells, got {len(ln)}")
        row = np.empty(width, dtype=bool)
        for j, ch in enumerate(ln):
            if ch == "#":
                row[j] = True
            elif ch == ".":
                row[j] = False
            else:
                raise MapFormatError(f"unknown character {ch!r} at row {i}, col {j}")
        rows.append(row)
    return GridMap(occupied=np.array(rows), resolution=resolution)


def dump_map(gmap: GridMap) -> str:
    lines = [f"resolution {gmap.resolution}"]
    for r in range(gmap.height):
        lines.append("".join("#" if gmap.occupied[r, c] else "." for c in range(gmap.width)))
    return "\n".join(lines) + "\n"


def visible_cells(gmap: GridMap, origin: Cell, r_v: float,
                  extra_blocked: np.ndarray | None = None) -> set[Cell]:
    """All cells within range r_v (meters) whose sight line from origin is clear.

    Sight lines are Bresenham traversals over cell centers; a blocked cell
    terminates the ray but is itself reported visible. Diagonal rays may not
    squeeze between two diagonally touching blocked cells. extra_blocked adds
    transient occluders (e.g. moving obstacles) on top of the static map.
    """
    if not gmap.is_free(origin):
        raise InvalidPoseError(f"visibility origin {origin} is occupied")
    if r_v <= 0:
        raise ValueError("visibility range must be positive")
    blocked = gmap.occupied if extra_blocked is None else (gmap.occupied | extra_blocked)
    r_cells = r_v / gmap.resolution
    candidate = np.ones_like(gmap.occupied)
    pts = _kernels.newly_visible_cells(blocked, candidate, origin.row, origin.col, r_cells)
    return {Cell(int(c), int(r)) for r, c in pts}


def visibility_of(gmap: GridMap, origin: Cell, r_v: float, cells: Iterable[Cell],
                  extra_blocked: np.ndarray | None = None) -> np.ndarray:
    """Visibility flags (uint8) for an explicit list of target cells."""
    blocked = gmap.occupied if extra_blocked is None else (gmap.occupied | extra_blocked)
    cells = list(cells)
    rows = np.fromiter((c.row for c in cells), dtype=np.int64, count=len(cells))
    cols = np.fromiter((c.col for c in cells), dtype=np.int64, count=len(cells))
    return _kernels.visibility_batch(blocked, origin.row, origin.col, rows, cols,
                                     r_v / gmap.resolution)


@dataclass
class ObservedMask:
    """Tri-state per-cell observation record: unseen, seen, or discarded.

    Occupied cells never become seen; seen and discarded are terminal, so
    both counts grow monotonically over a mission.
    """

    gmap: GridMap
    states: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.states is None:
            self.states = np.zeros((self.gmap.height, self.gmap.width), dtype=np.uint8)

    def state(self, cell: Cell) -> int:
        return int(self.states[cell.row, cell.col])

    def seen_count(self) -> int:
        return int((self.states == SEEN).sum())

    def discarded_count(self) -> int:
        return int((self.states == DISCARDED).sum())

    def mark_seen(self, rows: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Mark unseen free cells as seen; returns the cells that changed."""
        if len(rows) == 0:
            return rows, cols
        fresh = (self.states[rows, cols] == UNSEEN) & (~self.gmap.occupied[rows, cols])
        rows, cols = rows[fresh], cols[fresh]
        self.states[rows, cols] = SEEN
        return rows, cols

    def mark_discarded(self, rows: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Mark unseen free cells as discarded (given up due to occlusion)."""
        if len(rows) == 0:
            return rows, cols
        fresh = (self.states[rows, cols] == UNSEEN) & (~self.gmap.occupied[rows, cols])
        rows, cols = rows[fresh], cols[fresh]
        self.states[rows, cols] = DISCARDED
        return rows, cols


def frontier_cells(mask: ObservedMask, gmap: GridMap) -> set[Cell]:
    """Seen free cells that are 4-adjacent to at least one unseen free cell."""
    rows, cols = frontier_arrays(mask, gmap)
    return {Cell(int(c), int(r)) for r, c in zip(rows, cols)}


def frontier_arrays(mask: ObservedMask, gmap: GridMap) -> tuple[np.ndarray, np.ndarray]:
    free = ~gmap.occupied
    seen = (mask.states == SEEN) & free
    unseen = (mask.states == UNSEEN) & free
    near_unseen = np.zeros_like(unseen)
    near_unseen[1:, :] |= unseen[:-1, :]
    near_unseen[:-1, :] |= unseen[1:, :]
    near_unseen[:, 1:] |= unseen[:, :-1]
    near_unseen[:, :-1] |= unseen[:, 1:]
    return np.nonzero(seen & near_unseen)
