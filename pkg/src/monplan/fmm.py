"""Multi-source arrival-time fields over velocity maps, plus gradient descent.

The solver propagates a front across the 8-connected grid with a binary-heap
narrow band, finalizing cells in arrival order. Each relaxation uses a single
upwind neighbor with edge cost step/F(cell), which keeps two exact identities
the planner relies on: a multi-source field equals the pointwise minimum of
the single-source fields, and uniform-speed fields are symmetric between any
two cells. Zero-speed cells are impassable and stay at UNREACHED.
"""

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import ndimage

from . import _kernels
from .grid import Cell, GridMap

UNREACHED = np.inf


@dataclass(frozen=True)
class ScalarField:
    """Per-cell non-negative values (arrival times / distances) on a grid."""

    values: np.ndarray  # float64, shape (height, width)
    resolution: float

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def at(self, cell: Cell) -> float:
        return float(self.values[cell.row, cell.col])

    def reached(self, cell: Cell) -> bool:
        return np.isfinite(self.values[cell.row, cell.col])


@dataclass(frozen=True)
class VelocityField:
    """Per-cell front speed; 0 marks impassable cells."""

    values: np.ndarray  # float64, shape (height, width)
    resolution: float

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def uniform_speed(gmap: GridMap, speed: float = 1.0, block_occupied: bool = True) -> VelocityField:
    values = np.full((gmap.height, gmap.width), float(speed))
    if block_occupied:
        values[gmap.occupied] = 0.0
    return VelocityField(values=values, resolution=gmap.resolution)


def solve(sources: Iterable[Cell], speed: VelocityField) -> ScalarField:
    """Arrival times from a source set; unreachable cells carry UNREACHED."""
    times, _ = solve_labeled(sources, speed, want_labels=False)
    return times


def solve_labeled(sources: Iterable[Cell], speed: VelocityField,
                  want_labels: bool = True) -> tuple[ScalarField, np.ndarray | None]:
    """Arrival times plus, per cell, the index of the source that won the race."""
    src = list(sources)
    if not src:
        raise ValueError("at least one source cell is required")
    rows = np.fromiter((c.row for c in src), dtype=np.int64, count=len(src))
    cols = np.fromiter((c.col for c in src), dtype=np.int64, count=len(src))
    if np.any(speed.values[rows, cols] <= 0.0):
        raise ValueError("source cells must have positive speed")
    labels = np.full(speed.values.size, -1, dtype=np.int64)
    times = _kernels.wavefront(speed.values, rows, cols, speed.resolution,
                               labels, want_labels)
    field = ScalarField(values=times, resolution=speed.resolution)
    if not want_labels:
        return field, None
    labels = labels.reshape(speed.values.shape)
    labels[~np.isfinite(times)] = -1
    return field, labels


def distance_transform(gmap: GridMap) -> ScalarField:
    """Euclidean distance from every free cell to the nearest occupied cell.

    Occupied cells read 0. A map with no obstacles at all gets the map
    diagonal everywhere, an effectively infinite clearance.
    """
    if not gmap.occupied.any():
        diag = np.hypot(gmap.width, gmap.height) * gmap.resolution
        return ScalarField(values=np.full(gmap.occupied.shape, diag), resolution=gmap.resolution)
    dist = ndimage.distance_transform_edt(~gmap.occupied, sampling=gmap.resolution)
    return ScalarField(values=dist, resolution=gmap.resolution)


class NoPathError(RuntimeError):
    """Raised when descent is asked to start from an unreached cell."""


class FieldConsistencyError(RuntimeError):
    """Raised when descent hits a positive-valued local minimum."""


def descend(field: ScalarField, start: Cell) -> list[Cell]:
    """Walk from start down the field to a zero-valued cell (a source).

    Each step moves to the strictly smallest 8-neighbor, so the path is
    cycle-free and never enters a cell the front could not reach.
    """
    if not np.isfinite(field.values[start.row, start.col]):
        raise NoPathError(f"start cell {start} was not reached by the field")
    pts = _kernels.descend_path(field.values, start.row, start.col,
                                field.values.size + 1)
    if pts.shape[0] == 0:
        raise FieldConsistencyError("descent stuck in a positive local minimum")
    return [Cell(int(c), int(r)) for r, c in pts]
