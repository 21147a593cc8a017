"""Speed-law construction and path planning around dynamic areas.

The front speed at a cell encodes traversal preference: zero on (inflated)
static obstacles, known moving-obstacle cells, and dense dynamic areas;
a reduced value inside sparse dynamic areas; and clearance plus a constant
margin in open space, so open space always outranks any dynamic area. Paths
descend an arrival-time field solved from the goal over this speed map.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamic_areas import DynamicArea, inflate_mask
from .fmm import ScalarField, VelocityField, descend, solve
from .grid import Cell, GridMap

SPARSE_AREA_SPEED_FLOOR = 0.1


class GoalUnreachable(RuntimeError):
    """No positive-speed route exists between robot and goal."""


@dataclass
class PlannerInputs:
    """Everything the low-level planner reads for one control period."""

    gmap: GridMap
    dso: ScalarField
    obstacle_mask: np.ndarray           # bool grid of known moving-obstacle cells
    areas: list[DynamicArea] = field(default_factory=list)
    o_th: float = 0.1
    safety: float = 0.0                 # inflation radius in meters
    n_do_max: int | None = None         # max area occupancy; derived when None

    def resolved_n_do_max(self) -> int:
        if self.n_do_max is not None:
            return self.n_do_max
        active = [a.n_do for a in self.areas if a.active]
        return max(active) if active else 0


def build_velocity_map(inputs: PlannerInputs) -> VelocityField:
    """Per-cell front speed combining clearance, obstacles, and area density."""
    gmap = inputs.gmap
    n_max = inputs.resolved_n_do_max()
    free = ~gmap.occupied
    values = np.zeros(gmap.occupied.shape)
    values[free] = inputs.dso.values[free] + n_max + 1.0

    dense_mask = np.zeros_like(free)
    for area in inputs.areas:
        if not area.active:
            continue
        if area.density > inputs.o_th:
            dense_mask[area.rows, area.cols] = True
        else:
            speed = max(float(n_max - area.n_do), SPARSE_AREA_SPEED_FLOOR)
            sel = np.zeros_like(free)
            sel[area.rows, area.cols] = True
            sel &= free
            values[sel] = np.minimum(values[sel], speed)

    radius_cells = inputs.safety / gmap.resolution
    zero = inflate_mask(gmap.occupied, radius_cells)
    zero |= inflate_mask(inputs.obstacle_mask, radius_cells)
    zero |= inflate_mask(dense_mask, radius_cells)
    values[zero] = 0.0
    return VelocityField(values=values, resolution=gmap.resolution)


def plan_path(inputs: PlannerInputs, goal: Cell, robot: Cell) -> list[Cell]:
    """Shortest-arrival path from robot to goal over the current speed law."""
    speed = build_velocity_map(inputs)
    if speed.values[goal.row, goal.col] <= 0.0:
        raise GoalUnreachable(f"goal {goal} sits on a zero-speed cell")
    fld = solve([goal], speed)
    return descend_to_goal(fld, robot)


def descend_to_goal(goal_field: ScalarField, robot: Cell) -> list[Cell]:
    if not np.isfinite(goal_field.values[robot.row, robot.col]):
        raise GoalUnreachable(f"no positive-speed route reaches {robot}")
    return descend(goal_field, robot)


def edge_traverses_dense(inputs: PlannerInputs, a: Cell, b: Cell) -> bool:
    """True when no positive-speed route connects the two cells at all."""
    speed = build_velocity_map(inputs)
    passable = speed.values > 0.0
    if not passable[a.row, a.col] or not passable[b.row, b.col]:
        return True
    reach = _kernels.reachable_mask(passable, a.row, a.col)
    return not bool(reach[b.row, b.col])
