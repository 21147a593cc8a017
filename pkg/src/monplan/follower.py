"""Reactive path following: pick a destination on the path, then velocities.

The destination walks forward along the path while the robot's distance to
each path cell stays within that cell's clearance to static and moving
obstacles, so open stretches get far carrots and fast motion while cluttered
ones pull the carrot in and slow down. Velocity commands respect magnitude
and per-period acceleration limits.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fmm import ScalarField
from .grid import Cell, GridMap


@dataclass
class RobotState:
    x: float
    y: float
    theta: float  # radians in (-pi, pi]
    v: float = 0.0
    w: float = 0.0


@dataclass(frozen=True)
class KinodynamicLimits:
    v_max: float = 0.5
    w_max: float = 1.5
    dv: float = 0.05   # max speed increase per control period
    dw: float = 0.3    # max turn-rate change per control period
    radius: float = 0.18


@dataclass(frozen=True)
class DestinationChoice:
    dest: Cell
    dest_xy: tuple[float, float]
    clearance_factor: float
    index: int  # position of dest within the path


def wrap_angle(a: float) -> float:
    """Map an angle into (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def select_destination(path: list[Cell], robot: RobotState, dso: ScalarField,
                       dyn_rows: np.ndarray, dyn_cols: np.ndarray,
                       limits: KinodynamicLimits, gmap: GridMap,
                       static_margin: float = 0.0) -> DestinationChoice:
    """Farthest path cell still within the clearance envelope of the robot.

    A cell qualifies while the robot-to-cell distance is at most the cell's
    static clearance and at most its moving-obstacle distance minus two robot
    radii. static_margin shrinks the static clearance readings, so the
    envelope respects safety-inflated walls rather than raw ones. The
    clearance factor normalizes the destination's clearance by the best
    clearance available anywhere on the path.
    """
    if not path:
        raise ValueError("empty path")
    res = gmap.resolution
    rows = np.fromiter((c.row for c in path), np.int64, len(path))
    cols = np.fromiter((c.col for c in path), np.int64, len(path))
    xs = (cols + 0.5) * res
    ys = (rows + 0.5) * res
    d_robot = np.hypot(xs - robot.x, ys - robot.y)
    start = int(np.argmin(d_robot))
    static_clear = np.maximum(dso.values[rows, cols] - static_margin, 0.0)
    if dyn_rows.shape[0]:
        dyn_clear = _kernels.path_obstacle_clearance(rows, cols, dyn_rows, dyn_cols) * res
    else:
        dyn_clear = np.full(len(path), np.inf)
    norm = float(np.minimum(static_clear, dyn_clear).max())

    idx = start
    for i in range(start, len(path)):
        if d_robot[i] <= static_clear[i] and d_robot[i] <= dyn_clear[i] - 2.0 * limits.radius:
            idx = i
        else:
            if i == start:
                idx = start  # degenerate: hold the nearest cell
            break
    clearance = min(float(static_clear[idx]), float(dyn_clear[idx]))
    factor = min(max(clearance / norm, 0.0), 1.0) if norm > 0 else 0.0
    return DestinationChoice(dest=path[idx], dest_xy=(float(xs[idx]), float(ys[idx])),
                             clearance_factor=factor, index=idx)


def compute_velocities(robot: RobotState, dest: DestinationChoice,
                       limits: KinodynamicLimits) -> tuple[float, float]:
    """Velocity pair steering toward the destination under the robot limits.

    Turn rate is proportional to the bearing error, rate-limited per period
    and saturated. Forward speed scales with the clearance factor and drops
    to zero whenever the destination is more than a quarter turn away.
    """
    bearing = math.atan2(dest.dest_xy[1] - robot.y, dest.dest_xy[0] - robot.x)
    dtheta = wrap_angle(bearing - robot.theta)
    w_cmd = limits.w_max * dtheta
    w_star = min(max(w_cmd, robot.w - limits.dw), robot.w + limits.dw)
    w_star = min(max(w_star, -limits.w_max), limits.w_max)
    if dtheta == 0.0:
        v_star = min(limits.v_max, robot.v + limits.dv)
    elif abs(dtheta) >= math.pi / 2.0:
        v_star = 0.0
    else:
        v = limits.v_max * dest.clearance_factor * (1.0 - abs(w_star) / limits.w_max)
        v_star = min(v, robot.v + limits.dv)
    return max(v_star, 0.0), w_star
