"""Per-period mission orchestration: sense, update areas, pick goals, plan, follow.

The controller owns nothing mutable about the world; it consumes sensor
frames, maintains the mission state (observation mask, tracks, areas, goal,
path), and emits one velocity command per control period. Strategy variants
share the machinery: the greedy variant navigates to frontier cells using
only currently visible obstacles, the partition-avoiding variant blankets
whole partitions containing tracked obstacles, and the full planner builds
convex dynamic areas and avoids the dense ones.
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from hashlib import blake2b
from typing import Callable

import numpy as np

from . import _kernels
from .config import MissionConfig, Strategy
from .dynamic_areas import (HISTORY_WINDOW, DynamicArea, MemoryMode, ObstacleTrack,
                            apply_memory_mode, build_areas, cluster_detections,
                            current_obstacle_cells, project_tracks,
                            prune_stale_tracks, track_obstacles)
from .fmm import ScalarField, VelocityField, solve
from .follower import RobotState, compute_velocities, select_destination
from .geometry import convex_hull
from .goals import (BranchExhausted, GoalDecision, branch_cost, build_tree,
                    compute_goal, select_partition, wait_time)
from .grid import UNSEEN, Cell, GridMap, ObservedMask, frontier_arrays
from .partition import AdjacencyGraph, Partition, label_map
from .velocity_map import PlannerInputs, build_velocity_map, descend_to_goal

ESCAPE_SPEED = 0.05


class MissionStatus(Enum):
    RUNNING = "Running"
    COMPLETE = "Complete"
    BLOCKED = "Blocked"
    TIMEOUT = "Timeout"
    COLLIDED = "Collided"


@dataclass
class SensorFrame:
    """One control period's perception: the robot cell, newly visible free
    cells, visible moving-obstacle cells, and a lazy visibility probe."""

    origin: Cell
    new_rows: np.ndarray
    new_cols: np.ndarray
    dyn_rows: np.ndarray
    dyn_cols: np.ndarray
    probe: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None


@dataclass
class MissionState:
    robot: RobotState
    mask: ObservedMask
    clock: float = 0.0
    status: "MissionStatus" = MissionStatus.RUNNING
    tracks: list[ObstacleTrack] = field(default_factory=list)
    next_track_id: int = 0
    areas: list[DynamicArea] = field(default_factory=list)
    goal: GoalDecision | None = None
    branch: list[int] | None = None
    path: list[Cell] = field(default_factory=list)
    wait_elapsed: float = 0.0
    no_goal_elapsed: float = 0.0
    last_plan_ms: float = 0.0
    record: dict = field(default_factory=dict)


class MissionController:
    """Drives one mission over an immutable offline-planned world."""

    def __init__(self, gmap: GridMap, dso: ScalarField, partitions: list[Partition],
                 graph: AdjacencyGraph, config: MissionConfig):
        self.gmap = gmap
        self.dso = dso
        self.partitions = {p.id: p for p in partitions}
        self.graph = graph
        self.config = config
        self.labels = label_map(partitions, gmap)
        self.seeds_xy = {p.id: gmap.cell_center(p.seed) for p in partitions}
        self.reachable_total = int((self.labels >= 0).sum())
        self.unseen_counts = np.array([self.partitions[i].size
                                       for i in sorted(self.partitions)], dtype=np.int64)
        # Plan caches, valid while the velocity-map signature stays unchanged.
        self._sig = b""
        self._speed: VelocityField | None = None
        self._goal_field: ScalarField | None = None
        self._goal_field_key = None
        self._blocked: set[int] = set()
        self._unplannable: set[int] = set()
        self._goal_tol = max(2.0 * gmap.resolution, config.limits.radius)

    # -- bookkeeping -------------------------------------------------------

    def new_state(self, robot: RobotState) -> MissionState:
        return MissionState(robot=robot, mask=ObservedMask(self.gmap))

    def unseen_total(self) -> int:
        return int(self.unseen_counts.sum())

    def observed_ratio(self, state: MissionState) -> float:
        if self.reachable_total == 0:
            return 1.0
        seen = (state.mask.states == 1) & (self.labels >= 0)
        return float(seen.sum()) / self.reachable_total

    def mission_status(self, state: MissionState) -> MissionStatus:
        """Completion check: every reachable cell handled, or a terminal flag."""
        if state.status is not MissionStatus.RUNNING:
            return state.status
        self.refresh_counts(state)
        if self.unseen_total() == 0:
            return MissionStatus.COMPLETE
        if state.clock > self.config.timeout:
            return MissionStatus.TIMEOUT
        return MissionStatus.RUNNING

    def refresh_counts(self, state: MissionState):
        """Recompute per-partition unseen counts from the mask (cheap, exact)."""
        unseen = (state.mask.states == UNSEEN) & (self.labels >= 0)
        self.unseen_counts = np.bincount(self.labels[unseen],
                                         minlength=len(self.partitions))

    def partition_of(self, cell: Cell) -> int:
        pid = int(self.labels[cell.row, cell.col])
        if pid >= 0:
            return pid
        # Boundary artifact: snap to the nearest labeled cell by ring search.
        for radius in range(1, max(self.gmap.width, self.gmap.height)):
            rlo = max(0, cell.row - radius)
            rhi = min(self.gmap.height, cell.row + radius + 1)
            clo = max(0, cell.col - radius)
            chi = min(self.gmap.width, cell.col + radius + 1)
            window = self.labels[rlo:rhi, clo:chi]
            if (window >= 0).any():
                rr, cc = np.nonzero(window >= 0)
                d2 = (rr + rlo - cell.row) ** 2 + (cc + clo - cell.col) ** 2
                k = int(np.argmin(d2))
                return int(window[rr[k], cc[k]])
        raise RuntimeError("no labeled cells on the map")

    # -- per-period perception and planning inputs ------------------------

    def _update_perception(self, state: MissionState, frame: SensorFrame):
        cfg = self.config
        wants_tracks = cfg.strategy is not Strategy.GREEDY or cfg.projections
        if wants_tracks:
            detections = cluster_detections(frame.dyn_rows, frame.dyn_cols, self.gmap)
            state.tracks, state.next_track_id = track_obstacles(
                detections, state.tracks, state.clock, state.next_track_id)
            if cfg.memory_mode is not MemoryMode.MEMORIZE_ALL and frame.probe is not None:
                visible = self._probe_grid(frame, current_obstacle_cells(state.tracks))
                state.tracks = prune_stale_tracks(state.tracks, state.clock, visible)
        if cfg.strategy is Strategy.MADA:
            window = None if cfg.memory_mode is MemoryMode.MEMORIZE_ALL else HISTORY_WINDOW
            state.areas = build_areas(state.tracks, self.gmap, state.clock, window=window)
            visible = self._area_visibility(state, frame)
            state.areas, state.tracks = apply_memory_mode(
                state.areas, state.tracks, visible, cfg.memory_mode)
        elif cfg.strategy is Strategy.MADP:
            state.areas = self._partition_areas(state)
        else:
            state.areas = []

    def _probe_grid(self, frame: SensorFrame,
                    cells: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
        grid = np.zeros((self.gmap.height, self.gmap.width), dtype=bool)
        rows, cols = cells
        if rows.shape[0] and frame.probe is not None:
            flags = frame.probe(rows, cols)
            grid[rows[flags > 0], cols[flags > 0]] = True
        return grid

    def _area_visibility(self, state: MissionState, frame: SensorFrame) -> np.ndarray:
        grid = np.zeros((self.gmap.height, self.gmap.width), dtype=bool)
        if frame.probe is None:
            return grid
        for area in state.areas:
            if area.rows.shape[0] == 0:
                continue
            flags = frame.probe(area.rows, area.cols)
            grid[area.rows[flags > 0], area.cols[flags > 0]] = True
        return grid

    def _partition_areas(self, state: MissionState) -> list[DynamicArea]:
        """Whole partitions containing a tracked obstacle, treated as dense."""
        occ_rows, occ_cols = current_obstacle_cells(state.tracks)
        if occ_rows.shape[0] == 0:
            return []
        labels_at = self.labels[occ_rows, occ_cols]
        areas = []
        for pid in np.unique(labels_at):
            if pid < 0:
                continue
            part = self.partitions[int(pid)]
            n_do = int((labels_at == pid).sum())
            res = self.gmap.resolution
            corners = [((c + 0.5) * res, (r + 0.5) * res)
                       for r, c in ((part.rows.min(), part.cols.min()),
                                    (part.rows.min(), part.cols.max()),
                                    (part.rows.max(), part.cols.min()),
                                    (part.rows.max(), part.cols.max()))]
            areas.append(DynamicArea(hull=convex_hull(corners), rows=part.rows,
                                     cols=part.cols, n_do=n_do, density=1.0,
                                     source_tracks=set(), active=True))
        return areas

    def _planner_inputs(self, state: MissionState, frame: SensorFrame) -> PlannerInputs:
        cfg = self.config
        obstacle_mask = np.zeros((self.gmap.height, self.gmap.width), dtype=bool)
        if cfg.strategy is Strategy.GREEDY:
            if frame.dyn_rows.shape[0]:
                obstacle_mask[frame.dyn_rows, frame.dyn_cols] = True
        else:
            rows, cols = current_obstacle_cells(state.tracks)
            if rows.shape[0]:
                obstacle_mask[rows, cols] = True
        if cfg.projections:
            for cell in project_tracks(state.tracks, cfg.projection_horizon, self.gmap):
                obstacle_mask[cell.row, cell.col] = True
        areas = [a for a in state.areas if a.active]
        return PlannerInputs(gmap=self.gmap, dso=self.dso, obstacle_mask=obstacle_mask,
                             areas=areas, o_th=cfg.o_th, safety=cfg.safety)

    def _signature(self, inputs: PlannerInputs) -> bytes:
        h = blake2b(digest_size=16)
        h.update(np.packbits(inputs.obstacle_mask).tobytes())
        for area in inputs.areas:
            h.update(area.rows.tobytes())
            h.update(area.cols.tobytes())
            h.update(np.int64(area.n_do).tobytes())
            h.update(b"1" if area.density > inputs.o_th else b"0")
        return h.digest()

    def _refresh_speed(self, state: MissionState, frame: SensorFrame):
        """Rebuild the velocity field when planning inputs changed."""
        inputs = self._planner_inputs(state, frame)
        sig = self._signature(inputs)
        if sig == self._sig and self._speed is not None:
            return
        self._sig = sig
        self._speed = build_velocity_map(inputs)
        self._goal_field = None
        self._goal_field_key = None
        self._unplannable = set()
        if self.config.strategy is not Strategy.GREEDY:
            self._refresh_blocked(frame.origin)

    def _speed_for(self, robot_cell: Cell) -> VelocityField:
        """Current speed field, opening an escape bubble when the robot is
        trapped inside an inflated zero-speed zone."""
        speed = self._speed
        if speed.values[robot_cell.row, robot_cell.col] > 0.0:
            return speed
        values = speed.values.copy()
        radius = max(2.0 * self.config.safety, 0.5)
        rc = int(np.ceil(radius / self.gmap.resolution))
        rlo = max(0, robot_cell.row - rc)
        rhi = min(self.gmap.height, robot_cell.row + rc + 1)
        clo = max(0, robot_cell.col - rc)
        chi = min(self.gmap.width, robot_cell.col + rc + 1)
        window = values[rlo:rhi, clo:chi]
        occ = self.gmap.occupied[rlo:rhi, clo:chi]
        window[(window == 0.0) & (~occ)] = ESCAPE_SPEED
        return VelocityField(values=values, resolution=speed.resolution)

    def _refresh_blocked(self, origin: Cell):
        passable = self._speed_for(origin).values > 0.0
        reach = _kernels.reachable_mask(passable, origin.row, origin.col)
        root = self.partition_of(origin)
        blocked = set()
        for pid, part in self.partitions.items():
            if pid != root and not reach[part.seed.row, part.seed.col]:
                blocked.add(pid)
        self._blocked = blocked

    # -- goal selection ----------------------------------------------------

    def _goal_field_for(self, goal: Cell, robot_cell: Cell) -> ScalarField | None:
        trapped = self._speed.values[robot_cell.row, robot_cell.col] == 0.0
        key = (goal, self._sig, robot_cell if trapped else None)
        if self._goal_field_key == key and self._goal_field is not None:
            return self._goal_field
        speed = self._speed_for(robot_cell)
        if speed.values[goal.row, goal.col] <= 0.0:
            return None
        self._goal_field = solve([goal], speed)
        self._goal_field_key = key
        return self._goal_field

    def _robot_field(self, robot_cell: Cell) -> ScalarField | None:
        speed = self._speed_for(robot_cell)
        if speed.values[robot_cell.row, robot_cell.col] <= 0.0:
            return None
        return solve([robot_cell], speed)

    def _branch_costs(self, tree) -> list[float]:
        return [branch_cost(b, self.partitions, self.unseen_counts, self.config.r_v,
                            self.config.limits.v_max, self.seeds_xy)
                for b in tree.branches]

    def _select_goal(self, state: MissionState, robot_cell: Cell) -> bool:
        """Pick a partition and a goal; returns False when nothing is reachable."""
        cfg = self.config
        if cfg.strategy is Strategy.GREEDY:
            return self._select_goal_greedy(state, robot_cell)
        dr = self._robot_field(robot_cell)
        if dr is None:
            return False
        root = self.partition_of(robot_cell)
        blocked = set(self._blocked) | self._unplannable
        blocked.discard(root)
        for _ in range(len(self.partitions) + 1):
            tree = build_tree(self.graph, root, blocked)
            costs = self._branch_costs(tree)
            order = sorted(range(len(tree.branches)),
                           key=lambda i: (costs[i], tree.branches[i]))
            rebuilt = False
            for bi in order:
                branch = tree.branches[bi]
                try:
                    pid = select_partition(branch, self.unseen_counts)
                except BranchExhausted:
                    continue
                part = self.partitions[pid]
                try:
                    goal = compute_goal(part, cfg.r_v, dr, state.mask, self.gmap)
                except ValueError:
                    continue
                fld = self._goal_field_for(goal, robot_cell)
                if fld is None or not np.isfinite(fld.values[robot_cell.row, robot_cell.col]):
                    # Unreachable target: drop the partition and retry the tree.
                    self._unplannable.add(pid)
                    blocked.add(pid)
                    rebuilt = True
                    break
                state.goal = GoalDecision(partition=pid, goal=goal,
                                          wait_budget=wait_time(part, cfg.limits.v_max))
                state.branch = branch
                state.wait_elapsed = 0.0
                return True
            if not rebuilt:
                return False
        return False

    def _select_goal_greedy(self, state: MissionState, robot_cell: Cell) -> bool:
        dr = self._robot_field(robot_cell)
        if dr is None:
            return False
        rows, cols = frontier_arrays(state.mask, self.gmap)
        if rows.shape[0] == 0:
            return False
        values = dr.values[rows, cols]
        finite = np.isfinite(values)
        if not finite.any():
            return False
        rows, cols, values = rows[finite], cols[finite], values[finite]
        order = np.lexsort((rows * self.gmap.width + cols, values))
        pick = order[0]
        goal = Cell(int(cols[pick]), int(rows[pick]))
        state.goal = GoalDecision(partition=self.partition_of(goal), goal=goal,
                                  wait_budget=self.config.greedy_stall)
        state.branch = None
        state.wait_elapsed = 0.0
        return True

    def _maybe_retarget(self, state: MissionState, robot_cell: Cell):
        """Hysteresis: drop the current goal only when clearly worthwhile."""
        if state.goal is None:
            return
        cfg = self.config
        if cfg.strategy is Strategy.GREEDY:
            g = state.goal.goal
            if state.mask.states[g.row, g.col] != UNSEEN and \
                    self._greedy_targets(state)[0].shape[0] == 0:
                state.goal = None  # everything around the frontier got seen
            return
        if state.goal.partition in self._blocked:
            state.goal = None
            return
        part = self.partitions[state.goal.partition]
        if self.unseen_counts[state.goal.partition] == 0 and cfg.r_v < part.d_max:
            state.goal = None
            return
        root = self.partition_of(robot_cell)
        blocked = set(self._blocked) | self._unplannable
        blocked.discard(root)
        if state.branch is None:
            return
        try:
            tree = build_tree(self.graph, root, blocked)
        except ValueError:
            return
        costs = self._branch_costs(tree)
        if not costs:
            return
        current = branch_cost(state.branch, self.partitions, self.unseen_counts,
                              cfg.r_v, cfg.limits.v_max, self.seeds_xy)
        if min(costs) < (1.0 - cfg.goal_improvement) * current:
            state.goal = None

    # -- waiting, discarding, and the main step ----------------------------

    def _viewing_targets(self, state: MissionState) -> tuple[np.ndarray, np.ndarray]:
        """Unseen member cells of the goal partition within range of the goal."""
        part = self.partitions[state.goal.partition]
        gx, gy = self.gmap.cell_center(state.goal.goal)
        res = self.gmap.resolution
        dx = (part.cols + 0.5) * res - gx
        dy = (part.rows + 0.5) * res - gy
        sel = (np.hypot(dx, dy) <= self.config.r_v) & \
              (state.mask.states[part.rows, part.cols] == UNSEEN)
        return part.rows[sel], part.cols[sel]

    def _greedy_targets(self, state: MissionState) -> tuple[np.ndarray, np.ndarray]:
        """Unseen free 4-neighbors of the greedy frontier goal."""
        g = state.goal.goal
        rows, cols = [], []
        for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            cc, rr = g.col + dc, g.row + dr
            if 0 <= cc < self.gmap.width and 0 <= rr < self.gmap.height \
                    and not self.gmap.occupied[rr, cc] \
                    and state.mask.states[rr, cc] == UNSEEN:
                rows.append(rr)
                cols.append(cc)
        return np.asarray(rows, np.int64), np.asarray(cols, np.int64)

    def _discard(self, state: MissionState, rows: np.ndarray, cols: np.ndarray):
        state.mask.mark_discarded(rows, cols)
        self.refresh_counts(state)

    def step(self, state: MissionState,
             frame: SensorFrame) -> tuple[tuple[float, float], MissionState]:
        """One control period: returns the velocity command and the state."""
        cfg = self.config
        if state.status is not MissionStatus.RUNNING:
            return (0.0, 0.0), state
        state.mask.mark_seen(frame.new_rows, frame.new_cols)
        self.refresh_counts(state)

        t0 = time.perf_counter()
        cmd = (0.0, 0.0)
        self._update_perception(state, frame)
        self._refresh_speed(state, frame)
        robot_cell = frame.origin

        if self.unseen_total() == 0:
            state.status = MissionStatus.COMPLETE
        else:
            self._maybe_retarget(state, robot_cell)
            if state.goal is None and not self._select_goal(state, robot_cell):
                state.no_goal_elapsed += cfg.control_period
                if state.no_goal_elapsed > cfg.blocked_grace:
                    state.status = MissionStatus.BLOCKED
            elif state.goal is not None:
                state.no_goal_elapsed = 0.0
                cmd = self._drive(state, robot_cell, frame)
        state.last_plan_ms = (time.perf_counter() - t0) * 1e3
        state.record = self._make_record(state, cmd)
        return cmd, state

    def _drive(self, state: MissionState, robot_cell: Cell,
               frame: SensorFrame) -> tuple[float, float]:
        cfg = self.config
        gx, gy = self.gmap.cell_center(state.goal.goal)
        at_goal = np.hypot(gx - state.robot.x, gy - state.robot.y) <= self._goal_tol
        if at_goal:
            if cfg.strategy is Strategy.GREEDY:
                t_rows, t_cols = self._greedy_targets(state)
            else:
                t_rows, t_cols = self._viewing_targets(state)
            if t_rows.shape[0] == 0:
                state.goal = None
                return (0.0, 0.0)
            state.wait_elapsed += cfg.control_period
            if state.wait_elapsed > state.goal.wait_budget:
                self._discard(state, t_rows, t_cols)
                state.goal = None
            return (0.0, 0.0)

        fld = self._goal_field_for(state.goal.goal, robot_cell)
        if fld is None or not np.isfinite(fld.values[robot_cell.row, robot_cell.col]):
            self._unplannable.add(state.goal.partition)
            state.goal = None
            return (0.0, 0.0)
        state.path = descend_to_goal(fld, robot_cell)
        dyn_rows, dyn_cols = self._follower_obstacles(state, frame)
        choice = select_destination(state.path, state.robot, self.dso,
                                    dyn_rows, dyn_cols, cfg.limits, self.gmap,
                                    static_margin=cfg.safety)
        dist = np.hypot(choice.dest_xy[0] - state.robot.x,
                        choice.dest_xy[1] - state.robot.y)
        if dist < 0.25 * self.gmap.resolution:
            return (0.0, 0.0)
        return compute_velocities(state.robot, choice, cfg.limits)

    def _follower_obstacles(self, state: MissionState,
                            frame: SensorFrame) -> tuple[np.ndarray, np.ndarray]:
        if self.config.strategy is Strategy.GREEDY:
            return frame.dyn_rows, frame.dyn_cols
        return current_obstacle_cells(state.tracks)

    def _make_record(self, state: MissionState, cmd: tuple[float, float]) -> dict:
        return {
            "clock": round(state.clock, 6),
            "x": state.robot.x, "y": state.robot.y, "theta": state.robot.theta,
            "v": cmd[0], "w": cmd[1],
            "goal": list(state.goal.goal) if state.goal else None,
            "partition": state.goal.partition if state.goal else None,
            "seen": state.mask.seen_count(),
            "discarded": state.mask.discarded_count(),
            "tracks": len(state.tracks),
            "areas": [{"hull": [[round(x, 4), round(y, 4)] for x, y in a.hull],
                       "density": round(a.density, 6), "n_do": a.n_do,
                       "active": a.active} for a in state.areas],
            "status": state.status.value,
        }
