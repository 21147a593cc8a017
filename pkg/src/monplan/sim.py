"""Deterministic discrete-time world: robot kinematics, wandering obstacles,
collision detection, sensing, and the single-mission runner.

All randomness flows from one seed through per-obstacle generator streams,
so a (map, config, seed) triple replays bit for bit. Obstacles follow the
still / straight / turn repertoire with uniformly drawn durations; a move
that would overlap a static obstacle is cancelled and a new maneuver drawn.
"""

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .config import MissionConfig, Strategy
from .controller import MissionController, MissionState, MissionStatus, SensorFrame
from .fmm import distance_transform
from .follower import RobotState
from .geometry import cells_in_rect, point_rect_distance
from .grid import UNSEEN, Cell, GridMap
from .partition import build_adjacency_graph, compute_partitions, extract_partition_seeds

OBSTACLE_HALF_LEN = 0.3
OBSTACLE_HALF_WID = 0.2

MODE_STILL = 0
MODE_STRAIGHT = 1
MODE_TURN_LEFT = 2
MODE_TURN_RIGHT = 3
MODE_DURATIONS = {MODE_STILL: (5.0, 15.0), MODE_STRAIGHT: (5.0, 20.0),
                  MODE_TURN_LEFT: (1.0, 3.0), MODE_TURN_RIGHT: (1.0, 3.0)}


@dataclass
class ObstacleSim:
    id: int
    x: float
    y: float
    theta: float
    v_nom: float
    w_nom: float
    rng: np.random.Generator
    half_len: float = OBSTACLE_HALF_LEN
    half_wid: float = OBSTACLE_HALF_WID
    mode: int = MODE_STILL
    mode_t_left: float = 0.0

    def footprint_cells(self, gmap: GridMap) -> tuple[np.ndarray, np.ndarray]:
        return cells_in_rect(self.x, self.y, self.theta, self.half_len, self.half_wid,
                             gmap.resolution, gmap.width, gmap.height)


def _draw_mode(o: ObstacleSim):
    o.mode = int(o.rng.integers(0, 4))
    lo, hi = MODE_DURATIONS[o.mode]
    o.mode_t_left = float(o.rng.uniform(lo, hi))


def _mode_velocities(o: ObstacleSim) -> tuple[float, float]:
    if o.mode == MODE_STILL:
        return 0.0, 0.0
    if o.mode == MODE_STRAIGHT:
        return o.v_nom, 0.0
    if o.mode == MODE_TURN_LEFT:
        return o.v_nom, o.w_nom
    return o.v_nom, -o.w_nom


def _pose_hits_static(gmap: GridMap, x: float, y: float, theta: float,
                      half_len: float, half_wid: float) -> bool:
    reach = math.hypot(half_len, half_wid)
    if x < reach or y < reach or x > gmap.width * gmap.resolution - reach \
            or y > gmap.height * gmap.resolution - reach:
        return True
    rows, cols = cells_in_rect(x, y, theta, half_len, half_wid,
                               gmap.resolution, gmap.width, gmap.height)
    return bool(gmap.occupied[rows, cols].any()) if rows.shape[0] else False


def step_obstacle(o: ObstacleSim, gmap: GridMap, dt: float) -> ObstacleSim:
    """Advance one obstacle by dt, redrawing the maneuver when its timer
    expires or the move would enter a static obstacle."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if o.mode_t_left <= 1e-12:
        _draw_mode(o)
    v, w = _mode_velocities(o)
    theta_mid = o.theta + 0.5 * w * dt
    nx = o.x + v * math.cos(theta_mid) * dt
    ny = o.y + v * math.sin(theta_mid) * dt
    ntheta = _wrap(o.theta + w * dt)
    if v != 0.0 or w != 0.0:
        if _pose_hits_static(gmap, nx, ny, ntheta, o.half_len, o.half_wid):
            _draw_mode(o)
            o.mode_t_left -= dt
            return o
    o.x, o.y, o.theta = nx, ny, ntheta
    o.mode_t_left -= dt
    return o


def _wrap(a: float) -> float:
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def integrate_robot(s: RobotState, cmd: tuple[float, float], dt: float) -> RobotState:
    """Unicycle update with midpoint heading; displacement never exceeds v*dt."""
    v, w = cmd
    theta_mid = s.theta + 0.5 * w * dt
    return RobotState(x=s.x + v * math.cos(theta_mid) * dt,
                      y=s.y + v * math.sin(theta_mid) * dt,
                      theta=_wrap(s.theta + w * dt), v=v, w=w)


def detect_collision(robot: RobotState, radius: float,
                     obstacles: list[ObstacleSim], gmap: GridMap) -> bool:
    """Closed-set contact test of the robot disk against obstacle rectangles
    and occupied map cells."""
    for o in obstacles:
        if point_rect_distance(robot.x, robot.y, o.x, o.y, o.theta,
                               o.half_len, o.half_wid) <= radius:
            return True
    res = gmap.resolution
    c_lo = max(0, int((robot.x - radius) / res) - 1)
    c_hi = min(gmap.width - 1, int((robot.x + radius) / res) + 1)
    r_lo = max(0, int((robot.y - radius) / res) - 1)
    r_hi = min(gmap.height - 1, int((robot.y + radius) / res) + 1)
    for r in range(r_lo, r_hi + 1):
        for c in range(c_lo, c_hi + 1):
            if not gmap.occupied[r, c]:
                continue
            dx = max(c * res - robot.x, 0.0, robot.x - (c + 1) * res)
            dy = max(r * res - robot.y, 0.0, robot.y - (r + 1) * res)
            if math.hypot(dx, dy) <= radius:
                return True
    return False


def min_obstacle_distance(robot: RobotState, radius: float,
                          obstacles: list[ObstacleSim]) -> float:
    """Surface-to-surface clearance between the robot and the nearest obstacle."""
    if not obstacles:
        return math.inf
    best = min(point_rect_distance(robot.x, robot.y, o.x, o.y, o.theta,
                                   o.half_len, o.half_wid) for o in obstacles)
    return max(best - radius, 0.0)


@dataclass
class MissionMetrics:
    status: str = "Running"
    observed_ratio: float = 0.0
    collided: bool = False
    collision_time: float | None = None
    path_length: float = 0.0
    mission_time: float = 0.0
    max_plan_ms: float = 0.0
    mean_plan_ms: float = 0.0
    mean_min_obstacle_dist: float = math.inf
    steps: int = 0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        if math.isinf(d["mean_min_obstacle_dist"]):
            d["mean_min_obstacle_dist"] = None
        return d


@dataclass
class World:
    """A grid map plus simulated obstacles and the robot's true pose."""

    gmap: GridMap
    robot: RobotState
    obstacles: list[ObstacleSim] = field(default_factory=list)

    def dynamic_mask(self) -> np.ndarray:
        mask = np.zeros((self.gmap.height, self.gmap.width), dtype=bool)
        for o in self.obstacles:
            rows, cols = o.footprint_cells(self.gmap)
            mask[rows, cols] = True
        return mask

    def sense(self, mask_states: np.ndarray, r_v: float) -> SensorFrame:
        """Build the controller's sensor frame for the current true state."""
        gmap = self.gmap
        origin = gmap.cell_of(self.robot.x, self.robot.y)
        dyn = self.dynamic_mask()
        blocked = gmap.occupied | dyn
        r_cells = r_v / gmap.resolution
        candidates = (mask_states == UNSEEN) & (~gmap.occupied) & (~dyn)
        fresh = _kernels.newly_visible_cells(blocked, candidates,
                                             origin.row, origin.col, r_cells)
        dyn_pts = _kernels.newly_visible_cells(blocked, dyn, origin.row, origin.col,
                                               r_cells)

        def probe(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
            return _kernels.visibility_batch(blocked, origin.row, origin.col,
                                             rows, cols, r_cells)

        return SensorFrame(origin=origin,
                           new_rows=fresh[:, 0], new_cols=fresh[:, 1],
                           dyn_rows=dyn_pts[:, 0], dyn_cols=dyn_pts[:, 1],
                           probe=probe)


def spawn_obstacles(gmap: GridMap, config: MissionConfig, seed_seq: np.random.SeedSequence,
                    robot_xy: tuple[float, float]) -> list[ObstacleSim]:
    """Uniform placement inside the spawn regions (whole free space when none
    are configured), clear of static obstacles and the robot start."""
    children = seed_seq.spawn(config.n_obstacles + 1)
    init_rng = np.random.default_rng(children[0])
    if config.obstacle_speed == "fast":
        v_nom, w_nom = config.limits.v_max, config.limits.w_max
    else:
        v_nom, w_nom = config.limits.v_max / 3.0, config.limits.w_max / 2.0
    regions = config.spawn_regions or [(0.0, 0.0, gmap.width * gmap.resolution,
                                        gmap.height * gmap.resolution)]
    areas = np.array([(x1 - x0) * (y1 - y0) for x0, y0, x1, y1 in regions])
    weights = areas / areas.sum()
    out = []
    for i in range(config.n_obstacles):
        placed = False
        for _ in range(500):
            ridx = int(init_rng.choice(len(regions), p=weights))
            x0, y0, x1, y1 = regions[ridx]
            x = float(init_rng.uniform(x0, x1))
            y = float(init_rng.uniform(y0, y1))
            theta = float(init_rng.uniform(-math.pi, math.pi))
            if _pose_hits_static(gmap, x, y, theta, OBSTACLE_HALF_LEN, OBSTACLE_HALF_WID):
                continue
            if math.hypot(x - robot_xy[0], y - robot_xy[1]) < 1.0:
                continue
            out.append(ObstacleSim(id=i, x=x, y=y, theta=theta, v_nom=v_nom,
                                   w_nom=w_nom, rng=np.random.default_rng(children[i + 1])))
            placed = True
            break
        if not placed:
            raise RuntimeError(f"could not place obstacle {i}; spawn regions too tight")
    return out


def default_start(gmap: GridMap, dso) -> tuple[float, float, float]:
    flat = int(np.argmax(dso.values * (~gmap.occupied)))
    r, c = divmod(flat, gmap.width)
    x, y = gmap.cell_center(Cell(c, r))
    return x, y, 0.0


def run_mission(gmap: GridMap, config: MissionConfig, seed: int,
                trace=None, timing=None,
                obstacles: list[ObstacleSim] | None = None) -> MissionMetrics:
    """Offline planning followed by the closed control loop until a terminal
    status. trace and timing are optional line-writers (JSONL)."""
    _kernels.warm_kernels()
    dso = distance_transform(gmap)
    seeds = [cell for cell, _ in extract_partition_seeds(dso)]
    if not seeds:
        raise ValueError("map has no open space to monitor")
    partitions = compute_partitions(seeds, dso, gmap)
    graph = build_adjacency_graph(partitions, gmap, config.limits.v_max)
    controller = MissionController(gmap, dso, partitions, graph, config)

    start = config.start or default_start(gmap, dso)
    robot = RobotState(x=start[0], y=start[1], theta=start[2])
    seed_seq = np.random.SeedSequence(seed)
    if obstacles is None:
        obstacles = spawn_obstacles(gmap, config, seed_seq, (robot.x, robot.y))
    world = World(gmap=gmap, robot=robot, obstacles=obstacles)
    state = controller.new_state(robot)

    if trace is not None:
        header = {"type": "header", "map": [
            "".join("#" if gmap.occupied[r, c] else "." for c in range(gmap.width))
            for r in range(gmap.height)],
            "resolution": gmap.resolution, "config": config.to_dict(), "seed": seed}
        trace.write(json.dumps(header, separators=(",", ":")) + "\n")

    metrics = MissionMetrics()
    dt = config.control_period
    plan_ms = []
    dists = []
    while True:
        status = controller.mission_status(state)
        if status is not MissionStatus.RUNNING:
            state.status = status
            break
        frame = world.sense(state.mask.states, config.r_v)
        cmd, state = controller.step(state, frame)
        plan_ms.append(state.last_plan_ms)

        prev = world.robot
        world.robot = integrate_robot(world.robot, cmd, dt)
        state.robot = world.robot
        metrics.path_length += math.hypot(world.robot.x - prev.x, world.robot.y - prev.y)
        for o in world.obstacles:
            step_obstacle(o, gmap, dt)
        state.clock += dt
        metrics.steps += 1

        d = min_obstacle_distance(world.robot, config.limits.radius, world.obstacles)
        if math.isfinite(d):
            dists.append(d)
        record = dict(state.record)
        record["min_obstacle_dist"] = None if math.isinf(d) else round(d, 6)
        if trace is not None:
            trace.write(json.dumps(record, separators=(",", ":")) + "\n")
        if timing is not None:
            timing.write(json.dumps({"clock": round(state.clock, 6),
                                     "plan_ms": state.last_plan_ms}) + "\n")
        if detect_collision(world.robot, config.limits.radius, world.obstacles, gmap):
            state.status = MissionStatus.COLLIDED
            metrics.collided = True
            metrics.collision_time = state.clock
            break

    metrics.status = state.status.value
    metrics.mission_time = state.clock
    metrics.observed_ratio = controller.observed_ratio(state)
    if plan_ms:
        metrics.max_plan_ms = max(plan_ms)
        metrics.mean_plan_ms = sum(plan_ms) / len(plan_ms)
    if dists:
        metrics.mean_min_obstacle_dist = sum(dists) / len(dists)
    return metrics


def run_mission_files(map_path: str, config: MissionConfig, seed: int,
                      out_prefix: str | None = None) -> MissionMetrics:
    """Convenience wrapper: load a map, run, optionally write trace and summary."""
    from .grid import load_map
    with open(map_path) as fh:
        gmap = load_map(fh.read())
    trace = timing = None
    try:
        if out_prefix:
            trace = open(f"{out_prefix}.trace.jsonl", "w")
            timing = open(f"{out_prefix}.timing.jsonl", "w")
        metrics = run_mission(gmap, config, seed, trace=trace, timing=timing)
        if out_prefix:
            with open(f"{out_prefix}.metrics.json", "w") as fh:
                json.dump(metrics.to_dict(), fh, indent=2)
    finally:
        for fh in (trace, timing):
            if fh:
                fh.close()
    return metrics
