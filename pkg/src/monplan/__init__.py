"""Occupation-aware monitoring-mission planning on 2D occupancy grids.

A two-layer planner for observing a known static environment that moving
obstacles share with the robot: an offline pass splits the free space into
wavefront-grown partitions joined by an adjacency graph, and an online loop
picks viewing goals by branch cost, wraps observed obstacle trajectories in
convex dynamic areas, and plans paths whose front speeds avoid densely
occupied regions. A deterministic simulator and batch harness support
strategy comparisons.
"""

from .config import MissionConfig, Strategy
from .controller import MissionController, MissionState, MissionStatus, SensorFrame
from .dynamic_areas import (DynamicArea, MemoryMode, ObstacleTrack, apply_memory_mode,
                            build_areas, cluster_detections, inflate, project_tracks,
                            track_obstacles)
from .fmm import ScalarField, VelocityField, descend, distance_transform, solve
from .follower import (DestinationChoice, KinodynamicLimits, RobotState,
                       compute_velocities, select_destination)
from .goals import (GoalDecision, PlanTree, branch_cost, build_tree, compute_goal,
                    select_branch, select_partition, wait_time)
from .grid import (Cell, GridMap, MapFormatError, ObservedMask, frontier_cells,
                   load_map, visible_cells)
from .partition import (AdjacencyGraph, Partition, build_adjacency_graph,
                        compute_partitions, extract_partition_seeds)
from .sim import (MissionMetrics, ObstacleSim, World, detect_collision,
                  integrate_robot, run_mission, step_obstacle)
from .velocity_map import (GoalUnreachable, PlannerInputs, build_velocity_map,
                           edge_traverses_dense, plan_path)

__version__ = "0.1.0"

__all__ = [
    "AdjacencyGraph", "Cell", "DestinationChoice", "DynamicArea", "GoalDecision",
    "GoalUnreachable", "GridMap", "KinodynamicLimits", "MapFormatError",
    "MemoryMode", "MissionConfig", "MissionController", "MissionMetrics",
    "MissionState", "MissionStatus", "ObservedMask", "ObstacleSim", "ObstacleTrack",
    "Partition", "PlanTree", "PlannerInputs", "RobotState", "ScalarField",
    "SensorFrame", "Strategy", "VelocityField", "World", "apply_memory_mode",
    "branch_cost", "build_adjacency_graph", "build_areas", "build_tree",
    "build_velocity_map", "cluster_detections", "compute_goal",
    "compute_partitions", "compute_velocities", "descend", "detect_collision",
    "distance_transform", "edge_traverses_dense", "extract_partition_seeds",
    "frontier_cells", "inflate", "integrate_robot", "load_map", "plan_path",
    "project_tracks", "run_mission", "select_branch", "select_destination",
    "select_partition", "solve", "step_obstacle", "track_obstacles",
    "visible_cells", "wait_time",
]
