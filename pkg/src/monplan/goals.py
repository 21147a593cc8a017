"""Online selection of where to monitor next.

A Dijkstra tree over the partition graph (rooted at the robot's partition,
minus partitions currently cut off) enumerates candidate routes. Each branch
is priced by travel time plus an estimated viewing workload per partition;
the cheapest branch's first not-fully-seen partition becomes the target, and
a goal cell inside it is picked from the robot's arrival-time field.
"""

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .fmm import ScalarField
from .grid import Cell, GridMap, UNSEEN, ObservedMask
from .partition import AdjacencyGraph, Partition

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class PlanTree:
    """Shortest-path tree over the partition graph."""

    root: int
    parent: dict[int, int]
    dist: dict[int, float]
    branches: list[list[int]]


@dataclass
class GoalDecision:
    """Chosen partition, viewing position, and how long to wait there when
    the view stays blocked."""

    partition: int
    goal: Cell
    wait_budget: float


class BranchExhausted(Exception):
    """Every partition of the branch is fully handled."""


def build_tree(graph: AdjacencyGraph, root: int, blocked: set[int]) -> PlanTree:
    """Dijkstra by travel cost over the non-blocked vertices."""
    if root in blocked:
        raise ValueError(f"tree root {root} is blocked")
    dist = {root: 0.0}
    parent: dict[int, int] = {}
    heap = [(0.0, root)]
    visited: set[int] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in visited:
            continue
        visited.add(u)
        for v in graph.neighbors(u):
            if v in blocked:
                continue
            nd = d + graph.cost(u, v)
            if nd < dist.get(v, np.inf) or (nd == dist.get(v, np.inf) and u < parent.get(v, np.inf)):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    children: dict[int, list[int]] = {v: [] for v in visited}
    for v, p in parent.items():
        children[p].append(v)
    leaves = sorted(v for v in visited if not children[v])
    branches = []
    for leaf in leaves:
        seq = [leaf]
        while seq[-1] != root:
            seq.append(parent[seq[-1]])
        branches.append(seq[::-1])
    if not branches:
        branches = [[root]]
    return PlanTree(root=root, parent=parent, dist=dist, branches=branches)


def monitoring_cost(partition: Partition, unseen: int, r_v: float) -> float:
    """Estimated viewing workload of one partition.

    A region fully coverable from its seed (range at least d_max) costs one
    unit. Otherwise the cost scales with the visibility range, the unseen
    fraction, and how far the region extends beyond the range; the geometric
    factor is floored at zero so small regions never earn a negative cost.
    """
    if r_v >= partition.d_max:
        return 1.0
    total = partition.size
    if total == 0:
        return 0.0
    ratio = unseen / total
    stretch = (partition.d_min / r_v) * (partition.d_max / r_v) - 1.0
    return r_v * ratio * max(0.0, stretch)


def branch_cost(branch: list[int], partitions: dict[int, Partition],
                unseen_counts: np.ndarray, r_v: float, v_max: float,
                seeds_xy: dict[int, tuple[float, float]]) -> float:
    """Travel time along the branch seed chain plus per-partition viewing costs."""
    travel = 0.0
    for a, b in zip(branch, branch[1:]):
        (xa, ya), (xb, yb) = seeds_xy[a], seeds_xy[b]
        travel += float(np.hypot(xa - xb, ya - yb)) / v_max
    monitor = sum(monitoring_cost(partitions[i], int(unseen_counts[i]), r_v) for i in branch)
    return travel + monitor


def select_branch(branches: list[list[int]], costs: list[float]) -> list[int]:
    """Cheapest branch; ties go to the lexicographically smallest id sequence."""
    if not branches:
        raise ValueError("no branches to select from")
    best = min(range(len(branches)), key=lambda i: (costs[i], branches[i]))
    return branches[best]


def select_partition(branch: list[int], unseen_counts: np.ndarray) -> int:
    """First partition along the branch that still has unseen cells."""
    for pid in branch:
        if unseen_counts[pid] > 0:
            return pid
    raise BranchExhausted(f"branch {branch} fully handled")


def compute_goal(partition: Partition, r_v: float, dr: ScalarField,
                 mask: ObservedMask, gmap: GridMap) -> Cell:
    """Viewing position for a partition.

    When the range covers the whole region the seed is the goal. Otherwise
    the unseen cells are grouped by 4-connectivity and the goal is the cell
    of the smallest group that the robot's arrival-time field reaches first.
    """
    if r_v >= partition.d_max:
        return partition.seed
    unseen = np.zeros((gmap.height, gmap.width), dtype=bool)
    unseen[partition.rows, partition.cols] = (
        mask.states[partition.rows, partition.cols] == UNSEEN)
    if not unseen.any():
        raise ValueError(f"partition {partition.id} has no unseen cells")
    groups, n = ndimage.label(unseen, structure=FOUR_CONNECTED)
    best_group = None
    best_key = None
    for g in range(1, n + 1):
        rows, cols = np.nonzero(groups == g)
        key = (rows.shape[0], int((rows * gmap.width + cols).min()))
        if best_key is None or key < best_key:
            best_key = key
            best_group = (rows, cols)
    rows, cols = best_group
    values = dr.values[rows, cols]
    order = np.lexsort((rows * gmap.width + cols, values))
    pick = order[0]
    return Cell(int(cols[pick]), int(rows[pick]))


def wait_time(partition: Partition, v_max: float) -> float:
    """Standby budget at a goal: the out-and-back crossing time of the region."""
    if v_max <= 0:
        raise ValueError("v_max must be positive")
    return 2.0 * partition.d_max / v_max
