"""Mission configuration: strategy choice, thresholds, robot limits, scenario."""

import json
from dataclasses import dataclass, field
from enum import Enum

from .dynamic_areas import MemoryMode
from .follower import KinodynamicLimits


class Strategy(Enum):
    GREEDY = "Greedy"
    MADP = "MADP"
    MADA = "MADA"


@dataclass
class MissionConfig:
    strategy: Strategy = Strategy.MADA
    o_th: float = 0.1
    safety_factor: float = 1.5          # obstacle inflation, in robot radii
    memory_mode: MemoryMode = MemoryMode.KEEP_POINTS_FORGET_EMPTY_AREAS
    projections: bool = False
    projection_horizon: float = 2.0
    r_v: float = 30.0
    limits: KinodynamicLimits = field(default_factory=KinodynamicLimits)
    control_period: float = 0.1
    timeout: float = 600.0
    n_obstacles: int = 0
    obstacle_speed: str = "slow"        # "slow" or "fast"
    start: tuple[float, float, float] | None = None   # metric x, y, theta
    spawn_regions: list[tuple[float, float, float, float]] = field(default_factory=list)
    blocked_grace: float = 45.0         # seconds without any reachable goal before Blocked
    greedy_stall: float = 15.0          # seconds stalled at a frontier before discarding
    goal_improvement: float = 0.1       # fractional branch-cost gain required to retarget

    def __post_init__(self):
        if self.control_period <= 0:
            raise ValueError("control_period must be positive")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not 0.0 <= self.o_th <= 1.0:
            raise ValueError("o_th must lie in [0, 1]")

    @property
    def safety(self) -> float:
        return self.safety_factor * self.limits.radius

    @classmethod
    def from_dict(cls, data: dict) -> "MissionConfig":
        data = dict(data)
        kwargs = {}
        if "strategy" in data:
            kwargs["strategy"] = Strategy(data.pop("strategy"))
        if "memory_mode" in data:
            kwargs["memory_mode"] = MemoryMode(data.pop("memory_mode"))
        limit_keys = {"v_max": "v_max", "w_max": "w_max", "dv": "dv", "dw": "dw",
                      "robot_radius": "radius"}
        limit_kwargs = {}
        for key, attr in limit_keys.items():
            if key in data:
                limit_kwargs[attr] = float(data.pop(key))
        if limit_kwargs:
            kwargs["limits"] = KinodynamicLimits(**{**KinodynamicLimits().__dict__,
                                                    **limit_kwargs})
        if "start" in data:
            raw = data.pop("start")
            kwargs["start"] = None if raw is None else tuple(float(v) for v in raw)
        if "spawn_regions" in data:
            kwargs["spawn_regions"] = [tuple(float(v) for v in r)
                                       for r in data.pop("spawn_regions")]
        for key, value in data.items():
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown config key: {key}")
            kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "o_th": self.o_th,
            "safety_factor": self.safety_factor,
            "memory_mode": self.memory_mode.value,
            "projections": self.projections,
            "projection_horizon": self.projection_horizon,
            "r_v": self.r_v,
            "v_max": self.limits.v_max,
            "w_max": self.limits.w_max,
            "dv": self.limits.dv,
            "dw": self.limits.dw,
            "robot_radius": self.limits.radius,
            "control_period": self.control_period,
            "timeout": self.timeout,
            "n_obstacles": self.n_obstacles,
            "obstacle_speed": self.obstacle_speed,
            "start": list(self.start) if self.start else None,
            "spawn_regions": [list(r) for r in self.spawn_regions],
            "blocked_grace": self.blocked_grace,
            "greedy_stall": self.greedy_stall,
            "goal_improvement": self.goal_improvement,
        }


def load_config(path: str) -> MissionConfig:
    with open(path) as fh:
        return MissionConfig.from_dict(json.load(fh))
