"""Core value types shared across the environment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum


class Action(IntEnum):
    """Discrete ego maneuvers."""

    LEFT = 0
    IDLE = 1
    RIGHT = 2
    FASTER = 3
    SLOWER = 4

    @classmethod
    def from_name(cls, name: str) -> "Action":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown action name: {name!r}") from None


@dataclass
class VehicleState:
    """Pose and motion of a single vehicle.

    Coordinates are road-aligned: x increases along the road, y increases
    toward higher lane indices, heading 0 points along +x.
    """

    x: float
    y: float
    heading: float
    speed: float
    length: float = 5.0
    width: float = 2.0
    lane_index: int = 0
    alive: bool = True

    @property
    def vx(self) -> float:
        return self.speed * math.cos(self.heading)

    @property
    def vy(self) -> float:
        return self.speed * math.sin(self.heading)


@dataclass
class EgoControl:
    """Setpoints the ego's low-level controllers track."""

    target_lane: int
    target_speed: float


@dataclass
class NpcParams:
    """Per-vehicle car-following and lane-change parameters.

    Args:
        desired_speed: Free-road speed the vehicle settles at.
        time_headway: Desired time gap to the leader in seconds.
        min_gap: Standstill distance kept to the leader in meters.
        max_accel: Largest forward acceleration.
        comfort_decel: Comfortable braking used in the desired-gap term.
        exponent: Free-road acceleration exponent.
        politeness: Weight on the accelerations imposed on neighbors when
            judging a lane change.
        change_threshold: Net acceleration gain required to change lanes.
        safe_braking: Deceleration forced on a new follower above which a
            change is rejected.
    """

    desired_speed: float = 25.0
    time_headway: float = 1.5
    min_gap: float = 10.0
    max_accel: float = 3.0
    comfort_decel: float = 5.0
    exponent: float = 4.0
    politeness: float = 0.3
    change_threshold: float = 0.2
    safe_braking: float = 4.0


@dataclass
class RewardBreakdown:
    """Per-step reward and its additive components."""

    collision_term: float
    speed_term: float
    lane_term: float
    total: float
    normalized: float

    def to_dict(self) -> dict:
        return {
            "collision_term": self.collision_term,
            "speed_term": self.speed_term,
            "lane_term": self.lane_term,
            "total": self.total,
            "normalized": self.normalized,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RewardBreakdown":
        return cls(
            collision_term=float(data["collision_term"]),
            speed_term=float(data["speed_term"]),
            lane_term=float(data["lane_term"]),
            total=float(data["total"]),
            normalized=float(data["normalized"]),
        )
