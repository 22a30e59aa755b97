"""Environment configuration.

All physical and behavioral constants of the highway simulation live here so
that a single config hash pins down the dynamics exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

from behaviorbench.errors import ConfigurationError


@dataclass(frozen=True)
class EnvConfig:
    """Parameters of the highway environment.

    Args:
        lane_count: Number of parallel lanes, indexed 0 (leftmost) upward.
        lane_width: Lane width in meters; lane centers sit at
            ``lane_index * lane_width``.
        vehicle_length: Bumper-to-bumper length of every vehicle in meters.
        vehicle_width: Width of every vehicle in meters.
        npc_count: Number of scripted vehicles spawned ahead of the ego at
            reset.
        horizon: Episode length in decision steps; episodes end at the
            horizon or on ego collision, whichever comes first.
        substeps: Physics sub-steps integrated per decision step.
        dt: Duration of one physics sub-step in seconds.
        target_speeds: Ordered speed setpoints the FASTER/SLOWER actions
            move between.
        initial_speed: Ego longitudinal speed at reset.
        speed_gain: Proportional gain of the ego speed controller.
        lateral_gain: Gain turning lateral offset into a lateral speed
            command.
        heading_gain: Gain turning heading error into a heading-rate
            command.
        max_steering: Steering angle clip in radians.
        spawn_ahead: Longitudinal headstart of the first spawned vehicle in
            each lane, relative to the ego.
        spawn_min_gap: Minimum longitudinal spacing between consecutive
            spawns in a lane.
        spawn_gap_jitter: Mean of the exponential jitter added to the
            minimum spacing.
        npc_speed_range: Uniform range of initial NPC speeds.
        idm_desired_speed: Nominal IDM desired speed before jitter.
        idm_time_headway: Nominal IDM time headway in seconds.
        idm_min_gap: Nominal IDM standstill gap in meters.
        idm_max_accel: Nominal IDM acceleration bound.
        idm_comfort_decel: Nominal IDM comfortable braking bound.
        idm_exponent: Nominal IDM free-road exponent.
        idm_jitter: Relative half-width of the uniform jitter applied to
            the nominal IDM parameters per vehicle.
        politeness_range: Uniform range of the lane-change politeness
            factor.
        change_threshold: Nominal acceleration gain required before a lane
            change is attempted.
        safe_braking: Nominal braking imposed on a new follower above which
            a lane change is vetoed.
        hard_braking: Emergency deceleration bound applied when gaps close.
        sensing_range: Longitudinal distance within which other vehicles
            are observable.
        obs_x_scale: Normalization half-range for longitudinal offsets.
        obs_y_scale: Normalization half-range for lateral offsets.
        obs_speed_scale: Normalization half-range for velocity components.
        observed_vehicles: Number of nearby-vehicle rows in an observation.
    """

    lane_count: int = 4
    lane_width: float = 4.0
    vehicle_length: float = 5.0
    vehicle_width: float = 2.0
    npc_count: int = 50
    horizon: int = 80
    substeps: int = 15
    dt: float = 1.0 / 15.0
    target_speeds: tuple[float, ...] = (20.0, 25.0, 30.0)
    initial_speed: float = 25.0
    speed_gain: float = 1.0 / 0.6
    lateral_gain: float = 1.0 / 3.0
    heading_gain: float = 1.0 / 0.25
    max_steering: float = math.pi / 4.0
    spawn_ahead: float = 20.0
    spawn_min_gap: float = 7.0
    spawn_gap_jitter: float = 18.0
    npc_speed_range: tuple[float, float] = (21.0, 26.0)
    idm_desired_speed: float = 25.0
    idm_time_headway: float = 1.5
    idm_min_gap: float = 10.0
    idm_max_accel: float = 3.0
    idm_comfort_decel: float = 5.0
    idm_exponent: float = 4.0
    idm_jitter: float = 0.15
    politeness_range: tuple[float, float] = (0.1, 0.5)
    change_threshold: float = 0.2
    safe_braking: float = 4.0
    hard_braking: float = 10.0
    sensing_range: float = 100.0
    obs_x_scale: float = 100.0
    obs_y_scale: float = 16.0
    obs_speed_scale: float = 80.0
    observed_vehicles: int = 4

    def __post_init__(self) -> None:
        if self.lane_count < 1:
            raise ConfigurationError("lane_count must be at least 1")
        if self.lane_width <= 0:
            raise ConfigurationError("lane_width must be positive")
        if self.vehicle_length <= 0 or self.vehicle_width <= 0:
            raise ConfigurationError("vehicle dimensions must be positive")
        if self.npc_count < 0:
            raise ConfigurationError("npc_count must be non-negative")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be at least 1")
        if self.substeps < 1:
            raise ConfigurationError("substeps must be at least 1")
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")
        if not self.target_speeds:
            raise ConfigurationError("target_speeds must be non-empty")
        if list(self.target_speeds) != sorted(self.target_speeds):
            raise ConfigurationError("target_speeds must be non-decreasing")
        if self.initial_speed < 0:
            raise ConfigurationError("initial_speed must be non-negative")
        lo, hi = self.npc_speed_range
        if lo < 0 or hi < lo:
            raise ConfigurationError("npc_speed_range must be ordered and non-negative")
        plo, phi = self.politeness_range
        if not (0 <= plo <= phi):
            raise ConfigurationError("politeness_range must be ordered and non-negative")
        if not (0 <= self.idm_jitter < 1):
            raise ConfigurationError("idm_jitter must lie in [0, 1)")
        for name in (
            "speed_gain",
            "lateral_gain",
            "heading_gain",
            "max_steering",
            "spawn_min_gap",
            "idm_desired_speed",
            "idm_time_headway",
            "idm_min_gap",
            "idm_max_accel",
            "idm_comfort_decel",
            "idm_exponent",
            "change_threshold",
            "safe_braking",
            "hard_braking",
            "sensing_range",
            "obs_x_scale",
            "obs_y_scale",
            "obs_speed_scale",
        ):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.spawn_gap_jitter < 0 or self.spawn_ahead < 0:
            raise ConfigurationError("spawn distances must be non-negative")
        if self.observed_vehicles < 0:
            raise ConfigurationError("observed_vehicles must be non-negative")

    @property
    def road_width(self) -> float:
        return self.lane_count * self.lane_width

    def lane_center(self, lane_index: int) -> float:
        return lane_index * self.lane_width

    @property
    def min_target_speed(self) -> float:
        return self.target_speeds[0]

    @property
    def max_target_speed(self) -> float:
        return self.target_speeds[-1]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EnvConfig":
        kwargs = dict(data)
        for key in ("target_speeds", "npc_speed_range", "politeness_range"):
            if key in kwargs and isinstance(kwargs[key], list):
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()
