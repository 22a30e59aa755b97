"""Intelligent-driver car-following acceleration."""

from __future__ import annotations

import math

from behaviorbench.env.types import NpcParams, VehicleState


def desired_gap(speed: float, leader_speed: float, params: NpcParams) -> float:
    """Gap the follower tries to keep at the given speeds."""
    dv = speed - leader_speed
    return (
        params.min_gap
        + speed * params.time_headway
        + speed * dv / (2.0 * math.sqrt(params.max_accel * params.comfort_decel))
    )


def idm_acceleration(
    follower: VehicleState,
    leader: VehicleState | None,
    params: NpcParams,
    hard_braking: float = 10.0,
) -> float:
    """Acceleration of a car-following vehicle.

    The free-road term relaxes the speed toward the desired speed; the
    interaction term compares the desired gap against the actual
    bumper-to-bumper gap to the leader. A non-positive gap means the
    vehicles already touch, so the result saturates at emergency braking.
    The output is clipped to [-hard_braking, max_accel].
    """
    accel = params.max_accel * (
        1.0 - (follower.speed / params.desired_speed) ** params.exponent
    )
    if leader is not None:
        gap = leader.x - follower.x - 0.5 * (leader.length + follower.length)
        if gap <= 0.0:
            return -hard_braking
        ratio = desired_gap(follower.speed, leader.speed, params) / gap
        accel -= params.max_accel * ratio * ratio
    return min(max(accel, -hard_braking), params.max_accel)
