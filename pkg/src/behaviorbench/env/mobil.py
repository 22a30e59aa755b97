"""Lane-change decisions balancing own gain against imposed braking."""

from __future__ import annotations

from dataclasses import dataclass, field

from behaviorbench.env.idm import idm_acceleration
from behaviorbench.env.types import NpcParams, VehicleState

KEEP = 0
LEFT = -1
RIGHT = 1


@dataclass
class LaneNeighbors:
    """Nearest vehicles ahead of and behind a reference position in a lane.

    A vehicle exactly alongside (equal x) counts as the leader so that a
    change into it is vetoed through the emergency-braking response of the
    gap test.
    """

    leader: VehicleState | None = None
    follower: VehicleState | None = None
    follower_params: NpcParams | None = None


@dataclass
class Neighborhood:
    """Neighbor context for one vehicle; None marks a missing adjacent lane."""

    current: LaneNeighbors = field(default_factory=LaneNeighbors)
    left: LaneNeighbors | None = None
    right: LaneNeighbors | None = None


def _follower_accel(
    nb: LaneNeighbors, leader: VehicleState | None, hard_braking: float
) -> float:
    assert nb.follower is not None
    params = nb.follower_params if nb.follower_params is not None else NpcParams()
    return idm_acceleration(nb.follower, leader, params, hard_braking)


def _candidate_gain(
    vehicle: VehicleState,
    params: NpcParams,
    current: LaneNeighbors,
    target: LaneNeighbors,
    a_self_now: float,
    hard_braking: float,
) -> float | None:
    """Politeness-weighted acceleration gain of moving into the target lane.

    Returns None when the change would force the target lane's follower to
    brake harder than the safe limit.
    """
    if target.follower is not None:
        a_new_follower = _follower_accel(target, vehicle, hard_braking)
        if a_new_follower < -params.safe_braking:
            return None
        a_new_follower_now = _follower_accel(target, target.leader, hard_braking)
        new_follower_change = a_new_follower - a_new_follower_now
    else:
        new_follower_change = 0.0

    if current.follower is not None:
        a_old_follower_now = _follower_accel(current, vehicle, hard_braking)
        a_old_follower_after = _follower_accel(current, current.leader, hard_braking)
        old_follower_change = a_old_follower_after - a_old_follower_now
    else:
        old_follower_change = 0.0

    a_self_new = idm_acceleration(vehicle, target.leader, params, hard_braking)
    own_gain = a_self_new - a_self_now
    return own_gain + params.politeness * (new_follower_change + old_follower_change)


def mobil_decision(
    vehicle: VehicleState,
    params: NpcParams,
    neighborhood: Neighborhood,
    hard_braking: float = 10.0,
) -> int:
    """Choose between keeping the lane and moving one lane left or right.

    A candidate lane must pass the new-follower safety test and offer a
    weighted gain strictly above the change threshold. When both directions
    qualify the larger gain wins, with ties resolved to the right.
    Returns -1 (left), 0 (keep) or +1 (right).
    """
    a_self_now = idm_acceleration(
        vehicle, neighborhood.current.leader, params, hard_braking
    )
    best = KEEP
    best_gain = params.change_threshold
    for direction, target in ((LEFT, neighborhood.left), (RIGHT, neighborhood.right)):
        if target is None:
            continue
        gain = _candidate_gain(
            vehicle, params, neighborhood.current, target, a_self_now, hard_braking
        )
        if gain is None:
            continue
        if gain > best_gain or (gain == best_gain and best == LEFT):
            best = direction
            best_gain = gain
    return best
