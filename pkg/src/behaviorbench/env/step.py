"""Environment transition: action application, physics sub-steps, reward.

One decision step applies the chosen maneuver to the ego's setpoints, lets
every scripted vehicle reconsider its lane once, then integrates 15 physics
sub-steps in which proportional controllers and car-following run for all
vehicles at once. Collisions are checked after every sub-step.

The lane-change pass is a vectorized twin of mobil_decision(); the scalar
form remains the reference the vectorized code is tested against.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right

import numpy as np

from behaviorbench.env.geometry import sat_overlap
from behaviorbench.env.observation import observe
from behaviorbench.env.state import EnvState
from behaviorbench.env.types import Action, EgoControl, NpcParams, RewardBreakdown
from behaviorbench.errors import ContractViolationError

COLLISION_COEFF = -1.0
SPEED_COEFF = 0.4
LANE_COEFF = 0.1

# Upper bound on the center distance at which two vehicle rectangles can
# still touch (sum of half-diagonals plus slack); pairs farther apart skip
# the exact overlap test.
_PAIR_MARGIN = 0.11
_SPEED_FLOOR = 1e-3


def apply_action(
    control: EgoControl,
    action: Action,
    lane_count: int = 4,
    target_speeds: tuple[float, ...] = (20.0, 25.0, 30.0),
) -> EgoControl:
    """Move the ego setpoints one notch in the commanded direction.

    Lane changes clamp at the road edges and speed changes saturate at the
    ends of the target-speed set; IDLE returns the setpoints unchanged.
    """
    lane = control.target_lane
    speed = control.target_speed
    if action == Action.LEFT:
        lane = max(lane - 1, 0)
    elif action == Action.RIGHT:
        lane = min(lane + 1, lane_count - 1)
    elif action == Action.FASTER:
        idx = bisect_right(target_speeds, speed)
        speed = target_speeds[idx] if idx < len(target_speeds) else target_speeds[-1]
    elif action == Action.SLOWER:
        idx = bisect_left(target_speeds, speed) - 1
        speed = target_speeds[idx] if idx >= 0 else target_speeds[0]
    return EgoControl(target_lane=lane, target_speed=speed)


def reward_breakdown(state: EnvState, collided_now: bool = False) -> RewardBreakdown:
    """Reward of the given state.

    The speed term rescales the ego speed over the target-speed span, the
    lane term rescales the lane index so the rightmost lane scores highest,
    and the collision term applies on the step the collision happened. The
    normalized value maps the total's reachable range onto [0, 1].
    """
    cfg = state.config
    span = cfg.max_target_speed - cfg.min_target_speed
    v_scaled = (float(state.speeds[0]) - cfg.min_target_speed) / span
    v_scaled = min(max(v_scaled, 0.0), 1.0)
    if cfg.lane_count > 1:
        lane_scaled = float(state.lanes[0]) / (cfg.lane_count - 1)
    else:
        lane_scaled = 1.0
    collision_term = COLLISION_COEFF if collided_now else 0.0
    speed_term = SPEED_COEFF * v_scaled
    lane_term = LANE_COEFF * lane_scaled
    total = collision_term + speed_term + lane_term
    low = COLLISION_COEFF
    high = SPEED_COEFF + LANE_COEFF
    return RewardBreakdown(
        collision_term=collision_term,
        speed_term=speed_term,
        lane_term=lane_term,
        total=total,
        normalized=(total - low) / (high - low),
    )


def step(
    state: EnvState, action: Action
) -> tuple[EnvState, np.ndarray, RewardBreakdown, bool]:
    """Advance one decision step.

    The input state is left untouched; a new state is returned. Raises
    ContractViolationError when called on a terminal state.
    """
    if state.done:
        raise ContractViolationError("step() called on a terminal state")
    cfg = state.config
    new = state.copy()
    new.t = state.t + 1

    control = apply_action(
        state.ego_control, Action(action), cfg.lane_count, cfg.target_speeds
    )
    new.targets[0] = control.target_lane
    new.target_speed = control.target_speed

    _lane_change_pass(new)

    collided_now = False
    for _ in range(cfg.substeps):
        if _substep(new):
            collided_now = True
            new.collided = True
            break

    reward = reward_breakdown(new, collided_now)
    return new, observe(new), reward, new.done


def _substep(state: EnvState) -> bool:
    """Integrate one physics sub-step in place; True if the ego collided."""
    cfg = state.config
    leader = _leader_slots(state)

    accel = np.empty_like(state.speeds)
    accel[0] = cfg.speed_gain * (state.target_speed - state.speeds[0])
    # parked wrecks must stay inert, so their car-following term is masked
    accel[1:] = np.where(state.alive[1:], _npc_accelerations(state, leader), 0.0)

    steer = _steering(state)
    beta = np.arctan(0.5 * np.tan(steer))

    dt = cfg.dt
    heading_eff = state.headings + beta
    state.xs += state.speeds * np.cos(heading_eff) * dt
    state.ys += state.speeds * np.sin(heading_eff) * dt
    state.headings += state.speeds * np.sin(beta) / (cfg.vehicle_length / 2.0) * dt
    state.speeds = np.maximum(state.speeds + accel * dt, 0.0)

    half = cfg.lane_width / 2.0
    np.clip(state.ys, -half, cfg.road_width - half, out=state.ys)
    lanes = np.rint(state.ys / cfg.lane_width).astype(np.int64)
    np.clip(lanes, 0, cfg.lane_count - 1, out=lanes)
    state.lanes = np.where(state.alive, lanes, -1)

    return _resolve_collisions(state)


def _leader_slots(state: EnvState) -> np.ndarray:
    """Slot of each vehicle's nearest same-lane leader, -1 if none.

    Dead vehicles carry lane -1 and are parked far away, so they neither
    gain nor become leaders.
    """
    order = np.lexsort((state.xs, state.lanes))
    lanes_sorted = state.lanes[order]
    leader = np.full(len(order), -1, dtype=np.int64)
    same_lane = (lanes_sorted[:-1] == lanes_sorted[1:]) & (lanes_sorted[:-1] >= 0)
    leader[order[:-1][same_lane]] = order[1:][same_lane]
    return leader


def _npc_accelerations(state: EnvState, leader: np.ndarray) -> np.ndarray:
    """Vectorized car-following acceleration for slots 1..n."""
    cfg = state.config
    v = state.speeds[1:]
    free = state.p_amax * (1.0 - (v / state.p_v0) ** state.p_delta)
    accel = free.copy()

    lead = leader[1:]
    has = lead >= 0
    if np.any(has):
        li = lead[has]
        gap = state.xs[li] - state.xs[1:][has] - cfg.vehicle_length
        dv = v[has] - state.speeds[li]
        desired = (
            state.p_s0[has]
            + v[has] * state.p_T[has]
            + v[has] * dv / (2.0 * np.sqrt(state.p_amax[has] * state.p_b[has]))
        )
        with np.errstate(divide="ignore"):
            ratio = desired / gap
        blocked = free[has] - state.p_amax[has] * ratio * ratio
        blocked[gap <= 0.0] = -cfg.hard_braking
        accel[has] = blocked
    return np.clip(accel, -cfg.hard_braking, state.p_amax)


def _steering(state: EnvState) -> np.ndarray:
    """Vectorized two-stage lateral controller for every vehicle."""
    cfg = state.config
    speed = np.maximum(state.speeds, _SPEED_FLOOR)
    target_y = state.targets * cfg.lane_width
    lateral_cmd = cfg.lateral_gain * (target_y - state.ys)
    heading_ref = np.arcsin(np.clip(lateral_cmd / speed, -1.0, 1.0))
    heading_rate = cfg.heading_gain * (heading_ref - state.headings)
    sin_beta = np.clip(heading_rate * cfg.vehicle_length / (2.0 * speed), -1.0, 1.0)
    steer = np.arctan(2.0 * np.tan(np.arcsin(sin_beta)))
    return np.clip(steer, -cfg.max_steering, cfg.max_steering)


def _overlap_slots(state: EnvState, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact rectangle overlap for slot pairs, vectorized.

    Runs the separating-axis test in closed form: on each of the four edge
    normals the rectangles overlap iff the distance between the projected
    centers is at most the sum of the projection radii.
    """
    cfg = state.config
    hl = 0.5 * cfg.vehicle_length
    hw = 0.5 * cfg.vehicle_width
    ca, sa = np.cos(state.headings[a]), np.sin(state.headings[a])
    cb, sb = np.cos(state.headings[b]), np.sin(state.headings[b])
    dx = state.xs[b] - state.xs[a]
    dy = state.ys[b] - state.ys[a]

    hit = np.ones(len(a), dtype=bool)
    for ux, uy in ((ca, sa), (-sa, ca), (cb, sb), (-sb, cb)):
        dist = np.abs(dx * ux + dy * uy)
        ra = hl * np.abs(ux * ca + uy * sa) + hw * np.abs(uy * ca - ux * sa)
        rb = hl * np.abs(ux * cb + uy * sb) + hw * np.abs(uy * cb - ux * sb)
        hit &= dist <= ra + rb
    return hit


def _resolve_collisions(state: EnvState) -> bool:
    """Settle this sub-step's contacts; True if the ego was involved.

    Scripted vehicles that hit each other are removed from the simulation;
    only an ego contact ends the episode.
    """
    cfg = state.config
    reach = np.hypot(cfg.vehicle_length, cfg.vehicle_width) + _PAIR_MARGIN

    near = (
        state.alive[1:]
        & (np.abs(state.xs[1:] - state.xs[0]) < reach)
        & (np.abs(state.ys[1:] - state.ys[0]) < reach)
    )
    cand = np.nonzero(near)[0] + 1
    if cand.size and np.any(
        _overlap_slots(state, np.zeros(cand.size, dtype=np.int64), cand)
    ):
        return True

    live = np.nonzero(state.alive[1:])[0] + 1
    if live.size >= 2:
        dx = np.abs(state.xs[live][:, None] - state.xs[live][None, :])
        dy = np.abs(state.ys[live][:, None] - state.ys[live][None, :])
        ii, jj = np.nonzero(np.triu((dx < reach) & (dy < reach), k=1))
        if ii.size:
            hits = _overlap_slots(state, live[ii], live[jj])
            for a, b in zip(live[ii[hits]], live[jj[hits]]):
                for slot in (int(a), int(b)):
                    state.alive[slot] = False
                    state.lanes[slot] = -1
                    state.speeds[slot] = 0.0
                    state.xs[slot] = 1e9
    return False


def _neighbor_tables(state: EnvState) -> tuple[np.ndarray, np.ndarray]:
    """Leader and follower slot per (vehicle, lane), -1 where absent.

    Within a vehicle's own lane only strictly-ahead vehicles lead it; in
    any other lane a vehicle at exactly the same x counts as the leader,
    which lets the gap test veto a change into a vehicle alongside.
    """
    cfg = state.config
    n1 = len(state.xs)
    lead = np.full((n1, cfg.lane_count), -1, dtype=np.int64)
    foll = np.full((n1, cfg.lane_count), -1, dtype=np.int64)
    for lane in range(cfg.lane_count):
        slots = np.nonzero(state.alive & (state.lanes == lane))[0]
        if slots.size == 0:
            continue
        slots = slots[np.argsort(state.xs[slots], kind="stable")]
        lane_xs = state.xs[slots]
        pos_left = np.searchsorted(lane_xs, state.xs, side="left")
        pos_right = np.searchsorted(lane_xs, state.xs, side="right")
        lead_pos = np.where(state.lanes == lane, pos_right, pos_left)
        ok = lead_pos < slots.size
        lead[ok, lane] = slots[lead_pos[ok]]
        ok = pos_left > 0
        foll[ok, lane] = slots[pos_left[ok] - 1]
    return lead, foll


def _idm_slots(
    state: EnvState,
    params: dict[str, np.ndarray],
    followers: np.ndarray,
    leaders: np.ndarray,
) -> np.ndarray:
    """Car-following acceleration for arbitrary follower/leader slot pairs.

    Rows with follower slot -1 yield 0; leader slot -1 means a free road.
    """
    cfg = state.config
    f = np.maximum(followers, 0)
    has_f = followers >= 0
    has_l = has_f & (leaders >= 0)
    li = np.maximum(leaders, 0)

    v = state.speeds[f]
    free = params["amax"][f] * (1.0 - (v / params["v0"][f]) ** params["delta"][f])
    gap = state.xs[li] - state.xs[f] - cfg.vehicle_length
    dv = v - state.speeds[li]
    desired = (
        params["s0"][f]
        + v * params["T"][f]
        + v * dv / (2.0 * np.sqrt(params["amax"][f] * params["b"][f]))
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(gap != 0.0, desired / gap, np.inf)
    accel = free - np.where(has_l, params["amax"][f] * ratio * ratio, 0.0)
    accel[has_l & (gap <= 0.0)] = -cfg.hard_braking
    accel = np.clip(accel, -cfg.hard_braking, params["amax"][f])
    return np.where(has_f, accel, 0.0)


def _lane_change_pass(state: EnvState) -> None:
    """Let every settled scripted vehicle reconsider its lane once.

    Decisions are taken against a snapshot of the current arrangement, so
    evaluation order cannot matter; vehicles still traveling toward a
    previously chosen lane keep that commitment. The ego's lane is set by
    its own controller and is skipped here, but it does take part in the
    safety and politeness terms of others (with nominal car-following
    parameters when predicting its reaction).
    """
    cfg = state.config
    if cfg.lane_count < 2 or len(state.xs) < 2:
        return

    defaults = NpcParams()
    params = {
        "v0": np.concatenate(([defaults.desired_speed], state.p_v0)),
        "T": np.concatenate(([defaults.time_headway], state.p_T)),
        "s0": np.concatenate(([defaults.min_gap], state.p_s0)),
        "amax": np.concatenate(([defaults.max_accel], state.p_amax)),
        "b": np.concatenate(([defaults.comfort_decel], state.p_b)),
        "delta": np.concatenate(([defaults.exponent], state.p_delta)),
    }

    lead, foll = _neighbor_tables(state)
    slots = np.arange(len(state.xs))
    eligible = state.alive & (state.targets == state.lanes)
    eligible[0] = False
    lanes = np.maximum(state.lanes, 0)
    rows = slots

    own_lead = lead[rows, lanes]
    own_foll = foll[rows, lanes]
    a_self_now = _idm_slots(state, params, slots, own_lead)
    a_old_foll_now = _idm_slots(state, params, own_foll, slots)
    a_old_foll_after = _idm_slots(state, params, own_foll, own_lead)
    old_foll_change = np.where(
        own_foll >= 0, a_old_foll_after - a_old_foll_now, 0.0
    )

    politeness = np.concatenate(([0.0], state.p_pol))
    threshold = np.concatenate(([np.inf], state.p_thresh))
    safe_braking = np.concatenate(([0.0], state.p_bsafe))

    qualified = {}
    gains = {}
    for direction in (-1, 1):
        cand = lanes + direction
        available = eligible & (cand >= 0) & (cand <= cfg.lane_count - 1)
        cand = np.clip(cand, 0, cfg.lane_count - 1)
        cand_lead = lead[rows, cand]
        cand_foll = foll[rows, cand]

        a_self_new = _idm_slots(state, params, slots, cand_lead)
        a_new_foll_pred = _idm_slots(state, params, cand_foll, slots)
        a_new_foll_now = _idm_slots(state, params, cand_foll, cand_lead)
        new_foll_change = np.where(
            cand_foll >= 0, a_new_foll_pred - a_new_foll_now, 0.0
        )

        safe = (cand_foll < 0) | (a_new_foll_pred >= -safe_braking)
        gain = (a_self_new - a_self_now) + politeness * (
            new_foll_change + old_foll_change
        )
        qualified[direction] = available & safe & (gain > threshold)
        gains[direction] = gain

    take_right = qualified[1] & (~qualified[-1] | (gains[1] >= gains[-1]))
    take_left = qualified[-1] & ~take_right
    state.targets[take_right] = lanes[take_right] + 1
    state.targets[take_left] = lanes[take_left] - 1
