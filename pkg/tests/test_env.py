"""End-to-end environment behavior: actions, reward, reset, collisions."""

from __future__ import annotations

import numpy as np
import pytest

from behaviorbench.env.config import EnvConfig
from behaviorbench.env.state import EnvState, reset
from behaviorbench.env.step import apply_action, reward_breakdown, step
from behaviorbench.env.types import Action, EgoControl, NpcParams, VehicleState
from behaviorbench.errors import ConfigurationError, ContractViolationError


def _ego(speed, lane, config=None):
    cfg = config or EnvConfig()
    return VehicleState(x=0.0, y=cfg.lane_center(lane), heading=0.0,
                        speed=speed, length=cfg.vehicle_length,
                        width=cfg.vehicle_width, lane_index=lane)


def _solo_state(speed, lane, config=None, target_speed=None):
    cfg = config or EnvConfig()
    control = EgoControl(target_lane=lane,
                         target_speed=speed if target_speed is None else target_speed)
    return EnvState.from_vehicles(cfg, _ego(speed, lane, cfg), control, [])


# --- action application ---------------------------------------------------

def test_idle_leaves_setpoints_alone():
    control = EgoControl(target_lane=2, target_speed=25.0)
    assert apply_action(control, Action.IDLE) == control


def test_lane_actions_move_one_lane_and_clamp():
    c = EgoControl(target_lane=0, target_speed=25.0)
    assert apply_action(c, Action.LEFT).target_lane == 0
    assert apply_action(c, Action.RIGHT).target_lane == 1
    c = EgoControl(target_lane=3, target_speed=25.0)
    assert apply_action(c, Action.RIGHT).target_lane == 3
    assert apply_action(c, Action.LEFT).target_lane == 2


def test_speed_actions_walk_the_setpoint_ladder():
    c = EgoControl(target_lane=0, target_speed=20.0)
    c = apply_action(c, Action.FASTER)
    assert c.target_speed == 25.0
    c = apply_action(c, Action.FASTER)
    assert c.target_speed == 30.0
    c = apply_action(c, Action.FASTER)
    assert c.target_speed == 30.0
    c = apply_action(c, Action.SLOWER)
    assert c.target_speed == 25.0
    c = apply_action(c, Action.SLOWER)
    assert c.target_speed == 20.0
    c = apply_action(c, Action.SLOWER)
    assert c.target_speed == 20.0


def test_speed_actions_from_off_ladder_setpoint():
    c = EgoControl(target_lane=0, target_speed=22.0)
    assert apply_action(c, Action.FASTER).target_speed == 25.0
    assert apply_action(c, Action.SLOWER).target_speed == 20.0


# --- reward ---------------------------------------------------------------

def test_reward_slowest_leftmost():
    r = reward_breakdown(_solo_state(20.0, 0))
    assert abs(r.total - 0.0) < 1e-12
    assert abs(r.normalized - 2.0 / 3.0) < 1e-12


def test_reward_fastest_rightmost():
    r = reward_breakdown(_solo_state(30.0, 3))
    assert abs(r.total - 0.5) < 1e-12
    assert abs(r.normalized - 1.0) < 1e-12


def test_collision_subtracts_exactly_one():
    state = _solo_state(30.0, 3)
    clean = reward_breakdown(state, collided_now=False)
    crashed = reward_breakdown(state, collided_now=True)
    assert crashed.total == clean.total - 1.0
    assert crashed.collision_term == -1.0


def test_speed_term_clamps_outside_the_setpoint_span():
    assert reward_breakdown(_solo_state(35.0, 0)).speed_term == 0.4
    assert reward_breakdown(_solo_state(5.0, 0)).speed_term == 0.0


def test_intermediate_speed_interpolates():
    r = reward_breakdown(_solo_state(25.0, 1))
    assert r.speed_term == pytest.approx(0.4 * 0.5)
    assert r.lane_term == pytest.approx(0.1 / 3.0)


def test_single_lane_road_scores_full_lane_term():
    cfg = EnvConfig(lane_count=1, npc_count=0)
    r = reward_breakdown(_solo_state(20.0, 0, cfg))
    assert r.lane_term == pytest.approx(0.1)


def test_normalized_reward_stays_in_unit_interval():
    for speed in (10.0, 20.0, 24.0, 30.0):
        for lane in range(4):
            for hit in (False, True):
                r = reward_breakdown(_solo_state(speed, lane), hit)
                assert 0.0 <= r.normalized <= 1.0
                assert r.normalized == pytest.approx((r.total + 1.0) / 1.5)


def test_step_reward_matches_closed_form():
    state = _solo_state(25.0, 2)
    new, obs, reward, done = step(state, Action.IDLE)
    direct = reward_breakdown(new)
    assert reward == direct
    assert not done
    assert obs.shape == (5, 5)


# --- reset ----------------------------------------------------------------

def test_reset_is_deterministic():
    a, obs_a = reset(123)
    b, obs_b = reset(123)
    for name in ("xs", "ys", "speeds", "lanes", "p_v0", "p_pol"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    np.testing.assert_array_equal(obs_a, obs_b)


def test_different_seeds_give_different_traffic():
    a, _ = reset(1)
    b, _ = reset(2)
    assert not np.array_equal(a.xs, b.xs)


def test_reset_spawn_layout():
    for seed in range(200):
        state, _ = reset(seed)
        cfg = state.config
        assert len(state.xs) == cfg.npc_count + 1
        assert state.xs[0] == 0.0
        assert np.all(state.alive)
        # scripted vehicles start ahead with per-lane spacing above the
        # vehicle length, so nobody spawns overlapping
        assert np.all(state.xs[1:] >= cfg.spawn_ahead + cfg.spawn_min_gap)
        for lane in range(cfg.lane_count):
            in_lane = np.sort(state.xs[1:][state.lanes[1:] == lane])
            if in_lane.size > 1:
                assert np.min(np.diff(in_lane)) >= cfg.spawn_min_gap
        lo, hi = cfg.npc_speed_range
        assert np.all((state.speeds[1:] >= lo) & (state.speeds[1:] <= hi))
        np.testing.assert_array_equal(
            state.ys, state.lanes * cfg.lane_width
        )


def test_reset_ego_setpoints():
    state, _ = reset(5)
    assert state.speeds[0] == state.config.initial_speed
    assert state.target_speed == 25.0
    assert state.targets[0] == state.lanes[0]


# --- stepping and controllers ---------------------------------------------

def test_step_does_not_mutate_the_input_state():
    state, _ = reset(11)
    xs = state.xs.copy()
    t = state.t
    step(state, Action.FASTER)
    np.testing.assert_array_equal(state.xs, xs)
    assert state.t == t


def test_speed_controller_converges():
    state = _solo_state(25.0, 1)
    state, _, _, _ = step(state, Action.FASTER)
    for _ in range(8):
        state, _, _, _ = step(state, Action.IDLE)
    assert state.speeds[0] == pytest.approx(30.0, abs=0.05)


def test_lane_controller_converges_without_overshoot():
    state = _solo_state(25.0, 0)
    state, _, _, _ = step(state, Action.RIGHT)
    for _ in range(16):
        state, _, _, _ = step(state, Action.IDLE)
        assert -2.0 <= state.ys[0] <= 14.0
    assert state.ys[0] == pytest.approx(4.0, abs=0.05)
    assert state.lanes[0] == 1
    assert abs(state.headings[0]) < 0.01


def test_horizon_terminates_the_episode():
    cfg = EnvConfig(horizon=3, npc_count=0)
    state = _solo_state(25.0, 1, cfg)
    for i in range(3):
        state, _, _, done = step(state, Action.IDLE)
        assert done == (i == 2)
    assert not state.collided


def test_step_on_terminal_state_raises():
    cfg = EnvConfig(horizon=1, npc_count=0)
    state = _solo_state(25.0, 1, cfg)
    state, _, _, done = step(state, Action.IDLE)
    assert done
    with pytest.raises(ContractViolationError):
        step(state, Action.IDLE)


# --- collisions -----------------------------------------------------------

def _npc(x, y, speed, lane, desired=None):
    v = VehicleState(x=x, y=y, heading=0.0, speed=speed,
                     length=5.0, width=2.0, lane_index=lane)
    p = NpcParams(desired_speed=desired if desired is not None else speed,
                  politeness=0.0, change_threshold=1e9)
    return v, p


def test_ego_collision_ends_the_episode():
    cfg = EnvConfig(npc_count=1)
    control = EgoControl(target_lane=1, target_speed=20.0)
    state = EnvState.from_vehicles(
        cfg, _ego(20.0, 1, cfg), control, [_npc(4.0, 4.0, 20.0, 1)]
    )
    state, _, reward, done = step(state, Action.IDLE)
    assert done
    assert state.collided
    assert reward.collision_term == -1.0
    with pytest.raises(ContractViolationError):
        step(state, Action.IDLE)


def test_touching_bumpers_count_as_a_collision():
    cfg = EnvConfig(npc_count=1)
    control = EgoControl(target_lane=1, target_speed=20.0)
    state = EnvState.from_vehicles(
        cfg, _ego(20.0, 1, cfg), control, [_npc(5.0, 4.0, 20.0, 1)]
    )
    _, _, _, done = step(state, Action.IDLE)
    assert done


def test_npc_pileup_removes_both_and_episode_continues():
    cfg = EnvConfig(npc_count=2)
    control = EgoControl(target_lane=0, target_speed=20.0)
    state = EnvState.from_vehicles(
        cfg, _ego(20.0, 0, cfg), control,
        [_npc(200.0, 8.0, 20.0, 2), _npc(203.0, 8.0, 20.0, 2)],
    )
    new, _, reward, done = step(state, Action.IDLE)
    assert not done
    assert reward.collision_term == 0.0
    for slot in (1, 2):
        assert not new.alive[slot]
        assert new.lanes[slot] == -1
        assert new.speeds[slot] == 0.0
        assert new.xs[slot] == 1e9
    # parked wrecks stay invisible and inert afterwards
    new, _, _, done = step(new, Action.IDLE)
    assert not done
    assert not new.alive[1] and not new.alive[2]


def test_far_away_npc_does_not_collide():
    cfg = EnvConfig(npc_count=1)
    control = EgoControl(target_lane=1, target_speed=20.0)
    state = EnvState.from_vehicles(
        cfg, _ego(20.0, 1, cfg), control, [_npc(60.0, 4.0, 20.0, 1)]
    )
    _, _, _, done = step(state, Action.IDLE)
    assert not done


# --- config validation ----------------------------------------------------

def test_config_rejects_bad_values():
    with pytest.raises(ConfigurationError):
        EnvConfig(lane_count=0)
    with pytest.raises(ConfigurationError):
        EnvConfig(dt=0.0)
    with pytest.raises(ConfigurationError):
        EnvConfig(target_speeds=(30.0, 20.0))
    with pytest.raises(ConfigurationError):
        EnvConfig(idm_jitter=1.0)


def test_config_hash_is_stable_and_sensitive():
    assert EnvConfig().config_hash() == EnvConfig().config_hash()
    assert EnvConfig().config_hash() != EnvConfig(horizon=81).config_hash()


def test_config_round_trips_through_dict():
    cfg = EnvConfig(npc_count=3, horizon=10)
    again = EnvConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()
