"""Car-following acceleration checks against closed-form values."""

from __future__ import annotations

import math

import pytest

from behaviorbench.env.idm import desired_gap, idm_acceleration
from behaviorbench.env.types import NpcParams, VehicleState


def _car(x, speed, length=5.0):
    return VehicleState(x=x, y=0.0, heading=0.0, speed=speed,
                        length=length, width=2.0)


def test_free_road_at_desired_speed_is_zero():
    p = NpcParams()
    assert idm_acceleration(_car(0, p.desired_speed), None, p) == pytest.approx(0.0)


def test_free_road_below_desired_speed_accelerates():
    p = NpcParams()
    a = idm_acceleration(_car(0, 0.5 * p.desired_speed), None, p)
    expected = p.max_accel * (1.0 - 0.5 ** p.exponent)
    assert a == pytest.approx(expected)
    assert a > 0.0


def test_free_road_above_desired_speed_brakes():
    p = NpcParams()
    assert idm_acceleration(_car(0, 1.2 * p.desired_speed), None, p) < 0.0


def test_standstill_desired_gap_is_min_gap():
    p = NpcParams()
    assert desired_gap(0.0, 0.0, p) == pytest.approx(p.min_gap)


def test_desired_gap_closed_form():
    p = NpcParams()
    v, lv = 20.0, 15.0
    expected = p.min_gap + v * p.time_headway + v * (v - lv) / (
        2.0 * math.sqrt(p.max_accel * p.comfort_decel)
    )
    assert desired_gap(v, lv, p) == pytest.approx(expected)


def test_interaction_term_closed_form():
    p = NpcParams()
    follower = _car(0.0, 20.0)
    leader = _car(40.0, 18.0)
    gap = 40.0 - 5.0
    expected = p.max_accel * (
        1.0
        - (20.0 / p.desired_speed) ** p.exponent
        - (desired_gap(20.0, 18.0, p) / gap) ** 2
    )
    expected = min(max(expected, -10.0), p.max_accel)
    assert idm_acceleration(follower, leader, p) == pytest.approx(expected)


def test_touching_vehicles_emergency_brake():
    p = NpcParams()
    follower = _car(0.0, 10.0)
    leader = _car(5.0, 10.0)  # bumper to bumper, gap exactly zero
    assert idm_acceleration(follower, leader, p) == -10.0


def test_overlapping_vehicles_emergency_brake():
    p = NpcParams()
    assert idm_acceleration(_car(0.0, 10.0), _car(3.0, 10.0), p) == -10.0


def test_output_clipped_to_hard_braking():
    p = NpcParams()
    follower = _car(0.0, 30.0)
    leader = _car(5.2, 0.0)  # tiny positive gap, huge interaction term
    assert idm_acceleration(follower, leader, p) == -10.0


def test_custom_hard_braking_limit():
    p = NpcParams()
    a = idm_acceleration(_car(0.0, 10.0), _car(5.0, 10.0), p, hard_braking=6.0)
    assert a == -6.0


def test_far_leader_barely_matters():
    p = NpcParams()
    free = idm_acceleration(_car(0.0, 20.0), None, p)
    with_leader = idm_acceleration(_car(0.0, 20.0), _car(5000.0, 20.0), p)
    assert with_leader == pytest.approx(free, abs=1e-3)
    assert with_leader <= free
