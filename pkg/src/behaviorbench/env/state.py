"""Environment state container and episode initialization.

The state keeps every vehicle in flat arrays (slot 0 is the ego) so the
physics loop can integrate all of them at once; the dataclass views exposed
through properties are built on demand.
"""

from __future__ import annotations

import numpy as np

from behaviorbench.env.config import EnvConfig
from behaviorbench.env.observation import observe
from behaviorbench.env.types import EgoControl, NpcParams, VehicleState

_PARAM_FIELDS = (
    "p_v0",
    "p_T",
    "p_s0",
    "p_amax",
    "p_b",
    "p_delta",
    "p_pol",
    "p_thresh",
    "p_bsafe",
)
_VEHICLE_FIELDS = ("xs", "ys", "headings", "speeds", "lanes", "targets", "alive")


class EnvState:
    """Full simulation state at one decision step.

    Attributes:
        config: The environment configuration the state was built under.
        t: Decision steps elapsed since reset.
        collided: Whether the ego has hit another vehicle.
        rng: Deterministic random stream owned by this state. All reset
            randomness is drawn from it; the dynamics themselves consume
            no randomness.
    """

    def __init__(
        self,
        config: EnvConfig,
        t: int,
        collided: bool,
        rng: np.random.Generator,
        target_speed: float,
        arrays: dict[str, np.ndarray],
    ) -> None:
        self.config = config
        self.t = t
        self.collided = collided
        self.rng = rng
        self.target_speed = float(target_speed)
        for name in _VEHICLE_FIELDS + _PARAM_FIELDS:
            setattr(self, name, arrays[name])

    @property
    def done(self) -> bool:
        return self.collided or self.t >= self.config.horizon

    @property
    def ego(self) -> VehicleState:
        return self._vehicle_view(0)

    @property
    def ego_control(self) -> EgoControl:
        return EgoControl(target_lane=int(self.targets[0]), target_speed=self.target_speed)

    def _vehicle_view(self, slot: int) -> VehicleState:
        return VehicleState(
            x=float(self.xs[slot]),
            y=float(self.ys[slot]),
            heading=float(self.headings[slot]),
            speed=float(self.speeds[slot]),
            length=self.config.vehicle_length,
            width=self.config.vehicle_width,
            lane_index=int(self.lanes[slot]),
            alive=bool(self.alive[slot]),
        )

    def npc_params(self, slot: int) -> NpcParams:
        """Car-following parameters of the vehicle in the given slot (>= 1)."""
        i = slot - 1
        return NpcParams(
            desired_speed=float(self.p_v0[i]),
            time_headway=float(self.p_T[i]),
            min_gap=float(self.p_s0[i]),
            max_accel=float(self.p_amax[i]),
            comfort_decel=float(self.p_b[i]),
            exponent=float(self.p_delta[i]),
            politeness=float(self.p_pol[i]),
            change_threshold=float(self.p_thresh[i]),
            safe_braking=float(self.p_bsafe[i]),
        )

    @property
    def npcs(self) -> list[tuple[VehicleState, NpcParams]]:
        """Living scripted vehicles with their parameters."""
        out = []
        for slot in range(1, len(self.xs)):
            if self.alive[slot]:
                out.append((self._vehicle_view(slot), self.npc_params(slot)))
        return out

    def copy(self) -> "EnvState":
        arrays = {
            name: getattr(self, name).copy()
            for name in _VEHICLE_FIELDS + _PARAM_FIELDS
        }
        bg = np.random.PCG64()
        bg.state = self.rng.bit_generator.state
        return EnvState(
            config=self.config,
            t=self.t,
            collided=self.collided,
            rng=np.random.Generator(bg),
            target_speed=self.target_speed,
            arrays=arrays,
        )

    @classmethod
    def from_vehicles(
        cls,
        config: EnvConfig,
        ego: VehicleState,
        control: EgoControl,
        npcs: list[tuple[VehicleState, NpcParams]],
        t: int = 0,
        collided: bool = False,
        seed: int = 0,
    ) -> "EnvState":
        """Build a state from explicit vehicle descriptions.

        Intended for tests and scenario construction; reset() is the normal
        entry point.
        """
        n = len(npcs)
        xs = np.empty(n + 1)
        ys = np.empty(n + 1)
        headings = np.empty(n + 1)
        speeds = np.empty(n + 1)
        lanes = np.empty(n + 1, dtype=np.int64)
        targets = np.empty(n + 1, dtype=np.int64)
        alive = np.empty(n + 1, dtype=bool)
        params = {name: np.empty(n) for name in _PARAM_FIELDS}

        for slot, vehicle in enumerate([ego] + [v for v, _ in npcs]):
            xs[slot] = vehicle.x
            ys[slot] = vehicle.y
            headings[slot] = vehicle.heading
            speeds[slot] = vehicle.speed
            lanes[slot] = vehicle.lane_index if vehicle.alive else -1
            targets[slot] = vehicle.lane_index
            alive[slot] = vehicle.alive
        targets[0] = control.target_lane

        for i, (_, p) in enumerate(npcs):
            params["p_v0"][i] = p.desired_speed
            params["p_T"][i] = p.time_headway
            params["p_s0"][i] = p.min_gap
            params["p_amax"][i] = p.max_accel
            params["p_b"][i] = p.comfort_decel
            params["p_delta"][i] = p.exponent
            params["p_pol"][i] = p.politeness
            params["p_thresh"][i] = p.change_threshold
            params["p_bsafe"][i] = p.safe_braking

        arrays = dict(
            xs=xs, ys=ys, headings=headings, speeds=speeds,
            lanes=lanes, targets=targets, alive=alive,
        )
        arrays.update(params)
        return cls(
            config=config,
            t=t,
            collided=collided,
            rng=np.random.default_rng(seed),
            target_speed=control.target_speed,
            arrays=arrays,
        )


def reset(seed: int, config: EnvConfig | None = None) -> tuple[EnvState, np.ndarray]:
    """Start a fresh episode.

    The ego starts at the origin of a uniformly drawn lane at the initial
    speed. Scripted vehicles are strung out ahead of it lane by lane, each
    placed one minimum gap plus an exponential jitter beyond the previous
    vehicle in its lane, with uniformly drawn speeds and jittered
    car-following parameters. The draw order below is part of the
    determinism contract; reordering it changes every seeded episode.
    """
    if config is None:
        config = EnvConfig()
    rng = np.random.default_rng(seed)
    n = config.npc_count
    j = config.idm_jitter

    ego_lane = int(rng.integers(config.lane_count))
    npc_lanes = rng.integers(0, config.lane_count, size=n)
    gaps = config.spawn_min_gap + rng.exponential(config.spawn_gap_jitter, size=n)
    npc_speeds = rng.uniform(*config.npc_speed_range, size=n)
    idm_jit = rng.uniform(1.0 - j, 1.0 + j, size=(n, 6))
    politeness = rng.uniform(*config.politeness_range, size=n)
    change_jit = rng.uniform(1.0 - j, 1.0 + j, size=(n, 2))

    xs = np.zeros(n + 1)
    ys = np.zeros(n + 1)
    headings = np.zeros(n + 1)
    speeds = np.zeros(n + 1)
    lanes = np.zeros(n + 1, dtype=np.int64)
    targets = np.zeros(n + 1, dtype=np.int64)
    alive = np.ones(n + 1, dtype=bool)

    lanes[0] = ego_lane
    targets[0] = ego_lane
    ys[0] = config.lane_center(ego_lane)
    speeds[0] = config.initial_speed

    cursors = np.full(config.lane_count, config.spawn_ahead)
    for i in range(n):
        lane = int(npc_lanes[i])
        cursors[lane] += gaps[i]
        xs[i + 1] = cursors[lane]
        ys[i + 1] = config.lane_center(lane)
        lanes[i + 1] = lane
        targets[i + 1] = lane
        speeds[i + 1] = npc_speeds[i]

    arrays = dict(
        xs=xs, ys=ys, headings=headings, speeds=speeds,
        lanes=lanes, targets=targets, alive=alive,
        p_v0=config.idm_desired_speed * idm_jit[:, 0],
        p_T=config.idm_time_headway * idm_jit[:, 1],
        p_s0=config.idm_min_gap * idm_jit[:, 2],
        p_amax=config.idm_max_accel * idm_jit[:, 3],
        p_b=config.idm_comfort_decel * idm_jit[:, 4],
        p_delta=config.idm_exponent * idm_jit[:, 5],
        p_pol=politeness,
        p_thresh=config.change_threshold * change_jit[:, 0],
        p_bsafe=config.safe_braking * change_jit[:, 1],
    )

    speed_options = np.asarray(config.target_speeds)
    target_speed = float(
        speed_options[np.argmin(np.abs(speed_options - config.initial_speed))]
    )

    state = EnvState(
        config=config,
        t=0,
        collided=False,
        rng=rng,
        target_speed=target_speed,
        arrays=arrays,
    )
    return state, observe(state)
