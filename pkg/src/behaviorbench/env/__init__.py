from behaviorbench.env.config import EnvConfig
from behaviorbench.env.types import (
    Action,
    EgoControl,
    NpcParams,
    RewardBreakdown,
    VehicleState,
)
from behaviorbench.env.geometry import rectangle_corners, sat_margin, sat_overlap
from behaviorbench.env.idm import idm_acceleration
from behaviorbench.env.mobil import LaneNeighbors, Neighborhood, mobil_decision
from behaviorbench.env.state import EnvState, reset
from behaviorbench.env.observation import observe
from behaviorbench.env.step import apply_action, reward_breakdown, step
from behaviorbench.env.archive import (
    ArchiveHeader,
    RolloutRecord,
    iter_rollout_archive,
    read_rollout_archive,
    write_rollout_archive,
)

__all__ = [
    "Action",
    "ArchiveHeader",
    "EgoControl",
    "EnvConfig",
    "EnvState",
    "LaneNeighbors",
    "Neighborhood",
    "NpcParams",
    "RewardBreakdown",
    "RolloutRecord",
    "VehicleState",
    "apply_action",
    "idm_acceleration",
    "iter_rollout_archive",
    "mobil_decision",
    "observe",
    "read_rollout_archive",
    "rectangle_corners",
    "reset",
    "reward_breakdown",
    "sat_margin",
    "sat_overlap",
    "step",
    "write_rollout_archive",
]
