"""Fixed-size kinematic observation of the scene around the ego."""

from __future__ import annotations

import numpy as np

OBS_ROWS = 5
OBS_COLS = 5


def observe(state) -> np.ndarray:
    """Build the (5, 5) observation matrix for the current state.

    Row 0 describes the ego in absolute road coordinates; the remaining
    rows describe the nearest living vehicles at or ahead of the ego's
    position within sensing range, ordered by increasing longitudinal
    offset and expressed relative to the ego. Every feature is divided by
    its scale from the config and clipped to [-1, 1]. A presence flag of 0
    marks padding rows, which are all zero.
    """
    cfg = state.config
    obs = np.zeros((OBS_ROWS, OBS_COLS), dtype=np.float64)

    vx = state.speeds * np.cos(state.headings)
    vy = state.speeds * np.sin(state.headings)

    obs[0, 0] = 1.0
    obs[0, 1] = state.xs[0] / cfg.obs_x_scale
    obs[0, 2] = state.ys[0] / cfg.obs_y_scale
    obs[0, 3] = vx[0] / cfg.obs_speed_scale
    obs[0, 4] = vy[0] / cfg.obs_speed_scale

    rel_x = state.xs[1:] - state.xs[0]
    visible = state.alive[1:] & (rel_x >= 0.0) & (rel_x <= cfg.sensing_range)
    candidates = np.nonzero(visible)[0]
    if candidates.size:
        order = np.argsort(rel_x[candidates], kind="stable")
        chosen = candidates[order[: min(cfg.observed_vehicles, OBS_ROWS - 1)]]
        for row, i in enumerate(chosen, start=1):
            obs[row, 0] = 1.0
            obs[row, 1] = rel_x[i] / cfg.obs_x_scale
            obs[row, 2] = (state.ys[i + 1] - state.ys[0]) / cfg.obs_y_scale
            obs[row, 3] = (vx[i + 1] - vx[0]) / cfg.obs_speed_scale
            obs[row, 4] = (vy[i + 1] - vy[0]) / cfg.obs_speed_scale

    np.clip(obs, -1.0, 1.0, out=obs)
    return obs
