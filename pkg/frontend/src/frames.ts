// Interpreting a 5x5 observation for display.
//
// Row 0 is the ego in absolute units, rows 1-4 are the nearest sensed
// vehicles relative to it. Columns: presence flag, x/100, y/16, vx/80,
// vy/80. Lane geometry matches the 4-lane road the archives come from.

import { FrameRecord } from './archive';

export const X_SCALE = 100;
export const Y_SCALE = 16;
export const V_SCALE = 80;
export const LANE_WIDTH = 4;
export const LANE_COUNT = 4;

export const ACTION_NAMES = ['LEFT', 'IDLE', 'RIGHT', 'FASTER', 'SLOWER'] as const;
export type ActionName = (typeof ACTION_NAMES)[number];

export function actionName(id: number): ActionName {
  const name = ACTION_NAMES[id];
  if (name === undefined) {
    throw new Error(`unknown action id ${id}`);
  }
  return name;
}

export function actionId(name: string): number {
  const id = ACTION_NAMES.indexOf(name as ActionName);
  if (id < 0) {
    throw new Error(`unknown action name ${JSON.stringify(name)}`);
  }
  return id;
}

export interface VehicleGlimpse {
  row: number;
  lane: number;
  /** Longitudinal offset from the ego in meters (ego itself: 0). */
  aheadMeters: number;
  speedMeters: number;
}

function cell(obs: number[], row: number, col: number): number {
  return obs[row * 5 + col];
}

export function egoLane(obs: number[]): number {
  return Math.round((cell(obs, 0, 2) * Y_SCALE) / LANE_WIDTH);
}

export function egoSpeed(obs: number[]): number {
  return cell(obs, 0, 3) * V_SCALE;
}

/** Sensed vehicles from rows 1-4; absent rows are skipped. */
export function sensedVehicles(obs: number[]): VehicleGlimpse[] {
  const base = egoLane(obs);
  const out: VehicleGlimpse[] = [];
  for (let row = 1; row < 5; row++) {
    if (cell(obs, row, 0) < 0.5) {
      continue;
    }
    out.push({
      row,
      lane: base + Math.round((cell(obs, row, 2) * Y_SCALE) / LANE_WIDTH),
      aheadMeters: cell(obs, row, 1) * X_SCALE,
      speedMeters: cell(obs, row, 3) * V_SCALE,
    });
  }
  return out;
}

export function frameKey(record: FrameRecord): string {
  return `${record.epoch}:${record.t}`;
}
