// Live measure evaluation by shelling out to the evaluator CLI.
//
// The TUI never computes probabilities itself: the value shown is the
// one the exported file would produce, because it is produced by running
// the exporter's own JSON through `behaviorbench measure`.

import { spawnSync } from 'node:child_process';
import { mkdtempSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { SelectionBasket } from './basket';
import { measureJson } from './exporter';

export class MeasureError extends Error {}

export interface EntryReport {
  action: string;
  weight: number;
  action_prob: number;
  contribution: number;
  provenance?: { epoch: number; t: number };
}

export interface LiveValue {
  /** Value exactly as the evaluator printed it. */
  display: string;
  value: number;
  checkpointId: string;
  entries: EntryReport[];
}

export class MeasureClient {
  private command: string;

  constructor(command?: string) {
    this.command = command ?? process.env.BEHAVIORBENCH_CLI ?? 'behaviorbench';
  }

  evaluateFile(measurePath: string, checkpointPath: string): LiveValue {
    const result = spawnSync(this.command, [
      'measure',
      '--checkpoint',
      checkpointPath,
      '--measure',
      measurePath,
    ], { encoding: 'utf-8' });
    if (result.error) {
      throw new MeasureError(`could not run ${this.command}: ${result.error.message}`);
    }
    if (result.status !== 0) {
      throw new MeasureError((result.stderr || 'evaluator failed').trim());
    }
    const newline = result.stdout.indexOf('\n');
    const display = result.stdout.slice(0, newline).trim();
    const report = JSON.parse(result.stdout.slice(newline + 1));
    return {
      display,
      value: Number(display),
      checkpointId: report.checkpoint,
      entries: flattenEntries(report),
    };
  }

  evaluateBasket(basket: SelectionBasket, checkpointPath: string): LiveValue {
    const dir = mkdtempSync(join(tmpdir(), 'bbench-tui-'));
    const path = join(dir, 'live_measure.json');
    try {
      writeFileSync(path, measureJson(basket), 'utf-8');
      return this.evaluateFile(path, checkpointPath);
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  }
}

function flattenEntries(report: any): EntryReport[] {
  if (Array.isArray(report.entries)) {
    return report.entries;
  }
  if (Array.isArray(report.children)) {
    return report.children.flatMap((c: any) => flattenEntries(c.report));
  }
  return [];
}
