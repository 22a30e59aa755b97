// Read-only access to rollout archives (line-delimited JSON).
//
// First line is a header object, every following line one environment
// step. The file is hashed on load so a session can prove at exit that
// browsing never touched it.
import * as fs from 'fs';
import * as crypto from 'crypto';

export const ARCHIVE_FORMAT = 'behaviorbench-rollouts';
export const ARCHIVE_VERSION = 1;
export const OBS_ROWS = 5;
export const OBS_COLS = 5;

export interface ArchiveHeader {
  configHash: string;
  seed: number;
  checkpoint: string;
}

export interface FrameRecord {
  epoch: number;
  t: number;
  /** 25 floats, row-major 5x5 observation. */
  obs: number[];
  action: number;
  rewardTotal: number;
  done: boolean;
}

export interface Episode {
  epoch: number;
  /** Index range into the record list, end exclusive. */
  start: number;
  end: number;
}

export interface LoadedArchive {
  path: string;
  header: ArchiveHeader;
  records: FrameRecord[];
  episodes: Episode[];
  sha256: string;
}

export class ArchiveError extends Error {
  /** Zero-based index of the offending record, -1 for header problems. */
  recordIndex: number;

  constructor(message: string, recordIndex: number) {
    super(message);
    this.name = 'ArchiveError';
    this.recordIndex = recordIndex;
  }
}

export function fileSha256(path: string): string {
  return crypto.createHash('sha256').update(fs.readFileSync(path)).digest('hex');
}

function parseHeader(line: string): ArchiveHeader {
  let data: any;
  try {
    data = JSON.parse(line);
  } catch {
    throw new ArchiveError('header line is not valid JSON', -1);
  }
  if (data.format !== ARCHIVE_FORMAT) {
    throw new ArchiveError(`not a rollout archive (format=${JSON.stringify(data.format)})`, -1);
  }
  if (data.version !== ARCHIVE_VERSION) {
    throw new ArchiveError(`unsupported archive version ${data.version}`, -1);
  }
  return {
    configHash: String(data.config_hash),
    seed: Number(data.seed),
    checkpoint: String(data.checkpoint ?? ''),
  };
}

function parseRecord(line: string, index: number): FrameRecord {
  let data: any;
  try {
    data = JSON.parse(line);
  } catch {
    throw new ArchiveError(`record ${index} is not valid JSON`, index);
  }
  const obs = data.obs;
  if (!Array.isArray(obs) || obs.length !== OBS_ROWS * OBS_COLS || obs.some((v) => typeof v !== 'number')) {
    throw new ArchiveError(`record ${index} has a malformed observation`, index);
  }
  for (const field of ['epoch', 't', 'action']) {
    if (typeof data[field] !== 'number') {
      throw new ArchiveError(`record ${index} is missing ${field}`, index);
    }
  }
  return {
    epoch: data.epoch,
    t: data.t,
    obs,
    action: data.action,
    rewardTotal: typeof data.reward?.total === 'number' ? data.reward.total : NaN,
    done: Boolean(data.done),
  };
}

/** Group consecutive records into episodes; a done flag closes one. */
export function splitEpisodes(records: FrameRecord[]): Episode[] {
  const episodes: Episode[] = [];
  let start = 0;
  for (let i = 0; i < records.length; i++) {
    const boundary = records[i].done || i + 1 === records.length || records[i + 1].epoch !== records[i].epoch;
    if (boundary) {
      episodes.push({ epoch: records[start].epoch, start, end: i + 1 });
      start = i + 1;
    }
  }
  return episodes;
}

export function loadArchive(path: string): LoadedArchive {
  const raw = fs.readFileSync(path, 'utf-8');
  const sha256 = crypto.createHash('sha256').update(raw, 'utf-8').digest('hex');
  const lines = raw.split('\n').filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new ArchiveError('archive is empty', -1);
  }
  const header = parseHeader(lines[0]);
  const records = lines.slice(1).map((line, i) => parseRecord(line, i));
  if (records.length === 0) {
    throw new ArchiveError('archive has a header but no records', -1);
  }
  return { path, header, records, episodes: splitEpisodes(records), sha256 };
}
