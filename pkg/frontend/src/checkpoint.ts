// Checkpoint metadata reader.
//
// Layout: 8 magic bytes, little-endian uint32 header length, UTF-8 JSON
// header, raw little-endian float64 parameters. The TUI never needs the
// parameters themselves (evaluation happens in the core CLI), but it
// re-hashes them so a stale or corrupt file is caught up front.
import * as fs from 'fs';
import * as crypto from 'crypto';

const MAGIC = Buffer.from('BBENCHP1', 'ascii');
const CHECKPOINT_VERSION = 1;

export interface CheckpointInfo {
  path: string;
  checkpointId: string;
  seed: number;
  step: number;
  paramCount: number;
}

export class CheckpointError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'CheckpointError';
  }
}

export function readCheckpointInfo(path: string): CheckpointInfo {
  const raw = fs.readFileSync(path);
  if (raw.length < MAGIC.length + 4 || !raw.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new CheckpointError(`${path}: not a checkpoint file (bad magic)`);
  }
  const headerLength = raw.readUInt32LE(MAGIC.length);
  const start = MAGIC.length + 4;
  let header: any;
  try {
    header = JSON.parse(raw.subarray(start, start + headerLength).toString('utf-8'));
  } catch {
    throw new CheckpointError(`${path}: unreadable checkpoint header`);
  }
  if (header.version !== CHECKPOINT_VERSION) {
    throw new CheckpointError(`${path}: unsupported checkpoint version`);
  }
  const params = raw.subarray(start + headerLength);
  if (params.length !== header.param_count * 8) {
    throw new CheckpointError(`${path}: parameter count mismatch`);
  }
  const digest = crypto.createHash('sha256').update(params).digest('hex');
  if (digest !== header.checkpoint_id) {
    throw new CheckpointError(`${path}: parameter hash mismatch (corrupt file)`);
  }
  return {
    path,
    checkpointId: header.checkpoint_id,
    seed: header.seed,
    step: header.step,
    paramCount: header.param_count,
  };
}
