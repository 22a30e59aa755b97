#!/usr/bin/env node
// Entry point: argument handling and error screens.

import { loadArchive, ArchiveError } from './archive';
import { readCheckpointInfo, CheckpointError, CheckpointInfo } from './checkpoint';
import { MeasureClient } from './measure';
import { renderErrorScreen } from './render';
import { ScenarioTui } from './tui';

const USAGE = `usage: behaviorbench-tui <archive.jsonl> [options]

Browse a rollout archive, select (observation, action) pairs, and export
them as a behavior measure file.

options:
  --checkpoint <path>   policy checkpoint for live measure values
  --name <basket>       measure name used for exports (default: selection)
  --cli <command>       evaluator command (default: behaviorbench)
  -h, --help            show this message
`;

interface Args {
  archive: string;
  checkpoint?: string;
  name?: string;
  cli?: string;
}

function parseArgs(argv: string[]): Args {
  let archive: string | undefined;
  const args: Partial<Args> = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === '-h' || arg === '--help') {
      process.stdout.write(USAGE);
      process.exit(0);
    } else if (arg === '--checkpoint' || arg === '--name' || arg === '--cli') {
      const value = argv[++i];
      if (value === undefined) {
        usageError(`${arg} needs a value`);
      }
      args[arg.slice(2) as 'checkpoint' | 'name' | 'cli'] = value;
    } else if (arg.startsWith('-')) {
      usageError(`unknown option ${arg}`);
    } else if (archive === undefined) {
      archive = arg;
    } else {
      usageError(`unexpected argument ${arg}`);
    }
  }
  if (archive === undefined) {
    usageError('an archive path is required');
  }
  return { archive: archive!, ...args };
}

function usageError(message: string): never {
  process.stderr.write(`error: ${message}\n\n${USAGE}`);
  process.exit(2);
}

export function main(argv = process.argv.slice(2)): void {
  const args = parseArgs(argv);
  try {
    const archive = loadArchive(args.archive);
    let checkpoint: CheckpointInfo | undefined;
    if (args.checkpoint) {
      checkpoint = readCheckpointInfo(args.checkpoint);
      if (archive.header.checkpoint && archive.header.checkpoint !== checkpoint.checkpointId) {
        process.stderr.write(
          `note: archive was rolled out from checkpoint ${archive.header.checkpoint.slice(0, 12)}, ` +
            `live values use ${checkpoint.checkpointId.slice(0, 12)}\n`,
        );
      }
    }
    const tui = new ScenarioTui(archive, {
      checkpoint,
      basketName: args.name,
      client: new MeasureClient(args.cli),
    });
    tui.start();
  } catch (err) {
    if (err instanceof ArchiveError) {
      const where = err.recordIndex < 0 ? 'header' : `record ${err.recordIndex}`;
      process.stdout.write(renderErrorScreen('corrupt archive', `${where}: ${err.message}`) + '\n');
      process.exit(1);
    } else if (err instanceof CheckpointError) {
      process.stdout.write(renderErrorScreen('bad checkpoint', err.message) + '\n');
      process.exit(1);
    } else {
      process.stderr.write(`error: ${(err as Error).message}\n`);
      process.exit(1);
    }
  }
}

if (require.main === module) {
  main();
}
