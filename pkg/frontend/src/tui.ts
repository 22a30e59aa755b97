// Keyboard-driven browser over a rollout archive.

import * as readline from 'node:readline';
import { fileSha256, LoadedArchive } from './archive';
import { SelectionBasket, BasketError } from './basket';
import { CheckpointInfo } from './checkpoint';
import { exportMeasure, ExportError } from './exporter';
import { MeasureClient, MeasureError, LiveValue } from './measure';
import { renderScreen, renderErrorScreen } from './render';

const ACTION_KEYS: Record<string, string> = {
  l: 'LEFT',
  i: 'IDLE',
  r: 'RIGHT',
  f: 'FASTER',
  s: 'SLOWER',
};

export interface TuiOptions {
  checkpoint?: CheckpointInfo;
  client?: MeasureClient;
  basketName?: string;
  write?: (text: string) => void;
  onExit?: (code: number) => void;
}

export class ScenarioTui {
  readonly archive: LoadedArchive;
  readonly basket: SelectionBasket;
  episodeIdx = 0;
  frameIdx = 0;
  mode: 'browse' | 'weight' | 'export' = 'browse';
  input = '';
  status = '';
  live: LiveValue | null = null;

  private checkpoint?: CheckpointInfo;
  private client: MeasureClient;
  private write: (text: string) => void;
  private onExit: (code: number) => void;
  private rl?: readline.Interface;

  constructor(archive: LoadedArchive, options: TuiOptions = {}) {
    this.archive = archive;
    this.checkpoint = options.checkpoint;
    this.client = options.client ?? new MeasureClient();
    this.basket = new SelectionBasket(options.basketName ?? 'selection');
    if (this.checkpoint) {
      this.basket.checkpointId = this.checkpoint.checkpointId;
    }
    this.write = options.write ?? ((text) => process.stdout.write(text));
    this.onExit = options.onExit ?? ((code) => process.exit(code));
  }

  start(): void {
    if (!process.stdin.isTTY) {
      throw new Error('interactive mode needs a TTY; use --help for usage');
    }
    this.rl = readline.createInterface({ input: process.stdin });
    process.stdin.setRawMode(true);
    process.stdin.resume();
    process.stdin.setEncoding('utf8');
    process.stdin.on('data', (key: string) => this.handleKey(key));
    this.draw();
  }

  get record() {
    return this.archive.records[this.frameIdx];
  }

  handleKey(key: string): void {
    if (key === '') {
      this.quit();
      return;
    }
    if (this.mode === 'weight' || this.mode === 'export') {
      this.handleInputKey(key);
    } else {
      this.handleBrowseKey(key);
    }
    this.draw();
  }

  private handleBrowseKey(key: string): void {
    this.status = '';
    const episode = this.archive.episodes[this.episodeIdx];
    switch (key) {
      case '[C':
        if (this.frameIdx + 1 < episode.end) this.frameIdx++;
        break;
      case '[D':
        if (this.frameIdx > episode.start) this.frameIdx--;
        break;
      case '[B':
      case 'n':
        this.gotoEpisode(this.episodeIdx + 1);
        break;
      case '[A':
      case 'p':
        this.gotoEpisode(this.episodeIdx - 1);
        break;
      case 'w':
        if (this.currentSelection()) {
          this.mode = 'weight';
          this.input = '';
        } else {
          this.status = 'select this frame first, then set its weight';
        }
        break;
      case 'e':
        if (this.basket.size === 0) {
          this.status = 'refusing to export: basket is empty';
        } else {
          this.mode = 'export';
          this.input = `${this.basket.name}.json`;
        }
        break;
      case 'q':
        this.quit();
        break;
      default:
        if (ACTION_KEYS[key]) {
          this.toggleSelection(ACTION_KEYS[key]);
        }
    }
  }

  private handleInputKey(key: string): void {
    if (key === '') {
      this.mode = 'browse';
      this.input = '';
      return;
    }
    if (key === '\r' || key === '\n') {
      const text = this.input;
      const kind = this.mode as 'weight' | 'export';
      this.mode = 'browse';
      this.input = '';
      if (text) this.commitInput(text, kind);
      return;
    }
    if (key === '' || key === '\b') {
      this.input = this.input.slice(0, -1);
      return;
    }
    if (key >= ' ' && key.length === 1) {
      this.input += key;
    }
  }

  private commitInput(text: string, kind: 'weight' | 'export'): void {
    const record = this.record;
    if (kind === 'weight') {
      const weight = Number(text);
      try {
        this.basket.setWeight(record.epoch, record.t, weight);
        this.status = `weight of epoch ${record.epoch} t ${record.t} set to ${weight}`;
        this.refreshLiveValue();
      } catch (err) {
        if (err instanceof BasketError) {
          this.status = err.message;
        } else {
          throw err;
        }
      }
    } else {
      try {
        exportMeasure(this.basket, text);
        this.status = `wrote ${text}`;
      } catch (err) {
        if (err instanceof ExportError) {
          this.status = err.message;
        } else {
          this.status = `export failed: ${(err as Error).message}`;
        }
      }
    }
  }

  private gotoEpisode(idx: number): void {
    if (idx >= 0 && idx < this.archive.episodes.length) {
      this.episodeIdx = idx;
      this.frameIdx = this.archive.episodes[idx].start;
    }
  }

  private currentSelection() {
    return this.basket.get(this.record.epoch, this.record.t);
  }

  toggleSelection(action: string): void {
    const record = this.record;
    const result = this.basket.toggle(record.epoch, record.t, action, record.obs);
    this.status = `${result} ${action} at epoch ${record.epoch} t ${record.t}`;
    this.refreshLiveValue();
  }

  refreshLiveValue(): void {
    if (this.basket.size === 0 || !this.checkpoint) {
      this.live = null;
      this.basket.liveValue = null;
      return;
    }
    try {
      this.live = this.client.evaluateBasket(this.basket, this.checkpoint.path);
      this.basket.liveValue = this.live.display;
    } catch (err) {
      this.live = null;
      if (err instanceof MeasureError) {
        this.status = err.message.split('\n')[0];
      } else {
        throw err;
      }
    }
  }

  render(): string {
    return renderScreen(
      this.archive,
      this.episodeIdx,
      this.frameIdx,
      this.basket,
      this.live,
      this.checkpoint !== undefined,
      this.mode,
      this.input,
      this.status,
    );
  }

  private draw(): void {
    this.write('\x1b[2J\x1b[3J\x1b[H' + this.render() + '\n');
  }

  quit(): void {
    this.cleanup();
    const after = fileSha256(this.archive.path);
    if (after === this.archive.sha256) {
      this.write(`archive unchanged (sha256 ${after.slice(0, 12)})\n`);
      this.onExit(0);
    } else {
      this.write(renderErrorScreen('archive changed on disk', `sha256 ${this.archive.sha256} is now ${after}`) + '\n');
      this.onExit(1);
    }
  }

  private cleanup(): void {
    if (process.stdin.isTTY && this.rl) {
      process.stdin.setRawMode(false);
    }
    this.rl?.close();
    if (this.rl) {
      this.write('\x1b[2J\x1b[3J\x1b[H');
    }
    this.rl = undefined;
  }
}
