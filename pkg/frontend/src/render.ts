// Pure screen builders; the TUI class only wires keys to state.

import { FrameRecord, LoadedArchive, Episode } from './archive';
import { SelectionBasket } from './basket';
import { actionName, egoLane, egoSpeed, sensedVehicles, LANE_COUNT } from './frames';
import { LiveValue } from './measure';

const ROAD_COLS = 61;
const CENTER_COL = 30;
const METERS_PER_COL = 100 / 30;

const BOLD = '\x1b[1m';
const DIM = '\x1b[2m';
const INVERT = '\x1b[7m';
const RED = '\x1b[31m';
const GREEN = '\x1b[32m';
const YELLOW = '\x1b[33m';
const CYAN = '\x1b[36m';
const RESET = '\x1b[0m';

function rule(ch = '─', width = 78): string {
  return DIM + ch.repeat(width) + RESET;
}

export function renderHeader(archive: LoadedArchive, episodeIdx: number, frameIdx: number, record: FrameRecord): string {
  const episode = archive.episodes[episodeIdx];
  const lines = [
    `${BOLD}┌─ behaviorbench scenario browser ${'─'.repeat(43)}┐${RESET}`,
    `${BOLD}│${RESET} archive ${CYAN}${archive.path}${RESET}`,
    `${BOLD}│${RESET} episode ${episodeIdx + 1}/${archive.episodes.length}` +
      `  frame ${frameIdx - episode.start + 1}/${episode.end - episode.start}` +
      `  epoch ${record.epoch}  t ${record.t}`,
    `${BOLD}└${'─'.repeat(76)}┘${RESET}`,
  ];
  return lines.join('\n');
}

/** Top-down diagram of the 4 lanes around the ego, right = ahead. */
export function renderLaneDiagram(obs: number[]): string {
  const lanes: string[][] = [];
  for (let lane = 0; lane < LANE_COUNT; lane++) {
    lanes.push(new Array(ROAD_COLS).fill('·'));
  }
  const ego = egoLane(obs);
  const out: string[] = [];
  for (const v of sensedVehicles(obs)) {
    const col = CENTER_COL + Math.round(v.aheadMeters / METERS_PER_COL);
    if (v.lane >= 0 && v.lane < LANE_COUNT && col >= 0 && col < ROAD_COLS) {
      lanes[v.lane][col] = String(v.row);
    }
  }
  if (ego >= 0 && ego < LANE_COUNT) {
    lanes[ego][CENTER_COL] = 'E';
  }
  for (let lane = 0; lane < LANE_COUNT; lane++) {
    const cells = lanes[lane]
      .map((c) => (c === '·' ? `${DIM}·${RESET}` : c === 'E' ? `${GREEN}${BOLD}E${RESET}` : `${YELLOW}${c}${RESET}`))
      .join('');
    out.push(` lane ${lane} ${DIM}│${RESET}${cells}${DIM}│${RESET}`);
  }
  out.push(`        ${DIM}ego ${egoSpeed(obs).toFixed(1)} m/s, travel direction →${RESET}`);
  return out.join('\n');
}

export function renderMatrix(obs: number[]): string {
  const labels = ['ego', 'npc1', 'npc2', 'npc3', 'npc4'];
  const out = [` ${DIM}      presence       x       y      vx      vy${RESET}`];
  for (let row = 0; row < 5; row++) {
    const cells = [];
    for (let col = 0; col < 5; col++) {
      cells.push(obs[row * 5 + col].toFixed(3).padStart(8));
    }
    out.push(` ${labels[row].padEnd(5)}${cells.join('')}`);
  }
  return out.join('\n');
}

export function renderFrameInfo(record: FrameRecord): string {
  const done = record.done ? ` ${RED}done${RESET}` : '';
  return ` action ${BOLD}${actionName(record.action)}${RESET}` +
    `  reward ${record.rewardTotal.toFixed(3)}${done}`;
}

export function renderBasket(basket: SelectionBasket, current: FrameRecord, live: LiveValue | null, checkpointLoaded: boolean): string {
  const out = [`${BOLD} basket "${basket.name}" (${basket.size} selected)${RESET}`];
  if (basket.size === 0) {
    out.push(`${DIM}   nothing selected yet${RESET}`);
  } else {
    const weights = basket.normalizedWeights();
    const contributions = new Map<string, number>();
    for (const e of live?.entries ?? []) {
      if (e.provenance) {
        contributions.set(`${e.provenance.epoch}:${e.provenance.t}`, e.action_prob);
      }
    }
    basket.list().forEach((sel, i) => {
      const here = sel.epoch === current.epoch && sel.t === current.t;
      const mark = here ? `${INVERT}>` : ' ';
      const prob = contributions.get(`${sel.epoch}:${sel.t}`);
      const tail = prob === undefined ? '' : `  π(a|o)=${prob.toFixed(6)}`;
      out.push(
        `${mark} ${sel.action.padEnd(6)} epoch ${String(sel.epoch).padStart(4)} t ${String(sel.t).padStart(4)}` +
          `  w ${sel.rawWeight.toFixed(3)} (${(weights[i] * 100).toFixed(1)}%)${tail}${RESET}`,
      );
    });
  }
  if (basket.size === 0) {
    out.push(` live value ${BOLD}—${RESET}`);
  } else if (!checkpointLoaded) {
    out.push(` live value ${DIM}(no checkpoint loaded)${RESET}`);
  } else if (live === null) {
    out.push(` live value ${DIM}(pending)${RESET}`);
  } else {
    out.push(` live value ${BOLD}${GREEN}${live.display}${RESET}  checkpoint ${DIM}${live.checkpointId.slice(0, 12)}${RESET}`);
  }
  return out.join('\n');
}

export function renderFooter(mode: string, input: string, status: string): string {
  const lines = [rule()];
  if (mode === 'weight') {
    lines.push(` new weight: ${input}${INVERT} ${RESET}  ${DIM}(enter to apply, esc to cancel)${RESET}`);
  } else if (mode === 'export') {
    lines.push(` export to: ${input}${INVERT} ${RESET}  ${DIM}(enter to write, esc to cancel)${RESET}`);
  } else {
    lines.push(
      ` ${DIM}←/→ frame  ↑/↓ episode  l/i/r/f/s select LEFT/IDLE/RIGHT/FASTER/SLOWER${RESET}`,
      ` ${DIM}w weight  e export  q quit${RESET}`,
    );
  }
  if (status) {
    lines.push(` ${YELLOW}${status}${RESET}`);
  }
  return lines.join('\n');
}

export function renderErrorScreen(title: string, detail: string): string {
  return [
    `${RED}${BOLD}┌─ ${title} ${'─'.repeat(Math.max(1, 74 - title.length))}┐${RESET}`,
    `${RED}│${RESET} ${detail}`,
    `${RED}${BOLD}└${'─'.repeat(76)}┘${RESET}`,
  ].join('\n');
}

export function renderScreen(
  archive: LoadedArchive,
  episodeIdx: number,
  frameIdx: number,
  basket: SelectionBasket,
  live: LiveValue | null,
  checkpointLoaded: boolean,
  mode: string,
  input: string,
  status: string,
): string {
  const record = archive.records[frameIdx];
  return [
    renderHeader(archive, episodeIdx, frameIdx, record),
    '',
    renderLaneDiagram(record.obs),
    '',
    renderMatrix(record.obs),
    renderFrameInfo(record),
    rule(),
    renderBasket(basket, record, live, checkpointLoaded),
    renderFooter(mode, input, status),
  ].join('\n');
}
