// Turning a basket into a measure file the evaluator understands.

import { writeFileSync } from 'node:fs';
import { SelectionBasket, Selection } from './basket';

export const MEASURE_FORMAT = 'behaviorbench-measure';
export const MEASURE_VERSION = 1;
export const EXPORT_SOURCE = 'tui-selection';

export class ExportError extends Error {}

interface MeasureEntry {
  observation: number[];
  action: string;
  weight: number;
  provenance: { epoch: number; t: number };
}

export interface MeasureDocument {
  format: string;
  version: number;
  name: string;
  form: 'weighted_combination';
  children: {
    coefficient: number;
    measure: {
      name: string;
      form: 'mean_action_prob';
      scenarios: { name: string; source: string; entries: MeasureEntry[] };
    };
  }[];
  provenance: { source: string };
}

/**
 * Group selections by target action, in first-seen order.
 *
 * The combination coefficient of a group is the summed normalized weight
 * of its members, and member weights are renormalized within the group,
 * so the weighted nesting evaluates identically to the flat basket.
 */
export function buildMeasure(basket: SelectionBasket): MeasureDocument {
  if (basket.size === 0) {
    throw new ExportError('refusing to export: basket is empty');
  }
  const selections = basket.list();
  const normalized = basket.normalizedWeights();

  const groups = new Map<string, { sel: Selection; w: number }[]>();
  for (let i = 0; i < selections.length; i++) {
    const action = selections[i].action;
    if (!groups.has(action)) {
      groups.set(action, []);
    }
    groups.get(action)!.push({ sel: selections[i], w: normalized[i] });
  }

  const children = [];
  for (const [action, members] of groups) {
    const coefficient = members.reduce((a, m) => a + m.w, 0);
    const childName = `${basket.name}_${action.toLowerCase()}`;
    children.push({
      coefficient,
      measure: {
        name: childName,
        form: 'mean_action_prob' as const,
        scenarios: {
          name: childName,
          source: EXPORT_SOURCE,
          entries: members.map(({ sel, w }) => ({
            observation: sel.obs,
            action: sel.action,
            weight: w / coefficient,
            provenance: { epoch: sel.epoch, t: sel.t },
          })),
        },
      },
    });
  }

  return {
    format: MEASURE_FORMAT,
    version: MEASURE_VERSION,
    name: basket.name,
    form: 'weighted_combination',
    children,
    provenance: { source: EXPORT_SOURCE },
  };
}

export function measureJson(basket: SelectionBasket): string {
  return JSON.stringify(buildMeasure(basket), null, 1) + '\n';
}

export function exportMeasure(basket: SelectionBasket, path: string): void {
  writeFileSync(path, measureJson(basket), 'utf-8');
}
