// Shared between suites; not a test file itself.

import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { SelectionBasket } from '../src/basket';

export const BUNDLED_MEASURE = join(
  __dirname, '..', '..', 'src', 'behaviorbench', 'measures', 'data', 'collision_measure.json',
);

export function bundledFixture(): any {
  return JSON.parse(readFileSync(BUNDLED_MEASURE, 'utf-8'));
}

/** Reselect the bundled fixture's six entries with uniform weights. */
export function fixtureBasket(): SelectionBasket {
  const basket = new SelectionBasket('collision');
  for (const child of bundledFixture().children) {
    for (const entry of child.measure.scenarios.entries) {
      basket.toggle(entry.provenance.epoch, entry.provenance.t, entry.action, entry.observation);
    }
  }
  return basket;
}

/** The fixture with every origin note replaced, for content comparison. */
export function withSource(doc: any, source: string): any {
  const copy = JSON.parse(JSON.stringify(doc));
  for (const child of copy.children) {
    child.measure.scenarios.source = source;
  }
  copy.provenance = { source };
  return copy;
}
