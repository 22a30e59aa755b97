// Selections the user is turning into a behavior measure.

export interface Selection {
  epoch: number;
  t: number;
  action: string;
  obs: number[];
  /** Weight as entered; display weights are renormalized on every read. */
  rawWeight: number;
}

export class BasketError extends Error {}

function key(epoch: number, t: number): string {
  return `${epoch}:${t}`;
}

/**
 * Ordered set of (observation, action) picks keyed by (epoch, t).
 *
 * Raw weights are kept as entered and normalized on demand, so removing
 * a selection restores the remaining normalized weights to exactly the
 * values they had before it was added.
 */
export class SelectionBasket {
  name: string;
  checkpointId = '';
  liveValue: string | null = null;
  private order: string[] = [];
  private entries = new Map<string, Selection>();

  constructor(name = 'selection') {
    this.name = name;
  }

  get size(): number {
    return this.order.length;
  }

  list(): Selection[] {
    return this.order.map((k) => this.entries.get(k)!);
  }

  get(epoch: number, t: number): Selection | undefined {
    return this.entries.get(key(epoch, t));
  }

  /**
   * Select, reselect with a different action, or deselect.
   *
   * Same (epoch, t) with the same action removes the entry; a different
   * action replaces the action but keeps the position and weight.
   */
  toggle(epoch: number, t: number, action: string, obs: number[], weight = 1.0): 'added' | 'removed' | 'retargeted' {
    if (!(weight > 0)) {
      throw new BasketError(`weight must be positive, got ${weight}`);
    }
    const k = key(epoch, t);
    const existing = this.entries.get(k);
    if (existing === undefined) {
      this.entries.set(k, { epoch, t, action, obs, rawWeight: weight });
      this.order.push(k);
      return 'added';
    }
    if (existing.action === action) {
      this.entries.delete(k);
      this.order = this.order.filter((o) => o !== k);
      return 'removed';
    }
    existing.action = action;
    return 'retargeted';
  }

  setWeight(epoch: number, t: number, weight: number): void {
    if (!(weight > 0)) {
      throw new BasketError(`weight must be positive, got ${weight}`);
    }
    const entry = this.entries.get(key(epoch, t));
    if (entry === undefined) {
      throw new BasketError(`no selection at epoch ${epoch}, t ${t}`);
    }
    entry.rawWeight = weight;
  }

  /** Normalized weight per selection, in selection order; sums to 1. */
  normalizedWeights(): number[] {
    const raws = this.list().map((s) => s.rawWeight);
    const total = raws.reduce((a, b) => a + b, 0);
    return raws.map((w) => w / total);
  }
}
