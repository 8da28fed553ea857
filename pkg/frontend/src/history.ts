/** Append-only trial history with JSON export/import. */

export interface TrialRecord {
  readonly id: number;
  readonly prompt: string;
  readonly eta: number;
  readonly sigma: number;
  readonly lambdaIndex: number;
  /** Server-reported metrics, stored exactly as received. */
  readonly bpp: number;
  readonly psnr: number | string;
  readonly roiPsnr: number | string | null;
  readonly maskPng: string;
  readonly reconstructionPng: string;
  readonly container: string;
}

export type SortKey = 'id' | 'bpp' | 'psnr' | 'roiPsnr';

/** "inf" sorts above every finite value; null below. */
function metricValue(v: number | string | null): number {
  if (v === null) return -Infinity;
  if (typeof v === 'string') return v === 'inf' ? Infinity : Number(v);
  return v;
}

export class TrialHistory {
  private records: TrialRecord[] = [];
  private nextId = 1;

  append(fields: Omit<TrialRecord, 'id'>): TrialRecord {
    const record = Object.freeze({ ...fields, id: this.nextId++ });
    this.records.push(record);
    return record;
  }

  get length(): number {
    return this.records.length;
  }

  all(): readonly TrialRecord[] {
    return [...this.records];
  }

  get(id: number): TrialRecord | undefined {
    return this.records.find((r) => r.id === id);
  }

  sortedBy(key: SortKey, descending = true): TrialRecord[] {
    const sign = descending ? -1 : 1;
    return [...this.records].sort((a, b) => {
      const av = key === 'id' ? a.id : metricValue(a[key]);
      const bv = key === 'id' ? b.id : metricValue(b[key]);
      return av === bv ? a.id - b.id : sign * (av < bv ? -1 : 1);
    });
  }

  exportJson(): string {
    return JSON.stringify({ version: 1, records: this.records });
  }

  static importJson(json: string): TrialHistory {
    const payload = JSON.parse(json) as { version: number; records: TrialRecord[] };
    if (payload.version !== 1 || !Array.isArray(payload.records)) {
      throw new Error('unrecognized history export');
    }
    const history = new TrialHistory();
    for (const record of payload.records) {
      history.records.push(Object.freeze({ ...record }));
      history.nextId = Math.max(history.nextId, record.id + 1);
    }
    return history;
  }
}
