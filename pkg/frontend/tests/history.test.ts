import { describe, expect, it } from 'vitest';

import { TrialHistory, TrialRecord } from '../src/history.js';

function fields(over: Partial<TrialRecord> = {}): Omit<TrialRecord, 'id'> {
  return {
    prompt: 'cat',
    eta: 0.85,
    sigma: 0.01,
    lambdaIndex: 1,
    bpp: 0.4,
    psnr: 30.5,
    roiPsnr: 33.1,
    maskPng: 'AA==',
    reconstructionPng: 'AA==',
    container: 'Q1JPSQ==',
    ...over,
  };
}

describe('TrialHistory', () => {
  it('assigns sequential ids and is append-only', () => {
    const history = new TrialHistory();
    const a = history.append(fields());
    const b = history.append(fields({ sigma: 0.9 }));
    expect([a.id, b.id]).toEqual([1, 2]);
    expect(history.length).toBe(2);
    // mutating the returned list does not touch the store
    const view = history.all() as TrialRecord[];
    view.pop();
    expect(history.length).toBe(2);
  });

  it('records are immutable once appended', () => {
    const history = new TrialHistory();
    const record = history.append(fields());
    expect(() => {
      (record as { bpp: number }).bpp = 999;
    }).toThrow();
    expect(history.get(record.id)?.bpp).toBe(0.4);
  });

  it('sorts by any metric with inf on top and null at the bottom', () => {
    const history = new TrialHistory();
    history.append(fields({ psnr: 28, roiPsnr: null }));
    history.append(fields({ psnr: 'inf', roiPsnr: 30 }));
    history.append(fields({ psnr: 35, roiPsnr: 40 }));
    expect(history.sortedBy('psnr').map((r) => r.id)).toEqual([2, 3, 1]);
    expect(history.sortedBy('roiPsnr').map((r) => r.id)).toEqual([3, 2, 1]);
    expect(history.sortedBy('id', false).map((r) => r.id)).toEqual([1, 2, 3]);
  });

  it('export/import round-trips the full history', () => {
    const history = new TrialHistory();
    history.append(fields());
    history.append(fields({ prompt: 'dog', sigma: 0.9, psnr: 'inf' }));
    const restored = TrialHistory.importJson(history.exportJson());
    expect(restored.all()).toEqual(history.all());
    // ids keep counting after the imported ones
    expect(restored.append(fields()).id).toBe(3);
  });

  it('rejects unrecognized exports', () => {
    expect(() => TrialHistory.importJson('{"version":2,"records":[]}')).toThrow();
  });
});
