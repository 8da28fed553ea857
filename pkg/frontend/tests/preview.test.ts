import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { ApiClient, MaskResponse } from '../src/api.js';
import { PreviewController } from '../src/preview.js';

function maskBody(fraction: number): MaskResponse {
  return { mask_png: 'AA==', roi_pixel_fraction: fraction, eta: 0.85, sigma: 0.01, text: 'cat' };
}

beforeEach(() => vi.useFakeTimers());
afterEach(() => {
  vi.useRealTimers();
  vi.unstubAllGlobals();
});

describe('PreviewController', () => {
  it('debounces a burst of slider events into one request', async () => {
    const fetchFn = vi.fn(async () => ({
      ok: true, status: 200, json: async () => maskBody(0.25),
    }));
    vi.stubGlobal('fetch', fetchFn);
    const results: number[] = [];
    const preview = new PreviewController(
      new ApiClient(), (r) => results.push(r.roi_pixel_fraction), () => {}, 100);
    for (const eta of [0.95, 0.9, 0.85, 0.8, 0.75]) {
      preview.request({ image: 'IMG', text: 'cat', eta, sigma: 0.01 });
      vi.advanceTimersByTime(10);
    }
    await vi.runAllTimersAsync();
    expect(fetchFn).toHaveBeenCalledTimes(1);
    // only the final eta value reaches the service
    const body = JSON.parse((fetchFn.mock.calls[0] as unknown as [string, RequestInit])[1].body as string);
    expect(body.eta).toBeCloseTo(0.75);
    expect(results).toEqual([0.25]);
  });

  it('drops stale responses when a newer request resolves first', async () => {
    let call = 0;
    const resolvers: Array<(body: MaskResponse) => void> = [];
    vi.stubGlobal('fetch', vi.fn((_url: string, init: RequestInit) => {
      const index = call++;
      return new Promise((resolve, reject) => {
        resolvers[index] = (body) => resolve({ ok: true, status: 200, json: async () => body });
        init.signal?.addEventListener('abort', () =>
          reject(new DOMException('aborted', 'AbortError')));
      });
    }));
    const results: number[] = [];
    const preview = new PreviewController(
      new ApiClient(), (r) => results.push(r.roi_pixel_fraction), () => {}, 10);
    preview.request({ image: 'IMG', text: 'cat', eta: 0.95, sigma: 0.01 });
    await vi.advanceTimersByTimeAsync(20); // first request in flight
    preview.request({ image: 'IMG', text: 'cat', eta: 0.75, sigma: 0.01 });
    await vi.advanceTimersByTimeAsync(20); // supersedes and aborts the first
    resolvers[1]!(maskBody(0.8));
    await vi.runAllTimersAsync();
    await Promise.resolve();
    expect(results).toEqual([0.8]);
  });

  it('reports service errors for the newest request only', async () => {
    vi.stubGlobal('fetch', vi.fn(async () => ({
      ok: false, status: 503, json: async () => ({ code: 503, message: 'backend unavailable' }),
    })));
    const errors: unknown[] = [];
    const preview = new PreviewController(new ApiClient(), () => {}, (e) => errors.push(e), 10);
    preview.request({ image: 'IMG', text: 'cat', eta: 0.85, sigma: 0.01 });
    await vi.runAllTimersAsync();
    expect(errors).toHaveLength(1);
  });

  it('relays non-decreasing overlay area as eta decreases', async () => {
    // the server's roi_pixel_fraction for a fixed image grows as eta drops;
    // the UI must surface those values untouched
    const byEta: Record<string, number> = {
      '0.95': 0.12, '0.9': 0.25, '0.85': 0.25, '0.8': 0.4, '0.75': 0.61,
    };
    vi.stubGlobal('fetch', vi.fn(async (_url: string, init: RequestInit) => {
      const eta = String(JSON.parse(init.body as string).eta);
      return { ok: true, status: 200, json: async () => maskBody(byEta[eta]!) };
    }));
    const seen: number[] = [];
    const preview = new PreviewController(
      new ApiClient(), (r) => seen.push(r.roi_pixel_fraction), () => {}, 5);
    for (const eta of [0.95, 0.9, 0.85, 0.8, 0.75]) {
      preview.request({ image: 'IMG', text: 'cat', eta, sigma: 0.01 });
      await vi.runAllTimersAsync();
    }
    expect(seen).toEqual([0.12, 0.25, 0.25, 0.4, 0.61]);
    for (let i = 1; i < seen.length; i++) expect(seen[i]!).toBeGreaterThanOrEqual(seen[i - 1]!);
  });
});
