import { afterEach, describe, expect, it, vi } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';

function mockFetch(status: number, body: unknown) {
  const fn = vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  }));
  vi.stubGlobal('fetch', fn);
  return fn;
}

afterEach(() => vi.unstubAllGlobals());

describe('ApiClient', () => {
  it('posts mask requests with the full parameter set', async () => {
    const fn = mockFetch(200, {
      mask_png: 'AA==', roi_pixel_fraction: 0.5, eta: 0.9, sigma: 0.1, text: 'cat',
    });
    const api = new ApiClient('http://svc');
    const result = await api.mask('IMG', 'cat', 0.9, 0.1);
    expect(result.roi_pixel_fraction).toBe(0.5);
    const [url, init] = fn.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe('http://svc/v1/mask');
    expect(JSON.parse(init.body as string)).toEqual({
      image: 'IMG', text: 'cat', eta: 0.9, sigma: 0.1,
    });
  });

  it('maps structured errors onto ApiError with status', async () => {
    mockFetch(503, { code: 503, message: 'backend unavailable' });
    const api = new ApiClient();
    const err = await api.mask('IMG', 'cat', 0.85, 0.01).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(503);
    expect(err.backendUnavailable).toBe(true);
    expect(err.message).toBe('backend unavailable');
  });

  it('keeps the HTTP status message for non-JSON error bodies', async () => {
    vi.stubGlobal('fetch', vi.fn(async () => ({
      ok: false,
      status: 500,
      json: async () => { throw new Error('not json'); },
    })));
    const api = new ApiClient();
    const err = await api.decompress('AAAA').catch((e) => e);
    expect(err.message).toBe('HTTP 500');
  });

  it('fetches the model list', async () => {
    mockFetch(200, {
      models: [{ config_id: 0, lambda_index: 1, lambda: 0.013, channels_n: 64, channels_m: 48 }],
      lambda_table: [0.0035, 0.013, 0.025, 0.0483, 0.0932],
      backend: 'synthetic-test',
    });
    const api = new ApiClient();
    const models = await api.models();
    expect(models.models).toHaveLength(1);
    expect(models.lambda_table).toHaveLength(5);
  });
});
