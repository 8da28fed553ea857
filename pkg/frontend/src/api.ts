/**
 * Typed client for the compression service JSON API.
 *
 * All image transport is base64 PNG. Every numeric metric shown in the
 * UI comes verbatim from these responses; the client never computes
 * bpp/PSNR itself.
 */

export interface ModelInfo {
  config_id: number;
  lambda_index: number;
  lambda: number;
  channels_n: number;
  channels_m: number;
}

export interface ModelsResponse {
  models: ModelInfo[];
  lambda_table: number[];
  backend: string;
}

export interface MaskResponse {
  mask_png: string;
  roi_pixel_fraction: number;
  eta: number;
  sigma: number;
  text: string;
}

export interface CompressResponse {
  container: string;
  bpp: number;
  psnr: number | string; // "inf" sentinel for identical reconstructions
  roi_psnr: number | string | null;
  mask_png: string;
  reconstruction_png: string;
  config_id: number;
  lambda_index: number;
}

export interface DecompressResponse {
  reconstruction_png: string;
  height: number;
  width: number;
  config_id: number;
  lambda_index: number;
}

export interface ApiErrorBody {
  code: number;
  message: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }

  get backendUnavailable(): boolean {
    return this.status === 503;
  }
}

export interface CompressParams {
  image: string;
  text: string;
  eta: number;
  sigma: number;
  lambda_index: number;
}

async function post<T>(url: string, body: unknown, signal?: AbortSignal): Promise<T> {
  const resp = await fetch(url, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(body),
    signal,
  });
  if (!resp.ok) {
    let message = `HTTP ${resp.status}`;
    try {
      const err = (await resp.json()) as ApiErrorBody;
      if (err.message) message = err.message;
    } catch {
      // non-JSON error body; keep the status message
    }
    throw new ApiError(resp.status, message);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = '') {}

  async models(): Promise<ModelsResponse> {
    const resp = await fetch(`${this.baseUrl}/v1/models`);
    if (!resp.ok) throw new ApiError(resp.status, `HTTP ${resp.status}`);
    return (await resp.json()) as ModelsResponse;
  }

  mask(
    image: string,
    text: string,
    eta: number,
    sigma: number,
    signal?: AbortSignal,
  ): Promise<MaskResponse> {
    return post(`${this.baseUrl}/v1/mask`, { image, text, eta, sigma }, signal);
  }

  compress(params: CompressParams, signal?: AbortSignal): Promise<CompressResponse> {
    return post(`${this.baseUrl}/v1/compress`, params, signal);
  }

  decompress(container: string, signal?: AbortSignal): Promise<DecompressResponse> {
    return post(`${this.baseUrl}/v1/decompress`, { container }, signal);
  }
}
