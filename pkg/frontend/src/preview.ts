/**
 * Mask preview controller: debounced, cancel-superseded requests.
 *
 * Slider scrubbing fires many preview requests; only the newest one may
 * resolve into the UI. Superseded requests are aborted, and stale
 * responses that still arrive are dropped.
 */

import { ApiClient, MaskResponse } from './api.js';

export interface PreviewParams {
  image: string;
  text: string;
  eta: number;
  sigma: number;
}

export class PreviewController {
  private controller: AbortController | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private generation = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly onResult: (result: MaskResponse) => void,
    private readonly onError: (err: unknown) => void,
    private readonly debounceMs = 150,
  ) {}

  /** Schedule a preview; an earlier pending one is cancelled. */
  request(params: PreviewParams): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire(params);
    }, this.debounceMs);
  }

  private async fire(params: PreviewParams): Promise<void> {
    this.controller?.abort();
    this.controller = new AbortController();
    const generation = ++this.generation;
    try {
      const result = await this.api.mask(
        params.image,
        params.text,
        params.eta,
        params.sigma,
        this.controller.signal,
      );
      if (generation === this.generation) this.onResult(result);
    } catch (err) {
      if (err instanceof DOMException && err.name === 'AbortError') return;
      if (generation === this.generation) this.onError(err);
    }
  }
}
