import { describe, expect, it } from 'vitest';

import { formatMetric, metricsBar } from '../src/metrics.js';

describe('metric display', () => {
  it('passes server values through with no arithmetic', () => {
    // String-equality against the payload: what the server sent is what
    // the user sees.
    const payload = { bpp: 0.4288330078125, psnr: 27.1519362767293, roi_psnr: 31.02 };
    const bar = metricsBar(payload);
    expect(bar.bpp).toBe(String(payload.bpp));
    expect(bar.psnr).toBe(String(payload.psnr));
    expect(bar.roiPsnr).toBe(String(payload.roi_psnr));
  });

  it('shows the inf sentinel verbatim', () => {
    const bar = metricsBar({ bpp: 1.5, psnr: 'inf', roi_psnr: 'inf' });
    expect(bar.psnr).toBe('inf');
    expect(bar.roiPsnr).toBe('inf');
  });

  it('renders missing ROI metrics as a placeholder', () => {
    expect(formatMetric(null)).toBe('—');
    expect(metricsBar({ bpp: 1, psnr: 30, roi_psnr: null }).roiPsnr).toBe('—');
  });
});
