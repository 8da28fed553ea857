/**
 * Metric display helpers.
 *
 * The UI shows server values verbatim: formatting is a pass-through of
 * the JSON value with no arithmetic, so the displayed string always
 * equals the payload value stringified.
 */

export function formatMetric(value: number | string | null | undefined): string {
  if (value === null || value === undefined) return '—';
  return String(value);
}

export interface MetricsBar {
  bpp: string;
  psnr: string;
  roiPsnr: string;
}

export function metricsBar(body: {
  bpp: number;
  psnr: number | string;
  roi_psnr: number | string | null;
}): MetricsBar {
  return {
    bpp: formatMetric(body.bpp),
    psnr: formatMetric(body.psnr),
    roiPsnr: formatMetric(body.roi_psnr),
  };
}
