/**
 * ROI Studio: DOM wiring.
 *
 * Workflow: load an image, type a prompt, scrub eta/sigma while the
 * mask overlay tracks the server's preview, then compress and compare
 * trials side by side. All logic that is worth testing lives in the
 * imported modules; this file only binds it to the page.
 */

import { ApiClient, ApiError, CompressResponse } from './api.js';
import { base64ToBytes, containerFilename } from './bytes.js';
import { TrialHistory, TrialRecord, SortKey } from './history.js';
import { metricsBar } from './metrics.js';
import { PreviewController } from './preview.js';

const api = new ApiClient();
const history = new TrialHistory();

interface Elements {
  file: HTMLInputElement;
  prompt: HTMLInputElement;
  eta: HTMLInputElement;
  sigma: HTMLInputElement;
  lambda: HTMLSelectElement;
  source: HTMLImageElement;
  overlay: HTMLImageElement;
  roiFraction: HTMLElement;
  compress: HTMLButtonElement;
  banner: HTMLElement;
  metrics: HTMLElement;
  recon: HTMLImageElement;
  historyBody: HTMLElement;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let imageB64: string | null = null;
let compressInFlight = false;

function readFileAsBase64Png(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => {
      const url = reader.result as string; // data:image/png;base64,....
      resolve(url.slice(url.indexOf(',') + 1));
    };
    reader.onerror = () => reject(reader.error);
    reader.readAsDataURL(file);
  });
}

function showBanner(ui: Elements, message: string | null): void {
  ui.banner.textContent = message ?? '';
  ui.banner.hidden = message === null;
  ui.compress.disabled = message !== null || imageB64 === null || compressInFlight;
}

function renderHistory(ui: Elements, sortKey: SortKey): void {
  ui.historyBody.replaceChildren(
    ...history.sortedBy(sortKey).map((r) => historyRow(r)),
  );
}

function historyRow(record: TrialRecord): HTMLTableRowElement {
  const row = document.createElement('tr');
  const bar = metricsBar({ bpp: record.bpp, psnr: record.psnr, roi_psnr: record.roiPsnr });
  for (const text of [
    String(record.id), record.prompt, String(record.eta), String(record.sigma),
    bar.bpp, bar.psnr, bar.roiPsnr,
  ]) {
    const cell = document.createElement('td');
    cell.textContent = text;
    row.appendChild(cell);
  }
  const actions = document.createElement('td');
  const download = document.createElement('button');
  download.textContent = 'export .croi';
  download.addEventListener('click', () => exportContainer(record));
  actions.appendChild(download);
  row.appendChild(actions);
  return row;
}

function exportContainer(record: TrialRecord): void {
  const bytes = base64ToBytes(record.container);
  const blob = new Blob([bytes.buffer as ArrayBuffer], { type: 'application/octet-stream' });
  const link = document.createElement('a');
  link.href = URL.createObjectURL(blob);
  link.download = containerFilename(record.prompt, record.id);
  link.click();
  URL.revokeObjectURL(link.href);
}

function recordTrial(ui: Elements, body: CompressResponse, prompt: string,
                     eta: number, sigma: number): void {
  history.append({
    prompt,
    eta,
    sigma,
    lambdaIndex: body.lambda_index,
    bpp: body.bpp,
    psnr: body.psnr,
    roiPsnr: body.roi_psnr,
    maskPng: body.mask_png,
    reconstructionPng: body.reconstruction_png,
    container: body.container,
  });
  const bar = metricsBar(body);
  ui.metrics.textContent =
    `bpp ${bar.bpp} · PSNR ${bar.psnr} dB · ROI-PSNR ${bar.roiPsnr} dB`;
  ui.recon.src = `data:image/png;base64,${body.reconstruction_png}`;
  renderHistory(ui, 'id');
}

export function main(): void {
  const ui: Elements = {
    file: el('file'),
    prompt: el('prompt'),
    eta: el('eta'),
    sigma: el('sigma'),
    lambda: el('lambda'),
    source: el('source'),
    overlay: el('overlay'),
    roiFraction: el('roi-fraction'),
    compress: el('compress'),
    banner: el('banner'),
    metrics: el('metrics'),
    recon: el('recon'),
    historyBody: el('history-body'),
  };

  const preview = new PreviewController(
    api,
    (result) => {
      ui.overlay.src = `data:image/png;base64,${result.mask_png}`;
      ui.roiFraction.textContent = String(result.roi_pixel_fraction);
      showBanner(ui, null);
    },
    (err) => {
      const message = err instanceof ApiError ? err.message : 'service unreachable';
      showBanner(ui, message);
    },
  );

  const schedulePreview = (): void => {
    if (imageB64 === null) return;
    preview.request({
      image: imageB64,
      text: ui.prompt.value || 'Foreground',
      eta: Number(ui.eta.value),
      sigma: Number(ui.sigma.value),
    });
  };

  ui.file.addEventListener('change', async () => {
    const file = ui.file.files?.[0];
    if (!file) return;
    imageB64 = await readFileAsBase64Png(file);
    ui.source.src = `data:image/png;base64,${imageB64}`;
    ui.compress.disabled = false;
    schedulePreview();
  });
  for (const input of [ui.prompt, ui.eta, ui.sigma]) {
    input.addEventListener('input', schedulePreview);
  }

  ui.compress.addEventListener('click', async () => {
    if (imageB64 === null || compressInFlight) return;
    compressInFlight = true;
    ui.compress.disabled = true;
    try {
      const body = await api.compress({
        image: imageB64,
        text: ui.prompt.value || 'Foreground',
        eta: Number(ui.eta.value),
        sigma: Number(ui.sigma.value),
        lambda_index: Number(ui.lambda.value),
      });
      recordTrial(ui, body, ui.prompt.value || 'Foreground',
                  Number(ui.eta.value), Number(ui.sigma.value));
    } catch (err) {
      // failed compression leaves history unchanged
      const message = err instanceof ApiError ? err.message : 'service unreachable';
      showBanner(ui, message);
    } finally {
      compressInFlight = false;
      ui.compress.disabled = imageB64 === null;
    }
  });

  void api
    .models()
    .then((models) => {
      ui.lambda.replaceChildren(
        ...models.models.map((m) => {
          const opt = document.createElement('option');
          opt.value = String(m.lambda_index);
          opt.textContent = `λ=${m.lambda} (config ${m.config_id})`;
          return opt;
        }),
      );
      showBanner(ui, null);
    })
    .catch(() => showBanner(ui, 'compression service offline'));
}

if (typeof document !== 'undefined' && document.getElementById('compress')) {
  main();
}
