"""Experiment runners: RD points and the four ablation sweeps."""

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .metrics import EmptyRoiError, psnr, roi_psnr
from .pipeline import RoiCodec, _roi_indicator
from .tma import DEFAULT_ETA, DEFAULT_SIGMA, GroundTruthBackend

ETA_GRID = (0.95, 0.9, 0.85, 0.8, 0.75)
SIGMA_GRID = (0.01, 0.1, 0.3, 0.9)

CSV_COLUMNS = ("image_id", "lambda_index", "eta", "sigma", "bpp", "psnr", "roi_psnr")


class MissingModelError(ValueError):
    """A sweep grid cell needs a trained model that was not supplied."""


@dataclass
class RdPoint:
    bpp: float
    psnr: float
    roi_psnr: float | None
    sigma: float
    eta: float
    lambda_index: int
    model_id: str
    image_id: object = None

    def __post_init__(self):
        if self.bpp <= 0:
            raise ValueError("bpp must be positive")


def _finite_mean(values):
    vals = [v for v in values if v is not None and math.isfinite(v)]
    return float(np.mean(vals)) if vals else None


def evaluate_record(codec, record, prompt, sigma, eta, use_gt_roi=True,
                    export_dir=None):
    """One RD point for one annotated record; ROI-PSNR against the GT mask."""
    x = record.image
    outcome = codec.compress_image(x, prompt=prompt, sigma=sigma, eta=eta)
    if use_gt_roi and prompt in record.masks:
        roi = record.masks[prompt]
    else:
        roi = _roi_indicator(outcome.mask, x.shape[:2])
    try:
        roi_db = roi_psnr(x, outcome.x_hat, roi)
    except EmptyRoiError:
        roi_db = None
    if export_dir is not None:
        export_dir = Path(export_dir)
        export_dir.mkdir(parents=True, exist_ok=True)
        arr = (np.clip(outcome.x_hat, 0, 1) * 255).round().astype(np.uint8)
        Image.fromarray(arr).save(
            export_dir / f"recon_{record.image_id}_s{sigma}_e{eta}.png")
    return RdPoint(
        bpp=outcome.bpp, psnr=psnr(x, outcome.x_hat), roi_psnr=roi_db,
        sigma=sigma, eta=eta, lambda_index=codec.model.cfg.lambda_index,
        model_id=f"c{codec.model.cfg.config_id}_l{codec.model.cfg.lambda_index}",
        image_id=record.image_id)


def _gt_codec(model, dataset):
    """A codec with every record's GT masks registered (padded grid is 256-safe)."""
    backend = GroundTruthBackend()
    for record in dataset.records:
        for cat, mask in record.masks.items():
            backend.register(record.image, mask, prompt=cat)
    return RoiCodec(model, backend)


def _aggregate(points, **labels):
    agg = {
        "bpp": _finite_mean([p.bpp for p in points]),
        "psnr": _finite_mean([p.psnr for p in points]),
        "roi_psnr": _finite_mean([p.roi_psnr for p in points]),
        "n_images": len(points),
    }
    agg.update(labels)
    return agg


def run_sweep(kind, grid, dataset, model, out_dir=None, models=None,
              eta=DEFAULT_ETA, sigma=DEFAULT_SIGMA, export_recons=False):
    """Sweep over eta, sigma, fusion kinds, or IG on/off.

    ``eta``/``sigma`` sweeps are inference-only on one model; ``fusion``
    and ``ig`` need a trained model per grid cell in ``models``.
    Returns (per-image RdPoints, per-grid-value aggregate rows).
    """
    if kind in ("eta", "sigma"):
        cells = {value: model for value in grid}
        if model is None:
            raise MissingModelError(f"{kind} sweep requires a trained model")
    elif kind in ("fusion", "ig"):
        models = models or {}
        missing = [v for v in grid if v not in models]
        if missing:
            raise MissingModelError(
                f"{kind} sweep is missing trained models for cells {missing}")
        cells = {value: models[value] for value in grid}
    else:
        raise ValueError(f"unknown sweep kind {kind!r}")

    points, aggregates = [], []
    for value, cell_model in cells.items():
        codec = _gt_codec(cell_model, dataset)
        cell_eta = value if kind == "eta" else eta
        cell_sigma = value if kind == "sigma" else sigma
        cell_points = []
        for record in dataset.records:
            if not record.categories:
                continue
            prompt = record.categories[0]
            export_dir = (Path(out_dir) / "recons" if export_recons and out_dir
                          else None)
            cell_points.append(evaluate_record(
                codec, record, prompt, cell_sigma, cell_eta,
                export_dir=export_dir))
        points.extend(cell_points)
        aggregates.append(_aggregate(cell_points, kind=kind, value=str(value),
                                     eta=cell_eta, sigma=cell_sigma))
    if out_dir:
        write_rd_table(points, aggregates, Path(out_dir), kind)
    return points, aggregates


def write_rd_table(points, aggregates, out_dir, name):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / f"{name}_sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for p in points:
            writer.writerow([p.image_id, p.lambda_index, p.eta, p.sigma,
                             p.bpp, p.psnr, p.roi_psnr])
    with open(out_dir / f"{name}_sweep.json", "w") as fh:
        json.dump({"points": [asdict(p) for p in points],
                   "aggregates": aggregates}, fh, indent=2)
