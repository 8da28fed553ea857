"""Command-line interface.

Exit codes: 3 backend unavailable, 4 missing model, 5 corrupt container.
"""

import json
import os
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

from .bitstream import Bitstream, BitstreamError
from .coder import DecodeError
from .config import CodecConfig, LAMBDA_TABLE
from .data import AnnotatedDataset, UnlabeledDataset, make_synthetic_dataset
from .metrics import bpp as bpp_of
from .model import CodecModel, load_checkpoint
from .pipeline import RoiCodec
from .tma import (BackendUnavailableError, DEFAULT_ETA, DEFAULT_PROMPT,
                  DEFAULT_SIGMA, GroundTruthBackend, PretrainedBackend,
                  SyntheticBackend, load_mask_png, mask_iou, save_mask_png)

MODEL_DIR_ENV = "CROI_MODEL_DIR"

EXIT_BACKEND_UNAVAILABLE = 3
EXIT_MISSING_MODEL = 4
EXIT_CORRUPT_CONTAINER = 5

BACKEND_CHOICES = ("synthetic", "synthetic-hue", "gt", "pretrained")


def checkpoint_name(config_id, lambda_index):
    return f"croi_c{config_id}_l{lambda_index}.pt"


def resolve_model_dir(model_dir):
    return Path(model_dir or os.environ.get(MODEL_DIR_ENV, "models"))


def find_model(model_dir, lambda_index, config_id=None):
    """Locate and load a checkpoint for the requested rate point."""
    model_dir = resolve_model_dir(model_dir)
    candidates = ([config_id] if config_id is not None else
                  [0, 1, 2])
    for cid in candidates:
        path = model_dir / checkpoint_name(cid, lambda_index)
        if path.exists():
            return load_checkpoint(path)
    raise FileNotFoundError(
        f"no checkpoint for lambda index {lambda_index} under {model_dir}")


def make_backend(name, gt_image=None, gt_mask=None):
    if name == "synthetic":
        return SyntheticBackend("brightness")
    if name == "synthetic-hue":
        return SyntheticBackend("hue-band")
    if name == "pretrained":
        return PretrainedBackend()
    backend = GroundTruthBackend()
    if gt_image is not None and gt_mask is not None:
        backend.register(gt_image, gt_mask)
    return backend


def read_image(path):
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


@click.group()
def main():
    """Customizable ROI-based image compression."""


@main.command("mask")
@click.argument("image", type=click.Path(exists=True))
@click.option("--text", default=DEFAULT_PROMPT, show_default=True)
@click.option("--eta", default=DEFAULT_ETA, show_default=True)
@click.option("--sigma", default=DEFAULT_SIGMA, show_default=True)
@click.option("--backend", "backend_name", default="synthetic",
              type=click.Choice(BACKEND_CHOICES), show_default=True)
@click.option("--gt-mask", type=click.Path(exists=True),
              help="GT mask PNG for the gt backend (also enables IoU output).")
@click.option("--out", required=True, type=click.Path())
def cli_mask(image, text, eta, sigma, backend_name, gt_mask, out):
    """Write the ROI mask PNG and a JSON sidecar for IMAGE."""
    x = read_image(image)
    gt = load_mask_png(gt_mask) if gt_mask else None
    backend = make_backend(backend_name, gt_image=x, gt_mask=gt)
    codec = RoiCodec(_mask_only_model(), backend)
    try:
        result = codec.make_mask(x, prompt=text, eta=eta, sigma=sigma)
    except BackendUnavailableError as exc:
        others = ", ".join(b for b in BACKEND_CHOICES if b != backend_name)
        click.echo(f"backend {backend_name!r} unavailable: {exc}\n"
                   f"fallback backends: {others}", err=True)
        sys.exit(EXIT_BACKEND_UNAVAILABLE)
    save_mask_png(out, result.mask)
    sidecar = {
        "text": text, "eta": eta, "sigma": sigma,
        "roi_pixel_fraction": result.roi_fraction,
    }
    if gt is not None:
        sidecar["iou"] = mask_iou(result.mask, gt)
    Path(out).with_suffix(".json").write_text(json.dumps(sidecar, indent=2))
    click.echo(json.dumps(sidecar))


def _mask_only_model():
    # make_mask only needs the padding multiple, not trained weights.
    class _Stub:
        cfg = CodecConfig.desk(0)
    return _Stub()


@main.command("compress")
@click.argument("image", type=click.Path(exists=True))
@click.option("--text", default=DEFAULT_PROMPT, show_default=True)
@click.option("--sigma", default=DEFAULT_SIGMA, show_default=True)
@click.option("--eta", default=DEFAULT_ETA, show_default=True)
@click.option("--lambda-index", default=1, show_default=True)
@click.option("--backend", "backend_name", default="synthetic",
              type=click.Choice(BACKEND_CHOICES), show_default=True)
@click.option("--gt-mask", type=click.Path(exists=True))
@click.option("--model-dir", type=click.Path())
@click.option("--out", required=True, type=click.Path())
def cli_compress(image, text, sigma, eta, lambda_index, backend_name, gt_mask,
                 model_dir, out):
    """Compress IMAGE into a .croi container."""
    x = read_image(image)
    try:
        model = find_model(model_dir, lambda_index)
    except FileNotFoundError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_MISSING_MODEL)
    gt = load_mask_png(gt_mask) if gt_mask else None
    backend = make_backend(backend_name, gt_image=x, gt_mask=gt)
    codec = RoiCodec(model, backend)
    try:
        outcome = codec.compress_image(x, prompt=text, sigma=sigma, eta=eta)
    except BackendUnavailableError as exc:
        click.echo(f"backend {backend_name!r} unavailable: {exc}", err=True)
        sys.exit(EXIT_BACKEND_UNAVAILABLE)
    data = outcome.bitstream.to_bytes()
    Path(out).write_bytes(data)
    click.echo(json.dumps({
        "bpp": bpp_of(len(data), x.shape[:2]),
        "psnr": outcome.psnr,
        "roi_psnr": outcome.roi_psnr,
    }))


@main.command("decompress")
@click.argument("container", type=click.Path(exists=True))
@click.option("--text", default=None, help="Ignored; decoding needs no text.")
@click.option("--model-dir", type=click.Path())
@click.option("--out", required=True, type=click.Path())
def cli_decompress(container, text, model_dir, out):
    """Decode a .croi container back to a PNG."""
    if text is not None:
        click.echo("warning: --text is ignored by the decoder", err=True)
    data = Path(container).read_bytes()
    try:
        stream = Bitstream.from_bytes(data)
    except BitstreamError as exc:
        click.echo(f"corrupt container: {exc}", err=True)
        sys.exit(EXIT_CORRUPT_CONTAINER)
    try:
        model = find_model(model_dir, stream.lambda_index, stream.config_id)
    except FileNotFoundError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_MISSING_MODEL)
    try:
        x_hat = model.decompress(stream)
    except (BitstreamError, DecodeError) as exc:
        click.echo(f"corrupt container: {exc}", err=True)
        sys.exit(EXIT_CORRUPT_CONTAINER)
    arr = (np.clip(x_hat, 0, 1) * 255).round().astype(np.uint8)
    Image.fromarray(arr).save(out)
    click.echo(f"wrote {out}")


@main.command("make-synthetic")
@click.argument("root", type=click.Path())
@click.option("--n-images", default=50, show_default=True)
@click.option("--size", default=256, show_default=True)
@click.option("--seed", default=0, show_default=True)
def cli_make_synthetic(root, n_images, size, seed):
    """Generate the bundled synthetic annotated dataset."""
    path = make_synthetic_dataset(root, n_images=n_images, size=size, seed=seed)
    click.echo(str(path))


@main.command("train")
@click.option("--unlabeled-root", required=True, type=click.Path(exists=True))
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--lambda-index", default=1, show_default=True)
@click.option("--config-id", default=0, show_default=True)
@click.option("--stage-steps", default="2000,500,1000", show_default=True)
@click.option("--batch-size", default=8, show_default=True)
@click.option("--crop", default=256, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def cli_train(unlabeled_root, manifest, lambda_index, config_id, stage_steps,
              batch_size, crop, seed, out_dir):
    """Run the three-stage training strategy."""
    from .training import run_three_stages

    steps = tuple(int(s) for s in stage_steps.split(","))
    cfg = CodecConfig.from_config_id(config_id, lambda_index)
    model = CodecModel(cfg)
    unlabeled = UnlabeledDataset(unlabeled_root, crop=crop, seed=seed)
    annotated = AnnotatedDataset(manifest)
    run_three_stages(model, unlabeled, annotated, lambda_index,
                     out_dir, stage_steps=steps, batch_size=batch_size,
                     seed=seed)
    final = Path(out_dir) / checkpoint_name(config_id, lambda_index)
    (Path(out_dir) / "stage3.pt").replace(final)
    click.echo(str(final))


@main.command("sweep")
@click.option("--kind", required=True,
              type=click.Choice(("eta", "sigma", "fusion", "ig")))
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--model-path", required=True, type=click.Path(exists=True))
@click.option("--grid", default=None, help="Comma-separated grid values.")
@click.option("--out-dir", required=True, type=click.Path())
def cli_sweep(kind, manifest, model_path, grid, out_dir):
    """Run an ablation sweep and emit CSV/JSON RD tables."""
    from .sweeps import ETA_GRID, SIGMA_GRID, run_sweep

    dataset = AnnotatedDataset(manifest)
    model = load_checkpoint(model_path)
    if grid:
        values = tuple(float(v) for v in grid.split(","))
    else:
        values = ETA_GRID if kind == "eta" else SIGMA_GRID
    _, aggregates = run_sweep(kind, values, dataset, model, out_dir=out_dir)
    click.echo(json.dumps(aggregates, indent=2))


@main.command("models")
@click.option("--model-dir", type=click.Path())
def cli_models(model_dir):
    """List checkpoints available in the model directory."""
    model_dir = resolve_model_dir(model_dir)
    entries = []
    for path in sorted(model_dir.glob("*.pt")) if model_dir.exists() else []:
        try:
            model = load_checkpoint(path)
        except Exception:
            continue
        entries.append({
            "file": path.name,
            "config_id": model.cfg.config_id,
            "lambda_index": model.cfg.lambda_index,
            "lambda": LAMBDA_TABLE[model.cfg.lambda_index],
        })
    click.echo(json.dumps(entries, indent=2))


@main.command("serve")
@click.option("--model-dir", type=click.Path())
@click.option("--backend", "backend_name", default="synthetic",
              type=click.Choice(BACKEND_CHOICES), show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def cli_serve(model_dir, backend_name, host, port):
    """Serve the HTTP API (also backs the ROI Studio UI)."""
    import uvicorn

    from .service import create_app

    app = create_app(resolve_model_dir(model_dir), backend_name)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
