"""Three-stage training.

Stage 1 trains the codec end-to-end on unlabeled crops with the
attention path disabled.  Stage 2 freezes everything except the mask
representation and trains it on annotated data with ground-truth
similarity injection.  Stage 3 fine-tunes the whole model.  The
quality factor sigma is sampled per example so one model serves the
whole sigma range at inference.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .config import MASK_SCALE
from .losses import rd_loss_tensor, weighted_distortion
from .metrics import psnr
from .model import CodecModel, save_checkpoint
from .tma import (BinarizationConfig, DEFAULT_ETA, adjustable_binarization,
                  nearest_resize, upsample_mask)

SIGMA_POLICY = (0.01, 0.1, 0.3, 0.5, 0.9)


@dataclass
class TrainingPlan:
    stage: int
    dataset: object
    lambda_index: int
    steps: int
    batch_size: int = 8
    lr: float = 0.001
    seed: int = 0
    eta: float = DEFAULT_ETA
    sigma_set: tuple = SIGMA_POLICY
    log_every: int = 50
    grad_clip: float = 1.0
    crop: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.stage not in (1, 2, 3):
            raise ValueError("stage must be 1, 2 or 3")


def sample_training_example(record, rng, sigma_set=SIGMA_POLICY):
    """Pick one annotated category (uniform) and a sigma from the policy set.

    Records without annotations fall back to a uniform all-ROI mask.
    """
    sigma = float(sigma_set[rng.integers(len(sigma_set))])
    cats = record.categories
    if not cats:
        return record.image, None, None, sigma
    cat = cats[rng.integers(len(cats))]
    return record.image, cat, record.masks[cat], sigma


def _mask_from_gt(gt_mask, image_hw, eta, sigma):
    """GT-injection path: similarity = resampled GT, then binarization."""
    h, w = image_hw
    target = (h // MASK_SCALE, w // MASK_SCALE)
    if gt_mask is None:
        p = np.ones(target)
    else:
        p = nearest_resize(gt_mask.astype(np.float64), target)
    return adjustable_binarization(p, BinarizationConfig(eta=eta, sigma=sigma))


def non_mr_digest(model):
    """Digest of every parameter outside the mask-representation sub-module."""
    h = hashlib.sha256()
    for name, param in sorted(model.named_parameters()):
        if not name.startswith("mr."):
            h.update(name.encode())
            h.update(param.detach().cpu().numpy().tobytes())
    return h.hexdigest()


def _set_trainable(model, stage):
    if stage == 1 or stage == 3:
        for p in model.parameters():
            p.requires_grad_(True)
    else:
        for name, p in model.named_parameters():
            p.requires_grad_(name.startswith("mr."))


def _stage1_batch(plan, rng):
    xs = plan.dataset.sample_batch(plan.batch_size)
    x = torch.from_numpy(xs.transpose(0, 3, 1, 2).astype(np.float32))
    return x, None, None


def _annotated_batch(plan, rng):
    images, masks, weights = [], [], []
    n = len(plan.dataset)
    for _ in range(plan.batch_size):
        record = plan.dataset[int(rng.integers(n))]
        image, _, gt, sigma = sample_training_example(record, rng, plan.sigma_set)
        m = _mask_from_gt(gt, image.shape[:2], plan.eta, sigma)
        images.append(image)
        masks.append(m)
        weights.append(upsample_mask(m, image.shape[:2]))
    x = torch.from_numpy(
        np.stack(images).transpose(0, 3, 1, 2).astype(np.float32))
    m = torch.from_numpy(np.stack(masks)[:, None].astype(np.float32))
    w = torch.from_numpy(
        np.stack(weights).transpose(0, 3, 1, 2).astype(np.float32))
    return x, m, w


def run_stage(plan, model, log_path=None, checkpoint_path=None):
    """Train one stage; returns the metrics log (list of dicts)."""
    if plan.stage in (2, 3) and not hasattr(plan.dataset, "records"):
        raise ValueError(f"stage {plan.stage} requires an annotated dataset")
    torch.manual_seed(plan.seed)
    rng = np.random.default_rng(plan.seed)
    _set_trainable(model, plan.stage)
    model.train()
    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(params, lr=plan.lr)
    log = []
    log_fh = open(log_path, "a") if log_path else None
    try:
        for step in range(plan.steps):
            if plan.stage == 1:
                x, m, w = _stage1_batch(plan, rng)
            else:
                x, m, w = _annotated_batch(plan, rng)
            out = model(x, m)
            if w is None:
                distortion = torch.mean((x - out["x_hat"]) ** 2)
            else:
                distortion = weighted_distortion(x, out["x_hat"], w)
            loss = rd_loss_tensor(distortion, out["bpp"], plan.lambda_index)
            optimizer.zero_grad()
            loss.backward()
            if plan.grad_clip:
                torch.nn.utils.clip_grad_norm_(params, plan.grad_clip)
            optimizer.step()
            if step % plan.log_every == 0 or step == plan.steps - 1:
                with torch.no_grad():
                    x_hat = torch.clamp(out["x_hat"], 0, 1)
                    batch_psnr = psnr(x.numpy(), x_hat.numpy())
                    if m is None:
                        batch_roi_psnr = batch_psnr
                    else:
                        roi = torch.repeat_interleave(
                            torch.repeat_interleave(m == 1.0, MASK_SCALE, dim=-2),
                            MASK_SCALE, dim=-1)
                        roi = roi.expand(-1, 3, -1, -1)
                        if roi.any():
                            err = ((x - x_hat) ** 2)[roi].mean()
                            batch_roi_psnr = float(
                                10 * torch.log10(1.0 / err)) if err > 0 else float("inf")
                        else:
                            batch_roi_psnr = None
                record = {
                    "step": step, "stage": plan.stage,
                    "loss": loss.item(), "D": distortion.item(),
                    "R_bpp": out["bpp"].item(), "psnr": batch_psnr,
                    "roi_psnr": batch_roi_psnr,
                }
                log.append(record)
                if log_fh:
                    log_fh.write(json.dumps(record) + "\n")
                    log_fh.flush()
    finally:
        if log_fh:
            log_fh.close()
    model.eval()
    for p in model.parameters():
        p.requires_grad_(True)
    if checkpoint_path:
        save_checkpoint(model, checkpoint_path,
                        extra={"stage": plan.stage, "steps": plan.steps})
    return log


def run_three_stages(model, unlabeled, annotated, lambda_index, out_dir,
                     stage_steps=(2000, 500, 1000), batch_size=8, seed=0,
                     log_every=50):
    """Convenience driver: stage 1 -> 2 -> 3 with chained checkpoints."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    datasets = (unlabeled, annotated, annotated)
    logs = []
    for stage, (dataset, steps) in enumerate(zip(datasets, stage_steps), start=1):
        plan = TrainingPlan(stage=stage, dataset=dataset,
                            lambda_index=lambda_index, steps=steps,
                            batch_size=batch_size, seed=seed + stage,
                            log_every=log_every)
        logs.append(run_stage(
            plan, model,
            log_path=out_dir / f"stage{stage}_metrics.ndjson",
            checkpoint_path=out_dir / f"stage{stage}.pt"))
    return logs
