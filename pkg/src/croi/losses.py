"""Weighted rate-distortion loss."""

from dataclasses import dataclass

import numpy as np
import torch

from .config import LAMBDA_TABLE
from .tma import upsample_mask

# Distortion is computed on [0,1] pixels and rescaled to the 8-bit
# range inside the loss so the lambda table keeps its usual meaning.
DISTORTION_SCALE = 255.0 ** 2


@dataclass
class LossBreakdown:
    distortion: float
    rate_bpp: float
    lam: float
    total: float


def weighted_distortion(x, x_hat, m):
    """Mean of squared mask-weighted residuals; m = 1 reduces to plain MSE."""
    if isinstance(x, np.ndarray):
        x = torch.from_numpy(np.asarray(x, dtype=np.float64).transpose(2, 0, 1))[None]
        x_hat = torch.from_numpy(
            np.asarray(x_hat, dtype=np.float64).transpose(2, 0, 1))[None]
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(x_hat.shape)}")
    if torch.is_tensor(m):
        weight = m
    else:
        weight = torch.from_numpy(np.ascontiguousarray(
            upsample_mask(m, x.shape[-2:]).transpose(2, 0, 1)))[None].to(x.dtype)
    if weight.shape[-2:] != x.shape[-2:]:
        raise ValueError(
            f"weight dims {tuple(weight.shape[-2:])} do not match image "
            f"dims {tuple(x.shape[-2:])}")
    return torch.mean(((x - x_hat) * weight) ** 2)


def rd_loss(distortion, rate_bpp, lambda_index):
    """L = lambda * (255^2 * D) + R."""
    if not 0 <= lambda_index < len(LAMBDA_TABLE):
        raise ValueError(f"lambda_index {lambda_index} out of range")
    lam = LAMBDA_TABLE[lambda_index]
    d = float(distortion)
    r = float(rate_bpp)
    if not (np.isfinite(d) and np.isfinite(r)) or d < 0 or r < 0:
        raise ValueError("distortion and rate must be finite and non-negative")
    return LossBreakdown(distortion=d, rate_bpp=r, lam=lam,
                         total=lam * DISTORTION_SCALE * d + r)


def rd_loss_tensor(distortion, rate_bpp, lambda_index):
    """Differentiable variant used by the training loop."""
    lam = LAMBDA_TABLE[lambda_index]
    return lam * DISTORTION_SCALE * distortion + rate_bpp
