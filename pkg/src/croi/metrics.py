"""Reconstruction and rate metrics."""

import math

import numpy as np


class EmptyRoiError(ValueError):
    """ROI-PSNR requested with an empty ROI."""


def psnr(x, x_hat):
    """10 * log10(1 / MSE) on [0,1] pixels; identical images give inf."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    mse = np.mean((x - x_hat) ** 2)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def roi_psnr(x, x_hat, roi):
    """PSNR with the MSE averaged over ROI pixels (all 3 channels) only."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    roi = np.asarray(roi) > 0
    if roi.shape != x.shape[:2]:
        raise ValueError(f"ROI dims {roi.shape} do not match image dims {x.shape[:2]}")
    if not roi.any():
        raise EmptyRoiError("ROI contains no pixels")
    diff = (x - x_hat)[roi]
    mse = np.mean(diff ** 2)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def bpp(stream_or_nbytes, dims):
    """8 * container bytes / (H * W), with pre-padding dims."""
    h, w = dims
    if hasattr(stream_or_nbytes, "to_bytes") and not isinstance(stream_or_nbytes, int):
        nbytes = len(stream_or_nbytes.to_bytes())
    elif isinstance(stream_or_nbytes, (bytes, bytearray)):
        nbytes = len(stream_or_nbytes)
    else:
        nbytes = int(stream_or_nbytes)
    return 8.0 * nbytes / (h * w)
