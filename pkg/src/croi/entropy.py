"""Entropy models: discretized Gaussians, fixed-point CDF tables, rate estimation.

Two models are used for coding: a conditional Gaussian for the main
latent (mean/scale predicted by the hyper synthesis) and a per-channel
factorized Gaussian for the hyper-latent.  Both share the same table
machinery: 16-bit cumulative-frequency tables over a symmetric support
of ``TAIL_T`` standard deviations, with a trailing escape symbol whose
payload is coded as raw bits.
"""

import math

import numpy as np
import torch
from scipy.special import ndtr

PRECISION = 16
CDF_TOTAL = 1 << PRECISION
TAIL_T = 8
SCALE_FLOOR = 1e-2
LIKELIHOOD_FLOOR = 1e-9

# Coding scales are snapped to the nearest entry (in log space) of a
# fixed geometric grid; 256 levels keep the snap error well inside the
# 1% rate-consistency budget.
SCALE_TABLE = np.exp(np.linspace(math.log(SCALE_FLOOR), math.log(256.0), 256))


def pmf_to_quantized_cdf(pmf):
    """Quantize a pmf (escape mass included as last entry) to a CDF.

    Every symbol keeps at least one count so the coder can represent
    it; the total is exactly ``CDF_TOTAL``.
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    if np.any(~np.isfinite(pmf)) or np.any(pmf < 0):
        raise ValueError("pmf must be finite and non-negative")
    prob = pmf / pmf.sum()
    counts = np.maximum(1, np.round(prob * CDF_TOTAL)).astype(np.int64)
    diff = int(counts.sum()) - CDF_TOTAL
    while diff > 0:
        # Steal from the largest bucket; keeps the 1-count minima intact.
        k = int(np.argmax(counts))
        take = min(diff, int(counts[k]) - 1)
        counts[k] -= take
        diff -= take
    if diff < 0:
        counts[int(np.argmax(counts))] -= diff
    cdf = np.zeros(len(counts) + 1, dtype=np.int32)
    np.cumsum(counts, out=cdf[1:])
    return cdf


def discretized_gaussian_pmf(scale, bound):
    """P(round(X) = k) for X ~ N(0, scale), k in [-bound, bound], plus escape mass."""
    k = np.arange(-bound, bound + 1, dtype=np.float64)
    a = (np.abs(k) - 0.5) / scale
    b = (np.abs(k) + 0.5) / scale
    pmf = ndtr(-a) - ndtr(-b)
    escape = max(0.0, 1.0 - pmf.sum())
    return np.concatenate([pmf, [escape]])


def gaussian_cdf_table(scale):
    """Build (cdf, offset) for one Gaussian scale; offset is the lowest symbol."""
    scale = max(float(scale), SCALE_FLOOR)
    bound = max(1, int(math.ceil(TAIL_T * scale)))
    cdf = pmf_to_quantized_cdf(discretized_gaussian_pmf(scale, bound))
    return cdf, -bound


class EntropyTables:
    """Packed per-table CDFs in the layout the range coder consumes."""

    def __init__(self, cdfs, offsets):
        sizes = np.array([len(c) for c in cdfs], dtype=np.int32)
        self.cdfs = np.zeros((len(cdfs), int(sizes.max())), dtype=np.int32)
        for i, c in enumerate(cdfs):
            self.cdfs[i, : len(c)] = c
        self.cdf_sizes = sizes
        self.offsets = np.asarray(offsets, dtype=np.int32)


_GAUSSIAN_TABLES = None


def gaussian_tables():
    """Tables for every entry of SCALE_TABLE (built once, cached)."""
    global _GAUSSIAN_TABLES
    if _GAUSSIAN_TABLES is None:
        built = [gaussian_cdf_table(s) for s in SCALE_TABLE]
        _GAUSSIAN_TABLES = EntropyTables([c for c, _ in built], [o for _, o in built])
    return _GAUSSIAN_TABLES


def scale_indexes(scales):
    """Nearest SCALE_TABLE index (log-space) for each element."""
    s = np.clip(np.asarray(scales, dtype=np.float64), SCALE_FLOOR, SCALE_TABLE[-1])
    log_step = math.log(SCALE_TABLE[-1] / SCALE_TABLE[0]) / (len(SCALE_TABLE) - 1)
    idx = np.round(np.log(s / SCALE_TABLE[0]) / log_step).astype(np.int64)
    return np.clip(idx, 0, len(SCALE_TABLE) - 1)


def channel_tables(scales):
    """Per-channel tables (exact scales, no grid snap) for the factorized prior."""
    built = [gaussian_cdf_table(s) for s in np.asarray(scales, dtype=np.float64)]
    return EntropyTables([c for c, _ in built], [o for _, o in built])


def estimate_symbol_bits(symbols, scales):
    """Sum of -log2 P(symbol) under continuous discretized Gaussians.

    ``symbols`` are mean-centered integers; ``scales`` broadcasts
    against them.  Raises on non-finite likelihoods.
    """
    s = np.abs(np.asarray(symbols, dtype=np.float64))
    scale = np.maximum(np.broadcast_to(np.asarray(scales, dtype=np.float64), s.shape),
                       SCALE_FLOOR)
    prob = ndtr((0.5 - s) / scale) - ndtr((-0.5 - s) / scale)
    prob = np.maximum(prob, LIKELIHOOD_FLOOR)
    bits = -np.log2(prob)
    if not np.all(np.isfinite(bits)):
        raise ValueError("non-finite likelihood in rate estimate")
    return float(bits.sum())


def _std_normal_cdf(x):
    return 0.5 * (1.0 + torch.erf(x * (2.0 ** -0.5)))


def gaussian_likelihood(values, mean, scale):
    """P(values in [v-0.5, v+0.5)) for N(mean, scale); differentiable."""
    scale = torch.clamp(scale, min=SCALE_FLOOR)
    centered = values - mean
    upper = _std_normal_cdf((centered + 0.5) / scale)
    lower = _std_normal_cdf((centered - 0.5) / scale)
    return torch.clamp(upper - lower, min=LIKELIHOOD_FLOOR)


def likelihood_to_bits(likelihood):
    return -torch.log2(likelihood).sum()
