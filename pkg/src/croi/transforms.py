"""Analysis/synthesis transforms and the hyperprior pair.

Desk-scale convolutional codec: four stride-2 stages in each direction
(total stride 16) with ReLU nonlinearities, and a two-stage hyper pair
(additional stride 4, so hyper-latents sit at 1/64 of the image).
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ENCODER_STRIDE
from .entropy import SCALE_FLOOR


def round_half_away(x):
    """Round to nearest integer, ties away from zero (torch.round is half-even)."""
    return torch.where(x >= 0, torch.floor(x + 0.5), torch.ceil(x - 0.5))


def pad_to_multiple(x, multiple):
    """Reflect-pad an NCHW tensor on the bottom/right to the given multiple."""
    h, w = x.shape[-2:]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return x
    return F.pad(x, (0, pw, 0, ph), mode="reflect")


class AnalysisTransform(nn.Module):
    """Image -> (intermediate latent f, latent y); y is f after one more conv."""

    def __init__(self, channels_n):
        super().__init__()
        n = channels_n
        self.stages = nn.Sequential(
            nn.Conv2d(3, n, 5, stride=2, padding=2), nn.ReLU(inplace=True),
            nn.Conv2d(n, n, 5, stride=2, padding=2), nn.ReLU(inplace=True),
            nn.Conv2d(n, n, 5, stride=2, padding=2), nn.ReLU(inplace=True),
            nn.Conv2d(n, n, 5, stride=2, padding=2),
        )
        self.final = nn.Conv2d(n, n, 3, padding=1)

    def forward(self, x):
        h, w = x.shape[-2:]
        if h % ENCODER_STRIDE or w % ENCODER_STRIDE:
            raise ValueError(
                f"input dims ({h}, {w}) not divisible by {ENCODER_STRIDE}; pad first")
        f = self.stages(x)
        y = self.final(f)
        return f, y


class SynthesisTransform(nn.Module):
    """Quantized latent -> image in [0, 1]."""

    def __init__(self, channels_n):
        super().__init__()
        n = channels_n
        self.stages = nn.Sequential(
            nn.ConvTranspose2d(n, n, 5, stride=2, padding=2, output_padding=1),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(n, n, 5, stride=2, padding=2, output_padding=1),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(n, n, 5, stride=2, padding=2, output_padding=1),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(n, 3, 5, stride=2, padding=2, output_padding=1),
        )

    def forward(self, y_hat, clamp=True):
        x = self.stages(y_hat)
        return torch.clamp(x, 0.0, 1.0) if clamp else x


class HyperAnalysis(nn.Module):
    def __init__(self, channels_n, channels_m):
        super().__init__()
        n, m = channels_n, channels_m
        self.layers = nn.Sequential(
            nn.Conv2d(n, m, 3, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(m, m, 5, stride=2, padding=2), nn.ReLU(inplace=True),
            nn.Conv2d(m, m, 5, stride=2, padding=2),
        )

    def forward(self, y):
        return self.layers(y)


class HyperSynthesis(nn.Module):
    """Hyper-latent -> per-element Gaussian (mean, scale) for the main latent."""

    def __init__(self, channels_n, channels_m):
        super().__init__()
        n, m = channels_n, channels_m
        self.layers = nn.Sequential(
            nn.ConvTranspose2d(m, m, 5, stride=2, padding=2, output_padding=1),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(m, m, 5, stride=2, padding=2, output_padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(m, 2 * n, 3, padding=1),
        )

    def forward(self, z_hat):
        params = self.layers(z_hat)
        mean, raw_scale = params.chunk(2, dim=1)
        scale = SCALE_FLOOR + F.softplus(raw_scale)
        return mean, scale
