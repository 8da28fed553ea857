"""Latent mask attention: mask representation, importance generation, fusion.

The half-resolution ROI mask is lifted into the latent space (MR), an
importance map is derived from the intermediate latent (IG), and the
two priors are fused into an attention map that rescales the latent
representation before coding.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

FUSION_KINDS = ("A+M", "M+M", "A+A")


class MaskRepresentation(nn.Module):
    """Three stride-2 convolutions and a sigmoid: mask at H/2 -> prior at H/16."""

    def __init__(self, channels_n):
        super().__init__()
        n = channels_n
        self.layers = nn.Sequential(
            nn.Conv2d(1, n // 2, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(n // 2, n, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(n, n, 3, stride=2, padding=1),
        )
        # Bias zero so the sigmoid starts centered near 0.5.
        nn.init.zeros_(self.layers[-1].bias)

    def forward(self, m):
        h, w = m.shape[-2:]
        if h % 8 or w % 8:
            raise ValueError(f"mask dims ({h}, {w}) not divisible by 8")
        return torch.sigmoid(self.layers(m))


class ResidualBlock(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x):
        return x + self.conv2(F.relu(self.conv1(x)))


class ImportanceGeneration(nn.Module):
    """conv -> Tanh -> three residual blocks -> conv -> Softsign."""

    def __init__(self, channels_n):
        super().__init__()
        n = channels_n
        self.head = nn.Conv2d(n, n, 3, padding=1)
        self.blocks = nn.Sequential(*(ResidualBlock(n) for _ in range(3)))
        self.tail = nn.Conv2d(n, n, 3, padding=1)
        # Zero init: the importance prior starts as a no-op refinement.
        nn.init.zeros_(self.tail.weight)
        nn.init.zeros_(self.tail.bias)

    def forward(self, f):
        h = self.blocks(torch.tanh(self.head(f)))
        return F.softsign(self.tail(h))


def fuse(l, i):
    """Attention map s = l + i (element-wise)."""
    if l.shape != i.shape:
        raise ValueError(f"shape mismatch: {tuple(l.shape)} vs {tuple(i.shape)}")
    return l + i


def optimize_latent(y, s):
    """Optimized latent representation: y rescaled element-wise by s."""
    if y.shape != s.shape:
        raise ValueError(f"shape mismatch: {tuple(y.shape)} vs {tuple(s.shape)}")
    return y * s


def fuse_ablation_variant(kind, l, i, y):
    """Fusion ablations: A+M (default), M+M, A+A."""
    if l.shape != i.shape or l.shape != y.shape:
        raise ValueError("l, i, y must share one shape")
    if kind == "A+M":
        return (l + i) * y
    if kind == "M+M":
        return l * i * y
    if kind == "A+A":
        return l + i + y
    raise ValueError(f"unknown fusion kind {kind!r}")
