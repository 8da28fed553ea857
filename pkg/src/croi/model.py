"""The full codec model: transforms, LMA, entropy coding, checkpoints.

``compress`` runs the encoder path (analysis -> latent attention ->
hyperprior -> range coding) and also returns the encoder-side
reconstruction, which the decoder must reproduce byte-identically from
the container alone.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from . import coder, entropy
from .bitstream import Bitstream, BitstreamError
from .config import CodecConfig, ENCODER_STRIDE, HYPER_STRIDE, MASK_SCALE
from .lma import (FUSION_KINDS, ImportanceGeneration, MaskRepresentation,
                  fuse_ablation_variant)
from .transforms import (AnalysisTransform, HyperAnalysis, HyperSynthesis,
                         SynthesisTransform, pad_to_multiple, round_half_away)

CHECKPOINT_FORMAT = "croi-checkpoint"
CHECKPOINT_VERSION = 1

# Fixed framing per coded stream: 32-bit symbol checksum plus coder
# termination/byte alignment. Included in the rate estimate so it
# tracks the actual payload even when the symbol cost is small.
STREAM_OVERHEAD_BITS = 40


def image_to_tensor(x):
    """H x W x 3 float array in [0,1] -> 1 x 3 x H x W tensor."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 3 or x.shape[2] != 3:
        raise ValueError(f"expected H x W x 3 image, got {x.shape}")
    if x.min() < 0 or x.max() > 1:
        raise ValueError("image values must lie in [0, 1]")
    return torch.from_numpy(np.ascontiguousarray(x.transpose(2, 0, 1)))[None]


def tensor_to_image(t):
    return t[0].detach().cpu().numpy().transpose(1, 2, 0)


def quantize(t, mode, offset=None):
    """Noisy surrogate in training; mean-centered rounding at inference.

    Inference returns the centered integer symbols (ties away from
    zero); the dequantized value is ``symbols + offset``.
    """
    if mode == "train":
        return t + torch.empty_like(t).uniform_(-0.5, 0.5)
    if mode == "inference":
        centered = t if offset is None else t - offset
        return round_half_away(centered)
    raise ValueError(f"unknown quantize mode {mode!r}")


class FactorizedGaussianPrior(nn.Module):
    """Per-channel Gaussian prior for the hyper-latent."""

    def __init__(self, channels):
        super().__init__()
        self.mean = nn.Parameter(torch.zeros(channels))
        # softplus(0.5413) ~= 1, so scales start near 1.
        self.raw_scale = nn.Parameter(torch.full((channels,), 0.5413))

    def scales(self):
        return entropy.SCALE_FLOOR + F.softplus(self.raw_scale)

    def likelihood(self, z):
        mean = self.mean.view(1, -1, 1, 1)
        scale = self.scales().view(1, -1, 1, 1)
        return entropy.gaussian_likelihood(z, mean, scale)


@dataclass
class CompressResult:
    bitstream: Bitstream
    x_hat: np.ndarray
    estimated_bits: float
    actual_payload_bits: int

    @property
    def bpp(self):
        return 8.0 * len(self.bitstream) / (self.bitstream.height * self.bitstream.width)


class CodecModel(nn.Module):

    def __init__(self, cfg: CodecConfig, fusion="A+M", use_ig=True):
        super().__init__()
        if fusion not in FUSION_KINDS:
            raise ValueError(f"unknown fusion kind {fusion!r}")
        self.cfg = cfg
        self.fusion = fusion
        self.use_ig = use_ig
        n, m = cfg.channels_n, cfg.channels_m
        self.analysis = AnalysisTransform(n)
        self.synthesis = SynthesisTransform(n)
        self.hyper_analysis = HyperAnalysis(n, m)
        self.hyper_synthesis = HyperSynthesis(n, m)
        self.mr = MaskRepresentation(n)
        self.ig = ImportanceGeneration(n)
        self.z_prior = FactorizedGaussianPrior(m)

    # -- latent attention ------------------------------------------------

    def attention_priors(self, f, m):
        l = self.mr(m)
        if self.use_ig:
            i = self.ig(f)
        else:
            i = torch.zeros_like(l)
        return l, i

    def optimized_latent(self, f, y, m):
        """Apply the latent attention path; m=None disables it (s = 1)."""
        if m is None:
            return y
        l, i = self.attention_priors(f, m)
        return fuse_ablation_variant(self.fusion, l, i, y)

    # -- training path ---------------------------------------------------

    def forward(self, x, m=None):
        """Noisy-quantization training pass; returns loss components."""
        f, y = self.analysis(x)
        y_t = self.optimized_latent(f, y, m)
        z = self.hyper_analysis(y_t)
        z_noisy = quantize(z, "train")
        mean, scale = self.hyper_synthesis(z_noisy)
        y_noisy = quantize(y_t, "train")
        bits_y = entropy.likelihood_to_bits(entropy.gaussian_likelihood(y_noisy, mean, scale))
        bits_z = entropy.likelihood_to_bits(self.z_prior.likelihood(z_noisy))
        x_hat = self.synthesis(y_noisy, clamp=False)
        num_pixels = x.shape[0] * x.shape[2] * x.shape[3]
        return {
            "x_hat": x_hat,
            "bpp": (bits_y + bits_z) / num_pixels,
            "bits_y": bits_y,
            "bits_z": bits_z,
        }

    # -- inference path --------------------------------------------------

    def _check_mask(self, m, height, width):
        mh, mw = m.shape[-2:]
        if (mh, mw) != (height // MASK_SCALE, width // MASK_SCALE):
            raise ValueError(
                f"mask dims {(mh, mw)} do not match padded image dims "
                f"{(height, width)} at scale {MASK_SCALE}")

    @torch.no_grad()
    def compress(self, x, m, prompt="Foreground", sigma=0.01, eta=0.85):
        """Encode an image with its ROI mask into a Bitstream container.

        ``x`` is H x W x 3 in [0,1]; ``m`` is the {1, sigma} mask at
        half the padded resolution (values in [0,1]).
        """
        self.eval()
        xt = image_to_tensor(x)
        height, width = xt.shape[-2:]
        if height > 0xFFFF or width > 0xFFFF:
            raise ValueError("image too large for container header")
        xt = pad_to_multiple(xt, self.cfg.input_multiple)
        ph, pw = xt.shape[-2:]
        mt = torch.as_tensor(np.asarray(m, dtype=np.float32))
        if mt.ndim == 2:
            mt = mt[None, None]
        self._check_mask(mt, ph, pw)

        f, y = self.analysis(xt)
        y_t = self.optimized_latent(f, y, mt)
        z = self.hyper_analysis(y_t)

        z_mean = self.z_prior.mean.view(1, -1, 1, 1)
        z_sym = quantize(z, "inference", z_mean)
        z_hat = z_sym + z_mean
        mean, scale = self.hyper_synthesis(z_hat)
        y_sym = quantize(y_t, "inference", mean)
        y_hat = y_sym + mean

        z_sym_np = z_sym.numpy().astype(np.int32).ravel()
        z_scales = self.z_prior.scales().numpy()
        z_tables = entropy.channel_tables(z_scales)
        z_idx = np.repeat(np.arange(len(z_scales)), z.shape[-2] * z.shape[-1])
        z_payload = coder.encode_symbols(
            z_sym_np, z_idx, z_tables.cdfs, z_tables.cdf_sizes, z_tables.offsets)

        scale_np = scale.numpy().ravel()
        y_sym_np = y_sym.numpy().astype(np.int32).ravel()
        y_tables = entropy.gaussian_tables()
        y_idx = entropy.scale_indexes(scale_np)
        y_payload = coder.encode_symbols(
            y_sym_np, y_idx, y_tables.cdfs, y_tables.cdf_sizes, y_tables.offsets)

        est_bits = (entropy.estimate_symbol_bits(
                        z_sym_np, np.repeat(z_scales, z.shape[-2] * z.shape[-1]))
                    + entropy.estimate_symbol_bits(y_sym_np, scale_np)
                    + 2 * STREAM_OVERHEAD_BITS)

        x_hat = self.synthesis(y_hat)[..., :height, :width]
        stream = Bitstream(
            config_id=self.cfg.config_id, lambda_index=self.cfg.lambda_index,
            height=height, width=width, prompt=prompt, sigma=float(sigma),
            eta=float(eta), z_payload=z_payload, y_payload=y_payload)
        return CompressResult(
            bitstream=stream, x_hat=tensor_to_image(x_hat),
            estimated_bits=est_bits,
            actual_payload_bits=8 * (len(z_payload) + len(y_payload)))

    @torch.no_grad()
    def decompress(self, stream):
        """Reconstruct an image from a Bitstream container (mask-free)."""
        self.eval()
        if stream.config_id != self.cfg.config_id:
            raise BitstreamError(
                f"bitstream config id {stream.config_id} does not match model "
                f"config id {self.cfg.config_id}")
        if stream.lambda_index != self.cfg.lambda_index:
            raise BitstreamError(
                f"bitstream lambda index {stream.lambda_index} does not match "
                f"model lambda index {self.cfg.lambda_index}")
        ph = math.ceil(stream.height / self.cfg.input_multiple) * self.cfg.input_multiple
        pw = math.ceil(stream.width / self.cfg.input_multiple) * self.cfg.input_multiple
        zh, zw = ph // HYPER_STRIDE, pw // HYPER_STRIDE
        yh, yw = ph // ENCODER_STRIDE, pw // ENCODER_STRIDE
        cm, cn = self.cfg.channels_m, self.cfg.channels_n

        z_scales = self.z_prior.scales().numpy()
        z_tables = entropy.channel_tables(z_scales)
        z_idx = np.repeat(np.arange(len(z_scales)), zh * zw)
        z_sym = coder.decode_symbols(
            stream.z_payload, cm * zh * zw, z_idx,
            z_tables.cdfs, z_tables.cdf_sizes, z_tables.offsets)
        z_hat = (torch.from_numpy(z_sym.astype(np.float32)).view(1, cm, zh, zw)
                 + self.z_prior.mean.view(1, -1, 1, 1))

        mean, scale = self.hyper_synthesis(z_hat)
        y_tables = entropy.gaussian_tables()
        y_idx = entropy.scale_indexes(scale.numpy().ravel())
        y_sym = coder.decode_symbols(
            stream.y_payload, cn * yh * yw, y_idx,
            y_tables.cdfs, y_tables.cdf_sizes, y_tables.offsets)
        y_hat = torch.from_numpy(y_sym.astype(np.float32)).view(1, cn, yh, yw) + mean
        x_hat = self.synthesis(y_hat)[..., :stream.height, :stream.width]
        return tensor_to_image(x_hat)


def save_checkpoint(model, path, extra=None):
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config_id": model.cfg.config_id,
        "lambda_index": model.cfg.lambda_index,
        "fusion": model.fusion,
        "use_ig": model.use_ig,
        "state_dict": model.state_dict(),
        "extra": extra or {},
    }
    torch.save(payload, path)


def load_checkpoint(path):
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a codec checkpoint")
    cfg = CodecConfig.from_config_id(payload["config_id"], payload["lambda_index"])
    model = CodecModel(cfg, fusion=payload["fusion"], use_ig=payload["use_ig"])
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
