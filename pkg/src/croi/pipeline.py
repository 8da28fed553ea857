"""End-to-end glue: image + prompt -> mask -> bitstream -> reconstruction.

The CLI and the HTTP service both run through :class:`RoiCodec`, so the
two surfaces produce byte-identical containers for identical inputs.
"""

from dataclasses import dataclass

import numpy as np

from .bitstream import Bitstream
from .config import MASK_SCALE
from .metrics import EmptyRoiError, psnr, roi_psnr
from .model import image_to_tensor, tensor_to_image
from .tma import (BinarizationConfig, DEFAULT_ETA, DEFAULT_PROMPT, DEFAULT_SIGMA,
                  adjustable_binarization, roi_pixel_fraction, similarity_generation)
from .transforms import pad_to_multiple


def pad_image(x, multiple):
    """Reflect-pad an H x W x 3 array on the bottom/right to the multiple."""
    t = pad_to_multiple(image_to_tensor(x), multiple)
    return tensor_to_image(t)


@dataclass
class MaskResult:
    similarity: np.ndarray
    mask: np.ndarray
    prompt: str
    eta: float
    sigma: float

    @property
    def roi_fraction(self):
        return roi_pixel_fraction(self.mask)


@dataclass
class CompressionOutcome:
    bitstream: Bitstream
    x_hat: np.ndarray
    mask: np.ndarray
    bpp: float
    psnr: float
    roi_psnr: float | None
    estimated_bits: float
    actual_payload_bits: int


class RoiCodec:
    def __init__(self, model, backend):
        self.model = model
        self.backend = backend

    def make_mask(self, x, prompt=DEFAULT_PROMPT, eta=DEFAULT_ETA,
                  sigma=DEFAULT_SIGMA):
        """Similarity + binarization on the padded image grid."""
        xp = pad_image(x, self.model.cfg.input_multiple)
        p = similarity_generation(xp, prompt, self.backend)
        m = adjustable_binarization(p, BinarizationConfig(eta=eta, sigma=sigma))
        return MaskResult(similarity=p, mask=m, prompt=prompt, eta=eta, sigma=sigma)

    def compress_image(self, x, prompt=DEFAULT_PROMPT, sigma=DEFAULT_SIGMA,
                       eta=DEFAULT_ETA):
        mask_result = self.make_mask(x, prompt, eta, sigma)
        res = self.model.compress(x, mask_result.mask, prompt=prompt,
                                  sigma=sigma, eta=eta)
        roi = _roi_indicator(mask_result.mask, x.shape[:2])
        try:
            roi_db = roi_psnr(x, res.x_hat, roi) if roi.any() else None
        except EmptyRoiError:
            roi_db = None
        return CompressionOutcome(
            bitstream=res.bitstream, x_hat=res.x_hat, mask=mask_result.mask,
            bpp=res.bpp, psnr=psnr(x, res.x_hat), roi_psnr=roi_db,
            estimated_bits=res.estimated_bits,
            actual_payload_bits=res.actual_payload_bits)

    def decompress(self, stream):
        if isinstance(stream, (bytes, bytearray)):
            stream = Bitstream.from_bytes(stream)
        return self.model.decompress(stream)


def _roi_indicator(mask, image_hw):
    """Nearest-neighbor upsample of the ROI indicator to full resolution."""
    roi = np.asarray(mask) == 1.0
    up = np.repeat(np.repeat(roi, MASK_SCALE, axis=0), MASK_SCALE, axis=1)
    return up[: image_hw[0], : image_hw[1]]
