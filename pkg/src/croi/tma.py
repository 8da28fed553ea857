"""Text-controlled mask acquisition.

A similarity backend maps (image, prompt) to a per-pixel similarity map
at half the image resolution; adjustable binarization then splits it
into ROI (value 1) and non-ROI (value sigma).  Three backends are
provided: a pretrained vision-language model, ground-truth injection
(the similarity map is replaced by a registered segmentation mask), and
deterministic synthetic rules for tests.
"""

import hashlib
import struct
import threading
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .config import MASK_SCALE

DEFAULT_PROMPT = "Foreground"
DEFAULT_SIGMA = 0.01
DEFAULT_ETA = 0.85

FOREGROUND_PROMPT = "foreground"
BACKGROUND_PROMPT = "background"

CRIM_MAGIC = b"CRIM"
_CRIM_DTYPES = {0: np.float32, 1: np.float64}


class BackendUnavailableError(RuntimeError):
    """The requested similarity backend cannot serve (e.g. weights missing)."""


@dataclass(frozen=True)
class BinarizationConfig:
    eta: float = DEFAULT_ETA
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if not 0 <= self.sigma <= 1:
            raise ValueError("sigma must lie in [0, 1]")


def _check_even(x):
    h, w = x.shape[:2]
    if h % MASK_SCALE or w % MASK_SCALE:
        raise ValueError(f"image dims ({h}, {w}) must be divisible by {MASK_SCALE}")
    return h // MASK_SCALE, w // MASK_SCALE


def _image_digest(x):
    return hashlib.sha256(np.ascontiguousarray(
        np.asarray(x, dtype=np.float32)).tobytes()).hexdigest()


def nearest_resize(mask, shape):
    """Nearest-neighbor resample of a 2D array to (h, w); keeps binary maps binary."""
    mask = np.asarray(mask)
    h, w = shape
    rows = (np.arange(h) * mask.shape[0] // h).clip(0, mask.shape[0] - 1)
    cols = (np.arange(w) * mask.shape[1] // w).clip(0, mask.shape[1] - 1)
    return mask[np.ix_(rows, cols)]


class SyntheticBackend:
    """Deterministic similarity rules so the pipeline runs with no weights.

    ``brightness``: similarity equals the mean luminance of each 2x2
    block.  ``hue-band``: 1 where the dominant channel named by the
    prompt ("red"/"green"/"blue") wins, else 0.
    """

    kind = "synthetic-test"

    def __init__(self, rule="brightness"):
        if rule not in ("brightness", "hue-band"):
            raise ValueError(f"unknown synthetic rule {rule!r}")
        self.rule = rule

    def similarity(self, x, prompt):
        prompt_l = prompt.strip().lower()
        shape = _check_even(np.asarray(x))
        if prompt_l == FOREGROUND_PROMPT:
            return np.ones(shape, dtype=np.float64)
        if prompt_l == BACKGROUND_PROMPT:
            return np.zeros(shape, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        pooled = x.reshape(shape[0], MASK_SCALE, shape[1], MASK_SCALE, 3).mean(axis=(1, 3))
        if self.rule == "brightness":
            return pooled.mean(axis=2)
        channel = {"red": 0, "green": 1, "blue": 2}.get(prompt_l)
        if channel is None:
            return np.zeros(shape, dtype=np.float64)
        return (pooled.argmax(axis=2) == channel).astype(np.float64)


class GroundTruthBackend:
    """Similarity replaced by a registered GT segmentation for the image."""

    kind = "ground-truth-injection"

    def __init__(self):
        self._registry = {}
        self._lock = threading.Lock()

    def register(self, x, mask, prompt=None):
        mask = np.asarray(mask)
        if mask.ndim != 2:
            raise ValueError("GT mask must be 2D")
        key = (_image_digest(x), prompt.strip().lower() if prompt else None)
        with self._lock:
            self._registry[key] = (mask > 0).astype(np.float64)

    def similarity(self, x, prompt):
        prompt_l = prompt.strip().lower()
        shape = _check_even(np.asarray(x))
        if prompt_l == FOREGROUND_PROMPT:
            return np.ones(shape, dtype=np.float64)
        if prompt_l == BACKGROUND_PROMPT:
            return np.zeros(shape, dtype=np.float64)
        digest = _image_digest(x)
        mask = self._registry.get((digest, prompt_l))
        if mask is None:
            mask = self._registry.get((digest, None))
        if mask is None:
            raise BackendUnavailableError(
                f"no ground-truth mask registered for this image (prompt {prompt!r})")
        return nearest_resize(mask, shape)


class PretrainedBackend:
    """CLIP-style vision-language similarity; weights loaded lazily.

    Cosine similarity between per-patch image embeddings and the prompt
    embedding, rescaled from [-1, 1] to [0, 1] and bilinearly upsampled
    to half the image resolution.
    """

    kind = "pretrained-vision-language"

    def __init__(self, model_name="openai/clip-vit-base-patch16"):
        self.model_name = model_name
        self._model = None
        self._processor = None

    def _load(self):
        if self._model is not None:
            return
        try:
            from transformers import CLIPModel, CLIPProcessor
            self._model = CLIPModel.from_pretrained(self.model_name)
            self._processor = CLIPProcessor.from_pretrained(self.model_name)
            self._model.eval()
        except Exception as exc:
            raise BackendUnavailableError(
                f"cannot load pretrained weights {self.model_name!r}: {exc}") from exc

    @torch.no_grad()
    def similarity(self, x, prompt):
        shape = _check_even(np.asarray(x))
        self._load()
        img = Image.fromarray((np.asarray(x) * 255).astype(np.uint8))
        inputs = self._processor(text=[prompt], images=[img], return_tensors="pt",
                                 padding=True)
        vision = self._model.vision_model(pixel_values=inputs["pixel_values"])
        patches = vision.last_hidden_state[:, 1:, :]  # drop CLS token
        patches = self._model.visual_projection(patches)
        text = self._model.get_text_features(
            input_ids=inputs["input_ids"], attention_mask=inputs["attention_mask"])
        patches = F.normalize(patches, dim=-1)
        text = F.normalize(text, dim=-1)
        cos = (patches @ text.T)[0, :, 0]
        side = int(round(cos.numel() ** 0.5))
        grid = cos.view(1, 1, side, side)
        p = F.interpolate(grid, size=shape, mode="bilinear", align_corners=False)
        return ((p[0, 0].numpy() + 1.0) / 2.0).clip(0.0, 1.0)


def similarity_generation(x, prompt, backend):
    """Similarity map in [0, 1] at half resolution for a text prompt."""
    if not prompt or not prompt.strip():
        raise ValueError("prompt must be non-empty")
    p = np.asarray(backend.similarity(x, prompt), dtype=np.float64)
    expected = _check_even(np.asarray(x))
    if p.shape != expected:
        raise ValueError(f"backend returned {p.shape}, expected {expected}")
    if p.min() < 0 or p.max() > 1:
        raise ValueError("similarity values must lie in [0, 1]")
    return p


def adjustable_binarization(p, cfg):
    """ROI mask: 1 where eta < p <= 1, sigma elsewhere (p = eta goes to sigma)."""
    p = np.asarray(p, dtype=np.float64)
    return np.where(p > cfg.eta, 1.0, cfg.sigma)


def multi_prompt_similarity(x, prompts, backend):
    """Pixel-wise max over per-prompt similarity maps (multi-ROI extension)."""
    maps = [similarity_generation(x, t, backend) for t in prompts]
    return np.maximum.reduce(maps)


def upsample_mask(m, target_hw):
    """U(.): repeat the mask to 3 channels, then bilinear-upsample to H x W."""
    m = np.asarray(m, dtype=np.float32)
    h, w = target_hw
    if (m.shape[0] * MASK_SCALE, m.shape[1] * MASK_SCALE) != (h, w):
        raise ValueError(
            f"target dims {(h, w)} must be {MASK_SCALE}x the mask dims {m.shape}")
    t = torch.from_numpy(m)[None, None].expand(1, 3, -1, -1)
    up = F.interpolate(t, size=(h, w), mode="bilinear", align_corners=False)
    return up[0].numpy().transpose(1, 2, 0)


def mask_iou(m, gt, full_resolution=False):
    """IoU between the ROI indicator (m == 1) and a binary GT mask.

    GT is nearest-resampled to the mask's grid (or the mask indicator
    upsampled to GT's grid when ``full_resolution``).  Two empty sets
    have IoU 1.
    """
    roi = np.asarray(m) == 1.0
    gt = np.asarray(gt) > 0
    if full_resolution:
        roi = nearest_resize(roi, gt.shape)
    elif gt.shape != roi.shape:
        gt = nearest_resize(gt, roi.shape)
    union = np.logical_or(roi, gt).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(roi, gt).sum() / union)


def roi_pixel_fraction(m):
    m = np.asarray(m)
    return float((m == 1.0).mean())


# -- mask file formats ---------------------------------------------------

def save_mask_png(path, m):
    arr = np.clip(np.asarray(m, dtype=np.float64), 0.0, 1.0)
    Image.fromarray(np.round(arr * 255).astype(np.uint8), mode="L").save(path)


def load_mask_png(path):
    return np.asarray(Image.open(path).convert("L"), dtype=np.float64) / 255.0


def save_mask_array(path, m):
    """Lossless float container: 16-byte header (magic, dims, dtype) + raw data."""
    m = np.asarray(m)
    code = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}.get(m.dtype)
    if code is None:
        m = m.astype(np.float64)
        code = 1
    header = struct.pack(">4sIIB3x", CRIM_MAGIC, m.shape[0], m.shape[1], code)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(m).tobytes())


def load_mask_array(path):
    with open(path, "rb") as fh:
        header = fh.read(16)
        magic, h, w, code = struct.unpack(">4sIIB3x", header)
        if magic != CRIM_MAGIC:
            raise ValueError(f"{path} is not a mask array file")
        dtype = _CRIM_DTYPES[code]
        data = np.frombuffer(fh.read(), dtype=dtype)
    return data.reshape(h, w).copy()
