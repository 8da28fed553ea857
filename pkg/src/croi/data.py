"""Dataset preparation.

Stage 1 trains on random crops of unlabeled images; stages 2-3 and
evaluation use a COCO-style annotated manifest (polygon or RLE
segmentations) rasterized to per-category binary masks.  A synthetic
shape dataset generator is bundled so the whole pipeline runs without
any external download.
"""

import json
import warnings
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp"}
ANNOTATED_SIZE = 256


class ManifestError(ValueError):
    """COCO-style manifest violates the expected schema."""


class UnlabeledDataset:
    """Seeded random-crop pipeline over a directory of images."""

    def __init__(self, root, crop=256, seed=0):
        self.root = Path(root)
        self.crop = crop
        self.seed = seed
        self.skipped = 0
        paths = sorted(p for p in self.root.iterdir()
                       if p.suffix.lower() in IMAGE_EXTENSIONS)
        self.paths = []
        for p in paths:
            try:
                with Image.open(p) as img:
                    img.verify()
                self.paths.append(p)
            except Exception:
                self.skipped += 1
                warnings.warn(f"skipping undecodable image {p}")
        if not self.paths:
            raise ValueError(f"no decodable images under {self.root}")
        self._rng = np.random.default_rng(seed)
        self._cache = {}

    def _prepared(self, path):
        """Image with both dims >= crop; small images bicubic-upscaled."""
        if path not in self._cache:
            with Image.open(path) as img:
                img = img.convert("RGB")
                h, w = img.height, img.width
                if min(h, w) < self.crop:
                    scale = self.crop / min(h, w)
                    img = img.resize(
                        (int(round(w * scale)), int(round(h * scale))),
                        Image.BICUBIC)
                    if min(img.height, img.width) < self.crop:
                        img = img.resize((max(img.width, self.crop),
                                          max(img.height, self.crop)), Image.BICUBIC)
                self._cache[path] = np.asarray(img, dtype=np.float64) / 255.0
        return self._cache[path]

    def sample(self):
        """One crop x crop x 3 patch in [0, 1]; deterministic under the seed."""
        path = self.paths[self._rng.integers(len(self.paths))]
        img = self._prepared(path)
        h, w = img.shape[:2]
        top = int(self._rng.integers(h - self.crop + 1))
        left = int(self._rng.integers(w - self.crop + 1))
        patch = img[top:top + self.crop, left:left + self.crop]
        if self._rng.random() < 0.5:
            patch = patch[:, ::-1]
        return np.ascontiguousarray(patch)

    def sample_batch(self, n):
        return np.stack([self.sample() for _ in range(n)])


def _rasterize_polygon(poly, height, width):
    img = Image.new("L", (width, height), 0)
    ImageDraw.Draw(img).polygon([tuple(pt) for pt in np.asarray(poly).reshape(-1, 2)],
                                outline=1, fill=1)
    return np.asarray(img, dtype=bool)


def _decode_rle(rle):
    """Uncompressed COCO RLE: column-major runs alternating 0/1."""
    h, w = rle["size"]
    counts = rle["counts"]
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        flat[pos:pos + run] = value
        pos += run
        value = not value
    return flat.reshape(w, h).T


def rasterize_segmentation(segmentation, height, width):
    """Binary mask from a COCO segmentation (polygon list or RLE dict)."""
    if isinstance(segmentation, dict):
        return _decode_rle(segmentation)
    mask = np.zeros((height, width), dtype=bool)
    for poly in segmentation:
        if len(poly) < 6:
            continue
        mask |= _rasterize_polygon(poly, height, width)
    return mask


def _resize_mask_nearest(mask, size):
    rows = (np.arange(size) * mask.shape[0] // size).clip(0, mask.shape[0] - 1)
    cols = (np.arange(size) * mask.shape[1] // size).clip(0, mask.shape[1] - 1)
    return mask[np.ix_(rows, cols)]


class AnnotatedRecord:
    def __init__(self, image_id, image, masks):
        self.image_id = image_id
        self.image = image          # ANNOTATED_SIZE^2 x 3 in [0,1]
        self.masks = masks          # category name -> binary mask, same dims

    @property
    def categories(self):
        return sorted(self.masks)


class AnnotatedDataset:
    """COCO-style manifest -> per-category binary masks at 256 x 256."""

    def __init__(self, manifest_path, size=ANNOTATED_SIZE):
        manifest_path = Path(manifest_path)
        root = manifest_path.parent
        try:
            manifest = json.loads(manifest_path.read_text())
            images = {img["id"]: img for img in manifest["images"]}
            categories = {c["id"]: c["name"] for c in manifest["categories"]}
            annotations = manifest["annotations"]
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ManifestError(f"bad manifest {manifest_path}: {exc}") from exc
        self.size = size
        self.records = []
        by_image = {}
        for ann in annotations:
            try:
                img = images[ann["image_id"]]
                cat = categories[ann["category_id"]]
                seg = ann["segmentation"]
            except KeyError as exc:
                raise ManifestError(
                    f"annotation {ann.get('id')} references missing {exc}") from exc
            mask = rasterize_segmentation(seg, img["height"], img["width"])
            if not mask.any():
                continue  # degenerate zero-area annotation
            by_image.setdefault(ann["image_id"], {}).setdefault(cat, []).append(mask)
        for image_id, img in sorted(images.items()):
            path = root / img["file_name"]
            with Image.open(path) as im:
                resized = np.asarray(
                    im.convert("RGB").resize((size, size), Image.BILINEAR),
                    dtype=np.float64) / 255.0
            masks = {}
            for cat, instances in by_image.get(image_id, {}).items():
                union = np.logical_or.reduce(instances)
                masks[cat] = _resize_mask_nearest(union, size)
            self.records.append(AnnotatedRecord(image_id, resized, masks))

    def __len__(self):
        return len(self.records)

    def __getitem__(self, idx):
        return self.records[idx]


# -- bundled synthetic annotated set ------------------------------------

SYNTHETIC_CATEGORIES = ("circle", "square", "triangle")


def _shape_polygon(kind, cx, cy, r, rng):
    if kind == "circle":
        angles = np.linspace(0, 2 * np.pi, 24, endpoint=False)
        return np.stack([cx + r * np.cos(angles), cy + r * np.sin(angles)], axis=1)
    if kind == "square":
        return np.array([[cx - r, cy - r], [cx + r, cy - r],
                         [cx + r, cy + r], [cx - r, cy + r]], dtype=np.float64)
    angles = np.pi / 2 + np.array([0, 2 * np.pi / 3, 4 * np.pi / 3]) + rng.uniform(0, 2 * np.pi)
    return np.stack([cx + r * np.cos(angles), cy + r * np.sin(angles)], axis=1)


def make_synthetic_dataset(root, n_images=50, size=256, seed=0):
    """Write n shape images plus a COCO-style manifest; returns the manifest path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    images, annotations = [], []
    ann_id = 1
    cat_ids = {name: i + 1 for i, name in enumerate(SYNTHETIC_CATEGORIES)}
    for image_id in range(1, n_images + 1):
        # Gradient background carrying real texture, so background fidelity
        # actually costs bits (a flat background would survive any rate cut).
        yy, xx = np.mgrid[0:size, 0:size] / size
        base = rng.uniform(0.1, 0.5, 3)
        tilt = rng.uniform(-0.25, 0.25, (2, 3))
        img = base + yy[..., None] * tilt[0] + xx[..., None] * tilt[1]
        freq = rng.uniform(8.0, 24.0, 2)
        phase = rng.uniform(0, 2 * np.pi, 2)
        tex = np.sin(2 * np.pi * freq[0] * yy + phase[0]) \
            * np.cos(2 * np.pi * freq[1] * xx + phase[1])
        img += 0.08 * tex[..., None]
        img += rng.normal(0, 0.05, img.shape)
        pil = Image.fromarray((np.clip(img, 0, 1) * 255).astype(np.uint8))
        draw = ImageDraw.Draw(pil)
        for kind in rng.permutation(SYNTHETIC_CATEGORIES)[: rng.integers(1, 4)]:
            r = rng.uniform(0.1, 0.22) * size
            cx = rng.uniform(r, size - r)
            cy = rng.uniform(r, size - r)
            poly = _shape_polygon(kind, cx, cy, r, rng)
            color = tuple(int(c) for c in rng.integers(120, 256, 3))
            draw.polygon([tuple(pt) for pt in poly], fill=color)
            annotations.append({
                "id": ann_id, "image_id": image_id, "category_id": cat_ids[kind],
                "segmentation": [poly.ravel().tolist()],
            })
            ann_id += 1
        name = f"synthetic_{image_id:03d}.png"
        pil.save(root / name)
        images.append({"id": image_id, "file_name": name,
                       "height": size, "width": size})
    manifest = {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": i, "name": n} for n, i in cat_ids.items()],
    }
    path = root / "instances.json"
    path.write_text(json.dumps(manifest))
    return path
