"""Evaluation mask sampling, mask application and the reproducibility manifest.

The keep-mask convention is fixed throughout the package: m is 1 where the
original pixel is retained and 0 inside the hole, so the blanked inputs are
elementwise products with m.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .data.scenes import InstanceRecord, Scene, one_hot
from .errors import InstanceNotFoundError, ManifestError, RectOutOfBoundsError

IMAGE_SIZE = 256
MIN_MASK = 32
MAX_MASK = 128
CANONICAL_SIZE = 64
MANIFEST_HEADER = "# sgi-mask-manifest v1"


@dataclass
class MaskRect:
    x: int
    y: int
    w: int
    h: int
    mode: str  # "restore" | "place"
    target_instance: Optional[int] = None
    seed: int = 0
    id: str = ""

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px <= self.x + self.w - 1 and self.y <= py <= self.y + self.h - 1


@dataclass
class MaskedScene:
    x_blanked: np.ndarray  # 256 x 256 x 3
    s_blanked: np.ndarray  # 256 x 256 x C one-hot, zeroed in the hole
    m: np.ndarray          # 256 x 256 x 1 keep-mask


@dataclass
class InstanceSpec:
    c: np.ndarray      # one-hot, length 2 (car, pedestrian)
    m_s: np.ndarray    # 64 x 64 binary canonical shape
    theta: np.ndarray  # 2 x 3 affine: canonical pixel coords -> image coords
    l: np.ndarray      # (cx, cy, w, h) normalized to [0, 1]

    def flat_encoder_input(self) -> np.ndarray:
        """Concatenated encoder input of length 64*64 + 2 + 6 = 4104."""
        return np.concatenate([
            self.m_s.reshape(-1).astype(np.float32),
            self.c.astype(np.float32),
            self.theta.reshape(-1).astype(np.float32),
        ])


def _sample_size(rng) -> tuple:
    w = int(rng.integers(MIN_MASK, MAX_MASK + 1))
    h = int(rng.integers(MIN_MASK, MAX_MASK + 1))
    return w, h


def sample_restore_mask(rng, size: int = IMAGE_SIZE) -> MaskRect:
    """Rectangle with w, h independently uniform in [32, 128], placed uniformly
    inside the image."""
    w, h = _sample_size(rng)
    x = int(rng.integers(0, size - w + 1))
    y = int(rng.integers(0, size - h + 1))
    return MaskRect(x, y, w, h, mode="restore")


def sample_place_mask(rng, instances: list, size: int = IMAGE_SIZE) -> MaskRect:
    """Same size distribution as restore, positioned so a uniformly chosen
    instance's bbox center lies inside the rect (clamped to image bounds).
    Falls back to restore sampling when no valid instance exists."""
    if not instances:
        rect = sample_restore_mask(rng, size)
        rect.mode = "place"
        return rect
    record: InstanceRecord = instances[int(rng.integers(0, len(instances)))]
    bx, by, bw, bh = record.bbox
    cx, cy = bx + bw / 2, by + bh / 2
    w, h = _sample_size(rng)
    x_lo = max(0, int(np.ceil(cx)) - w + 1)
    x_hi = min(size - w, int(np.floor(cx)))
    y_lo = max(0, int(np.ceil(cy)) - h + 1)
    y_hi = min(size - h, int(np.floor(cy)))
    x = int(rng.integers(x_lo, max(x_lo, x_hi) + 1))
    y = int(rng.integers(y_lo, max(y_lo, y_hi) + 1))
    return MaskRect(x, y, w, h, mode="place", target_instance=record.instance_id)


def keep_mask(rect: MaskRect, size: int = IMAGE_SIZE) -> np.ndarray:
    if rect.x < 0 or rect.y < 0 or rect.x + rect.w > size or rect.y + rect.h > size:
        raise RectOutOfBoundsError(f"rect {rect} outside {size}x{size}")
    m = np.ones((size, size, 1), dtype=np.float32)
    m[rect.y:rect.y + rect.h, rect.x:rect.x + rect.w] = 0.0
    return m


def apply_mask(scene: Scene, rect: MaskRect, num_classes: int) -> MaskedScene:
    """Blank the rect region out of the image and one-hot segmentation."""
    m = keep_mask(rect, scene.height)
    x_blanked = scene.image * m
    s_blanked = one_hot(scene.label_map, num_classes) * m
    return MaskedScene(x_blanked, s_blanked, m)


def bbox_affine(bbox: tuple, canonical: int = CANONICAL_SIZE) -> np.ndarray:
    """Affine 2x3 matrix taking canonical-frame pixel coords onto the bbox."""
    x, y, w, h = bbox
    return np.array([[w / canonical, 0.0, float(x)],
                     [0.0, h / canonical, float(y)]], dtype=np.float32)


def extract_instance_spec(scene: Scene, record: InstanceRecord,
                          canonical: int = CANONICAL_SIZE) -> InstanceSpec:
    """Canonical 64x64 silhouette, its placement affine and normalized location."""
    if not np.any(scene.instance_map == record.instance_id):
        raise InstanceNotFoundError(f"instance {record.instance_id} not in scene {scene.id}")
    x, y, w, h = record.bbox
    silhouette = (scene.instance_map[y:y + h, x:x + w] == record.instance_id).astype(np.float32)
    # nearest-neighbor resample of the bbox crop onto the canonical frame
    rows = np.minimum((np.arange(canonical) + 0.5) * h / canonical, h - 1).astype(np.int64)
    cols = np.minimum((np.arange(canonical) + 0.5) * w / canonical, w - 1).astype(np.int64)
    m_s = silhouette[rows][:, cols]
    c = np.zeros(2, dtype=np.float32)
    c[0 if record.class_label == "car" else 1] = 1.0
    l = np.array([(x + w / 2) / scene.width, (y + h / 2) / scene.height,
                  w / scene.width, h / scene.height], dtype=np.float32)
    return InstanceSpec(c=c, m_s=m_s, theta=bbox_affine(record.bbox, canonical), l=l)


def write_manifest(entries: list, path) -> None:
    lines = [MANIFEST_HEADER]
    for e in entries:
        target = "-" if e.target_instance is None else str(e.target_instance)
        lines.append(f"{e.id} {e.x} {e.y} {e.w} {e.h} {e.mode} {target} {e.seed}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> list:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != MANIFEST_HEADER:
        raise ManifestError(f"missing header {MANIFEST_HEADER!r}", line_number=1)
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(" ")
        if len(fields) != 8:
            raise ManifestError(f"expected 8 fields, got {len(fields)}", line_number=lineno)
        sid, x, y, w, h, mode, target, seed = fields
        try:
            entries.append(MaskRect(
                x=int(x), y=int(y), w=int(w), h=int(h), mode=mode,
                target_instance=None if target == "-" else int(target),
                seed=int(seed), id=sid,
            ))
        except ValueError as exc:
            raise ManifestError(str(exc), line_number=lineno) from exc
    return entries


def mask_to_png(m: np.ndarray, path) -> None:
    """Export a keep-mask as 8-bit PNG (0 = hole, 255 = keep)."""
    Image.fromarray((m[..., 0] * 255).astype(np.uint8)).save(path)


def mask_from_png(path_or_file) -> np.ndarray:
    """Read an 8-bit mask PNG back into a keep-mask (H x W x 1 float, {0, 1})."""
    arr = np.asarray(Image.open(path_or_file).convert("L"), dtype=np.float32)
    return (arr >= 128).astype(np.float32)[..., None]
