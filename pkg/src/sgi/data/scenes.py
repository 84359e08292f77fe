"""Urban-scene dataset ingestion.

On-disk layout (Cityscapes-style, drop-in for real data):

    images/{split}/{id}.png     8-bit RGB
    labels/{split}/{id}.png     8-bit class IDs
    instances/{split}/{id}.png  16-bit instance IDs (0 = no instance)

All operations here are pure functions of their inputs and safe to call from
parallel data-loading workers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import (
    DimensionMismatchError,
    MissingFileError,
    SourceTooSmallError,
    UnmappedCategoryError,
)

CROP_SIZE = 256


@dataclass
class Scene:
    """A registered (image, label map, instance map) triple."""

    image: np.ndarray         # H x W x 3 float32 in [0, 1]
    label_map: np.ndarray     # H x W int32 class IDs
    instance_map: np.ndarray  # H x W int32 instance IDs, 0 = none
    id: str
    split: str = "train"

    @property
    def height(self) -> int:
        return self.image.shape[0]

    @property
    def width(self) -> int:
        return self.image.shape[1]


@dataclass
class ClassAggregation:
    """Total map from raw category IDs to training group IDs."""

    raw_to_group: dict
    num_groups: int

    @classmethod
    def identity(cls, num_classes: int) -> "ClassAggregation":
        return cls({i: i for i in range(num_classes)}, num_classes)

    @classmethod
    def from_file(cls, path) -> "ClassAggregation":
        mapping = {}
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            raw, group = line.split()
            mapping[int(raw)] = int(group)
        return cls(mapping, max(mapping.values()) + 1)

    @classmethod
    def shipped(cls, table_name: str) -> "ClassAggregation":
        ref = resources.files("sgi.data") / "tables" / table_name
        with resources.as_file(ref) as path:
            return cls.from_file(path)


@dataclass
class InstanceRecord:
    instance_id: int
    class_label: str  # "car" | "pedestrian"
    bbox: tuple       # (x, y, w, h) in pixels
    pixel_count: int
    occlusion_flag: bool


def _scene_paths(root, split: str, scene_id: str) -> dict:
    root = Path(root)
    return {
        "image": root / "images" / split / f"{scene_id}.png",
        "label": root / "labels" / split / f"{scene_id}.png",
        "instance": root / "instances" / split / f"{scene_id}.png",
    }


def load_scene(root, split: str, scene_id: str) -> Scene:
    """Load a registered scene; raw label IDs are NOT yet aggregated."""
    paths = _scene_paths(root, split, scene_id)
    for kind, path in paths.items():
        if not path.exists():
            raise MissingFileError(f"{kind} file not found: {path}")
    image = np.asarray(Image.open(paths["image"]).convert("RGB"), dtype=np.float32) / 255.0
    label_map = np.asarray(Image.open(paths["label"]), dtype=np.int32)
    instance_map = np.asarray(Image.open(paths["instance"]), dtype=np.int32)
    if label_map.shape != image.shape[:2] or instance_map.shape != image.shape[:2]:
        raise DimensionMismatchError(
            f"scene {scene_id}: image {image.shape[:2]}, label {label_map.shape}, "
            f"instance {instance_map.shape}"
        )
    return Scene(image, label_map, instance_map, id=scene_id, split=split)


def save_scene(scene: Scene, root) -> None:
    """Write a scene back in the on-disk layout (used by `prepare` and fixtures)."""
    paths = _scene_paths(root, scene.split, scene.id)
    for path in paths.values():
        path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray((np.clip(scene.image, 0, 1) * 255).round().astype(np.uint8)).save(paths["image"])
    Image.fromarray(scene.label_map.astype(np.uint8)).save(paths["label"])
    Image.fromarray(scene.instance_map.astype(np.uint16)).save(paths["instance"])


def aggregate_classes(scene: Scene, agg: ClassAggregation) -> Scene:
    present = np.unique(scene.label_map)
    missing = [int(v) for v in present if int(v) not in agg.raw_to_group]
    if missing:
        raise UnmappedCategoryError(f"raw categories not in aggregation table: {missing}")
    lut = np.zeros(int(present.max()) + 1 if present.size else 1, dtype=np.int32)
    for raw, group in agg.raw_to_group.items():
        if raw < lut.size:
            lut[raw] = group
    return replace(scene, label_map=lut[scene.label_map])


def _resize(scene: Scene, out_h: int, out_w: int) -> Scene:
    if (out_h, out_w) == (scene.height, scene.width):
        return scene
    size = (out_w, out_h)  # PIL uses (W, H)
    img_u8 = (np.clip(scene.image, 0, 1) * 255).round().astype(np.uint8)
    image = np.asarray(Image.fromarray(img_u8).resize(size, Image.BILINEAR), dtype=np.float32) / 255.0
    label = np.asarray(
        Image.fromarray(scene.label_map.astype(np.int32), mode="I").resize(size, Image.NEAREST),
        dtype=np.int32,
    )
    inst = np.asarray(
        Image.fromarray(scene.instance_map.astype(np.int32), mode="I").resize(size, Image.NEAREST),
        dtype=np.int32,
    )
    return replace(scene, image=image, label_map=label, instance_map=inst)


def resize_and_crop(scene: Scene, seed: int, height: int = CROP_SIZE, crop: int = CROP_SIZE,
                    width: int = 0) -> Scene:
    """Aspect-preserving resize to `height` (or fixed `width` x `height`),
    then a seed-deterministic random crop to `crop` x `crop`.

    Image resampling is bilinear; label/instance maps use nearest-neighbor.
    The same crop window is applied to all three maps.
    """
    out_w = width if width else max(1, round(scene.width * height / scene.height))
    resized = _resize(scene, height, out_w)
    if resized.height < crop or resized.width < crop:
        raise SourceTooSmallError(
            f"scene {scene.id}: {resized.height}x{resized.width} after resize, need {crop}x{crop}"
        )
    rng = np.random.default_rng(seed)
    x0 = int(rng.integers(0, resized.width - crop + 1))
    y0 = int(rng.integers(0, resized.height - crop + 1))
    return replace(
        resized,
        image=resized.image[y0:y0 + crop, x0:x0 + crop].copy(),
        label_map=resized.label_map[y0:y0 + crop, x0:x0 + crop].copy(),
        instance_map=resized.instance_map[y0:y0 + crop, x0:x0 + crop].copy(),
    )


def index_instances(scene: Scene, car_class: int, pedestrian_class: int,
                    min_pixels: int = 500, max_occlusion: float = 0.5) -> list:
    """Valid object instances (modelled classes only), sorted by instance ID.

    An instance's class is the majority label over its pixels. An instance is
    occluded when visible pixels / bbox area < (1 - max_occlusion); occluded
    or too-small instances are dropped.
    """
    class_names = {car_class: "car", pedestrian_class: "pedestrian"}
    records = []
    for inst_id in np.unique(scene.instance_map):
        if inst_id == 0:
            continue
        mask = scene.instance_map == inst_id
        pixel_count = int(mask.sum())
        labels, counts = np.unique(scene.label_map[mask], return_counts=True)
        majority = int(labels[np.argmax(counts)])
        if majority not in class_names:
            continue
        ys, xs = np.nonzero(mask)
        x, y = int(xs.min()), int(ys.min())
        w, h = int(xs.max()) - x + 1, int(ys.max()) - y + 1
        occluded = pixel_count / (w * h) < (1.0 - max_occlusion)
        if pixel_count < min_pixels or occluded:
            continue
        records.append(InstanceRecord(int(inst_id), class_names[majority], (x, y, w, h),
                                      pixel_count, occluded))
    records.sort(key=lambda r: r.instance_id)
    return records


def one_hot(label_map: np.ndarray, num_classes: int) -> np.ndarray:
    """H x W int labels -> H x W x C float32 one-hot."""
    if label_map.min() < 0 or label_map.max() >= num_classes:
        raise UnmappedCategoryError(
            f"label values outside [0, {num_classes}): [{label_map.min()}, {label_map.max()}]"
        )
    out = np.zeros(label_map.shape + (num_classes,), dtype=np.float32)
    np.put_along_axis(out, label_map[..., None], 1.0, axis=-1)
    return out


def list_scene_ids(root, split: str) -> list:
    image_dir = Path(root) / "images" / split
    if not image_dir.is_dir():
        return []
    return sorted(p.stem for p in image_dir.glob("*.png"))
