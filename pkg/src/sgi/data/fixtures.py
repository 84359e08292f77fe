"""Synthetic fixture scenes for tests and the overfit training profile.

Scenes are simple piecewise-flat street layouts: sky / building / vegetation /
sidewalk / road bands with rectangular cars and pedestrians carrying instance
IDs. Deterministic given the seed, written in the standard on-disk layout.
"""

from __future__ import annotations

import numpy as np

from .scenes import Scene, save_scene

# class IDs of the fixture profile
SKY, ROAD, BUILDING, VEGETATION, SIDEWALK, PEDESTRIAN, CAR, MISC = range(8)

# Muted palette: classes stay distinguishable, but movable objects sit close
# in color to the surfaces they occlude (car vs road, pedestrian vs sidewalk)
# so reconstruction quality is dominated by learnable structure rather than
# by the exact silhouettes of fully hidden objects.
CLASS_COLORS = np.array([
    [0.62, 0.76, 0.86],  # sky
    [0.45, 0.45, 0.47],  # road
    [0.58, 0.55, 0.45],  # building
    [0.30, 0.50, 0.30],  # vegetation
    [0.66, 0.66, 0.66],  # sidewalk
    [0.72, 0.62, 0.56],  # pedestrian
    [0.40, 0.44, 0.55],  # car
    [0.80, 0.75, 0.45],  # misc
], dtype=np.float32)


def make_fixture_scene(scene_id: str, seed: int, height: int = 256, width: int = 512,
                       split: str = "train") -> Scene:
    rng = np.random.default_rng(seed)
    label = np.zeros((height, width), dtype=np.int32)
    inst = np.zeros((height, width), dtype=np.int32)

    sky_h = int(rng.integers(height // 5, height // 3))
    building_h = int(rng.integers(height // 5, height // 3))
    sidewalk_h = height // 8
    label[:sky_h] = SKY
    label[sky_h:sky_h + building_h] = BUILDING
    veg_top = sky_h + building_h
    veg_h = height // 10
    label[veg_top:veg_top + veg_h] = VEGETATION
    walk_top = veg_top + veg_h
    label[walk_top:walk_top + sidewalk_h] = SIDEWALK
    label[walk_top + sidewalk_h:] = ROAD

    road_top = walk_top + sidewalk_h
    next_id = 1
    for _ in range(int(rng.integers(2, 4))):  # cars
        w, h = int(rng.integers(56, 96)), int(rng.integers(32, 56))
        x = int(rng.integers(0, width - w))
        y = int(rng.integers(road_top, max(road_top + 1, height - h)))
        h = min(h, height - y)
        label[y:y + h, x:x + w] = CAR
        inst[y:y + h, x:x + w] = next_id
        next_id += 1
    for _ in range(int(rng.integers(1, 3))):  # pedestrians
        w, h = int(rng.integers(18, 30)), int(rng.integers(48, 72))
        x = int(rng.integers(0, width - w))
        y = walk_top + sidewalk_h - h + int(rng.integers(-4, 5))
        y = max(0, min(y, height - h))
        label[y:y + h, x:x + w] = PEDESTRIAN
        inst[y:y + h, x:x + w] = next_id
        next_id += 1

    image = CLASS_COLORS[label].copy()
    # small deterministic per-scene tint so scenes are distinguishable
    image = np.clip(image + rng.uniform(-0.03, 0.03, size=(1, 1, 3)).astype(np.float32), 0, 1)
    return Scene(image.astype(np.float32), label, inst, id=scene_id, split=split)


def make_fixture_dataset(root, n_train: int = 8, n_val: int = 2, seed: int = 0) -> list:
    """Write a fixture dataset under `root`; returns the scene IDs written."""
    ids = []
    for i in range(n_train + n_val):
        split = "train" if i < n_train else "val"
        scene_id = f"fixture_{i:03d}"
        scene = make_fixture_scene(scene_id, seed=seed * 10007 + i, split=split)
        save_scene(scene, root)
        ids.append(scene_id)
    return ids
