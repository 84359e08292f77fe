"""Model inference for the four interaction modes: restore, place,
precise removal and mask insertion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch

from .errors import SgiError
from .masking import bbox_affine
from .models.inpaint import composite, to_unit_range
from .models.shape_vae import place_shape
from .training import ModelBundle

MODES = ("restore", "place", "precise_removal", "mask_insertion")


@dataclass
class InferenceResult:
    image: np.ndarray   # H x W x 3 in [0, 1], composited
    seg: np.ndarray     # H x W predicted class IDs
    seed: int


def _tensor_image(image: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(image)).permute(2, 0, 1).float()[None]


def sample_location(prior: dict, class_label: str, hole_mask: np.ndarray,
                    rng: np.random.Generator, size: int = 256) -> np.ndarray:
    """Draw a normalized location (cx, cy, w, h) from the empirical training
    prior and truncate its center into the hole region."""
    candidates = prior.get(class_label) or []
    if candidates:
        l = np.array(candidates[int(rng.integers(0, len(candidates)))], dtype=np.float64)
        l[:2] += rng.normal(0.0, 0.02, size=2)  # jitter so repeats differ
    else:
        l = np.array([0.5, 0.6, 0.25, 0.2]) + rng.normal(0.0, 0.05, size=4)
        l[2:] = np.clip(l[2:], 0.1, 0.4)
    ys, xs = np.nonzero(hole_mask[..., 0] < 0.5)
    if len(xs) == 0:
        raise SgiError("place mode requires a non-empty hole")
    cx = np.clip(l[0] * size, xs.min(), xs.max()) / size
    cy = np.clip(l[1] * size, ys.min(), ys.max()) / size
    return np.array([cx, cy, min(l[2], 0.5), min(l[3], 0.5)], dtype=np.float64)


def location_to_bbox(l: np.ndarray, size: int = 256) -> tuple:
    w = max(2.0, l[2] * size)
    h = max(2.0, l[3] * size)
    x = np.clip(l[0] * size - w / 2, 0, size - w)
    y = np.clip(l[1] * size - h / 2, 0, size - h)
    return (float(x), float(y), float(w), float(h))


def generate_instance_channel(bundle: ModelBundle, class_label: str,
                              hole_mask: np.ndarray, seed: int,
                              size: int = 256) -> np.ndarray:
    """Sample a latent and a location, generate a canonical shape and warp it
    into the scene."""
    rng = np.random.default_rng(seed)
    l = sample_location(bundle.location_prior, class_label, hole_mask, rng, size)
    theta = bbox_affine(location_to_bbox(l, size), bundle.shape_config.canonical_size)
    gen = torch.Generator().manual_seed(seed)
    z = torch.randn(1, bundle.shape_config.latent_dim, generator=gen)
    c = torch.zeros(1, 2)
    c[0, 0 if class_label == "car" else 1] = 1.0
    with torch.no_grad():
        m_hat = bundle.shape_generator(
            z, c, torch.from_numpy(theta.reshape(1, 6)))
    return place_shape(m_hat[0], theta, size=size)


@torch.no_grad()
def infer(bundle: ModelBundle, image: np.ndarray, keep_mask: np.ndarray,
          seg_onehot: Optional[np.ndarray], mode: str = "restore",
          class_label: Optional[str] = None, instance_mask: Optional[np.ndarray] = None,
          seed: int = 0, composite_output: bool = True) -> InferenceResult:
    """Single-image inference. `image` is H x W x 3 in [0, 1]; `keep_mask` is
    H x W x 1 with 0 inside the hole; `seg_onehot` is H x W x C (already
    blanked or full; it is re-blanked here)."""
    if mode not in MODES:
        raise SgiError(f"unknown mode {mode!r}")
    size = image.shape[0]
    num_classes = bundle.generator_config.num_classes

    if mode == "precise_removal" and instance_mask is not None:
        # the hole is exactly the instance silhouette
        keep_mask = 1.0 - instance_mask[..., None].astype(np.float32)

    if seg_onehot is None:
        seg_onehot = np.zeros(image.shape[:2] + (num_classes,), dtype=np.float32)

    if mode == "place":
        if class_label not in ("car", "pedestrian"):
            raise SgiError("place mode requires class_label car|pedestrian")
        channel = generate_instance_channel(bundle, class_label, keep_mask, seed, size)
    elif mode == "mask_insertion":
        if instance_mask is None or instance_mask.sum() == 0:
            raise SgiError("mask_insertion requires a non-empty instance_mask")
        channel = instance_mask.astype(np.float32)
    else:
        channel = np.zeros(image.shape[:2], dtype=np.float32)

    x = _tensor_image(image)
    m = torch.from_numpy(keep_mask).permute(2, 0, 1).float()[None]
    s = _tensor_image(seg_onehot * keep_mask)
    ch = torch.from_numpy(channel).float()[None, None]

    bundle.generator.eval()
    out = bundle.generator(x * m, m, s, ch)
    x01 = to_unit_range(out.x_filled)
    if composite_output:
        x01 = composite(x * m, m, x01)
    seg_ids = out.s_filled.argmax(dim=1)[0].numpy().astype(np.int32)
    return InferenceResult(image=x01[0].permute(1, 2, 0).numpy().astype(np.float32),
                           seg=seg_ids, seed=seed)
