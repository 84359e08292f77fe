"""HTTP inference endpoint backing the browser editor.

Wire format: ``POST /api/inpaint`` with base-64 PNG fields, ``GET /api/health``.
Requests against one loaded model are serialized; the health endpoint never
blocks on inference.
"""

from __future__ import annotations

import base64
import io
import threading
import time
from typing import List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from PIL import Image
from pydantic import BaseModel

from .data.scenes import one_hot
from .errors import SgiError
from .inference import MODES, infer
from .training import ModelBundle


class InpaintRequest(BaseModel):
    image: str                      # base-64 PNG, RGB
    mask: str                       # base-64 PNG, 0 = hole
    seg: Optional[str] = None       # base-64 PNG of class IDs
    mode: str = "restore"
    class_label: Optional[str] = None
    instance_mask: Optional[str] = None
    seed: Optional[int] = None
    variants: int = 1


class Variant(BaseModel):
    image: str
    segmentation: str
    seed: int


class InpaintResponse(BaseModel):
    variants: List[Variant]
    latency_ms: float


def _decode_png(b64: str) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(base64.b64decode(b64))))


def _encode_png(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def create_app(bundle: ModelBundle) -> FastAPI:
    app = FastAPI(title="sgi inference service")
    lock = threading.Lock()

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/inpaint", response_model=InpaintResponse)
    def inpaint(req: InpaintRequest):
        t_start = time.monotonic()
        if req.mode not in MODES:
            raise HTTPException(422, f"unknown mode {req.mode!r}")
        if req.mode == "place" and req.class_label not in ("car", "pedestrian"):
            raise HTTPException(422, "place mode requires class_label car|pedestrian")
        if req.variants < 1:
            raise HTTPException(422, "variants must be >= 1")

        image_u8 = _decode_png(req.image)
        if image_u8.ndim != 3 or image_u8.shape[2] < 3:
            raise HTTPException(422, "image must be RGB PNG")
        image = image_u8[..., :3].astype(np.float32) / 255.0
        mask_u8 = _decode_png(req.mask)
        if mask_u8.ndim == 3:
            mask_u8 = mask_u8[..., 0]
        if mask_u8.shape != image.shape[:2]:
            raise HTTPException(422, "image and mask dimensions differ")
        keep = (mask_u8 >= 128).astype(np.float32)[..., None]

        seg = None
        if req.seg is not None:
            ids = _decode_png(req.seg)
            if ids.ndim == 3:
                ids = ids[..., 0]
            try:
                seg = one_hot(ids.astype(np.int32), bundle.generator_config.num_classes)
            except SgiError as exc:
                raise HTTPException(422, str(exc)) from exc
        instance_mask = None
        if req.instance_mask is not None:
            im = _decode_png(req.instance_mask)
            if im.ndim == 3:
                im = im[..., 0]
            instance_mask = (im >= 128).astype(np.float32)
        if req.mode == "mask_insertion" and (instance_mask is None or instance_mask.sum() == 0):
            raise HTTPException(422, "mask_insertion requires a non-empty instance_mask")

        base_seed = req.seed if req.seed is not None else 0
        variants = []
        with lock:
            for i in range(req.variants):
                seed = base_seed + i
                try:
                    result = infer(bundle, image, keep.copy(), seg, mode=req.mode,
                                   class_label=req.class_label,
                                   instance_mask=instance_mask, seed=seed)
                except SgiError as exc:
                    raise HTTPException(422, str(exc)) from exc
                variants.append(Variant(
                    image=_encode_png((np.clip(result.image, 0, 1) * 255).round().astype(np.uint8)),
                    segmentation=_encode_png(result.seg.astype(np.uint8)),
                    seed=seed,
                ))
        return InpaintResponse(variants=variants,
                               latency_ms=(time.monotonic() - t_start) * 1000.0)

    return app
