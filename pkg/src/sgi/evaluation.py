"""PSNR / FID / insertion-F1 metrics and the restore/place benchmark runner."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Protocol, Tuple

import numpy as np

from .errors import DimensionMismatchError, TooFewSamplesError

PSNR_CAP = 100.0
DETECTION_IOU = 0.3
MODELLED_CLASSES = ("car", "pedestrian")


@dataclass
class MetricReport:
    task: str
    psnr_mean: float
    fid: float
    f1: float
    n_images: int
    manifest_path: str = ""
    model_id: str = ""
    small_sample: bool = True  # desk-scale FID is biased below ~10k images

    def as_text(self) -> str:
        fid_label = "FID (small-sample)" if self.small_sample else "FID"
        return "\n".join([
            f"task        {self.task}",
            f"images      {self.n_images}",
            f"PSNR (dB)   {self.psnr_mean:.4f}",
            f"{fid_label:<11} {self.fid:.4f}",
            f"F1          {self.f1:.4f}",
            f"manifest    {self.manifest_path}",
            f"model       {self.model_id}",
        ])


def psnr(a: np.ndarray, b: np.ndarray, cap: float = PSNR_CAP) -> float:
    """10*log10(1/MSE) for [0,1] images; identical images return the cap."""
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{a.shape} vs {b.shape}")
    mse = float(np.mean((np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) ** 2))
    if mse == 0.0:
        return cap
    return min(cap, 10.0 * np.log10(1.0 / mse))


def _sqrt_psd(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fid(feats_real: np.ndarray, feats_fake: np.ndarray) -> float:
    """Frechet distance between Gaussian fits of the two feature sets."""
    feats_real = np.atleast_2d(np.asarray(feats_real, dtype=np.float64))
    feats_fake = np.atleast_2d(np.asarray(feats_fake, dtype=np.float64))
    if feats_real.shape[0] < 2 or feats_fake.shape[0] < 2:
        raise TooFewSamplesError("need at least 2 samples per side for covariance")
    mu1, mu2 = feats_real.mean(axis=0), feats_fake.mean(axis=0)
    s1 = np.atleast_2d(np.cov(feats_real, rowvar=False))
    s2 = np.atleast_2d(np.cov(feats_fake, rowvar=False))
    sqrt_s1 = _sqrt_psd(s1)
    inner = sqrt_s1 @ s2 @ sqrt_s1
    vals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    trace_sqrt = np.sqrt(np.clip(vals, 0.0, None)).sum()
    return float(np.sum((mu1 - mu2) ** 2) + np.trace(s1) + np.trace(s2) - 2.0 * trace_sqrt)


@dataclass
class Detection:
    class_name: str
    bbox: tuple  # (x, y, w, h)
    confidence: float = 1.0


class Detector(Protocol):
    """Injected object-detector interface: image -> detections."""

    def __call__(self, image: np.ndarray) -> List[Detection]: ...


class StubDetector:
    """Scripted detector reading planted ground truth: reports an instance for
    every connected rectangle of the given class maps. Used by tests in place
    of a pretrained network."""

    def __init__(self, planted: dict):
        # planted: image id -> list of Detection
        self.planted = planted

    def __call__(self, image_id: str) -> List[Detection]:
        return list(self.planted.get(image_id, []))


def _iou(a: tuple, b: tuple) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def f1_insertion(results: List[Tuple[List[Detection], str, tuple]], task: str,
                 iou_threshold: float = DETECTION_IOU) -> float:
    """F1 of instance insertion.

    Each result is (detections, target_class, mask_rect_xywh). Place task: a
    true positive needs a target-class detection overlapping the rect
    (IoU > threshold); restore: any modelled-class detection in the rect
    counts. Spurious modelled-class detections in the rect are false positives.
    """
    tp = fp = fn = 0
    for detections, target_class, rect in results:
        matched = False
        for det in detections:
            if det.class_name not in MODELLED_CLASSES:
                continue
            if _iou(det.bbox, rect) <= iou_threshold:
                continue
            accept = det.class_name == target_class if task == "place" else True
            if accept and not matched:
                matched = True
            elif not accept:
                fp += 1
        if matched:
            tp += 1
        else:
            fn += 1
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def run_benchmark(infer_fn, scenes: dict, manifest_entries: list, task: str,
                  feature_extractor, detector: Detector = None,
                  target_classes: dict = None,
                  manifest_path: str = "", model_id: str = "") -> tuple:
    """Apply each manifest mask, run inference, and aggregate PSNR/FID/F1.

    infer_fn(scene, rect) must return the composited output image (H x W x 3,
    [0, 1]). feature_extractor maps an image to a 1-d feature vector.
    target_classes maps scene id -> desired class for the place task.
    Returns (MetricReport, per-image rows).
    """
    psnrs = []
    feats_real = []
    feats_fake = []
    det_results = []
    rows = []
    for entry in manifest_entries:
        if entry.id not in scenes:
            raise KeyError(f"manifest entry {entry.id} not in dataset")
        scene = scenes[entry.id]
        out = infer_fn(scene, entry)
        p = psnr(out, scene.image)
        psnrs.append(p)
        feats_real.append(np.asarray(feature_extractor(scene.image), dtype=np.float64).ravel())
        feats_fake.append(np.asarray(feature_extractor(out), dtype=np.float64).ravel())
        if detector is not None:
            target = (target_classes or {}).get(entry.id, "car")
            det_results.append((detector(entry.id), target,
                                (entry.x, entry.y, entry.w, entry.h)))
        rows.append(f"{entry.id} {entry.mode} {p:.4f}")
    fid_value = fid(np.stack(feats_real), np.stack(feats_fake))
    f1 = f1_insertion(det_results, task) if det_results else 0.0
    report = MetricReport(task=task, psnr_mean=float(np.mean(psnrs)), fid=fid_value,
                          f1=f1, n_images=len(psnrs), manifest_path=str(manifest_path),
                          model_id=model_id)
    return report, rows


def write_report(report: MetricReport, rows: list, path) -> None:
    path = Path(path)
    path.write_text(report.as_text() + "\n")
    path.with_suffix(".rows.txt").write_text("\n".join(rows) + "\n")
