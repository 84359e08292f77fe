"""Inpainting training objectives and the injected feature-extractor interface.

All losses are pure functions of tensors; images are in [0, 1] unless noted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Protocol

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import DEFAULT_LOSS_WEIGHTS
from .errors import DimensionMismatchError, EmptyHoleError

LOG_EPS = 1e-8

GENERATOR_TERMS = {
    "adv_g": 1.0,  # unweighted in the generator objective
    "pixel_rec": "rec",
    "perceptual": "perc",
    "style": "style",
    "feature_match": "fm",
    "seg_ms": "cross",
}


@dataclass
class LossBundle:
    """Named scalar loss terms with their weights and aggregated totals."""

    terms: dict
    weights: dict = field(default_factory=lambda: dict(DEFAULT_LOSS_WEIGHTS))

    def generator_total(self) -> torch.Tensor:
        total = None
        for term, weight_key in GENERATOR_TERMS.items():
            if term not in self.terms:
                raise KeyError(f"missing loss term: {term}")
            w = weight_key if isinstance(weight_key, float) else self.weights[weight_key]
            contrib = w * self.terms[term]
            total = contrib if total is None else total + contrib
        return total

    def discriminator_total(self) -> torch.Tensor:
        if "adv_d" not in self.terms:
            raise KeyError("missing loss term: adv_d")
        return self.terms["adv_d"]

    def scalars(self) -> dict:
        def _scalar(v):
            return float(v.detach() if isinstance(v, torch.Tensor) else v)

        out = {k: _scalar(v) for k, v in self.terms.items()}
        out["g_total"] = _scalar(self.generator_total())
        out["d_total"] = _scalar(self.discriminator_total())
        return out


class FeatureExtractor(Protocol):
    """Ordered activation taps of a frozen pretrained network. Deterministic in
    evaluation mode; never trained."""

    def __call__(self, images: torch.Tensor) -> List[torch.Tensor]: ...


class StubFeatureExtractor(nn.Module):
    """Seed-pinned random conv stack standing in for a pretrained backbone, so
    the loss suite runs with no downloaded weights."""

    # Tap outputs are attenuated so Gram magnitudes land near those of
    # normalized pretrained features, which the default style weight assumes;
    # raw tanh features are O(1) and would let the style term drown the
    # reconstruction gradient.
    FEATURE_GAIN = 0.05

    def __init__(self, seed: int = 0, taps: int = 4, base_width: int = 8):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        layers = []
        in_ch = 3
        for i in range(taps):
            out_ch = base_width * (2 ** i)
            conv = nn.Conv2d(in_ch, out_ch, 3, 2, 1)
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen) * 0.2)
                conv.bias.zero_()
            layers.append(conv)
            in_ch = out_ch
        self.convs = nn.ModuleList(layers)
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, images: torch.Tensor) -> List[torch.Tensor]:
        feats = []
        h = images
        for conv in self.convs:
            h = torch.tanh(conv(h))
            feats.append(h * self.FEATURE_GAIN)
        return feats

    __call__ = nn.Module.__call__


class IdentityFeatureExtractor(nn.Module):
    """phi = identity; reduces the perceptual loss to a plain L1 mean."""

    def forward(self, images: torch.Tensor) -> List[torch.Tensor]:
        return [images]

    __call__ = nn.Module.__call__


def seg_multiscale_loss(scale_segs: List[torch.Tensor], s_gt: torch.Tensor) -> torch.Tensor:
    """Cross-entropy against the one-hot ground truth, with every scale
    upscaled (bilinear, renormalized) to the ground-truth resolution; mean over
    pixels and scales."""
    if not scale_segs:
        raise ValueError("no segmentation scales provided")
    total = 0.0
    for seg in scale_segs:
        if seg.shape[-2:] != s_gt.shape[-2:]:
            seg = F.interpolate(seg, size=s_gt.shape[-2:], mode="bilinear", align_corners=False)
            seg = seg.clamp_min(0.0)
            seg = seg / seg.sum(dim=1, keepdim=True).clamp_min(LOG_EPS)
        ce = -(s_gt * torch.log(seg + LOG_EPS)).sum(dim=1)
        total = total + ce.mean()
    return total / len(scale_segs)


def pixel_rec_loss(x_filled: torch.Tensor, x_gt: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
    """L1 over all pixels normalized by the hole pixel count, channel-averaged."""
    if x_filled.shape != x_gt.shape:
        raise DimensionMismatchError(f"{tuple(x_filled.shape)} vs {tuple(x_gt.shape)}")
    hole = (1.0 - m).sum(dim=(1, 2, 3))
    if (hole == 0).any():
        raise EmptyHoleError("mask has no hole pixels")
    per_sample = (x_filled - x_gt).abs().sum(dim=(2, 3)).mean(dim=1) / hole
    return per_sample.mean()


def feature_matching_loss(real_acts: List[List[torch.Tensor]],
                          fake_acts: List[List[torch.Tensor]]) -> torch.Tensor:
    """Mean L1 gap between discriminator activations, summed over scales and
    layers, divided by the scale count."""
    if len(real_acts) != len(fake_acts):
        raise DimensionMismatchError("scale count mismatch between real and fake activations")
    k = len(real_acts)
    total = 0.0
    for reals, fakes in zip(real_acts, fake_acts):
        if len(reals) != len(fakes):
            raise DimensionMismatchError("layer count mismatch between real and fake activations")
        for r, f in zip(reals, fakes):
            total = total + (r.detach() - f).abs().mean()
    return total / k


def perceptual_loss(x_filled: torch.Tensor, x_gt: torch.Tensor,
                    extractor: FeatureExtractor) -> torch.Tensor:
    """Sum over taps of the L1 feature gap, each normalized by H*W*C."""
    total = 0.0
    for fa, fb in zip(extractor(x_filled), extractor(x_gt)):
        n = fa.shape[1] * fa.shape[2] * fa.shape[3]
        total = total + (fa - fb).abs().sum(dim=(1, 2, 3)).mean() / n
    return total


def gram_matrix(features: torch.Tensor) -> torch.Tensor:
    """B x C x H x W -> B x C x C Gram, normalized by C*H*W."""
    b, c, h, w = features.shape
    psi = features.reshape(b, c, h * w)
    return psi @ psi.transpose(1, 2) / (c * h * w)


def style_loss(x_filled: torch.Tensor, x_gt: torch.Tensor,
               extractor: FeatureExtractor) -> torch.Tensor:
    """Sum over taps of the L1 gap between Gram matrices."""
    total = 0.0
    for fa, fb in zip(extractor(x_filled), extractor(x_gt)):
        total = total + (gram_matrix(fa) - gram_matrix(fb)).abs().sum(dim=(1, 2)).mean()
    return total


def adversarial_losses(d_real: List[torch.Tensor], d_fake: List[torch.Tensor]) -> dict:
    """Multi-scale LSGAN over patch maps: per-scale patch mean, summed over
    scales. Real -> 1, fake -> 0."""
    if len(d_real) != len(d_fake):
        raise DimensionMismatchError("scale count mismatch in adversarial losses")
    l_d = 0.0
    l_g = 0.0
    for r, f in zip(d_real, d_fake):
        l_d = l_d + 0.5 * ((r - 1.0) ** 2).mean() + 0.5 * (f ** 2).mean()
        l_g = l_g + 0.5 * ((f - 1.0) ** 2).mean()
    return {"d": l_d, "g": l_g}
