"""Multi-scale PatchGAN discriminator with spectral normalization.

Each scale scores (image, ground-truth segmentation) pairs with a 70x70
receptive-field patch map; coarser scales see 2x-downsampled inputs.
Intermediate activations are returned for the feature-matching loss.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn.utils import spectral_norm

from .common import InstanceNorm, init_weights, scaled


class PatchDiscriminator(nn.Module):
    def __init__(self, in_channels: int, width_mult: float = 1.0):
        super().__init__()
        w = [scaled(c, width_mult) for c in (64, 128, 256, 512)]
        self.stages = nn.ModuleList([
            nn.Sequential(spectral_norm(nn.Conv2d(in_channels, w[0], 4, 2, 1)),
                          nn.LeakyReLU(0.2)),
            nn.Sequential(spectral_norm(nn.Conv2d(w[0], w[1], 4, 2, 1)),
                          InstanceNorm(w[1]), nn.LeakyReLU(0.2)),
            nn.Sequential(spectral_norm(nn.Conv2d(w[1], w[2], 4, 2, 1)),
                          InstanceNorm(w[2]), nn.LeakyReLU(0.2)),
            nn.Sequential(spectral_norm(nn.Conv2d(w[2], w[3], 4, 1, 1)),
                          InstanceNorm(w[3]), nn.LeakyReLU(0.2)),
        ])
        self.head = spectral_norm(nn.Conv2d(w[3], 1, 4, 1, 1))
        init_weights(self)

    def forward(self, x: torch.Tensor):
        feats = []
        h = x
        for stage in self.stages:
            h = stage(h)
            feats.append(h)
        return self.head(h), feats


class MultiScalePatchDiscriminator(nn.Module):
    """K PatchGAN scales over progressively 2x-downsampled inputs."""

    def __init__(self, num_classes: int, num_scales: int = 2, width_mult: float = 1.0):
        super().__init__()
        self.scales = nn.ModuleList(
            [PatchDiscriminator(3 + num_classes, width_mult) for _ in range(num_scales)])

    def forward(self, image: torch.Tensor, seg: torch.Tensor):
        """Returns [(patch_map, activations), ...], finest scale first."""
        x = torch.cat([image, seg], dim=1)
        outs = []
        for i, disc in enumerate(self.scales):
            if i > 0:
                x = F.avg_pool2d(x, 3, stride=2, padding=1, count_include_pad=False)
            outs.append(disc(x))
        return outs


def build_discriminator(num_classes: int, num_scales: int = 2,
                        width_mult: float = 1.0) -> MultiScalePatchDiscriminator:
    return MultiScalePatchDiscriminator(num_classes, num_scales, width_mult)
