"""Shared building blocks and initialization for all networks."""

from __future__ import annotations

import torch
import torch.nn as nn


def init_weights(module: nn.Module, std: float = 0.02) -> None:
    """DCGAN-family init: normal(0, std) for conv/deconv/linear weights, zero biases."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
            nn.init.normal_(m.weight, 0.0, std)
            if m.bias is not None:
                nn.init.zeros_(m.bias)


class InstanceNorm(nn.InstanceNorm2d):
    """Parameter-free instance norm; an all-zero map normalizes to zero
    (eps=1e-5 in the denominator keeps it well-defined)."""

    def __init__(self, num_features: int):
        super().__init__(num_features, eps=1e-5, affine=False, track_running_stats=False)


def scaled(width: int, mult: float) -> int:
    """Channel width scaled by a config multiplier, floor 4."""
    return max(4, int(round(width * mult)))


def zero_module_(module: nn.Module) -> nn.Module:
    with torch.no_grad():
        for p in module.parameters():
            p.zero_()
    return module
