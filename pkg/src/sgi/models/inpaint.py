"""One-stage inpainting network.

Two parallel encoders (appearance and semantics+instance) are fused at the
bottleneck by dilated residual blocks. The decoder predicts a segmentation map
at every scale and normalizes its features with it (spatially-adaptive
scale/shift over parameter-free instance normalization), then emits the final
image through a 7x7 conv and tanh.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import DimensionMismatchError
from .common import InstanceNorm, init_weights, scaled


@dataclass
class GeneratorConfig:
    num_classes: int = 17
    image_size: int = 256
    width_mult: float = 1.0
    fusion_blocks: int = 9
    dilations: tuple = (2, 2, 2, 4, 4, 4, 8, 8, 8)
    spade_hidden_base: int = 128
    use_spade: bool = True  # False = plain instance-norm residual decoder blocks

    @property
    def spade_hidden(self) -> int:
        return scaled(self.spade_hidden_base, self.width_mult)

    @property
    def encoder_widths(self) -> list:
        return [scaled(w, self.width_mult) for w in (32, 64, 128, 256, 512)]

    @property
    def fused_width(self) -> int:
        return 2 * self.encoder_widths[-1]


@dataclass
class GenerationOutput:
    x_filled: torch.Tensor        # B x 3 x H x W in [-1, 1] (tanh)
    s_filled: torch.Tensor        # B x C x H x W, per-pixel simplex
    scale_segs: List[torch.Tensor] = field(default_factory=list)  # coarse -> fine


class SceneEncoder(nn.Module):
    """Five-stage conv encoder, downsampling x16 (shared by E_im and E_se)."""

    def __init__(self, in_channels: int, widths: list):
        super().__init__()
        w0, w1, w2, w3, w4 = widths
        self.net = nn.Sequential(
            nn.Conv2d(in_channels, w0, 5, 1, 2), InstanceNorm(w0), nn.ELU(),
            nn.Conv2d(w0, w1, 5, 2, 2), InstanceNorm(w1), nn.ELU(),
            nn.Conv2d(w1, w2, 4, 2, 1), InstanceNorm(w2), nn.ELU(),
            nn.Conv2d(w2, w3, 4, 2, 1), InstanceNorm(w3), nn.ELU(),
            nn.Conv2d(w3, w4, 4, 2, 1), InstanceNorm(w4), nn.ELU(),
        )
        self.in_channels = in_channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.in_channels:
            raise DimensionMismatchError(
                f"expected {self.in_channels} input channels, got {x.shape[1]}")
        return self.net(x)


class DilatedResBlock(nn.Module):
    """Residual block with dilated 3x3 convs; no activation after the addition."""

    def __init__(self, channels: int, dilation: int):
        super().__init__()
        self.branch = nn.Sequential(
            nn.Conv2d(channels, channels, 3, 1, dilation, dilation=dilation),
            InstanceNorm(channels), nn.ELU(),
            nn.Conv2d(channels, channels, 3, 1, dilation, dilation=dilation),
            InstanceNorm(channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.branch(x)


class FusionTrunk(nn.Module):
    """Concatenate the two encoder streams, then dilated residual blocks."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        dilations = cfg.dilations[:cfg.fusion_blocks]
        self.blocks = nn.Sequential(
            *[DilatedResBlock(cfg.fused_width, d) for d in dilations])
        self.stream_width = cfg.encoder_widths[-1]

    def forward(self, f_im: torch.Tensor, f_se: torch.Tensor) -> torch.Tensor:
        if f_im.shape != f_se.shape or f_im.shape[1] != self.stream_width:
            raise DimensionMismatchError(
                f"fusion expects two {self.stream_width}-channel maps, got "
                f"{tuple(f_im.shape)} and {tuple(f_se.shape)}")
        return self.blocks(torch.cat([f_im, f_se], dim=1))


class Spade(nn.Module):
    """Parameter-free instance norm with per-pixel scale/shift predicted from a
    segmentation map."""

    def __init__(self, channels: int, num_classes: int, hidden: int = 128):
        super().__init__()
        self.norm = InstanceNorm(channels)
        self.shared = nn.Sequential(nn.Conv2d(num_classes, hidden, 3, 1, 1), nn.ReLU())
        self.gamma = nn.Conv2d(hidden, channels, 3, 1, 1)
        self.beta = nn.Conv2d(hidden, channels, 3, 1, 1)

    def forward(self, x: torch.Tensor, seg: torch.Tensor) -> torch.Tensor:
        if seg.shape[-2:] != x.shape[-2:]:
            seg = F.interpolate(seg, size=x.shape[-2:], mode="nearest")
        h = self.shared(seg)
        return self.norm(x) * (1.0 + self.gamma(h)) + self.beta(h)


class SpadeResBlock(nn.Module):
    """Two spade-conv stages with an identity (non-learned) skip. When the
    channel count changes (final block only) the skip is a fixed-width learned
    1x1 projection, which the equal-width decoder blocks never use."""

    def __init__(self, in_channels: int, out_channels: int, num_classes: int,
                 hidden: int = 128, use_spade: bool = True):
        super().__init__()
        self.use_spade = use_spade
        if use_spade:
            self.norm1 = Spade(in_channels, num_classes, hidden)
            self.norm2 = Spade(out_channels, num_classes, hidden)
        else:
            self.norm1 = InstanceNorm(in_channels)
            self.norm2 = InstanceNorm(out_channels)
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, 1, 1)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, 1, 1)
        self.skip = (nn.Identity() if in_channels == out_channels
                     else nn.Conv2d(in_channels, out_channels, 1, bias=False))

    def _norm(self, norm, x, seg):
        return norm(x, seg) if self.use_spade else norm(x)

    def forward(self, x: torch.Tensor, seg: torch.Tensor) -> torch.Tensor:
        dx = self.conv1(F.elu(self._norm(self.norm1, x, seg)))
        dx = self.conv2(F.elu(self._norm(self.norm2, dx, seg)))
        return self.skip(x) + dx


class DecoderBlock(nn.Module):
    """Sub-pixel x2 upsampling, a 1x1 segmentation head (softmax over classes),
    and a segmentation-modulated residual block."""

    def __init__(self, in_channels: int, out_channels: int, cfg: GeneratorConfig):
        super().__init__()
        self.up = nn.Sequential(
            nn.Conv2d(in_channels, out_channels * 4, 3, 1, 1),
            nn.PixelShuffle(2),
        )
        self.seg_head = nn.Conv2d(out_channels, cfg.num_classes, 1)
        self.res = SpadeResBlock(out_channels, out_channels, cfg.num_classes,
                                 cfg.spade_hidden, cfg.use_spade)

    def forward(self, x: torch.Tensor):
        up = self.up(x)
        seg = torch.softmax(self.seg_head(up), dim=1)
        return self.res(up, seg), seg


class InpaintGenerator(nn.Module):
    """E_im + E_se -> dilated fusion -> four decoder blocks -> image + seg maps."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        widths = cfg.encoder_widths
        self.encoder_image = SceneEncoder(3 + 1, widths)
        self.encoder_semantic = SceneEncoder(cfg.num_classes + 1 + 1, widths)
        self.fusion = FusionTrunk(cfg)
        dec_in = [cfg.fused_width] + [scaled(w, cfg.width_mult) for w in (512, 256, 128)]
        dec_out = [scaled(w, cfg.width_mult) for w in (512, 256, 128, 64)]
        self.decoder_blocks = nn.ModuleList(
            [DecoderBlock(i, o, cfg) for i, o in zip(dec_in, dec_out)])
        final_w = scaled(32, cfg.width_mult)
        self.final_res = SpadeResBlock(dec_out[-1], final_w, cfg.num_classes,
                                       cfg.spade_hidden, cfg.use_spade)
        self.to_image = nn.Conv2d(final_w, 3, 7, 1, 3)
        init_weights(self)

    def encode_image(self, x_blanked: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
        return self.encoder_image(torch.cat([x_blanked, m], dim=1))

    def encode_semantics(self, s_blanked: torch.Tensor, m: torch.Tensor,
                         instance_channel: torch.Tensor) -> torch.Tensor:
        return self.encoder_semantic(torch.cat([s_blanked, m, instance_channel], dim=1))

    def decode(self, fused: torch.Tensor) -> GenerationOutput:
        segs = []
        h = fused
        for block in self.decoder_blocks:
            h, seg = block(h)
            segs.append(seg)
        s_filled = segs[-1]
        h = self.final_res(h, s_filled)
        x_filled = torch.tanh(self.to_image(h))
        return GenerationOutput(x_filled=x_filled, s_filled=s_filled, scale_segs=segs)

    def forward(self, x_blanked: torch.Tensor, m: torch.Tensor, s_blanked: torch.Tensor,
                instance_channel: torch.Tensor = None) -> GenerationOutput:
        if instance_channel is None:
            instance_channel = torch.zeros_like(m)
        f_im = self.encode_image(x_blanked, m)
        f_se = self.encode_semantics(s_blanked, m, instance_channel)
        return self.decode(self.fusion(f_im, f_se))


def composite(x_blanked: torch.Tensor, m: torch.Tensor, x_filled01: torch.Tensor) -> torch.Tensor:
    """Keep unmasked pixels from the input, hole pixels from the prediction.
    Both images in [0, 1]."""
    return x_blanked * m + x_filled01 * (1.0 - m)


def to_unit_range(x_filled: torch.Tensor) -> torch.Tensor:
    """tanh output [-1, 1] -> [0, 1]."""
    return (x_filled + 1.0) * 0.5
