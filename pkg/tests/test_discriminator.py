from __future__ import annotations

import torch

from sgi.models.discriminator import (MultiScalePatchDiscriminator,
                                      PatchDiscriminator, build_discriminator)


def test_patch_map_shape_c17():
    disc = PatchDiscriminator(3 + 17, width_mult=0.25)
    patch, feats = disc(torch.rand(1, 20, 256, 256))
    assert patch.shape == (1, 1, 30, 30)
    assert len(feats) == 4


def test_full_width_channel_chain():
    disc = PatchDiscriminator(3 + 17)
    outs = [s[0].out_channels for s in disc.stages]
    assert outs == [64, 128, 256, 512]
    assert disc.head.out_channels == 1


def test_spectral_norm_bounds_singular_values():
    torch.manual_seed(0)
    disc = PatchDiscriminator(4, width_mult=0.25)
    x = torch.rand(2, 4, 64, 64)
    for _ in range(50):  # converge the power iteration
        disc(x)
    for module in disc.modules():
        if isinstance(module, torch.nn.Conv2d):
            w = module.weight.reshape(module.weight.shape[0], -1)
            sv = torch.linalg.svdvals(w.detach())[0]
            # power iteration is approximate; allow 1% slack
            assert float(sv) <= 1.01


def test_multiscale_two_scales_halved_resolution():
    disc = MultiScalePatchDiscriminator(8, num_scales=2, width_mult=0.125)
    outs = disc(torch.rand(1, 3, 256, 256), torch.rand(1, 8, 256, 256))
    assert len(outs) == 2
    fine, coarse = outs[0][0], outs[1][0]
    assert fine.shape[-1] == 30
    assert abs(fine.shape[-1] / coarse.shape[-1] - 2) < 0.2


def test_build_discriminator_feats_for_fm():
    disc = build_discriminator(8, 2, 0.125)
    outs = disc(torch.rand(1, 3, 128, 128), torch.rand(1, 8, 128, 128))
    for patch, feats in outs:
        assert patch.shape[1] == 1
        assert len(feats) == 4
