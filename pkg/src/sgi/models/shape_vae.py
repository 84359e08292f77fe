"""Shape VAE-GAN: silhouette encoder, conditional shape generator, DCGAN-style
discriminator, the reparameterized sampler and the canonical-to-scene warp."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import DimensionMismatchError, SingularTransformError
from .common import InstanceNorm, init_weights


@dataclass
class ShapeNetConfig:
    latent_dim: int = 64
    num_classes: int = 2
    theta_dim: int = 6
    canonical_size: int = 64

    @property
    def encoder_input_dim(self) -> int:
        # flattened canonical mask + class one-hot + affine parameters
        return self.canonical_size ** 2 + self.num_classes + self.theta_dim


@dataclass
class LatentPosterior:
    mu: torch.Tensor      # B x Z
    logvar: torch.Tensor  # B x Z


class ShapeEncoder(nn.Module):
    """(m_s, c, theta) -> diagonal Gaussian posterior over the latent space."""

    def __init__(self, cfg: ShapeNetConfig):
        super().__init__()
        self.cfg = cfg
        side = cfg.canonical_size // 2
        self.fc = nn.Linear(cfg.encoder_input_dim, side * side * 8)
        self.side = side
        self.convs = nn.Sequential(
            nn.Conv2d(8, 32, 3, 1, 1), InstanceNorm(32), nn.LeakyReLU(0.2),
            nn.Conv2d(32, 64, 4, 2, 1), InstanceNorm(64), nn.LeakyReLU(0.2),
            nn.Conv2d(64, 128, 4, 2, 1), InstanceNorm(128), nn.LeakyReLU(0.2),
            nn.Conv2d(128, 256, 4, 2, 1), InstanceNorm(256), nn.LeakyReLU(0.2),
        )
        final_side = side // 8
        self.mu_head = nn.Conv2d(256, cfg.latent_dim, final_side, 1, 0)
        self.logvar_head = nn.Conv2d(256, cfg.latent_dim, final_side, 1, 0)
        init_weights(self)

    def forward(self, m_s: torch.Tensor, c: torch.Tensor, theta: torch.Tensor) -> LatentPosterior:
        flat = torch.cat([m_s.flatten(1), c.flatten(1), theta.flatten(1)], dim=1)
        if flat.shape[1] != self.cfg.encoder_input_dim:
            raise DimensionMismatchError(
                f"encoder input length {flat.shape[1]}, expected {self.cfg.encoder_input_dim}")
        h = F.leaky_relu(self.fc(flat), 0.2)
        h = h.view(-1, 8, self.side, self.side)
        h = self.convs(h)
        return LatentPosterior(mu=self.mu_head(h).flatten(1),
                               logvar=self.logvar_head(h).flatten(1))


class ShapeGenerator(nn.Module):
    """(z, c, theta) -> canonical shape in (0, 1), sigmoided."""

    def __init__(self, cfg: ShapeNetConfig):
        super().__init__()
        self.cfg = cfg
        in_dim = cfg.latent_dim + cfg.num_classes + cfg.theta_dim
        self.net = nn.Sequential(
            nn.ConvTranspose2d(in_dim, 256, 4, 1, 0), InstanceNorm(256), nn.ReLU(),
            nn.ConvTranspose2d(256, 128, 4, 2, 1), InstanceNorm(128), nn.ReLU(),
            nn.ConvTranspose2d(128, 64, 4, 2, 1), InstanceNorm(64), nn.ReLU(),
            nn.ConvTranspose2d(64, 32, 4, 2, 1), InstanceNorm(32), nn.ReLU(),
            nn.ConvTranspose2d(32, 1, 4, 2, 1),
        )
        init_weights(self)

    def forward(self, z: torch.Tensor, c: torch.Tensor, theta: torch.Tensor) -> torch.Tensor:
        inp = torch.cat([z, c, theta.flatten(1)], dim=1)
        expected = self.cfg.latent_dim + self.cfg.num_classes + self.cfg.theta_dim
        if inp.shape[1] != expected:
            raise DimensionMismatchError(f"generator input length {inp.shape[1]}, expected {expected}")
        return torch.sigmoid(self.net(inp[:, :, None, None])).squeeze(1)


class ShapeDiscriminator(nn.Module):
    """Canonical shape -> single realness score per sample."""

    def __init__(self, cfg: ShapeNetConfig):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(1, 64, 4, 2, 1), nn.LeakyReLU(0.2),
            nn.Conv2d(64, 128, 4, 2, 1), InstanceNorm(128), nn.LeakyReLU(0.2),
            nn.Conv2d(128, 256, 4, 2, 1), InstanceNorm(256), nn.LeakyReLU(0.2),
            nn.Conv2d(256, 512, 4, 2, 1), InstanceNorm(512), nn.LeakyReLU(0.2),
            nn.Conv2d(512, 1, cfg.canonical_size // 16, 1, 0),
        )
        init_weights(self)

    def forward(self, m: torch.Tensor) -> torch.Tensor:
        if m.dim() == 3:
            m = m[:, None]
        return self.net(m).flatten(1).squeeze(1)


def sample_latent(post: LatentPosterior, generator: torch.Generator = None) -> torch.Tensor:
    """Reparameterized draw z = mu + exp(logvar/2) * eps, differentiable in both."""
    eps = torch.randn(post.mu.shape, generator=generator,
                      dtype=post.mu.dtype, device=post.mu.device)
    return post.mu + torch.exp(0.5 * post.logvar) * eps


def kl_divergence(post: LatentPosterior) -> torch.Tensor:
    """KL(N(mu, diag sigma^2) || N(0, I)), summed over dims, mean over batch."""
    kl = 0.5 * (post.mu ** 2 + torch.exp(post.logvar) - 1.0 - post.logvar)
    return kl.sum(dim=1).mean()


def shape_losses(m_s: torch.Tensor, m_hat: torch.Tensor, post: LatentPosterior) -> dict:
    if m_s.shape != m_hat.shape:
        raise DimensionMismatchError(f"shape mismatch: {tuple(m_s.shape)} vs {tuple(m_hat.shape)}")
    return {
        "vae": kl_divergence(post),
        "inst_rec": (m_s - m_hat).abs().mean(),
    }


def shape_adversarial(d_real: torch.Tensor, d_fake: torch.Tensor) -> dict:
    """LSGAN with real -> 1, fake -> 0 labels."""
    return {
        "d": 0.5 * ((d_real - 1.0) ** 2).mean() + 0.5 * (d_fake ** 2).mean(),
        "g": 0.5 * ((d_fake - 1.0) ** 2).mean(),
    }


def place_shape(m_hat, theta, size: int = 256, threshold: float = 0.5) -> np.ndarray:
    """Inverse-warp a canonical shape onto the full canvas and binarize.

    For every canvas pixel the canonical coordinate is recovered through the
    inverted affine; pixels mapping outside the canonical frame stay 0.
    """
    m_hat = np.asarray(m_hat.detach().cpu() if isinstance(m_hat, torch.Tensor) else m_hat,
                       dtype=np.float32)
    theta = np.asarray(theta, dtype=np.float64).reshape(2, 3)
    a = theta[:, :2]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if abs(det) < 1e-12:
        raise SingularTransformError(f"affine matrix is singular: {theta.tolist()}")
    a_inv = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det
    xs, ys = np.meshgrid(np.arange(size, dtype=np.float64) + 0.5,
                         np.arange(size, dtype=np.float64) + 0.5)
    rel = np.stack([xs - theta[0, 2], ys - theta[1, 2]], axis=-1)
    uv = rel @ a_inv.T  # continuous canonical coords
    side = m_hat.shape[-1]
    u = np.floor(uv[..., 0]).astype(np.int64)
    v = np.floor(uv[..., 1]).astype(np.int64)
    inside = (u >= 0) & (u < side) & (v >= 0) & (v < side)
    out = np.zeros((size, size), dtype=np.float32)
    out[inside] = m_hat[v[inside], u[inside]]
    return (out >= threshold).astype(np.float32)


def place_shape_torch(m_hat: torch.Tensor, theta: torch.Tensor, size: int = 256) -> torch.Tensor:
    """Differentiable soft placement (bilinear grid sample), used during training
    so instance-channel gradients reach the shape generator."""
    b = m_hat.shape[0]
    th = theta.reshape(b, 2, 3)
    a = th[:, :, :2]
    t = th[:, :, 2]
    det = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    if (det.abs() < 1e-12).any():
        raise SingularTransformError("affine matrix is singular")
    a_inv = torch.stack([
        torch.stack([a[:, 1, 1], -a[:, 0, 1]], dim=1),
        torch.stack([-a[:, 1, 0], a[:, 0, 0]], dim=1),
    ], dim=1) / det[:, None, None]
    side = m_hat.shape[-1]
    coords = torch.arange(size, dtype=m_hat.dtype, device=m_hat.device) + 0.5
    ys, xs = torch.meshgrid(coords, coords, indexing="ij")
    pix = torch.stack([xs, ys], dim=-1)[None].expand(b, -1, -1, -1)
    rel = pix - t[:, None, None, :]
    uv = torch.einsum("bhwj,bij->bhwi", rel, a_inv)
    grid = uv / (side / 2.0) - 1.0  # canonical [0, side] -> [-1, 1]
    return F.grid_sample(m_hat[:, None], grid, mode="bilinear",
                         padding_mode="zeros", align_corners=False).squeeze(1)
