"""Joint optimization of the shape VAE-GAN and the inpainting network."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import torch

from . import losses as L
from .config import Profile, TrainSettings, write_config
from .data.scenes import (Scene, aggregate_classes, ClassAggregation, index_instances,
                          list_scene_ids, load_scene, one_hot, resize_and_crop)
from .errors import NonFiniteLossError
from .masking import (MaskRect, apply_mask, extract_instance_spec,
                      sample_place_mask, sample_restore_mask)
from .models.discriminator import build_discriminator
from .models.inpaint import GeneratorConfig, InpaintGenerator, to_unit_range
from .models.shape_vae import (ShapeDiscriminator, ShapeEncoder, ShapeGenerator,
                               ShapeNetConfig, place_shape_torch, sample_latent,
                               shape_adversarial, shape_losses)

METRIC_FIELDS = ["adv_d", "adv_g", "pixel_rec", "perceptual", "style", "feature_match",
                 "seg_ms", "vae", "inst_rec", "shape_adv_g", "shape_adv_d",
                 "g_total", "d_total"]


@dataclass
class ModelBundle:
    """All trainable networks plus their configs and the location prior."""

    shape_encoder: ShapeEncoder
    shape_generator: ShapeGenerator
    shape_discriminator: ShapeDiscriminator
    generator: InpaintGenerator
    discriminator: torch.nn.Module
    shape_config: ShapeNetConfig
    generator_config: GeneratorConfig
    location_prior: dict = field(default_factory=dict)  # class name -> list of l vectors

    @classmethod
    def build(cls, num_classes: int, settings: TrainSettings) -> "ModelBundle":
        shape_cfg = ShapeNetConfig(latent_dim=settings.latent_dim)
        gen_cfg = GeneratorConfig(num_classes=num_classes, width_mult=settings.width_mult)
        return cls(
            shape_encoder=ShapeEncoder(shape_cfg),
            shape_generator=ShapeGenerator(shape_cfg),
            shape_discriminator=ShapeDiscriminator(shape_cfg),
            generator=InpaintGenerator(gen_cfg),
            discriminator=build_discriminator(num_classes, settings.disc_scales,
                                              settings.width_mult),
            shape_config=shape_cfg,
            generator_config=gen_cfg,
        )

    def generator_modules(self) -> list:
        return [self.shape_encoder, self.shape_generator, self.generator]

    def discriminator_modules(self) -> list:
        return [self.shape_discriminator, self.discriminator]

    def generator_parameters(self):
        for m in self.generator_modules():
            yield from m.parameters()

    def discriminator_parameters(self):
        for m in self.discriminator_modules():
            yield from m.parameters()

    def state_dicts(self) -> dict:
        return {
            "shape_encoder": self.shape_encoder.state_dict(),
            "shape_generator": self.shape_generator.state_dict(),
            "shape_discriminator": self.shape_discriminator.state_dict(),
            "generator": self.generator.state_dict(),
            "discriminator": self.discriminator.state_dict(),
        }

    def load_state_dicts(self, states: dict) -> None:
        for name, state in states.items():
            getattr(self, name).load_state_dict(state)

    def to(self, device) -> "ModelBundle":
        for m in self.generator_modules() + self.discriminator_modules():
            m.to(device)
        return self


@dataclass
class TrainBatch:
    x_gt: torch.Tensor       # B x 3 x H x W, [0, 1]
    s_gt: torch.Tensor       # B x C x H x W one-hot
    x_blanked: torch.Tensor
    s_blanked: torch.Tensor
    m: torch.Tensor          # B x 1 x H x W keep-mask
    m_s: torch.Tensor        # B x 64 x 64 canonical shapes (zeros when absent)
    c: torch.Tensor          # B x 2
    theta: torch.Tensor      # B x 6
    has_instance: torch.Tensor  # B bool
    rects: List[MaskRect] = field(default_factory=list)


def _chw(arr: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(arr)).permute(2, 0, 1).float()


def build_batch(scenes: list, instance_index: dict, rng: np.random.Generator,
                mode: str, num_classes: int, batch_size: int = 4,
                rects: Optional[list] = None) -> TrainBatch:
    """Assemble one training batch. When the sampled hole overlaps a modelled
    instance's bbox center, that instance's spec rides along for shape
    supervision; otherwise the instance slots stay zero."""
    picks = rng.integers(0, len(scenes), size=batch_size)
    xs, ss, xbs, sbs, ms = [], [], [], [], []
    m_s = torch.zeros(batch_size, 64, 64)
    c = torch.zeros(batch_size, 2)
    theta = torch.zeros(batch_size, 6)
    has_instance = torch.zeros(batch_size, dtype=torch.bool)
    used_rects = []
    for j, idx in enumerate(picks):
        scene: Scene = scenes[int(idx)]
        instances = instance_index.get(scene.id, [])
        if rects is not None:
            rect = rects[j]
        elif mode == "place":
            rect = sample_place_mask(rng, instances)
        else:
            rect = sample_restore_mask(rng)
        rect.id = scene.id
        masked = apply_mask(scene, rect, num_classes)
        supervised = None
        for record in instances:
            bx, by, bw, bh = record.bbox
            if rect.contains(bx + bw / 2, by + bh / 2):
                supervised = record
                break
        if supervised is not None:
            spec = extract_instance_spec(scene, supervised)
            m_s[j] = torch.from_numpy(spec.m_s)
            c[j] = torch.from_numpy(spec.c)
            theta[j] = torch.from_numpy(spec.theta.reshape(-1))
            has_instance[j] = True
        xs.append(_chw(scene.image))
        ss.append(_chw(one_hot(scene.label_map, num_classes)))
        xbs.append(_chw(masked.x_blanked))
        sbs.append(_chw(masked.s_blanked))
        ms.append(_chw(masked.m))
        used_rects.append(rect)
    return TrainBatch(
        x_gt=torch.stack(xs), s_gt=torch.stack(ss), x_blanked=torch.stack(xbs),
        s_blanked=torch.stack(sbs), m=torch.stack(ms), m_s=m_s, c=c, theta=theta,
        has_instance=has_instance, rects=used_rects,
    )


def _check_finite(terms: dict) -> None:
    for name, value in terms.items():
        if not torch.isfinite(torch.as_tensor(value)).all():
            raise NonFiniteLossError(name, float(value))


def instance_channel_from_shapes(m_hat: torch.Tensor, theta: torch.Tensor,
                                 has_instance: torch.Tensor, size: int) -> torch.Tensor:
    """Differentiable B x 1 x H x W instance channel; zero rows where no
    instance supervision exists."""
    channel = torch.zeros(m_hat.shape[0], 1, size, size, dtype=m_hat.dtype,
                          device=m_hat.device)
    if has_instance.any():
        placed = place_shape_torch(m_hat[has_instance], theta[has_instance], size)
        channel[has_instance] = placed[:, None]
    return channel


def train_step(batch: TrainBatch, bundle: ModelBundle, opt_g, opt_d,
               extractor, weights: dict,
               channel_dropout: float = 0.0) -> L.LossBundle:
    """One discriminator update followed by one generator update."""
    size = batch.x_gt.shape[-1]
    any_instance = bool(batch.has_instance.any())

    # shape branch forward (reparameterized; gradients flow into both encoders)
    if any_instance:
        sel = batch.has_instance
        post = bundle.shape_encoder(batch.m_s[sel], batch.c[sel], batch.theta[sel])
        z = sample_latent(post)
        m_hat_sel = bundle.shape_generator(z, batch.c[sel], batch.theta[sel])
        m_hat = torch.zeros_like(batch.m_s)
        m_hat[sel] = m_hat_sel
    else:
        post = None
        m_hat = torch.zeros_like(batch.m_s)
    inst_channel = instance_channel_from_shapes(m_hat, batch.theta, batch.has_instance, size)
    if channel_dropout > 0.0 and any_instance:
        keep = (torch.rand(inst_channel.shape[0]) >= channel_dropout).float()
        inst_channel = inst_channel * keep.view(-1, 1, 1, 1)

    out = bundle.generator(batch.x_blanked, batch.m, batch.s_blanked, inst_channel)
    x_filled01 = to_unit_range(out.x_filled)

    # --- discriminator update ---
    real_outs = bundle.discriminator(batch.x_gt, batch.s_gt)
    fake_outs_det = bundle.discriminator(x_filled01.detach(), batch.s_gt)
    adv = L.adversarial_losses([o[0] for o in real_outs], [o[0] for o in fake_outs_det])
    if any_instance:
        ds_real = bundle.shape_discriminator(batch.m_s[batch.has_instance])
        ds_fake = bundle.shape_discriminator(m_hat[batch.has_instance].detach())
        s_adv_d = shape_adversarial(ds_real, ds_fake)["d"]
    else:
        s_adv_d = torch.zeros(())
    d_total = adv["d"] + weights.get("shape_adv", 1.0) * s_adv_d
    opt_d.zero_grad(set_to_none=True)
    d_total.backward()
    opt_d.step()

    # --- generator update ---
    fake_outs = bundle.discriminator(x_filled01, batch.s_gt)
    with torch.no_grad():
        real_outs = bundle.discriminator(batch.x_gt, batch.s_gt)
    adv_g = L.adversarial_losses([o[0].detach() for o in real_outs],
                                 [o[0] for o in fake_outs])["g"]
    fm = L.feature_matching_loss([o[1] for o in real_outs], [o[1] for o in fake_outs])
    terms = {
        "adv_g": adv_g,
        "pixel_rec": L.pixel_rec_loss(x_filled01, batch.x_gt, batch.m),
        "perceptual": L.perceptual_loss(x_filled01, batch.x_gt, extractor),
        "style": L.style_loss(x_filled01, batch.x_gt, extractor),
        "feature_match": fm,
        "seg_ms": L.seg_multiscale_loss(out.scale_segs, batch.s_gt),
        "adv_d": d_total.detach(),
        "shape_adv_d": (s_adv_d.detach() if isinstance(s_adv_d, torch.Tensor) else s_adv_d),
    }
    if any_instance:
        s_losses = shape_losses(batch.m_s[batch.has_instance],
                                m_hat[batch.has_instance], post)
        ds_fake_g = bundle.shape_discriminator(m_hat[batch.has_instance])
        terms["vae"] = s_losses["vae"]
        terms["inst_rec"] = s_losses["inst_rec"]
        terms["shape_adv_g"] = shape_adversarial(torch.ones_like(ds_fake_g), ds_fake_g)["g"]
    else:
        terms["vae"] = torch.zeros(())
        terms["inst_rec"] = torch.zeros(())
        terms["shape_adv_g"] = torch.zeros(())
    _check_finite(terms)
    bundle_losses = L.LossBundle(terms=terms, weights=weights)
    g_total = (bundle_losses.generator_total()
               + weights.get("vae", 5.0) * terms["vae"]
               + weights.get("inst_rec", 20.0) * terms["inst_rec"]
               + weights.get("shape_adv", 1.0) * terms["shape_adv_g"])
    opt_g.zero_grad(set_to_none=True)
    g_total.backward()
    opt_g.step()
    return bundle_losses


def shape_pretrain_step(batch: TrainBatch, bundle: ModelBundle, opt_g, opt_d,
                        weights: dict) -> dict:
    """Staged training: update only the shape VAE-GAN on instance-bearing
    samples; the inpainting network is untouched."""
    if not bool(batch.has_instance.any()):
        return {}
    sel = batch.has_instance
    post = bundle.shape_encoder(batch.m_s[sel], batch.c[sel], batch.theta[sel])
    z = sample_latent(post)
    m_hat = bundle.shape_generator(z, batch.c[sel], batch.theta[sel])

    ds_real = bundle.shape_discriminator(batch.m_s[sel])
    ds_fake = bundle.shape_discriminator(m_hat.detach())
    d_loss = shape_adversarial(ds_real, ds_fake)["d"]
    opt_d.zero_grad(set_to_none=True)
    d_loss.backward()
    opt_d.step()

    s_losses = shape_losses(batch.m_s[sel], m_hat, post)
    ds_fake_g = bundle.shape_discriminator(m_hat)
    g_adv = shape_adversarial(torch.ones_like(ds_fake_g), ds_fake_g)["g"]
    g_loss = (weights.get("vae", 5.0) * s_losses["vae"]
              + weights.get("inst_rec", 20.0) * s_losses["inst_rec"]
              + weights.get("shape_adv", 1.0) * g_adv)
    opt_g.zero_grad(set_to_none=True)
    g_loss.backward()
    opt_g.step()
    return {"vae": float(s_losses["vae"]), "inst_rec": float(s_losses["inst_rec"]),
            "shape_adv_g": float(g_adv), "shape_adv_d": float(d_loss)}


def prepare_scenes(data_root, profile: Profile, split: str = "train",
                   seed: int = 0, skip_preprocess: bool = False) -> tuple:
    """Load, aggregate and crop every scene of a split; index its instances."""
    agg = (ClassAggregation.shipped(profile.aggregation_table)
           if profile.aggregation_table else None)
    scenes = []
    instance_index = {}
    for i, scene_id in enumerate(list_scene_ids(data_root, split)):
        scene = load_scene(data_root, split, scene_id)
        if agg is not None:
            scene = aggregate_classes(scene, agg)
        if not skip_preprocess:
            scene = resize_and_crop(scene, seed=seed * 100003 + i,
                                    height=profile.resize_height,
                                    width=profile.resize_width)
        scenes.append(scene)
        instance_index[scene.id] = index_instances(
            scene, profile.car_class, profile.pedestrian_class)
    return scenes, instance_index


def location_prior(scenes: list, instance_index: dict, image_size: int = 256) -> dict:
    """Empirical distribution of normalized instance locations per class."""
    prior = {"car": [], "pedestrian": []}
    for scene in scenes:
        for record in instance_index.get(scene.id, []):
            x, y, w, h = record.bbox
            prior[record.class_label].append(
                [(x + w / 2) / scene.width, (y + h / 2) / scene.height,
                 w / scene.width, h / scene.height])
    return prior


def save_checkpoint(bundle: ModelBundle, opt_g, opt_d, step: int,
                    settings: TrainSettings, path) -> None:
    torch.save({
        "models": bundle.state_dicts(),
        "opt_g": opt_g.state_dict() if opt_g is not None else None,
        "opt_d": opt_d.state_dict() if opt_d is not None else None,
        "step": step,
        "settings": settings.to_mapping(),
        "num_classes": bundle.generator_config.num_classes,
        "location_prior": bundle.location_prior,
        "torch_rng": torch.get_rng_state(),
    }, path)


def load_checkpoint(path, device: str = "cpu") -> tuple:
    """Returns (bundle, checkpoint dict)."""
    ckpt = torch.load(path, map_location=device, weights_only=False)
    settings = TrainSettings.from_mapping(ckpt["settings"])
    bundle = ModelBundle.build(ckpt["num_classes"], settings).to(device)
    bundle.load_state_dicts(ckpt["models"])
    bundle.location_prior = ckpt.get("location_prior", {})
    return bundle, ckpt


def _log_line(step: int, scalars: dict, wall_s: float) -> str:
    parts = [f"step={step}"]
    parts += [f"{k}={scalars.get(k, 0.0):.6f}" for k in METRIC_FIELDS]
    parts.append(f"wall_s={wall_s:.3f}")
    return " ".join(parts)


def parse_log_line(line: str) -> dict:
    out = {}
    for token in line.split(" "):
        key, _, val = token.partition("=")
        out[key] = float(val)
    return out


def train(settings: TrainSettings, data_root, profile: Profile, run_dir,
          mode: str = "place", resume: Optional[str] = None) -> Path:
    """Run the training loop; writes config snapshot, metrics log, checkpoints
    and the final model into `run_dir`. Deterministic given the seed: every
    step reseeds both RNGs from (seed, step), so resumed runs continue
    bit-identically."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    device = settings.device

    scenes, instance_index = prepare_scenes(data_root, profile, "train", settings.seed)
    if not scenes:
        raise FileNotFoundError(f"no training scenes under {data_root}")
    steps = settings.steps or max(1, settings.epochs * len(scenes) // settings.batch_size)

    if resume:
        bundle, ckpt = load_checkpoint(resume, device)
        start_step = ckpt["step"]
    else:
        torch.manual_seed(settings.seed)
        bundle = ModelBundle.build(profile.num_classes, settings).to(device)
        bundle.location_prior = location_prior(scenes, instance_index)
        start_step = 0
    opt_g = torch.optim.Adam(bundle.generator_parameters(), lr=settings.lr,
                             betas=(settings.beta1, settings.beta2))
    opt_d = torch.optim.Adam(bundle.discriminator_parameters(), lr=settings.lr,
                             betas=(settings.beta1, settings.beta2))
    if resume:
        if ckpt["opt_g"]:
            opt_g.load_state_dict(ckpt["opt_g"])
        if ckpt["opt_d"]:
            opt_d.load_state_dict(ckpt["opt_d"])

    extractor = L.StubFeatureExtractor(seed=0).to(device)
    write_config({**settings.to_mapping(), "profile": profile.name, "mode": mode,
                  "steps": steps}, run_dir / "config.snapshot")

    log_path = run_dir / "metrics.log"
    log_file = open(log_path, "a" if resume else "w")
    if not resume:
        log_file.write("# step " + " ".join(METRIC_FIELDS) + " wall_s\n")
    t0 = time.monotonic()
    for step in range(start_step + 1, steps + 1):
        if settings.lr_decay_start and step > settings.lr_decay_start:
            # linear decay to zero over the remaining steps, recomputed from
            # the step index so resumed runs stay bit-identical
            frac = (steps - step + 1) / max(1, steps - settings.lr_decay_start)
            for opt in (opt_g, opt_d):
                for group in opt.param_groups:
                    group["lr"] = settings.lr * frac
        torch.manual_seed(settings.seed * 7919 + step)
        rng = np.random.default_rng((settings.seed * 1000003 + step) % (2 ** 63))
        batch = build_batch(scenes, instance_index, rng, mode,
                            profile.num_classes, settings.batch_size)
        if step <= settings.pretrain_shape_steps:
            scalars = shape_pretrain_step(batch, bundle, opt_g, opt_d,
                                          settings.loss_weights)
            losses = None
        else:
            losses = train_step(batch, bundle, opt_g, opt_d, extractor,
                                settings.loss_weights,
                                channel_dropout=settings.instance_channel_dropout)
            scalars = losses.scalars()
        if step % settings.log_every == 0 or step == steps:
            log_file.write(_log_line(step, scalars, time.monotonic() - t0) + "\n")
            log_file.flush()
        if settings.checkpoint_every and step % settings.checkpoint_every == 0:
            save_checkpoint(bundle, opt_g, opt_d, step, settings,
                            run_dir / f"ckpt_{step}.bin")
    log_file.close()
    save_checkpoint(bundle, opt_g, opt_d, steps, settings, run_dir / "final.bin")
    return run_dir
