"""Command-line entry points: prepare, gen-masks, train, eval, infer, serve."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import numpy as np

from . import evaluation
from .config import TrainSettings, get_profile, read_config
from .errors import SgiError


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Flat key = value config file.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--profile", type=click.Choice(["cityscapes", "idd", "fixture"]),
              default="fixture", show_default=True)
@click.pass_context
def main(ctx, config_path, seed, profile):
    """Semantic-guided inpainting of urban scenes."""
    ctx.ensure_object(dict)
    values = read_config(config_path) if config_path else {}
    values.setdefault("seed", seed)
    ctx.obj["values"] = values
    ctx.obj["seed"] = int(values.get("seed", seed))
    ctx.obj["profile"] = get_profile(values.get("profile", profile))


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@main.command()
@click.option("--data-root", type=click.Path(), required=True)
@click.option("--n-train", type=int, default=8, show_default=True)
@click.option("--n-val", type=int, default=2, show_default=True)
@click.pass_context
def prepare(ctx, data_root, n_train, n_val):
    """Generate the synthetic fixture dataset (fixture profile) or validate an
    existing dataset tree."""
    profile = ctx.obj["profile"]
    try:
        if profile.name == "fixture":
            from .data.fixtures import make_fixture_dataset
            ids = make_fixture_dataset(data_root, n_train, n_val, seed=ctx.obj["seed"])
            click.echo(f"wrote {len(ids)} fixture scenes to {data_root}")
        else:
            from .training import prepare_scenes
            scenes, index = prepare_scenes(data_root, profile, "train", ctx.obj["seed"])
            n_inst = sum(len(v) for v in index.values())
            click.echo(f"validated {len(scenes)} scenes, {n_inst} valid instances")
    except (SgiError, OSError) as exc:
        _fail(str(exc))


@main.command("gen-masks")
@click.option("--data-root", type=click.Path(exists=True), required=True)
@click.option("--split", default="val", show_default=True)
@click.option("--task", type=click.Choice(["restore", "place"]), default="restore",
              show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def gen_masks(ctx, data_root, split, task, out):
    """Sample one evaluation mask per scene and write the manifest."""
    from .masking import sample_place_mask, sample_restore_mask, write_manifest
    from .training import prepare_scenes

    profile = ctx.obj["profile"]
    seed = ctx.obj["seed"]
    try:
        scenes, index = prepare_scenes(data_root, profile, split, seed)
        if not scenes:
            _fail(f"no scenes in split {split!r} under {data_root}")
        entries = []
        for scene in scenes:
            # per-id rng: parallel generation is order-independent
            sub_seed = (seed * 2654435761 + hash(scene.id)) % (2 ** 63)
            rng = np.random.default_rng(sub_seed)
            if task == "place":
                rect = sample_place_mask(rng, index.get(scene.id, []))
            else:
                rect = sample_restore_mask(rng)
            rect.id = scene.id
            rect.seed = sub_seed
            entries.append(rect)
        write_manifest(entries, out)
        click.echo(f"wrote {len(entries)} masks to {out}")
    except (SgiError, OSError) as exc:
        _fail(str(exc))


@main.command()
@click.option("--data-root", type=click.Path(exists=True), required=True)
@click.option("--run-dir", type=click.Path(), required=True)
@click.option("--steps", type=int, default=0, help="0 = derive from profile epochs.")
@click.option("--batch-size", type=int, default=4, show_default=True)
@click.option("--mode", type=click.Choice(["restore", "place"]), default="place",
              show_default=True)
@click.option("--width-mult", type=float, default=None,
              help="Channel width multiplier (fixture profile defaults to 0.25).")
@click.option("--resume", type=click.Path(exists=True), default=None)
@click.pass_context
def train(ctx, data_root, run_dir, steps, batch_size, mode, width_mult, resume):
    """Train the full model; writes checkpoints and metrics.log to RUN_DIR."""
    from .training import train as run_train

    profile = ctx.obj["profile"]
    settings = TrainSettings.from_mapping(ctx.obj["values"])
    settings.seed = ctx.obj["seed"]
    settings.batch_size = batch_size
    settings.epochs = profile.epochs
    if steps:
        settings.steps = steps
    if width_mult is not None:
        settings.width_mult = width_mult
    elif profile.name == "fixture" and "width_mult" not in ctx.obj["values"]:
        settings.width_mult = 0.125
    settings.device = os.environ.get("SGI_DEVICE", settings.device)
    try:
        run_train(settings, data_root, profile, run_dir, mode=mode, resume=resume)
        click.echo(f"run complete: {run_dir}")
    except (SgiError, OSError) as exc:
        _fail(str(exc))


def _pooled_features(extractor):
    import torch

    def fn(image: np.ndarray) -> np.ndarray:
        x = torch.from_numpy(np.ascontiguousarray(image)).permute(2, 0, 1).float()[None]
        with torch.no_grad():
            taps = extractor(x)
        return taps[-1].mean(dim=(2, 3))[0].numpy()

    return fn


@main.command("eval")
@click.option("--data-root", type=click.Path(exists=True), required=True)
@click.option("--split", default="val", show_default=True)
@click.option("--task", type=click.Choice(["restore", "place"]), default="restore",
              show_default=True)
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def eval_cmd(ctx, data_root, split, task, manifest, checkpoint, out):
    """Run the restore/place benchmark over a mask manifest."""
    from .data.scenes import one_hot
    from .inference import infer
    from .losses import StubFeatureExtractor
    from .masking import keep_mask, read_manifest
    from .training import load_checkpoint, prepare_scenes

    profile = ctx.obj["profile"]
    try:
        bundle, _ = load_checkpoint(checkpoint)
        scenes, index = prepare_scenes(data_root, profile, split, ctx.obj["seed"])
        scene_map = {s.id: s for s in scenes}
        entries = read_manifest(manifest)

        def infer_fn(scene, rect):
            seg = one_hot(scene.label_map, profile.num_classes)
            class_label = None
            if task == "place":
                records = {r.instance_id: r for r in index.get(scene.id, [])}
                rec = records.get(rect.target_instance)
                class_label = rec.class_label if rec else "car"
            result = infer(bundle, scene.image, keep_mask(rect, scene.height), seg,
                           mode=task if task == "place" else "restore",
                           class_label=class_label, seed=rect.seed % (2 ** 32))
            return result.image

        report, rows = evaluation.run_benchmark(
            infer_fn, scene_map, entries, task,
            _pooled_features(StubFeatureExtractor(seed=0)),
            manifest_path=manifest, model_id=str(checkpoint))
        evaluation.write_report(report, rows, out)
        click.echo(report.as_text())
    except (SgiError, OSError, KeyError) as exc:
        _fail(str(exc))


@main.command()
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--image", "image_path", type=click.Path(exists=True), required=True)
@click.option("--mask", "mask_path", type=click.Path(exists=True), required=True,
              help="8-bit PNG, 0 = hole.")
@click.option("--seg", "seg_path", type=click.Path(exists=True), default=None)
@click.option("--mode", type=click.Choice(["restore", "place", "precise_removal",
                                           "mask_insertion"]), default="restore")
@click.option("--class-label", type=click.Choice(["car", "pedestrian"]), default=None)
@click.option("--instance-mask", "instance_mask_path", type=click.Path(exists=True),
              default=None)
@click.option("--variants", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Output PNG path prefix.")
@click.pass_context
def infer(ctx, checkpoint, image_path, mask_path, seg_path, mode, class_label,
          instance_mask_path, variants, out):
    """Inpaint a single image from files."""
    from PIL import Image

    from .data.scenes import one_hot
    from .inference import infer as run_infer
    from .masking import mask_from_png
    from .training import load_checkpoint

    try:
        bundle, _ = load_checkpoint(checkpoint)
        image = np.asarray(Image.open(image_path).convert("RGB"), dtype=np.float32) / 255.0
        keep = mask_from_png(mask_path)
        seg = None
        if seg_path:
            ids = np.asarray(Image.open(seg_path), dtype=np.int32)
            seg = one_hot(ids, bundle.generator_config.num_classes)
        instance_mask = None
        if instance_mask_path:
            instance_mask = mask_from_png(instance_mask_path)[..., 0]
            instance_mask = 1.0 - instance_mask  # PNG is 0 = hole; silhouette is 1 = object
        seed = ctx.obj["seed"]
        for i in range(variants):
            result = run_infer(bundle, image, keep.copy(), seg, mode=mode,
                               class_label=class_label, instance_mask=instance_mask,
                               seed=seed + i)
            suffix = f"_{seed + i}" if variants > 1 else ""
            out_path = Path(out)
            target = out_path.with_name(out_path.stem + suffix + out_path.suffix)
            Image.fromarray((np.clip(result.image, 0, 1) * 255).round().astype(np.uint8)).save(target)
            Image.fromarray(result.seg.astype(np.uint8)).save(
                target.with_name(target.stem + "_seg" + target.suffix))
            click.echo(f"wrote {target} (seed {seed + i})")
    except (SgiError, OSError) as exc:
        _fail(str(exc))


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
def serve(port, host, checkpoint):
    """Serve the inference endpoint for the browser editor."""
    import uvicorn

    from .service import create_app
    from .training import load_checkpoint

    try:
        bundle, _ = load_checkpoint(checkpoint, device=os.environ.get("SGI_DEVICE", "cpu"))
    except (SgiError, OSError) as exc:
        _fail(str(exc))
        return
    uvicorn.run(create_app(bundle), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
