from __future__ import annotations

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from sgi.cli import main


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory, runner):
    ws = tmp_path_factory.mktemp("cli")
    data = ws / "data"
    result = runner.invoke(main, ["--profile", "fixture", "prepare",
                                  "--data-root", str(data),
                                  "--n-train", "2", "--n-val", "2"])
    assert result.exit_code == 0, result.output
    return ws, data


@pytest.fixture(scope="module")
def trained(runner, workspace):
    ws, data = workspace
    run_dir = ws / "run"
    result = runner.invoke(main, [
        "--profile", "fixture", "--seed", "0", "train",
        "--data-root", str(data), "--run-dir", str(run_dir),
        "--steps", "2", "--width-mult", "0.0625"])
    assert result.exit_code == 0, result.output
    return run_dir / "final.bin"


def test_unknown_flag_exit_2(runner):
    result = runner.invoke(main, ["--bogus"])
    assert result.exit_code == 2


def test_unknown_profile_exit_2(runner):
    result = runner.invoke(main, ["--profile", "kitti", "prepare",
                                  "--data-root", "x"])
    assert result.exit_code == 2


def test_prepare_writes_layout(workspace):
    _, data = workspace
    assert sorted(p.name for p in (data / "images" / "train").iterdir()) == [
        "fixture_000.png", "fixture_001.png"]
    assert (data / "labels" / "val" / "fixture_002.png").exists()


def test_gen_masks_deterministic(runner, workspace):
    ws, data = workspace
    paths = [ws / "m1.txt", ws / "m2.txt"]
    for path in paths:
        result = runner.invoke(main, [
            "--profile", "fixture", "--seed", "7", "gen-masks",
            "--data-root", str(data), "--split", "val", "--task", "place",
            "--out", str(path)])
        assert result.exit_code == 0, result.output
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_text().startswith("# sgi-mask-manifest v1\n")


def test_gen_masks_missing_split_exit_1(runner, workspace):
    ws, data = workspace
    result = runner.invoke(main, [
        "--profile", "fixture", "gen-masks", "--data-root", str(data),
        "--split", "test", "--out", str(ws / "none.txt")])
    assert result.exit_code == 1
    assert "error:" in result.output


def test_train_writes_run_dir(trained):
    run_dir = trained.parent
    assert trained.exists()
    assert (run_dir / "config.snapshot").exists()
    log = (run_dir / "metrics.log").read_text().splitlines()
    assert log[0].startswith("# step ")
    assert log[-1].startswith("step=2 ")  # final step always logged


def test_eval_writes_report(runner, workspace, trained):
    ws, data = workspace
    manifest = ws / "eval_masks.txt"
    result = runner.invoke(main, [
        "--profile", "fixture", "--seed", "7", "gen-masks",
        "--data-root", str(data), "--split", "val", "--task", "restore",
        "--out", str(manifest)])
    assert result.exit_code == 0, result.output
    report = ws / "report.txt"
    result = runner.invoke(main, [
        "--profile", "fixture", "eval", "--data-root", str(data),
        "--split", "val", "--task", "restore", "--manifest", str(manifest),
        "--checkpoint", str(trained), "--out", str(report)])
    assert result.exit_code == 0, result.output
    assert "PSNR" in report.read_text()
    assert (ws / "report.rows.txt").exists()


def test_infer_writes_outputs(runner, workspace, trained, tmp_path):
    _, data = workspace
    image_path = data / "images" / "train" / "fixture_000.png"
    mask = np.full((256, 512), 255, dtype=np.uint8)
    mask[60:140, 100:200] = 0
    mask_path = tmp_path / "mask.png"
    Image.fromarray(mask).save(mask_path)
    out = tmp_path / "out.png"
    result = runner.invoke(main, [
        "--seed", "5", "infer", "--checkpoint", str(trained),
        "--image", str(image_path), "--mask", str(mask_path),
        "--seg", str(data / "labels" / "train" / "fixture_000.png"),
        "--mode", "restore", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert out.exists()
    assert (tmp_path / "out_seg.png").exists()
    produced = np.asarray(Image.open(out))
    original = np.asarray(Image.open(image_path))
    keep = mask == 255
    np.testing.assert_array_equal(produced[keep], original[keep])


def test_infer_missing_checkpoint_exit_2(runner, tmp_path):
    result = runner.invoke(main, [
        "infer", "--checkpoint", str(tmp_path / "nope.bin"),
        "--image", "a.png", "--mask", "b.png", "--out", "c.png"])
    assert result.exit_code == 2
