from __future__ import annotations

import itertools

import numpy as np
import pytest

from sgi.data.fixtures import make_fixture_scene
from sgi.errors import DimensionMismatchError, TooFewSamplesError
from sgi.evaluation import (Detection, MetricReport, StubDetector, f1_insertion,
                            fid, psnr, run_benchmark, write_report)
from sgi.masking import MaskRect


class TestPsnr:
    def test_identical_images_capped(self):
        a = np.random.default_rng(0).random((8, 8, 3))
        assert psnr(a, a.copy()) == 100.0

    def test_closed_form(self):
        a = np.zeros((10, 10))
        b = np.full((10, 10), 0.1)  # MSE = 0.01
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-6)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a, b = rng.random((8, 8)), rng.random((8, 8))
        assert psnr(a, b) == pytest.approx(psnr(b, a), abs=1e-12)

    def test_monotone_in_noise(self):
        rng = np.random.default_rng(2)
        base = rng.random((32, 32, 3))
        noise = rng.standard_normal(base.shape)
        values = [psnr(base, base + amp * noise) for amp in (0.01, 0.05, 0.2)]
        assert values[0] > values[1] > values[2]

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            psnr(np.zeros((4, 4)), np.zeros((5, 5)))


class TestFid:
    def test_identical_sets_near_zero(self):
        feats = np.random.default_rng(0).random((64, 8))
        assert abs(fid(feats, feats.copy())) <= 1e-3

    def test_1d_closed_form(self):
        half = np.sqrt(0.5)
        a = np.array([[-half], [half]])          # mean 0, var 1
        b = np.array([[1 - half], [1 + half]])   # mean 1, var 1
        assert fid(a, b) == pytest.approx(1.0, abs=1e-6)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a, b = rng.random((16, 4)), rng.random((16, 4)) + 0.5
        assert fid(a, b) == pytest.approx(fid(b, a), abs=1e-6)

    def test_sample_order_and_dim_permutation_invariance(self):
        rng = np.random.default_rng(4)
        a, b = rng.random((20, 5)), rng.random((20, 5)) + 0.3
        base = fid(a, b)
        assert fid(a[::-1], b[::-1]) == pytest.approx(base, abs=1e-8)
        perm = rng.permutation(5)
        assert fid(a[:, perm], b[:, perm]) == pytest.approx(base, abs=1e-8)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamplesError):
            fid(np.zeros((1, 4)), np.zeros((8, 4)))


def _brute_force_f1(results, task, thr=0.3):
    from sgi.evaluation import MODELLED_CLASSES, _iou
    tp = fp = fn = 0
    for detections, target, rect in results:
        hits = [d for d in detections if d.class_name in MODELLED_CLASSES
                and _iou(d.bbox, rect) > thr]
        good = [d for d in hits if task != "place" or d.class_name == target]
        bad = [d for d in hits if task == "place" and d.class_name != target]
        fp += len(bad)
        if good:
            tp += 1
        else:
            fn += 1
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


class TestF1:
    RECT = (100, 100, 50, 50)

    def test_perfect(self):
        results = [([Detection("car", self.RECT)], "car", self.RECT)] * 4
        assert f1_insertion(results, "place") == 1.0

    def test_nothing_detected(self):
        results = [([], "car", self.RECT)] * 4
        assert f1_insertion(results, "place") == 0.0

    def test_counting_example(self):
        # 2 TP, 1 FP (wrong class in rect), 1 FN
        results = [
            ([Detection("car", self.RECT)], "car", self.RECT),
            ([Detection("car", self.RECT),
              Detection("pedestrian", self.RECT)], "car", self.RECT),
            ([], "car", self.RECT),
        ]
        assert f1_insertion(results, "place") == pytest.approx(2 / 3)

    def test_restore_any_modelled_class_counts(self):
        results = [([Detection("pedestrian", self.RECT)], "car", self.RECT)]
        assert f1_insertion(results, "restore") == 1.0

    def test_low_iou_ignored(self):
        far = (0, 0, 20, 20)
        results = [([Detection("car", far)], "car", self.RECT)]
        assert f1_insertion(results, "place") == 0.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        classes = ["car", "pedestrian", "tree"]
        for case, task in itertools.product(range(10), ("place", "restore")):
            results = []
            for _ in range(6):
                rect = tuple(float(v) for v in rng.integers(0, 100, 4) + 20)
                dets = [Detection(classes[int(rng.integers(0, 3))],
                                  tuple(float(v) for v in rng.integers(0, 100, 4) + 20))
                        for _ in range(int(rng.integers(0, 4)))]
                results.append((dets, "car", rect))
            assert f1_insertion(results, task) == pytest.approx(
                _brute_force_f1(results, task))


class TestBenchmark:
    def _scenes(self, n=4):
        scenes = {}
        entries = []
        for i in range(n):
            sid = f"s{i}"
            scenes[sid] = make_fixture_scene(sid, seed=i, height=256, width=256)
            entries.append(MaskRect(20, 20, 64, 64, "restore", None, i, sid))
        return scenes, entries

    @staticmethod
    def _features(image):
        return image.mean(axis=(0, 1))

    def test_oracle_model(self):
        scenes, entries = self._scenes()
        report, rows = run_benchmark(lambda s, r: s.image, scenes, entries,
                                     "restore", self._features)
        assert report.psnr_mean == 100.0
        assert abs(report.fid) <= 1e-6
        assert report.n_images == 4
        assert len(rows) == 4

    def test_constant_gray_model(self):
        scenes, entries = self._scenes()
        gray = np.full((256, 256, 3), 0.5, dtype=np.float32)
        report, _ = run_benchmark(lambda s, r: gray, scenes, entries,
                                  "restore", self._features)
        expected = np.mean([psnr(gray, s.image) for s in scenes.values()])
        assert report.psnr_mean == pytest.approx(expected, abs=1e-9)

    def test_deterministic_and_detector(self):
        scenes, entries = self._scenes()
        planted = {e.id: [Detection("car", (e.x, e.y, e.w, e.h))] for e in entries}
        kwargs = dict(detector=StubDetector(planted), manifest_path="m.txt",
                      model_id="ckpt")
        r1, rows1 = run_benchmark(lambda s, r: s.image, scenes, entries, "restore",
                                  self._features, **kwargs)
        r2, rows2 = run_benchmark(lambda s, r: s.image, scenes, entries, "restore",
                                  self._features, **kwargs)
        assert r1 == r2
        assert rows1 == rows2
        assert r1.f1 == 1.0

    def test_unknown_id(self):
        scenes, entries = self._scenes()
        entries[0].id = "missing"
        with pytest.raises(KeyError):
            run_benchmark(lambda s, r: s.image, scenes, entries, "restore",
                          self._features)

    def test_write_report(self, tmp_path):
        scenes, entries = self._scenes()
        report, rows = run_benchmark(lambda s, r: s.image, scenes, entries,
                                     "restore", self._features)
        out = tmp_path / "report.txt"
        write_report(report, rows, out)
        text = out.read_text()
        assert "PSNR" in text and "FID (small-sample)" in text
        assert (tmp_path / "report.rows.txt").read_text().count("\n") == 4


def test_metric_report_text():
    report = MetricReport("place", 30.0, 1.5, 0.9, 10, "m.txt", "final.bin")
    text = report.as_text()
    assert "place" in text and "30.0000" in text and "0.9000" in text
