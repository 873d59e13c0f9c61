import json
import subprocess
import sys

import numpy as np
import pytest

from incepdehaze.cli import main
from incepdehaze.data import load_image, save_image

from test_data import make_inputs, tree_bytes


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def synth(src, dst, *extra):
    return ["synth", "--in", src, "--out", dst, "--width", 32, "--height", 24, *extra]


class TestSynth:
    def test_dry_run_full_scale(self, capsys):
        code, out, _ = run(["synth", "--dry-run", "--count", 1159, "--splits", 1041, 59, 59], capsys)
        plan = json.loads(out)
        assert code == 0 and plan["clear"] == 1159 and plan["hazy"] == 3477

    def test_dry_run_counts_inputs(self, tmp_path, capsys):
        make_inputs(tmp_path / "in", n=4)
        code, out, _ = run(["synth", "--dry-run", "--in", tmp_path / "in"], capsys)
        assert code == 0 and json.loads(out)["hazy"] == 12

    def test_rerun_identical(self, tmp_path, capsys):
        make_inputs(tmp_path / "in", n=10)
        for out in ("a", "b"):
            code, text, _ = run(synth(tmp_path / "in", tmp_path / out, "--splits", 8, 1, 1, "--seed", 11), capsys)
            assert code == 0 and json.loads(text)["hazy"] == 30
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_root_and_env_seed(self, tmp_path, capsys, monkeypatch):
        make_inputs(tmp_path / "in", n=2)
        monkeypatch.setenv("INCEPDEHAZE_SEED", "11")
        assert run(["--root", tmp_path, *synth("in", "env")], capsys)[0] == 0
        monkeypatch.delenv("INCEPDEHAZE_SEED")
        assert run(synth("in", "flag", "--root", tmp_path, "--seed", 11), capsys)[0] == 0
        assert tree_bytes(tmp_path / "env") == tree_bytes(tmp_path / "flag")

    def test_bad_env_seed(self, monkeypatch, capsys):
        monkeypatch.setenv("INCEPDEHAZE_SEED", "abc")
        code, _, err = run(["synth", "--dry-run", "--count", 3], capsys)
        assert code == 1 and "INCEPDEHAZE_SEED" in err

    def test_unpaired_aborts(self, tmp_path, capsys):
        make_inputs(tmp_path / "in", n=2)
        (tmp_path / "in" / "img00.depth.pfm").unlink()
        code, _, err = run(synth(tmp_path / "in", tmp_path / "o"), capsys)
        assert code == 1 and "img00" in err
        assert run(synth(tmp_path / "in", tmp_path / "o", "--allow-partial"), capsys)[0] == 0


class TestErrors:
    def test_unknown_flag(self, capsys):
        code, _, err = run(["synth", "--bogus"], capsys)
        assert code == 1 and "--bogus" in err

    def test_no_command(self, capsys):
        assert run([], capsys)[0] == 1

    def test_missing_dir(self, tmp_path, capsys):
        code, _, err = run(["eval", "--pred", tmp_path / "x", "--ref", tmp_path / "y"], capsys)
        assert code == 1 and "error" in err

    def test_module_entry(self):
        res = subprocess.run([sys.executable, "-m", "incepdehaze", "synth", "--bogus"], capture_output=True, text=True)
        assert res.returncode == 1


class TestEval:
    def test_identical(self, tmp_path, rng, capsys):
        for d in ("p", "r"):
            (tmp_path / d).mkdir()
        for i in range(2):
            img = rng.random((24, 24, 3))
            save_image(img, tmp_path / "p" / f"{i}.png")
            save_image(img, tmp_path / "r" / f"{i}.png")
        code, out, _ = run(["eval", "--pred", tmp_path / "p", "--ref", tmp_path / "r", "--per-image"], capsys)
        res = json.loads(out)
        assert code == 0
        assert res["psnr"] == "inf" and res["ssim"] == pytest.approx(1.0, abs=1e-9)
        assert res["fsim"] == pytest.approx(1.0, abs=1e-6)
        assert len(res["per_image"]) == 2

    def test_unpaired(self, tmp_path, rng, capsys):
        for d in ("p", "r"):
            (tmp_path / d).mkdir()
        save_image(rng.random((8, 8, 3)), tmp_path / "p" / "a.png")
        save_image(rng.random((8, 8, 3)), tmp_path / "r" / "b.png")
        code, _, err = run(["eval", "--pred", tmp_path / "p", "--ref", tmp_path / "r"], capsys)
        assert code == 1 and "a.png" in err


def test_detmetrics(tmp_path, capsys):
    (tmp_path / "gt.txt").write_text("img1 0 0 0 10 10\nimg1 1 20 20 30 30\n")
    (tmp_path / "pred.txt").write_text("img1 0 0.9 0 0 10 10\nimg1 1 0.8 50 50 60 60\n")
    code, out, _ = run(["detmetrics", "--pred", tmp_path / "pred.txt", "--gt", tmp_path / "gt.txt"], capsys)
    res = json.loads(out)
    assert code == 0 and res["mAP"] == pytest.approx(0.5) and res["mIoU"] == pytest.approx(1.0)
    (tmp_path / "bad.txt").write_text("img1 0 0 0\n")
    code, _, err = run(["detmetrics", "--pred", tmp_path / "bad.txt", "--gt", tmp_path / "gt.txt"], capsys)
    assert code == 1 and "bad.txt:1" in err


def test_gradcheck(capsys):
    code, out, _ = run(["gradcheck"], capsys)
    assert code == 0
    assert "generator[end-to-end]" in out and "FAIL" not in out


def test_bench(capsys):
    code, out, _ = run(["bench", "--width", 32, "--height", 24, "--repeats", 1], capsys)
    res = json.loads(out)
    assert code == 0 and res["resolution"] == [32, 24] and res["ssim_per_s"] > 0


def test_train_dehaze_eval(tmp_path, capsys):
    make_inputs(tmp_path / "in", n=4)
    assert run(synth(tmp_path / "in", tmp_path / "ds", "--k", 1, "--splits", 3, 1, 0), capsys)[0] == 0
    train = ["train", "--manifest", tmp_path / "ds" / "manifest.jsonl", "--out", tmp_path / "run",
             "--base-width", 4, "--num-stages", 2, "--disc-base-width", 4, "--size", 32, 32, "--batch-size", 2]
    code, out, _ = run(train + ["--epochs", 1], capsys)
    assert code == 0 and json.loads(out)["epochs_run"] == 1
    assert len((tmp_path / "run" / "train_log.jsonl").read_text().splitlines()) == 1
    ckpt = sorted((tmp_path / "run").glob("*.ckpt"))[-1]
    code, out, _ = run(train + ["--epochs", 2, "--resume", ckpt], capsys)
    assert code == 0 and json.loads(out)["epochs_run"] == 1

    ckpt = sorted((tmp_path / "run").glob("*.ckpt"))[-1]
    code, out, _ = run(["dehaze", "--checkpoint", ckpt, "--in", tmp_path / "ds" / "clear", "--out", tmp_path / "pred"], capsys)
    assert code == 0 and json.loads(out)["images"] == 4
    first = sorted((tmp_path / "pred").glob("*.png"))[0]
    assert load_image(first).shape == (24, 32, 3)
    code, out, _ = run(["eval", "--pred", tmp_path / "pred", "--ref", tmp_path / "ds" / "clear", "--no-fsim"], capsys)
    assert code == 0 and json.loads(out)["fsim"] is None
