import csv
import json
import os
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from svcuep import cli
from svcuep.errors import ConfigError
from svcuep.uep import PUBLISHED_MODEL, SweepConfig
from svcuep.video import synth_video, write_yuv420


def run_cli(args, capsys=None):
    code = cli.main([str(a) for a in args])
    err = capsys.readouterr().err if capsys else ""
    return code, err


def error_record(err):
    lines = [l for l in err.splitlines() if l.strip()]
    assert len(lines) == 1
    return json.loads(lines[0])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# tiny, fast sweep settings for end-to-end checks
FAST = ["--set", "width=32", "--set", "height=32", "--set", "base_width=16",
        "--set", "base_height=16", "--set", "n_trials=20", "--set", "step_db=0.25"]


class TestParseConfig:
    def test_defaults(self):
        cfg = cli.parse_config("sweep")
        assert cfg.sweep == SweepConfig()
        assert (cfg.sweep.total_db, cfg.sweep.p1_min_db, cfg.sweep.p1_max_db) == (5.5, 1.05, 3.58)

    def test_flag_beats_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nseed = 3\nn_trials = 7  # inline\n")
        cfg = cli.parse_config("sweep", path, [("seed", "7", "--seed")])
        assert cfg.seed == 7 and cfg.sweep.seed == 7 and cfg["n_trials"] == 7

    def test_type_mismatch_names_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("total_db = banana\n")
        with pytest.raises(ConfigError) as info:
            cli.parse_config("sweep", path)
        assert info.value.key == "total_db"
        assert f"{path}:1" in str(info.value)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("\n\nfrobnicate = 1\n")
        with pytest.raises(ConfigError) as info:
            cli.parse_config("sweep", path)
        assert info.value.key == "frobnicate" and info.value.location == f"{path}:3"

    def test_missing_required(self):
        with pytest.raises(ConfigError) as info:
            cli.parse_config("predict", None, [("p1", "1", "--set"), ("si", "2", "--set")])
        assert info.value.key == "ti"

    def test_component_invariants_checked_up_front(self):
        with pytest.raises(ConfigError) as info:
            cli.parse_config("sweep", None, [("n_tx", "16", "--set")])
        assert info.value.key == "n_tx"
        with pytest.raises(ConfigError) as info:
            cli.parse_config("sweep", None, [("step_db", "0", "--set")])
        assert info.value.key == "step_db"

    def test_hash_ignores_threads(self):
        a = cli.parse_config("sweep", None, [("threads", "1", "--threads")])
        b = cli.parse_config("sweep", None, [("threads", "8", "--threads")])
        c = cli.parse_config("sweep", None, [("seed", "1", "--seed")])
        assert a.config_hash() == b.config_hash() != c.config_hash()


class TestExitCodes:
    def test_config_error(self, tmp_path, capsys):
        code, err = run_cli(["sweep", "--out", tmp_path, "--set", "total_db=banana"], capsys)
        assert code == 2
        rec = error_record(err)
        assert rec["kind"] == "config" and rec["key"] == "total_db"
        assert not os.listdir(tmp_path)

    def test_unknown_bundled_trace(self, tmp_path, capsys):
        code, err = run_cli(["sweep", "--out", tmp_path, "--set", "trace=bundled:nope"], capsys)
        assert code == 2 and error_record(err)["key"] == "trace"

    def test_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("layer,frame_idx,length_bits\nbase,0,oops\n")
        out = tmp_path / "out"
        code, err = run_cli(["sweep", "--out", out, "--set", f"trace={bad}"], capsys)
        assert code == 3
        assert "line 2" in error_record(err)["message"]
        assert not out.exists() or not os.listdir(out)

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        code, _ = run_cli(["sweep", "--out", tmp_path, "--set", "trace=/nonexistent.csv"], capsys)
        assert code == 3

    def test_runtime_error(self, tmp_path, capsys, monkeypatch):
        def boom(cfg, out):
            raise RuntimeError("disk on fire")

        monkeypatch.setitem(cli.HANDLERS, "calibrate", boom)
        code, err = run_cli(["calibrate", "--out", tmp_path], capsys)
        assert code == 4 and error_record(err)["message"] == "disk on fire"


def test_no_partial_outputs_when_publishing_fails(tmp_path, capsys, monkeypatch):
    real = os.replace
    calls = []

    def flaky(src, dst):
        calls.append(dst)
        if len(calls) == 2:
            raise OSError("no space left")
        real(src, dst)

    monkeypatch.setattr(cli.os, "replace", flaky)
    code, _ = run_cli(["predict", "--out", tmp_path, "--set", "p1=1", "--set", "si=2",
                       "--set", "ti=3"], capsys)
    assert code == 4
    assert os.listdir(tmp_path) == []


def test_predict_with_bundled_published_model(tmp_path, capsys):
    model = resources.files("svcuep").joinpath("data/published_model.txt")
    code, _ = run_cli(["predict", "--out", tmp_path, "--set", f"model={model}",
                       "--set", "p1=2.49", "--set", "si=60.5", "--set", "ti=21.25"], capsys)
    assert code == 0
    row = read_csv(tmp_path / "prediction.csv")[0]
    p1, si, ti = 2.49, 60.5, 21.25
    hand = -9.8301 * p1 * p1 + -8.5383 * p1 + 0.3045 * si + -0.0042 * ti + 15.3376
    assert float(row["raw"]) == pytest.approx(hand, rel=1e-12)
    assert float(row["ssim"]) == max(-1.0, min(1.0, hand))
    assert row["clamped"] == str(int(not -1 <= hand <= 1))
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["command"] == "predict" and manifest["outputs"] == ["prediction.csv"]


def test_metrics_identity(tmp_path, capsys):
    v = synth_video(3, seed=2, enh_dims=(32, 32))
    ref = tmp_path / "ref.yuv"
    write_yuv420(ref, v.ref_frames)
    out = tmp_path / "out"
    code, _ = run_cli(["metrics", "--out", out, "--set", f"ref_yuv={ref}", "--set", f"test_yuv={ref}",
                       "--set", "width=32", "--set", "height=32"], capsys)
    assert code == 0
    rows = read_csv(out / "metrics.csv")
    assert len(rows) == 3
    assert all(float(r["ssim"]) == 1.0 and float(r["psnr"]) == 100.0 for r in rows)
    assert "mean_ssim = 1.0000000000" in (out / "summary.txt").read_text()


def test_simulate_outputs(tmp_path, capsys):
    code, _ = run_cli(["simulate", "--out", tmp_path, "--seed", 4] + FAST[:8]
                      + ["--set", "p1_db=2.0"], capsys)
    assert code == 0
    losses = read_csv(tmp_path / "losses.csv")
    assert len(losses) == 90  # 30 base + 60 enhancement packets
    assert len(read_csv(tmp_path / "metrics.csv")) == 60
    assert "p1_db = 2.000000" in (tmp_path / "summary.txt").read_text()


def test_sweep_rerun_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["sweep", "--out", a, "--threads", 1] + FAST, capsys)[0] == 0
    assert run_cli(["sweep", "--out", b, "--threads", 3] + FAST, capsys)[0] == 0
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    rows = read_csv(a / "sweep.csv")
    assert len(rows) == len(SweepConfig(step_db=0.25).grid())
    ma = json.loads((a / "run_manifest.json").read_text())
    mb = json.loads((b / "run_manifest.json").read_text())
    assert ma["config_sha256"] == mb["config_sha256"]


@pytest.mark.slow
def test_parkjoy_sweep_argmax_above_equal_split(tmp_path, capsys):
    code, _ = run_cli(["sweep", "--out", tmp_path, "--set", "trace=bundled:parkjoy_like"], capsys)
    assert code == 0
    rows = read_csv(tmp_path / "sweep.csv")
    best = max(rows, key=lambda r: float(r["mean_ssim"]))
    assert float(best["p1_db"]) > 2.49


def test_calibrate_and_fit(tmp_path, capsys):
    code, _ = run_cli(["calibrate", "--out", tmp_path], capsys)
    assert code == 0
    text = (tmp_path / "calibration.txt").read_text()
    assert "n_tx = 424" in text and "mod_order = 4" in text
    rng = np.random.default_rng(0)
    samples = tmp_path / "samples.csv"
    with open(samples, "w") as fh:
        fh.write("p1,si,ti,ssim\n")
        for _ in range(30):
            p1, si, ti = rng.uniform(1, 4), rng.uniform(20, 90), rng.uniform(5, 40)
            fh.write(f"{p1},{si},{ti},{-0.03 * p1 * p1 + 0.15 * p1 + 0.002 * si - 0.003 * ti + 0.6}\n")
    code, _ = run_cli(["fit", "--out", tmp_path, "--set", f"samples={samples}"], capsys)
    assert code == 0
    assert "a = -0.03" in (tmp_path / "model.txt").read_text()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "svcuep", "predict", "--out", str(tmp_path),
                           "--set", "p1=0", "--set", "si=0", "--set", "ti=0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    row = read_csv(tmp_path / "prediction.csv")[0]
    assert float(row["raw"]) == PUBLISHED_MODEL.e
