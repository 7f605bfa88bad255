"""Batch command-line front end.

    svcuep sweep --config run.cfg --seed 7 --out results/

Config files are flat ``key = value`` text with ``#`` comments. Any key
can also be given on the command line as ``--set key=value``; the
``--seed``, ``--out`` and ``--threads`` flags are shorthands. Command-line
values win over the file.

Exit codes: 0 success, 2 config error, 3 data error, 4 runtime error.
Failures print one JSON line on stderr and leave no output files behind.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

from . import __version__, kernels
from .errors import (CalibrationError, ConfigError, DomainError, InvalidArgumentError,
                     RankDeficientError, TraceParseError, UndefinedCorrelationError,
                     ValidationError)
from .link import ChannelConfig, PowerSplit
from .losses import conceal, expected_per, format_loss_csv, simulate_losses, total_per
from .quality import evaluate, format_metrics_csv, spatial_info, temporal_info
from .trace import Layer, bundled_trace_path, load_trace, trace_stats
from .uep import (DEFAULT_CHANNEL, PUBLISHED_MODEL, SweepConfig, calibrate, endpoint_pers,
                  fit_regression, format_model, load_model, predict, sweep)
from .video import LayeredVideo, read_yuv420, synth_video

COMMANDS = ("simulate", "sweep", "calibrate", "fit", "predict", "metrics")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

_SC = SweepConfig()

# key -> (type, default); a default of None means "unset"
KEYS = {
    "seed": (int, 0),
    "threads": (int, 1),
    "out": (str, "."),
    "trace": (str, "bundled:sh1_like"),
    "base_fps": (float, 15.0),
    "enh_fps": (float, 30.0),
    "width": (int, 352),
    "height": (int, 288),
    "base_width": (int, 176),
    "base_height": (int, 144),
    "video": (str, "synthetic"),
    "video_seed": (int, 0),
    "ref_yuv": (str, None),
    "enh_yuv": (str, None),
    "base_yuv": (str, None),
    "test_yuv": (str, None),
    "n_tx": (int, DEFAULT_CHANNEL.n_tx),
    "n_users": (int, DEFAULT_CHANNEL.n_users),
    "n_rx": (int, DEFAULT_CHANNEL.n_rx),
    "mod_order": (int, DEFAULT_CHANNEL.mod_order),
    "total_db": (float, _SC.total_db),
    "p1_min_db": (float, _SC.p1_min_db),
    "p1_max_db": (float, _SC.p1_max_db),
    "step_db": (float, _SC.step_db),
    "n_trials": (int, _SC.n_trials),
    "p1_db": (float, None),
    "target_per": (float, 0.01),
    "samples": (str, None),
    "model": (str, None),
    "p1": (float, None),
    "si": (float, None),
    "ti": (float, None),
}

REQUIRED = {
    "fit": ("samples",),
    "predict": ("p1", "si", "ti"),
    "metrics": ("ref_yuv", "test_yuv"),
}

# keys that never change results; left out of the config hash
_NOT_HASHED = {"threads", "out"}


@dataclass
class RunConfig:
    command: str
    values: dict
    locations: dict = field(default_factory=dict)
    channel: ChannelConfig = None
    sweep: SweepConfig = None

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return self.values["seed"]

    def config_hash(self) -> str:
        items = sorted((k, v) for k, v in self.values.items() if k not in _NOT_HASHED)
        canon = "\n".join(f"{k}={v!r}" for k, v in items) + f"\ncommand={self.command}"
        return hashlib.sha256(canon.encode()).hexdigest()


def _convert(key, raw, location):
    typ = KEYS[key][0]
    text = raw.strip()
    try:
        if typ is int:
            return int(text)
        if typ is float:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
    except ValueError:
        raise ConfigError(f"expected {typ.__name__}, got {text!r}", key, location) from None
    if not text:
        raise ConfigError("empty value", key, location)
    return text


def read_config_file(path):
    """Parse a flat key-value file into ``{key: (raw value, location)}``."""
    entries = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc.strerror}", location=path) from None
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        loc = f"{path}:{lineno}"
        if "=" not in body:
            raise ConfigError("expected 'key = value'", location=loc)
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError("unknown key", key, loc)
        entries[key] = (value, loc)
    return entries


def parse_config(command, path=None, overrides=()):
    """Merge file values and ``(key, value, location)`` overrides, convert,
    and validate everything before any work starts."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    raw = read_config_file(path) if path else {}
    for key, value, loc in overrides:
        if key not in KEYS:
            raise ConfigError("unknown key", key, loc)
        raw[key] = (value, loc)
    values = {k: default for k, (_, default) in KEYS.items()}
    locations = {}
    for key, (value, loc) in raw.items():
        values[key] = _convert(key, value, loc)
        locations[key] = loc
    for key in REQUIRED.get(command, ()):
        if values[key] is None:
            raise ConfigError(f"required for '{command}'", key, "missing")
    if values["video"] not in ("synthetic", "yuv"):
        raise ConfigError("must be 'synthetic' or 'yuv'", "video", locations.get("video"))
    if command in ("simulate", "sweep") and values["video"] == "yuv":
        for key in ("ref_yuv", "enh_yuv", "base_yuv"):
            if values[key] is None:
                raise ConfigError("required when video = yuv", key, "missing")
    if values["threads"] < 1:
        raise ConfigError("must be >= 1", "threads", locations.get("threads"))
    cfg = RunConfig(command, values, locations)

    def blame(keys, exc):
        key = next((k for k in keys if k in locations), keys[0])
        return ConfigError(str(exc), key, locations.get(key))

    ch_keys = ("n_tx", "n_users", "n_rx", "mod_order")
    try:
        cfg.channel = ChannelConfig(*(values[k] for k in ch_keys))
    except (InvalidArgumentError, DomainError) as exc:
        raise blame(ch_keys, exc) from None
    sw_keys = ("total_db", "p1_min_db", "p1_max_db", "step_db", "n_trials", "seed")
    try:
        cfg.sweep = SweepConfig(*(values[k] for k in sw_keys))
    except InvalidArgumentError as exc:
        raise blame(sw_keys, exc) from None
    if command == "sweep" and not cfg.sweep.grid():
        raise ConfigError("sweep grid is empty", "p1_max_db", locations.get("p1_max_db"))
    if values["p1_db"] is not None:
        try:
            PowerSplit.from_base_db(values["total_db"], values["p1_db"])
        except InvalidArgumentError as exc:
            raise blame(("p1_db", "total_db"), exc) from None
    if not 0.0 < values["target_per"] < 1.0:
        raise ConfigError("must lie in (0, 1)", "target_per", locations.get("target_per"))
    return cfg


# -- outputs -------------------------------------------------------------

class Outputs:
    """Collects artifacts in memory and publishes them all at the end,
    each via write-to-temp + rename."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.files = {}

    def add(self, name, text):
        self.files[name] = text

    def commit(self):
        os.makedirs(self.out_dir, exist_ok=True)
        done = []
        try:
            for name, text in self.files.items():
                fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.out_dir)
                try:
                    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                        fh.write(text)
                    dest = os.path.join(self.out_dir, name)
                    os.replace(tmp, dest)
                    done.append(dest)
                except BaseException:
                    if os.path.exists(tmp):
                        os.unlink(tmp)
                    raise
        except BaseException:
            for path in done:
                os.unlink(path)
            raise


# -- commands ------------------------------------------------------------

def _load_trace(cfg):
    spec = cfg["trace"]
    try:
        path = bundled_trace_path(spec.split(":", 1)[1]) if spec.startswith("bundled:") else spec
        return load_trace(
            path,
            base_fps=cfg["base_fps"], enh_fps=cfg["enh_fps"],
            base_dims=(cfg["base_width"], cfg["base_height"]),
            enh_dims=(cfg["width"], cfg["height"]),
        )
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc), "trace", cfg.locations.get("trace")) from None


def _load_video(cfg, trace):
    if cfg["video"] == "synthetic":
        return synth_video(trace.n_frames[Layer.ENH], seed=cfg["video_seed"],
                           enh_dims=(cfg["width"], cfg["height"]),
                           fps_ratio=trace.fps_ratio)
    ne = trace.n_frames[Layer.ENH]
    nb = trace.n_frames[Layer.BASE]
    video = LayeredVideo(
        read_yuv420(cfg["base_yuv"], cfg["base_width"], cfg["base_height"], nb),
        read_yuv420(cfg["enh_yuv"], cfg["width"], cfg["height"], ne),
        read_yuv420(cfg["ref_yuv"], cfg["width"], cfg["height"], ne),
    )
    video.check_trace(trace)
    return video


def _kv(pairs):
    return "".join(f"{k} = {v}\n" for k, v in pairs)


def cmd_simulate(cfg, out):
    trace = _load_trace(cfg)
    video = _load_video(cfg, trace)
    if cfg["p1_db"] is None:
        split = PowerSplit.equal(cfg["total_db"])
    else:
        split = PowerSplit.from_base_db(cfg["total_db"], cfg["p1_db"])
    outcome = simulate_losses(trace, split, cfg.channel, cfg.seed)
    recon = conceal(outcome, video, trace)
    report = evaluate(recon.frames, video.ref_frames)
    exp = expected_per(trace, split, cfg.channel)
    out.add("losses.csv", format_loss_csv(trace, outcome))
    out.add("metrics.csv", format_metrics_csv(report))
    out.add("summary.txt", _kv([
        ("channel", cfg.channel),
        ("p1_db", f"{split.layer_db[0]:.6f}"),
        ("p2_db", f"{split.layer_db[1]:.6f}"),
        ("per_base_expected", f"{exp[Layer.BASE]:.8e}"),
        ("per_enh_expected", f"{exp[Layer.ENH]:.8e}"),
        ("per_base_empirical", f"{outcome.empirical_per[Layer.BASE]:.8e}"),
        ("per_enh_empirical", f"{outcome.empirical_per[Layer.ENH]:.8e}"),
        ("lost_packets", len(outcome.lost_packets)),
        ("mean_ssim", f"{report.mean_ssim:.10f}"),
        ("mean_psnr", f"{report.mean_psnr:.6f}"),
    ]))


def cmd_sweep(cfg, out):
    trace = _load_trace(cfg)
    video = _load_video(cfg, trace)
    result = sweep(trace, video, cfg.channel, cfg.sweep, threads=cfg["threads"])
    out.add("sweep.csv", result.to_csv())
    b, e = result.best_point, result.equal_point
    out.add("summary.txt", _kv([
        ("channel", cfg.channel),
        ("points", len(result.points)),
        ("best_p1_db", f"{b.p1_db:.4f}"),
        ("best_mean_ssim", f"{b.mean_ssim:.10f}"),
        ("equal_p1_db", f"{e.p1_db:.4f}"),
        ("equal_mean_ssim", f"{e.mean_ssim:.10f}"),
        ("base_to_enh_mean_ratio", f"{trace_stats(trace).base_to_enh_ratio:.6f}"),
    ]))


def cmd_calibrate(cfg, out):
    trace = _load_trace(cfg)
    res = calibrate(trace, target_per=cfg["target_per"], total_db=cfg["total_db"])
    ends = endpoint_pers(trace, res.config, cfg.sweep)
    pairs = [
        ("n_tx", res.config.n_tx), ("n_users", res.config.n_users),
        ("n_rx", res.config.n_rx), ("mod_order", res.config.mod_order),
        ("achieved_per", f"{res.achieved_per:.8e}"), ("target_per", res.target_per),
    ]
    for p1, per in ends.items():
        pairs.append((f"per_base_at_{p1:.2f}", f"{per[Layer.BASE]:.8e}"))
        pairs.append((f"per_enh_at_{p1:.2f}", f"{per[Layer.ENH]:.8e}"))
    pairs.append(("note", res.note))
    out.add("calibration.txt", _kv(pairs))


def _read_samples(path):
    import csv

    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            rows = []
            for lineno, row in enumerate(reader, start=2):
                try:
                    rows.append(tuple(float(row[k]) for k in ("p1", "si", "ti", "ssim")))
                except (KeyError, TypeError, ValueError):
                    raise TraceParseError("expected numeric p1,si,ti,ssim", lineno) from None
    except OSError as exc:
        raise ValidationError(f"cannot read samples: {exc}", "readable input") from None
    return rows


def cmd_fit(cfg, out):
    model = fit_regression(_read_samples(cfg["samples"]))
    out.add("model.txt", format_model(model))


def cmd_predict(cfg, out):
    model = load_model(cfg["model"]) if cfg["model"] else PUBLISHED_MODEL
    pred = predict(model, cfg["p1"], cfg["si"], cfg["ti"])
    out.add("prediction.csv",
            "p1,si,ti,raw,ssim,clamped\n"
            f"{cfg['p1']!r},{cfg['si']!r},{cfg['ti']!r},{pred.raw!r},{pred.ssim!r},"
            f"{int(pred.clamped)}\n")


def cmd_metrics(cfg, out):
    w, h = cfg["width"], cfg["height"]
    ref = read_yuv420(cfg["ref_yuv"], w, h)
    test = read_yuv420(cfg["test_yuv"], w, h)
    report = evaluate(test, ref)
    out.add("metrics.csv", format_metrics_csv(report))
    pairs = [("frames", len(ref)), ("mean_ssim", f"{report.mean_ssim:.10f}"),
             ("mean_psnr", f"{report.mean_psnr:.6f}"), ("si", f"{spatial_info(ref):.6f}")]
    if len(ref) >= 2:
        pairs.append(("ti", f"{temporal_info(ref):.6f}"))
    out.add("summary.txt", _kv(pairs))


HANDLERS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "metrics": cmd_metrics,
}


def run(cfg: RunConfig) -> int:
    """Execute a validated config. Returns the process exit status."""
    out = Outputs(cfg["out"])
    try:
        HANDLERS[cfg.command](cfg, out)
        out.add("run_manifest.json", json.dumps({
            "command": cfg.command,
            "config_sha256": cfg.config_hash(),
            "seed": cfg.seed,
            "version": __version__,
            "kernel_backend": kernels.BACKEND,
            "outputs": sorted(out.files),
        }, indent=2, sort_keys=True) + "\n")
        out.commit()
    except Exception as exc:  # noqa: BLE001
        return _fail(exc)
    return EXIT_OK


def _classify(exc):
    if isinstance(exc, ConfigError):
        return "config", EXIT_CONFIG
    if isinstance(exc, (TraceParseError, ValidationError, RankDeficientError,
                        UndefinedCorrelationError, FileNotFoundError)):
        return "data", EXIT_DATA
    return "runtime", EXIT_RUNTIME


def _fail(exc):
    kind, code = _classify(exc)
    record = {"status": "error", "kind": kind, "exit": code,
              "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError) and exc.key:
        record["key"] = exc.key
    if isinstance(exc, CalibrationError):
        record["closest"] = [{"config": str(c), "per": p} for c, p in exc.closest]
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--seed", type=str, help="RNG seed (overrides the file)")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=str, help="worker threads for sweeps")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key; repeatable")
    parser = argparse.ArgumentParser(prog="svcuep", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "one loss realisation, concealment and per-frame quality",
        "sweep": "SSIM vs base-layer power under a fixed budget",
        "calibrate": "pick channel parameters for a target total PER",
        "fit": "fit the quadratic power/content quality model",
        "predict": "evaluate a quality model",
        "metrics": "SSIM/PSNR/SI/TI of a YUV file against a reference",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = []
    for item in args.set:
        if "=" not in item:
            return _fail(ConfigError(f"--set expects KEY=VALUE, got {item!r}", location="--set"))
        key, value = item.split("=", 1)
        overrides.append((key.strip(), value, "--set"))
    for key in ("seed", "out", "threads"):
        value = getattr(args, key)
        if value is not None:
            overrides.append((key, value, f"--{key}"))
    try:
        cfg = parse_config(args.command, args.config, overrides)
    except ConfigError as exc:
        return _fail(exc)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
