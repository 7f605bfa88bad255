"""Per-layer packet traces of a two-layer SVC stream.

Trace CSV format::

    layer,frame_idx,length_bits
    base,0,8000
    enh,0,20000

``layer`` is ``base`` or ``enh``; ``frame_idx`` counts frames of that
layer's own timeline (base at the base frame rate, enh at the enhancement
frame rate).
"""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, TraceParseError, ValidationError

BASE_DIMS = (176, 144)
ENH_DIMS = (352, 288)
BASE_FPS = 15.0
ENH_FPS = 30.0

HEADER = ("layer", "frame_idx", "length_bits")


class Layer(enum.Enum):
    BASE = "base"
    ENH = "enh"

    @property
    def index(self):
        return 0 if self is Layer.BASE else 1


LAYERS = (Layer.BASE, Layer.ENH)


@dataclass(frozen=True)
class Packet:
    layer: Layer
    frame_idx: int
    length_bits: int

    def __post_init__(self):
        if not isinstance(self.layer, Layer):
            raise ValidationError(f"unknown layer {self.layer!r}", "layer")
        if self.length_bits < 1:
            raise ValidationError(
                f"length_bits must be >= 1, got {self.length_bits}", "length_bits>=1"
            )
        if self.frame_idx < 0:
            raise ValidationError(
                f"frame_idx must be >= 0, got {self.frame_idx}", "frame_idx>=0"
            )


@dataclass(frozen=True)
class PacketTrace:
    """Ordered packets plus per-layer timing and geometry.

    ``n_frames`` is the frame count of each layer's timeline. The
    enhancement timeline is the output timeline; base frame ``j`` covers
    enhancement frames ``j * fps_ratio ... (j + 1) * fps_ratio - 1``.
    """

    packets: tuple
    n_frames: dict
    layer_fps: dict = field(default_factory=lambda: {Layer.BASE: BASE_FPS, Layer.ENH: ENH_FPS})
    layer_dims: dict = field(default_factory=lambda: {Layer.BASE: BASE_DIMS, Layer.ENH: ENH_DIMS})

    def __post_init__(self):
        object.__setattr__(self, "packets", tuple(self.packets))
        if not self.packets:
            raise ValidationError("empty trace", "non-empty")
        bw, bh = self.layer_dims[Layer.BASE]
        ew, eh = self.layer_dims[Layer.ENH]
        if bw > ew or bh > eh:
            raise ValidationError(
                f"base dims {bw}x{bh} exceed enhancement dims {ew}x{eh}",
                "base dims <= enhancement dims",
            )
        ratio = self.layer_fps[Layer.ENH] / self.layer_fps[Layer.BASE]
        if ratio < 1 or ratio != round(ratio):
            raise ValidationError(
                f"enhancement fps {self.layer_fps[Layer.ENH]} is not an integer "
                f"multiple of base fps {self.layer_fps[Layer.BASE]}",
                "enhancement fps is an integer multiple of base fps",
            )
        if self.n_frames[Layer.BASE] != math.ceil(self.n_frames[Layer.ENH] / ratio):
            raise ValidationError(
                f"{self.n_frames[Layer.BASE]} base frames do not cover "
                f"{self.n_frames[Layer.ENH]} enhancement frames at ratio {int(ratio)}",
                "frame counts consistent with fps ratio",
            )
        for i, p in enumerate(self.packets):
            if p.frame_idx >= self.n_frames[p.layer]:
                raise ValidationError(
                    f"packet {i} references {p.layer.value} frame {p.frame_idx} "
                    f"but the layer has {self.n_frames[p.layer]} frames",
                    "frame index < layer frame count",
                )

    @property
    def fps_ratio(self) -> int:
        return int(round(self.layer_fps[Layer.ENH] / self.layer_fps[Layer.BASE]))

    def __len__(self):
        return len(self.packets)

    def lengths(self):
        return np.array([p.length_bits for p in self.packets], dtype=np.int64)

    def layer_ids(self):
        return np.array([p.layer.index for p in self.packets], dtype=np.int8)

    def frame_ids(self):
        return np.array([p.frame_idx for p in self.packets], dtype=np.int64)

    def layer_packets(self, layer):
        return [p for p in self.packets if p.layer is layer]

    def swapped(self):
        """Copy with the two layers' packets exchanged. Only meaningful when
        both layers share frame rate and dimensions."""
        if self.fps_ratio != 1 or self.layer_dims[Layer.BASE] != self.layer_dims[Layer.ENH]:
            raise ValidationError(
                "layers can only be swapped when they share fps and dims", "symmetric layers"
            )
        other = {Layer.BASE: Layer.ENH, Layer.ENH: Layer.BASE}
        return PacketTrace(
            [Packet(other[p.layer], p.frame_idx, p.length_bits) for p in self.packets],
            dict(self.n_frames),
            dict(self.layer_fps),
            dict(self.layer_dims),
        )


def infer_frame_counts(packets, ratio):
    n_enh = 0
    n_base = 0
    for p in packets:
        if p.layer is Layer.ENH:
            n_enh = max(n_enh, p.frame_idx + 1)
        else:
            n_base = max(n_base, p.frame_idx + 1)
    n_enh = max(n_enh, n_base * ratio)
    return {Layer.BASE: math.ceil(n_enh / ratio), Layer.ENH: n_enh}


def parse_trace(text, *, base_fps=BASE_FPS, enh_fps=ENH_FPS,
                base_dims=BASE_DIMS, enh_dims=ENH_DIMS, n_frames=None):
    """Parse trace CSV text. ``n_frames`` (enhancement frames) defaults to
    the smallest count that covers every referenced frame."""
    reader = csv.reader(io.StringIO(text))
    packets = []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if not header_seen:
            if tuple(c.strip() for c in row) != HEADER:
                raise TraceParseError(f"expected header {','.join(HEADER)}, got {','.join(row)}", lineno)
            header_seen = True
            continue
        if len(row) != 3:
            raise TraceParseError(f"expected 3 fields, got {len(row)}", lineno)
        name, idx, length = (c.strip() for c in row)
        try:
            layer = Layer(name)
        except ValueError:
            raise TraceParseError(f"unknown layer {name!r}", lineno) from None
        try:
            idx = int(idx)
            length = int(length)
        except ValueError:
            raise TraceParseError(f"non-integer field in {row!r}", lineno) from None
        try:
            packets.append(Packet(layer, idx, length))
        except ValidationError as exc:
            raise TraceParseError(str(exc), lineno) from None
    if not packets:
        raise ValidationError("empty trace", "non-empty")
    ratio = enh_fps / base_fps
    if ratio < 1 or ratio != round(ratio):
        raise ValidationError(
            f"enhancement fps {enh_fps} is not an integer multiple of base fps {base_fps}",
            "enhancement fps is an integer multiple of base fps",
        )
    counts = infer_frame_counts(packets, int(round(ratio)))
    if n_frames is not None:
        counts = {Layer.BASE: math.ceil(n_frames / ratio), Layer.ENH: int(n_frames)}
    return PacketTrace(
        packets,
        counts,
        {Layer.BASE: float(base_fps), Layer.ENH: float(enh_fps)},
        {Layer.BASE: tuple(base_dims), Layer.ENH: tuple(enh_dims)},
    )


def load_trace(path, **kwargs):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_trace(fh.read(), **kwargs)


def format_trace(trace):
    lines = [",".join(HEADER)]
    lines.extend(f"{p.layer.value},{p.frame_idx},{p.length_bits}" for p in trace.packets)
    return "\n".join(lines) + "\n"


def save_trace(trace, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trace(trace))


def _lognormal_lengths(rng, mean, dispersion, n):
    if dispersion == 0:
        return np.full(n, int(mean), dtype=np.int64)
    sigma2 = math.log1p(dispersion * dispersion)
    mu = math.log(mean) - sigma2 / 2.0
    draws = rng.lognormal(mu, math.sqrt(sigma2), size=n)
    return np.maximum(1, np.rint(draws)).astype(np.int64)


def synth_trace(n_frames, base_mean_bits, enh_mean_bits, dispersion, seed,
                *, base_fps=BASE_FPS, enh_fps=ENH_FPS,
                base_dims=BASE_DIMS, enh_dims=ENH_DIMS):
    """Synthetic trace with one packet per frame per layer.

    ``n_frames`` counts enhancement frames; the base layer gets
    ``ceil(n_frames / fps_ratio)``. Lengths are lognormal with the given
    mean and coefficient of variation ``dispersion`` (0 gives constant
    lengths).
    """
    if n_frames < 1:
        raise InvalidArgumentError(f"n_frames must be >= 1, got {n_frames}")
    if base_mean_bits < 1 or enh_mean_bits < 1:
        raise InvalidArgumentError("mean packet lengths must be >= 1 bit")
    if dispersion < 0:
        raise InvalidArgumentError(f"dispersion must be >= 0, got {dispersion}")
    ratio = enh_fps / base_fps
    if ratio < 1 or ratio != round(ratio):
        raise ValidationError(
            "enhancement fps must be an integer multiple of base fps",
            "enhancement fps is an integer multiple of base fps",
        )
    n_base = math.ceil(n_frames / ratio)
    rng = np.random.default_rng(seed)
    base = _lognormal_lengths(rng, base_mean_bits, dispersion, n_base)
    enh = _lognormal_lengths(rng, enh_mean_bits, dispersion, n_frames)
    packets = [Packet(Layer.BASE, j, int(n)) for j, n in enumerate(base)]
    packets += [Packet(Layer.ENH, k, int(n)) for k, n in enumerate(enh)]
    return PacketTrace(
        packets,
        {Layer.BASE: n_base, Layer.ENH: n_frames},
        {Layer.BASE: float(base_fps), Layer.ENH: float(enh_fps)},
        {Layer.BASE: tuple(base_dims), Layer.ENH: tuple(enh_dims)},
    )


@dataclass(frozen=True)
class LayerStats:
    count: int
    mean_bits: float
    max_bits: int
    total_bits: int


@dataclass(frozen=True)
class TraceStats:
    layers: dict
    total_bits: int
    # base mean packet length over enhancement mean; > 1 marks a base-heavy
    # stream, where extra base-layer power pays off
    base_to_enh_ratio: float
    base_heavy: bool

    def summary(self):
        lines = []
        for layer in LAYERS:
            s = self.layers[layer]
            lines.append(
                f"{layer.value}: packets={s.count} mean_bits={s.mean_bits:.1f} "
                f"max_bits={s.max_bits} total_bits={s.total_bits}"
            )
        lines.append(f"base/enh mean ratio={self.base_to_enh_ratio:.3f}"
                     + (" (base-heavy)" if self.base_heavy else ""))
        return "\n".join(lines)


def trace_stats(trace):
    if not trace.packets:
        raise ValidationError("empty trace", "non-empty")
    layers = {}
    for layer in LAYERS:
        lengths = [p.length_bits for p in trace.packets if p.layer is layer]
        total = sum(lengths)
        layers[layer] = LayerStats(
            count=len(lengths),
            mean_bits=total / len(lengths) if lengths else 0.0,
            max_bits=max(lengths) if lengths else 0,
            total_bits=total,
        )
    b = layers[Layer.BASE].mean_bits
    e = layers[Layer.ENH].mean_bits
    ratio = b / e if e > 0 else math.inf
    return TraceStats(layers, sum(s.total_bits for s in layers.values()), ratio, ratio > 1.0)


_BUNDLED = ("parkjoy_like", "mc1_like", "sh1_like")


def bundled_trace_path(name):
    if name not in _BUNDLED:
        raise InvalidArgumentError(f"unknown bundled trace {name!r}; choose from {_BUNDLED}")
    return os.path.join(os.path.dirname(__file__), "data", f"{name}.csv")


def bundled_trace(name):
    return load_trace(bundled_trace_path(name))
