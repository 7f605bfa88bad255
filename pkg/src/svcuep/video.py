"""Planar YUV 4:2:0 frames, raw file I/O and synthetic layered content."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, ValidationError
from .trace import Layer, PacketTrace


@dataclass(frozen=True, eq=False)
class Frame:
    """One 8-bit 4:2:0 picture. Planes are read-only uint8 arrays."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        planes = []
        for name in ("y", "u", "v"):
            arr = np.asarray(getattr(self, name))
            if arr.ndim != 2:
                raise ValidationError(f"plane {name} must be 2-D", "plane sizes match dimensions")
            if arr.dtype != np.uint8:
                if np.any(arr < 0) or np.any(arr > 255):
                    raise ValidationError(f"plane {name} has samples outside [0, 255]",
                                          "samples in [0,255]")
                arr = arr.astype(np.uint8)
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            planes.append(arr)
            object.__setattr__(self, name, arr)
        h, w = planes[0].shape
        if h % 2 or w % 2:
            raise ValidationError(f"luma {w}x{h} must have even dimensions",
                                  "plane sizes match dimensions")
        for arr in planes[1:]:
            if arr.shape != (h // 2, w // 2):
                raise ValidationError(
                    f"chroma plane {arr.shape[1]}x{arr.shape[0]} does not match luma {w}x{h}",
                    "plane sizes match dimensions",
                )

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def height(self) -> int:
        return self.y.shape[0]

    @property
    def dims(self):
        return (self.width, self.height)

    def equals(self, other) -> bool:
        return (np.array_equal(self.y, other.y) and np.array_equal(self.u, other.u)
                and np.array_equal(self.v, other.v))

    def to_bytes(self) -> bytes:
        return self.y.tobytes() + self.u.tobytes() + self.v.tobytes()


def gray_frame(width, height, level=128):
    return Frame(
        np.full((height, width), level, np.uint8),
        np.full((height // 2, width // 2), level, np.uint8),
        np.full((height // 2, width // 2), level, np.uint8),
    )


def frame_from_luma(y, chroma=128):
    y = np.asarray(y)
    h, w = y.shape
    c = np.full((h // 2, w // 2), chroma, np.uint8)
    return Frame(y, c, c)


def read_yuv420(path, width, height, n_frames=None):
    """Read a headerless planar 4:2:0 file into a list of frames."""
    if width % 2 or height % 2:
        raise ValidationError(f"{width}x{height} is not a valid 4:2:0 size", "even dimensions")
    frame_len = width * height * 3 // 2
    size = os.path.getsize(path)
    if size % frame_len:
        raise ValidationError(
            f"{path}: {size} bytes is not a whole number of {width}x{height} frames",
            "whole frames",
        )
    count = size // frame_len
    if n_frames is not None:
        if n_frames > count:
            raise ValidationError(f"{path} holds {count} frames, {n_frames} requested",
                                  "frame count")
        count = n_frames
    raw = np.fromfile(path, dtype=np.uint8, count=count * frame_len).reshape(count, frame_len)
    ysz = width * height
    csz = ysz // 4
    frames = []
    for row in raw:
        frames.append(Frame(
            row[:ysz].reshape(height, width),
            row[ysz:ysz + csz].reshape(height // 2, width // 2),
            row[ysz + csz:].reshape(height // 2, width // 2),
        ))
    return frames


def write_yuv420(path, frames):
    with open(path, "wb") as fh:
        for f in frames:
            fh.write(f.to_bytes())


def _upsample_plane(plane, fy, fx):
    # half-pixel-centre bilinear, edges clamped
    h, w = plane.shape
    p = plane.astype(np.float64)

    def taps(n_in, factor):
        pos = (np.arange(n_in * factor) + 0.5) / factor - 0.5
        lo = np.floor(pos).astype(np.int64)
        frac = pos - lo
        return np.clip(lo, 0, n_in - 1), np.clip(lo + 1, 0, n_in - 1), frac

    y0, y1, wy = taps(h, fy)
    x0, x1, wx = taps(w, fx)
    rows = p[y0] * (1.0 - wy)[:, None] + p[y1] * wy[:, None]
    out = rows[:, x0] * (1.0 - wx)[None, :] + rows[:, x1] * wx[None, :]
    return np.floor(out + 0.5).astype(np.uint8)


def upsample(frame, width, height):
    """Bilinear upsampling of every plane by an integer factor."""
    if width % frame.width or height % frame.height:
        raise ValidationError(
            f"cannot upsample {frame.width}x{frame.height} to {width}x{height} "
            "by an integer factor", "integer scale factor",
        )
    fx = width // frame.width
    fy = height // frame.height
    if fx == 1 and fy == 1:
        return frame
    return Frame(
        _upsample_plane(frame.y, fy, fx),
        _upsample_plane(frame.u, fy, fx),
        _upsample_plane(frame.v, fy, fx),
    )


def downsample2(frame):
    """2x2 box average (rounded) of every plane."""

    def half(p):
        p = p.astype(np.uint16)
        s = p[0::2, 0::2] + p[1::2, 0::2] + p[0::2, 1::2] + p[1::2, 1::2]
        return ((s + 2) // 4).astype(np.uint8)

    return Frame(half(frame.y), half(frame.u), half(frame.v))


@dataclass(frozen=True, eq=False)
class LayeredVideo:
    """Decoded base layer, full-quality enhancement reconstruction and the
    pristine reference (at enhancement resolution and frame rate)."""

    base_frames: tuple
    enh_frames: tuple
    ref_frames: tuple

    def __post_init__(self):
        for name in ("base_frames", "enh_frames", "ref_frames"):
            frames = tuple(getattr(self, name))
            object.__setattr__(self, name, frames)
            if not frames:
                raise ValidationError(f"{name} is empty", "non-empty sequences")
            dims = {f.dims for f in frames}
            if len(dims) != 1:
                raise ValidationError(f"{name} mixes frame sizes {sorted(dims)}",
                                      "all frames of a sequence share dimensions")
        if len(self.enh_frames) != len(self.ref_frames):
            raise ValidationError(
                f"{len(self.enh_frames)} enhancement frames vs {len(self.ref_frames)} reference",
                "frame counts consistent",
            )
        if self.enh_frames[0].dims != self.ref_frames[0].dims:
            raise ValidationError("enhancement and reference dimensions differ",
                                  "all frames of a sequence share dimensions")

    @property
    def base_dims(self):
        return self.base_frames[0].dims

    @property
    def enh_dims(self):
        return self.enh_frames[0].dims

    def check_trace(self, trace: PacketTrace):
        if len(self.base_frames) != trace.n_frames[Layer.BASE] or \
                len(self.enh_frames) != trace.n_frames[Layer.ENH]:
            raise ValidationError(
                f"video has {len(self.base_frames)}/{len(self.enh_frames)} base/enh frames, "
                f"trace expects {trace.n_frames[Layer.BASE]}/{trace.n_frames[Layer.ENH]}",
                "frame counts consistent with PacketTrace fps ratio",
            )
        if self.base_dims != tuple(trace.layer_dims[Layer.BASE]) or \
                self.enh_dims != tuple(trace.layer_dims[Layer.ENH]):
            raise ValidationError(
                f"video dims {self.base_dims}/{self.enh_dims} differ from trace dims "
                f"{trace.layer_dims[Layer.BASE]}/{trace.layer_dims[Layer.ENH]}",
                "dimension mismatch",
            )


def _smooth_noise(rng, h, w, scale):
    # band-limited texture: white noise low-passed in the frequency domain
    noise = rng.standard_normal((h, w))
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.rfftfreq(w)[None, :]
    shaped = np.fft.rfft2(noise) * np.exp(-((fy * fy + fx * fx) * (scale * scale) * 2.0))
    out = np.fft.irfft2(shaped, s=(h, w))
    return out / out.std()


def _quantize(plane, step):
    return np.clip(np.floor(plane / step + 0.5) * step, 0, 255)


def synth_video(n_frames, *, seed=0, enh_dims=(352, 288), fps_ratio=2,
                pan_px=2, texture_scale=10.0, contrast=40.0,
                detail_scale=1.2, detail=12.0, enh_step=4.0, base_step=6.0):
    """Synthetic layered content: a coarse band-limited texture plus fine
    detail (amplitude ``detail``), panning ``pan_px`` pixels per enhancement
    frame over a gradient background.

    The enhancement reconstruction is the reference quantized with
    ``enh_step``; the base layer is the 2x box-downsampled reference at the
    base frame rate, quantized with ``base_step``.
    """
    if n_frames < 1:
        raise InvalidArgumentError(f"n_frames must be >= 1, got {n_frames}")
    w, h = enh_dims
    rng = np.random.default_rng(seed)
    span = pan_px * n_frames
    tex = contrast * _smooth_noise(rng, h, w + span + 1, texture_scale)
    tex += detail * _smooth_noise(rng, h, w + span + 1, detail_scale)
    chroma_tex = _smooth_noise(rng, h // 2, (w + span) // 2 + 1, texture_scale)
    grad = np.linspace(70.0, 180.0, w)[None, :] + np.linspace(-20.0, 20.0, h)[:, None]
    refs, enhs = [], []
    for k in range(n_frames):
        off = pan_px * k
        y = np.clip(grad + tex[:, off:off + w], 0, 255)
        coff = off // 2
        u = np.clip(128 + 12 * chroma_tex[:, coff:coff + w // 2], 0, 255)
        v = np.clip(128 - 12 * chroma_tex[:, coff:coff + w // 2], 0, 255)
        ref = Frame(np.rint(y), np.rint(u), np.rint(v))
        refs.append(ref)
        enhs.append(Frame(_quantize(ref.y, enh_step), _quantize(ref.u, enh_step),
                          _quantize(ref.v, enh_step)))
    bases = []
    for j in range(math.ceil(n_frames / fps_ratio)):
        if enh_dims[0] % 4 or enh_dims[1] % 4:
            raise ValidationError("enhancement dims must be multiples of 4", "even base dims")
        small = downsample2(refs[j * fps_ratio])
        bases.append(Frame(_quantize(small.y, base_step), _quantize(small.u, base_step),
                           _quantize(small.v, base_step)))
    return LayeredVideo(tuple(bases), tuple(enhs), tuple(refs))
