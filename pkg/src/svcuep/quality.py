"""Full-reference quality (SSIM, PSNR) and content complexity (SI, TI).

All metrics use the luma plane only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError

SSIM_WINDOW = 8
SSIM_C1 = (0.01 * 255) ** 2
SSIM_C2 = (0.03 * 255) ** 2
PSNR_CAP_DB = 100.0


def _luma(frame):
    return frame.y if hasattr(frame, "y") else np.asarray(frame)


def _same_dims(a, b):
    if a.shape != b.shape:
        raise ValidationError(
            f"frame size mismatch: {a.shape[1]}x{a.shape[0]} vs {b.shape[1]}x{b.shape[0]}",
            "equal dimensions",
        )


def ssim_map(a, b):
    ya, yb = _luma(a), _luma(b)
    _same_dims(ya, yb)
    if ya.shape[0] < SSIM_WINDOW or ya.shape[1] < SSIM_WINDOW:
        raise ValidationError(f"frames smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window",
                              "frame >= window")
    return kernels.ssim_map(ya, yb, SSIM_WINDOW, SSIM_C1, SSIM_C2)


def ssim_frame(a, b) -> float:
    """Mean SSIM over all 8x8 window positions (stride 1).

    Window statistics are unweighted with population (1/N) variances.
    """
    return float(np.mean(ssim_map(a, b)))


def psnr_frame(a, b) -> float:
    """Luma PSNR in dB; identical frames report ``PSNR_CAP_DB``."""
    ya, yb = _luma(a), _luma(b)
    _same_dims(ya, yb)
    diff = ya.astype(np.int64) - yb.astype(np.int64)
    sq = int(np.sum(diff * diff))
    if sq == 0:
        return PSNR_CAP_DB
    mse = sq / diff.size
    return min(PSNR_CAP_DB, 10.0 * math.log10(255.0 * 255.0 / mse))


def sobel_magnitude(y):
    """Sobel gradient magnitude on the interior; the 1-pixel border is dropped."""
    p = np.asarray(y, dtype=np.float64)
    if p.shape[0] < 3 or p.shape[1] < 3:
        raise ValidationError("frame too small for a 3x3 Sobel operator", "frame >= 3x3")
    gx = (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:]) - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2])
    gy = (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:]) - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:])
    return np.hypot(gx, gy)


def spatial_info(frames) -> float:
    """SI: max over frames of the std-dev of the Sobel-filtered luma."""
    frames = list(frames)
    if not frames:
        raise ValidationError("SI needs at least one frame", "non-empty sequence")
    return max(float(np.std(sobel_magnitude(_luma(f)))) for f in frames)


def temporal_info(frames) -> float:
    """TI: max over consecutive pairs of the std-dev of the luma difference."""
    frames = list(frames)
    if len(frames) < 2:
        raise ValidationError("TI needs at least two frames", ">= 2 frames")
    best = 0.0
    prev = _luma(frames[0]).astype(np.float64)
    for f in frames[1:]:
        cur = _luma(f).astype(np.float64)
        _same_dims(prev, cur)
        best = max(best, float(np.std(cur - prev)))
        prev = cur
    return best


@dataclass(frozen=True)
class QualityReport:
    per_frame_ssim: tuple
    per_frame_psnr: tuple

    @property
    def mean_ssim(self) -> float:
        return math.fsum(self.per_frame_ssim) / len(self.per_frame_ssim)

    @property
    def mean_psnr(self) -> float:
        return math.fsum(self.per_frame_psnr) / len(self.per_frame_psnr)


def evaluate(frames, ref_frames) -> QualityReport:
    frames = list(frames)
    ref_frames = list(ref_frames)
    if len(frames) != len(ref_frames):
        raise ValidationError(f"{len(frames)} frames vs {len(ref_frames)} reference frames",
                              "equal frame counts")
    if not frames:
        raise ValidationError("no frames to evaluate", "non-empty sequence")
    return QualityReport(
        tuple(ssim_frame(a, b) for a, b in zip(frames, ref_frames)),
        tuple(psnr_frame(a, b) for a, b in zip(frames, ref_frames)),
    )


def format_metrics_csv(report: QualityReport) -> str:
    lines = ["frame_idx,ssim,psnr"]
    for i, (s, p) in enumerate(zip(report.per_frame_ssim, report.per_frame_psnr)):
        lines.append(f"{i},{s:.10f},{p:.6f}")
    return "\n".join(lines) + "\n"


def read_metrics_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return QualityReport(tuple(float(r["ssim"]) for r in rows),
                         tuple(float(r["psnr"]) for r in rows))
