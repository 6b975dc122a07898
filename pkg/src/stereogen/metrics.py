"""PSNR, SSIM, and the flow-warping temporal-consistency error.

PSNR assumes intensities in [0, 1] (peak 1) and is capped at 100 dB so
identical frames never produce an infinity in a report. SSIM uses the
standard 11x11 Gaussian window with sigma 1.5 and stabilizers
C1 = 0.01^2, C2 = 0.03^2, evaluated per channel on valid window
positions only, then averaged.

The warping error follows each forward flow into the next frame,
bilinearly samples it there, and averages the squared residual under a
per-pixel confidence weight; frames whose confidence is identically
zero are skipped and listed in the report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import convolve2d

from .errors import InputError
from .imaging import ConfidenceMap, FlowField, Frame, VideoClip
from .rendering import _bilinear_sample

PSNR_CAP = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


@dataclass(frozen=True)
class MetricReport:
    """Per-frame metric values plus their mean and the parameters used."""

    name: str
    values: tuple
    mean: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values and abs(self.mean - float(np.mean(self.values))) > 1e-9:
            raise ValueError("mean does not match the per-frame values")

    @classmethod
    def from_values(cls, name: str, values: Sequence[float], params=None) -> "MetricReport":
        values = tuple(float(v) for v in values)
        mean = float(np.mean(values)) if values else float("nan")
        return cls(name=name, values=values, mean=mean, params=dict(params or {}))

    def to_json(self) -> str:
        body = {
            "metric": self.name,
            "params": self.params,
            "per_frame": list(self.values),
            "mean": self.mean,
        }
        return json.dumps(body, indent=2, sort_keys=True) + "\n"


def _check_pair(a: Frame, b: Frame):
    if a.data.shape != b.data.shape:
        raise ValueError(f"frame shapes differ: {a.data.shape} vs {b.data.shape}")


def psnr(a: Frame, b: Frame) -> float:
    """10 log10(1 / MSE) in dB, capped at PSNR_CAP."""
    _check_pair(a, b)
    d = a.data - b.data
    mse = float(np.mean(d * d))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP)


def _gaussian_kernel() -> np.ndarray:
    half = (SSIM_WINDOW - 1) / 2.0
    x = np.arange(SSIM_WINDOW) - half
    k = np.exp(-(x * x) / (2.0 * SSIM_SIGMA ** 2))
    k /= k.sum()
    return np.outer(k, k)


_SSIM_KERNEL = _gaussian_kernel()


def ssim(a: Frame, b: Frame) -> float:
    """Mean local SSIM over valid window positions, averaged over channels."""
    _check_pair(a, b)
    h, w = a.data.shape[:2]
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise InputError(
            "frame-too-small", f"{h}x{w} is below the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )
    kern = _SSIM_KERNEL
    scores = []
    for c in range(3):
        x = a.data[:, :, c]
        y = b.data[:, :, c]
        mu_x = convolve2d(x, kern, mode="valid")
        mu_y = convolve2d(y, kern, mode="valid")
        var_x = convolve2d(x * x, kern, mode="valid") - mu_x * mu_x
        var_y = convolve2d(y * y, kern, mode="valid") - mu_y * mu_y
        cov = convolve2d(x * y, kern, mode="valid") - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
        den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
        scores.append(np.mean(num / den))
    return float(np.mean(scores))


def warp_error(
    clip: VideoClip,
    flows_fwd: Sequence[FlowField],
    conf: Sequence[ConfidenceMap],
) -> MetricReport:
    """Confidence-weighted flow-warping MSE between adjacent frames.

    For each frame t the residual is I_t(p) minus I_{t+1} sampled at
    p + flow_t(p), with the squared norm taken over channels; per-frame
    values are the confidence-weighted mean of that quantity. Frames
    whose total confidence is zero carry no signal; they are skipped and
    their indices reported under params["skipped_frames"].
    """
    n = len(clip)
    if n < 2:
        raise ValueError("warping error needs at least two frames")
    if len(flows_fwd) != n - 1 or len(conf) != n - 1:
        raise ValueError(
            f"expected {n - 1} flows and confidence maps, got {len(flows_fwd)}/{len(conf)}"
        )
    h, w = clip.height, clip.width
    ys, xs = np.mgrid[0:h, 0:w]
    values, skipped = [], []
    for t in range(n - 1):
        if flows_fwd[t].data.shape[:2] != (h, w) or conf[t].data.shape != (h, w):
            raise ValueError(f"flow or confidence for frame {t} does not match the clip")
        weight = conf[t].data
        total = float(weight.sum())
        if total == 0.0:
            skipped.append(t)
            continue
        ex = xs + flows_fwd[t].u
        ey = ys + flows_fwd[t].v
        warped = _bilinear_sample(clip[t + 1].data, ex, ey)
        resid = clip[t].data - warped
        sq = np.sum(resid * resid, axis=2)
        values.append(float(np.sum(weight * sq) / total))
    params = {
        "weighting": "confidence",
        "sampling": "bilinear",
        "skipped_frames": skipped,
    }
    return MetricReport.from_values("warp_error", values, params)