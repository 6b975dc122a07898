"""Paired-view sample generation.

For every frame of an input clip the pipeline renders the scene under a
horizontally shifted viewpoint, fills the disoccluded holes, renders the
result back to the original viewpoint, and keeps the back-render's hole
mask as the frame's occlusion mask. The masks are then refined
temporally: a pixel whose flow-aligned neighbors are masked in both
adjacent frames becomes masked too, gated by flow-consistency
confidence. Refinement for frame t reads only the unrefined neighbor
masks, so the result is independent of evaluation order and identical
under any worker count.

Disparity is normalized by the clip-wide inverse-depth peak rather than
per frame; a per-frame peak would make the stereo baseline pump as the
nearest object moves.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InputError
from .imaging import (
    ConfidenceMap,
    DepthMap,
    DisparityMap,
    FlowField,
    Frame,
    OcclusionMask,
    VideoClip,
)
from .rendering import (
    FB_ALPHA,
    FB_BETA,
    _normalize_color,
    _splat_fields,
    backward_render,
    fb_confidence,
    hole_fill,
    refine_mask,
)

WORKERS_ENV = "STEREOGEN_WORKERS"


@dataclass(frozen=True)
class StereoShift:
    """Horizontal view shift: ``gain`` px of disparity at the nearest depth,
    ``direction`` +1 or -1 for which side the target view sits on."""

    gain: float
    direction: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.gain) and self.gain >= 0):
            raise ValueError(f"gain must be finite and non-negative, got {self.gain}")
        if self.direction not in (-1, 1):
            raise ValueError(f"direction must be -1 or +1, got {self.direction}")


class StereoSample:
    """One generated stereo training sample plus per-frame diagnostics.

    ``masked_reference`` equals ``gt_reference`` wherever the refined
    mask is 0 and is black where it is 1; that invariant is checked at
    construction time.
    """

    __slots__ = (
        "gt_reference",
        "target_view",
        "masked_reference",
        "masks",
        "unrefined_masks",
        "back_rendered",
        "confidences",
        "fill_fallbacks",
    )

    def __init__(
        self,
        gt_reference: VideoClip,
        target_view: VideoClip,
        masked_reference: VideoClip,
        masks: Sequence[OcclusionMask],
        unrefined_masks: Sequence[OcclusionMask],
        back_rendered: VideoClip,
        confidences: Sequence[ConfidenceMap],
        fill_fallbacks: Sequence[bool],
    ):
        n = len(gt_reference)
        parts = (target_view, masked_reference, masks, unrefined_masks, back_rendered, confidences, fill_fallbacks)
        if any(len(p) != n for p in parts):
            raise ValueError("all sample members must cover the same frame count")
        dims = (gt_reference.height, gt_reference.width)
        for clip in (target_view, masked_reference, back_rendered):
            if (clip.height, clip.width) != dims:
                raise ValueError("sample clips must share dimensions")
        for t in range(n):
            keep = masks[t].data == 0
            if not np.array_equal(
                masked_reference[t].data[keep], gt_reference[t].data[keep]
            ):
                raise ValueError(f"frame {t}: masked_reference differs from gt outside the mask")
            if not np.all(masked_reference[t].data[~keep] == 0.0):
                raise ValueError(f"frame {t}: masked_reference must be black inside the mask")
        self.gt_reference = gt_reference
        self.target_view = target_view
        self.masked_reference = masked_reference
        self.masks = tuple(masks)
        self.unrefined_masks = tuple(unrefined_masks)
        self.back_rendered = back_rendered
        self.confidences = tuple(confidences)
        self.fill_fallbacks = tuple(bool(f) for f in fill_fallbacks)

    def __len__(self):
        return len(self.gt_reference)


def depth_to_disparity(
    depth: DepthMap, shift: StereoShift, peak: Optional[float] = None
) -> DisparityMap:
    """Disparity linear in inverse depth: ``direction * gain * D / peak``.

    ``peak`` defaults to the map's own maximum; pass the clip-wide
    maximum when converting frames of a clip so the baseline stays
    constant over time. An all-zero (infinitely far) map yields zero
    disparity. Gains of a quarter frame width or more are rejected as
    degenerate warps.
    """
    if shift.gain >= depth.width / 4:
        raise ValueError(
            f"gain {shift.gain} is degenerate for width {depth.width} (must be < width/4)"
        )
    top = float(depth.data.max()) if peak is None else float(peak)
    if peak is not None and (not np.isfinite(top) or top < float(depth.data.max())):
        raise ValueError("peak must be finite and >= the map's maximum inverse depth")
    if top == 0.0:
        return DisparityMap(np.zeros_like(depth.data))
    return DisparityMap(shift.direction * shift.gain * depth.data / top)


def _resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def _check_geometry(clip, depths, flows_fwd, flows_bwd):
    n = len(clip)
    if len(depths) != n:
        raise ValueError(f"expected {n} depth maps, got {len(depths)}")
    if len(flows_fwd) != n - 1 or len(flows_bwd) != n - 1:
        raise ValueError(
            f"expected {n - 1} forward and backward flows, got "
            f"{len(flows_fwd)}/{len(flows_bwd)}"
        )
    dims = (clip.height, clip.width)
    for t, d in enumerate(depths):
        if d.data.shape != dims:
            raise InputError("dimension-mismatch", f"depth for frame {t} is {d.data.shape}, clip is {dims}")
    for t in range(n - 1):
        if flows_fwd[t].data.shape[:2] != dims:
            raise InputError("dimension-mismatch", f"forward flow for frame {t} does not match the clip")
        if flows_bwd[t].data.shape[:2] != dims:
            raise InputError("dimension-mismatch", f"backward flow for frame {t} does not match the clip")


def _render_frame(frame: Frame, depth: DepthMap, shift: StereoShift, peak: float, fill_holes: bool):
    """One frame's shift-render-and-back stage. Pure; safe to run per-frame
    in parallel."""
    disp = depth_to_disparity(depth, shift, peak=peak)
    fields = np.concatenate([frame.data, disp.data[:, :, None]], axis=2)
    acc, weight = _splat_fields(fields, disp.data, np.zeros_like(disp.data), depth=depth.data)
    color, hole = _normalize_color(acc[:, :, :3], weight)
    hole_mask = OcclusionMask(hole)
    # disparity carried to the target grid; hole pixels keep a dummy 0,
    # they are excluded as back-render sources anyway
    target_disp = np.where(hole, 0.0, acc[:, :, 3] / np.where(hole, 1.0, weight))
    used_fallback = False
    if fill_holes:
        fallback = tuple(float(frame.data[:, :, c].mean()) for c in range(3))
        filled = hole_fill(Frame(color), hole_mask, fallback=fallback)
        target, used_fallback = filled.frame, filled.all_occluded
    else:
        target = Frame(color)
    back, mask = backward_render(target, DisparityMap(target_disp), exclude=hole_mask)
    return target, back, mask, used_fallback


def generate_sample(
    clip: VideoClip,
    depths: Sequence[DepthMap],
    flows_fwd: Sequence[FlowField],
    flows_bwd: Sequence[FlowField],
    shift: StereoShift,
    alpha: float = FB_ALPHA,
    beta: float = FB_BETA,
    refine: bool = True,
    fill_holes: bool = True,
    workers: Optional[int] = None,
) -> StereoSample:
    """Generate a paired-view sample from a clip with per-frame depth and
    adjacent-frame flows.

    ``flows_fwd[t]`` maps frame t to t+1 and ``flows_bwd[t]`` maps t+1
    back to t. Confidence for a frame is computed from the flow pair
    ahead of it (the pair behind it, with roles swapped, for the last
    frame). ``workers`` defaults to the STEREOGEN_WORKERS environment
    variable, then 1; any value produces identical output.
    """
    _check_geometry(clip, depths, flows_fwd, flows_bwd)
    n = len(clip)
    peak = max(float(d.data.max()) for d in depths)
    workers = _resolve_workers(workers)

    def job(t):
        return _render_frame(clip[t], depths[t], shift, peak, fill_holes)

    if workers == 1 or n == 1:
        staged = [job(t) for t in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, n)) as pool:
            staged = list(pool.map(job, range(n)))  # order-preserving
    targets, backs, raw_masks, fallbacks = zip(*staged)

    ones = ConfidenceMap(np.ones((clip.height, clip.width)))
    confidences = []
    for t in range(n):
        if n == 1:
            confidences.append(ones)
        elif t < n - 1:
            confidences.append(fb_confidence(flows_fwd[t], flows_bwd[t], alpha, beta))
        else:
            confidences.append(fb_confidence(flows_bwd[n - 2], flows_fwd[n - 2], alpha, beta))

    if refine:
        masks = [
            refine_mask(
                raw_masks[t],
                raw_masks[t - 1] if t > 0 else None,
                raw_masks[t + 1] if t < n - 1 else None,
                flows_bwd[t - 1] if t > 0 else None,
                flows_fwd[t] if t < n - 1 else None,
                confidences[t],
            )
            for t in range(n)
        ]
    else:
        masks = list(raw_masks)

    masked = [
        Frame(clip[t].data * (1.0 - masks[t].data)[:, :, None]) for t in range(n)
    ]
    return StereoSample(
        gt_reference=clip,
        target_view=VideoClip(targets),
        masked_reference=VideoClip(masked),
        masks=masks,
        unrefined_masks=raw_masks,
        back_rendered=VideoClip(backs),
        confidences=confidences,
        fill_fallbacks=fallbacks,
    )
