"""Analytic test scenes: a textured plane with a textured rectangle
sliding over it at a second depth.

Textures are sinusoids evaluated at continuous coordinates, so subpixel
rectangle positions have an exact appearance, and depth and flow are
exact by construction: the rectangle carries its velocity, the
background is static. Ground-truth flow is the surface motion of the
pixel's own layer, including pixels that the rectangle is about to
cover.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .imaging import DepthMap, FlowField, Frame, VideoClip

_BG_FREQ = (0.37, 0.23)
_FG_FREQ = (0.53, 0.31)
_AMPLITUDE = 0.3


@dataclass(frozen=True)
class SceneSpec:
    height: int = 48
    width: int = 64
    frames: int = 5
    bg_depth: float = 1.0   # inverse depth of the plane
    fg_depth: float = 2.0   # inverse depth of the rectangle (nearer when larger)
    rect: Optional[tuple] = (18.0, 12.0, 20.0, 16.0)   # x0, y0, w, h at frame 0
    velocity: tuple = (0.0, 0.0)                        # rectangle px/frame
    seed: int = 0


def rect_origin(spec: SceneSpec, t: int) -> tuple[float, float]:
    x0, y0 = spec.rect[0], spec.rect[1]
    return x0 + spec.velocity[0] * t, y0 + spec.velocity[1] * t


def fg_region(spec: SceneSpec, t: int) -> np.ndarray:
    """Boolean (h, w) raster of pixels covered by the rectangle at frame t."""
    if spec.rect is None:
        return np.zeros((spec.height, spec.width), dtype=bool)
    rx, ry = rect_origin(spec, t)
    rw, rh = spec.rect[2], spec.rect[3]
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width]
    return (xs >= rx) & (xs < rx + rw) & (ys >= ry) & (ys < ry + rh)


def _texture(xs, ys, freq, phases):
    channels = [
        0.5 + _AMPLITUDE * np.sin(freq[0] * xs + freq[1] * ys + p) for p in phases
    ]
    return np.stack(channels, axis=-1)


def synth_scene(spec: SceneSpec):
    """Render the scene; returns (clip, depths, flows_fwd, flows_bwd).

    ``flows_fwd[t]`` maps frame t to t+1, ``flows_bwd[t]`` maps t+1 to t;
    both lists have frames-1 entries.
    """
    if spec.frames < 1 or spec.height < 1 or spec.width < 1:
        raise ValueError("scene must have at least one frame and one pixel")
    rng = np.random.default_rng(spec.seed)
    bg_phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
    fg_phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    background = _texture(xs, ys, _BG_FREQ, bg_phases)

    frames, depths = [], []
    regions = [fg_region(spec, t) for t in range(spec.frames)]
    for t in range(spec.frames):
        img = background.copy()
        depth = np.full((spec.height, spec.width), spec.bg_depth)
        if spec.rect is not None:
            rx, ry = rect_origin(spec, t)
            fg = _texture(xs - rx, ys - ry, _FG_FREQ, fg_phases)
            inside = regions[t]
            img[inside] = fg[inside]
            depth[inside] = spec.fg_depth
        frames.append(Frame(img))
        depths.append(DepthMap(depth))

    vx, vy = float(spec.velocity[0]), float(spec.velocity[1])
    flows_fwd, flows_bwd = [], []
    for t in range(spec.frames - 1):
        fwd = np.zeros((spec.height, spec.width, 2))
        fwd[regions[t]] = (vx, vy)
        bwd = np.zeros((spec.height, spec.width, 2))
        bwd[regions[t + 1]] = (-vx, -vy)
        flows_fwd.append(FlowField(fwd))
        flows_bwd.append(FlowField(bwd))
    return VideoClip(frames), tuple(depths), tuple(flows_fwd), tuple(flows_bwd)


def covisible_forward(spec: SceneSpec, t: int) -> np.ndarray:
    """Pixels of frame t whose surface point is still visible at t+1.

    A rectangle pixel stays visible while its destination remains inside
    the raster; a background pixel stays visible unless the rectangle
    covers its (static) position at t+1.
    """
    h, w = spec.height, spec.width
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    inside = fg_region(spec, t)
    next_inside = fg_region(spec, t + 1)
    vx, vy = spec.velocity
    ex = xs + np.where(inside, vx, 0.0)
    ey = ys + np.where(inside, vy, 0.0)
    in_raster = (ex >= 0) & (ex <= w - 1) & (ey >= 0) & (ey <= h - 1)
    visible = np.where(inside, in_raster, in_raster & ~next_inside)
    return visible


def flicker_count(masks, flows_fwd, flows_bwd) -> int:
    """Count single-frame mask flickers across a clip.

    A pixel flickers at frame t when the mask values sampled from both
    temporal neighbors (nearest-neighbor along the t->t-1 and t->t+1
    flows, both landing in-raster) disagree with its own value.
    """
    n = len(masks)
    total = 0
    for t in range(1, n - 1):
        h, w = masks[t].data.shape
        ys, xs = np.mgrid[0:h, 0:w]
        samples = []
        for mask, flow in ((masks[t - 1], flows_bwd[t - 1]), (masks[t + 1], flows_fwd[t])):
            ix = np.floor(xs + flow.u + 0.5).astype(np.int64)
            iy = np.floor(ys + flow.v + 0.5).astype(np.int64)
            inb = (ix >= 0) & (ix <= w - 1) & (iy >= 0) & (iy <= h - 1)
            val = np.zeros((h, w), dtype=np.int64)
            val[inb] = mask.data[iy[inb], ix[inb]]
            samples.append((val, inb))
        (prev_v, prev_in), (next_v, next_in) = samples
        cur = masks[t].data.astype(np.int64)
        flicker = prev_in & next_in & (prev_v != cur) & (next_v != cur)
        total += int(flicker.sum())
    return total
