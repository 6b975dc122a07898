"""Forward/backward view rendering and occlusion-mask machinery.

The rendering model is unit-weight bilinear forward splatting: every
source pixel distributes a total weight of 1 over the four integer
neighbors of its displaced position, colors are blended per destination
as (weighted sum / total weight), and destinations whose total weight
falls below ``TAU_W`` are declared holes. Sources whose displaced
position leaves the raster are dropped entirely, so the sum of the
weight raster equals the count of in-bounds sources.

Fold-overs (several sources landing on one destination at different
depths) are resolved by a hard nearest-bin rule: a source contributes
only where its inverse depth is within ``TAU_Z`` (relative) of the
largest inverse depth seen at that destination.

All coordinates follow the package convention: row-major ``[y, x]``,
origin at the top-left, flow ``u`` to the right and ``v`` down.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import GeometryError
from .imaging import (
    ConfidenceMap,
    DepthMap,
    DisparityMap,
    FlowField,
    Frame,
    OcclusionMask,
)

TAU_W = 1e-4   # total splat weight below this marks a hole
TAU_Z = 0.05   # relative inverse-depth tolerance of the nearest bin

# forward-backward consistency constants (classical defaults)
FB_ALPHA = 0.01
FB_BETA = 0.5


class CameraPose:
    """Pinhole camera: intrinsics plus a camera-to-world rigid transform."""

    __slots__ = ("fx", "fy", "cx", "cy", "rotation", "translation")

    def __init__(self, fx, fy, cx, cy, rotation, translation):
        if not (fx > 0 and fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={fx}, fy={fy}")
        rot = np.array(rotation, dtype=np.float64)
        if rot.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rot.shape}")
        if not np.allclose(rot.T @ rot, np.eye(3), atol=1e-6):
            raise ValueError("rotation is not orthonormal")
        tr = np.array(translation, dtype=np.float64)
        if tr.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got {tr.shape}")
        self.fx, self.fy = float(fx), float(fy)
        self.cx, self.cy = float(cx), float(cy)
        rot.setflags(write=False)
        tr.setflags(write=False)
        self.rotation = rot
        self.translation = tr


class FillResult(NamedTuple):
    frame: Frame
    all_occluded: bool


def _shift_components(shift_field) -> tuple[np.ndarray, np.ndarray]:
    """du, dv for a FlowField or a (horizontal-only) DisparityMap."""
    if isinstance(shift_field, FlowField):
        return shift_field.u, shift_field.v
    if isinstance(shift_field, DisparityMap):
        return shift_field.data, np.zeros_like(shift_field.data)
    raise TypeError(f"expected FlowField or DisparityMap, got {type(shift_field).__name__}")


def _splat_fields(
    fields: np.ndarray,
    du: np.ndarray,
    dv: np.ndarray,
    depth: Optional[np.ndarray] = None,
    exclude: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate (h, w, k) channel fields into a displaced raster.

    Returns (accumulated fields, weight raster), unnormalized. When
    ``depth`` (inverse depth per source) is given, sources more than
    TAU_Z (relative) behind the nearest inverse depth at a destination
    are suppressed there. ``exclude`` drops sources where it is nonzero.

    Corner deposits happen in a fixed order (NW, NE, SW, SE over all
    sources in row-major order), which keeps the floating-point
    accumulation reproducible.
    """
    h, w = du.shape
    k = fields.shape[2]
    ys, xs = np.mgrid[0:h, 0:w]
    ex = (xs + du).ravel()
    ey = (ys + dv).ravel()
    keep = (ex >= 0) & (ex <= w - 1) & (ey >= 0) & (ey <= h - 1)
    if exclude is not None:
        keep &= exclude.ravel() == 0
    idx = np.nonzero(keep)[0]
    ex, ey = ex[idx], ey[idx]
    x0 = np.floor(ex).astype(np.int64)
    y0 = np.floor(ey).astype(np.int64)
    fx = ex - x0
    fy = ey - y0
    vals = fields.reshape(-1, k)[idx]
    corners = (
        (y0, x0, (1.0 - fx) * (1.0 - fy)),
        (y0, x0 + 1, fx * (1.0 - fy)),
        (y0 + 1, x0, (1.0 - fx) * fy),
        (y0 + 1, x0 + 1, fx * fy),
    )
    # zero-weight corners are skipped; since destinations lie in
    # [0, w-1] x [0, h-1], every deposited index is in-raster
    zmax = None
    if depth is not None:
        dvals = depth.ravel()[idx]
        zmax = np.zeros((h, w))
        for cy, cx, cw in corners:
            m = cw > 0
            np.maximum.at(zmax, (cy[m], cx[m]), dvals[m])
    acc = np.zeros((h, w, k))
    weight = np.zeros((h, w))
    for cy, cx, cw in corners:
        m = np.nonzero(cw > 0)[0]
        if zmax is not None:
            m = m[dvals[m] >= (1.0 - TAU_Z) * zmax[cy[m], cx[m]]]
        np.add.at(weight, (cy[m], cx[m]), cw[m])
        np.add.at(acc, (cy[m], cx[m]), cw[m][:, None] * vals[m])
    return acc, weight


def _normalize_color(acc: np.ndarray, weight: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Blend accumulated color by weight; holes (weight < TAU_W) become 0."""
    hole = weight < TAU_W
    safe = np.where(hole, 1.0, weight)
    color = np.clip(acc / safe[:, :, None], 0.0, 1.0)
    color[hole] = 0.0
    return color, hole


def forward_splat(frame: Frame, shift_field) -> tuple[Frame, OcclusionMask, np.ndarray]:
    """Render ``frame`` under a per-pixel shift; returns (frame, hole mask, weights).

    A zero shift field reproduces the input bit for bit with an empty
    mask. The weight raster is returned for diagnostics; its total is
    the number of sources whose destinations stayed in-bounds.
    """
    du, dv = _shift_components(shift_field)
    acc, weight = _splat_fields(frame.data, du, dv)
    color, hole = _normalize_color(acc, weight)
    return Frame(color), OcclusionMask(hole), weight


def zbuffer_resolve(
    frame: Frame, disparity: DisparityMap, depth: DepthMap
) -> tuple[Frame, OcclusionMask]:
    """Forward splat with fold-overs resolved toward the nearest depth bin.

    Where candidate sources disagree in inverse depth by more than TAU_Z
    (relative), only the nearest bin's sources blend. A warp with no
    fold-overs is identical to :func:`forward_splat`.
    """
    acc, weight = _splat_fields(frame.data, disparity.data, np.zeros_like(disparity.data), depth=depth.data)
    color, hole = _normalize_color(acc, weight)
    return Frame(color), OcclusionMask(hole)


def backward_render(
    frame_at_target: Frame,
    disparity: DisparityMap,
    exclude: Optional[OcclusionMask] = None,
) -> tuple[Frame, OcclusionMask]:
    """Render a target-view frame back to the reference viewpoint.

    ``disparity`` is the reference-to-target field expressed on the grid
    of ``frame_at_target``; it is negated internally. ``exclude`` marks
    target pixels (hole-filled ones, typically) that must not act as
    sources: their content is synthetic, so letting them splat would
    paint invented color over real reference pixels.

    The mask in the result marks reference pixels nothing splats back
    onto, i.e. regions visible only in the reference view.
    """
    du = -disparity.data
    dv = np.zeros_like(du)
    excl = None if exclude is None else exclude.data
    acc, weight = _splat_fields(frame_at_target.data, du, dv, exclude=excl)
    color, hole = _normalize_color(acc, weight)
    return Frame(color), OcclusionMask(hole)


def _bilinear_sample(field: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Sample (h, w, k) ``field`` at float positions; callers bound-check."""
    h, w = field.shape[:2]
    x0 = np.clip(np.floor(sx), 0, max(w - 2, 0)).astype(np.int64)
    y0 = np.clip(np.floor(sy), 0, max(h - 2, 0)).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    return (
        field[y0, x0] * (1.0 - fx) * (1.0 - fy)
        + field[y0, x1] * fx * (1.0 - fy)
        + field[y1, x0] * (1.0 - fx) * fy
        + field[y1, x1] * fx * fy
    )


def fb_confidence(
    flow_fwd: FlowField,
    flow_bwd: FlowField,
    alpha: float = FB_ALPHA,
    beta: float = FB_BETA,
) -> ConfidenceMap:
    """Binary forward-backward consistency map.

    A pixel is confident when following ``flow_fwd`` and then the
    bilinearly sampled ``flow_bwd`` lands (nearly) back on itself:

        ``|f + b|^2 <= alpha * (|f|^2 + |b|^2) + beta``

    Pixels whose forward endpoint leaves the raster get confidence 0.
    """
    if flow_fwd.data.shape != flow_bwd.data.shape:
        raise ValueError("flow fields must share dimensions")
    h, w = flow_fwd.height, flow_fwd.width
    ys, xs = np.mgrid[0:h, 0:w]
    ex = xs + flow_fwd.u
    ey = ys + flow_fwd.v
    inb = (ex >= 0) & (ex <= w - 1) & (ey >= 0) & (ey <= h - 1)
    back = _bilinear_sample(flow_bwd.data, ex, ey)
    resid = flow_fwd.data + back
    r2 = np.sum(resid * resid, axis=2)
    bound = alpha * (
        np.sum(flow_fwd.data * flow_fwd.data, axis=2) + np.sum(back * back, axis=2)
    ) + beta
    return ConfidenceMap(((r2 <= bound) & inb).astype(np.float64))


def _sample_mask_nearest(mask, flow, ys, xs) -> np.ndarray:
    """Nearest-neighbor mask lookup at (x+u, y+v); out of raster reads 0."""
    h, w = mask.data.shape
    ix = np.floor(xs + flow.u + 0.5).astype(np.int64)
    iy = np.floor(ys + flow.v + 0.5).astype(np.int64)
    inb = (ix >= 0) & (ix <= w - 1) & (iy >= 0) & (iy <= h - 1)
    out = np.zeros((h, w), dtype=np.float64)
    out[inb] = mask.data[iy[inb], ix[inb]]
    return out


def refine_mask(
    m_curr: OcclusionMask,
    m_prev: Optional[OcclusionMask],
    m_next: Optional[OcclusionMask],
    flow_to_prev: Optional[FlowField],
    flow_to_next: Optional[FlowField],
    conf: ConfidenceMap,
) -> OcclusionMask:
    """Temporal occlusion-mask refinement.

    Each pixel samples the previous and next frames' masks along the
    flows from the current frame to those frames (nearest-neighbor,
    out-of-bounds or missing neighbors contribute 0) and switches to 1
    when ``(sampled_prev + sampled_next) * conf >= 1``; otherwise it
    keeps its current value. The rule only ever sets pixels, so the
    output dominates the input pointwise and a second application with
    the same neighbors changes nothing.
    """
    h, w = m_curr.data.shape
    ys, xs = np.mgrid[0:h, 0:w]
    total = np.zeros((h, w), dtype=np.float64)
    if m_prev is not None:
        total += _sample_mask_nearest(m_prev, flow_to_prev, ys, xs)
    if m_next is not None:
        total += _sample_mask_nearest(m_next, flow_to_next, ys, xs)
    hit = total * conf.data >= 1.0
    return OcclusionMask(np.where(hit, np.uint8(1), m_curr.data))


def hole_fill(
    frame: Frame,
    mask: OcclusionMask,
    fallback: Optional[Sequence[float]] = None,
) -> FillResult:
    """Push-pull fill of masked pixels.

    Known pixels (mask 0) pass through untouched. Holes take values from
    an average pyramid of the known content, so every filled value lies
    inside the per-channel convex hull of the known values. When the
    mask covers the whole frame there is nothing to average from; the
    frame is filled with ``fallback`` (default mid-gray) and the result
    is flagged ``all_occluded``.
    """
    if mask.data.shape != frame.data.shape[:2]:
        raise ValueError("mask and frame dimensions differ")
    if np.all(mask.data == 1):
        fill = np.array(fallback if fallback is not None else (0.5, 0.5, 0.5), dtype=np.float64)
        if fill.shape != (3,) or not np.all((fill >= 0) & (fill <= 1)):
            raise ValueError("fallback must be 3 intensities in [0, 1]")
        return FillResult(Frame(np.broadcast_to(fill, frame.data.shape)), True)

    levels = []
    v = frame.data * (1.0 - mask.data[:, :, None])
    w = 1.0 - mask.data.astype(np.float64)
    while v.shape[0] > 1 or v.shape[1] > 1:
        levels.append((v, w))
        h0, w0 = w.shape
        h1, w1 = h0 + (h0 & 1), w0 + (w0 & 1)
        pv = np.zeros((h1, w1, 3))
        pw = np.zeros((h1, w1))
        pv[:h0, :w0] = v * w[:, :, None]
        pw[:h0, :w0] = w
        sw = pw.reshape(h1 // 2, 2, w1 // 2, 2).sum(axis=(1, 3))
        sv = pv.reshape(h1 // 2, 2, w1 // 2, 2, 3).sum(axis=(1, 3))
        v = np.where(sw[:, :, None] > 0, sv / np.where(sw == 0, 1.0, sw)[:, :, None], 0.0)
        w = sw / 4.0
    filled = v
    for v, w in reversed(levels):
        h0, w0 = w.shape
        up = filled[np.arange(h0) // 2][:, np.arange(w0) // 2]
        filled = np.where((w == 0)[:, :, None], up, v)
    return FillResult(Frame(np.clip(filled, 0.0, 1.0)), False)


def reprojection_flow(
    depth: DepthMap,
    src: CameraPose,
    dst: CameraPose,
    depth_scale: float,
    depth_shift: float,
) -> FlowField:
    """Optical flow induced by moving a pinhole camera from src to dst.

    Relative inverse depth is mapped to metric depth as
    ``z = 1 / (depth_scale * D + depth_shift)``; each pixel is
    unprojected with the source intrinsics, carried through the rigid
    transform dst^-1 * src (poses are camera-to-world), and reprojected.
    Points that land at non-positive depth in the destination camera
    have no valid image; their flow is a large finite sentinel that any
    downstream bounds check treats as out-of-raster. If every pixel
    lands behind the camera the view is degenerate and a GeometryError
    ("behind-camera") is raised. A non-positive recovered source depth
    means the scale/shift mapping is invalid for this map
    ("invalid-depth-mapping").
    """
    denom = depth_scale * depth.data + depth_shift
    if np.any(denom <= 0):
        raise GeometryError(
            "invalid-depth-mapping",
            "depth_scale * D + depth_shift must be positive everywhere",
        )
    z = 1.0 / denom
    h, w = depth.data.shape
    ys, xs = np.mgrid[0:h, 0:w]
    xc = (xs - src.cx) / src.fx * z
    yc = (ys - src.cy) / src.fy * z
    pts = np.stack([xc, yc, z], axis=-1)                      # source camera coords
    world = pts @ src.rotation.T + src.translation
    cam2 = (world - dst.translation) @ dst.rotation           # R^T (X - t)
    zd = cam2[:, :, 2]
    behind = zd <= 0
    if np.all(behind):
        raise GeometryError("behind-camera", "every point reprojects behind the camera")
    zsafe = np.where(behind, 1.0, zd)
    px = dst.fx * cam2[:, :, 0] / zsafe + dst.cx
    py = dst.fy * cam2[:, :, 1] / zsafe + dst.cy
    u = px - xs
    v = py - ys
    sentinel = 4.0 * (w + h)  # finite, but far outside any bounds check
    u = np.where(behind, sentinel, u)
    v = np.where(behind, sentinel, v)
    return FlowField(np.stack([u, v], axis=-1))
