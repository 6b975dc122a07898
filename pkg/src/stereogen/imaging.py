"""Raster value types: frames, clips, depth / disparity / flow fields, masks.

Conventions used everywhere in this package:

* arrays are row-major with the origin at the top-left pixel and are
  indexed ``[y, x]``;
* flow and disparity are measured in pixels, with ``u`` along +x
  (rightward) and ``v`` along +y (downward);
* depth is *relative inverse depth*: larger values are nearer to the
  camera, zero is infinitely far away;
* intensities live in ``[0, 1]``.

All types copy their input and mark the wrapped array read-only, so
instances are immutable values that can be shared freely across threads.
Constructors reject anything that violates the type's invariants.
"""

from __future__ import annotations

import numpy as np


def _finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} must contain only finite values")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Frame:
    """A single RGB image, shape ``(h, w, 3)``, float intensities in [0, 1]."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"frame must have shape (h, w, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("frame must be at least 1x1")
        _finite(arr, "frame")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("frame intensities must lie in [0, 1]")
        self.data = _freeze(arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __repr__(self):
        return f"Frame({self.width}x{self.height})"


class VideoClip:
    """An ordered, non-empty sequence of same-sized frames (index t is 0-based)."""

    __slots__ = ("frames",)

    def __init__(self, frames):
        frames = tuple(frames)
        if not frames:
            raise ValueError("clip must contain at least one frame")
        for i, f in enumerate(frames):
            if not isinstance(f, Frame):
                raise TypeError(f"clip element {i} is not a Frame")
            if f.data.shape != frames[0].data.shape:
                raise ValueError(
                    f"frame {i} has shape {f.data.shape[:2]}, "
                    f"expected {frames[0].data.shape[:2]}"
                )
        self.frames = frames

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, t: int) -> Frame:
        return self.frames[t]

    def __iter__(self):
        return iter(self.frames)

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def width(self) -> int:
        return self.frames[0].width

    def __repr__(self):
        return f"VideoClip({len(self.frames)} frames, {self.width}x{self.height})"


class DepthMap:
    """Per-pixel relative inverse depth, shape ``(h, w)``; larger = nearer."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"depth map must have shape (h, w), got {arr.shape}")
        _finite(arr, "depth map")
        if arr.min() < 0.0:
            raise ValueError("inverse depth must be non-negative")
        self.data = _freeze(arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


class DisparityMap:
    """Signed horizontal pixel shift per pixel, shape ``(h, w)``."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"disparity map must have shape (h, w), got {arr.shape}")
        _finite(arr, "disparity map")
        if np.abs(arr).max() > arr.shape[1]:
            raise ValueError("|disparity| must not exceed the frame width")
        self.data = _freeze(arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


class FlowField:
    """Per-pixel (u, v) displacement in pixels, shape ``(h, w, 2)``."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ValueError(f"flow field must have shape (h, w, 2), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("flow field must be at least 1x1")
        _finite(arr, "flow field")
        self.data = _freeze(arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def u(self) -> np.ndarray:
        return self.data[..., 0]

    @property
    def v(self) -> np.ndarray:
        return self.data[..., 1]


class OcclusionMask:
    """Strictly binary hole indicator, shape ``(h, w)``; 1 marks occluded."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.asarray(data)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"mask must have shape (h, w), got {arr.shape}")
        if arr.dtype == bool:
            arr = arr.astype(np.uint8)
        else:
            if not np.all(np.isin(np.unique(arr), (0, 1))):
                raise ValueError("mask values must be exactly 0 or 1")
            arr = arr.astype(np.uint8)
        self.data = _freeze(arr.copy())

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def area(self) -> int:
        """Number of occluded pixels."""
        return int(self.data.sum())

    def union(self, other: "OcclusionMask") -> "OcclusionMask":
        if other.data.shape != self.data.shape:
            raise ValueError("mask dimensions differ")
        return OcclusionMask(self.data | other.data)

    def intersection(self, other: "OcclusionMask") -> "OcclusionMask":
        if other.data.shape != self.data.shape:
            raise ValueError("mask dimensions differ")
        return OcclusionMask(self.data & other.data)


class ConfidenceMap:
    """Per-pixel flow-consistency confidence in [0, 1], shape ``(h, w)``."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"confidence map must have shape (h, w), got {arr.shape}")
        _finite(arr, "confidence map")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("confidence values must lie in [0, 1]")
        self.data = _freeze(arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]
