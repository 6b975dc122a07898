"""Bit-exact codecs for the on-disk formats.

Formats:

* PFM, grayscale ``Pf`` only. The sign of the scale line encodes
  endianness (negative = little-endian). Scanlines are stored bottom-up
  and converted to this package's top-down convention at the codec
  boundary. ``write_pfm`` always emits the canonical little-endian header
  ``Pf\\n{w} {h}\\n-1.0\\n``, so bytes it produced round-trip identically.
* Middlebury ``.flo``: float32 magic 202021.25, two int32 dimensions,
  then interleaved float32 (u, v) pairs, row-major, little-endian.
* PNG, 8- or 16-bit, grayscale or RGB, no palette, no alpha. Intensities
  map linearly onto [0, 1]; 16-bit is the canonical frame interchange
  (a frame decoded from 16-bit data re-encodes to the same samples).
  The pixel payload is handled by OpenCV; the IHDR chunk is inspected
  directly because OpenCV silently expands palette images.
* Raw latent tensors: four little-endian u32 dims (frames, channels,
  height, width) followed by a float32 payload.

Errors are raised as :class:`~stereogen.errors.CodecError` with stable
codes: ``bad-pfm-header``, ``unsupported-pfm-kind``,
``pfm-dimension-overflow``, ``pfm-truncated``, ``bad-flo-header``,
``bad-flo-magic``, ``flo-truncated``, ``bad-png-signature``,
``unsupported-png-format``, ``bad-png-payload``, ``non-binary-mask``,
``latent-truncated``, and ``non-finite-payload`` for any format whose
payload contains NaN or infinity.
"""

from __future__ import annotations

import struct

import cv2
import numpy as np

from .errors import CodecError
from .imaging import DepthMap, FlowField, Frame, OcclusionMask

_FLO_MAGIC = 202021.25
_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_MAX_PIXELS = 1 << 26


# ---------------------------------------------------------------------------
# PFM

def _read_pfm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(data) and data[pos : pos + 1].isspace():
        pos += 1
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise CodecError("bad-pfm-header", "truncated header")
    return data[start:pos], pos


def read_pfm(data: bytes) -> DepthMap:
    """Decode a grayscale PFM file into a :class:`DepthMap`."""
    if len(data) < 2:
        raise CodecError("bad-pfm-header", "file too short")
    kind = data[:2]
    if kind == b"PF":
        raise CodecError("unsupported-pfm-kind", "color 'PF' files are not supported")
    if kind != b"Pf":
        raise CodecError("bad-pfm-header", f"unrecognized magic {kind!r}")
    w_tok, pos = _read_pfm_token(data, 2)
    h_tok, pos = _read_pfm_token(data, pos)
    s_tok, pos = _read_pfm_token(data, pos)
    try:
        width, height = int(w_tok), int(h_tok)
        scale = float(s_tok)
    except ValueError:
        raise CodecError("bad-pfm-header", "non-numeric dimension or scale") from None
    if width <= 0 or height <= 0 or width * height > _MAX_PIXELS:
        raise CodecError("pfm-dimension-overflow", f"{width}x{height}")
    if scale == 0.0:
        raise CodecError("bad-pfm-header", "scale must be nonzero")
    # exactly one whitespace byte separates the header from the payload
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise CodecError("bad-pfm-header", "missing separator after scale")
    pos += 1
    payload = data[pos:]
    expected = width * height * 4
    if len(payload) != expected:
        raise CodecError(
            "pfm-truncated", f"payload has {len(payload)} bytes, expected {expected}"
        )
    dtype = "<f4" if scale < 0 else ">f4"
    values = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    if not np.all(np.isfinite(values)):
        raise CodecError("non-finite-payload", "pfm payload contains NaN or infinity")
    return DepthMap(values[::-1])  # bottom-up file order -> top-down


def write_pfm(depth: DepthMap) -> bytes:
    """Encode a :class:`DepthMap` as canonical little-endian grayscale PFM."""
    header = f"Pf\n{depth.width} {depth.height}\n-1.0\n".encode("ascii")
    payload = depth.data[::-1].astype("<f4").tobytes()
    return header + payload


# ---------------------------------------------------------------------------
# Middlebury .flo

def read_flo(data: bytes) -> FlowField:
    """Decode a Middlebury ``.flo`` file into a :class:`FlowField`."""
    if len(data) < 12:
        raise CodecError("bad-flo-header", "file shorter than the 12-byte header")
    magic = struct.unpack("<f", data[:4])[0]
    if magic != _FLO_MAGIC:
        raise CodecError("bad-flo-magic", f"magic is {magic!r}, expected {_FLO_MAGIC}")
    width, height = struct.unpack("<ii", data[4:12])
    if width <= 0 or height <= 0 or width * height > _MAX_PIXELS:
        raise CodecError("bad-flo-header", f"bad dimensions {width}x{height}")
    payload = data[12:]
    expected = width * height * 2 * 4
    if len(payload) != expected:
        raise CodecError(
            "flo-truncated", f"payload has {len(payload)} bytes, expected {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(height, width, 2)
    if not np.all(np.isfinite(values)):
        raise CodecError("non-finite-payload", "flo payload contains NaN or infinity")
    return FlowField(values)


def write_flo(flow: FlowField) -> bytes:
    """Encode a :class:`FlowField` as a Middlebury ``.flo`` file."""
    header = struct.pack("<fii", _FLO_MAGIC, flow.width, flow.height)
    return header + flow.data.astype("<f4").tobytes()


# ---------------------------------------------------------------------------
# PNG

def _sniff_ihdr(data: bytes) -> tuple[int, int]:
    """Return (bit_depth, color_type) from the IHDR chunk, validating both."""
    if len(data) < 33 or data[:8] != _PNG_SIGNATURE:
        raise CodecError("bad-png-signature", "not a PNG file")
    if data[12:16] != b"IHDR":
        raise CodecError("bad-png-signature", "first chunk is not IHDR")
    bit_depth = data[24]
    color_type = data[25]
    if color_type == 3:
        raise CodecError("unsupported-png-format", "palette PNGs are not supported")
    if color_type not in (0, 2):
        raise CodecError(
            "unsupported-png-format", f"color type {color_type} (alpha?) not supported"
        )
    if bit_depth not in (8, 16):
        raise CodecError("unsupported-png-format", f"bit depth {bit_depth} not supported")
    return bit_depth, color_type


def _decode_png(data: bytes) -> np.ndarray:
    _sniff_ihdr(data)
    raw = cv2.imdecode(np.frombuffer(data, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise CodecError("bad-png-payload", "PNG payload failed to decode")
    return raw


def read_png(data: bytes, kind: str = "frame") -> Frame | OcclusionMask:
    """Decode a PNG into a :class:`Frame` (``kind="frame"``) or a binary
    :class:`OcclusionMask` (``kind="mask"``).

    Frames accept grayscale (replicated to RGB) or RGB input; masks must be
    single-channel with values in {0, max} only.
    """
    raw = _decode_png(data)
    peak = 255 if raw.dtype == np.uint8 else 65535
    if kind == "mask":
        if raw.ndim != 2:
            raise CodecError("non-binary-mask", "mask PNGs must be single-channel")
        values = np.unique(raw)
        if not np.all(np.isin(values, (0, peak))):
            raise CodecError(
                "non-binary-mask", f"mask contains intermediate values {values[:8]}"
            )
        return OcclusionMask(raw == peak)
    if kind != "frame":
        raise ValueError(f"kind must be 'frame' or 'mask', got {kind!r}")
    if raw.ndim == 2:
        rgb = np.repeat(raw[:, :, None], 3, axis=2)
    else:
        rgb = raw[:, :, ::-1]  # cv2 decodes BGR
    return Frame(rgb.astype(np.float64) / peak)


def write_png(image: Frame | OcclusionMask, bit_depth: int = 16) -> bytes:
    """Encode a frame (8- or 16-bit RGB) or mask (8-bit {0, 255}) as PNG."""
    if isinstance(image, OcclusionMask):
        raster = (image.data * np.uint8(255)).astype(np.uint8)
    elif isinstance(image, Frame):
        if bit_depth == 16:
            raster = np.rint(image.data * 65535.0).astype(np.uint16)[:, :, ::-1]
        elif bit_depth == 8:
            raster = np.rint(image.data * 255.0).astype(np.uint8)[:, :, ::-1]
        else:
            raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    else:
        raise TypeError(f"cannot encode {type(image).__name__} as PNG")
    ok, encoded = cv2.imencode(".png", raster)
    if not ok:
        raise CodecError("bad-png-payload", "PNG encoding failed")
    return encoded.tobytes()


# ---------------------------------------------------------------------------
# Raw latent tensors

def read_latent(data: bytes) -> np.ndarray:
    """Decode the raw latent format: 4 little-endian u32 dims + float32 payload.

    Returns a float64 array of shape (frames, channels, height, width).
    """
    if len(data) < 16:
        raise CodecError("latent-truncated", "file shorter than the 16-byte header")
    dims = struct.unpack("<4I", data[:16])
    if any(d == 0 for d in dims) or int(np.prod(dims, dtype=np.int64)) > _MAX_PIXELS:
        raise CodecError("latent-truncated", f"bad dims {dims}")
    expected = int(np.prod(dims, dtype=np.int64)) * 4
    payload = data[16:]
    if len(payload) != expected:
        raise CodecError(
            "latent-truncated", f"payload has {len(payload)} bytes, expected {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(dims)
    if not np.all(np.isfinite(values)):
        raise CodecError("non-finite-payload", "latent payload contains NaN or infinity")
    return values.astype(np.float64)


def write_latent(tensor: np.ndarray) -> bytes:
    """Encode a (frames, channels, height, width) tensor; payload is float32."""
    arr = np.asarray(tensor, dtype=np.float64)
    if arr.ndim != 4:
        raise ValueError(f"latent tensor must be 4-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise CodecError("non-finite-payload", "latent tensor contains NaN or infinity")
    header = struct.pack("<4I", *arr.shape)
    return header + arr.astype("<f4").tobytes()
