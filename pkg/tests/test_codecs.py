"""Byte-level codec behavior: frozen encodings, round trips, error names."""

import struct

import cv2
import numpy as np
import pytest

from stereogen import codecs
from stereogen.errors import CodecError
from stereogen.imaging import DepthMap, FlowField, Frame, OcclusionMask


class TestPfm:
    def test_canonical_bytes(self):
        # bottom row first in the payload, little-endian via negative scale
        depth = DepthMap([[1.0, 2.0], [3.0, 4.0]])
        expected = b"Pf\n2 2\n-1.0\n" + struct.pack("<4f", 3, 4, 1, 2)
        assert codecs.write_pfm(depth) == expected

    def test_roundtrip(self, rng):
        depth = DepthMap(rng.uniform(0, 5, size=(7, 3)).astype(np.float32))
        assert np.array_equal(codecs.read_pfm(codecs.write_pfm(depth)).data, depth.data)

    def test_big_endian_scale(self):
        data = b"Pf\n2 1\n1.0\n" + struct.pack(">2f", 0.5, 2.25)
        got = codecs.read_pfm(data)
        assert np.array_equal(got.data, [[0.5, 2.25]])

    def test_header_whitespace_variants(self):
        payload = struct.pack("<2f", 1, 2)
        assert np.array_equal(codecs.read_pfm(b"Pf 2 1 -1.0 " + payload).data, [[1, 2]])
        assert np.array_equal(codecs.read_pfm(b"Pf\n2\n1\n-1.0\n" + payload).data, [[1, 2]])

    @pytest.mark.parametrize(
        "blob,code",
        [
            (b"PF\n2 2\n-1.0\n" + b"\0" * 48, "unsupported-pfm-kind"),
            (b"P5\n2 2\n255\n....", "bad-pfm-header"),
            (b"P", "bad-pfm-header"),
            (b"Pf\nx 2\n-1.0\n", "bad-pfm-header"),
            (b"Pf\n2 2\n0.0\n" + b"\0" * 16, "bad-pfm-header"),
            (b"Pf\n99999 99999\n-1.0\n", "pfm-dimension-overflow"),
            (b"Pf\n-1 4\n-1.0\n", "pfm-dimension-overflow"),
            (b"Pf\n2 2\n-1.0\n" + b"\0" * 15, "pfm-truncated"),
            (b"Pf\n2 2\n-1.0\n" + b"\0" * 17, "pfm-truncated"),
            (b"Pf\n1 1\n-1.0\n" + struct.pack("<f", np.inf), "non-finite-payload"),
        ],
    )
    def test_malformed(self, blob, code):
        with pytest.raises(CodecError) as err:
            codecs.read_pfm(blob)
        assert err.value.code == code

    def test_missing_separator_after_scale(self):
        # header runs straight into EOF: no single whitespace byte
        with pytest.raises(CodecError) as err:
            codecs.read_pfm(b"Pf\n1 1\n-1.0")
        assert err.value.code == "bad-pfm-header"


class TestFlo:
    def test_canonical_bytes(self):
        flow = FlowField(np.array([[[1.5, -2.0]]]))
        expected = struct.pack("<fii", 202021.25, 1, 1) + struct.pack("<2f", 1.5, -2.0)
        assert codecs.write_flo(flow) == expected
        assert expected[:4] == b"PIEH"  # the magic spells out as ASCII

    def test_roundtrip(self, rng):
        flow = FlowField(rng.uniform(-20, 20, size=(5, 4, 2)).astype(np.float32))
        assert np.array_equal(codecs.read_flo(codecs.write_flo(flow)).data, flow.data)

    @pytest.mark.parametrize(
        "blob,code",
        [
            (b"\x00" * 11, "bad-flo-header"),
            (b"\x00" * 12, "bad-flo-magic"),
            (struct.pack("<fii", 202021.25, -1, 4), "bad-flo-header"),
            (struct.pack("<fii", 202021.25, 1, 1) + b"\0" * 4, "flo-truncated"),
            (
                struct.pack("<fii", 202021.25, 1, 1) + struct.pack("<2f", np.nan, 0),
                "non-finite-payload",
            ),
        ],
    )
    def test_malformed(self, blob, code):
        with pytest.raises(CodecError) as err:
            codecs.read_flo(blob)
        assert err.value.code == code


def _ihdr_png(color_type, bit_depth):
    """Minimal PNG prefix with a chosen IHDR; enough for the sniffing path."""
    ihdr = struct.pack(">II", 2, 2) + bytes([bit_depth, color_type, 0, 0, 0])
    return (
        b"\x89PNG\r\n\x1a\n"
        + struct.pack(">I", 13)
        + b"IHDR"
        + ihdr
        + b"\x00\x00\x00\x00"
    )


class TestPng:
    def test_frame_roundtrip_16bit(self, rng):
        raw = rng.integers(0, 65536, size=(5, 4, 3), dtype=np.uint16)
        frame = Frame(raw.astype(np.float64) / 65535.0)
        got = codecs.read_png(codecs.write_png(frame))
        assert np.array_equal(got.data, frame.data)

    def test_frame_roundtrip_8bit_quantizes(self, rng):
        frame = Frame(rng.uniform(0, 1, size=(4, 4, 3)))
        got = codecs.read_png(codecs.write_png(frame, bit_depth=8))
        assert np.array_equal(got.data, np.rint(frame.data * 255) / 255)

    def test_channel_order_preserved(self):
        # a pure-red frame must come back pure red (BGR swap is internal)
        red = np.zeros((2, 2, 3))
        red[:, :, 0] = 1.0
        got = codecs.read_png(codecs.write_png(Frame(red)))
        assert np.array_equal(got.data, red)

    def test_grayscale_replicates(self):
        ok, buf = cv2.imencode(".png", np.array([[0, 255]], dtype=np.uint8))
        assert ok
        got = codecs.read_png(buf.tobytes())
        assert np.array_equal(got.data[:, :, 0], got.data[:, :, 1])
        assert np.array_equal(got.data[:, :, 0], [[0.0, 1.0]])

    def test_mask_roundtrip(self):
        mask = OcclusionMask(np.array([[1, 0], [0, 1]], dtype=np.uint8))
        got = codecs.read_png(codecs.write_png(mask), kind="mask")
        assert np.array_equal(got.data, mask.data)

    def test_mask_rejects_gray_values(self):
        ok, buf = cv2.imencode(".png", np.full((2, 2), 128, dtype=np.uint8))
        with pytest.raises(CodecError) as err:
            codecs.read_png(buf.tobytes(), kind="mask")
        assert err.value.code == "non-binary-mask"

    def test_mask_rejects_rgb(self):
        frame = Frame(np.ones((2, 2, 3)))
        with pytest.raises(CodecError) as err:
            codecs.read_png(codecs.write_png(frame), kind="mask")
        assert err.value.code == "non-binary-mask"

    def test_rejects_bad_signature(self):
        with pytest.raises(CodecError) as err:
            codecs.read_png(b"not a png at all, definitely not" + b"\0" * 8)
        assert err.value.code == "bad-png-signature"

    def test_rejects_palette(self):
        with pytest.raises(CodecError) as err:
            codecs.read_png(_ihdr_png(color_type=3, bit_depth=8))
        assert err.value.code == "unsupported-png-format"

    def test_rejects_alpha_and_odd_depths(self):
        for color_type in (4, 6):
            with pytest.raises(CodecError) as err:
                codecs.read_png(_ihdr_png(color_type=color_type, bit_depth=8))
            assert err.value.code == "unsupported-png-format"
        with pytest.raises(CodecError) as err:
            codecs.read_png(_ihdr_png(color_type=0, bit_depth=4))
        assert err.value.code == "unsupported-png-format"

    def test_rejects_garbage_payload(self):
        blob = _ihdr_png(color_type=2, bit_depth=8) + b"\xde\xad\xbe\xef"
        with pytest.raises(CodecError) as err:
            codecs.read_png(blob)
        assert err.value.code == "bad-png-payload"

    def test_bad_kind_and_type(self):
        with pytest.raises(ValueError):
            codecs.read_png(codecs.write_png(Frame(np.zeros((2, 2, 3)))), kind="nope")
        with pytest.raises(TypeError):
            codecs.write_png(np.zeros((2, 2, 3)))
        with pytest.raises(ValueError):
            codecs.write_png(Frame(np.zeros((2, 2, 3))), bit_depth=12)


class TestLatent:
    def test_roundtrip(self, rng):
        tensor = rng.normal(size=(2, 4, 3, 5)).astype(np.float32).astype(np.float64)
        got = codecs.read_latent(codecs.write_latent(tensor))
        assert got.shape == (2, 4, 3, 5)
        assert np.array_equal(got, tensor)

    def test_header_layout(self):
        blob = codecs.write_latent(np.zeros((1, 2, 3, 4)))
        assert struct.unpack("<4I", blob[:16]) == (1, 2, 3, 4)
        assert len(blob) == 16 + 24 * 4

    @pytest.mark.parametrize(
        "blob,code",
        [
            (b"\x01\0\0\0" * 3, "latent-truncated"),
            (struct.pack("<4I", 1, 1, 1, 2) + b"\0" * 4, "latent-truncated"),
            (struct.pack("<4I", 0, 1, 1, 1), "latent-truncated"),
        ],
    )
    def test_malformed(self, blob, code):
        with pytest.raises(CodecError) as err:
            codecs.read_latent(blob)
        assert err.value.code == code

    def test_rejects_non_finite(self):
        with pytest.raises(CodecError) as err:
            codecs.write_latent(np.full((1, 1, 1, 1), np.nan))
        assert err.value.code == "non-finite-payload"

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            codecs.write_latent(np.zeros((2, 2)))
