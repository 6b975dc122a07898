"""Round-trip every on-disk format and poke at the error surface.

    python3 demos/codec_tour.py
"""

import numpy as np

from stereogen import codecs
from stereogen.errors import CodecError
from stereogen.imaging import DepthMap, FlowField, Frame, OcclusionMask


def show(label, blob, preview=24):
    print(f"{label:14s} {len(blob):6d} bytes  {blob[:preview]!r}")


def main():
    rng = np.random.default_rng(3)

    depth = DepthMap(rng.uniform(0.5, 4.0, size=(6, 8)).astype(np.float32))
    blob = codecs.write_pfm(depth)
    show("PFM", blob)
    assert np.array_equal(codecs.read_pfm(blob).data, depth.data)

    flow = FlowField(rng.uniform(-3, 3, size=(6, 8, 2)).astype(np.float32))
    blob = codecs.write_flo(flow)
    show(".flo", blob, preview=12)
    assert np.array_equal(codecs.read_flo(blob).data, flow.data)

    frame = Frame(rng.integers(0, 65536, size=(6, 8, 3)) / 65535.0)
    blob = codecs.write_png(frame)
    show("PNG 16-bit", blob, preview=12)
    assert np.array_equal(codecs.read_png(blob).data, frame.data)

    mask = OcclusionMask((rng.random((6, 8)) < 0.3).astype(np.uint8))
    blob = codecs.write_png(mask)
    show("PNG mask", blob, preview=12)
    assert np.array_equal(codecs.read_png(blob, kind="mask").data, mask.data)

    latent = rng.normal(size=(2, 4, 6, 8)).astype(np.float32)
    blob = codecs.write_latent(latent)
    show("latent", blob, preview=16)
    assert np.array_equal(codecs.read_latent(blob), latent.astype(np.float64))
    print("all four formats round-trip losslessly\n")

    probes = [
        ("color PFM", lambda: codecs.read_pfm(b"PF\n1 1\n-1.0\n" + b"\0" * 12)),
        ("wrong magic", lambda: codecs.read_flo(b"XXXX" + b"\0" * 8)),
        ("cut payload", lambda: codecs.read_flo(codecs.write_flo(flow)[:-4])),
        ("not a PNG", lambda: codecs.read_png(b"\x89PNJ" + b"\0" * 40)),
        ("gray mask", lambda: codecs.read_png(
            codecs.write_png(Frame(np.full((2, 2, 3), 0.5)), bit_depth=8), kind="mask"
        )),
    ]
    for label, probe in probes:
        try:
            probe()
        except CodecError as exc:
            print(f"{label:12s} -> {exc}")


if __name__ == "__main__":
    main()
