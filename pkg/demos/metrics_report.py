"""Score a degraded clip against its clean original.

Builds a synthetic clip, degrades it three ways (noise, blur by local
averaging, flow jitter), and prints PSNR / SSIM / warping-error reports.

    python3 demos/metrics_report.py
"""

import numpy as np

from stereogen.imaging import ConfidenceMap, FlowField, Frame, VideoClip
from stereogen.metrics import psnr, ssim, warp_error
from stereogen.synthetic import SceneSpec, covisible_forward, synth_scene

SPEC = SceneSpec(
    height=48, width=64, frames=5,
    rect=(16.0, 12.0, 18.0, 14.0), velocity=(2.0, 0.0), seed=1,
)


def degrade(frame, rng, mode):
    data = frame.data
    if mode == "noise":
        return Frame(np.clip(data + rng.normal(scale=0.03, size=data.shape), 0, 1))
    # 3x3 box blur, edges clamped
    padded = np.pad(data, ((1, 1), (1, 1), (0, 0)), mode="edge")
    out = np.zeros_like(data)
    for dy in range(3):
        for dx in range(3):
            out += padded[dy : dy + data.shape[0], dx : dx + data.shape[1]]
    return Frame(out / 9.0)


def main():
    rng = np.random.default_rng(7)
    clip, _, fwd, _ = synth_scene(SPEC)
    conf = [
        ConfidenceMap(covisible_forward(SPEC, t).astype(float))
        for t in range(len(clip) - 1)
    ]

    print(f"{'variant':10s} {'PSNR dB':>8s} {'SSIM':>7s} {'warp err':>9s}")
    for mode in ("clean", "noise", "blur"):
        if mode == "clean":
            test = clip
        else:
            test = VideoClip([degrade(f, rng, mode) for f in clip])
        p = np.mean([psnr(a, b) for a, b in zip(test, clip)])
        s = np.mean([ssim(a, b) for a, b in zip(test, clip)])
        wreport = warp_error(test, fwd, conf)
        print(f"{mode:10s} {p:8.2f} {s:7.4f} {wreport.mean:9.2e}")

    print()
    jittered = [FlowField(f.data + rng.uniform(-0.5, 0.5, f.data.shape)) for f in fwd]
    wreport = warp_error(clip, jittered, conf)
    print("flow jitter of +-0.5 px on the clean clip:")
    print(wreport.to_json())


if __name__ == "__main__":
    main()
