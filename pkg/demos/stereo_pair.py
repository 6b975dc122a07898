"""Generate a stereo pair end to end, twice: once through the library,
once through the CLI against an on-disk manifest tree.

Run from the repository root:

    python3 demos/stereo_pair.py

Outputs land in ./demo_output/stereo_pair/.
"""

import json
from pathlib import Path

import numpy as np

from stereogen import codecs
from stereogen.cli import main as cli_main
from stereogen.pipeline import StereoShift, generate_sample
from stereogen.synthetic import SceneSpec, synth_scene

OUT = Path("demo_output/stereo_pair")

SPEC = SceneSpec(
    height=96, width=128, frames=8,
    bg_depth=1.0, fg_depth=2.0,
    rect=(40.0, 28.0, 36.0, 30.0), velocity=(3.0, 0.0), seed=11,
)
SHIFT = StereoShift(gain=8.0, direction=-1)


def library_route():
    clip, depths, fwd, bwd = synth_scene(SPEC)
    sample = generate_sample(clip, depths, fwd, bwd, SHIFT)
    print(f"scene: {SPEC.width}x{SPEC.height}, {SPEC.frames} frames, "
          f"rectangle sliding at {SPEC.velocity} px/frame")
    print(f"shift: gain {SHIFT.gain}, direction {SHIFT.direction}")
    print()
    print("frame  mask px  raw px  conf mean  fallback")
    for t in range(len(sample)):
        print(f"{t:5d}  {sample.masks[t].area:7d}  {sample.unrefined_masks[t].area:6d}"
              f"  {np.mean(sample.confidences[t].data):9.3f}"
              f"  {sample.fill_fallbacks[t]}")
    return clip, depths, fwd, bwd


def cli_route(clip, depths, fwd, bwd):
    data = OUT / "data"
    manifest = {"frames": [], "depths": [], "flows_fwd": [], "flows_bwd": []}
    for sub in manifest:
        (data / sub).mkdir(parents=True, exist_ok=True)
    for t, frame in enumerate(clip):
        manifest["frames"].append(f"frames/frame_{t:04d}.png")
        (data / manifest["frames"][-1]).write_bytes(codecs.write_png(frame))
    for t, d in enumerate(depths):
        manifest["depths"].append(f"depths/depth_{t:04d}.pfm")
        (data / manifest["depths"][-1]).write_bytes(codecs.write_pfm(d))
    for key, flows in (("flows_fwd", fwd), ("flows_bwd", bwd)):
        for t, f in enumerate(flows):
            manifest[key].append(f"{key}/flow_{t:04d}.flo")
            (data / manifest[key][-1]).write_bytes(codecs.write_flo(f))
    (data / "manifest.json").write_text(json.dumps(manifest, indent=2))

    config = {
        "manifest": "data/manifest.json",
        "out_dir": "generated",
        "gain": SHIFT.gain,
        "direction": SHIFT.direction,
    }
    (OUT / "generate.json").write_text(json.dumps(config, indent=2))

    print()
    print("$ stereogen generate --config", OUT / "generate.json")
    cli_main(["generate", "--config", str(OUT / "generate.json")])

    # pair the rendered target view with the original frames, side by side
    print("$ stereogen compose --left ... --right ... --mode sbs")
    cli_main([
        "compose",
        "--left", str(OUT / "generated" / "target"),
        "--right", str(data / "frames"),
        "--mode", "sbs",
        "--out", str(OUT / "sbs"),
    ])
    report = json.loads((OUT / "generated" / "report.json").read_text())
    print(f"report.json: {report['frames']} frames, "
          f"mask areas {report['mask_area']}")
    print(f"outputs under {OUT}/")


def main():
    clip, depths, fwd, bwd = library_route()
    cli_route(clip, depths, fwd, bwd)


if __name__ == "__main__":
    main()
