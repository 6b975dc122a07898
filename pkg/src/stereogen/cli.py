"""Batch command-line interface.

Four subcommands cover the end-to-end workflow:

``generate --config <path>``
    Render a stereo sample from a JSON config pointing at a manifest of
    frames (PNG), depths (PFM), and flows (.flo). Writes target frames,
    masked references, refined and raw masks, and ``report.json``.
``compose --left <dir> --right <dir> --mode sbs|anaglyph --out <dir>``
    Join two eye directories into delivery frames.
``metrics --config <path>``
    Score generated frames against references; writes one JSON report
    per selected metric.
``selfcheck [--seed N] [--perturb-gradient X]``
    Run the built-in verification suite.

Outputs are deterministic: same config and inputs give byte-identical
trees regardless of worker count. Exit codes: 0 success, 1 check
failure, 2 bad input or configuration.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import codecs, metrics
from .errors import InputError, StereoGenError
from .imaging import ConfidenceMap, Frame, VideoClip
from .pipeline import StereoShift, generate_sample
from .rendering import FB_ALPHA, FB_BETA
from .selfcheck import run_selfcheck

_GENERATE_KEYS = {
    "manifest", "out_dir", "gain", "direction",
    "refine", "fill_holes", "alpha", "beta", "workers",
}
_METRICS_KEYS = {
    "generated", "reference", "out_dir", "metrics", "flows", "confidences",
}
_KNOWN_METRICS = ("psnr", "ssim", "warp")


def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError("missing-file", str(path)) from exc
    try:
        parsed = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError("bad-config", f"{path}: {exc}") from exc
    if not isinstance(parsed, dict):
        raise InputError("bad-config", f"{path}: expected a JSON object")
    return parsed


def _check_keys(config, allowed, required, what):
    unknown = sorted(set(config) - allowed)
    if unknown:
        raise InputError("unknown-config-key", f"{what}: {unknown[0]}")
    for key in required:
        if key not in config:
            raise InputError("missing-config-key", f"{what}: {key}")


def _read_entry(path, t, reader, **kwargs):
    """Read one manifest entry, naming the frame index on failure."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise InputError("missing-file", f"frame {t}: {path}") from exc
    return reader(blob, **kwargs)


def cmd_generate(config, base_dir="."):
    """Run the generation pipeline described by a parsed config dict.

    Relative paths in the config resolve against ``base_dir``; relative
    paths in the manifest resolve against the manifest's own directory.
    Returns the in-memory sample after writing the output tree.
    """
    _check_keys(config, _GENERATE_KEYS, ("manifest", "out_dir", "gain", "direction"), "config")
    base = Path(base_dir)
    manifest_path = base / str(config["manifest"])
    manifest = _load_json(manifest_path)
    for key in ("frames", "depths", "flows_fwd", "flows_bwd"):
        if not isinstance(manifest.get(key), list):
            raise InputError("bad-manifest", f"{manifest_path}: missing list '{key}'")
    names = manifest["frames"]
    n = len(names)
    if n == 0:
        raise InputError("bad-manifest", f"{manifest_path}: no frames")
    if len(manifest["depths"]) != n:
        raise InputError("bad-manifest", f"{n} frames but {len(manifest['depths'])} depths")
    want_flows = max(n - 1, 0)
    for key in ("flows_fwd", "flows_bwd"):
        if len(manifest[key]) != want_flows:
            raise InputError("bad-manifest", f"'{key}' must list {want_flows} entries")

    mdir = manifest_path.parent
    clip = VideoClip([_read_entry(mdir / p, t, codecs.read_png) for t, p in enumerate(names)])
    depths = [_read_entry(mdir / p, t, codecs.read_pfm) for t, p in enumerate(manifest["depths"])]
    flows_fwd = [_read_entry(mdir / p, t, codecs.read_flo) for t, p in enumerate(manifest["flows_fwd"])]
    flows_bwd = [_read_entry(mdir / p, t, codecs.read_flo) for t, p in enumerate(manifest["flows_bwd"])]

    shift = StereoShift(gain=float(config["gain"]), direction=int(config["direction"]))
    sample = generate_sample(
        clip, depths, flows_fwd, flows_bwd, shift,
        alpha=float(config.get("alpha", FB_ALPHA)),
        beta=float(config.get("beta", FB_BETA)),
        refine=bool(config.get("refine", True)),
        fill_holes=bool(config.get("fill_holes", True)),
        workers=config.get("workers"),
    )
    _write_sample(sample, base / str(config["out_dir"]), config)
    return sample


def _write_sample(sample, out_dir, config):
    for sub in ("target", "masked_reference", "mask", "mask_raw"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    for t in range(len(sample)):
        stem = f"frame_{t:04d}.png"
        (out_dir / "target" / stem).write_bytes(codecs.write_png(sample.target_view[t]))
        (out_dir / "masked_reference" / stem).write_bytes(
            codecs.write_png(sample.masked_reference[t])
        )
        (out_dir / "mask" / stem).write_bytes(codecs.write_png(sample.masks[t]))
        (out_dir / "mask_raw" / stem).write_bytes(codecs.write_png(sample.unrefined_masks[t]))
    report = {
        "frames": len(sample),
        "mask_area": [m.area for m in sample.masks],
        "unrefined_mask_area": [m.area for m in sample.unrefined_masks],
        "confidence_mean": [float(np.mean(c.data)) for c in sample.confidences],
        "fill_fallback": [bool(f) for f in sample.fill_fallbacks],
        # workers is excluded: parallelism must never show up in the output tree
        "config": {k: config[k] for k in sorted(config) if k != "workers"},
    }
    # sorted keys and no timestamps keep reruns byte-identical
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def cmd_compose(left: VideoClip, right: VideoClip, mode: str) -> VideoClip:
    """Combine two eye views into a delivery clip.

    ``sbs`` concatenates horizontally; ``anaglyph`` takes the red channel
    from the left eye and green/blue from the right.
    """
    if mode in ("sbs", "side-by-side"):
        sbs = True
    elif mode == "anaglyph":
        sbs = False
    else:
        raise InputError("bad-compose-mode", mode)
    if len(left) != len(right):
        raise InputError("length-mismatch", f"{len(left)} vs {len(right)} frames")
    if (left.height, left.width) != (right.height, right.width):
        raise InputError(
            "dimension-mismatch",
            f"{left.height}x{left.width} vs {right.height}x{right.width}",
        )
    frames = []
    for l, r in zip(left, right):
        if sbs:
            frames.append(Frame(np.concatenate([l.data, r.data], axis=1)))
        else:
            merged = r.data.copy()
            merged[:, :, 0] = l.data[:, :, 0]
            frames.append(Frame(merged))
    return VideoClip(frames)


def _frame_label(name):
    """Human-facing frame identifier: the number inside the name if any."""
    match = re.search(r"(\d+)", Path(name).stem)
    return str(int(match.group(1))) if match else str(name)


def _paired_pngs(a_dir, b_dir):
    a = {p.name for p in Path(a_dir).glob("*.png")}
    b = {p.name for p in Path(b_dir).glob("*.png")}
    odd = sorted(a.symmetric_difference(b))
    if odd:
        raise InputError("unpaired-frame", _frame_label(odd[0]))
    if not a:
        raise InputError("missing-file", f"no PNG frames under {a_dir}")
    return sorted(a)


def _read_dir_clip(directory, names):
    directory = Path(directory)
    return VideoClip([
        _read_entry(directory / name, t, codecs.read_png) for t, name in enumerate(names)
    ])


def cmd_metrics(config, base_dir="."):
    """Score generated frames against references; returns reports by name.

    Pairs ``generated`` and ``reference`` directories by file name. The
    ``warp`` metric runs on the generated clip and needs a ``flows``
    directory of forward .flo fields; ``confidences`` (mask PNGs) is
    optional and defaults to all-ones weighting.
    """
    _check_keys(config, _METRICS_KEYS, ("generated", "reference", "out_dir"), "config")
    selected = config.get("metrics", list(_KNOWN_METRICS))
    for name in selected:
        if name not in _KNOWN_METRICS:
            raise InputError("unknown-metric", str(name))
    base = Path(base_dir)
    gen_dir = base / str(config["generated"])
    ref_dir = base / str(config["reference"])
    names = _paired_pngs(gen_dir, ref_dir)
    generated = _read_dir_clip(gen_dir, names)
    ref = _read_dir_clip(ref_dir, names)

    reports = {}
    if "psnr" in selected:
        values = [metrics.psnr(g, r) for g, r in zip(generated, ref)]
        reports["psnr"] = metrics.MetricReport.from_values(
            "psnr", values, params={"cap_db": metrics.PSNR_CAP}
        )
    if "ssim" in selected:
        values = [metrics.ssim(g, r) for g, r in zip(generated, ref)]
        reports["ssim"] = metrics.MetricReport.from_values(
            "ssim", values, params={"window": metrics.SSIM_WINDOW, "sigma": metrics.SSIM_SIGMA}
        )
    if "warp" in selected:
        if "flows" not in config:
            raise InputError("missing-config-key", "config: flows (needed for warp)")
        flow_dir = base / str(config["flows"])
        flow_names = sorted(p.name for p in flow_dir.glob("*.flo"))
        if len(flow_names) != max(len(names) - 1, 0):
            raise InputError(
                "bad-config", f"need {max(len(names) - 1, 0)} flow files, found {len(flow_names)}"
            )
        flows = [
            _read_entry(flow_dir / nm, t, codecs.read_flo) for t, nm in enumerate(flow_names)
        ]
        if "confidences" in config:
            conf_dir = base / str(config["confidences"])
            conf_names = sorted(p.name for p in conf_dir.glob("*.png"))
            if len(conf_names) != len(flow_names):
                raise InputError("bad-config", "confidence count must match flow count")
            confs = [
                ConfidenceMap(
                    _read_entry(conf_dir / nm, t, codecs.read_png, kind="mask").data.astype(float)
                )
                for t, nm in enumerate(conf_names)
            ]
        else:
            shape = (generated.height, generated.width)
            confs = [ConfidenceMap(np.ones(shape)) for _ in flow_names]
        reports["warp"] = metrics.warp_error(generated, flows, confs)

    out_dir = base / str(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, report in reports.items():
        (out_dir / f"{name}.json").write_text(report.to_json())
    return reports


def _compose_dirs(left_dir, right_dir, mode, out_dir):
    names = _paired_pngs(left_dir, right_dir)
    left = _read_dir_clip(left_dir, names)
    right = _read_dir_clip(right_dir, names)
    composed = cmd_compose(left, right, mode)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, frame in zip(names, composed):
        (out / name).write_bytes(codecs.write_png(frame))
    return len(names)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="stereogen", description="stereo clip generation, composition, and scoring"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="render a stereo sample from a manifest")
    gen.add_argument("--config", required=True, help="path to a JSON pipeline config")

    comp = sub.add_parser("compose", help="join left/right eye directories")
    comp.add_argument("--left", required=True)
    comp.add_argument("--right", required=True)
    comp.add_argument("--mode", required=True, choices=("sbs", "anaglyph"))
    comp.add_argument("--out", required=True)

    met = sub.add_parser("metrics", help="score generated frames against references")
    met.add_argument("--config", required=True, help="path to a JSON metrics config")

    check = sub.add_parser("selfcheck", help="run the built-in verification suite")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument(
        "--perturb-gradient", type=float, default=0.0,
        help="debug hook: offset added to the analytic gradient; nonzero must fail",
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            config_path = Path(args.config)
            sample = cmd_generate(_load_json(config_path), base_dir=config_path.parent)
            print(f"wrote {len(sample)} frames")
            return 0
        if args.command == "compose":
            count = _compose_dirs(args.left, args.right, args.mode, args.out)
            print(f"wrote {count} composed frames")
            return 0
        if args.command == "metrics":
            config_path = Path(args.config)
            reports = cmd_metrics(_load_json(config_path), base_dir=config_path.parent)
            for name in sorted(reports):
                print(f"{name}: mean {reports[name].mean:.6f}")
            return 0
        ok = run_selfcheck(seed=args.seed, perturb_gradient=args.perturb_gradient)
        return 0 if ok else 1
    except StereoGenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
