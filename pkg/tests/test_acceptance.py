"""Release gate: the package's nine hard guarantees, one test apiece.

``pytest -v tests/test_acceptance.py`` reads as a checklist, one
pass/fail line per guarantee. Tolerances and time budgets are asserted
inline; any red line here blocks a release.
"""

import itertools
import json
import time

import numpy as np
import pytest

from stereogen import codecs, diffusion, reference
from stereogen.attention import AttentionWeights, attn, spatial_concat_attention, til_augment
from stereogen.cli import cmd_generate
from stereogen.errors import CodecError
from stereogen.imaging import (
    ConfidenceMap,
    DepthMap,
    DisparityMap,
    FlowField,
    Frame,
    OcclusionMask,
    VideoClip,
)
from stereogen.metrics import PSNR_CAP, psnr, ssim, warp_error
from stereogen.pipeline import generate_sample
from stereogen.rendering import (
    TAU_W,
    fb_confidence,
    forward_splat,
    refine_mask,
    zbuffer_resolve,
)
from stereogen.selfcheck import SCENE, SHIFT
from stereogen.synthetic import SceneSpec, covisible_forward, flicker_count, synth_scene


def _normalize_like_splat(acc, weight):
    hole = weight < TAU_W
    out = np.clip(acc / np.where(hole, 1.0, weight)[:, :, None], 0.0, 1.0)
    out[hole] = 0.0
    return out, hole


def _masked_psnr(a, b, keep):
    d = (a - b)[keep]
    mse = float(np.mean(d * d))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP)


def test_oracle_equivalence_100_seeds_under_a_minute():
    """Nine production operators vs naive per-pixel/per-token routes."""
    start = time.perf_counter()
    for seed in range(100):
        rng = np.random.default_rng(seed)
        h, w = int(rng.integers(3, 17)), int(rng.integers(3, 17))

        frame = Frame(rng.uniform(size=(h, w, 3)))
        flow = FlowField(rng.uniform(-4.0, 4.0, size=(h, w, 2)))
        out, mask, weight = forward_splat(frame, flow)
        acc_n, w_n = reference.naive_splat(frame.data, flow.u, flow.v)
        color_n, hole_n = _normalize_like_splat(acc_n, w_n)
        assert np.max(np.abs(weight - w_n)) <= 1e-9
        assert np.max(np.abs(out.data - color_n)) <= 1e-9
        assert np.array_equal(mask.data.astype(bool), hole_n)

        depth = DepthMap(rng.uniform(0.1, 3.0, size=(h, w)))
        disp = DisparityMap(rng.uniform(-3.0, 3.0, size=(h, w)))
        out, mask = zbuffer_resolve(frame, disp, depth)
        acc_n, w_n = reference.naive_splat(
            frame.data, disp.data, np.zeros((h, w)), depth=depth.data
        )
        color_n, hole_n = _normalize_like_splat(acc_n, w_n)
        assert np.max(np.abs(out.data - color_n)) <= 1e-9
        assert np.array_equal(mask.data.astype(bool), hole_n)

        fwd = FlowField(rng.uniform(-4.0, 4.0, size=(h, w, 2)))
        bwd = FlowField(rng.uniform(-4.0, 4.0, size=(h, w, 2)))
        got = fb_confidence(fwd, bwd)
        assert np.array_equal(got.data, reference.naive_confidence(fwd.data, bwd.data))

        masks = [
            OcclusionMask((rng.random((h, w)) < 0.3).astype(np.uint8)) for _ in range(3)
        ]
        conf = ConfidenceMap(rng.random((h, w)))
        refined = refine_mask(masks[0], masks[1], masks[2], fwd, bwd, conf)
        want = reference.naive_refine(
            masks[0].data, masks[1].data, masks[2].data, fwd.data, bwd.data, conf.data
        )
        assert np.array_equal(refined.data, want)

        c = int(rng.integers(1, 6))
        zA = rng.normal(size=(int(rng.integers(1, 17)), c))
        zB = rng.normal(size=(int(rng.integers(1, 17)), c))
        wts = AttentionWeights(
            rng.normal(size=(c, c)), rng.normal(size=(c, c)), rng.normal(size=(c, c))
        )
        got = attn(zA, zB, wts)
        assert np.max(np.abs(got - reference.naive_attn(zA, zB, wts.wq, wts.wk, wts.wv))) <= 1e-9

        hs, ws, cs = (int(rng.integers(1, 5)) for _ in range(3))
        zt = rng.normal(size=(hs, ws, cs))
        za = rng.normal(size=(hs, ws, cs))
        wts = AttentionWeights(
            rng.normal(size=(cs, cs)), rng.normal(size=(cs, cs)), rng.normal(size=(cs, cs))
        )
        got = spatial_concat_attention(zt, za, wts)
        want = reference.naive_spatial_concat(zt, za, wts.wq, wts.wk, wts.wv)
        assert np.max(np.abs(got - want)) <= 1e-9

        a = Frame(rng.uniform(size=(h, w, 3)))
        b = Frame(rng.uniform(size=(h, w, 3)))
        assert abs(psnr(a, b) - reference.naive_psnr(a.data, b.data)) <= 1e-9

        hp, wp = int(rng.integers(11, 17)), int(rng.integers(11, 17))
        a = Frame(rng.uniform(size=(hp, wp, 3)))
        b = Frame(rng.uniform(size=(hp, wp, 3)))
        assert abs(ssim(a, b) - reference.naive_ssim(a.data, b.data)) <= 1e-9

        hw, ww = int(rng.integers(3, 9)), int(rng.integers(3, 9))
        frames = [rng.uniform(size=(hw, ww, 3)) for _ in range(3)]
        flows = [rng.uniform(-1.0, 1.0, size=(hw, ww, 2)) for _ in range(2)]
        confs = [rng.integers(0, 2, size=(hw, ww)).astype(float) for _ in range(2)]
        report = warp_error(
            VideoClip([Frame(f) for f in frames]),
            [FlowField(f) for f in flows],
            [ConfidenceMap(cf) for cf in confs],
        )
        vals, skipped = reference.naive_warp_error(frames, flows, confs)
        assert report.params["skipped_frames"] == skipped
        assert np.max(np.abs(np.array(report.values) - vals)) <= 1e-9 if vals else True

    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"oracle sweep took {elapsed:.1f}s, budget is 60s"


def test_mask_update_truth_table_and_monotonicity():
    """Hand-evaluated neighbor votes, then output >= input on 1000 instances."""
    h, w = 4, 4
    zeros = FlowField(np.zeros((h, w, 2)))
    empty = OcclusionMask(np.zeros((h, w), dtype=np.uint8))
    full = OcclusionMask(np.ones((h, w), dtype=np.uint8))

    half = ConfidenceMap(np.full((h, w), 0.5))
    assert np.all(refine_mask(empty, full, full, zeros, zeros, half).data == 1), (
        "two masked neighbors at C=0.5 must set the pixel"
    )
    strong = ConfidenceMap(np.full((h, w), 0.9))
    assert np.all(refine_mask(empty, full, empty, zeros, zeros, strong).data == 0), (
        "one masked neighbor at C=0.9 must leave the pixel unchanged"
    )
    oob = FlowField(np.full((h, w, 2), [-10.0, 0.0]))
    ones = ConfidenceMap(np.ones((h, w)))
    assert np.all(refine_mask(empty, full, full, oob, oob, ones).data == 0), (
        "out-of-bounds samples must contribute nothing"
    )

    rng = np.random.default_rng(2)
    for _ in range(1000):
        hh, ww = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        m = OcclusionMask((rng.random((hh, ww)) < 0.3).astype(np.uint8))
        mp = OcclusionMask((rng.random((hh, ww)) < 0.3).astype(np.uint8))
        mn = OcclusionMask((rng.random((hh, ww)) < 0.3).astype(np.uint8))
        fp = FlowField(rng.uniform(-4.0, 4.0, size=(hh, ww, 2)))
        fn = FlowField(rng.uniform(-4.0, 4.0, size=(hh, ww, 2)))
        conf = ConfidenceMap(rng.random((hh, ww)))
        out = refine_mask(m, mp, mn, fp, fn, conf)
        assert np.all(out.data >= m.data)


def test_depth_render_roundtrip_and_mask_flicker():
    """Co-visible round trip >= 40 dB; refinement halves mask flicker."""
    start = time.perf_counter()
    clip, depths, fwd, bwd = synth_scene(SCENE)
    sample = generate_sample(clip, depths, fwd, bwd, SHIFT)

    worst = min(
        _masked_psnr(
            sample.back_rendered[t].data,
            sample.gt_reference[t].data,
            sample.unrefined_masks[t].data == 0,
        )
        for t in range(len(sample))
    )
    assert worst >= 40.0, f"round-trip PSNR {worst:.2f} dB, need >= 40"

    before = flicker_count(sample.unrefined_masks, fwd, bwd)
    after = flicker_count(sample.masks, fwd, bwd)
    assert before > 0, "scene must flicker before refinement"
    assert after <= before / 2, f"flicker {before} -> {after}, need at least a halving"

    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, f"round trip took {elapsed:.1f}s, budget is 120s"


def test_noise_inversion_and_analytic_gradient():
    """Clean-estimate inversion <= 1e-5; gradient vs FD <= 1e-4 relative."""
    sched = diffusion.make_schedule()
    rng = np.random.default_rng(4)
    usable = [t for t in range(1, sched.T + 1) if sched.alpha_bar(t) >= 1e-4]
    assert usable[0] == 1 and len(usable) < sched.T, "late steps fall below the floor"

    z0 = rng.normal(size=(1, 2, 3, 3))
    eps = rng.normal(size=(1, 2, 3, 3))
    for t in usable:
        z_t = diffusion.forward_diffuse(z0, t, eps, sched)
        err = np.max(np.abs(diffusion.estimate_clean(z_t, eps, t, sched) - z0))
        assert err <= 1e-5, f"t={t}: inversion error {err}"

    z_ref = rng.normal(size=(1, 2, 3, 3))
    t = 500
    z_t = diffusion.forward_diffuse(z0, t, eps, sched)
    loss, grad = diffusion.combined_loss(eps, eps, z_t, z0, z_ref, t, sched)
    assert abs(loss) <= 1e-12 and np.max(np.abs(grad)) <= 1e-10

    step = 1e-4
    compared = 0
    for _ in range(100):
        t = int(rng.choice(usable))
        ab = sched.alpha_bar(t)
        kink_radius = max(1e-6, 2.0 * step * np.sqrt(1.0 - ab) / np.sqrt(ab))
        shape = (1, 2, 3, 3)
        z0 = rng.normal(size=shape)
        z_ref = rng.normal(size=shape)
        eps = rng.normal(size=shape)
        eps_pred = eps + 0.1 * rng.normal(size=shape)
        z_t = diffusion.forward_diffuse(z0, t, eps, sched)
        _, grad = diffusion.combined_loss(eps, eps_pred, z_t, z0, z_ref, t, sched)
        fd = reference.fd_gradient(
            lambda ep: diffusion.combined_loss(eps, ep, z_t, z0, z_ref, t, sched)[0],
            eps_pred,
            step=step,
        )
        z0_hat = diffusion.estimate_clean(z_t, eps_pred, t, sched)
        keep = (np.abs(z0_hat - z_ref) > kink_radius) & (np.abs(grad) > 1e-8)
        rel = np.abs(grad - fd) / np.maximum(np.abs(grad), np.abs(fd))
        assert np.all(rel[keep] <= 1e-4)
        compared += int(keep.sum())
    assert compared > 1000, "the sweep must actually compare elements"


def test_neighbor_blend_endpoints_and_permutations():
    """Blend endpoints, affinity in lambda, exact permutation invariance."""
    rng = np.random.default_rng(5)
    z = rng.normal(size=(3, 3, 3))
    wts = AttentionWeights(
        rng.normal(size=(3, 3)), rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    )
    neigh = [rng.normal(size=(3, 3, 3)) for _ in range(3)]

    top = til_augment(z, neigh, lambda_blend=1.0, w=wts)
    assert np.max(np.abs(top - attn(z, z, wts))) <= 1e-12

    q = rng.normal(size=(3, 3, 3))
    same = til_augment(z, [q, q, q], lambda_blend=0.0, w=wts)
    assert np.max(np.abs(same - attn(z, q, wts))) <= 1e-9

    lo = til_augment(z, neigh, lambda_blend=0.0, w=wts)
    hi = til_augment(z, neigh, lambda_blend=1.0, w=wts)
    for lam in (0.2, 0.5, 0.8):
        mid = til_augment(z, neigh, lambda_blend=lam, w=wts)
        assert np.max(np.abs(mid - (lam * hi + (1.0 - lam) * lo))) <= 1e-6

    for n in (2, 3, 4):
        group = [rng.normal(size=(3, 3, 3)) for _ in range(n)]
        base = til_augment(z, group, w=wts)
        for order in itertools.permutations(range(n)):
            shuffled = [group[i] for i in order]
            assert np.array_equal(til_augment(z, shuffled, w=wts), base)


def test_deviation_strength_properties():
    """Non-negative, zero iff equal, symmetric, translation-invariant."""
    rng = np.random.default_rng(6)
    for _ in range(1000):
        a = rng.normal(size=(2, 2, 2, 2))
        b = rng.normal(size=(2, 2, 2, 2))
        s = diffusion.deviation_strength(a, b)
        assert np.all(s >= 0)
        assert np.all(s > 0), "distinct random tensors must register"
        assert np.all(diffusion.deviation_strength(a, a) == 0)
        assert np.array_equal(s, diffusion.deviation_strength(b, a))
        c = np.full_like(a, float(rng.normal()))
        assert np.max(np.abs(diffusion.deviation_strength(a + c, b + c) - s)) <= 1e-12


def test_metric_ideals_and_jitter_sensitivity():
    """Perfect agreement hits the ideals; 0.05 px jitter must register."""
    rng = np.random.default_rng(7)
    a = Frame(rng.uniform(size=(16, 16, 3)))
    assert ssim(a, a) == pytest.approx(1.0)
    assert psnr(a, a) == PSNR_CAP

    spec = SceneSpec(
        height=20, width=28, frames=4, rect=(8.0, 6.0, 8.0, 7.0), velocity=(2.0, 0.0), seed=7
    )
    clip, _, fwd, _ = synth_scene(spec)
    conf = [
        ConfidenceMap(covisible_forward(spec, t).astype(float)) for t in range(len(clip) - 1)
    ]
    clean = warp_error(clip, fwd, conf)
    assert clean.mean <= 1e-6, f"flow-consistent clip scored {clean.mean}"

    jittered = [FlowField(f.data + np.array([0.05, 0.0])) for f in fwd]
    assert warp_error(clip, jittered, conf).mean > 0.0


def test_batch_generation_is_schedule_independent(tmp_path):
    """Worker counts 1 and 8 must write byte-identical output trees."""
    spec = SceneSpec(
        height=24, width=32, frames=4, rect=(8.0, 6.0, 10.0, 8.0), velocity=(2.0, 0.0), seed=3
    )
    clip, depths, fwd, bwd = synth_scene(spec)
    root = tmp_path / "data"
    manifest = {"frames": [], "depths": [], "flows_fwd": [], "flows_bwd": []}
    for sub in manifest:
        (root / sub).mkdir(parents=True)
    for t, frame in enumerate(clip):
        manifest["frames"].append(f"frames/f_{t}.png")
        (root / manifest["frames"][-1]).write_bytes(codecs.write_png(frame))
    for t, d in enumerate(depths):
        manifest["depths"].append(f"depths/d_{t}.pfm")
        (root / manifest["depths"][-1]).write_bytes(codecs.write_pfm(d))
    for key, flows in (("flows_fwd", fwd), ("flows_bwd", bwd)):
        for t, f in enumerate(flows):
            manifest[key].append(f"{key}/w_{t}.flo")
            (root / manifest[key][-1]).write_bytes(codecs.write_flo(f))
    (root / "manifest.json").write_text(json.dumps(manifest))

    config = {"manifest": "data/manifest.json", "out_dir": "out", "gain": 3.0, "direction": -1}
    trees = {}
    for workers in (1, 8):
        cmd_generate(dict(config, workers=workers), base_dir=tmp_path)
        out = tmp_path / "out"
        trees[workers] = {
            str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()
        }
    assert set(trees[1]) == set(trees[8])
    assert trees[1] == trees[8], "parallel schedule leaked into the outputs"


def test_codec_round_trips_and_error_names():
    """1000 lossless round trips; malformed inputs fail by documented name."""
    rng = np.random.default_rng(9)
    trips = 0
    for _ in range(250):
        h, w = int(rng.integers(1, 9)), int(rng.integers(1, 9))

        depth = DepthMap(rng.uniform(0.0, 5.0, size=(h, w)).astype(np.float32).astype(np.float64))
        assert np.array_equal(codecs.read_pfm(codecs.write_pfm(depth)).data, depth.data)
        trips += 1

        flow = FlowField(
            rng.uniform(-9.0, 9.0, size=(h, w, 2)).astype(np.float32).astype(np.float64)
        )
        assert np.array_equal(codecs.read_flo(codecs.write_flo(flow)).data, flow.data)
        trips += 1

        frame = Frame(rng.integers(0, 65536, size=(h, w, 3)) / 65535.0)
        assert np.array_equal(codecs.read_png(codecs.write_png(frame)).data, frame.data)
        trips += 1

        mask = OcclusionMask((rng.random((h, w)) < 0.4).astype(np.uint8))
        decoded = codecs.read_png(codecs.write_png(mask), kind="mask")
        assert np.array_equal(decoded.data, mask.data)
        trips += 1
    assert trips == 1000

    def code_of(fn, *args, **kwargs):
        with pytest.raises(CodecError) as exc:
            fn(*args, **kwargs)
        return exc.value.code

    assert code_of(codecs.read_pfm, b"Xx\n1 1\n-1.0\n" + b"\0" * 4) == "bad-pfm-header"
    assert code_of(codecs.read_pfm, b"PF\n1 1\n-1.0\n" + b"\0" * 12) == "unsupported-pfm-kind"
    assert code_of(codecs.read_pfm, b"Pf\n99999 99999\n-1.0\n") == "pfm-dimension-overflow"
    assert code_of(codecs.read_pfm, b"Pf\n2 1\n-1.0\n" + b"\0" * 7) == "pfm-truncated"

    assert code_of(codecs.read_flo, b"PIEH") == "bad-flo-header"
    assert code_of(codecs.read_flo, b"HEIP" + b"\0" * 8) == "bad-flo-magic"
    good_flo = codecs.write_flo(FlowField(np.zeros((2, 2, 2))))
    assert code_of(codecs.read_flo, good_flo[:-4]) == "flo-truncated"

    assert code_of(codecs.read_png, b"\x89PNJ\r\n\x1a\n" + b"\0" * 30) == "bad-png-signature"
    good_png = codecs.write_png(Frame(np.full((4, 4, 3), 0.5)))
    # keep the signature and IHDR but cut the data chunks short
    assert code_of(codecs.read_png, good_png[:40]) == "bad-png-payload"
    gray = codecs.write_png(Frame(np.full((2, 2, 3), 0.5)), bit_depth=8)
    assert code_of(codecs.read_png, gray, kind="mask") == "non-binary-mask"

    assert code_of(codecs.read_latent, b"\x01\0\0\0") == "latent-truncated"
    good_latent = codecs.write_latent(np.zeros((1, 2, 2, 2)))
    assert code_of(codecs.read_latent, good_latent[:-4]) == "latent-truncated"
