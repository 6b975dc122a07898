"""Self-contained verification suite behind the ``selfcheck`` command.

Every check pits a production code path against an independent route:
a per-pixel reference implementation, a hand-derived closed form, or an
algebraic identity. Checks print one line each with the tolerance they
enforce; the suite passes only if every check does.

The ``perturb_gradient`` argument exists to prove the harness can fail:
it adds a constant to the analytic gradient before the finite-difference
comparison, which must break the ``gradient-matches-fd`` check.
"""

from __future__ import annotations

import sys

import numpy as np

from . import codecs, diffusion, metrics, reference
from .attention import AttentionWeights, attn, spatial_concat_attention, til_augment
from .errors import CodecError, GeometryError, InputError, StereoGenError
from .imaging import (
    ConfidenceMap,
    DepthMap,
    DisparityMap,
    FlowField,
    Frame,
    OcclusionMask,
    VideoClip,
)
from .pipeline import StereoShift, depth_to_disparity, generate_sample
from .rendering import (
    TAU_W,
    CameraPose,
    backward_render,
    fb_confidence,
    forward_splat,
    hole_fill,
    refine_mask,
    reprojection_flow,
    zbuffer_resolve,
)
from .synthetic import SceneSpec, covisible_forward, flicker_count, synth_scene

# the standard exercise scene: rectangle sliding right, target view on the
# left, so the occlusion band trails the motion where flow stays reliable
SCENE = SceneSpec(
    height=48, width=64, frames=6,
    bg_depth=1.0, fg_depth=2.0,
    rect=(18.0, 12.0, 20.0, 16.0), velocity=(2.0, 0.0), seed=5,
)
SHIFT = StereoShift(gain=4.0, direction=-1)


def _random_frame(rng, h, w):
    return Frame(rng.uniform(0.0, 1.0, size=(h, w, 3)))


def _random_mask(rng, h, w, p=0.3):
    return OcclusionMask((rng.random((h, w)) < p).astype(np.uint8))


def _random_flow(rng, h, w, scale=4.0):
    return FlowField(rng.uniform(-scale, scale, size=(h, w, 2)))


def _masked_psnr(a, b, keep):
    d = (a - b)[keep]
    mse = float(np.mean(d * d))
    if mse == 0.0:
        return metrics.PSNR_CAP
    return min(10.0 * np.log10(1.0 / mse), metrics.PSNR_CAP)


def _normalize_like_splat(acc, weight):
    hole = weight < TAU_W
    out = np.clip(acc / np.where(hole, 1.0, weight)[:, :, None], 0.0, 1.0)
    out[hole] = 0.0
    return out, hole


# ---------------------------------------------------------------------------
# rendering checks

def check_splat_identity(ctx):
    frame = _random_frame(ctx.rng, 12, 10)
    zero = FlowField(np.zeros((12, 10, 2)))
    out, mask, weight = forward_splat(frame, zero)
    assert np.array_equal(out.data, frame.data), "identity warp must be bit-exact"
    assert mask.area == 0
    assert np.array_equal(weight, np.ones((12, 10)))


def check_splat_weight_conservation(ctx):
    for _ in range(5):
        h, w = int(ctx.rng.integers(4, 16)), int(ctx.rng.integers(4, 16))
        frame = _random_frame(ctx.rng, h, w)
        flow = _random_flow(ctx.rng, h, w, scale=5.0)
        _, _, weight = forward_splat(frame, flow)
        ex = np.arange(w)[None, :] + flow.u
        ey = np.arange(h)[:, None] + flow.v
        count = int(np.sum((ex >= 0) & (ex <= w - 1) & (ey >= 0) & (ey <= h - 1)))
        assert abs(weight.sum() - count) <= 1e-6, f"{weight.sum()} vs {count} sources"


def check_splat_reference(ctx):
    for _ in range(3):
        h, w = int(ctx.rng.integers(3, 13)), int(ctx.rng.integers(3, 13))
        frame = _random_frame(ctx.rng, h, w)
        flow = _random_flow(ctx.rng, h, w)
        out, mask, weight = forward_splat(frame, flow)
        acc_n, w_n = reference.naive_splat(frame.data, flow.u, flow.v)
        color_n, hole_n = _normalize_like_splat(acc_n, w_n)
        assert np.max(np.abs(weight - w_n)) <= 1e-9
        assert np.max(np.abs(out.data - color_n)) <= 1e-9
        assert np.array_equal(mask.data.astype(bool), hole_n)


def check_zbuffer_reference(ctx):
    for _ in range(3):
        h, w = int(ctx.rng.integers(3, 13)), int(ctx.rng.integers(3, 13))
        frame = _random_frame(ctx.rng, h, w)
        depth = DepthMap(ctx.rng.uniform(0.1, 3.0, size=(h, w)))
        disp = depth_to_disparity(depth, StereoShift(gain=min(2.0, (w - 1) / 5), direction=1))
        out, mask = zbuffer_resolve(frame, disp, depth)
        acc_n, w_n = reference.naive_splat(
            frame.data, disp.data, np.zeros((h, w)), depth=depth.data
        )
        color_n, hole_n = _normalize_like_splat(acc_n, w_n)
        assert np.max(np.abs(out.data - color_n)) <= 1e-9
        assert np.array_equal(mask.data.astype(bool), hole_n)


def check_zbuffer_nearest_wins(ctx):
    frame = Frame(np.array([[[0.2] * 3, [0.8] * 3]]))
    disparity = DisparityMap(np.array([[1.0, 0.0]]))
    near_first = DepthMap(np.array([[2.0, 1.0]]))
    out, _ = zbuffer_resolve(frame, disparity, near_first)
    assert np.allclose(out.data[0, 1], 0.2), "nearer left pixel must win the shared bin"
    near_second = DepthMap(np.array([[1.0, 2.0]]))
    out, _ = zbuffer_resolve(frame, disparity, near_second)
    assert np.allclose(out.data[0, 1], 0.8), "flipping depths must flip the winner"


def check_confidence_reference(ctx):
    for _ in range(3):
        h, w = int(ctx.rng.integers(3, 13)), int(ctx.rng.integers(3, 13))
        fwd = _random_flow(ctx.rng, h, w)
        bwd = _random_flow(ctx.rng, h, w)
        got = fb_confidence(fwd, bwd)
        want = reference.naive_confidence(fwd.data, bwd.data)
        assert np.array_equal(got.data, want), "confidence decisions must agree exactly"


def check_confidence_rejects(ctx):
    h, w = 8, 16
    fwd = FlowField(np.full((h, w, 2), [10.0, 0.0]))
    bwd = FlowField(np.zeros((h, w, 2)))
    conf = fb_confidence(fwd, bwd)
    assert np.all(conf.data == 0), "residual 10 px must fail the consistency bound"
    consistent = fb_confidence(FlowField(np.full((h, w, 2), [2.0, 0.0])),
                               FlowField(np.full((h, w, 2), [-2.0, 0.0])))
    assert np.all(consistent.data[:, : w - 2] == 1), "exact inverse flows are consistent"


def check_refine_truth_table(ctx):
    h, w = 4, 4
    zeros = FlowField(np.zeros((h, w, 2)))
    empty = OcclusionMask(np.zeros((h, w), dtype=np.uint8))
    full = OcclusionMask(np.ones((h, w), dtype=np.uint8))
    half = ConfidenceMap(np.full((h, w), 0.5))
    out = refine_mask(empty, full, full, zeros, zeros, half)
    assert np.all(out.data == 1), "two masked neighbors at C=0.5 must set the pixel"
    strong = ConfidenceMap(np.full((h, w), 0.9))
    out = refine_mask(empty, full, empty, zeros, zeros, strong)
    assert np.all(out.data == 0), "one masked neighbor at C=0.9 must not reach 1"
    oob = FlowField(np.full((h, w, 2), [-10.0, 0.0]))
    ones_conf = ConfidenceMap(np.ones((h, w)))
    out = refine_mask(empty, full, full, oob, oob, ones_conf)
    assert np.all(out.data == 0), "out-of-bounds samples must contribute nothing"


def check_refine_monotone_idempotent(ctx):
    for _ in range(20):
        h, w = int(ctx.rng.integers(2, 10)), int(ctx.rng.integers(2, 10))
        m = _random_mask(ctx.rng, h, w)
        mp, mn = _random_mask(ctx.rng, h, w), _random_mask(ctx.rng, h, w)
        fp, fn = _random_flow(ctx.rng, h, w), _random_flow(ctx.rng, h, w)
        conf = ConfidenceMap(ctx.rng.random((h, w)))
        once = refine_mask(m, mp, mn, fp, fn, conf)
        assert np.all(once.data >= m.data), "refinement may only set pixels"
        twice = refine_mask(once, mp, mn, fp, fn, conf)
        assert np.array_equal(twice.data, once.data), "second pass must be a no-op"


def check_refine_reference(ctx):
    for _ in range(3):
        h, w = int(ctx.rng.integers(3, 13)), int(ctx.rng.integers(3, 13))
        m = _random_mask(ctx.rng, h, w)
        mp, mn = _random_mask(ctx.rng, h, w), _random_mask(ctx.rng, h, w)
        fp, fn = _random_flow(ctx.rng, h, w), _random_flow(ctx.rng, h, w)
        conf = ConfidenceMap(ctx.rng.random((h, w)))
        got = refine_mask(m, mp, mn, fp, fn, conf)
        want = reference.naive_refine(m.data, mp.data, mn.data, fp.data, fn.data, conf.data)
        assert np.array_equal(got.data, want)


def check_holefill(ctx):
    h, w = 14, 11
    frame = _random_frame(ctx.rng, h, w)
    empty = OcclusionMask(np.zeros((h, w), dtype=np.uint8))
    assert np.array_equal(hole_fill(frame, empty).frame.data, frame.data)
    mask = _random_mask(ctx.rng, h, w, p=0.35)
    result = hole_fill(frame, mask)
    assert not result.all_occluded
    keep = mask.data == 0
    assert np.array_equal(result.frame.data[keep], frame.data[keep]), "known pixels must pass through"
    for c in range(3):
        known = frame.data[:, :, c][keep]
        filled = result.frame.data[:, :, c][~keep]
        assert filled.min() >= known.min() - 1e-12 and filled.max() <= known.max() + 1e-12, \
            "filled values must stay inside the known range"
    full = OcclusionMask(np.ones((h, w), dtype=np.uint8))
    fallback = hole_fill(frame, full, fallback=(0.25, 0.5, 0.75))
    assert fallback.all_occluded
    assert np.allclose(fallback.frame.data[0, 0], [0.25, 0.5, 0.75])


def check_reprojection(ctx):
    depth = DepthMap(np.full((6, 8), 1.0))
    src = CameraPose(50.0, 50.0, 4.0, 3.0, np.eye(3), np.zeros(3))
    same = reprojection_flow(depth, src, src, 1.0, 0.0)
    assert np.max(np.abs(same.data)) <= 1e-12, "identical poses must give zero flow"
    dst = CameraPose(50.0, 50.0, 4.0, 3.0, np.eye(3), np.array([0.1, 0.0, 0.0]))
    flow = reprojection_flow(depth, src, dst, 1.0, 0.0)
    # z = 1 everywhere, so u = -fx * tx / z = -5 exactly
    assert np.max(np.abs(flow.u + 5.0)) <= 1e-9
    assert np.max(np.abs(flow.v)) <= 1e-9
    flipped = CameraPose(50.0, 50.0, 4.0, 3.0, np.diag([-1.0, 1.0, -1.0]), np.zeros(3))
    try:
        reprojection_flow(depth, src, flipped, 1.0, 0.0)
    except GeometryError as e:
        assert e.code == "behind-camera"
    else:
        raise AssertionError("180-degree turn must raise behind-camera")


def _scene_sample(workers=None):
    clip, depths, fwd, bwd = synth_scene(SCENE)
    return generate_sample(clip, depths, fwd, bwd, SHIFT, workers=workers)


def check_roundtrip_psnr(ctx):
    sample = _scene_sample()
    worst = min(
        _masked_psnr(
            sample.back_rendered[t].data,
            sample.gt_reference[t].data,
            sample.unrefined_masks[t].data == 0,
        )
        for t in range(len(sample))
    )
    assert worst >= 40.0, f"round-trip PSNR {worst:.2f} dB below 40 dB"


def check_flicker_reduction(ctx):
    sample = _scene_sample()
    clip, depths, fwd, bwd = synth_scene(SCENE)
    before = flicker_count(sample.unrefined_masks, fwd, bwd)
    after = flicker_count(sample.masks, fwd, bwd)
    assert before > 0, "scene must produce unrefined flicker"
    assert after <= before / 2, f"flicker {before} -> {after}, need at least a halving"


# ---------------------------------------------------------------------------
# diffusion checks

def check_schedule(ctx):
    sched = diffusion.make_schedule()
    assert sched.T == 1000
    assert np.all(np.diff(sched.alpha_bars) < 0), "alpha_bar must strictly decrease"
    assert sched.alpha_bars[-1] > 0
    try:
        diffusion.make_schedule(10, 0.1, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("beta_end = 1.0 must be rejected")


def check_diffuse_inverse(ctx):
    sched = diffusion.make_schedule()
    z0 = ctx.rng.normal(size=(2, 3, 4, 4))
    eps = ctx.rng.normal(size=(2, 3, 4, 4))
    for t in (1, 200, 500, 800, 1000):
        if sched.alpha_bar(t) < 1e-4:
            continue
        z_t = diffusion.forward_diffuse(z0, t, eps, sched)
        back = diffusion.estimate_clean(z_t, eps, t, sched)
        err = np.max(np.abs(back - z0))
        assert err <= 1e-5, f"t={t}: inversion error {err}"


def check_deviation_properties(ctx):
    for _ in range(50):
        a = ctx.rng.normal(size=(2, 2, 3, 3))
        b = ctx.rng.normal(size=(2, 2, 3, 3))
        s = diffusion.deviation_strength(a, b)
        assert np.all(s >= 0)
        assert np.array_equal(s, diffusion.deviation_strength(b, a))
        assert np.all(diffusion.deviation_strength(a, a) == 0)
        assert np.all(s > 0)  # random tensors differ almost surely
        c = np.full_like(a, 0.7)
        shifted = diffusion.deviation_strength(a + c, b + c)
        assert np.max(np.abs(shifted - s)) <= 1e-12, "translation invariance"


def check_embedding(ctx):
    e = diffusion.sds_embedding(0.0, 8)
    assert np.array_equal(e, np.array([0.0, 1.0] * 4)), "s=0 must embed as [0,1,...]"
    assert np.array_equal(diffusion.sds_embedding(0.37, 16), diffusion.sds_embedding(0.37, 16))
    grid = np.linspace(0.0, 1.0, 100)
    embs = np.stack([diffusion.sds_embedding(float(s), 16) for s in grid])
    gaps = np.max(np.abs(np.diff(embs, axis=0)), axis=1)
    assert np.all(gaps > 0), "distinct strengths must embed distinctly"
    try:
        diffusion.sds_embedding(0.1, 7)
    except ValueError:
        pass
    else:
        raise AssertionError("odd dim must be rejected")


def check_loss_zero(ctx):
    sched = diffusion.make_schedule()
    z0 = ctx.rng.normal(size=(2, 2, 3, 3))
    z_ref = ctx.rng.normal(size=(2, 2, 3, 3))
    eps = ctx.rng.normal(size=(2, 2, 3, 3))
    t = 500
    z_t = diffusion.forward_diffuse(z0, t, eps, sched)
    loss, grad = diffusion.combined_loss(eps, eps, z_t, z0, z_ref, t, sched)
    assert abs(loss) <= 1e-12, f"loss {loss} at the exact prediction"
    assert np.max(np.abs(grad)) <= 1e-10, "gradient must vanish at the minimum"


def check_gradient_fd(ctx):
    sched = diffusion.make_schedule()
    step = 1e-4
    t = 600
    ab = sched.alpha_bar(t)
    kink_radius = max(1e-6, 2.0 * step * np.sqrt(1.0 - ab) / np.sqrt(ab))
    for _ in range(3):
        shape = (2, 2, 3, 3)
        z0 = ctx.rng.normal(size=shape)
        z_ref = ctx.rng.normal(size=shape)
        eps = ctx.rng.normal(size=shape)
        eps_pred = eps + 0.1 * ctx.rng.normal(size=shape)
        z_t = diffusion.forward_diffuse(z0, t, eps, sched)
        _, grad = diffusion.combined_loss(eps, eps_pred, z_t, z0, z_ref, t, sched)
        grad = grad + ctx.perturb_gradient  # debug hook, normally zero
        fd = reference.fd_gradient(
            lambda ep: diffusion.combined_loss(eps, ep, z_t, z0, z_ref, t, sched)[0],
            eps_pred, step=step,
        )
        z0_hat = diffusion.estimate_clean(z_t, eps_pred, t, sched)
        away_from_kink = np.abs(z0_hat - z_ref) > kink_radius
        compare = away_from_kink & (np.abs(grad) > 1e-8)
        rel = np.abs(grad - fd) / np.maximum(np.abs(grad), np.abs(fd))
        worst = float(rel[compare].max()) if np.any(compare) else 0.0
        assert worst <= 1e-4, f"gradient mismatch, relative error {worst:.3e}"


# ---------------------------------------------------------------------------
# attention checks

def check_attn_reference(ctx):
    for _ in range(3):
        m, n, c = (int(ctx.rng.integers(1, 9)) for _ in range(3))
        za = ctx.rng.normal(size=(m, c))
        zb = ctx.rng.normal(size=(n, c))
        w = AttentionWeights(*(ctx.rng.normal(size=(c, c)) for _ in range(3)))
        got = attn(za, zb, w)
        want = reference.naive_attn(za, zb, w.wq, w.wk, w.wv)
        assert np.max(np.abs(got - want)) <= 1e-9
    # a single key gets all the mass regardless of the query
    zb = ctx.rng.normal(size=(1, 2))
    out = attn(ctx.rng.normal(size=(3, 2)), zb, AttentionWeights.identity(2))
    assert np.max(np.abs(out - zb[0])) <= 1e-12


def check_attn_rows(ctx):
    c = 5
    zb = np.eye(c)  # keys/values are the basis, so with Wv = I the output rows are the softmax rows
    za = ctx.rng.normal(size=(7, c))
    rows = attn(za, zb, AttentionWeights.identity(c))
    sums = rows.sum(axis=1)
    assert np.max(np.abs(sums - 1.0)) <= 1e-6, "softmax rows must sum to 1"


def check_til_endpoints(ctx):
    c = 3
    w = AttentionWeights(*(ctx.rng.normal(size=(c, c)) for _ in range(3)))
    z = ctx.rng.normal(size=(4, c))
    q = ctx.rng.normal(size=(5, c))
    full_self = til_augment(z, [q], lambda_blend=1.0, w=w)
    assert np.max(np.abs(full_self - attn(z, z, w))) <= 1e-12
    full_cross = til_augment(z, [q, q, q], lambda_blend=0.0, w=w)
    assert np.max(np.abs(full_cross - attn(z, q, w))) <= 1e-12


def check_til_affine(ctx):
    c = 3
    w = AttentionWeights(*(ctx.rng.normal(size=(c, c)) for _ in range(3)))
    z = ctx.rng.normal(size=(4, c))
    neighbors = [ctx.rng.normal(size=(4, c)) for _ in range(4)]
    at0 = til_augment(z, neighbors, 0.0, w)
    at1 = til_augment(z, neighbors, 1.0, w)
    for lam in (0.25, 0.6, 0.9):
        blend = til_augment(z, neighbors, lam, w)
        assert np.max(np.abs(blend - (lam * at1 + (1 - lam) * at0))) <= 1e-6


def check_til_permutation(ctx):
    import itertools
    c = 2
    w = AttentionWeights(*(ctx.rng.normal(size=(c, c)) for _ in range(3)))
    z = ctx.rng.normal(size=(3, c))
    neighbors = [ctx.rng.normal(size=(3, c)) for _ in range(3)]
    base = til_augment(z, neighbors, 0.6, w)
    for perm in itertools.permutations(neighbors):
        assert np.array_equal(til_augment(z, list(perm), 0.6, w), base), \
            "neighbor order must not change the output at all"


def check_concat_attn(ctx):
    for _ in range(3):
        h, w_, c = int(ctx.rng.integers(1, 5)), int(ctx.rng.integers(1, 5)), int(ctx.rng.integers(1, 4))
        zt = ctx.rng.normal(size=(h, w_, c))
        za = ctx.rng.normal(size=(h, w_, c))
        weights = AttentionWeights(*(ctx.rng.normal(size=(c, c)) for _ in range(3)))
        got = spatial_concat_attention(zt, za, weights)
        want = reference.naive_spatial_concat(zt, za, weights.wq, weights.wk, weights.wv)
        assert got.shape == zt.shape
        assert np.max(np.abs(got - want)) <= 1e-9
    # duplicated stack: both halves see identical tokens, halves must match
    zt = ctx.rng.normal(size=(2, 2, 2))
    weights = AttentionWeights.identity(2)
    stacked = np.concatenate([zt, zt], axis=0)
    full = attn(stacked, stacked, weights)
    assert np.max(np.abs(full[:2] - full[2:])) <= 1e-12


# ---------------------------------------------------------------------------
# metric checks

def check_psnr_sanity(ctx):
    a = _random_frame(ctx.rng, 12, 12)
    assert metrics.psnr(a, a) == 100.0, "identical frames must hit the cap"
    shifted = Frame(np.where(a.data >= 0.5, a.data - 0.1, a.data + 0.1))
    got = metrics.psnr(a, shifted)
    assert abs(got - 20.0) <= 1e-9, f"uniform 0.1 offset must score 20 dB, got {got}"
    assert metrics.psnr(a, shifted) == metrics.psnr(shifted, a)


def check_ssim_sanity(ctx):
    a = _random_frame(ctx.rng, 16, 16)
    assert metrics.ssim(a, a) == 1.0
    zero = Frame(np.zeros((16, 16, 3)))
    one = Frame(np.ones((16, 16, 3)))
    got = metrics.ssim(zero, one)
    want = metrics.SSIM_C1 / (1.0 + metrics.SSIM_C1)  # constant-patch closed form
    assert abs(got - want) <= 1e-12
    try:
        small = _random_frame(ctx.rng, 4, 4)
        metrics.ssim(small, small)
    except InputError as e:
        assert e.code == "frame-too-small"
    else:
        raise AssertionError("4x4 frame must be rejected")


def check_psnr_reference(ctx):
    for _ in range(3):
        a, b = _random_frame(ctx.rng, 9, 7), _random_frame(ctx.rng, 9, 7)
        assert abs(metrics.psnr(a, b) - reference.naive_psnr(a.data, b.data)) <= 1e-9


def check_ssim_reference(ctx):
    for _ in range(2):
        a, b = _random_frame(ctx.rng, 14, 13), _random_frame(ctx.rng, 14, 13)
        assert abs(metrics.ssim(a, b) - reference.naive_ssim(a.data, b.data)) <= 1e-9


def check_warp_reference(ctx):
    h, w = 9, 8
    frames = [_random_frame(ctx.rng, h, w) for _ in range(3)]
    flows = [_random_flow(ctx.rng, h, w, scale=2.0) for _ in range(2)]
    confs = [ConfidenceMap((ctx.rng.random((h, w)) < 0.8).astype(np.float64)) for _ in range(2)]
    report = metrics.warp_error(VideoClip(frames), flows, confs)
    values, skipped = reference.naive_warp_error(
        [f.data for f in frames], [f.data for f in flows], [c.data for c in confs]
    )
    assert report.params["skipped_frames"] == skipped
    assert np.max(np.abs(np.array(report.values) - np.array(values))) <= 1e-9


def check_warp_zero(ctx):
    spec = SceneSpec(height=24, width=32, frames=4, rect=(8.0, 6.0, 10.0, 8.0),
                     velocity=(1.0, 0.0), seed=11)
    clip, _, fwd, _ = synth_scene(spec)
    confs = [ConfidenceMap(covisible_forward(spec, t).astype(np.float64)) for t in range(3)]
    report = metrics.warp_error(clip, fwd, confs)
    assert abs(report.mean) <= 1e-6, f"consistent scene must score ~0, got {report.mean}"


def check_warp_jitter(ctx):
    spec = SceneSpec(height=24, width=32, frames=4, rect=(8.0, 6.0, 10.0, 8.0),
                     velocity=(1.0, 0.0), seed=11)
    clip, _, fwd, _ = synth_scene(spec)
    confs = [ConfidenceMap(covisible_forward(spec, t).astype(np.float64)) for t in range(3)]
    jittered = VideoClip([
        Frame(np.clip(f.data + (0.05 if i % 2 else -0.05), 0.0, 1.0))
        for i, f in enumerate(clip)
    ])
    report = metrics.warp_error(jittered, fwd, confs)
    assert report.mean > 0, "temporal jitter must produce a positive warping error"


# ---------------------------------------------------------------------------
# codec checks

def check_codec_roundtrip(ctx):
    for _ in range(40):
        h, w = int(ctx.rng.integers(1, 24)), int(ctx.rng.integers(1, 24))
        depth = DepthMap(ctx.rng.uniform(0.0, 9.0, size=(h, w)).astype(np.float32))
        assert np.array_equal(codecs.read_pfm(codecs.write_pfm(depth)).data, depth.data)
        flow = FlowField(ctx.rng.uniform(-30, 30, size=(h, w, 2)).astype(np.float32))
        assert np.array_equal(codecs.read_flo(codecs.write_flo(flow)).data, flow.data)
        raw = ctx.rng.integers(0, 65536, size=(h, w, 3), dtype=np.uint16)
        frame = Frame(raw.astype(np.float64) / 65535.0)
        assert np.array_equal(codecs.read_png(codecs.write_png(frame)).data, frame.data)
        mask = _random_mask(ctx.rng, h, w)
        assert np.array_equal(codecs.read_png(codecs.write_png(mask), kind="mask").data, mask.data)
        latent = ctx.rng.normal(size=(2, 2, h, w)).astype(np.float32).astype(np.float64)
        assert np.array_equal(codecs.read_latent(codecs.write_latent(latent)), latent)


def check_codec_errors(ctx):
    cases = [
        (lambda: codecs.read_pfm(b"PF\n2 2\n-1.0\n" + b"\0" * 48), "unsupported-pfm-kind"),
        (lambda: codecs.read_pfm(b"P5\n2 2\n255\n1234"), "bad-pfm-header"),
        (lambda: codecs.read_pfm(b"Pf\n2 2\n-1.0\n\0\0"), "pfm-truncated"),
        (lambda: codecs.read_flo(b"\0\0\0\0" + b"\0" * 8), "bad-flo-magic"),
        (lambda: codecs.read_flo(codecs.write_flo(FlowField(np.zeros((2, 2, 2))))[:-4], ), "flo-truncated"),
        (lambda: codecs.read_png(b"JUNKJUNKJUNK" * 4), "bad-png-signature"),
        (lambda: codecs.read_latent(b"\x01\0\0\0" * 4 + b"\0\0"), "latent-truncated"),
    ]
    for fn, code in cases:
        try:
            fn()
        except CodecError as e:
            assert e.code == code, f"expected {code}, got {e.code}"
        else:
            raise AssertionError(f"malformed input must raise {code}")
    import cv2
    gray = np.full((3, 3), 128, dtype=np.uint8)
    ok, buf = cv2.imencode(".png", gray)
    try:
        codecs.read_png(buf.tobytes(), kind="mask")
    except CodecError as e:
        assert e.code == "non-binary-mask"
    else:
        raise AssertionError("mid-gray mask must be rejected")


# ---------------------------------------------------------------------------
# harness

class _Context:
    def __init__(self, rng, perturb_gradient):
        self.rng = rng
        self.perturb_gradient = perturb_gradient


CHECKS = [
    ("splat-identity", "bit-exact", check_splat_identity),
    ("splat-weight-conservation", "1e-6", check_splat_weight_conservation),
    ("splat-matches-reference", "1e-9", check_splat_reference),
    ("zbuffer-matches-reference", "1e-9", check_zbuffer_reference),
    ("zbuffer-nearest-wins", "exact winner", check_zbuffer_nearest_wins),
    ("confidence-matches-reference", "bit-exact", check_confidence_reference),
    ("confidence-rejects-inconsistent", "exact", check_confidence_rejects),
    ("refine-truth-table", "exact", check_refine_truth_table),
    ("refine-monotone-idempotent", "exact", check_refine_monotone_idempotent),
    ("refine-matches-reference", "bit-exact", check_refine_reference),
    ("holefill-identity-convexity", "1e-12", check_holefill),
    ("reprojection-closed-form", "1e-9", check_reprojection),
    ("roundtrip-covisible-psnr", ">= 40 dB", check_roundtrip_psnr),
    ("flicker-reduction", ">= 50%", check_flicker_reduction),
    ("schedule-monotone", "exact", check_schedule),
    ("diffuse-estimate-inverse", "1e-5", check_diffuse_inverse),
    ("deviation-strength-properties", "1e-12", check_deviation_properties),
    ("embedding-endpoints", "exact", check_embedding),
    ("loss-zero-at-truth", "1e-12", check_loss_zero),
    ("gradient-matches-fd", "1e-4 relative", check_gradient_fd),
    ("attn-matches-reference", "1e-9", check_attn_reference),
    ("attn-rows-normalized", "1e-6", check_attn_rows),
    ("til-endpoints", "1e-12", check_til_endpoints),
    ("til-affine-lambda", "1e-6", check_til_affine),
    ("til-permutation-invariance", "bit-exact", check_til_permutation),
    ("concat-attn-matches-reference", "1e-9", check_concat_attn),
    ("psnr-sanity", "1e-9", check_psnr_sanity),
    ("ssim-sanity", "1e-12", check_ssim_sanity),
    ("psnr-matches-reference", "1e-9", check_psnr_reference),
    ("ssim-matches-reference", "1e-9", check_ssim_reference),
    ("warp-matches-reference", "1e-9", check_warp_reference),
    ("warp-consistent-zero", "1e-6", check_warp_zero),
    ("warp-jitter-positive", "> 0", check_warp_jitter),
    ("codec-roundtrip-fuzz", "bit-exact", check_codec_roundtrip),
    ("codec-error-names", "exact codes", check_codec_errors),
]


def run_selfcheck(seed: int = 0, perturb_gradient: float = 0.0, stream=None) -> bool:
    """Run every check; print one line per check; return overall success."""
    stream = stream or sys.stdout
    failures = 0
    for index, (name, tol, fn) in enumerate(CHECKS):
        ctx = _Context(np.random.default_rng([seed, index]), perturb_gradient)
        try:
            fn(ctx)
        except (AssertionError, StereoGenError, ValueError) as exc:
            failures += 1
            print(f"[FAIL] {name} (tolerance {tol}): {exc}", file=stream)
        else:
            print(f"[ok]   {name} (tolerance {tol})", file=stream)
    total = len(CHECKS)
    print(f"{total - failures}/{total} checks passed", file=stream)
    return failures == 0
