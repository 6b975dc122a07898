"""Slow, obviously-correct reference implementations.

Every function here recomputes one of the vectorized operators with
plain per-pixel or per-token loops, sharing no code with the fast path
beyond the constants. The test suite and the ``selfcheck`` command
compare the two routes on randomized inputs; keep these readable and
boring, their only job is to be trustworthy.

All functions take and return raw numpy arrays.
"""

from __future__ import annotations

import math

import numpy as np

from .metrics import PSNR_CAP, SSIM_C1, SSIM_C2, SSIM_WINDOW, _gaussian_kernel
from .rendering import TAU_Z


def naive_splat(fields, du, dv, depth=None, exclude=None):
    """Per-pixel bilinear forward splat; returns (accumulated, weight).

    Mirrors the production semantics: sources whose destination leaves
    [0, w-1] x [0, h-1] are dropped whole, zero-weight corners are
    skipped, and with ``depth`` a source corner only lands where its
    inverse depth is within TAU_Z (relative) of the nearest one there.
    """
    h, w = du.shape
    k = fields.shape[2]

    def corners(x, y):
        ex, ey = x + du[y, x], y + dv[y, x]
        if not (0 <= ex <= w - 1 and 0 <= ey <= h - 1):
            return []
        if exclude is not None and exclude[y, x] != 0:
            return []
        x0, y0 = int(np.floor(ex)), int(np.floor(ey))
        fx, fy = ex - x0, ey - y0
        weights = (
            (y0, x0, (1.0 - fx) * (1.0 - fy)),
            (y0, x0 + 1, fx * (1.0 - fy)),
            (y0 + 1, x0, (1.0 - fx) * fy),
            (y0 + 1, x0 + 1, fx * fy),
        )
        return [(cy, cx, cw) for cy, cx, cw in weights if cw > 0]

    zmax = None
    if depth is not None:
        zmax = np.zeros((h, w))
        for y in range(h):
            for x in range(w):
                for cy, cx, _ in corners(x, y):
                    zmax[cy, cx] = max(zmax[cy, cx], depth[y, x])

    acc = np.zeros((h, w, k))
    weight = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            for cy, cx, cw in corners(x, y):
                if zmax is not None and depth[y, x] < (1.0 - TAU_Z) * zmax[cy, cx]:
                    continue
                weight[cy, cx] += cw
                for c in range(k):
                    acc[cy, cx, c] += cw * fields[y, x, c]
    return acc, weight


def _sample_bilinear(field, ex, ey):
    """Scalar clamped bilinear lookup, matching the fast path's indexing."""
    h, w = field.shape[:2]
    x0 = int(np.clip(np.floor(ex), 0, max(w - 2, 0)))
    y0 = int(np.clip(np.floor(ey), 0, max(h - 2, 0)))
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx, fy = ex - x0, ey - y0
    return (
        field[y0, x0] * (1.0 - fx) * (1.0 - fy)
        + field[y0, x1] * fx * (1.0 - fy)
        + field[y1, x0] * (1.0 - fx) * fy
        + field[y1, x1] * fx * fy
    )


def naive_confidence(flow_fwd, flow_bwd, alpha=0.01, beta=0.5):
    h, w = flow_fwd.shape[:2]
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            fu, fv = flow_fwd[y, x]
            ex, ey = x + fu, y + fv
            if not (0 <= ex <= w - 1 and 0 <= ey <= h - 1):
                continue
            bu, bv = _sample_bilinear(flow_bwd, ex, ey)
            ru, rv = fu + bu, fv + bv
            r2 = ru * ru + rv * rv
            bound = alpha * ((fu * fu + fv * fv) + (bu * bu + bv * bv)) + beta
            if r2 <= bound:
                out[y, x] = 1.0
    return out


def naive_refine(m_curr, m_prev, m_next, flow_to_prev, flow_to_next, conf):
    h, w = m_curr.shape
    out = np.array(m_curr, dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            total = 0.0
            for mask, flow in ((m_prev, flow_to_prev), (m_next, flow_to_next)):
                if mask is None:
                    continue
                ix = int(np.floor(x + flow[y, x, 0] + 0.5))
                iy = int(np.floor(y + flow[y, x, 1] + 0.5))
                if 0 <= ix <= w - 1 and 0 <= iy <= h - 1:
                    total += float(mask[iy, ix])
            if total * conf[y, x] >= 1.0:
                out[y, x] = 1
    return out


def naive_attn(zA, zB, wq, wk, wv):
    """Row-by-row attention: per query, explicit logits, softmax, blend."""
    a = np.asarray(zA, dtype=np.float64).reshape(-1, np.shape(zA)[-1])
    b = np.asarray(zB, dtype=np.float64).reshape(-1, np.shape(zB)[-1])
    c = a.shape[1]
    keys = [b[j] @ wk for j in range(b.shape[0])]
    vals = [b[j] @ wv for j in range(b.shape[0])]
    out = np.zeros((a.shape[0], c))
    for i in range(a.shape[0]):
        q = a[i] @ wq
        logits = [float(q @ keys[j]) / math.sqrt(c) for j in range(len(keys))]
        top = max(logits)
        weights = [math.exp(l - top) for l in logits]
        norm = math.fsum(weights)
        for j, wt in enumerate(weights):
            out[i] += (wt / norm) * vals[j]
    return out.reshape(np.shape(zA))


def naive_spatial_concat(z_t, z_aug, wq, wk, wv):
    stacked = np.concatenate([z_t, z_aug], axis=0)
    full = naive_attn(stacked, stacked, wq, wk, wv)
    return full[: z_t.shape[0]]


def naive_psnr(a, b):
    total = math.fsum(
        (float(x) - float(y)) ** 2 for x, y in zip(a.ravel(), b.ravel())
    )
    mse = total / a.size
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP)


def naive_ssim(a, b):
    kern = _gaussian_kernel()
    h, w = a.shape[:2]
    n = SSIM_WINDOW
    scores = []
    for c in range(3):
        vals = []
        for y in range(h - n + 1):
            for x in range(w - n + 1):
                pa = a[y : y + n, x : x + n, c]
                pb = b[y : y + n, x : x + n, c]
                mu_a = float(np.sum(kern * pa))
                mu_b = float(np.sum(kern * pb))
                var_a = float(np.sum(kern * pa * pa)) - mu_a * mu_a
                var_b = float(np.sum(kern * pb * pb)) - mu_b * mu_b
                cov = float(np.sum(kern * pa * pb)) - mu_a * mu_b
                num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
                den = (mu_a ** 2 + mu_b ** 2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
                vals.append(num / den)
        scores.append(math.fsum(vals) / len(vals))
    return math.fsum(scores) / 3.0


def naive_warp_error(frames, flows_fwd, confs):
    """Returns (per-frame values, skipped frame indices)."""
    values, skipped = [], []
    for t, (flow, conf) in enumerate(zip(flows_fwd, confs)):
        h, w = conf.shape
        num, den = [], []
        for y in range(h):
            for x in range(w):
                cw = float(conf[y, x])
                den.append(cw)
                if cw == 0.0:
                    num.append(0.0)
                    continue
                ex, ey = x + flow[y, x, 0], y + flow[y, x, 1]
                warped = _sample_bilinear(frames[t + 1], ex, ey)
                resid = frames[t][y, x] - warped
                num.append(cw * float(resid @ resid))
        total = math.fsum(den)
        if total == 0.0:
            skipped.append(t)
        else:
            values.append(math.fsum(num) / total)
    return values, skipped


def fd_gradient(fn, x, step=1e-4):
    """Central-difference gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.ravel()
    for i in range(x.size):
        lo, hi = x.copy(), x.copy()
        lo.ravel()[i] -= step
        hi.ravel()[i] += step
        flat[i] = (fn(hi) - fn(lo)) / (2.0 * step)
    return grad
