"""Noise schedule, forward diffusion, clean-latent estimation, per-frame
deviation strength, and the stereo-aware loss with its analytic gradient.

Latents are plain float64 arrays of shape (frames, channels, height,
width). Everything here is double precision on purpose: the clean-latent
estimate divides by sqrt(alpha_bar_t), which reaches ~1e-2 at the tail
of a 1000-step schedule, and the gradient check tolerances assume the
extra headroom.

Timesteps are 1-based: t ranges over 1..T and selects beta_t, matching
the product definition alpha_bar_t = prod_{i<=t} (1 - beta_i).
"""

from __future__ import annotations

import numpy as np

DEFAULT_T = 1000
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02
DEFAULT_LAMBDA = 0.001
EMBED_SCALE = 1000.0
EMBED_BASE = 10000.0


class NoiseSchedule:
    """Linear-beta schedule with precomputed alpha products."""

    __slots__ = ("T", "betas", "alphas", "alpha_bars")

    def __init__(self, betas):
        betas = np.array(betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size < 1:
            raise ValueError("betas must be a non-empty 1-D sequence")
        if not np.all((betas > 0) & (betas < 1)):
            raise ValueError("every beta must lie strictly inside (0, 1)")
        alphas = 1.0 - betas
        alpha_bars = np.cumprod(alphas)
        if alpha_bars[-1] <= 0:
            raise ValueError("schedule underflows: alpha_bar_T must stay positive")
        for arr in (betas, alphas, alpha_bars):
            arr.setflags(write=False)
        self.T = betas.size
        self.betas = betas
        self.alphas = alphas
        self.alpha_bars = alpha_bars

    def alpha_bar(self, t: int) -> float:
        """alpha_bar_t for a 1-based step index."""
        if not 1 <= t <= self.T:
            raise ValueError(f"t must be in 1..{self.T}, got {t}")
        return float(self.alpha_bars[t - 1])


def make_schedule(
    T: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """Linear interpolation of beta over T steps."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not (0 < beta_start <= beta_end < 1):
        raise ValueError(
            f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}"
        )
    return NoiseSchedule(np.linspace(beta_start, beta_end, T))


def _as_latent(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 4:
        raise ValueError(f"{name} must be 4-D (frames, channels, h, w), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _matched(a, b, name_a: str, name_b: str):
    a, b = _as_latent(a, name_a), _as_latent(b, name_b)
    if a.shape != b.shape:
        raise ValueError(f"{name_a} {a.shape} and {name_b} {b.shape} differ in shape")
    return a, b


def forward_diffuse(z0, t: int, eps, sched: NoiseSchedule) -> np.ndarray:
    """z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps."""
    z0, eps = _matched(z0, eps, "z0", "eps")
    ab = sched.alpha_bar(t)
    return np.sqrt(ab) * z0 + np.sqrt(1.0 - ab) * eps


def estimate_clean(z_t, eps_pred, t: int, sched: NoiseSchedule) -> np.ndarray:
    """Invert the forward step under a noise prediction:
    z0_hat = (z_t - sqrt(1 - alpha_bar_t) eps_pred) / sqrt(alpha_bar_t)."""
    z_t, eps_pred = _matched(z_t, eps_pred, "z_t", "eps_pred")
    ab = sched.alpha_bar(t)
    return (z_t - np.sqrt(1.0 - ab) * eps_pred) / np.sqrt(ab)


def deviation_strength(z0, z_ref) -> np.ndarray:
    """Per-frame mean absolute deviation from the reference latent.

    One scalar per frame (reduced over channels and space), so it can be
    embedded the same way as a timestep.
    """
    z0, z_ref = _matched(z0, z_ref, "z0", "z_ref")
    return np.mean(np.abs(z0 - z_ref), axis=(1, 2, 3))


def sds_embedding(s: float, dim: int) -> np.ndarray:
    """Sinusoidal embedding of a deviation strength.

    Component 2k is sin(s * EMBED_SCALE / EMBED_BASE^(2k/dim)) and 2k+1
    the matching cosine; s = 0 embeds as [0, 1, 0, 1, ...].
    """
    if dim <= 0 or dim % 2 != 0:
        raise ValueError(f"dim must be a positive even integer, got {dim}")
    if not (np.isfinite(s) and s >= 0):
        raise ValueError(f"s must be finite and non-negative, got {s}")
    k2 = np.arange(0, dim, 2, dtype=np.float64)
    angle = s * EMBED_SCALE / EMBED_BASE ** (k2 / dim)
    out = np.empty(dim)
    out[0::2] = np.sin(angle)
    out[1::2] = np.cos(angle)
    return out


def noise_loss(eps, eps_pred) -> float:
    """Mean squared error of the noise prediction."""
    eps, eps_pred = _matched(eps, eps_pred, "eps", "eps_pred")
    d = eps - eps_pred
    return float(np.mean(d * d))


def stereo_loss(z0, z0_hat, z_ref) -> float:
    """Squared difference of the per-frame deviation strengths, summed
    over frames: the estimate should deviate from the reference exactly
    as much as the true latent does."""
    a = deviation_strength(z0, z_ref)
    b = deviation_strength(z0_hat, z_ref)
    return float(np.sum((a - b) ** 2))


def combined_loss(
    eps,
    eps_pred,
    z_t,
    z0,
    z_ref,
    t: int,
    sched: NoiseSchedule,
    lambda_loss: float = DEFAULT_LAMBDA,
):
    """Noise MSE plus lambda times the stereo deviation loss, with the
    analytic gradient with respect to eps_pred.

    The deviation term reaches eps_pred through the clean estimate:
    d z0_hat / d eps_pred = -sqrt(1-ab)/sqrt(ab) elementwise, and the
    absolute value contributes sign(z0_hat - z_ref) (0 at the kink,
    making this a subgradient there).
    """
    eps, eps_pred = _matched(eps, eps_pred, "eps", "eps_pred")
    for other, name in ((z_t, "z_t"), (z0, "z0"), (z_ref, "z_ref")):
        if _as_latent(other, name).shape != eps.shape:
            raise ValueError(f"{name} does not match eps in shape")
    if not (np.isfinite(lambda_loss) and lambda_loss >= 0):
        raise ValueError(f"lambda_loss must be finite and non-negative, got {lambda_loss}")

    ab = sched.alpha_bar(t)
    z0_hat = estimate_clean(z_t, eps_pred, t, sched)
    a = deviation_strength(z0, z_ref)
    b = deviation_strength(z0_hat, z_ref)

    diff = eps_pred - eps
    l_eps = float(np.mean(diff * diff))
    l_dev = float(np.sum((a - b) ** 2))
    loss = l_eps + lambda_loss * l_dev

    grad = 2.0 * diff / diff.size
    if lambda_loss > 0:
        m = z0_hat[0].size  # elements per frame
        coef = 2.0 * (a - b) * np.sqrt(1.0 - ab) / (m * np.sqrt(ab))
        sign = np.sign(z0_hat - np.asarray(z_ref, dtype=np.float64))
        grad = grad + lambda_loss * coef[:, None, None, None] * sign
    return loss, grad
