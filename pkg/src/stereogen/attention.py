"""Single-head dense attention, the neighbor-blend augmentation, and the
concat-along-height spatial attention.

Feature maps are float64 arrays, either (h, w, c) or already flattened
to (tokens, c); outputs mirror the query's shape. There are no
positional encodings, no output projection, and no heads to split: the
operators stay small enough that a per-token loop can reproduce them
exactly, which is how they are checked.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

DEFAULT_LAMBDA_BLEND = 0.6
DEFAULT_NEIGHBORS = 8


class AttentionWeights:
    """Square query/key/value projections over the channel dimension."""

    __slots__ = ("wq", "wk", "wv", "channels")

    def __init__(self, wq, wk, wv):
        mats = []
        for name, m in (("wq", wq), ("wk", wk), ("wv", wv)):
            m = np.array(m, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be square, got {m.shape}")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} contains non-finite values")
            m.setflags(write=False)
            mats.append(m)
        if len({m.shape[0] for m in mats}) != 1:
            raise ValueError("wq, wk, wv must share their channel count")
        self.wq, self.wk, self.wv = mats
        self.channels = mats[0].shape[0]

    @classmethod
    def identity(cls, channels: int) -> "AttentionWeights":
        eye = np.eye(channels)
        return cls(eye, eye, eye)


def _tokens(z, name: str) -> np.ndarray:
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.reshape(-1, arr.shape[2])
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be (h, w, c) or (tokens, c), got {np.shape(z)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def attn(zA, zB, w: AttentionWeights) -> np.ndarray:
    """softmax(Q K^T / sqrt(c)) V with Q from zA and K, V from zB.

    Rows are stabilized by subtracting their max logit before
    exponentiation. The output has zA's shape.
    """
    qa = _tokens(zA, "zA")
    kb = _tokens(zB, "zB")
    if qa.shape[1] != w.channels or kb.shape[1] != w.channels:
        raise ValueError(
            f"channel mismatch: zA has {qa.shape[1]}, zB has {kb.shape[1]}, "
            f"weights expect {w.channels}"
        )
    q = qa @ w.wq
    k = kb @ w.wk
    v = kb @ w.wv
    logits = q @ k.T / math.sqrt(w.channels)
    logits = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    p = e / e.sum(axis=1, keepdims=True)
    out = p @ v
    return out.reshape(np.shape(zA))


def til_augment(
    z_r,
    neighbors: Sequence,
    lambda_blend: float = DEFAULT_LAMBDA_BLEND,
    w: AttentionWeights = None,
) -> np.ndarray:
    """Blend self-attention with the mean of cross-attentions to a set of
    neighbor feature maps:

        lambda * attn(z_r, z_r) + (1 - lambda) * mean_i attn(z_r, z_i)

    The neighbor mean is accumulated with exact summation, so any
    permutation of the neighbor list produces bit-identical output.
    """
    if not 0.0 <= lambda_blend <= 1.0:
        raise ValueError(f"lambda_blend must be in [0, 1], got {lambda_blend}")
    if len(neighbors) == 0:
        raise ValueError("neighbor list must not be empty")
    if w is None:
        w = AttentionWeights.identity(_tokens(z_r, "z_r").shape[1])
    own = attn(z_r, z_r, w)
    crosses = [attn(z_r, z_i, w) for z_i in neighbors]
    stacked = np.stack([c.reshape(-1) for c in crosses])
    mean = np.array(
        [math.fsum(stacked[:, j]) for j in range(stacked.shape[1])]
    ).reshape(own.shape) / len(neighbors)
    return lambda_blend * own + (1.0 - lambda_blend) * mean


def spatial_concat_attention(z_t, z_aug, w: AttentionWeights = None) -> np.ndarray:
    """Self-attention over the two maps stacked along height, keeping the
    rows that belong to the first map.

    Both inputs must be spatial (h, w, c) and identically shaped; the
    output has that same shape.
    """
    a = np.asarray(z_t, dtype=np.float64)
    b = np.asarray(z_aug, dtype=np.float64)
    if a.ndim != 3 or b.ndim != 3:
        raise ValueError("inputs must be spatial (h, w, c) feature maps")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if w is None:
        w = AttentionWeights.identity(a.shape[2])
    stacked = np.concatenate([a, b], axis=0)
    full = attn(stacked, stacked, w)
    return full[: a.shape[0]]
