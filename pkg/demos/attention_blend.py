"""Neighbor-blend and concat-height attention on toy feature maps.

    python3 demos/attention_blend.py
"""

import numpy as np

from stereogen.attention import (
    AttentionWeights,
    attn,
    spatial_concat_attention,
    til_augment,
)


def main():
    rng = np.random.default_rng(0)
    c = 8
    z = rng.normal(size=(4, 6, c))  # the frame being denoised
    neighbors = [rng.normal(size=(4, 6, c)) for _ in range(3)]
    w = AttentionWeights(
        rng.normal(size=(c, c)) / np.sqrt(c),
        rng.normal(size=(c, c)) / np.sqrt(c),
        rng.normal(size=(c, c)) / np.sqrt(c),
    )

    own = attn(z, z, w)
    for lam in (1.0, 0.6, 0.0):
        blended = til_augment(z, neighbors, lambda_blend=lam, w=w)
        drift = np.linalg.norm(blended - own) / np.linalg.norm(own)
        print(f"lambda={lam:3.1f}: relative drift from pure self-attention {drift:.3f}")
    print("lambda=1 reproduces self-attention; smaller lambda mixes in the clip")
    print()

    base = til_augment(z, neighbors, w=w)
    shuffled = til_augment(z, neighbors[::-1], w=w)
    print(f"neighbor order reversed, outputs identical: "
          f"{np.array_equal(base, shuffled)}")
    print()

    z_aug = base
    fused = spatial_concat_attention(z, z_aug, w)
    print(f"concat-height attention: {z.shape} + {z_aug.shape} -> {fused.shape}")
    stacked = np.concatenate([z, z_aug], axis=0)
    full = attn(stacked, stacked, w)
    print(f"equals the top rows of attention over the stacked map: "
          f"{np.array_equal(fused, full[: z.shape[0]])}")


if __name__ == "__main__":
    main()
