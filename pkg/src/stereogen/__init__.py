"""Stereo training-pair generation, consistency losses, and video metrics.

The package splits into five layers:

- ``imaging`` / ``codecs``: validated containers and byte-level formats
- ``rendering`` / ``pipeline`` / ``synthetic``: depth-based view synthesis
  with flow-refined occlusion masks, plus procedural test scenes
- ``diffusion``: latent noise schedules and the stereo-consistency loss
- ``attention``: reference-guided attention blending
- ``metrics`` / ``selfcheck`` / ``cli``: scoring and batch tooling

Every numerical routine has a slow per-pixel twin in ``reference`` used
by the self-check suite and the tests.
"""

from .attention import (
    AttentionWeights,
    attn,
    spatial_concat_attention,
    til_augment,
)
from .cli import cmd_compose, cmd_generate, cmd_metrics
from .diffusion import (
    NoiseSchedule,
    combined_loss,
    deviation_strength,
    estimate_clean,
    forward_diffuse,
    make_schedule,
    noise_loss,
    sds_embedding,
    stereo_loss,
)
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
from .metrics import MetricReport, psnr, ssim, warp_error
from .pipeline import StereoSample, StereoShift, depth_to_disparity, generate_sample
from .rendering import (
    CameraPose,
    backward_render,
    fb_confidence,
    forward_splat,
    hole_fill,
    refine_mask,
    reprojection_flow,
    zbuffer_resolve,
)
from .selfcheck import run_selfcheck
from .synthetic import SceneSpec, flicker_count, synth_scene

__version__ = "0.1.0"

__all__ = [
    "AttentionWeights",
    "CameraPose",
    "CodecError",
    "ConfidenceMap",
    "DepthMap",
    "DisparityMap",
    "FlowField",
    "Frame",
    "GeometryError",
    "InputError",
    "MetricReport",
    "NoiseSchedule",
    "OcclusionMask",
    "SceneSpec",
    "StereoGenError",
    "StereoSample",
    "StereoShift",
    "VideoClip",
    "attn",
    "backward_render",
    "cmd_compose",
    "cmd_generate",
    "cmd_metrics",
    "combined_loss",
    "depth_to_disparity",
    "deviation_strength",
    "estimate_clean",
    "fb_confidence",
    "flicker_count",
    "forward_diffuse",
    "forward_splat",
    "generate_sample",
    "hole_fill",
    "make_schedule",
    "noise_loss",
    "psnr",
    "refine_mask",
    "reprojection_flow",
    "run_selfcheck",
    "sds_embedding",
    "spatial_concat_attention",
    "ssim",
    "stereo_loss",
    "synth_scene",
    "til_augment",
    "warp_error",
    "zbuffer_resolve",
]
