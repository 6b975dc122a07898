"""Analytic scene generator: exact geometry, flows, and flicker counting."""

import numpy as np
import pytest

from stereogen.imaging import FlowField, OcclusionMask
from stereogen.synthetic import (
    SceneSpec,
    covisible_forward,
    fg_region,
    flicker_count,
    synth_scene,
)

MOVING = SceneSpec(height=20, width=30, frames=4, rect=(8.0, 5.0, 10.0, 8.0), velocity=(2.0, 0.0))


class TestSynthScene:
    def test_shapes_and_counts(self):
        clip, depths, fwd, bwd = synth_scene(MOVING)
        assert len(clip) == 4 and len(depths) == 4
        assert len(fwd) == 3 and len(bwd) == 3
        assert (clip.height, clip.width) == (20, 30)

    def test_depth_layers(self):
        _, depths, _, _ = synth_scene(MOVING)
        inside = fg_region(MOVING, 0)
        assert np.all(depths[0].data[inside] == MOVING.fg_depth)
        assert np.all(depths[0].data[~inside] == MOVING.bg_depth)

    def test_texture_range(self):
        clip, _, _, _ = synth_scene(MOVING)
        assert clip[0].data.min() >= 0.2 - 1e-12
        assert clip[0].data.max() <= 0.8 + 1e-12

    def test_flow_matches_velocity(self):
        _, _, fwd, bwd = synth_scene(MOVING)
        inside0 = fg_region(MOVING, 0)
        inside1 = fg_region(MOVING, 1)
        assert np.all(fwd[0].u[inside0] == 2.0)
        assert np.all(fwd[0].u[~inside0] == 0.0)
        assert np.all(bwd[0].u[inside1] == -2.0)
        assert np.all(bwd[0].v == 0.0)

    def test_background_static_under_motion(self):
        clip, _, _, _ = synth_scene(MOVING)
        never_fg = ~(fg_region(MOVING, 0) | fg_region(MOVING, 1))
        assert np.array_equal(clip[0].data[never_fg], clip[1].data[never_fg])

    def test_rectangle_appearance_travels(self):
        # the rectangle texture is anchored to the rectangle, so a pixel at
        # the same rectangle-local offset looks identical in every frame
        clip, _, _, _ = synth_scene(MOVING)
        x0, y0 = 10, 7  # inside the rectangle at t=0
        assert np.allclose(clip[0].data[y0, x0], clip[1].data[y0, x0 + 2])

    def test_deterministic(self):
        a, _, _, _ = synth_scene(MOVING)
        b, _, _, _ = synth_scene(MOVING)
        assert all(np.array_equal(x.data, y.data) for x, y in zip(a, b))

    def test_no_rectangle_scene(self):
        spec = SceneSpec(height=6, width=8, frames=2, rect=None)
        clip, depths, fwd, _ = synth_scene(spec)
        assert np.all(depths[0].data == spec.bg_depth)
        assert np.all(fwd[0].data == 0.0)
        assert np.array_equal(clip[0].data, clip[1].data)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            synth_scene(SceneSpec(frames=0))


class TestCovisible:
    def test_static_scene_fully_covisible(self):
        spec = SceneSpec(height=10, width=12, frames=3, rect=(3.0, 3.0, 4.0, 4.0))
        assert np.all(covisible_forward(spec, 0))

    def test_newly_covered_background_excluded(self):
        vis = covisible_forward(MOVING, 0)
        newly_covered = ~fg_region(MOVING, 0) & fg_region(MOVING, 1)
        assert newly_covered.any()
        assert not vis[newly_covered].any()
        assert np.all(vis[~newly_covered])  # nothing leaves this raster at t=0


class TestFlickerCount:
    def _mask(self, arr):
        return OcclusionMask(np.asarray(arr, dtype=np.uint8))

    def test_pulse_counts_once(self):
        zero = self._mask(np.zeros((3, 3)))
        pulse = np.zeros((3, 3), dtype=np.uint8)
        pulse[1, 1] = 1
        flows = [FlowField(np.zeros((3, 3, 2)))] * 2
        assert flicker_count([zero, self._mask(pulse), zero], flows, flows) == 1

    def test_steady_masks_do_not_flicker(self):
        m = self._mask(np.eye(4))
        flows = [FlowField(np.zeros((4, 4, 2)))] * 2
        assert flicker_count([m, m, m], flows, flows) == 0

    def test_flow_aligned_comparison(self):
        # the mask travels with the flow; aligned sampling sees no flicker
        a = np.zeros((3, 4), dtype=np.uint8)
        a[1, 1] = 1
        b = np.zeros((3, 4), dtype=np.uint8)
        b[1, 2] = 1
        c = np.zeros((3, 4), dtype=np.uint8)
        c[1, 3] = 1
        right = FlowField(np.full((3, 4, 2), [1.0, 0.0]))
        left = FlowField(np.full((3, 4, 2), [-1.0, 0.0]))
        masks = [self._mask(a), self._mask(b), self._mask(c)]
        assert flicker_count(masks, [right, right], [left, left]) == 0
