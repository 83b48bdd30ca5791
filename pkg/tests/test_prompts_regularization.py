import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vmprompt.errors import DomainError, InsufficientFramesError, ShapeMismatchError
from vmprompt.framediff import diff_maps
from vmprompt.pn import PnParams, shift
from vmprompt.prompts import attention_sequence, motion_prompts
from vmprompt.regularization import temporal_variation, temporal_variation_grad, total_loss


class TestAttentionSequence:
    def test_static_scene_is_half(self):
        attn = attention_sequence(np.zeros((3, 3, 4)), PnParams(0.8, 0.0))
        np.testing.assert_array_equal(attn, 0.5)

    def test_positive_shift_darkens_static_scene(self):
        p = PnParams(0.8, 0.5)
        assert shift(p) > 0
        attn = attention_sequence(np.zeros((3, 3, 4)), p)
        assert np.all(attn < 0.5)
        assert np.all(attn == attn.flat[0])

    def test_bright_moving_pixel_peaks(self):
        frames = np.full((5, 5, 3, 2), 0.2)
        frames[2, 3, :, 1] = 1.0
        attn = attention_sequence(diff_maps(frames), PnParams(0.3, 0.1))
        assert attn.shape == (5, 5, 1)
        assert attn[2, 3, 0] == attn.max()
        assert np.sum(attn == attn.max()) == 1


class TestMotionPrompts:
    def test_ones_give_original_frames(self, rng):
        frames = rng.random((4, 4, 3, 5))
        np.testing.assert_array_equal(motion_prompts(frames, np.ones((4, 4, 4))), frames[..., 1:])

    def test_zeros_give_black(self, rng):
        frames = rng.random((4, 4, 3, 3))
        assert np.all(motion_prompts(frames, np.zeros((4, 4, 2))) == 0)

    def test_scalar_product(self):
        z = motion_prompts(np.full((2, 2, 3, 2), 0.8), np.full((2, 2, 1), 0.5))
        np.testing.assert_allclose(z, 0.4)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            motion_prompts(np.zeros((2, 2, 3, 3)), np.zeros((2, 2, 3)))

    def test_shared_weight_across_channels(self, rng):
        frames = rng.uniform(0.1, 1.0, (3, 3, 3, 4))
        attn = rng.random((3, 3, 3))
        ratio = motion_prompts(frames, attn) / frames[..., 1:]
        np.testing.assert_allclose(ratio, np.repeat(attn[:, :, None, :], 3, axis=2))

    def test_idempotent_ones(self, rng):
        frames = rng.random((3, 3, 3, 3))
        ones = np.ones((3, 3, 2))
        once = motion_prompts(frames, ones)
        twice = once * ones[..., None, :]
        np.testing.assert_array_equal(once, twice)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 1), st.integers(0, 2**32 - 1))
    def test_linear_in_frames(self, scale, seed):
        r = np.random.default_rng(seed)
        frames = r.random((3, 3, 3, 4))
        attn = r.random((3, 3, 3))
        np.testing.assert_allclose(
            motion_prompts(scale * frames, attn), scale * motion_prompts(frames, attn), atol=1e-15
        )

    def test_prompts_never_exceed_frames(self, rng):
        frames = rng.random((4, 4, 3, 6))
        z = motion_prompts(frames, attention_sequence(diff_maps(frames), PnParams(0.2, -0.4)))
        assert np.all(z <= frames[..., 1:])
        assert np.all(z >= 0)


class TestTemporalVariation:
    def test_identical_maps(self, rng):
        m = rng.random((3, 3))
        assert temporal_variation(np.stack([m] * 5, axis=-1)) == 0.0

    def test_constant_offset(self):
        c, h, w = 0.3, 4, 5
        attn = np.stack([np.zeros((h, w)), np.full((h, w), c)], axis=-1)
        assert temporal_variation(attn) == pytest.approx(h * w * c * c)

    def test_zero_one_zero(self):
        attn = np.stack([np.zeros((2, 2)), np.ones((2, 2)), np.zeros((2, 2))], axis=-1)
        assert temporal_variation(attn) == 4.0

    def test_single_map_is_zero(self):
        assert temporal_variation(np.ones((2, 2, 1))) == 0.0

    def test_empty(self):
        with pytest.raises(InsufficientFramesError):
            temporal_variation(np.zeros((2, 2, 0)))

    def test_batched(self, rng):
        attn = rng.random((3, 4, 4, 5))
        batched = temporal_variation(attn)
        assert batched.shape == (3,)
        for i in range(3):
            assert batched[i] == pytest.approx(temporal_variation(attn[i]))

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, (2, 3, 5), elements=st.floats(0, 1)), st.floats(0, 3))
    def test_properties(self, attn, c):
        v = temporal_variation(attn)
        assert v >= 0
        assert temporal_variation(attn[..., ::-1]) == pytest.approx(v, rel=1e-12, abs=1e-15)
        assert temporal_variation(c * attn) == pytest.approx(c * c * v, rel=1e-9, abs=1e-12)
        steps = np.abs(np.diff(attn, axis=-1))
        if np.all(steps == 0):
            assert v == 0
        if v == 0:
            # squares of steps below ~1e-154 underflow to zero
            assert steps.max() < 1e-150

    def test_gradient_matches_central_differences(self, rng):
        attn = rng.random((3, 3, 4))
        grad = temporal_variation_grad(attn)
        h = 1e-6
        for idx in [(0, 0, 0), (1, 2, 1), (2, 1, 3)]:
            up, down = attn.copy(), attn.copy()
            up[idx] += h
            down[idx] -= h
            fd = (temporal_variation(up) - temporal_variation(down)) / (2 * h)
            assert grad[idx] == pytest.approx(fd, rel=1e-7)


class TestTotalLoss:
    def test_unregularized(self):
        assert total_loss(1.7, 3.0, 0.0).total == 1.7

    def test_paper_lambda(self):
        out = total_loss(1.0, 4.0, 2.5)
        assert out.total == 11.0
        assert (out.task_loss, out.variation, out.lam) == (1.0, 4.0, 2.5)

    def test_zero(self):
        assert total_loss(0.0, 0.0, 1.0).total == 0.0

    def test_negative_lambda(self):
        with pytest.raises(DomainError):
            total_loss(1.0, 1.0, -0.1)

    @given(st.floats(0, 10), st.floats(0, 10), st.floats(1e-3, 10), st.floats(0, 10))
    def test_non_decreasing_in_lambda(self, task, lam1, var, step):
        assert total_loss(task, var, lam1 + step).total >= total_loss(task, var, lam1).total
