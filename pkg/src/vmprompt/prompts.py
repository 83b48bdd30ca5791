"""Attention sequences and video motion prompts."""

import numpy as np

from .errors import ShapeMismatchError
from .framediff import validate_frames
from .pn import apply_pn


def attention_sequence(diffs, params):
    """Apply the learnable PN to every difference map, ``(..., H, W, T-1)``."""
    return apply_pn(diffs, params)


def motion_prompts(frames, attn):
    """Highlight frames 2..T with the attention maps.

    Prompt ``t`` is ``attn[..., t]`` times every colour channel of frame
    ``t + 1``; the map is broadcast over channels, not copied.
    """
    frames = validate_frames(frames)
    attn = np.asarray(attn, dtype=np.float64)
    expected = frames.shape[:-2] + (frames.shape[-1] - 1,)
    if attn.shape != expected:
        raise ShapeMismatchError(
            f"attention shape {attn.shape} does not match frames "
            f"{frames.shape}; expected {expected}"
        )
    return attn[..., None, :] * frames[..., 1:]
