"""Grayscale conversion and consecutive frame differencing.

Frame sequences are numpy arrays laid out as ``(H, W, 3, T)``; grayscale and
difference sequences drop the channel axis, ``(H, W, T)``.  Any number of
leading batch axes is accepted, so ``(B, H, W, 3, T)`` works everywhere.
"""

import numpy as np

from .errors import DomainError, InsufficientFramesError, ShapeMismatchError

# ITU-R BT.601 luma
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def normalize_pixels(raw):
    """Scale 8-bit pixel data to [0, 1]; float input is only clamped."""
    raw = np.asarray(raw)
    if np.issubdtype(raw.dtype, np.integer):
        out = raw.astype(np.float64) / 255.0
    else:
        out = raw.astype(np.float64)
    return np.clip(out, 0.0, 1.0)


def validate_frames(frames):
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim < 4 or frames.shape[-2] != 3:
        raise ShapeMismatchError(
            f"expected frames shaped (..., H, W, 3, T), got {frames.shape}"
        )
    if frames.size == 0:
        raise InsufficientFramesError("empty frame sequence")
    if np.any(frames < 0.0) or np.any(frames > 1.0) or not np.all(np.isfinite(frames)):
        raise DomainError("frame values must lie in [0, 1]")
    return frames


def to_grayscale(frames):
    """Collapse the RGB axis with BT.601 luma weights."""
    frames = validate_frames(frames)
    gray = np.einsum("...ct,c->...t", frames, LUMA_WEIGHTS)
    return np.clip(gray, 0.0, 1.0)


def frame_differencing(gray):
    """Return ``gray[..., t+1] - gray[..., t]`` for every consecutive pair.

    The result has one map fewer than the input and is clamped to [-1, 1]
    to absorb rounding.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim < 3:
        raise ShapeMismatchError(f"expected (..., H, W, T), got {gray.shape}")
    if gray.shape[-1] < 2:
        raise InsufficientFramesError(
            f"frame differencing needs at least 2 frames, got {gray.shape[-1]}"
        )
    return np.clip(np.diff(gray, axis=-1), -1.0, 1.0)


def diff_maps(frames):
    """Frames straight to difference maps."""
    return frame_differencing(to_grayscale(frames))
