"""Temporal attention variation and the combined objective."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientFramesError


@dataclass(frozen=True)
class LossBreakdown:
    task_loss: float
    variation: float
    lam: float
    total: float


def temporal_variation(attn):
    """Mean squared Frobenius distance between consecutive attention maps.

    ``attn`` is ``(..., H, W, T-1)``; leading axes give one value each.
    With a single map there is no pair and the variation is 0.
    """
    attn = np.asarray(attn, dtype=np.float64)
    if attn.ndim < 3 or attn.shape[-1] == 0:
        raise InsufficientFramesError(
            f"expected a non-empty (..., H, W, T-1) sequence, got {attn.shape}"
        )
    pairs = attn.shape[-1] - 1
    if pairs == 0:
        value = np.zeros(attn.shape[:-3])
    else:
        step = np.diff(attn, axis=-1)
        value = np.sum(step * step, axis=(-3, -2, -1)) / pairs
    return float(value) if value.ndim == 0 else value


def temporal_variation_grad(attn):
    """Gradient of :func:`temporal_variation` with respect to ``attn``."""
    attn = np.asarray(attn, dtype=np.float64)
    pairs = attn.shape[-1] - 1
    grad = np.zeros_like(attn)
    if pairs == 0:
        return grad
    step = np.diff(attn, axis=-1)
    grad[..., 1:] += step
    grad[..., :-1] -= step
    return grad * (2.0 / pairs)


def total_loss(task_loss, variation, lam):
    if lam < 0:
        raise DomainError(f"lambda must be non-negative, got {lam}")
    if variation < 0:
        raise DomainError(f"variation must be non-negative, got {variation}")
    return LossBreakdown(
        task_loss=float(task_loss),
        variation=float(variation),
        lam=float(lam),
        total=float(task_loss + lam * variation),
    )
