"""Pooled linear softmax classifier standing in for a video backbone."""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError


@dataclass
class LinearClassifier:
    """Softmax regression over grid-pooled prompt features.

    Each prompt ``(H, W, 3)`` is average-pooled over a ``grid x grid``
    spatial partition per channel, the result averaged over time, and fed
    to ``weights @ x + bias``.  ``grid=1`` is plain global average pooling.
    """

    weights: np.ndarray
    bias: np.ndarray
    grid: int = 1

    @classmethod
    def zeros(cls, classes, grid=1):
        return cls(np.zeros((classes, 3 * grid * grid)), np.zeros(classes), grid)

    @property
    def classes(self):
        return self.weights.shape[0]

    def copy(self):
        return LinearClassifier(self.weights.copy(), self.bias.copy(), self.grid)

    def _cells(self, height, width):
        g = self.grid
        if height % g or width % g:
            raise ShapeMismatchError(
                f"frame size {height}x{width} not divisible by pooling grid {g}"
            )
        return height // g, width // g

    def features(self, prompts):
        """``(B, H, W, 3, P)`` -> ``(B, grid*grid*3)``."""
        b, h, w, c, p = prompts.shape
        ch, cw = self._cells(h, w)
        g = self.grid
        pooled = prompts.reshape(b, g, ch, g, cw, c, p).mean(axis=(2, 4, 6))
        return pooled.reshape(b, g * g * c)

    def features_backward(self, d_features, shape):
        """Spread feature gradients back over a ``shape``-d prompt tensor.

        Returns the per-pixel-channel weight, shaped ``(B, G, 1, G, 1, 3, 1)``
        so it broadcasts against the cell view of the prompts.
        """
        b, h, w, c, p = shape
        ch, cw = self._cells(h, w)
        g = self.grid
        scale = 1.0 / (ch * cw * p)
        return d_features.reshape(b, g, 1, g, 1, c, 1) * scale

    def logits(self, features):
        return features @ self.weights.T + self.bias

    def predict(self, features):
        # np.argmax keeps the lowest index on ties
        return np.argmax(self.logits(features), axis=1)


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels):
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    return float(np.mean(log_norm - shifted[np.arange(len(labels)), labels]))
