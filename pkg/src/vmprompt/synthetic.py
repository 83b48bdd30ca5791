"""Synthetic moving-square clips for desk-scale training."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DIRECTIONS = [
    (0, 1),    # right
    (0, -1),   # left
    (1, 0),    # down
    (-1, 0),   # up
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
]


@dataclass(frozen=True)
class SyntheticConfig:
    height: int = 32
    width: int = 32
    frames: int = 9
    classes: int = 4
    clips_per_class: int = 16
    noise: float = 0.0
    camera: int = 0
    seed: int = 0
    square_size: int = 6
    speed: int = 1
    jitter: int = 2
    texture: float = 0.4

    def __post_init__(self):
        if self.frames < 3:
            raise DomainError("clips need at least 3 frames")
        if not 2 <= self.classes <= len(DIRECTIONS):
            raise DomainError(f"classes must be in [2, {len(DIRECTIONS)}]")
        if not 0.0 <= self.noise <= 1.0:
            raise DomainError("noise probability must lie in [0, 1]")
        if self.camera < 0 or self.speed < 0 or self.jitter < 0:
            raise DomainError("camera, speed and jitter must be non-negative")
        if not 0.0 <= self.texture <= 1.0:
            raise DomainError("texture amplitude must lie in [0, 1]")


@dataclass
class Dataset:
    frames: np.ndarray  # (N, H, W, 3, T)
    labels: np.ndarray  # (N,)

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return zip(self.frames, self.labels)

    def subset(self, index):
        return Dataset(self.frames[index], self.labels[index])


def _check_geometry(cfg):
    s = cfg.square_size
    if s < 1 or s > min(cfg.height, cfg.width):
        raise DomainError(f"square of size {s} does not fit a {cfg.height}x{cfg.width} frame")
    travel = cfg.speed * (cfg.frames - 1) + cfg.jitter
    for size, name in ((cfg.height, "height"), (cfg.width, "width")):
        start = (size - s) // 2
        if start - travel < 0 or start + travel + s > size:
            raise DomainError(
                f"square path leaves the frame along {name}; "
                "reduce speed, jitter or frames"
            )


def _clip(cfg, rng, label):
    h, w, s, T = cfg.height, cfg.width, cfg.square_size, cfg.frames
    background = rng.uniform(0.0, cfg.texture, size=(h, w, 3))
    dy, dx = DIRECTIONS[label]
    y0 = (h - s) // 2 + int(rng.integers(-cfg.jitter, cfg.jitter + 1))
    x0 = (w - s) // 2 + int(rng.integers(-cfg.jitter, cfg.jitter + 1))
    cam_dy, cam_dx = DIRECTIONS[int(rng.integers(0, 4))]

    clip = np.empty((h, w, 3, T))
    for t in range(T):
        shifted = cfg.camera * t
        frame = np.roll(background, (cam_dy * shifted, cam_dx * shifted), axis=(0, 1))
        y = y0 + dy * cfg.speed * t
        x = x0 + dx * cfg.speed * t
        frame[y:y + s, x:x + s, :] = 1.0
        if cfg.noise > 0:
            hit = rng.random((h, w)) < cfg.noise
            salt = rng.random((h, w)) < 0.5
            frame[hit & salt] = 1.0
            frame[hit & ~salt] = 0.0
        clip[..., t] = frame
    return clip


def generate_synthetic(cfg):
    """Balanced dataset of bright squares moving in class-specific directions.

    Each clip has an independent random texture, start jitter and camera
    direction; the camera pans the background by ``cfg.camera`` pixels per
    frame (wrapping) while the square keeps its own image-space motion.
    Salt-and-pepper noise hits each pixel of each frame with probability
    ``cfg.noise``.  Output is deterministic in ``cfg.seed``.
    """
    _check_geometry(cfg)
    rng = np.random.default_rng(cfg.seed)
    n = cfg.classes * cfg.clips_per_class
    labels = np.tile(np.arange(cfg.classes), cfg.clips_per_class)
    frames = np.empty((n, cfg.height, cfg.width, 3, cfg.frames))
    for i, label in enumerate(labels):
        frames[i] = _clip(cfg, rng, int(label))
    return Dataset(frames, labels)


def split_dataset(dataset, val_fraction, seed=0):
    """Stratified train/validation split."""
    if not 0.0 <= val_fraction < 1.0:
        raise DomainError("val_fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    val = []
    for k in np.unique(dataset.labels):
        idx = np.flatnonzero(dataset.labels == k)
        rng.shuffle(idx)
        val.extend(idx[: int(round(val_fraction * len(idx)))])
    mask = np.zeros(len(dataset), dtype=bool)
    mask[val] = True
    return dataset.subset(~mask), dataset.subset(mask)
