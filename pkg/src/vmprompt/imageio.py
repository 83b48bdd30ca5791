"""Binary PPM/PGM reading and writing, and colour-mapped map export."""

import enum
import glob
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientFramesError, ShapeMismatchError, VmpError


class ImageFormatError(VmpError):
    pass


def _tokens(data, count):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out, pos = [], 0
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated header")
        out.append(data[start:pos])
    # exactly one whitespace byte separates header and raster
    return out, pos + 1


def read_pnm(path):
    """Read a binary P5/P6 file as ``uint8`` ``(H, W)`` or ``(H, W, 3)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        (magic, w, h, maxval), offset = _tokens(data, 4)
        width, height, maxval = int(w), int(h), int(maxval)
    except (ValueError, ImageFormatError) as exc:
        raise ImageFormatError(f"{path}: malformed header ({exc})") from None
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"{path}: unsupported format {magic!r}")
    if not 0 < maxval < 256:
        raise ImageFormatError(f"{path}: only 8-bit files are supported (maxval {maxval})")
    channels = 3 if magic == b"P6" else 1
    size = width * height * channels
    raster = np.frombuffer(data, dtype=np.uint8, count=-1, offset=offset)
    if raster.size < size:
        raise ImageFormatError(f"{path}: raster truncated")
    img = raster[:size].reshape((height, width, channels) if channels == 3 else (height, width))
    if maxval != 255:
        img = np.rint(img.astype(np.float64) * (255.0 / maxval)).astype(np.uint8)
    return img


def atomic_write(path, payload):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_pnm(path, img):
    """Write ``uint8`` ``(H, W)`` as P5 or ``(H, W, 3)`` as P6."""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ShapeMismatchError(f"cannot store array of shape {img.shape}")
    header = b"%s\n%d %d\n255\n" % (magic, img.shape[1], img.shape[0])
    atomic_write(path, header + img.tobytes())


def to_uint8(values):
    return np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def read_frames(pattern):
    """Load the files matching ``pattern``, sorted by name, as ``(H, W, 3, T)``."""
    paths = sorted(glob.glob(pattern))
    if len(paths) < 2:
        raise InsufficientFramesError(f"pattern {pattern!r} matched {len(paths)} file(s); need 2")
    frames = []
    for p in paths:
        img = read_pnm(p)
        if img.ndim == 2:
            img = np.repeat(img[..., None], 3, axis=2)
        if frames and img.shape != frames[0].shape:
            raise ShapeMismatchError(
                f"{p}: size {img.shape[:2]} differs from {frames[0].shape[:2]}"
            )
        frames.append(img)
    return np.stack(frames, axis=-1).astype(np.float64) / 255.0


class ColorMapKind(enum.Enum):
    DIVERGING = "diverging-blue-orange"
    SEQUENTIAL_RED = "sequential-red"
    GRAYSCALE = "grayscale"


# anchor colours, low -> mid -> high
_ANCHORS = {
    ColorMapKind.DIVERGING: np.array([[0, 0, 255], [255, 255, 255], [255, 128, 0]], float),
    ColorMapKind.SEQUENTIAL_RED: np.array([[255, 245, 240], [103, 0, 13]], float),
    ColorMapKind.GRAYSCALE: np.array([[0, 0, 0], [255, 255, 255]], float),
}


@dataclass(frozen=True)
class ColorMapSpec:
    kind: ColorMapKind = ColorMapKind.DIVERGING
    low: float = -1.0
    high: float = 1.0

    def __post_init__(self):
        if not self.low < self.high:
            raise DomainError(f"colour map range needs low < high, got {self.low}, {self.high}")


DIFF_MAP = ColorMapSpec(ColorMapKind.DIVERGING, -1.0, 1.0)
ATTENTION_MAP = ColorMapSpec(ColorMapKind.SEQUENTIAL_RED, 0.0, 1.0)


def colormap(values, spec):
    """Map a 2-D field to ``uint8`` RGB by piecewise-linear interpolation."""
    anchors = _ANCHORS[spec.kind]
    t = (np.clip(np.asarray(values, float), spec.low, spec.high) - spec.low) / (spec.high - spec.low)
    pos = t * (len(anchors) - 1)
    i = np.minimum(pos.astype(int), len(anchors) - 2)
    frac = (pos - i)[..., None]
    rgb = anchors[i] * (1.0 - frac) + anchors[i + 1] * frac
    return np.rint(rgb).astype(np.uint8)


def write_colormapped(values, spec, path):
    values = np.asarray(values, float)
    if values.ndim != 2:
        raise ShapeMismatchError(f"expected a 2-D map, got {values.shape}")
    write_pnm(path, colormap(values, spec))
