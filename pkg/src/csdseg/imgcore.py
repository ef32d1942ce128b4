"""Core raster and contour types, plus image/mask/polygon serialization."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from io import BytesIO

import numpy as np
from PIL import Image


class DegenerateRegionError(ValueError):
    """A region is empty or covers the whole frame where it must not."""


# Pillow modes accepted as single-channel input, with the format's max value.
_MODE_MAX = {"L": 255, "I;16": 65535, "I": 65535}
_MULTI_CHANNEL_MODES = ("RGB", "RGBA", "LA", "CMYK", "YCbCr")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """2-D field of pixel intensities, normalized to [0, 1].

    The payload array is copied and frozen at construction; all operations
    in this package treat it as immutable.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("image data must be 2-D")
        h, w = arr.shape
        if h < 3 or w < 3:
            raise ValueError(f"image must be at least 3x3, got {w}x{h}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image intensities must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image intensities must lie in [0, 1]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class ScalarField:
    """2-D field of finite real values (distance maps, local means, ...)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("field data must be 2-D")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite (no NaN/Inf)")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """2-D boolean field (segmentations, seed sets, bands)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError("mask data must be 2-D")
        arr = arr.astype(bool, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def count(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True, eq=False)
class ContourPolygon:
    """Ordered list of (x, y) integer vertices, implicitly closed.

    The closing edge from the last vertex back to the first is implied;
    passing an explicitly closed ring (last vertex == first) is rejected
    because it creates a zero-length edge.
    """

    vertices: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise ValueError("vertices must be an (n, 2) array of (x, y) pairs")
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        if not np.all(verts == np.floor(verts)):
            raise ValueError("vertex coordinates must be integers")
        verts = verts.astype(np.int64, copy=True)
        nxt = np.roll(verts, -1, axis=0)
        if np.any(np.all(verts == nxt, axis=1)):
            raise ValueError("consecutive vertices must be distinct (closure is implicit)")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    def __len__(self) -> int:
        return len(self.vertices)


def _atomic_write_bytes(path: str, payload: bytes) -> None:
    """Write-then-rename so partially written outputs are never visible."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_image(path: str, channel: int | None = None) -> GrayImage:
    """Load a lossless 8/16-bit raster and rescale intensities to [0, 1].

    Parameters
    ----------
    path : str
        File readable by Pillow (PNG/TIFF and friends).
    channel : int, optional
        Channel to select from a multi-channel file. Without it a
        multi-channel input is an error.
    """
    try:
        im = Image.open(path)
        im.load()
    except Exception as exc:
        raise ValueError(f"cannot read raster file {path!r}: {exc}") from exc
    if im.width == 0 or im.height == 0:
        raise ValueError(f"zero-area image: {path!r}")
    if im.mode in _MULTI_CHANNEL_MODES:
        if channel is None:
            raise ValueError(
                f"{path!r} has {len(im.getbands())} channels; pass an explicit channel index"
            )
        bands = im.split()
        if not 0 <= channel < len(bands):
            raise ValueError(f"channel {channel} out of range for mode {im.mode}")
        im = bands[channel]
    if im.mode not in _MODE_MAX:
        raise ValueError(f"unsupported raster mode {im.mode!r} (need 8/16-bit single-channel)")
    raw = np.asarray(im, dtype=np.float64)
    return GrayImage(raw / _MODE_MAX[im.mode])


def save_image(image: GrayImage, path: str, bits: int = 8) -> None:
    """Save intensities as an 8- or 16-bit grayscale PNG (lossless)."""
    if bits == 8:
        arr = np.round(image.data * 255.0).astype(np.uint8)
    elif bits == 16:
        arr = np.round(image.data * 65535.0).astype(np.uint16)
    else:
        raise ValueError("bits must be 8 or 16")
    buf = BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    _atomic_write_bytes(path, buf.getvalue())


def load_mask(path: str) -> BinaryMask:
    """Load a mask raster; nonzero pixels are True."""
    image = load_image(path)
    return BinaryMask(image.data > 0)


def save_mask(mask: BinaryMask, path: str) -> None:
    """Save a mask as an 8-bit 0/255 PNG."""
    arr = np.where(mask.data, 255, 0).astype(np.uint8)
    buf = BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    _atomic_write_bytes(path, buf.getvalue())


def load_contour(path: str) -> ContourPolygon:
    """Read a contour file: JSON with a single array "vertices" of [x, y] pairs."""
    with open(path) as f:
        doc = json.load(f)
    if not isinstance(doc, dict) or "vertices" not in doc:
        raise ValueError(f"contour file {path!r} must contain a 'vertices' array")
    return ContourPolygon(np.asarray(doc["vertices"]))


def save_contour(poly: ContourPolygon, path: str) -> None:
    payload = json.dumps({"vertices": poly.vertices.tolist()}, indent=1).encode()
    _atomic_write_bytes(path, payload)


def rasterize_contour(poly: ContourPolygon, width: int, height: int) -> BinaryMask:
    """Rasterize a closed polygon: a pixel is set iff its center is inside
    or on the polygon under the even-odd rule.

    The boundary pixels of the result (excluding image-border pixels) are
    the zero-point set used to build distance maps.
    """
    verts = poly.vertices
    xs, ys = verts[:, 0], verts[:, 1]
    if xs.min() < 0 or ys.min() < 0 or xs.max() > width - 1 or ys.max() > height - 1:
        raise ValueError("polygon vertices must lie within image bounds")

    # Degenerate (zero-area) polygon: all vertices collinear.
    d = verts - verts[0]
    ref = d[np.argmax(np.abs(d).sum(axis=1))]
    if np.all(d[:, 0] * ref[1] - d[:, 1] * ref[0] == 0):
        raise ValueError("degenerate polygon: all vertices are collinear")

    X, Y = np.meshgrid(np.arange(width), np.arange(height))
    inside = np.zeros((height, width), dtype=bool)
    on_edge = np.zeros((height, width), dtype=bool)
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        # Exact on-segment test (integer vertices and centers).
        dx, dy = x2 - x1, y2 - y1
        cross = (X - x1) * dy - (Y - y1) * dx
        dot = (X - x1) * dx + (Y - y1) * dy
        on_edge |= (cross == 0) & (dot >= 0) & (dot <= dx * dx + dy * dy)
        if y1 == y2:
            continue  # horizontal edges cast no crossings
        # Half-open scanline span [min(y), max(y)) keeps vertex hits unambiguous.
        span = (Y >= min(y1, y2)) & (Y < max(y1, y2))
        xint = x1 + (Y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= span & (X < xint)
    return BinaryMask(inside | on_edge)


def mask_boundary(mask: BinaryMask, exclude_image_border: bool = False) -> BinaryMask:
    """Pixels that are True and 4-adjacent to at least one False pixel.

    With ``exclude_image_border`` the border rows/columns of the frame are
    removed from the result.
    """
    m = mask.data
    if not m.any():
        raise DegenerateRegionError("mask is empty: no boundary")
    if m.all():
        raise DegenerateRegionError("mask covers the whole frame: no boundary")
    # Edge padding means pixels outside the frame never count as False neighbors.
    p = np.pad(m, 1, mode="edge")
    has_false_neighbor = (
        ~p[:-2, 1:-1] | ~p[2:, 1:-1] | ~p[1:-1, :-2] | ~p[1:-1, 2:]
    )
    b = m & has_false_neighbor
    if exclude_image_border:
        b = b.copy()
        b[0, :] = b[-1, :] = False
        b[:, 0] = b[:, -1] = False
    return BinaryMask(b)
