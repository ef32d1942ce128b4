"""Local similarity machinery: disk-windowed region means, inverse-distance
weighted similarity fields, and the threshold energy they induce.

The similarity value at a pixel is the sum, over a square window around it,
of squared deviations from a local mean weighted by inverse Euclidean
distance. Expanding the square lets the field be assembled from three
window convolutions of the image that are independent of the current
region, so sweeping thresholds costs only pointwise work plus the two disk
convolutions for the local means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .distmap import SignedDistanceMap, region_at
from .imgcore import BinaryMask, DegenerateRegionError, GrayImage, ScalarField


@dataclass(frozen=True)
class LsmParams:
    """Tunable parameters of the local-similarity model.

    Defaults: 17x17 similarity window, radius-13 disk for local means,
    7-pixel optimization band, unit region weights.
    """

    window: int = 17
    mask_radius: float = 13.0
    band_width: float = 7.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    max_iters: int = 50
    tol: float = 1e-4

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.mask_radius < 1:
            raise ValueError("mask_radius must be >= 1")
        if self.band_width < 1:
            raise ValueError("band_width must be >= 1")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda weights must be non-negative")
        if self.lambda1 == 0 and self.lambda2 == 0:
            raise ValueError("lambda1 and lambda2 must not both be zero")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True, eq=False)
class RegionStats:
    """Per-pixel local mean intensity inside (lc1) and outside (lc2) a region."""

    lc1: ScalarField
    lc2: ScalarField

    def __post_init__(self):
        for f in (self.lc1, self.lc2):
            if f.data.min() < 0.0 or f.data.max() > 1.0:
                raise ValueError("local means must lie in [0, 1]")


def _disk_kernel(radius: float) -> np.ndarray:
    """Indicator of center-to-center distance strictly less than radius."""
    r_int = int(np.ceil(radius))
    dy, dx = np.mgrid[-r_int : r_int + 1, -r_int : r_int + 1]
    disk = (dy * dy + dx * dx) < radius * radius
    rows = np.flatnonzero(disk.any(axis=1))
    cols = np.flatnonzero(disk.any(axis=0))
    return disk[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1].astype(np.float64)


def _inv_dist_kernel(window: int) -> np.ndarray:
    """Inverse-distance weights over a square window, zero at the center."""
    half = window // 2
    dy, dx = np.mgrid[-half : half + 1, -half : half + 1]
    d = np.hypot(dy, dx)
    k = np.zeros_like(d)
    k[d > 0] = 1.0 / d[d > 0]
    return k


def local_means(image: GrayImage, region: BinaryMask, params: LsmParams) -> RegionStats:
    """Disk-windowed mean intensity on each side of a region.

    lc1(x) averages the image over region pixels within the disk around x,
    lc2(x) over complement pixels in the same disk. A side with no pixels in
    the disk falls back to that side's global mean, keeping both fields
    total. Disk membership is strict (distance < radius); windows clip at
    the image border.
    """
    if region.data.shape != image.data.shape:
        raise ValueError("region dimensions must match the image")
    r = region.data
    if not r.any() or r.all():
        raise DegenerateRegionError("region must have both sides nonempty")
    img = image.data
    disk = _disk_kernel(params.mask_radius)
    inside = r.astype(np.float64)
    outside = 1.0 - inside
    cnt_in = fftconvolve(inside, disk, mode="same")
    cnt_out = fftconvolve(outside, disk, mode="same")
    sum_in = fftconvolve(img * inside, disk, mode="same")
    sum_out = fftconvolve(img * outside, disk, mode="same")
    glob_in = float(img[r].mean())
    glob_out = float(img[~r].mean())
    # FFT counts are integers up to round-off; < 0.5 means an empty side.
    lc1 = np.full_like(img, glob_in)
    np.divide(sum_in, cnt_in, out=lc1, where=cnt_in >= 0.5)
    lc2 = np.full_like(img, glob_out)
    np.divide(sum_out, cnt_out, out=lc2, where=cnt_out >= 0.5)
    return RegionStats(
        lc1=ScalarField(np.clip(lc1, 0.0, 1.0)),
        lc2=ScalarField(np.clip(lc2, 0.0, 1.0)),
    )


class LsfTables:
    """Window convolutions of an image, reused across thresholds.

    With K the inverse-distance window weights, the similarity field for
    center means lc is conv(I^2, K) - 2 lc conv(I, K) + lc^2 conv(1, K);
    the three convolutions depend only on the image and window size.
    """

    def __init__(self, image: GrayImage, window: int):
        k = _inv_dist_kernel(window)
        img = image.data
        self.shape = img.shape
        self.sum_w = fftconvolve(np.ones_like(img), k, mode="same")
        self.sum_wI = fftconvolve(img, k, mode="same")
        self.sum_wI2 = fftconvolve(img * img, k, mode="same")

    def field(self, lc: np.ndarray) -> np.ndarray:
        vals = self.sum_wI2 - 2.0 * lc * self.sum_wI + lc * lc * self.sum_w
        # exact value is a sum of non-negative terms; clip FFT round-off
        return np.maximum(vals, 0.0)


def lsf_field(image: GrayImage, center_means: ScalarField, params: LsmParams) -> ScalarField:
    """Local similarity field for the given per-pixel center means.

    At each pixel: sum over the window (clipped at borders, center excluded)
    of squared intensity deviation from the center's mean, divided by
    Euclidean distance to the center.
    """
    if center_means.data.shape != image.data.shape:
        raise ValueError("center means dimensions must match the image")
    tables = LsfTables(image, params.window)
    return ScalarField(tables.field(center_means.data))


def lsm_energy(
    image: GrayImage,
    dmap: SignedDistanceMap,
    T: float,
    params: LsmParams,
    tables: LsfTables | None = None,
) -> float:
    """Two-sided similarity energy of the region selected by threshold T.

    Inside pixels contribute their similarity to the inside local means,
    outside pixels to the outside local means, weighted by lambda1/lambda2.
    ``tables`` may carry precomputed window convolutions for the image.
    """
    region = region_at(dmap, T)
    stats = local_means(image, region, params)
    if tables is None:
        tables = LsfTables(image, params.window)
    lsf1 = tables.field(stats.lc1.data)
    lsf2 = tables.field(stats.lc2.data)
    r = region.data
    return float(params.lambda1 * lsf1[r].sum() + params.lambda2 * lsf2[~r].sum())
