"""Gradient-descent optimization of the segmentation threshold.

Each iteration samples a band of pixels around the current region boundary,
balances the two sides, and moves the threshold along the difference of the
two local-similarity sums with an adaptive step size. The sign convention
grows the region (raises the threshold) when band pixels resemble the
inside statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .distmap import SignedDistanceMap, region_at
from .imgcore import DegenerateRegionError, GrayImage, _atomic_write_bytes, mask_boundary
from .localsim import LsfTables, LsmParams, RegionStats, local_means

_STEP_FLOOR = 1e-12  # lower clamp on the band's max |LSF1 - LSF2|
_BRAKE_RATIO = 0.02  # dimensionless retreat demand that signals the wavefront


@dataclass(frozen=True, eq=False)
class BandSample:
    """Pixels within a fixed distance of the current boundary, split by side.

    Coordinates are (row, col) pairs; the parallel ``*_dist`` arrays hold
    each pixel's exact Euclidean distance to the boundary set.
    """

    inside_pixels: np.ndarray
    outside_pixels: np.ndarray
    inside_dist: np.ndarray
    outside_dist: np.ndarray

    def __post_init__(self):
        if len(self.inside_pixels) != len(self.inside_dist):
            raise ValueError("inside pixel/distance arrays must be parallel")
        if len(self.outside_pixels) != len(self.outside_dist):
            raise ValueError("outside pixel/distance arrays must be parallel")

    @property
    def size(self) -> int:
        return len(self.inside_pixels) + len(self.outside_pixels)


@dataclass(frozen=True)
class TraceStep:
    T: float
    energy: float
    delta_T: float
    step: float


@dataclass(frozen=True)
class DescentTrace:
    """Record of every iterate of the threshold descent."""

    iterations: list[TraceStep] = field(default_factory=list)
    final_T: float = 0.0
    converged: bool = False


def extract_band(dmap: SignedDistanceMap, T: float, band_width: float) -> BandSample:
    """Pixels within ``band_width`` (exact Euclidean) of the region boundary at T.

    The boundary excludes image-border pixels; candidates are split by
    region membership. The returned sample is unbalanced.
    """
    region = region_at(dmap, T)
    if not region.data.any() or region.data.all():
        raise DegenerateRegionError(f"region at T={T} is empty or full")
    boundary = mask_boundary(region, exclude_image_border=True)
    if not boundary.data.any():
        raise DegenerateRegionError("boundary is empty after image-border exclusion")
    dist = ndimage.distance_transform_edt(~boundary.data)
    cand = dist <= band_width
    inside = cand & region.data
    outside = cand & ~region.data
    return BandSample(
        inside_pixels=np.argwhere(inside),
        outside_pixels=np.argwhere(outside),
        inside_dist=dist[inside],
        outside_dist=dist[outside],
    )


def balance_band(sample: BandSample) -> BandSample:
    """Equalize the two sides of a band sample.

    The overrepresented side keeps its k pixels nearest to the boundary,
    ties broken by row-major pixel order; the other side is unchanged.
    """
    n_in = len(sample.inside_pixels)
    n_out = len(sample.outside_pixels)
    if n_in == 0 or n_out == 0:
        raise DegenerateRegionError("band side is empty: boundary has collapsed")
    if n_in == n_out:
        return sample
    k = min(n_in, n_out)

    def _keep(pixels, dist):
        order = np.lexsort((pixels[:, 1], pixels[:, 0], dist))
        sel = np.sort(order[:k])  # keep row-major listing of survivors
        return pixels[sel], dist[sel]

    if n_in > n_out:
        ip, idist = _keep(sample.inside_pixels, sample.inside_dist)
        op, odist = sample.outside_pixels, sample.outside_dist
    else:
        ip, idist = sample.inside_pixels, sample.inside_dist
        op, odist = _keep(sample.outside_pixels, sample.outside_dist)
    return BandSample(ip, op, idist, odist)


def _band_indices(band: BandSample) -> tuple[np.ndarray, np.ndarray]:
    rows = np.concatenate([band.inside_pixels[:, 0], band.outside_pixels[:, 0]])
    cols = np.concatenate([band.inside_pixels[:, 1], band.outside_pixels[:, 1]])
    return rows, cols


def delta_T(
    image: GrayImage,
    dmap: SignedDistanceMap,
    T: float,
    params: LsmParams,
    tables: LsfTables | None = None,
) -> float:
    """Threshold velocity at T: the balanced-band similarity imbalance.

    Each similarity field is summed over its own side of the balanced band:
    the inside term measures how badly inside band pixels fit the inside
    statistics, the outside term the same for the outside. Positive when
    the outside band fits its model worse than the inside fits its own, so
    the region grows to claim those pixels; negative (typically once the
    boundary overruns the wavefront and inside pixels stop matching the
    inside statistics) shrinks it.
    """
    region = region_at(dmap, T)
    stats = local_means(image, region, params)
    band = balance_band(extract_band(dmap, T, params.band_width))
    if tables is None:
        tables = LsfTables(image, params.window)
    ir, ic = band.inside_pixels[:, 0], band.inside_pixels[:, 1]
    out_r, out_c = band.outside_pixels[:, 0], band.outside_pixels[:, 1]
    s1 = tables.field(stats.lc1.data)[ir, ic].sum()
    s2 = tables.field(stats.lc2.data)[out_r, out_c].sum()
    return float(params.lambda2 * s2 - params.lambda1 * s1)


def step_size(
    image: GrayImage,
    band: BandSample,
    stats: RegionStats,
    params: LsmParams,
    tables: LsfTables | None = None,
) -> float:
    """Adaptive step: 1 / (band size * max band |LSF1 - LSF2|).

    The max is clamped below so the step stays finite on featureless bands;
    the update loop treats a zero velocity as converged before stepping.
    """
    if len(band.inside_pixels) != len(band.outside_pixels):
        raise ValueError("step_size requires a balanced band")
    if tables is None:
        tables = LsfTables(image, params.window)
    rows, cols = _band_indices(band)
    diff = tables.field(stats.lc1.data)[rows, cols] - tables.field(stats.lc2.data)[rows, cols]
    peak = max(float(np.abs(diff).max()), _STEP_FLOOR)
    return 1.0 / (band.size * peak)


def _boundary_gradient_scale(dmap: SignedDistanceMap, boundary: np.ndarray) -> float:
    """Median |grad D_I| over boundary pixels: converts threshold motion
    into boundary motion in pixels."""
    gy, gx = np.gradient(dmap.field.data)
    mags = np.hypot(gx, gy)[boundary]
    return float(np.median(mags)) if mags.size else 0.0


def optimize_threshold(
    image: GrayImage,
    dmap: SignedDistanceMap,
    params: LsmParams | None = None,
) -> DescentTrace:
    """Advance the threshold from T = 0 to the wavefront and settle there.

    Fast-marching style: the initialization protocol places the contour
    strictly inside the target region, so the threshold front only ever
    needs to move outward. The loop advances in trust-region steps (the
    band velocity is measured within band_width of the boundary, so one
    step never moves the boundary farther than ~2 band widths), riding the
    band velocity when it agrees and overriding weak reverse chatter from
    noise and occlusions. When the velocity pushes back harder than a full
    trust step (the wavefront's reverse vote), the loop brakes and switches
    to damped bisection: the step is halved on every velocity reversal
    until the applied update falls below tol.

    Stops on convergence (|applied update| < tol at a genuine velocity
    balance), a degenerate region or collapsed band (keeping the last valid
    threshold), or the iteration budget. Every iterate is recorded with its
    energy.
    """
    params = params or LsmParams()
    region0 = region_at(dmap, 0.0)
    if not region0.data.any() or region0.data.all():
        raise DegenerateRegionError("initial region at T=0 is empty or full")
    tables = LsfTables(image, params.window)
    T = 0.0
    area0 = float(region0.data.sum())
    steps: list[TraceStep] = []
    converged = False
    braking = False
    damping = 1.0
    prev_sign = 0
    for _ in range(params.max_iters):
        try:
            region = region_at(dmap, T)
            stats = local_means(image, region, params)
            boundary = mask_boundary(region, exclude_image_border=True)
            if not boundary.data.any():
                raise DegenerateRegionError("boundary vanished")
            band = balance_band(extract_band(dmap, T, params.band_width))
        except DegenerateRegionError:
            if not steps:
                raise
            T = steps[-1].T  # fall back to the last valid iterate
            break
        lsf1 = tables.field(stats.lc1.data)
        lsf2 = tables.field(stats.lc2.data)
        ir, ic = band.inside_pixels[:, 0], band.inside_pixels[:, 1]
        out_r, out_c = band.outside_pixels[:, 0], band.outside_pixels[:, 1]
        dT = float(
            params.lambda2 * lsf2[out_r, out_c].sum() - params.lambda1 * lsf1[ir, ic].sum()
        )
        rows, cols = _band_indices(band)
        peak = max(float(np.abs(lsf1[rows, cols] - lsf2[rows, cols]).max()), _STEP_FLOOR)
        dt = 1.0 / (band.size * peak)
        r = region.data
        energy = float(params.lambda1 * lsf1[r].sum() + params.lambda2 * lsf2[~r].sum())

        # threshold units per ~2 band widths of boundary motion; the floor
        # keeps the advance alive where the map's gradient degenerates
        grad = _boundary_gradient_scale(dmap, boundary.data)
        cap = max(2.0 * params.band_width * grad, 1e-3)

        if braking:
            sign = 1 if dT > 0 else (-1 if dT < 0 else 0)
            if sign != 0 and prev_sign != 0:
                damping = damping * 0.5 if sign != prev_sign else min(1.0, damping * 1.2)
            if sign != 0:
                prev_sign = sign
        update = damping * dt * dT

        # dt * dT is dimensionless (band mean / band max of the similarity
        # difference): occlusion and noise chatter stays well below the
        # brake ratio because the step normalizes by the band's own
        # outliers, while overrunning the wavefront demands a large retreat.
        # The reverse vote only counts once the boundary has advanced clear
        # of the initialization band; before that it is launch chatter.
        mean_advance = (float(region.data.sum()) - area0) / max(float(boundary.data.sum()), 1.0)
        if not braking and update <= -_BRAKE_RATIO and mean_advance >= 2.0 * params.band_width:
            braking = True
            prev_sign = -1
        signal_free = peak <= _STEP_FLOOR  # featureless band: velocity is pure round-off
        if not braking and not signal_free and dT != 0.0:
            update = max(update, 0.5 * cap)  # keep advancing through chatter
        if signal_free:
            update = 0.0
        # retreats refine within [0, T]: the initialization is inside the
        # target region, so the balance point cannot lie behind the launch
        back_limit = min(cap, 0.5 * T) if T > 0 else cap
        applied = float(np.clip(update, -back_limit, cap))

        eff_step = applied / dT if dT != 0.0 else damping * dt
        steps.append(TraceStep(T=T, energy=energy, delta_T=dT, step=eff_step))
        if abs(applied) < params.tol:
            converged = True
            break
        T = float(np.clip(T + applied, -1.0, 1.0))
    return DescentTrace(iterations=steps, final_T=T, converged=converged)


def write_trace_csv(trace: DescentTrace, path: str) -> None:
    """Export a descent trace as CSV: iteration, T, energy, deltaT, step."""
    lines = ["iteration,T,energy,deltaT,step"]
    for i, s in enumerate(trace.iterations):
        lines.append(f"{i},{s.T!r},{s.energy!r},{s.delta_T!r},{s.step!r}")
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())
