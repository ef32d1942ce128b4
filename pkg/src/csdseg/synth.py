"""Deterministic generator of wavefront-style test images with ground truth.

Each instance is a two-level image split by a smooth, mostly vertical front,
degraded by multiplicative low-frequency shading, dark occlusion streaks
crossing the front, and additive Gaussian noise. All randomness flows
through counter-based (Philox) streams keyed by (seed, stream id), so
identical configs reproduce bit-identical outputs and the geometry is
independent of the degradation parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import BinaryMask, ContourPolygon, GrayImage

# stream ids: one per independent source of randomness
_STREAM_FRONT = 1
_STREAM_SHADING = 2
_STREAM_OCCLUSION = 3
_STREAM_NOISE = 4

_INIT_DISPLACEMENT = 40  # pixels the suggested contour sits behind the front
_MAX_FRONT_SLOPE = 0.4  # keeps the displaced contour within 40 +- 3 px


@dataclass(frozen=True)
class SynthConfig:
    width: int = 512
    height: int = 512
    seed: int = 1
    front_amplitude: float = 16.0
    front_offset: float = 0.55
    inside_level: float = 0.55
    outside_level: float = 0.25
    shading_strength: float = 0.4
    noise_sigma: float = 0.08
    n_occlusions: int = 3
    occlusion_width: float = 8.0

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("frame must be at least 16x16")
        if not 0.0 <= self.outside_level < self.inside_level <= 1.0:
            raise ValueError("need 0 <= outside_level < inside_level <= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0.0 <= self.shading_strength < 1.0:
            raise ValueError("shading_strength must lie in [0, 1)")
        if self.n_occlusions < 0:
            raise ValueError("n_occlusions must be >= 0")
        if self.occlusion_width <= 0:
            raise ValueError("occlusion_width must be positive")
        if not 0.0 < self.front_offset < 1.0:
            raise ValueError("front_offset must lie in (0, 1)")
        if self.front_amplitude < 0:
            raise ValueError("front_amplitude must be >= 0")
        mean_x = self.front_offset * self.width
        if mean_x - self.front_amplitude - _INIT_DISPLACEMENT < 1:
            raise ValueError(
                "frame too small: the suggested contour (front displaced "
                f"{_INIT_DISPLACEMENT} px) would leave the image"
            )
        if mean_x + self.front_amplitude > self.width - 2:
            raise ValueError("front can wander off the right edge; shrink amplitude/offset")


def _stream(seed: int, stream_id: int) -> np.random.Generator:
    key = np.array([seed % (1 << 64), stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _front_curve(cfg: SynthConfig) -> np.ndarray:
    """Front x-position per row: offset plus 2-4 low-frequency sinusoids."""
    g = _stream(cfg.seed, _STREAM_FRONT)
    n_waves = int(g.integers(2, 5))
    weights = g.uniform(0.5, 1.0, n_waves)
    amps = weights / weights.sum() * cfg.front_amplitude
    cycles = g.uniform(0.4, 1.8, n_waves)
    phases = g.uniform(0.0, 2.0 * np.pi, n_waves)
    slope = float((amps * 2.0 * np.pi * cycles / cfg.height).sum())
    if slope > _MAX_FRONT_SLOPE:
        amps = amps * (_MAX_FRONT_SLOPE / slope)
    y = np.arange(cfg.height)
    f = np.full(cfg.height, cfg.front_offset * cfg.width)
    for a, c, p in zip(amps, cycles, phases):
        f = f + a * np.sin(2.0 * np.pi * c * y / cfg.height + p)
    return f


def _shading(cfg: SynthConfig) -> np.ndarray:
    """Multiplicative low-frequency field contained in [1-s, 1+s]."""
    if cfg.shading_strength == 0.0:
        return np.ones((cfg.height, cfg.width))
    g = _stream(cfg.seed, _STREAM_SHADING)
    x = np.arange(cfg.width) / cfg.width
    y = np.arange(cfg.height) / cfg.height
    bx, bxy, by = g.uniform(0.5, 1.0, 3) * (1.0, 0.35, 0.15)
    px, py, pxx, pyy = g.uniform(0.4, 1.2, 4)
    phs = g.uniform(0.0, 2.0 * np.pi, 4)
    # dominant horizontal component: mimics depth/illumination falloff across
    # the field of view, with milder 2-D texture on top
    u = (
        bx * np.sin(2 * np.pi * px * x[None, :] + phs[0])
        + by * np.sin(2 * np.pi * py * y[:, None] + phs[1])
        + bxy * np.sin(2 * np.pi * pxx * x[None, :] + phs[2]) * np.sin(2 * np.pi * pyy * y[:, None] + phs[3])
    )
    peak = np.abs(u).max()
    if peak > 0:
        u = u / peak
    return 1.0 + cfg.shading_strength * u


def _occlusions(cfg: SynthConfig) -> np.ndarray:
    """Union of curved near-horizontal streaks spanning the frame width."""
    occ = np.zeros((cfg.height, cfg.width), dtype=bool)
    if cfg.n_occlusions == 0:
        return occ
    g = _stream(cfg.seed, _STREAM_OCCLUSION)
    x = np.arange(cfg.width)
    rows = np.arange(cfg.height)
    for _ in range(cfg.n_occlusions):
        y0 = g.uniform(0.15, 0.85) * cfg.height
        amp = g.uniform(0.05, 0.15) * cfg.height
        cyc = g.uniform(0.5, 1.5)
        ph = g.uniform(0.0, 2.0 * np.pi)
        curve = y0 + amp * np.sin(2.0 * np.pi * cyc * x / cfg.width + ph)
        occ |= np.abs(rows[:, None] - curve[None, :]) < cfg.occlusion_width / 2.0
    return occ


def _suggested_init(cfg: SynthConfig, front: np.ndarray) -> ContourPolygon:
    """Polygon tracing the front displaced into the truth region, closed
    along the left image border."""
    ys = list(range(0, cfg.height, 8))
    if ys[-1] != cfg.height - 1:
        ys.append(cfg.height - 1)
    xs = np.clip(np.round(front[ys] - _INIT_DISPLACEMENT).astype(int), 1, cfg.width - 2)
    vertices = [(int(x), int(y)) for x, y in zip(xs, ys)]
    vertices.append((0, cfg.height - 1))
    vertices.append((0, 0))
    return ContourPolygon(np.array(vertices))


def generate(cfg: SynthConfig) -> tuple[GrayImage, BinaryMask, ContourPolygon]:
    """Generate an (image, ground truth, suggested initial contour) triple.

    The truth region is everything left of the front; its geometry depends
    only on the seed and front parameters.
    """
    front = _front_curve(cfg)
    x = np.arange(cfg.width)
    truth = x[None, :] < front[:, None]

    levels = np.where(truth, cfg.inside_level, cfg.outside_level)
    img = levels * _shading(cfg)
    img = np.where(_occlusions(cfg), img * 0.2, img)
    if cfg.noise_sigma > 0:
        noise = _stream(cfg.seed, _STREAM_NOISE).standard_normal((cfg.height, cfg.width))
        img = img + cfg.noise_sigma * noise
    img = np.clip(img, 0.0, 1.0)

    return GrayImage(img), BinaryMask(truth), _suggested_init(cfg, front)


def default_suite(count: int = 20, base_seed: int = 1, **overrides) -> list[SynthConfig]:
    """The fixed evaluation suite: ``count`` default configs, seeds base..base+count-1."""
    return [SynthConfig(seed=base_seed + i, **overrides) for i in range(count)]
