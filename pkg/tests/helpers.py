"""Shared construction helpers for the test suite."""

import numpy as np
from scipy import ndimage

import csdseg as cs
from csdseg.synth import _front_curve


def philox(seed, stream=0):
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def random_blob_mask(h, w, seed, fraction=0.4, smooth=3.0):
    """Random connected-ish mask with roughly the requested area fraction."""
    g = philox(seed, 11)
    f = ndimage.gaussian_filter(g.standard_normal((h, w)), smooth)
    thr = np.quantile(f, 1.0 - fraction)
    return f > thr


def noiseless_instance(seed, width=224, height=160, displacement=None, amplitude=8.0):
    """Noiseless two-level synth instance; optionally rebuild the initial
    contour at a custom displacement behind the front."""
    cfg = cs.SynthConfig(
        width=width,
        height=height,
        seed=seed,
        noise_sigma=0.0,
        shading_strength=0.0,
        n_occlusions=0,
        front_amplitude=amplitude,
    )
    img, truth, init = cs.generate(cfg)
    if displacement is not None:
        front = _front_curve(cfg)
        ys = list(range(0, height, 8))
        if ys[-1] != height - 1:
            ys.append(height - 1)
        xs = np.clip(np.round(front[ys] - displacement).astype(int), 1, width - 2)
        verts = [(int(x), int(y)) for x, y in zip(xs, ys)]
        verts.append((0, height - 1))
        verts.append((0, 0))
        init = cs.ContourPolygon(np.array(verts))
    return img, truth, init


def frozen_energy(dmap, stats, tables, T, lam1=1.0, lam2=1.0):
    """Energy of the region at T with the similarity statistics held fixed.

    This is the functional whose derivative the band velocity discretizes
    (local means frozen at the evaluation threshold).
    """
    region = cs.region_at(dmap, T).data
    lsf1 = tables.field(stats.lc1.data)
    lsf2 = tables.field(stats.lc2.data)
    return float(lam1 * lsf1[region].sum() + lam2 * lsf2[~region].sum())


def inv_dist_window_sum(window):
    """Independent scalar computation of the inverse-distance window total."""
    half = window // 2
    total = 0.0
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            if dy == 0 and dx == 0:
                continue
            total += 1.0 / np.hypot(dy, dx)
    return total
