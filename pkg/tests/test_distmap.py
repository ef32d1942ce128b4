import numpy as np
import pytest

import csdseg as cs
from csdseg.distmap import DistanceMapConfig, noise_sigma_estimate

from helpers import noiseless_instance, philox, random_blob_mask
from oracles import brute_min_distance


def test_config_validation():
    with pytest.raises(ValueError):
        DistanceMapConfig(median_kernel=4)
    with pytest.raises(ValueError):
        DistanceMapConfig(geodesic_sigma=0.0)
    with pytest.raises(ValueError):
        DistanceMapConfig(geodesic_epsilon=0.0)


# ---------------------------------------------------------------------------
# euclidean


def test_euclidean_all_seeds_zero():
    seeds = cs.BinaryMask(np.ones((5, 5), dtype=bool))
    assert np.all(cs.euclidean_map(seeds).data == 0.0)


def test_euclidean_single_center_seed():
    seeds = np.zeros((3, 3), dtype=bool)
    seeds[1, 1] = True
    d = cs.euclidean_map(cs.BinaryMask(seeds)).data
    assert d[1, 1] == 0.0
    assert np.isclose(d[0, 0], 1.0)  # corner: sqrt(2) / sqrt(2)
    assert np.isclose(d[0, 1], 1.0 / np.sqrt(2.0))


def test_euclidean_empty_seeds():
    with pytest.raises(ValueError):
        cs.euclidean_map(cs.BinaryMask(np.zeros((4, 4), dtype=bool)))


def test_euclidean_matches_brute_force():
    seeds = random_blob_mask(32, 32, seed=5, fraction=0.1)
    raw = cs.euclidean_map(cs.BinaryMask(seeds), normalize=False).data
    assert np.abs(raw - brute_min_distance(seeds)).max() < 1e-9


def test_euclidean_is_lipschitz_prenormalization():
    seeds = random_blob_mask(24, 24, seed=9, fraction=0.08)
    raw = cs.euclidean_map(cs.BinaryMask(seeds), normalize=False).data
    assert np.abs(np.diff(raw, axis=0)).max() <= 1.0 + 1e-12
    assert np.abs(np.diff(raw, axis=1)).max() <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# geodesic


def test_geodesic_zero_on_seeds():
    g = philox(2)
    img = cs.GrayImage(g.random((24, 24)))
    seeds = np.zeros((24, 24), dtype=bool)
    seeds[10, 4:20] = True
    out = cs.geodesic_map(img, cs.BinaryMask(seeds))
    assert np.abs(out.data[seeds]).max() < 1e-12
    assert out.data.min() >= 0.0


def test_geodesic_constant_image_matches_euclidean():
    img = cs.GrayImage(np.full((64, 64), 0.5))
    seeds = np.zeros((64, 64), dtype=bool)
    seeds[32, :] = True
    sm = cs.BinaryMask(seeds)
    geo = cs.geodesic_map(img, sm).data
    euc = cs.euclidean_map(sm).data
    sel = ~seeds
    rel = np.abs(geo[sel] - euc[sel]) / euc[sel]
    assert rel.max() < 0.10


def test_geodesic_dim_mismatch():
    img = cs.GrayImage(np.zeros((8, 8)))
    with pytest.raises(ValueError):
        cs.geodesic_map(img, cs.BinaryMask(np.ones((4, 4), dtype=bool)))


def test_noise_sigma_estimate_recovers_noise():
    g = philox(3)
    img = cs.GrayImage(np.clip(0.5 + 0.05 * g.standard_normal((128, 128)), 0, 1))
    est = noise_sigma_estimate(img)
    assert abs(est - 0.05) / 0.05 < 0.15


def test_noise_sigma_estimate_floor_on_flat():
    img = cs.GrayImage(np.full((16, 16), 0.3))
    assert noise_sigma_estimate(img) == 0.01


# ---------------------------------------------------------------------------
# signed map


@pytest.fixture(scope="module")
def small_instance():
    img, truth, init = noiseless_instance(seed=4, width=160, height=112)
    return img, truth, init


def test_build_di_prefilter_properties(small_instance):
    img, _, init = small_instance
    cfg = DistanceMapConfig(median_kernel=1)
    dmap = cs.build_DI(img, init, cfg)
    inside = cs.rasterize_contour(init, img.width, img.height)
    seeds = cs.mask_boundary(inside, exclude_image_border=True)
    d = dmap.field.data
    # zero at the seed set, |max| exactly 1, signs by side
    assert np.abs(d[seeds.data]).max() < 1e-12
    assert np.isclose(np.abs(d).max(), 1.0)
    assert d[inside.data].max() <= 0.0 + 1e-12
    assert d[~inside.data].min() >= 0.0 - 1e-12


def test_build_di_range_after_filtering(small_instance):
    img, _, init = small_instance
    dmap = cs.build_DI(img, init)
    assert np.abs(dmap.field.data).max() <= 1.0


def test_region_at_zero_contains_strict_interior(small_instance):
    img, _, init = small_instance
    cfg = DistanceMapConfig(median_kernel=1)
    dmap = cs.build_DI(img, init, cfg)
    inside = cs.rasterize_contour(init, img.width, img.height)
    seeds = cs.mask_boundary(inside, exclude_image_border=True)
    interior = inside.data & ~seeds.data
    region = cs.region_at(dmap, 0.0)
    assert np.all(region.data[interior])


def test_region_at_extremes(small_instance):
    img, _, init = small_instance
    dmap = cs.build_DI(img, init)
    assert cs.region_at(dmap, 1.0).data.all()
    assert not cs.region_at(dmap, -1.0 - 1e-9).data.any()


def test_region_at_monotone():
    g = philox(8)
    field = cs.ScalarField(np.clip(g.normal(0, 0.4, (20, 20)), -1, 1))
    dmap = cs.SignedDistanceMap(field)
    prev = None
    for T in np.linspace(-1, 1, 100):
        cur = cs.region_at(dmap, T).data
        if prev is not None:
            assert np.all(cur[prev])  # nesting
        prev = cur


def test_signed_map_rejects_out_of_range():
    with pytest.raises(ValueError):
        cs.SignedDistanceMap(cs.ScalarField(np.full((4, 4), 1.5)))
