"""Wavefront segmentation for noisy, inhomogeneous grayscale microscopy images.

Segments an advancing bright region by thresholding a signed Euclidean x
geodesic distance map built from a user-supplied initial contour, with the
threshold optimized under a local-similarity energy. Ships a Chan-Vese
baseline, evaluation metrics, and a deterministic synthetic benchmark
generator.
"""

__version__ = "0.1.0"

from .baseline import ChanVeseParams, chan_vese
from .distmap import (
    DistanceMapConfig,
    SignedDistanceMap,
    build_DI,
    euclidean_map,
    geodesic_map,
    region_at,
)
from .imgcore import (
    BinaryMask,
    ContourPolygon,
    DegenerateRegionError,
    GrayImage,
    ScalarField,
    load_contour,
    load_image,
    load_mask,
    mask_boundary,
    rasterize_contour,
    save_contour,
    save_image,
    save_mask,
)
from .localsim import LsfTables, LsmParams, RegionStats, local_means, lsf_field, lsm_energy
from .metrics import EvalReport, boundary_rmse, dice, evaluate
from .optimizer import (
    BandSample,
    DescentTrace,
    TraceStep,
    balance_band,
    delta_T,
    extract_band,
    optimize_threshold,
    step_size,
    write_trace_csv,
)
from .synth import SynthConfig, default_suite, generate

__all__ = [
    "BandSample",
    "BinaryMask",
    "ChanVeseParams",
    "ContourPolygon",
    "DegenerateRegionError",
    "DescentTrace",
    "DistanceMapConfig",
    "EvalReport",
    "GrayImage",
    "LsfTables",
    "LsmParams",
    "RegionStats",
    "ScalarField",
    "SignedDistanceMap",
    "SynthConfig",
    "TraceStep",
    "balance_band",
    "boundary_rmse",
    "build_DI",
    "chan_vese",
    "default_suite",
    "delta_T",
    "dice",
    "euclidean_map",
    "evaluate",
    "extract_band",
    "generate",
    "geodesic_map",
    "lsf_field",
    "lsm_energy",
    "load_contour",
    "load_image",
    "load_mask",
    "local_means",
    "mask_boundary",
    "optimize_threshold",
    "rasterize_contour",
    "region_at",
    "save_contour",
    "save_image",
    "save_mask",
    "step_size",
    "write_trace_csv",
]
