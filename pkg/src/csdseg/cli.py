"""Command-line driver wiring the segmentation pipeline.

Subcommands: segment, compare, synth, eval, dump-distmap. Configuration
comes from a JSON config file plus flag overrides (flags win); every run
writes a machine-readable manifest with the resolved parameters. All
randomness flows from explicit seeds and outputs are written atomically,
so reruns with identical arguments reproduce artifacts byte-for-byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields
from io import BytesIO

import numpy as np
from PIL import Image

from . import __version__
from .baseline import ChanVeseParams, chan_vese
from .distmap import DistanceMapConfig, build_DI, euclidean_map, geodesic_map, region_at
from .imgcore import (
    GrayImage,
    ScalarField,
    _atomic_write_bytes,
    load_contour,
    load_image,
    load_mask,
    mask_boundary,
    rasterize_contour,
    save_contour,
    save_image,
    save_mask,
)
from .localsim import LsfTables, LsmParams, local_means
from .metrics import boundary_rmse, dice
from .optimizer import optimize_threshold, write_trace_csv
from .synth import SynthConfig, generate

_CSV_HEADER = "image_id,method,dice,rmse,iterations,wall_time_ms"


# ---------------------------------------------------------------------------
# parameter resolution: dataclass defaults <- config file section <- flags


def _load_config_file(path: str) -> dict:
    with open(path) as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ValueError(f"config file {path!r} must hold a JSON object")
    return doc


def _resolve(cls, section: dict | None, overrides: dict):
    valid = {f.name for f in fields(cls)}
    kwargs = {}
    for k, v in (section or {}).items():
        if k not in valid:
            raise ValueError(f"unknown {cls.__name__} field {k!r} in config file")
        kwargs[k] = v
    for k, v in overrides.items():
        if v is not None:
            kwargs[k] = v
    return cls(**kwargs)


def _gather(args, names: tuple[str, ...]) -> dict:
    return {n: getattr(args, n, None) for n in names}


_LSM_FLAGS = ("window", "mask_radius", "band_width", "lambda1", "lambda2", "max_iters", "tol")
_DIST_FLAGS = ("median_kernel", "geodesic_sigma", "geodesic_epsilon")
_CV_FLAGS = ("mu_smooth", "iters", "dt")


def _params_from_args(args):
    cfg_doc = _load_config_file(args.config) if getattr(args, "config", None) else {}
    lsm = _resolve(LsmParams, cfg_doc.get("lsm"), _gather(args, _LSM_FLAGS))
    dmc = _resolve(DistanceMapConfig, cfg_doc.get("distmap"), _gather(args, _DIST_FLAGS))
    cv = _resolve(ChanVeseParams, cfg_doc.get("chan_vese"), _gather(args, _CV_FLAGS))
    return lsm, dmc, cv


def _write_manifest(out_dir: str, payload: dict) -> str:
    path = os.path.join(out_dir, "run_manifest.json")
    _atomic_write_bytes(path, (json.dumps(payload, indent=1, sort_keys=True) + "\n").encode())
    return path


def _write_csv(path: str, rows: list[dict]) -> None:
    lines = [_CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r['image_id']},{r['method']},{r['dice']!r},{r['rmse']!r},"
            f"{r['iterations']},{r['wall_time_ms']:.1f}"
        )
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def _dump_field(f: ScalarField, path: str) -> None:
    """16-bit raster scaled to full range, plus a min/max sidecar for inversion."""
    lo, hi = float(f.data.min()), float(f.data.max())
    scaled = (f.data - lo) / (hi - lo) if hi > lo else np.zeros_like(f.data)
    arr = np.round(scaled * 65535.0).astype(np.uint16)
    buf = BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    _atomic_write_bytes(path, buf.getvalue())
    _atomic_write_bytes(path + ".minmax.txt", f"min={lo!r}\nmax={hi!r}\n".encode())


def _safe_eval(truth, seg) -> tuple[float, float]:
    """Metrics that tolerate a collapsed segmentation (dice 0, rmse nan)."""
    try:
        d = dice(truth, seg)
    except ValueError:
        d = 0.0
    try:
        r = boundary_rmse(truth, seg)
    except ValueError:
        r = float("nan")
    return d, r


# ---------------------------------------------------------------------------
# segment


def cmd_segment(args) -> int:
    lsm, dmc, _ = _params_from_args(args)
    image = load_image(args.image, channel=args.channel)
    init = load_contour(args.init)
    os.makedirs(args.out, exist_ok=True)

    t0 = time.perf_counter()
    dmap = build_DI(image, init, dmc)
    trace = optimize_threshold(image, dmap, lsm)
    seg = region_at(dmap, trace.final_T)
    wall_ms = (time.perf_counter() - t0) * 1000.0

    save_mask(seg, os.path.join(args.out, "segmentation.png"))
    write_trace_csv(trace, os.path.join(args.out, "trace.csv"))

    if args.truth:
        truth = load_mask(args.truth)
        d, r = _safe_eval(truth, seg)
        row = {
            "image_id": os.path.basename(args.image),
            "method": "lsm",
            "dice": d,
            "rmse": r,
            "iterations": len(trace.iterations),
            "wall_time_ms": wall_ms,
        }
        _write_csv(os.path.join(args.out, "report.csv"), [row])

    if args.dump_fields:
        seeds = mask_boundary(rasterize_contour(init, image.width, image.height), True)
        _dump_field(euclidean_map(seeds), os.path.join(args.out, "d0.png"))
        _dump_field(geodesic_map(image, seeds, dmc), os.path.join(args.out, "g0.png"))
        _dump_field(dmap.field, os.path.join(args.out, "di.png"))
        stats = local_means(image, seg, lsm)
        tables = LsfTables(image, lsm.window)
        _dump_field(stats.lc1, os.path.join(args.out, "lc1.png"))
        _dump_field(stats.lc2, os.path.join(args.out, "lc2.png"))
        _dump_field(ScalarField(tables.field(stats.lc1.data)), os.path.join(args.out, "lsf1.png"))
        _dump_field(ScalarField(tables.field(stats.lc2.data)), os.path.join(args.out, "lsf2.png"))

    _write_manifest(
        args.out,
        {
            "command": "segment",
            "version": __version__,
            "inputs": {"image": args.image, "init": args.init, "truth": args.truth},
            "lsm": asdict(lsm),
            "distmap": asdict(dmc),
            "final_T": trace.final_T,
            "converged": trace.converged,
            "iterations": len(trace.iterations),
        },
    )
    return 0


# ---------------------------------------------------------------------------
# compare


def _compare_instance(task: dict) -> list[dict]:
    """Run LSM and the baseline on one instance; returns CSV rows."""
    image = load_image(task["image"])
    init = load_contour(task["init"])
    truth = load_mask(task["truth"])
    lsm = LsmParams(**task["lsm"])
    dmc = DistanceMapConfig(**task["distmap"])
    cvp = ChanVeseParams(**task["chan_vese"])
    rows = []

    t0 = time.perf_counter()
    dmap = build_DI(image, init, dmc)
    trace = optimize_threshold(image, dmap, lsm)
    seg_lsm = region_at(dmap, trace.final_T)
    lsm_ms = (time.perf_counter() - t0) * 1000.0
    d, r = _safe_eval(truth, seg_lsm)
    rows.append(
        {
            "image_id": task["id"],
            "method": "lsm",
            "dice": d,
            "rmse": r,
            "iterations": len(trace.iterations),
            "wall_time_ms": lsm_ms,
        }
    )

    t0 = time.perf_counter()
    seg_cv = chan_vese(image, init, cvp)
    cv_ms = (time.perf_counter() - t0) * 1000.0
    d, r = _safe_eval(truth, seg_cv)
    rows.append(
        {
            "image_id": task["id"],
            "method": "chan_vese",
            "dice": d,
            "rmse": r,
            "iterations": cvp.iters,
            "wall_time_ms": cv_ms,
        }
    )

    if task.get("mask_dir"):
        save_mask(seg_lsm, os.path.join(task["mask_dir"], f"lsm_{task['id']}.png"))
        save_mask(seg_cv, os.path.join(task["mask_dir"], f"chan_vese_{task['id']}.png"))
    return rows


def _manifest_tasks(manifest_path: str) -> list[dict]:
    with open(manifest_path) as f:
        doc = json.load(f)
    base = os.path.dirname(os.path.abspath(manifest_path))
    tasks = []
    for inst in doc["instances"]:
        tasks.append(
            {
                "id": inst["id"],
                "image": os.path.join(base, inst["image"]),
                "truth": os.path.join(base, inst["truth"]),
                "init": os.path.join(base, inst["init"]),
            }
        )
    return tasks


def cmd_compare(args) -> int:
    lsm, dmc, cvp = _params_from_args(args)
    if args.manifest:
        tasks = _manifest_tasks(args.manifest)
    else:
        if not (args.image and args.init and args.truth):
            raise ValueError("compare needs either --manifest or --image/--init/--truth")
        tasks = [
            {
                "id": os.path.splitext(os.path.basename(args.image))[0],
                "image": args.image,
                "truth": args.truth,
                "init": args.init,
            }
        ]
    os.makedirs(args.out, exist_ok=True)
    mask_dir = os.path.join(args.out, "masks")
    os.makedirs(mask_dir, exist_ok=True)
    for t in tasks:
        t.update(
            {
                "lsm": asdict(lsm),
                "distmap": asdict(dmc),
                "chan_vese": asdict(cvp),
                "mask_dir": mask_dir,
            }
        )

    rows: list[dict] = []
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for chunk in pool.map(_compare_instance, tasks):
                rows.extend(chunk)
    else:
        for t in tasks:
            rows.extend(_compare_instance(t))

    _write_csv(os.path.join(args.out, "comparison.csv"), rows)
    _write_manifest(
        args.out,
        {
            "command": "compare",
            "version": __version__,
            "manifest": args.manifest,
            "instances": [t["id"] for t in tasks],
            "lsm": asdict(lsm),
            "distmap": asdict(dmc),
            "chan_vese": asdict(cvp),
            "workers": args.workers,
        },
    )
    return 0


# ---------------------------------------------------------------------------
# synth


_SYNTH_FLAGS = (
    "width",
    "height",
    "front_amplitude",
    "front_offset",
    "inside_level",
    "outside_level",
    "shading_strength",
    "noise_sigma",
    "n_occlusions",
    "occlusion_width",
)


def _emit_instance(out_dir: str, inst_id: str, cfg: SynthConfig) -> dict:
    image, truth, init = generate(cfg)
    rel = {
        "image": os.path.join("images", f"img_{inst_id}.png"),
        "truth": os.path.join("truths", f"truth_{inst_id}.png"),
        "init": os.path.join("inits", f"init_{inst_id}.json"),
    }
    save_image(image, os.path.join(out_dir, rel["image"]), bits=16)
    save_mask(truth, os.path.join(out_dir, rel["truth"]))
    save_contour(init, os.path.join(out_dir, rel["init"]))
    return {"id": inst_id, "config": asdict(cfg), **rel}


def cmd_synth(args) -> int:
    out = args.out
    for sub in ("images", "truths", "inits"):
        os.makedirs(os.path.join(out, sub), exist_ok=True)

    if args.from_manifest:
        with open(args.from_manifest) as f:
            doc = json.load(f)
        configs = [(inst["id"], SynthConfig(**inst["config"])) for inst in doc["instances"]]
    else:
        cfg_doc = _load_config_file(args.config) if args.config else {}
        overrides = _gather(args, _SYNTH_FLAGS)
        base = _resolve(SynthConfig, cfg_doc.get("synth"), overrides)
        configs = []
        for i in range(args.count):
            cfg_kwargs = asdict(base)
            cfg_kwargs["seed"] = args.seed + i
            configs.append((f"{i + 1:03d}", SynthConfig(**cfg_kwargs)))

    instances = [_emit_instance(out, inst_id, cfg) for inst_id, cfg in configs]
    manifest = {
        "command": "synth",
        "version": __version__,
        "count": len(instances),
        "base_seed": args.seed,
        "instances": instances,
    }
    _atomic_write_bytes(
        os.path.join(out, "manifest.json"),
        (json.dumps(manifest, indent=1, sort_keys=True) + "\n").encode(),
    )
    return 0


# ---------------------------------------------------------------------------
# eval / dump-distmap


def cmd_eval(args) -> int:
    truth = load_mask(args.truth)
    seg = load_mask(args.seg)
    d = dice(truth, seg)
    r = boundary_rmse(truth, seg)
    n = mask_boundary(seg, exclude_image_border=True).count()
    print(f"dice={d:.6f} rmse={r:.6f} boundary_points={n}")
    if args.out:
        row = {
            "image_id": os.path.basename(args.seg),
            "method": "eval",
            "dice": d,
            "rmse": r,
            "iterations": 0,
            "wall_time_ms": 0.0,
        }
        _write_csv(args.out, [row])
    return 0


def cmd_dump_distmap(args) -> int:
    _, dmc, _ = _params_from_args(args)
    image = load_image(args.image, channel=args.channel)
    init = load_contour(args.init)
    os.makedirs(args.out, exist_ok=True)
    seeds = mask_boundary(rasterize_contour(init, image.width, image.height), True)
    _dump_field(euclidean_map(seeds), os.path.join(args.out, "d0.png"))
    _dump_field(geodesic_map(image, seeds, dmc), os.path.join(args.out, "g0.png"))
    _dump_field(build_DI(image, init, dmc).field, os.path.join(args.out, "di.png"))
    _write_manifest(
        args.out,
        {
            "command": "dump-distmap",
            "version": __version__,
            "inputs": {"image": args.image, "init": args.init},
            "distmap": asdict(dmc),
        },
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_lsm_flags(p):
    p.add_argument("--window", type=int)
    p.add_argument("--mask-radius", type=float, dest="mask_radius")
    p.add_argument("--band-width", type=float, dest="band_width")
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--tol", type=float)


def _add_distmap_flags(p):
    p.add_argument("--median-kernel", type=int, dest="median_kernel")
    p.add_argument("--geodesic-sigma", type=float, dest="geodesic_sigma")
    p.add_argument("--geodesic-epsilon", type=float, dest="geodesic_epsilon")


def _add_cv_flags(p):
    p.add_argument("--cv-mu", type=float, dest="mu_smooth")
    p.add_argument("--cv-iters", type=int, dest="iters")
    p.add_argument("--cv-dt", type=float, dest="dt")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csdseg", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"csdseg {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment one image from an initial contour")
    seg.add_argument("--image", required=True)
    seg.add_argument("--init", required=True)
    seg.add_argument("--truth")
    seg.add_argument("--out", required=True)
    seg.add_argument("--config")
    seg.add_argument("--channel", type=int)
    seg.add_argument("--dump-fields", action="store_true", dest="dump_fields")
    _add_lsm_flags(seg)
    _add_distmap_flags(seg)
    seg.set_defaults(func=cmd_segment)

    cmp_ = sub.add_parser("compare", help="run LSM and the Chan-Vese baseline side by side")
    cmp_.add_argument("--image")
    cmp_.add_argument("--init")
    cmp_.add_argument("--truth")
    cmp_.add_argument("--manifest", help="instance manifest produced by `csdseg synth`")
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--config")
    cmp_.add_argument("--workers", type=int, default=1)
    _add_lsm_flags(cmp_)
    _add_distmap_flags(cmp_)
    _add_cv_flags(cmp_)
    cmp_.set_defaults(func=cmd_compare)

    syn = sub.add_parser("synth", help="emit synthetic image/truth/contour triples")
    syn.add_argument("--out", required=True)
    syn.add_argument("--count", type=int, default=20)
    syn.add_argument("--seed", type=int, default=1, help="seed of the first instance")
    syn.add_argument("--config")
    syn.add_argument("--from-manifest", dest="from_manifest", help="regenerate from a manifest")
    syn.add_argument("--width", type=int)
    syn.add_argument("--height", type=int)
    syn.add_argument("--front-amplitude", type=float, dest="front_amplitude")
    syn.add_argument("--front-offset", type=float, dest="front_offset")
    syn.add_argument("--inside-level", type=float, dest="inside_level")
    syn.add_argument("--outside-level", type=float, dest="outside_level")
    syn.add_argument("--shading-strength", type=float, dest="shading_strength")
    syn.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    syn.add_argument("--n-occlusions", type=int, dest="n_occlusions")
    syn.add_argument("--occlusion-width", type=float, dest="occlusion_width")
    syn.set_defaults(func=cmd_synth)

    ev = sub.add_parser("eval", help="DICE and boundary RMSE of a mask against ground truth")
    ev.add_argument("--truth", required=True)
    ev.add_argument("--seg", required=True)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_eval)

    dmp = sub.add_parser("dump-distmap", help="write d0/g0/D_I rasters with min/max sidecars")
    dmp.add_argument("--image", required=True)
    dmp.add_argument("--init", required=True)
    dmp.add_argument("--out", required=True)
    dmp.add_argument("--config")
    dmp.add_argument("--channel", type=int)
    _add_distmap_flags(dmp)
    dmp.set_defaults(func=cmd_dump_distmap)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"csdseg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
