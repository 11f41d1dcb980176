"""Command-line interface.

Subcommands: ``denoise``, ``add-noise``, ``evaluate``, ``baseline``,
``ablate``, ``sweep``. JSON reports follow a fixed schema (config, counts,
metrics, timings_s, seed, input_sha256); CSV outputs use the column order
precision, recall, f1, psnr_db, cd, runtime_s. File I/O time is kept out
of the stage timings and reported separately.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import fields
from pathlib import Path

from .baseline import BaselineParams, baseline_denoise
from .errors import GravcleanError
from .io import read_cloud, write_cloud
from .noise import NoiseSpec, contaminate
from .pipeline import (
    DEFAULT_SWEEP_VALUES,
    DenoiseParams,
    StageToggle,
    denoise,
    evaluate_run,
    jsonable_metric,
    run_ablation,
    run_parameter_sweep,
)

_METRIC_COLUMNS = ["precision", "recall", "f1", "psnr_db", "cd", "runtime_s"]


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _out_format(path: str) -> str:
    return "xyz" if str(path).lower().endswith((".xyz", ".txt")) else "ply-ascii"


def _read_params_file(path: str) -> dict:
    """Flat key=value config; '#' starts a comment."""
    values: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {text!r}")
        key, value = (part.strip() for part in text.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _build_params(args) -> DenoiseParams:
    kw: dict = {}
    if getattr(args, "params", None):
        raw = _read_params_file(args.params)
        valid = {f.name: f.type for f in fields(DenoiseParams)}
        for key, value in raw.items():
            if key == "lambda":
                key = "lam"
            if key not in valid:
                raise ValueError(f"unknown parameter {key!r} in {args.params}")
            current = getattr(DenoiseParams(), key)
            if isinstance(current, bool):
                kw[key] = value.lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                kw[key] = int(value)
            else:
                kw[key] = float(value)
    # CLI flags override file values.
    overrides = {
        "k": args.k,
        "q": args.q,
        "min_vox_count": args.min_vox_count,
        "beta": args.beta,
        "alpha": args.alpha,
        "sigma": args.sigma,
        "lam": args.lam,
        "max_leaf_points": args.max_leaf_points,
    }
    for key, value in overrides.items():
        if value is not None:
            kw[key] = value
    if args.recompute_knn:
        kw["recompute_knn"] = True
    if getattr(args, "global_median", False):
        kw["global_median"] = True
    return DenoiseParams(**kw)


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--params", help="flat key=value parameter file")
    p.add_argument("--k", type=int, help="neighbor count for density estimation")
    p.add_argument("--q", type=float, help="density percentile cut in [0, 100]")
    p.add_argument("--min-vox-count", dest="min_vox_count", type=int,
                   help="minimum voxel occupancy for the gate")
    p.add_argument("--beta", type=float, help="voxel enlargement coefficient")
    p.add_argument("--alpha", type=float, help="density weighting exponent")
    p.add_argument("--sigma", type=float, help="distance-weight bandwidth scale")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="fraction of scored candidates retained per leaf")
    p.add_argument("--max-leaf-points", dest="max_leaf_points", type=int,
                   help="octree leaf capacity")
    p.add_argument("--no-octree", action="store_true", help="process the cloud as one leaf")
    p.add_argument("--recompute-knn", action="store_true",
                   help="recompute neighborhoods after the density filter")
    p.add_argument("--global-median", action="store_true",
                   help="normalize density weights by the global (not per-leaf) median")
    p.add_argument("--threads", type=int, default=1, help="leaf worker count")


def _write_report(report_dict: dict, path: str) -> None:
    Path(path).write_text(json.dumps(report_dict, indent=2, sort_keys=True) + "\n")


def _cmd_denoise(args) -> int:
    params = _build_params(args)
    toggles = StageToggle(use_octree=not args.no_octree)
    t0 = time.perf_counter()
    cloud = read_cloud(args.infile)
    t_read = time.perf_counter() - t0

    out, report = denoise(cloud, params, toggles, threads=args.threads)

    t0 = time.perf_counter()
    write_cloud(out, args.outfile, _out_format(args.outfile))
    t_write = time.perf_counter() - t0

    print(
        f"denoise: {len(cloud)} -> {len(out)} points "
        f"({report.timings_s['total']:.3f}s compute)"
    )
    if args.report:
        report.input_sha256 = _sha256(args.infile)
        payload = report.to_jsonable()
        # full metric key set; entries are null when the run cannot know
        # them (no labels, or no clean reference at denoise time)
        for key in ("precision", "recall", "f1", "psnr_db", "cd"):
            payload["metrics"].setdefault(key, None)
        payload["timings_s"]["io_read"] = t_read
        payload["timings_s"]["io_write"] = t_write
        _write_report(payload, args.report)
    return 0


def _cmd_add_noise(args) -> int:
    cloud = read_cloud(args.infile)
    spec = NoiseSpec(
        random_ratio=args.random_ratio,
        dense_ratio=args.dense_ratio,
        cluster_count=args.clusters,
        cluster_sigma_fraction=args.cluster_sigma,
        bbox_expand=args.bbox_expand,
        seed=args.seed,
    )
    out = contaminate(cloud, spec)
    write_cloud(out, args.outfile, _out_format(args.outfile))
    print(f"add-noise: {len(cloud)} -> {len(out)} points ({out.noise_count} labeled noise)")
    return 0


def _cmd_evaluate(args) -> int:
    clean = read_cloud(args.clean)
    contaminated = read_cloud(args.labels_from)
    denoised = read_cloud(args.denoised)
    if contaminated.labels is None:
        raise GravcleanError(f"{args.labels_from} carries no is_noise channel")
    if denoised.labels is None:
        raise GravcleanError(
            f"{args.denoised} carries no is_noise channel; denoise a labeled "
            "cloud so labels propagate to the output"
        )
    metrics = evaluate_run(clean, contaminated, denoised)
    payload = {
        "config": {"clean": str(args.clean), "denoised": str(args.denoised),
                   "labels_from": str(args.labels_from)},
        "counts": {
            "n_input": len(contaminated),
            "n_output": len(denoised),
            "n_noise": contaminated.noise_count,
        },
        "metrics": {k: jsonable_metric(v) for k, v in metrics.items()},
        "timings_s": {},
        "seed": None,
        "input_sha256": _sha256(args.denoised),
    }
    if args.report:
        _write_report(payload, args.report)
    print(json.dumps(payload["metrics"], indent=2, sort_keys=True))
    return 0


def _cmd_baseline(args) -> int:
    cloud = read_cloud(args.infile)
    params = BaselineParams(G=args.G, alpha_threshold=args.alpha_threshold)
    t0 = time.perf_counter()
    kept = baseline_denoise(cloud, params)
    elapsed = time.perf_counter() - t0
    out = cloud.select_ids(kept)
    write_cloud(out, args.outfile, _out_format(args.outfile))
    print(f"baseline: {len(cloud)} -> {len(out)} points ({elapsed:.3f}s)")
    return 0


def _grid_from_file(path: str):
    """Ablation grid file: JSON list of {name, toggles{...}, overrides{...}}."""
    from .pipeline import AblationRow

    rows = []
    for item in json.loads(Path(path).read_text()):
        toggles = item.get("toggles")
        rows.append(
            AblationRow(
                name=item["name"],
                toggles=None if toggles is None else StageToggle(**toggles),
                overrides=item.get("overrides", {}),
            )
        )
    return rows


def _cmd_ablate(args) -> int:
    clean = read_cloud(args.clean)
    spec = NoiseSpec(random_ratio=args.random_ratio, dense_ratio=args.dense_ratio,
                     seed=args.noise_seed)
    grid = None if args.grid == "default" else _grid_from_file(args.grid)
    rows = run_ablation(clean, spec, grid=grid, threads=args.threads,
                        timing_repeats=args.repeats)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for row in rows:
        payload = {
            "config": {"name": row["name"], "noise_seed": args.noise_seed,
                       "random_ratio": args.random_ratio, "dense_ratio": args.dense_ratio},
            "counts": row["counts"],
            "metrics": {
                k: jsonable_metric(row[k])
                for k in ("precision", "recall", "f1", "psnr_db", "cd")
            },
            "timings_s": {"total": row["runtime_s"]},
            "seed": args.noise_seed,
            "input_sha256": _sha256(args.clean),
        }
        _write_report(payload, out_dir / f"{row['name']}.json")
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", *_METRIC_COLUMNS])
        for row in rows:
            writer.writerow([row["name"]] + [row.get(c, "") for c in _METRIC_COLUMNS])
    print(f"ablate: wrote {len(rows)} runs to {out_dir}")
    return 0


def _cmd_sweep(args) -> int:
    clean = read_cloud(args.clean)
    spec = NoiseSpec(random_ratio=args.random_ratio, dense_ratio=args.dense_ratio,
                     seed=args.noise_seed)
    values = None
    if args.values:
        cast = int if args.axis in ("k", "min-vox-count") else float
        values = [cast(v) for v in args.values.split(",") if v.strip()]
    rows = run_parameter_sweep(clean, spec, args.axis, values, threads=args.threads)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([args.axis, *_METRIC_COLUMNS])
        for row in rows:
            writer.writerow([row["value"]] + [row.get(c, "") for c in _METRIC_COLUMNS])
    print(f"sweep: wrote {len(rows)} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravclean",
        description="Gravitational point-cloud denoising toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="run the full adaptive pipeline")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    _add_param_flags(p)
    p.add_argument("--report", help="write a JSON run report here")
    p.set_defaults(func=_cmd_denoise)

    p = sub.add_parser("add-noise", help="inject labeled synthetic noise")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--random-ratio", type=float, required=True)
    p.add_argument("--dense-ratio", type=float, default=0.0)
    p.add_argument("--clusters", type=int, default=3)
    p.add_argument("--cluster-sigma", type=float, default=0.02,
                   help="cluster spread as a fraction of the bbox diagonal")
    p.add_argument("--bbox-expand", type=float, default=1.1)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_add_noise)

    p = sub.add_parser("evaluate", help="score a denoised cloud against ground truth")
    p.add_argument("--clean", required=True)
    p.add_argument("--denoised", required=True)
    p.add_argument("--labels-from", dest="labels_from", required=True)
    p.add_argument("--report", help="write a JSON report here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("baseline", help="run the gravitational-feature baseline")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--G", type=float, default=6.67e-11)
    p.add_argument("--alpha-threshold", dest="alpha_threshold", type=float, default=600.0)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("ablate", help="run the structural ablation grid")
    p.add_argument("--clean", required=True)
    p.add_argument("--noise-seed", dest="noise_seed", type=int, required=True)
    p.add_argument("--random-ratio", type=float, default=0.10)
    p.add_argument("--dense-ratio", type=float, default=0.0)
    p.add_argument("--grid", default="default", help="'default' or a JSON grid file")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--repeats", type=int, default=5, help="timing repetitions per run")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("sweep", help="sweep one parameter axis")
    p.add_argument("--axis", choices=sorted(DEFAULT_SWEEP_VALUES), required=True)
    p.add_argument("--values", help="comma-separated values (defaults per axis)")
    p.add_argument("--clean", required=True)
    p.add_argument("--noise-seed", dest="noise_seed", type=int, required=True)
    p.add_argument("--random-ratio", type=float, default=0.10)
    p.add_argument("--dense-ratio", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GravcleanError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
