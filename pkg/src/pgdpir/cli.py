"""Command-line workflows: simulate, restore, eval, bench-ablation.

Exit codes: 0 success, 2 configuration error, 3 solver error,
4 external-denoiser protocol error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench import run_ablation
from .config import (
    RunConfig,
    build_denoiser,
    build_noise,
    build_solver_config,
    build_target,
    load_config_file,
)
from .errors import (
    ConfigError,
    DenoiserError,
    ParameterError,
    ProtocolError,
    ShapeError,
    StepSizeError,
)
from .forward import DegradationOp, NoiseParams, sample_exact_pg
from .grid import BlurKernel
from .imageio import (
    read_imgf,
    read_manifest,
    read_png16,
    sha256_array,
    sha256_json,
    write_imgf,
    write_manifest,
    write_png16,
)
from .metrics import MetricReport, psnr, ssim
from .solvers import dpir_baseline, pg_dpir, pgd_baseline


def _read_image(path) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"image file {p} not found")
    if p.suffix == ".imgf":
        return read_imgf(p)
    if p.suffix == ".png":
        return read_png16(p)
    raise ConfigError(f"image file {p}: expected a .imgf or .png file")


def _out_dir(args, raw: dict) -> Path:
    out = args.out or raw.get("paths", {}).get("out")
    if out is None:
        raise ConfigError("no output directory: pass --out or set paths.out in the config")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _apply_overrides(raw: dict, args) -> dict:
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "method", None) is not None:
        raw["method"] = args.method
    if getattr(args, "denoiser", None) is not None:
        raw["denoiser"] = args.denoiser
    return raw


def _operator_manifest(op: DegradationOp) -> dict:
    return {
        "taps": op.kernel.taps.tolist(),
        "anchor": list(op.kernel.anchor),
        "normalized": op.kernel.normalized,
        "decimation": op.decimation,
        "phase": list(op.phase),
    }


def _operator_from_manifest(m: dict) -> DegradationOp:
    spec = m["operator"]
    kernel = BlurKernel(
        np.asarray(spec["taps"], dtype=np.float64),
        anchor=tuple(spec["anchor"]),
        normalized=bool(spec["normalized"]),
    )
    return DegradationOp(kernel, int(spec["decimation"]), tuple(spec["phase"]))


def cmd_simulate(args) -> int:
    raw = _apply_overrides(load_config_file(args.config), args)
    cfg = RunConfig.from_dict(raw)
    if "target" not in raw:
        raise ConfigError("simulate requires a 'target' section in the config")
    target = build_target(raw["target"])
    out = _out_dir(args, raw)
    degraded = sample_exact_pg(target, cfg.operator, cfg.noise, cfg.seed)
    write_imgf(out / "target.imgf", target)
    write_png16(out / "target.png", target)
    write_imgf(out / "degraded.imgf", degraded)
    write_png16(out / "degraded.png", degraded)
    manifest = {
        "tool": "pgdpir",
        "version": __version__,
        "kind": "simulation",
        "seed": cfg.seed,
        "problem": cfg.problem,
        "noise": {"sigma0": cfg.noise.sigma0, "gain_k": cfg.noise.gain_k},
        "operator": _operator_manifest(cfg.operator),
        "target_shape": list(target.shape),
        "degraded_shape": list(degraded.shape),
        "kernel_sha256": sha256_array(cfg.operator.kernel.taps),
        "target_sha256": sha256_array(target),
        "degraded_sha256": sha256_array(degraded),
        "config_sha256": sha256_json(raw),
        "files": {"target": "target.imgf", "degraded": "degraded.imgf"},
    }
    write_manifest(out / "manifest.json", manifest)
    print(
        f"simulated {target.shape[0]}x{target.shape[1]} -> "
        f"{degraded.shape[0]}x{degraded.shape[1]} (seed {cfg.seed}) in {out}"
    )
    return 0


_SOLVERS = {"pg-dpir": pg_dpir, "dpir": dpir_baseline, "pgd": pgd_baseline}


def cmd_restore(args) -> int:
    raw = _apply_overrides(load_config_file(args.config), args)
    cfg = RunConfig.from_dict(raw, require_forward=False)
    paths = cfg.paths
    if "degraded" not in paths:
        raise ConfigError("restore requires paths.degraded in the config")
    degraded_path = Path(paths["degraded"])
    y = _read_image(degraded_path)

    manifest_path = Path(paths.get("manifest", degraded_path.parent / "manifest.json"))
    manifest = None
    if cfg.operator is None or cfg.noise is None:
        manifest = read_manifest(manifest_path)
    op = cfg.operator if cfg.operator is not None else _operator_from_manifest(manifest)
    noise = (
        cfg.noise
        if cfg.noise is not None
        else NoiseParams(manifest["noise"]["sigma0"], manifest["noise"]["gain_k"])
    )

    reference = None
    if "reference" in paths:
        reference = _read_image(paths["reference"])
    elif manifest is not None and "target" in manifest.get("files", {}):
        candidate = manifest_path.parent / manifest["files"]["target"]
        if candidate.exists():
            reference = read_imgf(candidate)

    out = _out_dir(args, raw)
    solver = _SOLVERS[cfg.method]
    t0 = time.perf_counter()
    restored, trace = solver(y, op, noise, cfg.denoiser, cfg.solver, reference=reference)
    wall = time.perf_counter() - t0

    write_imgf(out / "restored.imgf", restored)
    write_png16(out / "restored.png", restored)
    with open(out / "trace.jsonl", "w") as f:
        f.write(json.dumps({"method": trace.method, "extras": trace.extras}) + "\n")
        for record in trace.to_dicts():
            f.write(json.dumps(record) + "\n")
    report = {
        "method": cfg.method,
        "wall_time": wall,
        "seed": cfg.seed,
        "config_sha256": sha256_json(raw),
        "restored_sha256": sha256_array(restored),
        "version": __version__,
        "trace": "trace.jsonl",
    }
    if reference is not None:
        metric = MetricReport(
            psnr=psnr(restored, reference),
            ssim=ssim(restored, reference),
            wall_time=wall,
            trace_path="trace.jsonl",
        )
        report["psnr"] = metric.psnr
        report["ssim"] = metric.ssim
        report["psnr_degraded"] = (
            psnr(y, reference) if y.shape == reference.shape else None
        )
    with open(out / "metrics.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    if reference is not None:
        print(
            f"{cfg.method}: PSNR {report['psnr']:.3f} dB, SSIM {report['ssim']:.4f}, "
            f"{wall:.2f}s -> {out}"
        )
    else:
        print(f"{cfg.method}: restored in {wall:.2f}s -> {out} (no reference, no metrics)")
    return 0


def cmd_eval(args) -> int:
    a = _read_image(args.restored)
    b = _read_image(args.reference)
    report = {
        "restored": str(args.restored),
        "reference": str(args.reference),
        "peak": args.peak,
        "psnr": psnr(a, b, peak=args.peak),
        "ssim": ssim(a, b, peak=args.peak),
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "metrics.json", "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")
    print(f"PSNR {report['psnr']:.4f} dB, SSIM {report['ssim']:.5f}")
    return 0


def cmd_bench_ablation(args) -> int:
    raw = {}
    if args.config:
        raw = _apply_overrides(load_config_file(args.config), args)
    bench = raw.get("bench", {})
    noise = build_noise(raw["noise"]) if "noise" in raw else None
    cfg = build_solver_config(raw.get("solver"), "sisr")
    denoiser = build_denoiser(raw.get("denoiser", "tv"))
    decimation = raw.get("operator", {}).get("s", 2) if "operator" in raw else 2
    result = run_ablation(
        int(bench.get("instances", 20)),
        size=int(bench.get("size", 64)),
        decimation=int(decimation),
        noise=noise,
        cfg=cfg,
        denoiser=denoiser,
        grad_tol=float(bench.get("grad_tol", 1e-6)),
        max_inner=int(bench.get("max_inner", 20000)),
        base_seed=int(bench.get("base_seed", 0)),
    )
    print(result.table())
    if args.out or raw.get("paths", {}).get("out"):
        out = _out_dir(args, raw)
        (out / "ablation.csv").write_text(result.to_csv())
        summary = result.summary()
        with open(out / "ablation_summary.json", "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
        print(f"wrote {out / 'ablation.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgdpir",
        description="Poisson-Gaussian plug-and-play restoration workflows",
    )
    parser.add_argument("--version", action="version", version=f"pgdpir {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--method",
            choices=("pg-dpir", "dpir", "pgd"),
            default=None,
            help="override the restoration method",
        )
        p.add_argument(
            "--denoiser",
            default=None,
            help="override the denoiser (identity|gaussian|tv|median|external:CMD)",
        )
        p.add_argument("--out", default=None, help="output directory")

    p_sim = sub.add_parser("simulate", help="simulate a degraded/target image pair")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_res = sub.add_parser("restore", help="restore a simulated measurement")
    common(p_res)
    p_res.set_defaults(func=cmd_restore)

    p_eval = sub.add_parser("eval", help="PSNR/SSIM between two images")
    p_eval.add_argument("restored")
    p_eval.add_argument("reference")
    p_eval.add_argument("--peak", type=float, default=1.0)
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser(
        "bench-ablation", help="warm-start vs cold-start prox benchmark"
    )
    common(p_bench, config_required=False)
    p_bench.set_defaults(func=cmd_bench_ablation)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return 4
    except (StepSizeError, DenoiserError, ParameterError, ShapeError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


def cli_entry() -> None:
    sys.exit(main())
