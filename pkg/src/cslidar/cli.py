"""Command-line front end.

Subcommands: scene (generate scene files), acquire (compressive
acquisition + reconstruction), sweep (accuracy study), raster (baseline
scan), flux (photon accounting).  A TOML config supplies defaults; flags
override file values.  Every artifact directory gets a metadata.json with
the resolved configuration and seed for exact replay.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import io as artio
from .chirp import ChirpConfig
from .config import ConfigError, RunConfig, config_metadata, load_config
from .evalbench import (SweepSpec, flux_accounting, mse, raster_baseline,
                        run_sweep)
from .recon import ReconstructionError, reconstruct, smooth
from .scene import (GENERATORS, Scene, SceneError, builtin_scene,
                    gaussian_illumination, load_scene, returns_from_scene,
                    save_scene)
from .sensing import SensingMatrix
from .spectral import (acquire, acquire_projection, clean_projection_spectra,
                       process_noisy)


def _load_scene_for(cfg: RunConfig) -> Scene:
    if cfg.scene_source in GENERATORS:
        return builtin_scene(cfg.scene_source, cfg.height, cfg.width)
    return load_scene(cfg.scene_source)


def _write_metadata(outdir: Path, cfg: RunConfig, extra: dict) -> None:
    meta = config_metadata(cfg)
    meta.update(extra)
    (outdir / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def _depth_artifacts(dmap, cfg: RunConfig, outdir: Path, stem: str = "depth"):
    artio.write_pfm(dmap, outdir / f"{stem}.pfm")
    artio.write_pgm(dmap, outdir / f"{stem}.pgm", depth_scale=cfg.chirp.max_depth)
    artio.write_depth_csv(dmap, outdir / f"{stem}.csv")


def cmd_scene(cfg: RunConfig, args) -> int:
    path = Path(args.out) if args.out else cfg.output_dir / "scene.json"
    if cfg.scene_source not in GENERATORS:
        raise ConfigError(
            f"scene generation needs a built-in generator, got {cfg.scene_source!r}")
    scene = builtin_scene(cfg.scene_source, cfg.height, cfg.width)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_scene(scene, path)
    print(f"wrote {path} ({scene.width}x{scene.height}, "
          f"max depth {scene.depth.max():.3f} m)")
    return 0


def cmd_acquire(cfg: RunConfig, args) -> int:
    scene = _load_scene_for(cfg)
    n = scene.num_pixels
    m = cfg.measurements(n)
    illum = gaussian_illumination(scene.height, scene.width, cfg.total_power,
                                  cfg.sigma_frac)
    field = returns_from_scene(scene, illum, cfg.geometry, cfg.chirp)
    A = SensingMatrix.randomized(n, m, seed=cfg.seed)

    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    mv = acquire(field, A, cfg.chirp, cfg.noise, cfg.geometry.lo_amplitude,
                 nsr=cfg.wiener_nsr, weighting=cfg.weighting)
    t_acquire = time.perf_counter() - t0

    if args.dump_stages is not None:
        record: dict = {}
        acquire_projection(field, A, args.dump_stages, cfg.chirp, cfg.noise,
                           cfg.geometry.lo_amplitude, nsr=cfg.wiener_nsr,
                           record=record)
        names = ("clean", "broadened", "noisy", "denoised", "deconvolved")
        for det, tag in ((0, "pos"), (1, "neg")):
            for i, name in enumerate(names, start=1):
                spec = record[det].get(name)
                if spec is not None:
                    artio.write_spectrum_csv(
                        spec, outdir / f"stage{i}_{name}_k{args.dump_stages}_{tag}.csv")

    artio.write_measurements_csv(mv, outdir / "measurements.csv")

    t1 = time.perf_counter()
    result = reconstruct(A, mv, cfg.tv, cfg.chirp,
                         mask_threshold=cfg.mask_threshold,
                         support_fraction=cfg.support_fraction,
                         depth_floor_frac=cfg.depth_floor_frac,
                         ls_tol=cfg.ls_tol, ls_method=cfg.ls_method)
    t_recon = time.perf_counter() - t1
    dmap = result.depth_map
    if cfg.smooth_output:
        dmap = smooth(dmap)
    _depth_artifacts(dmap, cfg, outdir)

    extra = {"m": m, "n": n, "timing_s": {"acquire": t_acquire, "reconstruct": t_recon},
             "tv_converged": result.tv.converged,
             "depth_mse_m2": mse(dmap, scene) if scene.depth.shape == dmap.depths.shape else None}
    _write_metadata(outdir, cfg, extra)
    print(f"acquired m={m} projections of n={n} pixels "
          f"({t_acquire:.2f}s), reconstructed in {t_recon:.2f}s; "
          f"artifacts in {outdir}")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    if args.seed is None:
        raise ConfigError("sweep requires an explicit --seed for reproducibility")
    scene = _load_scene_for(cfg)
    spec = SweepSpec(
        sample_ratios=cfg.sweep_ratios or SweepSpec().sample_ratios,
        psnr_levels=cfg.sweep_psnrs or SweepSpec().psnr_levels,
        repetitions=cfg.sweep_repetitions,
        linewidths=cfg.sweep_linewidths or SweepSpec().linewidths,
        seed=cfg.seed)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    result = run_sweep(spec, scene, cfg.chirp, cfg.geometry, tv=cfg.tv,
                       workers=cfg.workers,
                       progress=lambda msg: print(msg, file=sys.stderr),
                       mask_threshold=cfg.mask_threshold,
                       support_fraction=cfg.support_fraction,
                       nsr=cfg.wiener_nsr)
    artio.write_sweep_csv(result, outdir / "sweep_mse.csv")
    artio.write_toroid_csv(result, outdir / "toroid_uncertainty.csv")
    _write_metadata(outdir, cfg, {"sweep": {
        "ratios": list(spec.sample_ratios),
        "psnrs": ["inf" if math.isinf(p) else p for p in spec.psnr_levels],
        "linewidths": list(spec.linewidths),
        "repetitions": spec.repetitions}})
    print(f"sweep complete: {len(result.cells)} cells -> {outdir}")
    return 0


def cmd_raster(cfg: RunConfig, args) -> int:
    scene = _load_scene_for(cfg)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    illum = gaussian_illumination(scene.height, scene.width, cfg.total_power,
                                  cfg.sigma_frac)
    dmap = raster_baseline(scene, cfg.chirp, cfg.noise, cfg.geometry,
                           illumination=illum, nsr=cfg.wiener_nsr)
    _depth_artifacts(dmap, cfg, outdir, stem="raster_depth")
    _write_metadata(outdir, cfg, {"raster_mse_m2": mse(dmap, scene)})
    print(f"raster baseline written to {outdir}")
    return 0


def cmd_flux(cfg: RunConfig, args) -> int:
    report = flux_accounting(args.rate, args.time, args.m, args.alpha, args.beta)
    print(json.dumps(report.as_dict(), indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(report.as_dict(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cslidar",
        description="Compressive FMCW LiDAR depth-mapping simulator")
    parser.add_argument("--config", type=Path, help="TOML configuration file")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--outdir", type=Path, help="artifact directory")
    parser.add_argument("--scene", help="built-in scene name or scene file path")
    parser.add_argument("--width", type=int)
    parser.add_argument("--height", type=int)
    parser.add_argument("--preset", choices=("desk32", "paper128"),
                        help="chirp parameter preset")
    parser.add_argument("--psnr", help="peak SNR (number or 'inf')")
    parser.add_argument("--linewidth", type=float,
                        help="beat-note Lorentzian FWHM in Hz")
    parser.add_argument("--ratio", type=float, help="sample ratio m/n")
    parser.add_argument("--workers", type=int, help="parallel sweep workers")

    sub = parser.add_subparsers(dest="command", required=True)
    p_scene = sub.add_parser("scene", help="generate a scene file")
    p_scene.add_argument("--out", help="output path (.json or .txt)")

    p_acq = sub.add_parser("acquire", help="acquire and reconstruct a depth map")
    p_acq.add_argument("--dump-stages", type=int, metavar="K",
                       help="dump the five pipeline stages of projection K")

    sub.add_parser("sweep", help="MSE vs sample-ratio study")
    sub.add_parser("raster", help="raster-scan baseline depth map")

    p_flux = sub.add_parser("flux", help="array vs compressive photon budget")
    p_flux.add_argument("--rate", type=float, required=True, help="photons/s")
    p_flux.add_argument("--time", type=float, required=True, help="seconds")
    p_flux.add_argument("--m", type=int, required=True, help="projections")
    p_flux.add_argument("--alpha", type=int, required=True, help="lit pixels")
    p_flux.add_argument("--beta", type=int, help="array pixels (default alpha)")
    p_flux.add_argument("--out", help="also write the report as JSON")
    return parser


def _overrides_from_args(args) -> dict:
    noise = {}
    if args.psnr is not None:
        noise["psnr"] = math.inf if args.psnr.lower() in ("inf", "infinity") \
            else float(args.psnr)
    if args.linewidth is not None:
        noise["beat_linewidth_fwhm"] = args.linewidth
    return {
        "scene": {"source": args.scene, "width": args.width, "height": args.height},
        "chirp": {"preset": args.preset},
        "noise": noise,
        "sensing": {"sample_ratio": args.ratio, "seed": args.seed},
        "sweep": {"workers": args.workers},
        "output": {"dir": str(args.outdir) if args.outdir else None},
    }


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"scene": cmd_scene, "acquire": cmd_acquire, "sweep": cmd_sweep,
                "raster": cmd_raster, "flux": cmd_flux}
    try:
        cfg = load_config(args.config, _overrides_from_args(args))
        return handlers[args.command](cfg, args)
    except (ConfigError, SceneError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ReconstructionError as exc:
        print(f"reconstruction failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
