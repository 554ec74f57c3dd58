"""Run configuration: TOML files plus CLI overrides, fully validated.

Every key is checked against the schema below; unknown keys are rejected
with their full path so a typo never silently falls back to a default.
Numeric invariants are re-validated by the dataclasses the values feed
(ChirpConfig, NoiseModel, ...), so a bad config dies with a named
diagnostic before any artifact is written.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .chirp import ChirpConfig, preset
from .recon import TvConfig
from .scene import CollectionGeometry, GENERATORS
from .spectral import NoiseModel, WEIGHTINGS

OUTPUT_DIR_ENV = "CSLIDAR_OUTDIR"

_SCHEMA = {
    "scene": {"source", "width", "height"},
    "chirp": {"preset", "nu0", "delta_nu", "period", "sample_rate", "waveform"},
    "noise": {"psnr", "beat_linewidth_fwhm", "seed"},
    "sensing": {"sample_ratio", "m", "seed"},
    "pipeline": {"wiener_nsr", "weighting"},
    "tv": {"alpha", "max_outer_iters", "inner_iters", "inner_tolerance",
           "penalty_data", "penalty_tv", "continuation"},
    "recon": {"mask_threshold", "support_fraction", "depth_floor_frac",
              "ls_tol", "ls_method", "smooth"},
    "illumination": {"total_power", "sigma_frac"},
    "geometry": {"aperture_diameter", "lo_power"},
    "sweep": {"ratios", "psnrs", "linewidths", "repetitions", "workers"},
    "output": {"dir"},
}


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


def _check_keys(doc: dict) -> None:
    for section, content in doc.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"section [{section}] must be a table")
        for key in content:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")


def _as_float(doc, section, key, default):
    value = doc.get(section, {}).get(key, default)
    if value is None:
        return None
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}.{key} must be a number ({exc})") from exc


def _as_int(doc, section, key, default):
    value = doc.get(section, {}).get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    return int(value)


@dataclass
class RunConfig:
    scene_source: str = "paper-demo"
    width: int = 32
    height: int = 32
    chirp: ChirpConfig = field(default_factory=lambda: preset("desk32"))
    noise: NoiseModel = field(default_factory=NoiseModel)
    sample_ratio: float | None = 0.25
    m: int | None = None
    seed: int = 0
    wiener_nsr: float | None = None   # None = match the injected noise level
    weighting: str = "linear"
    tv: TvConfig | None = None
    mask_threshold: float = 0.1
    support_fraction: float = 1.0 / 3.0
    depth_floor_frac: float = 0.01
    ls_tol: float = 1e-6
    ls_method: str = "cg"
    smooth_output: bool = False
    total_power: float = 1.0
    sigma_frac: float = 0.285
    geometry: CollectionGeometry = field(default_factory=CollectionGeometry)
    sweep_ratios: tuple | None = None
    sweep_psnrs: tuple | None = None
    sweep_linewidths: tuple | None = None
    sweep_repetitions: int = 10
    workers: int = 1
    output_dir: Path = field(default_factory=lambda: Path(
        os.environ.get(OUTPUT_DIR_ENV, "out")))

    def measurements(self, n: int) -> int:
        """Resolved projection count for an n-pixel scene."""
        if self.m is not None:
            m = self.m
        else:
            ratio = self.sample_ratio if self.sample_ratio is not None else 0.25
            m = int(round(ratio * n))
        if not 1 <= m <= n:
            raise ConfigError(f"m={m} outside [1, n={n}]; check sample_ratio/m")
        return m


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional TOML file plus override tables.

    ``overrides`` uses the same section/key layout as the file and wins on
    conflict (this is how CLI flags are merged).
    """
    doc: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML ({exc})") from exc
    for section, content in (overrides or {}).items():
        doc.setdefault(section, {}).update(
            {k: v for k, v in content.items() if v is not None})
    _check_keys(doc)
    return _build(doc)


def _build(doc: dict) -> RunConfig:
    cfg = RunConfig()

    scene = doc.get("scene", {})
    cfg.scene_source = str(scene.get("source", cfg.scene_source))
    cfg.width = _as_int(doc, "scene", "width", cfg.width)
    cfg.height = _as_int(doc, "scene", "height", cfg.height)
    if cfg.width < 1 or cfg.height < 1:
        raise ConfigError("scene.width and scene.height must be >= 1")
    if cfg.scene_source not in GENERATORS and not Path(cfg.scene_source).exists():
        raise ConfigError(
            f"scene.source {cfg.scene_source!r} is neither a built-in "
            f"({sorted(GENERATORS)}) nor an existing file")

    chirp_doc = doc.get("chirp", {})
    base = preset(str(chirp_doc.get("preset", "desk32")))
    try:
        cfg.chirp = ChirpConfig(
            nu0=_as_float(doc, "chirp", "nu0", base.nu0),
            delta_nu=_as_float(doc, "chirp", "delta_nu", base.delta_nu),
            period=_as_float(doc, "chirp", "period", base.period),
            sample_rate=_as_float(doc, "chirp", "sample_rate", base.sample_rate),
            waveform=str(chirp_doc.get("waveform", base.waveform)),
        )
    except ValueError as exc:
        raise ConfigError(f"chirp: {exc}") from exc

    cfg.seed = _as_int(doc, "sensing", "seed", _as_int(doc, "noise", "seed", 0) or 0) or 0
    try:
        cfg.noise = NoiseModel(
            beat_linewidth_fwhm=_as_float(doc, "noise", "beat_linewidth_fwhm", 2e6),
            psnr=_as_float(doc, "noise", "psnr", math.inf),
            seed=cfg.seed)
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from exc

    cfg.sample_ratio = _as_float(doc, "sensing", "sample_ratio", 0.25)
    cfg.m = _as_int(doc, "sensing", "m", None)

    cfg.wiener_nsr = _as_float(doc, "pipeline", "wiener_nsr", cfg.wiener_nsr)
    if cfg.wiener_nsr is not None and cfg.wiener_nsr < 0:
        raise ConfigError("pipeline.wiener_nsr must be >= 0")
    cfg.weighting = str(doc.get("pipeline", {}).get("weighting", cfg.weighting))
    if cfg.weighting not in WEIGHTINGS:
        raise ConfigError(f"pipeline.weighting must be one of {WEIGHTINGS}")

    if "tv" in doc:
        try:
            cfg.tv = TvConfig(
                alpha=_as_float(doc, "tv", "alpha", None),
                max_outer_iters=_as_int(doc, "tv", "max_outer_iters", 10),
                inner_iters=_as_int(doc, "tv", "inner_iters", 12),
                inner_tolerance=_as_float(doc, "tv", "inner_tolerance", 1e-4),
                penalty_data=_as_float(doc, "tv", "penalty_data", None),
                penalty_tv=_as_float(doc, "tv", "penalty_tv", None),
                continuation=_as_float(doc, "tv", "continuation", 2.0))
        except ValueError as exc:
            raise ConfigError(f"tv: {exc}") from exc

    cfg.mask_threshold = _as_float(doc, "recon", "mask_threshold", cfg.mask_threshold)
    if not 0 <= cfg.mask_threshold < 1:
        raise ConfigError("recon.mask_threshold must be in [0, 1)")
    cfg.support_fraction = _as_float(doc, "recon", "support_fraction",
                                     cfg.support_fraction)
    if not 0 < cfg.support_fraction <= 1:
        raise ConfigError("recon.support_fraction must be in (0, 1]")
    cfg.depth_floor_frac = _as_float(doc, "recon", "depth_floor_frac",
                                     cfg.depth_floor_frac)
    cfg.ls_tol = _as_float(doc, "recon", "ls_tol", cfg.ls_tol)
    cfg.ls_method = str(doc.get("recon", {}).get("ls_method", cfg.ls_method))
    if cfg.ls_method not in ("cg", "lbfgs"):
        raise ConfigError("recon.ls_method must be 'cg' or 'lbfgs'")
    smooth_value = doc.get("recon", {}).get("smooth", cfg.smooth_output)
    if not isinstance(smooth_value, bool):
        raise ConfigError("recon.smooth must be a boolean")
    cfg.smooth_output = smooth_value

    cfg.total_power = _as_float(doc, "illumination", "total_power", cfg.total_power)
    cfg.sigma_frac = _as_float(doc, "illumination", "sigma_frac", cfg.sigma_frac)
    if cfg.total_power <= 0 or cfg.sigma_frac <= 0:
        raise ConfigError("illumination.total_power and sigma_frac must be > 0")
    try:
        cfg.geometry = CollectionGeometry(
            aperture_diameter=_as_float(doc, "geometry", "aperture_diameter", 0.0508),
            lo_power=_as_float(doc, "geometry", "lo_power", 100e-6))
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc

    sweep = doc.get("sweep", {})
    if "ratios" in sweep:
        cfg.sweep_ratios = tuple(float(r) for r in sweep["ratios"])
    if "psnrs" in sweep:
        cfg.sweep_psnrs = tuple(
            math.inf if (isinstance(p, str) and p.lower() in ("inf", "infinity"))
            else float(p) for p in sweep["psnrs"])
    if "linewidths" in sweep:
        cfg.sweep_linewidths = tuple(float(v) for v in sweep["linewidths"])
    cfg.sweep_repetitions = _as_int(doc, "sweep", "repetitions", cfg.sweep_repetitions)
    if cfg.sweep_repetitions < 1:
        raise ConfigError("sweep.repetitions must be >= 1")
    cfg.workers = _as_int(doc, "sweep", "workers", cfg.workers)
    if cfg.workers < 1:
        raise ConfigError("sweep.workers must be >= 1")

    out = doc.get("output", {}).get("dir")
    if out is not None:
        cfg.output_dir = Path(str(out))
    return cfg


def config_metadata(cfg: RunConfig) -> dict:
    """JSON-serializable snapshot of the resolved configuration."""

    def clean(value):
        if isinstance(value, Path):
            return str(value)
        if isinstance(value, float) and math.isinf(value):
            return "inf"
        if isinstance(value, tuple):
            return [clean(v) for v in value]
        return value

    meta = {
        "scene": {"source": cfg.scene_source, "width": cfg.width,
                  "height": cfg.height},
        "chirp": {k: getattr(cfg.chirp, k) for k in
                  ("nu0", "delta_nu", "period", "sample_rate", "waveform")},
        "noise": {"psnr": clean(cfg.noise.psnr),
                  "beat_linewidth_fwhm": cfg.noise.beat_linewidth_fwhm,
                  "seed": cfg.seed},
        "sensing": {"sample_ratio": cfg.sample_ratio, "m": cfg.m,
                    "seed": cfg.seed},
        "pipeline": {"wiener_nsr": cfg.wiener_nsr, "weighting": cfg.weighting},
        "recon": {"mask_threshold": cfg.mask_threshold,
                  "support_fraction": cfg.support_fraction,
                  "depth_floor_frac": cfg.depth_floor_frac,
                  "ls_tol": cfg.ls_tol, "ls_method": cfg.ls_method,
                  "smooth": cfg.smooth_output},
        "illumination": {"total_power": cfg.total_power,
                         "sigma_frac": cfg.sigma_frac},
        "geometry": {"aperture_diameter": cfg.geometry.aperture_diameter,
                     "lo_power": cfg.geometry.lo_power},
        "output": {"dir": str(cfg.output_dir)},
    }
    if cfg.tv is not None:
        meta["tv"] = {k: getattr(cfg.tv, k) for k in cfg.tv.__dataclass_fields__}
    return meta
