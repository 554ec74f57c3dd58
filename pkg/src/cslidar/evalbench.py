"""Experiment harness: raster baseline, accuracy sweeps, flux accounting.

The sweep draws one critically sampled acquisition per repetition and
reuses row prefixes for every smaller sample ratio, mirroring how a single
recorded measurement vector can be truncated.  Mean squared depth error is
computed on the raw (non-smoothed) reconstructions against ground truth;
per-object uncertainty is the pixel-wise standard deviation of the depth
error across repetitions, averaged over the object's pixels.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chirp import ChirpConfig, beat_phases
from .recon import DepthMap, ReconstructionError, TvConfig, reconstruct
from .scene import (CollectionGeometry, ReturnField, Scene,
                    gaussian_illumination, returns_from_scene)
from .sensing import SensingMatrix
from .spectral import (MeasurementVectors, NoiseModel, auto_nsr,
                       bayes_shrink_values, broaden_values,
                       clean_projection_spectra, inject_noise_values,
                       process_noisy, wiener_deconvolve_values)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of (sample ratio, peak SNR, linewidth) cells with repetitions."""

    sample_ratios: tuple = tuple(np.round(np.arange(0.02, 1.0001, 0.02), 4))
    psnr_levels: tuple = (1.25, 2.5, 5.0, 10.0, 20.0, np.inf)
    repetitions: int = 10
    linewidths: tuple = (2e6, 1e6, 1e5)
    seed: int = 0

    def __post_init__(self):
        ratios = tuple(self.sample_ratios)
        if not ratios or any(not 0 < r <= 1 for r in ratios):
            raise ValueError("sample ratios must lie in (0, 1]")
        if list(ratios) != sorted(ratios):
            raise ValueError("sample ratios must be ascending")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        object.__setattr__(self, "sample_ratios", ratios)
        object.__setattr__(self, "psnr_levels", tuple(self.psnr_levels))
        object.__setattr__(self, "linewidths", tuple(self.linewidths))


@dataclass
class SweepCell:
    ratio: float
    psnr: float
    linewidth: float
    mean_mse: float
    sem_mse: float
    toroid_std: float    # nan when the scene has no labeled object
    mean_runtime: float


@dataclass
class SweepResult:
    cells: list = field(default_factory=list)

    def rows(self):
        return list(self.cells)

    def cell(self, ratio: float, psnr: float, linewidth: float) -> SweepCell:
        for c in self.cells:
            if (np.isclose(c.ratio, ratio) and c.linewidth == linewidth
                    and (c.psnr == psnr or (np.isinf(c.psnr) and np.isinf(psnr)))):
                return c
        raise KeyError(f"no sweep cell ({ratio}, {psnr}, {linewidth})")


def mse(dmap: DepthMap, truth: Scene) -> float:
    """Mean squared depth error over all pixels, invalid pixels included
    at their full truth^2 penalty (their reconstructed depth is zero)."""
    if dmap.depths.shape != truth.depth.shape:
        raise ValueError("depth map and scene dimensions differ")
    err = dmap.depths - truth.depth
    return float(np.mean(err * err))


def object_depth_uncertainty(reconstructions, truth: Scene, label: str) -> float:
    """Mean over labeled pixels of the across-repetition std of depth error."""
    if len(reconstructions) < 2:
        raise ValueError("need at least two reconstructions")
    mask = truth.label_mask(label)
    errors = np.stack([d.depths - truth.depth for d in reconstructions])
    stds = np.std(errors[:, mask], axis=0, ddof=1)
    return float(np.mean(stds))


def raster_baseline(scene: Scene, cfg: ChirpConfig, noise: NoiseModel,
                    geometry: CollectionGeometry | None = None,
                    illumination: np.ndarray | None = None,
                    use_deconvolution: bool = False, nsr: float | None = None,
                    rep: int = 0) -> DepthMap:
    """Pixel-by-pixel scan: one single-return trace per pixel, the spectral
    chain, then peak-bin ranging.

    Deconvolution is off by default: the mode of the broadened line is its
    center, so peak finding is linewidth robust (flag available).  ``rep``
    selects an independent noise substream per repetition.
    """
    geometry = geometry or CollectionGeometry()
    if illumination is None:
        illumination = gaussian_illumination(scene.height, scene.width)
    fld = returns_from_scene(scene, illumination, geometry, cfg)
    amps = fld.amplitude.ravel()
    delays = fld.delay.ravel()
    active = np.nonzero(amps > 0)[0]
    depths = np.zeros(scene.num_pixels)
    valid = np.zeros(scene.num_pixels, dtype=bool)
    scale = cfg.eps0_c * geometry.lo_amplitude
    chunk = max(1, int(2**24 // max(cfg.samples_per_sweep, 1)))
    for start in range(0, active.size, chunk):
        idx = active[start: start + chunk]
        traces = scale * amps[idx, None] * np.sin(beat_phases(delays[idx], cfg, cfg.period)).T
        mags = np.abs(np.fft.rfft(traces, axis=-1))[:, 1: cfg.num_bins + 1]
        mags = broaden_values(mags, noise.beat_linewidth_fwhm, cfg.bin_width)
        for row, pixel in enumerate(idx):
            rng = noise.stream(1, rep, int(pixel))
            mags[row] = inject_noise_values(mags[row], noise, rng)
        mags = bayes_shrink_values(mags)
        if use_deconvolution and noise.beat_linewidth_fwhm > 0:
            mags = wiener_deconvolve_values(mags, noise.beat_linewidth_fwhm,
                                            auto_nsr(noise) if nsr is None else nsr,
                                            cfg.bin_width)
        peaks = np.argmax(mags, axis=-1)
        peak_vals = mags[np.arange(mags.shape[0]), peaks]
        freqs = (peaks + 1.0) * cfg.bin_width
        dist = freqs * cfg.period * cfg.c / (2.0 * cfg.delta_nu)
        ok = peak_vals > 0
        depths[idx[ok]] = dist[ok]
        valid[idx[ok]] = True
    shape = scene.depth.shape
    return DepthMap(depths=depths.reshape(shape), mask=valid.reshape(shape))


def raster_uncertainty(scene: Scene, cfg: ChirpConfig, noise: NoiseModel,
                       label: str = "toroid", repetitions: int = 10,
                       **kwargs) -> float:
    maps = [raster_baseline(scene, cfg, noise, rep=r, **kwargs)
            for r in range(repetitions)]
    return object_depth_uncertainty(maps, scene, label)


@dataclass(frozen=True)
class FluxReport:
    """Per-detector photon counts for array vs compressive acquisition."""

    array_photons: float        # R t / alpha: flux split over alpha array pixels
    compressive_photons: float  # R t / (2m): half the flux, 1/m of the time
    ratio: float                # compressive / array advantage

    def as_dict(self):
        return {"array_photons": self.array_photons,
                "compressive_photons": self.compressive_photons,
                "ratio": self.ratio}


def flux_accounting(rate: float, integration_time: float, m: int,
                    alpha: int, beta: int | None = None) -> FluxReport:
    """Photon budget comparison for a return flux ``rate`` over a total
    integration time, alpha illuminated pixels on a beta-pixel array
    versus m compressive projections on one detector."""
    beta = alpha if beta is None else beta
    if rate <= 0 or integration_time <= 0:
        raise ValueError("rate and integration time must be positive")
    if m < 1 or alpha < 1:
        raise ValueError("m and alpha must be >= 1")
    if alpha > beta:
        raise ValueError("alpha (lit pixels) cannot exceed beta (array pixels)")
    total = rate * integration_time
    array_photons = total / alpha
    compressive_photons = total / (2.0 * m)
    return FluxReport(array_photons=array_photons,
                      compressive_photons=compressive_photons,
                      ratio=compressive_photons / array_photons)


# ---------------------------------------------------------------------------
# Accuracy sweep
# ---------------------------------------------------------------------------

def _sweep_rep(args):
    """All (psnr, ratio) results for one repetition at one linewidth."""
    (rep, lw_index, linewidth, spec, scene, cfg, geometry, tv_dict,
     recon_kwargs) = args
    field_ = returns_from_scene(
        scene, gaussian_illumination(scene.height, scene.width), geometry, cfg)
    n = scene.num_pixels
    A_full = SensingMatrix.randomized(n, n, seed=[spec.seed, rep])
    clean_pos, clean_neg = clean_projection_spectra(
        field_, A_full, cfg, geometry.lo_amplitude, linewidth)
    tv = TvConfig(**tv_dict) if tv_dict else None

    mses = {}
    depths = {}
    runtimes = {}
    for p_index, psnr in enumerate(spec.psnr_levels):
        noise = NoiseModel(beat_linewidth_fwhm=linewidth, psnr=psnr,
                           seed=spec.seed)
        mv_full = process_noisy(clean_pos, clean_neg, noise, cfg,
                                stream_prefix=(lw_index, p_index, rep),
                                nsr=recon_kwargs.get("nsr"))
        for ratio in spec.sample_ratios:
            m = max(1, int(round(ratio * n)))
            t0 = time.perf_counter()
            try:
                result = reconstruct(
                    A_full.prefix(m), mv_full.prefix(m), tv, cfg,
                    mask_threshold=recon_kwargs.get("mask_threshold", 0.1),
                    support_fraction=recon_kwargs.get("support_fraction", 1 / 3),
                )
                dmap = result.depth_map
            except ReconstructionError:
                dmap = DepthMap(depths=np.zeros(scene.depth.shape),
                                mask=np.zeros(scene.depth.shape, dtype=bool))
            runtimes[(psnr, ratio)] = time.perf_counter() - t0
            mses[(psnr, ratio)] = mse(dmap, scene)
            depths[(psnr, ratio)] = dmap.depths
    return rep, mses, depths, runtimes


def run_sweep(spec: SweepSpec, scene: Scene, cfg: ChirpConfig,
              geometry: CollectionGeometry | None = None,
              tv: TvConfig | None = None, workers: int = 1,
              label: str = "toroid", progress=None,
              **recon_kwargs) -> SweepResult:
    """Run the full accuracy study; deterministic for a given spec seed.

    Repetitions are independent (fresh sensing matrix and noise streams)
    and may run in parallel; each is acquired once at m = n per linewidth
    and re-reconstructed from row prefixes at every requested ratio.
    """
    geometry = geometry or CollectionGeometry()
    has_label = scene.labels is not None and label in scene.label_names
    tv_dict = None
    if tv is not None:
        tv_dict = {k: getattr(tv, k) for k in tv.__dataclass_fields__}
    result = SweepResult()
    for lw_index, linewidth in enumerate(spec.linewidths):
        jobs = [(rep, lw_index, linewidth, spec, scene, cfg, geometry,
                 tv_dict, recon_kwargs) for rep in range(spec.repetitions)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_sweep_rep, jobs))
        else:
            outcomes = []
            for job in jobs:
                outcomes.append(_sweep_rep(job))
                if progress is not None:
                    progress(f"linewidth {linewidth:g} Hz: repetition "
                             f"{job[0] + 1}/{spec.repetitions} done")
        outcomes.sort(key=lambda item: item[0])
        for psnr in spec.psnr_levels:
            for ratio in spec.sample_ratios:
                cell_mses = np.array([o[1][(psnr, ratio)] for o in outcomes])
                times = np.array([o[3][(psnr, ratio)] for o in outcomes])
                if has_label and spec.repetitions >= 2:
                    maps = [DepthMap(depths=o[2][(psnr, ratio)],
                                     mask=o[2][(psnr, ratio)] > 0)
                            for o in outcomes]
                    toroid = object_depth_uncertainty(maps, scene, label)
                else:
                    toroid = float("nan")
                sem = (float(np.std(cell_mses, ddof=1) / np.sqrt(len(cell_mses)))
                       if len(cell_mses) > 1 else 0.0)
                result.cells.append(SweepCell(
                    ratio=float(ratio), psnr=float(psnr),
                    linewidth=float(linewidth),
                    mean_mse=float(np.mean(cell_mses)), sem_mse=sem,
                    toroid_std=toroid, mean_runtime=float(np.mean(times))))
    return result
