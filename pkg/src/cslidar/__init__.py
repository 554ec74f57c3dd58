"""Compressive FMCW LiDAR depth-mapping simulator."""

from .chirp import (ChirpConfig, Return, ScopeTrace, beat_frequency,
                    coherence_length, distance_from_frequency, preset,
                    synthesize_trace)
from .scene import (CollectionGeometry, Scene, builtin_scene,
                    gaussian_illumination, load_scene, returns_from_scene,
                    save_scene)
from .sensing import SensingMatrix, fwht
from .spectral import (MeasurementVectors, NoiseModel, Spectrum, accumulate,
                       acquire, acquire_projection, broaden,
                       denoise_bayes_shrink, inject_noise, positive_spectrum,
                       wiener_deconvolve)
from .recon import (DepthMap, SupportSet, TvConfig, extract_depth,
                    ls_on_support, make_mask, reconstruct, select_support,
                    smooth, tv_minimize)
from .evalbench import (SweepResult, SweepSpec, flux_accounting, mse,
                        object_depth_uncertainty, raster_baseline, run_sweep)

__version__ = "0.1.0"
