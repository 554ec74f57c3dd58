"""Acquisition signal chain: spectra, broadening, noise, denoising, vectors.

Each projection splits the scene between two detectors according to the
+/-1 pattern; each detector trace is Fourier transformed, keeping the
positive-frequency magnitudes.  Laser linewidth enters as a circular
convolution with a unit-area Lorentzian, white noise is calibrated against
the brightest broadened component (the peak-SNR convention), and the chain
is undone with a wavelet shrinkage denoiser followed by Wiener
deconvolution of the known linewidth.  The two cleaned detector spectra
are differenced into a (1,-1) projection, and only two scalars survive per
projection: the summed amplitude and the frequency-weighted summed
amplitude.  Those 2m numbers are the entire stored acquisition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chirp import ChirpConfig, Return, ScopeTrace, beat_phases, synthesize_trace
from .scene import ReturnField
from .sensing import SensingMatrix
from .wavelets import SYM20_LO, dwt_max_level, wavedec_periodic, waverec_periodic

_MAD_TO_SIGMA = 0.67448975019608171  # Phi^-1(0.75): MAD of a Gaussian

# weighting schemes for the frequency-weighted measurement vector; "linear"
# is the reference scheme, the sub-linear ones are experimental knobs
WEIGHTINGS = ("linear", "sqrt", "log")


@dataclass
class Spectrum:
    """Positive-frequency magnitude spectrum (DC excluded)."""

    amplitudes: np.ndarray
    bin_width: float

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("spectrum contains non-finite amplitudes")

    @property
    def freqs(self) -> np.ndarray:
        """Bin-center frequencies in Hz: bin i holds (i+1) * bin_width."""
        return (np.arange(self.amplitudes.shape[-1]) + 1.0) * self.bin_width


@dataclass(frozen=True)
class NoiseModel:
    """Beat-note linewidth, peak-SNR level, and the master noise seed."""

    beat_linewidth_fwhm: float = 2e6
    psnr: float = np.inf
    seed: int = 0

    def __post_init__(self):
        if self.beat_linewidth_fwhm < 0:
            raise ValueError("linewidth FWHM must be >= 0")
        if not self.psnr > 0:
            raise ValueError("psnr must be positive (np.inf for noiseless)")

    def stream(self, *key: int) -> np.random.Generator:
        """Independent substream for an acquisition unit (projection, detector)."""
        return np.random.default_rng([int(self.seed)] + [int(k) for k in key])


@dataclass
class MeasurementVectors:
    """The 2m retained scalars: per-projection plain and frequency-weighted sums."""

    y_i: np.ndarray
    y_inu: np.ndarray
    num_bins: int
    bin_width: float
    weighting: str = "linear"

    def __post_init__(self):
        self.y_i = np.asarray(self.y_i, dtype=float)
        self.y_inu = np.asarray(self.y_inu, dtype=float)
        if self.y_i.shape != self.y_inu.shape or self.y_i.ndim != 1:
            raise ValueError("y_i and y_inu must be matching 1D vectors")
        if not (np.all(np.isfinite(self.y_i)) and np.all(np.isfinite(self.y_inu))):
            raise ValueError("measurement vectors must be finite")

    @property
    def m(self) -> int:
        return self.y_i.size

    def prefix(self, m: int) -> "MeasurementVectors":
        if not 1 <= m <= self.m:
            raise ValueError(f"prefix size {m} outside [1, {self.m}]")
        return MeasurementVectors(self.y_i[:m], self.y_inu[:m], self.num_bins,
                                  self.bin_width, self.weighting)


def positive_spectrum(trace: ScopeTrace) -> Spectrum:
    """Magnitudes of DFT bins 1..N (N = len//2); DC is dropped on purpose:
    zero depth is outside any scene and DC collects differencing residue."""
    samples = np.asarray(trace.samples, dtype=float)
    if samples.shape[-1] < 2:
        raise ValueError("trace too short for a spectrum")
    n = samples.shape[-1]
    mags = np.abs(np.fft.rfft(samples, axis=-1))[..., 1: n // 2 + 1]
    return Spectrum(mags, trace.sample_rate / n)


def lorentzian_kernel(num_bins: int, fwhm: float, bin_width: float) -> np.ndarray:
    """Unit-sum Lorentzian sampled on the circular bin-offset grid.

    L(f) = (fwhm/2pi) / (f^2 + (fwhm/2)^2) at signed offsets; fwhm = 0
    degenerates to a discrete delta.
    """
    if fwhm < 0:
        raise ValueError("fwhm must be >= 0")
    if fwhm == 0:
        kernel = np.zeros(num_bins)
        kernel[0] = 1.0
        return kernel
    k = np.arange(num_bins)
    offsets = np.where(k <= num_bins // 2, k, k - num_bins) * bin_width
    kernel = (fwhm / (2.0 * np.pi)) / (offsets**2 + (fwhm / 2.0) ** 2)
    return kernel / kernel.sum()


def broaden_values(values: np.ndarray, fwhm: float, bin_width: float) -> np.ndarray:
    if fwhm == 0:
        return np.array(values, dtype=float, copy=True)
    n = values.shape[-1]
    kernel = lorentzian_kernel(n, fwhm, bin_width)
    out = np.fft.irfft(np.fft.rfft(values, axis=-1) * np.fft.rfft(kernel), n=n, axis=-1)
    return out


def broaden(spec: Spectrum, fwhm: float) -> Spectrum:
    """Convolve with the beat-note Lorentzian line shape (mass preserving)."""
    return Spectrum(broaden_values(spec.amplitudes, fwhm, spec.bin_width),
                    spec.bin_width)


def inject_noise_values(values: np.ndarray, noise: NoiseModel,
                        rng: np.random.Generator) -> np.ndarray:
    """Gaussian white noise with sigma = max(values)/psnr, clamped at zero.

    ``values`` must be the broadened noiseless reference; its brightest
    component defines the peak SNR.  A zero reference (empty detector)
    yields zero noise power.
    """
    if not np.isfinite(noise.psnr):
        return np.array(values, dtype=float, copy=True)
    sigma = np.max(values, axis=-1, keepdims=True) / noise.psnr
    out = values + sigma * rng.standard_normal(values.shape)
    return np.maximum(out, 0.0)


def inject_noise(spec: Spectrum, noise: NoiseModel,
                 rng: np.random.Generator | None = None) -> Spectrum:
    if rng is None:
        rng = noise.stream()
    return Spectrum(inject_noise_values(spec.amplitudes, noise, rng), spec.bin_width)


def _soft(values: np.ndarray, thresh: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.maximum(np.abs(values) - thresh, 0.0)


def bayes_shrink_values(values: np.ndarray, lo=SYM20_LO) -> np.ndarray:
    """BayesShrink wavelet denoising on the last axis, batched.

    Noise scale comes from the finest detail band (MAD / 0.6745); each
    detail band gets the soft threshold sigma^2 / sigma_signal with
    sigma_signal^2 = max(var(band) - sigma^2, 0).  Bands that look like
    pure noise are zeroed outright.  Output is clamped at zero because the
    inputs are magnitude spectra.
    """
    values = np.asarray(values, dtype=float)
    lo = np.asarray(lo, dtype=float)
    levels = dwt_max_level(values.shape[-1], lo.size)
    if levels == 0:
        return np.maximum(values, 0.0)
    coeffs, lengths = wavedec_periodic(values, lo=lo, levels=levels)
    finest = coeffs[-1]
    sigma = np.median(np.abs(finest), axis=-1, keepdims=True) / _MAD_TO_SIGMA
    noise_var = sigma**2
    for i, band in enumerate(coeffs[1:], start=1):
        band_var = np.mean(band**2, axis=-1, keepdims=True)
        signal_sd = np.sqrt(np.maximum(band_var - noise_var, 0.0))
        thresh = np.divide(noise_var, signal_sd,
                           out=np.full_like(signal_sd, np.inf),
                           where=signal_sd > 0)
        coeffs[i] = _soft(band, thresh)
    out = waverec_periodic(coeffs, lengths, lo=lo)
    return np.maximum(out, 0.0)


def denoise_bayes_shrink(spec: Spectrum) -> Spectrum:
    return Spectrum(bayes_shrink_values(spec.amplitudes), spec.bin_width)


def auto_nsr(noise: NoiseModel, floor: float = 1e-3) -> float:
    """Wiener noise-to-signal ratio matched to the injected noise level.

    The injected per-bin noise power relative to the brightest broadened
    component is 1/psnr^2; feeding that to the Wiener filter keeps it from
    amplifying the denoiser's residual noise.  The floor covers modeling
    residue in the noiseless case.
    """
    if np.isfinite(noise.psnr):
        return max(floor, 1.0 / noise.psnr**2)
    return floor


def wiener_deconvolve_values(values: np.ndarray, kernel_fwhm: float,
                             nsr: float, bin_width: float) -> np.ndarray:
    """Wiener inverse filter X = Y H* / (|H|^2 + nsr) for the Lorentzian H."""
    if kernel_fwhm <= 0:
        raise ValueError("kernel fwhm must be > 0 (nothing to deconvolve)")
    if nsr < 0:
        raise ValueError("noise-to-signal ratio must be >= 0")
    n = values.shape[-1]
    kernel_f = np.fft.rfft(lorentzian_kernel(n, kernel_fwhm, bin_width))
    spectrum_f = np.fft.rfft(values, axis=-1)
    restored = spectrum_f * np.conj(kernel_f) / (np.abs(kernel_f) ** 2 + nsr)
    return np.maximum(np.fft.irfft(restored, n=n, axis=-1), 0.0)


def wiener_deconvolve(spec: Spectrum, kernel_fwhm: float, nsr: float) -> Spectrum:
    return Spectrum(
        wiener_deconvolve_values(spec.amplitudes, kernel_fwhm, nsr, spec.bin_width),
        spec.bin_width)


def accumulate(pairs, bin_width: float, weighting: str = "linear") -> MeasurementVectors:
    """Fold m cleaned (pos, neg) spectrum pairs into the two stored vectors.

    Per projection k: diff = pos - neg, y_i[k] = sum(diff),
    y_inu[k] = sum(diff * w(f)) with w the bin-center frequency in Hz for
    the default linear weighting.
    """
    pos_rows = []
    neg_rows = []
    for pos, neg in pairs:
        pa = pos.amplitudes if isinstance(pos, Spectrum) else np.asarray(pos)
        na = neg.amplitudes if isinstance(neg, Spectrum) else np.asarray(neg)
        if pa.shape != na.shape:
            raise ValueError("detector spectra lengths differ")
        pos_rows.append(pa)
        neg_rows.append(na)
    if not pos_rows:
        raise ValueError("no projections to accumulate")
    if len({row.shape for row in pos_rows}) != 1:
        raise ValueError("spectrum lengths differ across projections")
    return measurement_vectors_from_arrays(np.array(pos_rows), np.array(neg_rows),
                                           bin_width, weighting)


def frequency_weights(num_bins: int, bin_width: float, weighting: str) -> np.ndarray:
    freqs = (np.arange(num_bins) + 1.0) * bin_width
    if weighting == "linear":
        return freqs
    if weighting == "sqrt":
        return np.sqrt(freqs)
    if weighting == "log":
        return np.log1p(freqs / bin_width)
    raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")


def measurement_vectors_from_arrays(pos: np.ndarray, neg: np.ndarray,
                                    bin_width: float,
                                    weighting: str = "linear") -> MeasurementVectors:
    diff = pos - neg
    weights = frequency_weights(diff.shape[-1], bin_width, weighting)
    return MeasurementVectors(y_i=diff.sum(axis=-1), y_inu=diff @ weights,
                              num_bins=diff.shape[-1], bin_width=bin_width,
                              weighting=weighting)


# ---------------------------------------------------------------------------
# Acquisition orchestration
# ---------------------------------------------------------------------------

def _masked_returns(field: ReturnField, mask: np.ndarray):
    amps = field.amplitude.ravel() * mask
    delays = field.delay.ravel()
    idx = np.nonzero(amps > 0)[0]
    return [Return(amplitude=amps[i], delay=delays[i]) for i in idx]


def acquire_projection(field: ReturnField, A: SensingMatrix, k: int,
                       cfg: ChirpConfig, noise: NoiseModel,
                       lo_amplitude: float, nsr: float | None = None,
                       record: dict | None = None):
    """Run the full per-projection chain for row k; returns cleaned spectra.

    The two detectors see the scene gated by the (1,0) and (0,1) masks of
    row k; each trace runs through spectrum -> broaden -> noise -> denoise
    -> deconvolve with its own noise substream.  ``record``, if given, is
    filled with the five pipeline stages per detector for debugging.
    """
    if nsr is None:
        nsr = auto_nsr(noise)
    mask_pos, mask_neg = A.split_pattern(k)
    cleaned = []
    for det, mask in enumerate((mask_pos, mask_neg)):
        trace = synthesize_trace(_masked_returns(field, mask), lo_amplitude, cfg)
        spec = positive_spectrum(trace)
        broadened = broaden(spec, noise.beat_linewidth_fwhm)
        noisy = inject_noise(broadened, noise, rng=noise.stream(0, k, det))
        denoised = denoise_bayes_shrink(noisy)
        if noise.beat_linewidth_fwhm > 0:
            final = wiener_deconvolve(denoised, noise.beat_linewidth_fwhm, nsr)
        else:
            final = denoised
        if record is not None:
            record.setdefault(det, {}).update(
                clean=spec, broadened=broadened, noisy=noisy,
                denoised=denoised, deconvolved=final)
        cleaned.append(final)
    return cleaned[0], cleaned[1]


def clean_projection_spectra(field: ReturnField, A: SensingMatrix,
                             cfg: ChirpConfig, lo_amplitude: float,
                             fwhm: float, pixel_chunk: int = 2048,
                             projection_chunk: int = 512):
    """Broadened noiseless detector spectra for every row of A, batched.

    Returns (pos, neg) arrays of shape (m, N).  Traces are built as one
    matrix product between the per-pixel beat sinusoids and the masked
    amplitudes, chunked to bound memory; the result matches the
    per-projection path to rounding.
    """
    amps = field.amplitude.ravel()
    delays = field.delay.ravel()
    active = np.nonzero(amps > 0)[0]
    n_samples = cfg.samples_per_sweep
    num_bins = cfg.num_bins
    pos = np.zeros((A.m, num_bins))
    neg = np.zeros((A.m, num_bins))
    if active.size == 0:
        return pos, neg

    sinusoids = []  # per pixel chunk: (samples, chunk) matrices
    for start in range(0, active.size, pixel_chunk):
        idx = active[start: start + pixel_chunk]
        sinusoids.append(np.sin(beat_phases(delays[idx], cfg, cfg.period)))

    scale = cfg.eps0_c * lo_amplitude
    for k0 in range(0, A.m, projection_chunk):
        k1 = min(k0 + projection_chunk, A.m)
        unit = np.zeros((k1 - k0, A.m))
        unit[np.arange(k1 - k0), np.arange(k0, k1)] = 1.0
        rows = A.apply_adjoint(unit)[:, active]          # (chunk_m, n_active)
        weights_pos = np.where(rows > 0, amps[active], 0.0)
        weights_neg = np.where(rows < 0, amps[active], 0.0)
        traces = np.zeros((2 * (k1 - k0), n_samples))
        for ci, g in enumerate(sinusoids):
            lo_px, hi_px = ci * pixel_chunk, ci * pixel_chunk + g.shape[1]
            block = np.concatenate([weights_pos[:, lo_px:hi_px],
                                    weights_neg[:, lo_px:hi_px]], axis=0)
            traces += (g @ block.T).T
        traces *= scale
        mags = np.abs(np.fft.rfft(traces, axis=-1))[:, 1: num_bins + 1]
        mags = broaden_values(mags, fwhm, cfg.bin_width)
        pos[k0:k1] = mags[: k1 - k0]
        neg[k0:k1] = mags[k1 - k0:]
    return pos, neg


def process_noisy(clean_pos: np.ndarray, clean_neg: np.ndarray,
                  noise: NoiseModel, cfg: ChirpConfig, nsr: float | None = None,
                  weighting: str = "linear",
                  stream_prefix: tuple = ()) -> MeasurementVectors:
    """Noise + denoise + deconvolve the clean spectra, then accumulate.

    Per-projection noise substreams are keyed (0, *stream_prefix, k, det),
    so results are independent of batching and identical to the stepwise
    per-projection path.
    """
    if nsr is None:
        nsr = auto_nsr(noise)
    m = clean_pos.shape[0]
    processed = []
    for det, clean in enumerate((clean_pos, clean_neg)):
        noisy = np.empty_like(clean)
        for k in range(m):
            rng = noise.stream(0, *stream_prefix, k, det)
            noisy[k] = inject_noise_values(clean[k], noise, rng)
        denoised = bayes_shrink_values(noisy)
        if noise.beat_linewidth_fwhm > 0:
            final = wiener_deconvolve_values(denoised, noise.beat_linewidth_fwhm,
                                             nsr, cfg.bin_width)
        else:
            final = denoised
        processed.append(final)
    return measurement_vectors_from_arrays(processed[0], processed[1],
                                           cfg.bin_width, weighting)


def acquire(field: ReturnField, A: SensingMatrix, cfg: ChirpConfig,
            noise: NoiseModel, lo_amplitude: float, nsr: float | None = None,
            weighting: str = "linear") -> MeasurementVectors:
    """Full compressive acquisition: m projections down to 2m scalars."""
    pos, neg = clean_projection_spectra(field, A, cfg, lo_amplitude,
                                        noise.beat_linewidth_fwhm)
    return process_noisy(pos, neg, noise, cfg, nsr=nsr, weighting=weighting)
