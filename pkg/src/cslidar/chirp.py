"""Linear-sweep chirp physics: beat notes, ranging, and heterodyne traces.

A laser swept from nu0 over a bandwidth delta_nu in a period T and mixed
with a delayed copy of itself produces a beat note at delta_nu * tau / T,
which maps one-to-one onto target distance.  The synthesizer below builds
the balanced-detector difference trace for an arbitrary set of returns,
keeping only the difference-frequency terms (sum-frequency terms sit at
optical frequencies and are removed by any realistic detector bandwidth).

The sweep phase is evaluated exactly through sweep resets, so a sawtooth
ramp reproduces the unresolvable high-frequency interference a delayed
return creates against a freshly reset local oscillator, and a triangle
ramp produces the corresponding low-frequency artifact instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 2.998e8
# permittivity of free space times c, the radiometric prefactor relating
# field-amplitude products to detected power; cancels in depth ratios
EPS0_C = 8.8541878128e-12 * SPEED_OF_LIGHT

_WAVEFORMS = ("sawtooth", "triangle")


@dataclass(frozen=True)
class ChirpConfig:
    """Sweep parameters and scope sampling for one acquisition channel.

    Attributes
    ----------
    nu0 : float
        Optical start frequency of the sweep (Hz).
    delta_nu : float
        Sweep bandwidth (Hz).
    period : float
        Sweep period T (s); one trace spans exactly one period.
    sample_rate : float
        Scope sampling frequency (Hz).
    waveform : str
        "sawtooth" (default) or "triangle" ramp shape.
    """

    nu0: float = SPEED_OF_LIGHT / 780e-9
    delta_nu: float = 100e9
    period: float = 1e-3
    sample_rate: float = 33.3e6
    waveform: str = "sawtooth"
    c: float = SPEED_OF_LIGHT
    eps0_c: float = EPS0_C

    def __post_init__(self):
        if not (self.delta_nu > 0 and self.period > 0 and self.sample_rate > 0):
            raise ValueError("delta_nu, period and sample_rate must be positive")
        if self.waveform not in _WAVEFORMS:
            raise ValueError(f"waveform must be one of {_WAVEFORMS}, got {self.waveform!r}")
        if self.samples_per_sweep < 2:
            raise ValueError("sample_rate * period must give at least 2 samples")
        if not np.isfinite(self.max_depth) or self.max_depth <= 0:
            raise ValueError("unambiguous depth range is not positive and finite")

    @property
    def samples_per_sweep(self) -> int:
        return int(round(self.sample_rate * self.period))

    @property
    def num_bins(self) -> int:
        """Positive-frequency bin count N used by the spectral chain."""
        return self.samples_per_sweep // 2

    @property
    def bin_width(self) -> float:
        """Spectral bin spacing in Hz (1/T for an integer number of samples)."""
        return self.sample_rate / self.samples_per_sweep

    @property
    def depth_resolution(self) -> float:
        """Depth change spanned by one spectral bin, c/(2 delta_nu) meters."""
        return self.bin_width * self.period * self.c / (2.0 * self.delta_nu)

    @property
    def max_depth(self) -> float:
        """Unambiguous range: depth whose beat note sits at Nyquist."""
        return (self.sample_rate / 2.0) * self.period * self.c / (2.0 * self.delta_nu)


@dataclass(frozen=True)
class Return:
    """One reflected field component: amplitude and round-trip delay."""

    amplitude: float
    delay: float

    def __post_init__(self):
        if not (self.delay >= 0 and np.isfinite(self.delay)):
            raise ValueError(f"delay must be finite and >= 0, got {self.delay}")
        if not (self.amplitude >= 0 and np.isfinite(self.amplitude)):
            raise ValueError(f"amplitude must be finite and >= 0, got {self.amplitude}")


@dataclass
class ScopeTrace:
    """Real-valued difference-detector samples over one sweep."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("trace contains non-finite samples")


def beat_frequency(delay: float, cfg: ChirpConfig) -> float:
    """Beat-note frequency delta_nu * delay / period for a round-trip delay."""
    if delay < 0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    if delay >= cfg.period:
        raise ValueError(f"delay {delay} exceeds one sweep period {cfg.period}")
    return cfg.delta_nu * delay / cfg.period


def distance_from_frequency(nu: float, cfg: ChirpConfig) -> float:
    """Target distance nu * T * c / (2 delta_nu) for a beat frequency."""
    if nu < 0:
        raise ValueError(f"frequency must be >= 0, got {nu}")
    return nu * cfg.period * cfg.c / (2.0 * cfg.delta_nu)


def coherence_length(linewidth_fwhm: float, cfg: ChirpConfig) -> float:
    """Laser coherence length c / (pi * FWHM) for a Lorentzian line."""
    if linewidth_fwhm <= 0:
        raise ValueError(f"linewidth must be > 0, got {linewidth_fwhm}")
    return cfg.c / (np.pi * linewidth_fwhm)


def sweep_phase(t: np.ndarray, cfg: ChirpConfig) -> np.ndarray:
    """Accumulated optical phase (cycles) of the swept laser at times t.

    Sawtooth: within each period s = t mod T the phase is
    nu0*s + (delta_nu / 2T) s^2, resetting identically every sweep (each
    period emits the same chirp).  Triangle: the instantaneous frequency
    ramps up over one period and back down over the next, with the phase
    integrated continuously across segments.
    """
    t = np.asarray(t, dtype=float)
    T = cfg.period
    if cfg.waveform == "sawtooth":
        s = np.mod(t, T)
        return cfg.nu0 * s + cfg.delta_nu / (2.0 * T) * s * s
    # triangle: period 2T; up-ramp on [0, T), down-ramp on [T, 2T)
    s = np.mod(t, 2.0 * T)
    up = s < T
    phase = np.empty_like(s)
    su = s[np.nonzero(up)]
    phase[np.nonzero(up)] = cfg.nu0 * su + cfg.delta_nu / (2.0 * T) * su * su
    sd = s[np.nonzero(~up)] - T
    # integral of nu0 + delta_nu*(1 - u/T) from the up-ramp endpoint
    up_total = cfg.nu0 * T + cfg.delta_nu * T / 2.0
    phase[np.nonzero(~up)] = (
        up_total + (cfg.nu0 + cfg.delta_nu) * sd - cfg.delta_nu / (2.0 * T) * sd * sd
    )
    return phase


def beat_phases(delays: np.ndarray, cfg: ChirpConfig, duration: float) -> np.ndarray:
    """Difference phase (radians) between LO and each delayed return.

    Returns an array of shape (samples, len(delays)); column j holds
    2*pi*[psi(t) - psi(t - tau_j)] at the scope sample times.  For samples
    with t >= tau the phase reduces to 2*pi*[(delta_nu tau/T) t + phi] with
    phi = nu0 tau - (delta_nu/2T) tau^2; earlier samples see the previous
    ramp (reset for sawtooth, down-sweep for triangle).

    The piecewise difference is expanded analytically rather than formed by
    subtracting two accumulated phases: at optical nu0 the accumulated
    phase reaches ~1e11 cycles and naive subtraction would lose several
    significant digits of beat phase per sample.
    """
    n_samples = int(round(cfg.sample_rate * duration))
    # mid-sample trigger: the scope samples at (i + 1/2)/fs, so sweeps whose
    # delays are shorter than half a sample period contain no wrapped samples
    t = (np.arange(n_samples) + 0.5) / cfg.sample_rate
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    T = cfg.period
    rate = cfg.delta_nu / T
    s = np.mod(t, T)[:, None]
    tau = delays[None, :]

    # steady state, t >= tau: linear beat at rate*tau plus the constant phase
    steady = tau * (cfg.nu0 - 0.5 * rate * tau) + rate * tau * s
    wrap = s < tau
    sd = s + (T - tau)   # signal position on the previous ramp
    if cfg.waveform == "sawtooth":
        # LO restarted, signal still on the previous (identical) ramp
        wrapped = (tau - T) * (cfg.nu0 + 0.5 * rate * (s + sd))
    else:
        # signal on the previous down-sweep, phase continued through the
        # up-ramp total nu0*T + delta_nu*T/2
        wrapped = (cfg.nu0 * (tau - 2.0 * T) - 0.5 * cfg.delta_nu * T
                   - cfg.delta_nu * sd + 0.5 * rate * (s * s + sd * sd))
    cycles = np.where(wrap, wrapped, steady)
    return 2.0 * np.pi * cycles


def synthesize_trace(returns: Sequence[Return], lo_amplitude: float,
                     cfg: ChirpConfig, duration: float | None = None) -> ScopeTrace:
    """Balanced-detector difference trace for a set of returns.

    samples[t] = eps0*c * sum_j A_LO * A_j * sin(2 pi (psi(t) - psi(t-tau_j)))
    over one sweep period.  Linear in the returns; an empty set yields the
    all-zero trace.
    """
    if duration is None:
        duration = cfg.period
    if not np.isfinite(lo_amplitude):
        raise ValueError("lo_amplitude must be finite")
    n_samples = int(round(cfg.sample_rate * duration))
    if not returns:
        return ScopeTrace(np.zeros(n_samples), cfg.sample_rate)
    amps = np.array([r.amplitude for r in returns], dtype=float)
    delays = np.array([r.delay for r in returns], dtype=float)
    if not np.all(np.isfinite(amps)):
        raise ValueError("non-finite return amplitude")
    if np.any(delays >= cfg.period):
        raise ValueError("return delay exceeds one sweep period")
    phases = beat_phases(delays, cfg, duration)
    samples = cfg.eps0_c * lo_amplitude * (np.sin(phases) @ amps)
    return ScopeTrace(samples, cfg.sample_rate)


# Chirp presets.  The full-scale preset mirrors a realizable bench: 100 GHz
# sweep over 1 ms sampled at 33.3 MHz (25 m range, 1.5 mm bins).  The desk
# presets shrink the sweep bandwidth so the same 0-22.5 m scene fits into a
# far smaller record (10 MHz sampling, 4.5 mm bins) for fast simulation.
PRESETS = {
    "paper128": ChirpConfig(),
    "desk32": ChirpConfig(delta_nu=33.3e9, sample_rate=10e6),
}


def preset(name: str) -> ChirpConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown chirp preset {name!r}; choose from {sorted(PRESETS)}")
