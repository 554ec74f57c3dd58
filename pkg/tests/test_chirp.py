import numpy as np
import pytest
from hypothesis import given, strategies as st

from cslidar.chirp import (ChirpConfig, Return, beat_frequency, beat_phases,
                           coherence_length, distance_from_frequency, preset,
                           sweep_phase, synthesize_trace)


@pytest.fixture(scope="module")
def paper_cfg():
    return preset("paper128")


class TestBeatArithmetic:
    def test_25m_object_gives_16p67_mhz(self, paper_cfg):
        tau = 2 * 25.0 / paper_cfg.c
        assert beat_frequency(tau, paper_cfg) == pytest.approx(16.67e6, rel=1e-3)

    def test_zero_delay(self, paper_cfg):
        assert beat_frequency(0.0, paper_cfg) == 0.0

    def test_roundtrip_through_distance(self, paper_cfg):
        tau = 2 * 22.0 / paper_cfg.c
        nu = beat_frequency(tau, paper_cfg)
        assert distance_from_frequency(nu, paper_cfg) == pytest.approx(22.0, rel=1e-9)

    def test_rejects_out_of_sweep_delays(self, paper_cfg):
        with pytest.raises(ValueError):
            beat_frequency(-1e-9, paper_cfg)
        with pytest.raises(ValueError):
            beat_frequency(paper_cfg.period, paper_cfg)

    def test_distance_anchors(self, paper_cfg):
        assert distance_from_frequency(16.67e6, paper_cfg) == pytest.approx(25.0, rel=1e-3)
        assert distance_from_frequency(1e3, paper_cfg) == pytest.approx(1.5e-3, rel=1e-3)
        assert distance_from_frequency(0.0, paper_cfg) == 0.0
        with pytest.raises(ValueError):
            distance_from_frequency(-1.0, paper_cfg)

    @given(st.floats(min_value=1e-3, max_value=24.9))
    def test_roundtrip_property(self, d):
        cfg = preset("paper128")
        nu = beat_frequency(2 * d / cfg.c, cfg)
        assert distance_from_frequency(nu, cfg) == pytest.approx(d, rel=1e-9)


class TestCoherence:
    def test_1mhz_is_95m(self, paper_cfg):
        assert coherence_length(1e6, paper_cfg) == pytest.approx(95.0, abs=1.0)

    def test_inverse_proportionality(self, paper_cfg):
        assert coherence_length(2e6, paper_cfg) == pytest.approx(
            coherence_length(1e6, paper_cfg) / 2)

    def test_arithmetic_oracle(self, paper_cfg):
        assert coherence_length(50e3, paper_cfg) == pytest.approx(
            paper_cfg.c / (np.pi * 50e3), rel=1e-12)

    def test_rejects_nonpositive(self, paper_cfg):
        with pytest.raises(ValueError):
            coherence_length(0.0, paper_cfg)


class TestConfigInvariants:
    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            ChirpConfig(delta_nu=-1.0)
        with pytest.raises(ValueError):
            ChirpConfig(period=0.0)
        with pytest.raises(ValueError):
            ChirpConfig(waveform="sine")
        with pytest.raises(ValueError):
            ChirpConfig(sample_rate=100.0, period=1e-3)  # < 2 samples

    def test_derived_quantities(self):
        cfg = preset("desk32")
        assert cfg.samples_per_sweep == 10000
        assert cfg.num_bins == 5000
        assert cfg.bin_width == pytest.approx(1e3)
        assert cfg.max_depth == pytest.approx(22.5, abs=0.1)
        assert cfg.max_depth == pytest.approx(
            cfg.sample_rate / 2 * cfg.period * cfg.c / (2 * cfg.delta_nu))


def _onbin_return(cfg, bins, amplitude=1.0):
    """Return whose beat note lands exactly on DFT bin index `bins` (1-based)."""
    d = bins * cfg.depth_resolution
    return Return(amplitude=amplitude, delay=2 * d / cfg.c), d


class TestSynthesize:
    def test_empty_returns_zero_trace(self, desk_cfg):
        trace = synthesize_trace([], 1.0, desk_cfg)
        assert trace.samples.shape == (desk_cfg.samples_per_sweep,)
        assert np.all(trace.samples == 0.0)

    def test_single_return_matches_closed_form(self, desk_cfg):
        # steady-state samples follow eps0*c*A_LO*A*sin(2pi(nu t + phi))
        ret, _ = _onbin_return(desk_cfg, 2250)
        trace = synthesize_trace([ret], 2.0, desk_cfg)
        t = (np.arange(desk_cfg.samples_per_sweep) + 0.5) / desk_cfg.sample_rate
        nu = beat_frequency(ret.delay, desk_cfg)
        phi = desk_cfg.nu0 * ret.delay \
            - desk_cfg.delta_nu / (2 * desk_cfg.period) * ret.delay**2
        ideal = desk_cfg.eps0_c * 2.0 * np.sin(2 * np.pi * (nu * t + phi))
        steady = t >= ret.delay
        assert np.abs(trace.samples[steady] - ideal[steady]).max() \
            <= 1e-6 * desk_cfg.eps0_c

    def test_single_return_dft_peak(self, desk_cfg):
        ret, _ = _onbin_return(desk_cfg, 2250)
        trace = synthesize_trace([ret], 1.0, desk_cfg)
        spectrum = np.abs(np.fft.rfft(trace.samples))
        peak_bin = int(np.argmax(spectrum[1:])) + 1
        assert peak_bin == 2250
        expected = desk_cfg.eps0_c * desk_cfg.samples_per_sweep / 2
        assert spectrum[peak_bin] == pytest.approx(expected, rel=1e-3)

    def test_linearity(self, desk_cfg):
        r1, _ = _onbin_return(desk_cfg, 900, amplitude=1.0)
        r2, _ = _onbin_return(desk_cfg, 3100, amplitude=0.4)
        both = synthesize_trace([r1, r2], 1.5, desk_cfg).samples
        parts = synthesize_trace([r1], 1.5, desk_cfg).samples \
            + synthesize_trace([r2], 1.5, desk_cfg).samples
        assert np.abs(both - parts).max() <= 1e-12 * np.abs(both).max()

    def test_rejects_bad_returns(self, desk_cfg):
        with pytest.raises(ValueError):
            synthesize_trace([Return(1.0, desk_cfg.period)], 1.0, desk_cfg)
        with pytest.raises(ValueError):
            Return(np.nan, 1e-7)
        with pytest.raises(ValueError):
            synthesize_trace([Return(1.0, 1e-7)], np.inf, desk_cfg)

    def test_spectral_purity_on_bin(self, desk_cfg):
        for bins in (700, 1234, 4000):
            ret, _ = _onbin_return(desk_cfg, bins)
            trace = synthesize_trace([ret], 1.0, desk_cfg)
            energy = np.abs(np.fft.rfft(trace.samples)[1:]) ** 2
            window = energy[bins - 3: bins + 2]  # +-2 bins around 1-based peak
            assert window.sum() / energy.sum() >= 0.99

    def test_balanced_difference_has_no_dc(self, desk_cfg):
        # the difference-detector model carries only beat terms: over an
        # integer number of cycles the mean vanishes
        ret, _ = _onbin_return(desk_cfg, 2250)
        t = (np.arange(desk_cfg.samples_per_sweep) + 0.5) / desk_cfg.sample_rate
        nu = beat_frequency(ret.delay, desk_cfg)
        phi = desk_cfg.nu0 * ret.delay \
            - desk_cfg.delta_nu / (2 * desk_cfg.period) * ret.delay**2
        ideal = desk_cfg.eps0_c * np.sin(2 * np.pi * (nu * t + phi))
        assert abs(ideal.mean()) <= 1e-9 * np.abs(ideal).max()


class TestSweepPhases:
    @pytest.mark.parametrize("waveform", ["sawtooth", "triangle"])
    def test_closed_form_matches_accumulated_phase(self, waveform):
        # at low nu0 the naive psi(t) - psi(t - tau) difference is well
        # conditioned and must agree with the expanded form
        cfg = ChirpConfig(nu0=1.7e6, delta_nu=5e5, period=1e-3,
                          sample_rate=2e5, waveform=waveform)
        delays = np.array([0.0, 3.3e-5, 9.9e-5, 4.5e-4])
        t = (np.arange(cfg.samples_per_sweep) + 0.5) / cfg.sample_rate
        naive = 2 * np.pi * (sweep_phase(t, cfg)[:, None]
                             - sweep_phase(t[:, None] - delays[None, :], cfg))
        closed = beat_phases(delays, cfg, cfg.period)
        assert np.abs(naive - closed).max() < 1e-9

    def test_sawtooth_wrap_is_broadband(self, desk_cfg):
        # delays wrapping a sweep reset beat far above Nyquist; the wrapped
        # samples look like noise rather than a clean extension of the tone
        tau = 60.5 / desk_cfg.sample_rate
        phases = beat_phases(np.array([tau]), desk_cfg, desk_cfg.period)[:, 0]
        inst_freq = np.diff(phases) / (2 * np.pi) * desk_cfg.sample_rate
        steady = beat_frequency(tau, desk_cfg)
        assert np.abs(inst_freq[70:] - steady).max() < 1e-6 * steady
        # aliased region: reconstructed instantaneous frequency is wild
        assert np.abs(inst_freq[:59]).min() > 10 * steady

    def test_triangle_wrap_is_low_frequency(self):
        cfg = ChirpConfig(nu0=3.8436e14, delta_nu=33.3e9, period=1e-3,
                          sample_rate=10e6, waveform="triangle")
        tau = 60.5 / cfg.sample_rate
        phases = beat_phases(np.array([tau]), cfg, cfg.period)[:, 0]
        inst_freq = np.diff(phases) / (2 * np.pi) * cfg.sample_rate
        steady = beat_frequency(tau, cfg)
        assert np.abs(inst_freq[:59]).max() < 1.01 * steady
