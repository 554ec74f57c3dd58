import numpy as np
import pytest
from hypothesis import given, strategies as st

from cslidar.wavelets import (SYM20_LO, dwt_max_level, dwt_periodic,
                              haar2_forward, haar2_inverse, idwt_periodic,
                              qmf_highpass, wavedec_periodic,
                              waverec_periodic)


class TestSymletFilter:
    def test_length_and_normalization(self):
        lo = np.array(SYM20_LO)
        assert lo.size == 40
        assert lo.sum() == pytest.approx(np.sqrt(2), abs=1e-13)

    def test_orthonormal_shifts(self):
        lo = np.array(SYM20_LO)
        assert lo @ lo == pytest.approx(1.0, abs=1e-13)
        for k in range(1, 20):
            assert abs(lo[2 * k:] @ lo[: -2 * k]) < 1e-13

    def test_highpass_kills_constants(self):
        hi = qmf_highpass(np.array(SYM20_LO))
        assert abs(hi.sum()) < 1e-13

    def test_near_linear_phase(self):
        # least-asymmetric selection: group delay deviates from its mean by
        # far less than for the extremal-phase factorization of the same
        # product filter (which wanders by several samples)
        lo = np.array(SYM20_LO)
        w = np.linspace(0.1, np.pi - 0.1, 301)
        resp = np.exp(-1j * np.outer(w, np.arange(40))) @ lo
        phase = np.unwrap(np.angle(resp))
        slope = np.dot(phase, w) / np.dot(w, w)
        assert np.abs(phase - slope * w).max() < 1.5


class TestPeriodizedDwt:
    def test_max_level(self):
        assert dwt_max_level(1000, 40) == 4
        assert dwt_max_level(5000, 40) == 7
        assert dwt_max_level(64, 40) == 0
        assert dwt_max_level(10, 40) == 0

    def test_single_level_orthonormal(self):
        rng = np.random.default_rng(0)
        lo = np.array(SYM20_LO)
        hi = qmf_highpass(lo)
        x = rng.normal(size=512)
        a, d = dwt_periodic(x, lo, hi)
        assert a.size == d.size == 256
        assert np.sum(a**2) + np.sum(d**2) == pytest.approx(np.sum(x**2), rel=1e-12)
        back = idwt_periodic(a, d, lo, hi)
        assert np.abs(back - x).max() < 1e-12

    @given(st.integers(41, 600), st.integers(0, 2**31))
    def test_multilevel_roundtrip(self, length, seed):
        x = np.random.default_rng(seed).normal(size=length)
        coeffs, lengths = wavedec_periodic(x)
        back = waverec_periodic(coeffs, lengths)
        assert back.shape == x.shape
        assert np.abs(back - x).max() < 1e-10

    def test_batched_matches_rowwise(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(4, 250))
        coeffs, lengths = wavedec_periodic(x)
        for i in range(4):
            row_coeffs, row_lengths = wavedec_periodic(x[i])
            assert row_lengths == lengths
            for a, b in zip(coeffs, row_coeffs):
                assert np.allclose(a[i], b, atol=1e-14)

    def test_constant_signal_has_zero_details(self):
        coeffs, _ = wavedec_periodic(np.full(512, 3.7))
        for d in coeffs[1:]:
            assert np.abs(d).max() < 1e-11


class TestHaar2:
    def test_orthonormal(self):
        rng = np.random.default_rng(1)
        img = rng.normal(size=(32, 32))
        coeffs = haar2_forward(img)
        assert np.sum(coeffs**2) == pytest.approx(np.sum(img**2), rel=1e-10)

    @given(st.sampled_from([2, 4, 8, 16, 32]), st.integers(0, 2**31))
    def test_roundtrip(self, side, seed):
        img = np.random.default_rng(seed).normal(size=(side, side))
        back = haar2_inverse(haar2_forward(img))
        assert np.abs(back - img).max() < 1e-10

    def test_constant_image_concentrates_in_dc(self):
        coeffs = haar2_forward(np.ones((8, 8)))
        assert coeffs[0, 0] == pytest.approx(8.0)
        rest = coeffs.ravel()[1:]
        assert np.abs(rest).max() == 0.0

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            haar2_forward(np.zeros((8, 4)))
        with pytest.raises(ValueError):
            haar2_forward(np.zeros((12, 12)))
        with pytest.raises(ValueError):
            haar2_inverse(np.zeros(16))
