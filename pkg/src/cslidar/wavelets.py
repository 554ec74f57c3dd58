"""Orthonormal wavelet transforms used by the signal chain and reconstruction.

Two transforms live here:

* a periodized multi-level 1D discrete wavelet transform with the 40-tap
  least-asymmetric (symlet-20) filter bank, used for spectrum denoising;
* an orthonormal multi-level 2D Haar transform on square power-of-two
  images, used to expose the sparse support of object masks.

The symlet coefficients are frozen below; ``scripts/gen_symlet20.py``
rederives them from the half-band spectral factorization and checks the
table.  Periodization keeps every level exactly orthonormal for even
lengths, so analysis/synthesis round-trips are exact to rounding.
"""

from __future__ import annotations

import numpy as np

# Least-asymmetric orthonormal scaling filter, 20 vanishing moments
# (regenerate with scripts/gen_symlet20.py; orthonormality residual ~1e-16).
SYM20_LO = (
    3.336188257713032e-07,
    -6.570097831879207e-08,
    -6.128431621417849e-06,
    3.819426300745143e-06,
    5.854611500036283e-05,
    -4.8135629673170985e-05,
    -0.00035863154973371237,
    0.00036790931093024957,
    0.0016347281381280017,
    -0.00186947122922491,
    -0.005766740197744022,
    0.007471292029848538,
    0.01810330530841957,
    -0.020142325127522093,
    -0.043755475567199026,
    0.052878544501739455,
    0.12007733305433589,
    -0.04451178195629659,
    -0.14186653448559172,
    0.23415686959269827,
    0.7071105310322353,
    0.6082605412347528,
    0.11316721625248419,
    -0.12933813456403773,
    -0.05192408654691048,
    0.006397066862321715,
    -0.019436732692503265,
    -0.012768328601174175,
    0.013756659864953686,
    0.00900841333855763,
    -0.0045608230962583115,
    -0.0035522141019779328,
    0.0009970466564015814,
    0.0009377915806326766,
    -0.00013225243945103794,
    -0.00016022317065650973,
    8.624220542518283e-06,
    1.591447584998747e-05,
    -1.3806776631048285e-07,
    -7.010855431995162e-07,
)


def qmf_highpass(lo: np.ndarray) -> np.ndarray:
    """Quadrature-mirror highpass g[k] = (-1)^k h[F-1-k] for scaling filter h."""
    lo = np.asarray(lo, dtype=float)
    signs = np.where(np.arange(lo.size) % 2 == 0, 1.0, -1.0)
    return signs * lo[::-1]


_SYM20_HI = qmf_highpass(np.array(SYM20_LO))


def dwt_max_level(data_len: int, filter_len: int) -> int:
    """Deepest decomposition level for which a band still covers the filter."""
    if data_len < filter_len - 1 or filter_len < 2:
        return 0
    return int(np.log2(data_len / (filter_len - 1.0)))


def _filter_fft(filt: np.ndarray, length: int) -> np.ndarray:
    pad = np.zeros(length)
    taps = np.asarray(filt, dtype=float)
    if taps.size <= length:
        pad[: taps.size] = taps
    else:
        # circular fold for bands shorter than the filter
        for k, value in enumerate(taps):
            pad[k % length] += value
    return np.fft.rfft(pad)


def dwt_periodic(x: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """One circular analysis level on the last axis (even length required).

    a[i] = sum_k lo[k] x[(2i+k) mod L], and likewise for the detail band.
    """
    length = x.shape[-1]
    if length % 2:
        raise ValueError("periodized DWT needs an even length")
    xf = np.fft.rfft(x, axis=-1)
    approx = np.fft.irfft(xf * np.conj(_filter_fft(lo, length)), n=length, axis=-1)
    detail = np.fft.irfft(xf * np.conj(_filter_fft(hi, length)), n=length, axis=-1)
    return approx[..., ::2], detail[..., ::2]


def idwt_periodic(approx: np.ndarray, detail: np.ndarray, lo: np.ndarray,
                  hi: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dwt_periodic` (exact for orthonormal filter pairs)."""
    length = 2 * approx.shape[-1]
    up_a = np.zeros(approx.shape[:-1] + (length,))
    up_d = np.zeros_like(up_a)
    up_a[..., ::2] = approx
    up_d[..., ::2] = detail
    out = np.fft.rfft(up_a, axis=-1) * _filter_fft(lo, length)
    out += np.fft.rfft(up_d, axis=-1) * _filter_fft(hi, length)
    return np.fft.irfft(out, n=length, axis=-1)


def wavedec_periodic(x: np.ndarray, lo=SYM20_LO, levels: int | None = None):
    """Multi-level periodized decomposition along the last axis.

    Odd-length bands are extended by repeating the final sample before
    splitting; the recorded lengths let :func:`waverec_periodic` undo this
    exactly.  Returns ``(coeffs, lengths)`` with ``coeffs = [aL, dL, ..., d1]``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = qmf_highpass(lo)
    if levels is None:
        levels = dwt_max_level(x.shape[-1], lo.size)
    details = []
    lengths = []
    current = np.asarray(x, dtype=float)
    for _ in range(levels):
        lengths.append(current.shape[-1])
        if current.shape[-1] % 2:
            current = np.concatenate([current, current[..., -1:]], axis=-1)
        current, d = dwt_periodic(current, lo, hi)
        details.append(d)
    return [current] + details[::-1], lengths[::-1]


def waverec_periodic(coeffs, lengths, lo=SYM20_LO) -> np.ndarray:
    """Invert :func:`wavedec_periodic`."""
    lo = np.asarray(lo, dtype=float)
    hi = qmf_highpass(lo)
    current = coeffs[0]
    for d, orig_len in zip(coeffs[1:], lengths):
        current = idwt_periodic(current, d, lo, hi)
        current = current[..., :orig_len]
    return current


# ---------------------------------------------------------------------------
# 2D Haar, full depth, packed (Mallat) layout
# ---------------------------------------------------------------------------

_SQRT2 = np.sqrt(2.0)


def haar2_levels(side: int) -> int:
    if side < 1 or side & (side - 1):
        raise ValueError(f"side must be a power of two, got {side}")
    return int(side).bit_length() - 1


def haar2_forward(image: np.ndarray) -> np.ndarray:
    """Orthonormal full-depth 2D Haar analysis of a square power-of-two image.

    Coefficients are packed in place: the approximation sits in the top-left
    corner, detail quadrants around it, level by level.  Preserves the L2
    norm exactly (the transform is orthonormal).
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ValueError(f"expected a square image, got shape {image.shape}")
    side = image.shape[0]
    out = image.copy()
    size = side
    for _ in range(haar2_levels(side)):
        block = out[:size, :size]
        # rows
        a = (block[:, 0::2] + block[:, 1::2]) / _SQRT2
        d = (block[:, 0::2] - block[:, 1::2]) / _SQRT2
        block[:, : size // 2] = a
        block[:, size // 2:] = d
        # columns
        a = (block[0::2, :] + block[1::2, :]) / _SQRT2
        d = (block[0::2, :] - block[1::2, :]) / _SQRT2
        block[: size // 2, :] = a
        block[size // 2:, :] = d
        size //= 2
    return out


def haar2_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Invert :func:`haar2_forward`."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 2 or coeffs.shape[0] != coeffs.shape[1]:
        raise ValueError(f"expected square coefficients, got shape {coeffs.shape}")
    side = coeffs.shape[0]
    out = coeffs.copy()
    size = 2
    for _ in range(haar2_levels(side)):
        block = out[:size, :size].copy()
        half = size // 2
        # columns
        top, bottom = block[:half, :], block[half:, :]
        full = np.empty((size, size))
        full[0::2, :] = (top + bottom) / _SQRT2
        full[1::2, :] = (top - bottom) / _SQRT2
        # rows
        left, right = full[:, :half].copy(), full[:, half:].copy()
        full[:, 0::2] = (left + right) / _SQRT2
        full[:, 1::2] = (left - right) / _SQRT2
        out[:size, :size] = full
        size *= 2
    return out
