"""Depth-map reconstruction from the two measurement vectors.

The chain runs one total-variation minimization on the plain measurement
vector to localize objects, hard-thresholds that image into a binary mask,
keeps the mask's largest Haar coefficients as a support, then solves two
support-restricted least-squares problems (plain and frequency-weighted)
whose element-wise ratio is the depth map.

The TV solver is an augmented-Lagrangian / ADMM scheme built from the
three fast primitives the operator structure affords: the data subproblem
inverts (2 A^T A + rho I) in closed form because A A^T = n I, the gradient
subproblem is diagonalized by the 2D FFT under periodic boundaries, and
the sparsity subproblem is soft-thresholding.  Outer iterations double the
penalties; the reported iterate is the best objective seen, so the outer
objective sequence is non-increasing by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .chirp import ChirpConfig, distance_from_frequency
from .sensing import SensingMatrix
from .spectral import MeasurementVectors
from .wavelets import haar2_forward, haar2_inverse


class ReconstructionError(RuntimeError):
    """Reconstruction cannot proceed (typically an empty object mask)."""


@dataclass(frozen=True)
class TvConfig:
    """Knobs for the TV minimization.

    ``alpha`` is the sparsity weight (None picks 2^-5 * max|A^T y|).  The
    equality penalty defaults to n (the scale of A^T A); the gradient
    penalty defaults to 4 n alpha / max|A^T y| so the first shrinkage
    threshold is a quarter of the estimated image peak.  Both double every
    outer iteration.
    """

    alpha: float | None = None
    max_outer_iters: int = 26
    inner_iters: int = 40
    inner_tolerance: float = 1e-4
    penalty_data: float | None = None
    penalty_tv: float | None = None
    continuation: float = 1.4
    nonnegative: bool = True   # heterodyne amplitude images cannot go below 0

    def __post_init__(self):
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.max_outer_iters < 1 or self.inner_iters < 1:
            raise ValueError("iteration counts must be >= 1")


@dataclass
class TvResult:
    image: np.ndarray          # length-n best iterate
    objectives: np.ndarray     # non-increasing outer objective history
    converged: bool


@dataclass
class SupportSet:
    """Sorted Haar-coefficient indices retained for the least-squares fit."""

    indices: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=int)
        if self.indices.ndim != 1 or self.indices.size == 0:
            raise ValueError("support must be a nonempty 1D index list")
        if np.unique(self.indices).size != self.indices.size:
            raise ValueError("support indices must be unique")
        self.indices = np.sort(self.indices)

    @property
    def size(self) -> int:
        return self.indices.size


@dataclass
class DepthMap:
    depths: np.ndarray   # (h, w) meters, 0 where invalid
    mask: np.ndarray     # (h, w) bool validity
    clamped: int = 0     # pixels clamped to the unambiguous range

    def __post_init__(self):
        self.depths = np.asarray(self.depths, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.depths.shape != self.mask.shape:
            raise ValueError("depths and mask shapes differ")
        self.depths = np.where(self.mask, self.depths, 0.0)

    @property
    def height(self) -> int:
        return self.depths.shape[0]

    @property
    def width(self) -> int:
        return self.depths.shape[1]


def _square_side(n: int) -> int:
    side = int(round(np.sqrt(n)))
    if side * side != n:
        raise ValueError(f"pixel count {n} is not a square image")
    return side


def _grad(img: np.ndarray):
    """Forward differences with periodic boundaries (rows, cols)."""
    return np.roll(img, -1, axis=0) - img, np.roll(img, -1, axis=1) - img


def _grad_adjoint(gy: np.ndarray, gx: np.ndarray) -> np.ndarray:
    return (np.roll(gy, 1, axis=0) - gy) + (np.roll(gx, 1, axis=1) - gx)


def total_variation(img: np.ndarray) -> float:
    gy, gx = _grad(img)
    return float(np.abs(gy).sum() + np.abs(gx).sum())


def _soft(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def tv_minimize(A: SensingMatrix, y: np.ndarray, tv: TvConfig | None = None) -> TvResult:
    """Approximately minimize ||A x - y||^2 + alpha * TV(x), anisotropic TV.

    ADMM over the splitting v = x (data term) and w = grad x (TV term);
    every subproblem is closed form (see module docstring).  The returned
    iterate is the best-objective outer iterate, and ``objectives`` is that
    running best, hence non-increasing.
    """
    tv = tv or TvConfig()
    y = np.asarray(y, dtype=float)
    if y.shape != (A.m,):
        raise ValueError(f"expected measurement length {A.m}, got {y.shape}")
    if A.m > A.n:
        raise ValueError("more measurements than unknowns is unsupported")
    n = A.n
    side = _square_side(n)

    At_y = A.apply_adjoint(y)
    peak = float(np.abs(At_y).max())
    alpha = tv.alpha if tv.alpha is not None else 2.0**-5 * peak
    if alpha == 0.0 or peak == 0.0:
        return TvResult(np.zeros(n), np.array([0.0]), True)
    rho = tv.penalty_data if tv.penalty_data is not None else float(n)
    mu = tv.penalty_tv if tv.penalty_tv is not None else 4.0 * n * alpha / peak

    # FFT symbol of the periodic gradient normal operator D^T D
    ky = np.fft.fftfreq(side)
    lam = np.abs(np.exp(2j * np.pi * ky) - 1.0) ** 2
    grad_symbol = lam[:, None] + lam[None, :]

    def objective(x_img):
        resid = A.apply(x_img.ravel()) - y
        return float(resid @ resid) + alpha * total_variation(x_img)

    x = (At_y / n).reshape(side, side)
    v = x.ravel().copy()
    gy, gx = _grad(x)
    wy, wx = gy.copy(), gx.copy()
    uy = np.zeros_like(wy)
    ux = np.zeros_like(wx)
    uv = np.zeros(n)

    best_obj = objective(x)
    best_x = x.copy()
    zero_obj = float(y @ y)
    if zero_obj < best_obj:
        best_obj = zero_obj
        best_x = np.zeros_like(x)
    history = [best_obj]
    converged = False
    stalled = 0

    for outer in range(tv.max_outer_iters):
        for _ in range(tv.inner_iters):
            x_prev = x
            # x-step: (rho I + mu D^T D) x = rho (v - uv) + mu D^T (w - u)
            rhs = rho * (v - uv).reshape(side, side) \
                + mu * _grad_adjoint(wy - uy, wx - ux)
            x = np.real(np.fft.ifft2(np.fft.fft2(rhs) / (rho + mu * grad_symbol)))
            if tv.nonnegative:
                np.maximum(x, 0.0, out=x)
            # v-step: (2 A^T A + rho I) v = 2 A^T y + rho (x + uv), via A A^T = n I
            rhs_v = 2.0 * At_y + rho * (x.ravel() + uv)
            correction = A.apply_adjoint(A.apply(rhs_v)) * (2.0 / (2.0 * n + rho))
            v = (rhs_v - correction) / rho
            # w-step: soft threshold the shifted gradients
            gy, gx = _grad(x)
            wy = _soft(gy + uy, alpha / mu)
            wx = _soft(gx + ux, alpha / mu)
            uy += gy - wy
            ux += gx - wx
            uv += x.ravel() - v
            step = np.linalg.norm(x - x_prev) / max(np.linalg.norm(x_prev), 1e-30)
            if step < tv.inner_tolerance:
                break
        obj = objective(x)
        if obj < best_obj * (1.0 - tv.inner_tolerance):
            stalled = 0
        else:
            stalled += 1
        if obj < best_obj:
            best_obj = obj
            best_x = x.copy()
        history.append(best_obj)
        # two consecutive stalls after a few continuation rounds means done
        if stalled >= 2 and outer >= 3:
            converged = True
            break
        rho *= tv.continuation
        mu *= tv.continuation
        uy /= tv.continuation
        ux /= tv.continuation
        uv /= tv.continuation

    if not converged:
        converged = stalled >= 1   # flat at the end counts as settled
    if not converged:
        warnings.warn("TV minimization stopped at max_outer_iters; "
                      "returning the best iterate", RuntimeWarning)
    return TvResult(best_x.ravel(), np.asarray(history), converged)


def make_mask(image: np.ndarray, rel_threshold: float = 0.1) -> np.ndarray:
    """Binary object mask: pixels above rel_threshold * max(image)."""
    if not 0 <= rel_threshold < 1:
        raise ValueError("rel_threshold must be in [0, 1)")
    image = np.asarray(image, dtype=float)
    peak = image.max(initial=0.0)
    if peak <= 0:
        warnings.warn("mask of a non-positive image is empty", RuntimeWarning)
        return np.zeros(image.shape, dtype=bool)
    return image > rel_threshold * peak


def select_support(mask: np.ndarray, m: int, fraction: float = 1.0 / 3.0) -> SupportSet:
    """Largest-|coefficient| Haar support of the mask, floor(fraction*m) wide.

    Ties go to the lower index.  Zero coefficients never enter the support:
    they carry no mask information and would only soak up measurement
    noise, so the support may come out smaller than floor(fraction*m) for
    very sparse masks.  The mask must be square with power-of-two side
    (full-depth Haar).
    """
    mask = np.asarray(mask, dtype=float)
    side = _square_side(mask.size)
    count = int(np.floor(fraction * m))
    if count < 1:
        raise ValueError(f"support of floor({fraction} * {m}) coefficients is empty")
    coeffs = haar2_forward(mask.reshape(side, side)).ravel()
    nonzero = int(np.count_nonzero(coeffs))
    if nonzero == 0:
        raise ReconstructionError("mask has no support (all-zero image)")
    count = min(count, mask.size, nonzero)
    order = np.argsort(-np.abs(coeffs), kind="stable")
    return SupportSet(indices=order[:count])


def ls_operator(A: SensingMatrix, support: SupportSet):
    """J = A Psi^-1 P^T and its adjoint, as closures over the fast transforms."""
    side = _square_side(A.n)
    idx = support.indices

    def J(s: np.ndarray) -> np.ndarray:
        coeffs = np.zeros(A.n)
        coeffs[idx] = s
        return A.apply(haar2_inverse(coeffs.reshape(side, side)).ravel())

    def Jt(r: np.ndarray) -> np.ndarray:
        img = A.apply_adjoint(r).reshape(side, side)
        return haar2_forward(img).ravel()[idx]

    return J, Jt


@dataclass
class LsInfo:
    converged: bool
    iterations: int
    normal_residual: float     # ||J^T (J s - y)|| / ||J^T y||
    flagged_rank_deficient: bool = False


def ls_on_support(A: SensingMatrix, y: np.ndarray, support: SupportSet,
                  mask: np.ndarray, tol: float = 1e-6, max_iters: int = 2000,
                  method: str = "cg"):
    """Minimize ||A Psi^-1 P^T s - y||^2 over the selected support.

    Stops when the normal-equations residual ||J^T(J s - y)|| falls below
    tol * ||J^T y||.  Starting from zero, conjugate gradients converges to
    the minimum-norm solution on rank-deficient systems (flagged).
    Returns (masked image, LsInfo); the image is M * Psi^-1 P^T s.
    """
    if support.size > A.m:
        raise ValueError(f"support size {support.size} exceeds m={A.m}; "
                         "the restricted system must stay overdetermined")
    y = np.asarray(y, dtype=float)
    J, Jt = ls_operator(A, support)
    b = Jt(y)
    bnorm = float(np.linalg.norm(b))
    side = _square_side(A.n)
    mask = np.asarray(mask, dtype=bool).reshape(side, side)

    if bnorm == 0.0:
        return np.zeros(A.n), LsInfo(True, 0, 0.0)

    if method == "cg":
        s, info = _cg_normal(J, Jt, b, bnorm, tol, max_iters)
    elif method == "lbfgs":
        s, info = _lbfgs_normal(J, Jt, y, b, bnorm, tol, max_iters, support.size)
    else:
        raise ValueError(f"unknown least-squares method {method!r}")

    coeffs = np.zeros(A.n)
    coeffs[support.indices] = s
    image = haar2_inverse(coeffs.reshape(side, side))
    image = np.where(mask, image, 0.0)
    return image.ravel(), info


def _cg_normal(J, Jt, b, bnorm, tol, max_iters):
    """CG on the normal equations J^T J s = J^T y, matrix-free."""
    s = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    flagged = False
    it = 0
    for it in range(1, max_iters + 1):
        Jp = J(p)
        curvature = float(Jp @ Jp)
        if curvature <= 1e-30 * rs:
            flagged = True   # direction in (numerical) null space
            break
        gamma = rs / curvature
        s += gamma * p
        r -= gamma * Jt(Jp)
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= tol * bnorm:
            rs = rs_new
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    resid = float(np.sqrt(rs)) / bnorm
    converged = resid <= tol
    if flagged:
        warnings.warn("least-squares system is rank deficient; returning the "
                      "minimum-norm iterate", RuntimeWarning)
    return s, LsInfo(converged, it, resid, flagged)


def _lbfgs_normal(J, Jt, y, b, bnorm, tol, max_iters, size):
    def fun(s):
        resid = J(s) - y
        return float(resid @ resid), 2.0 * Jt(resid)

    res = optimize.minimize(fun, np.zeros(size), jac=True, method="L-BFGS-B",
                            options={"maxiter": max_iters,
                                     "gtol": 0.5 * tol * bnorm,
                                     "ftol": 1e-18})
    grad_norm = float(np.linalg.norm(Jt(J(res.x) - y)))
    resid = grad_norm / bnorm
    return res.x, LsInfo(resid <= tol, int(res.nit), resid)


def extract_depth(x_i: np.ndarray, x_inu: np.ndarray, cfg: ChirpConfig,
                  floor: float | None = None, weighting: str = "linear") -> DepthMap:
    """Element-wise depth d = (x_inu / x_i) * T c / (2 delta_nu).

    Pixels with x_i at or below the floor (default 1% of the peak) are
    marked invalid; ratios mapping beyond the unambiguous range are clamped
    to it and counted.  Sub-linear weightings are inverted per pixel before
    the scale factor is applied.
    """
    x_i = np.asarray(x_i, dtype=float)
    x_inu = np.asarray(x_inu, dtype=float)
    if x_i.shape != x_inu.shape:
        raise ValueError("image shapes differ")
    side = _square_side(x_i.size)
    x_i = x_i.reshape(side, side)
    x_inu = x_inu.reshape(side, side)
    if floor is None:
        floor = 0.01 * float(x_i.max(initial=0.0))
    valid = x_i > max(floor, 0.0)
    ratio = np.zeros_like(x_i)
    np.divide(x_inu, x_i, out=ratio, where=valid)
    if weighting == "linear":
        freq = ratio
    elif weighting == "sqrt":
        freq = ratio**2
    elif weighting == "log":
        # the ratio approximates log1p(f / bin_width); invert back to Hz
        freq = np.expm1(np.clip(ratio, 0.0, 50.0)) * cfg.bin_width
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    depths = np.where(valid, distance_from_frequency(1.0, cfg) * freq, 0.0)
    valid &= depths > 0
    clamped = int(np.count_nonzero(valid & (depths > cfg.max_depth)))
    depths = np.where(valid, np.minimum(depths, cfg.max_depth), 0.0)
    return DepthMap(depths=depths, mask=valid, clamped=clamped)


def smooth(dmap: DepthMap, kernel: int = 4) -> DepthMap:
    """Box-average depths over valid pixels only; the mask is unchanged."""
    if kernel < 1 or kernel > min(dmap.depths.shape):
        raise ValueError(f"kernel {kernel} does not fit the image")
    box = np.ones((kernel, kernel))
    valid = dmap.mask.astype(float)
    num = signal.convolve2d(dmap.depths * valid, box, mode="same", boundary="fill")
    den = signal.convolve2d(valid, box, mode="same", boundary="fill")
    averaged = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    depths = np.where(dmap.mask, averaged, 0.0)
    return DepthMap(depths=depths, mask=dmap.mask.copy(), clamped=dmap.clamped)


@dataclass
class ReconResult:
    depth_map: DepthMap
    tv_image: np.ndarray
    mask: np.ndarray
    support: SupportSet
    x_i: np.ndarray
    x_inu: np.ndarray
    tv: TvResult
    ls_info: tuple


def reconstruct(A: SensingMatrix, mv: MeasurementVectors,
                tv: TvConfig | None = None, cfg: ChirpConfig | None = None,
                mask_threshold: float = 0.1, support_fraction: float = 1.0 / 3.0,
                depth_floor_frac: float = 0.01, ls_tol: float = 1e-6,
                ls_method: str = "cg") -> ReconResult:
    """One TV localization, one support, two least-squares fits, one ratio.

    TV runs only on the plain vector y_i; the frequency-weighted vector is
    fitted on the same support (never TV-minimized).
    """
    if cfg is None:
        raise ValueError("a ChirpConfig is required to scale depths")
    if mv.m != A.m:
        raise ValueError(f"measurement count {mv.m} does not match operator m={A.m}")
    tv_result = tv_minimize(A, mv.y_i, tv)
    side = _square_side(A.n)
    mask = make_mask(tv_result.image.reshape(side, side), mask_threshold)
    if not mask.any():
        raise ReconstructionError(
            "hard threshold produced an empty mask; lower mask_threshold or "
            "check the measurement scale")
    support = select_support(mask, A.m, support_fraction)
    x_i, info_i = ls_on_support(A, mv.y_i, support, mask, tol=ls_tol,
                                method=ls_method)
    x_inu, info_inu = ls_on_support(A, mv.y_inu, support, mask, tol=ls_tol,
                                    method=ls_method)
    floor = depth_floor_frac * float(np.max(x_i, initial=0.0))
    dmap = extract_depth(x_i, x_inu, cfg, floor=floor, weighting=mv.weighting)
    return ReconResult(depth_map=dmap, tv_image=tv_result.image,
                       mask=mask, support=support, x_i=x_i, x_inu=x_inu,
                       tv=tv_result, ls_info=(info_i, info_inu))
