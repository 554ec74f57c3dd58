"""Randomized Sylvester-Hadamard +/-1 sensing operator with fast transforms.

The operator is never materialized: A = R H P S, where S flips pixel signs,
P permutes pixels, H is the Sylvester-ordered Hadamard matrix applied by a
fast Walsh-Hadamard transform, and R keeps m of the n rows.  Rows of H are
mutually orthogonal, so A A^T = n I regardless of the randomization - the
reconstruction solvers lean on this identity.

Row 0 of H is all ones and carries only the scene mean, so randomized
selection draws rows from 1..n-1; it is appended last so a critically
sampled operator (m = n) is still complete and exactly invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def fwht(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform in Sylvester order.

    Applies H_n (entries +/-1, H_2 = [[1,1],[1,-1]], H_{2n} = H_2 (x) H_n)
    along ``axis`` in O(n log n).  H is symmetric and H H = n I.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    if n & (n - 1) or n < 1:
        raise ValueError(f"transform length must be a power of two, got {n}")
    y = np.moveaxis(x, axis, -1).copy()
    lead = y.shape[:-1]
    h = 1
    while h < n:
        view = y.reshape(lead + (n // (2 * h), 2, h))
        a = view[..., 0, :].copy()
        b = view[..., 1, :]
        view[..., 0, :] = a + b
        view[..., 1, :] = a - b
        h *= 2
    return np.moveaxis(y, -1, axis)


@dataclass(frozen=True)
class SensingMatrix:
    """Implicit m x n +/-1 sensing operator.

    Build with :meth:`randomized` (seeded pixel permutation, per-pixel sign
    flips, shuffled row subset) or :meth:`unrandomized` (natural Hadamard
    rows, identity scramble).  ``prefix`` narrows to the first m' rows,
    sharing the randomization, which is how sample-ratio sweeps reuse one
    critically sampled acquisition.
    """

    n: int
    m: int
    row_order: np.ndarray      # length m, indices into Hadamard rows
    pixel_perm: np.ndarray     # length n permutation
    sign_flip: np.ndarray      # length n entries in {+1, -1}
    seed: object = None

    def __post_init__(self):
        if self.n & (self.n - 1) or self.n < 1:
            raise ValueError(f"n must be a power of two, got {self.n}")
        if not 1 <= self.m <= self.n:
            raise ValueError(f"m must be in [1, n], got m={self.m}, n={self.n}")

    @classmethod
    def randomized(cls, n: int, m: int, seed) -> "SensingMatrix":
        rng = np.random.default_rng(seed)
        order = rng.permutation(np.arange(1, n))
        row_order = np.concatenate([order, [0]])[:m]
        pixel_perm = rng.permutation(n)
        sign_flip = rng.integers(0, 2, size=n) * 2 - 1
        return cls(n=n, m=m, row_order=row_order, pixel_perm=pixel_perm,
                   sign_flip=sign_flip.astype(float), seed=seed)

    @classmethod
    def unrandomized(cls, n: int, m: int | None = None) -> "SensingMatrix":
        m = n if m is None else m
        return cls(n=n, m=m, row_order=np.arange(m), pixel_perm=np.arange(n),
                   sign_flip=np.ones(n))

    def prefix(self, m: int) -> "SensingMatrix":
        if not 1 <= m <= self.m:
            raise ValueError(f"prefix size {m} outside [1, {self.m}]")
        return SensingMatrix(n=self.n, m=m, row_order=self.row_order[:m],
                             pixel_perm=self.pixel_perm, sign_flip=self.sign_flip,
                             seed=self.seed)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """A x via the fast transform; accepts (..., n), returns (..., m)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected length {self.n}, got {x.shape[-1]}")
        scrambled = (self.sign_flip * x)[..., self.pixel_perm]
        return fwht(scrambled)[..., self.row_order]

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        """A^T y via the fast transform; accepts (..., m), returns (..., n)."""
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.m:
            raise ValueError(f"expected length {self.m}, got {y.shape[-1]}")
        embedded = np.zeros(y.shape[:-1] + (self.n,))
        embedded[..., self.row_order] = y
        out = np.empty_like(embedded)
        out[..., self.pixel_perm] = fwht(embedded)
        return self.sign_flip * out

    def row(self, k: int) -> np.ndarray:
        """Materialize row k as a +/-1 vector (small-n checks and masks)."""
        if not 0 <= k < self.m:
            raise ValueError(f"row index {k} outside [0, {self.m})")
        unit = np.zeros(self.m)
        unit[k] = 1.0
        return self.apply_adjoint(unit)

    def split_pattern(self, k: int):
        """Row k as its (1,0) and (0,1) detector masks.

        mask_pos marks the +1 entries, mask_neg the -1 entries; their
        difference is the row and their sum is all ones.
        """
        row = self.row(k)
        mask_pos = (row > 0).astype(float)
        mask_neg = (row < 0).astype(float)
        return mask_pos, mask_neg

    def dense(self) -> np.ndarray:
        """Materialized m x n matrix; for tests and small n only."""
        return self.apply(np.eye(self.n)).T


def apply(A: SensingMatrix, x: np.ndarray) -> np.ndarray:
    return A.apply(x)


def apply_adjoint(A: SensingMatrix, y: np.ndarray) -> np.ndarray:
    return A.apply_adjoint(y)


def split_pattern(A: SensingMatrix, k: int):
    return A.split_pattern(k)
