import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from cslidar.sensing import SensingMatrix, fwht


class TestFwht:
    @pytest.mark.parametrize("n", [2, 8, 64, 256])
    def test_matches_dense_hadamard(self, n):
        rng = np.random.default_rng(n)
        x = rng.normal(size=n)
        dense = scipy.linalg.hadamard(n) @ x
        assert np.abs(fwht(x) - dense).max() <= 1e-10 * np.abs(dense).max()

    def test_batched_axis(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(5, 16))
        batched = fwht(x)
        rows = np.stack([fwht(row) for row in x])
        assert np.array_equal(batched, rows)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            fwht(np.zeros(12))

    def test_involution_scaled(self):
        x = np.random.default_rng(0).normal(size=64)
        assert np.allclose(fwht(fwht(x)), 64 * x)


class TestSensingMatrix:
    def test_zero_maps_to_zero(self):
        A = SensingMatrix.randomized(64, 16, seed=1)
        assert np.all(A.apply(np.zeros(64)) == 0.0)
        assert np.all(A.apply_adjoint(np.zeros(16)) == 0.0)

    def test_unrandomized_unit_vector_gives_hadamard_column(self):
        A = SensingMatrix.unrandomized(8)
        e1 = np.zeros(8)
        e1[0] = 1.0
        assert np.array_equal(A.apply(e1), scipy.linalg.hadamard(8)[:, 0])

    def test_apply_matches_dense(self):
        A = SensingMatrix.randomized(64, 16, seed=42)
        dense = A.dense()
        rng = np.random.default_rng(7)
        x = rng.normal(size=64)
        y = rng.normal(size=16)
        assert np.allclose(A.apply(x), dense @ x, atol=1e-12 * 64)
        assert np.allclose(A.apply_adjoint(y), dense.T @ y, atol=1e-12 * 64)

    @pytest.mark.parametrize("n", [4, 16, 64, 256])
    def test_entries_and_orthogonality(self, n):
        m = max(2, n // 4)
        dense = SensingMatrix.randomized(n, m, seed=n).dense()
        assert np.all(np.abs(dense) == 1.0)
        gram = dense @ dense.T
        assert np.array_equal(gram, n * np.eye(m))

    @given(st.integers(0, 2**32 - 1))
    def test_adjoint_identity(self, seed):
        rng = np.random.default_rng(seed)
        A = SensingMatrix.randomized(64, 32, seed=seed)
        x = rng.normal(size=64)
        y = rng.normal(size=32)
        lhs = float(A.apply(x) @ y)
        rhs = float(x @ A.apply_adjoint(y))
        scale = max(abs(lhs), abs(rhs), 1e-30)
        assert abs(lhs - rhs) <= 1e-10 * scale

    def test_self_adjoint_inverse_at_critical_sampling(self):
        A = SensingMatrix.unrandomized(64)
        x = np.random.default_rng(1).normal(size=64)
        assert np.allclose(A.apply_adjoint(A.apply(x)), 64 * x)

    def test_split_pattern(self):
        A = SensingMatrix.unrandomized(16)
        pos, neg = A.split_pattern(0)
        assert np.all(pos == 1.0) and np.all(neg == 0.0)
        A = SensingMatrix.randomized(16, 8, seed=5)
        dense = A.dense()
        for k in range(8):
            pos, neg = A.split_pattern(k)
            assert np.array_equal(pos - neg, dense[k])
            assert np.all(pos + neg == 1.0)
            assert pos.sum() + neg.sum() == 16

    def test_seeded_determinism(self):
        a = SensingMatrix.randomized(64, 20, seed=99).dense()
        b = SensingMatrix.randomized(64, 20, seed=99).dense()
        assert np.array_equal(a, b)

    def test_row_zero_excluded_until_critical(self):
        A = SensingMatrix.randomized(32, 31, seed=0)
        assert 0 not in A.row_order
        full = SensingMatrix.randomized(32, 32, seed=0)
        assert full.row_order[-1] == 0
        assert sorted(full.row_order) == list(range(32))

    def test_prefix_shares_randomization(self):
        A = SensingMatrix.randomized(64, 64, seed=3)
        sub = A.prefix(16)
        assert np.array_equal(sub.dense(), A.dense()[:16])

    def test_shape_errors(self):
        A = SensingMatrix.randomized(16, 8, seed=0)
        with pytest.raises(ValueError):
            A.apply(np.zeros(15))
        with pytest.raises(ValueError):
            A.apply_adjoint(np.zeros(9))
        with pytest.raises(ValueError):
            A.split_pattern(8)
        with pytest.raises(ValueError):
            A.prefix(9)
        with pytest.raises(ValueError):
            SensingMatrix.randomized(12, 4, seed=0)
