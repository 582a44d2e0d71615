import numpy as np
import pytest

from conftest import random_psd, random_stable_system
from dromor import DiscreteLtiSystem, balanced_truncation, balancing_transform, gramians
from dromor.errors import DimensionError, InstabilityError, RankDeficiencyError


class TestGramians:
    def test_zero_dynamics(self):
        rng = np.random.default_rng(1)
        b = rng.standard_normal((3, 2))
        c = rng.standard_normal((2, 3))
        q = random_psd(rng, 2)
        sys = DiscreteLtiSystem(np.zeros((3, 3)), b, c)
        pair = gramians(sys, q)
        assert np.allclose(pair.Wc, b @ q @ b.T)
        assert np.allclose(pair.Wo, c.T @ c)

    def test_scalar_closed_form(self):
        sys = DiscreteLtiSystem([[0.5]], [[1.0]], [[1.0]])
        pair = gramians(sys, [[1.0]])
        assert pair.Wc[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-10)
        assert pair.Wo[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-10)

    def test_zero_covariance(self):
        sys = DiscreteLtiSystem([[0.5]], [[1.0]], [[1.0]])
        assert np.allclose(gramians(sys, [[0.0]]).Wc, 0.0)

    def test_residuals_on_random_corpus(self):
        rng = np.random.default_rng(14)
        for _ in range(30):
            n = int(rng.integers(1, 8))
            sys = random_stable_system(rng, n, 2, 2)
            q = random_psd(rng, 2)
            pair = gramians(sys, q)
            w = sys.B @ q @ sys.B.T
            assert np.linalg.norm(sys.A @ pair.Wc @ sys.A.T - pair.Wc + w) <= 1e-8 * (
                1 + np.linalg.norm(w)
            )
            assert np.linalg.norm(
                sys.A.T @ pair.Wo @ sys.A - pair.Wo + sys.C.T @ sys.C
            ) <= 1e-8 * (1 + np.linalg.norm(sys.C.T @ sys.C))

    def test_rejects_unstable(self):
        sys = DiscreteLtiSystem(np.eye(2), np.ones((2, 1)), np.ones((1, 2)))
        with pytest.raises(InstabilityError):
            gramians(sys, np.eye(1))


class TestBalancedTruncation:
    def test_full_order_preserves_behavior(self):
        rng = np.random.default_rng(21)
        for _ in range(8):
            n = int(rng.integers(2, 6))
            sys = random_stable_system(rng, n, 2, 2)
            q = random_psd(rng, 2) + 0.2 * np.eye(2)
            model = balanced_truncation(sys, q, n)
            mk0 = sys.markov_parameters(2 * n + 1)
            mk1 = model.as_system().markov_parameters(2 * n + 1)
            scale = max(1.0, np.max(np.abs(mk0)))
            assert np.max(np.abs(mk0 - mk1)) <= 1e-7 * scale

    def test_hankel_values_sorted(self, bench_system):
        model = balanced_truncation(bench_system, np.diag([0.01, 1.0]), 2)
        assert model.mode == "balanced"
        hv = model.hankel_values
        assert np.all(np.diff(hv) <= 1e-12)

    def test_bench_reduction_stable(self, bench_system):
        model = balanced_truncation(bench_system, np.diag([0.01, 1.0]), 2)
        assert model.r == 2
        assert model.spectral_radius() < 1.0

    def test_stability_on_corpus(self):
        rng = np.random.default_rng(33)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            sys = random_stable_system(rng, n, 2, 1)
            r = int(rng.integers(1, n))
            try:
                model = balanced_truncation(sys, np.eye(2), r)
            except RankDeficiencyError:
                continue
            assert model.spectral_radius() < 1.0

    def test_uncontrollable_truncation_rejected(self):
        sys = DiscreteLtiSystem(np.diag([0.5, 0.3]), np.zeros((2, 1)), np.ones((1, 2)))
        with pytest.raises(RankDeficiencyError):
            balanced_truncation(sys, np.eye(1), 1)

    def test_order_bounds(self, bench_system):
        with pytest.raises(DimensionError):
            balanced_truncation(bench_system, np.eye(2), 0)
        with pytest.raises(DimensionError):
            balanced_truncation(bench_system, np.eye(2), 5)


class TestBalancingTransform:
    def test_gramians_equalized(self):
        rng = np.random.default_rng(27)
        for _ in range(8):
            n = int(rng.integers(2, 6))
            sys = random_stable_system(rng, n, 2, 2)
            q = random_psd(rng, 2) + 0.3 * np.eye(2)
            try:
                t, t_inv, sigma = balancing_transform(sys, q)
            except RankDeficiencyError:
                continue
            assert np.allclose(t @ t_inv, np.eye(n), atol=1e-8)
            pair = gramians(sys, q)
            wc_b = t @ pair.Wc @ t.T
            wo_b = t_inv.T @ pair.Wo @ t_inv
            scale = max(1.0, sigma[0])
            assert np.max(np.abs(wc_b - np.diag(sigma))) <= 1e-7 * scale
            assert np.max(np.abs(wo_b - np.diag(sigma))) <= 1e-7 * scale
            assert np.all(np.diff(sigma) <= 1e-12)
