import numpy as np
import pytest
import scipy.stats as st

from betatrace.ensembles import (EnsembleSpec, RngStream, SamplingError,
                                 _gse_raw_eigenvalues, draw, sample_batch,
                                 sample_bounded_trace, sample_fixed_trace,
                                 sample_unconstrained)

import oracles


def trace_moment_target(n, beta):
    return n / 4.0 + 1.0 / (2.0 * beta) - 0.25


class TestEnsembleSpec:
    def test_default_radius(self):
        assert EnsembleSpec(50, 2, "fixed").r == pytest.approx(np.sqrt(50) / 2)
        assert EnsembleSpec(16, 1, "bounded", radius=3.0).r == 3.0

    def test_n_beta(self):
        assert EnsembleSpec(4, 2).n_beta == 16
        assert EnsembleSpec(1, 2).n_beta == 1
        assert EnsembleSpec(50, 1).n_beta == 50 + 50 * 49 // 2

    @pytest.mark.parametrize("kwargs", [
        dict(n=0, beta=2), dict(n=5, beta=3), dict(n=5, beta=2, constraint="capped"),
        dict(n=5, beta=2, constraint="fixed", radius=-1.0),
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            EnsembleSpec(**kwargs)


class TestRngStream:
    def test_child_seed_pure_in_index(self):
        s = RngStream(12345)
        assert s.child_seed(7) == s.child_seed(7)
        assert list(s.child_seeds(0, 10))[3:] == list(s.child_seeds(3, 7))


class TestUnconstrained:
    def test_scalar_case_variance(self):
        # N = 1, beta = 2: the law is a centred normal with variance 1/4
        batch = sample_batch(EnsembleSpec(1, 2), 100_000, 555)
        x = np.array([s.eigenvalues[0] for s in batch])
        var = x.var()
        # s.e. of the variance estimate: sqrt(2 sigma^4 / n)
        assert abs(var - 0.25) < 3 * np.sqrt(2 * 0.25 ** 2 / x.size)
        assert abs(x.mean()) < 4 * 0.5 / np.sqrt(x.size)

    @pytest.mark.parametrize("path", ["tridiagonal", "dense"])
    @pytest.mark.parametrize("beta", [1, 2, 4])
    def test_trace_moment_identity(self, path, beta):
        n, m = 8, 20_000
        batch = sample_batch(EnsembleSpec(n, beta), m, 808, path=path)
        t2 = np.array([np.sum(s.eigenvalues ** 2) for s in batch])
        target = trace_moment_target(n, beta)
        assert abs(t2.mean() - target) < 4 * t2.std(ddof=1) / np.sqrt(m)

    def test_two_by_two_gue_gap_law(self):
        # dense-path gaps vs the rejection-sampling oracle of the exact
        # joint density |x1-x2|^2 exp(-4(x1^2+x2^2))
        m = 20_000
        batch = sample_batch(EnsembleSpec(2, 2), m, 99, path="dense")
        gaps = np.array([s.eigenvalues[1] - s.eigenvalues[0] for s in batch])
        ref = oracles.rejection_gue2_gaps(m, 100)
        assert st.ks_2samp(gaps, ref).pvalue >= 1e-3

    def test_tridiagonal_dense_equivalence(self):
        n, m = 16, 20_000
        top_tri = np.array([s.eigenvalues[-1] for s in
                            sample_batch(EnsembleSpec(n, 2), m, 404)])
        top_dense = np.array([s.eigenvalues[-1] for s in
                              sample_batch(EnsembleSpec(n, 2), m, 405, path="dense")])
        assert st.ks_2samp(top_tri, top_dense).pvalue >= 1e-3

    def test_gse_dedup_pairing(self):
        rng = np.random.default_rng(66)
        for _ in range(50):
            raw = _gse_raw_eigenvalues(12, rng)
            assert raw.size == 24
            pairs = raw.reshape(-1, 2)
            assert np.abs(pairs[:, 1] - pairs[:, 0]).max() < 1e-8

    def test_sorted_output(self):
        s = draw(EnsembleSpec(32, 1), 7)
        assert np.all(np.diff(s.eigenvalues) >= 0)

    def test_wrong_constraint_rejected(self):
        with pytest.raises(ValueError):
            sample_unconstrained(EnsembleSpec(4, 2, "fixed"), 1)

    def test_eigensolver_failure_carries_seed(self, monkeypatch):
        def boom(*args, **kwargs):
            raise np.linalg.LinAlgError("no convergence")
        monkeypatch.setattr(np.linalg, "eigvalsh", boom)
        with pytest.raises(SamplingError, match="seed=123"):
            draw(EnsembleSpec(8, 2), 123)


class TestFixedTrace:
    @pytest.mark.parametrize("beta", [1, 2, 4])
    def test_norm_exact(self, beta):
        spec = EnsembleSpec(50, beta, "fixed")
        batch = sample_batch(spec, 100, 2024)
        for s in batch:
            assert abs(np.sum(s.eigenvalues ** 2) / spec.r ** 2 - 1.0) <= 1e-12

    def test_default_radius_used(self):
        spec = EnsembleSpec(50, 2, "fixed")
        s = sample_fixed_trace(spec, 3)
        assert np.sum(s.eigenvalues ** 2) == pytest.approx(50.0 / 4.0, rel=1e-12)

    def test_scaling_relation_ks(self):
        # spectra at radius r, divided by r, match spectra at radius 1
        n, m = 12, 10_000
        top_r = np.array([s.eigenvalues[-1] / 3.0 for s in
                          sample_batch(EnsembleSpec(n, 2, "fixed", radius=3.0), m, 31)])
        top_1 = np.array([s.eigenvalues[-1] for s in
                          sample_batch(EnsembleSpec(n, 2, "fixed", radius=1.0), m, 32)])
        assert st.ks_2samp(top_r, top_1).pvalue >= 1e-3


class TestBoundedTrace:
    def test_support(self):
        spec = EnsembleSpec(10, 4, "bounded")
        for s in sample_batch(spec, 500, 77):
            assert np.sum(s.eigenvalues ** 2) <= spec.r ** 2

    def test_scalar_radial_factor_uniform(self):
        # N = 1, beta = 2 has N_beta = 1, so u itself is uniform
        spec = EnsembleSpec(1, 2, "bounded")
        u = np.array([abs(s.eigenvalues[0]) / spec.r for s in
                      sample_batch(spec, 20_000, 3131)])
        assert st.kstest(u, "uniform").pvalue >= 1e-3

    def test_radial_law(self):
        spec = EnsembleSpec(4, 2, "bounded")
        batch = sample_batch(spec, 100_000, 515)
        u = np.array([np.sqrt(np.sum(s.eigenvalues ** 2)) / spec.r for s in batch])
        assert st.kstest(u ** spec.n_beta, "uniform").pvalue >= 1e-3


class TestBatching:
    def test_deterministic(self):
        spec = EnsembleSpec(6, 2, "bounded")
        a = sample_batch(spec, 64, 9)
        b = sample_batch(spec, 64, 9)
        for x, y in zip(a, b):
            assert np.array_equal(x.eigenvalues, y.eigenvalues)
            assert x.seed == y.seed

    def test_single_equals_direct_call(self):
        spec = EnsembleSpec(10, 1, "fixed")
        got = sample_batch(spec, 1, 2718)[0]
        direct = draw(spec, RngStream(2718).child_seed(0))
        assert np.array_equal(got.eigenvalues, direct.eigenvalues)

    def test_partition_into_half_batches(self):
        spec = EnsembleSpec(5, 4, "none")
        full = sample_batch(spec, 20, 161)
        first = sample_batch(spec, 10, 161)
        second = sample_batch(spec, 10, 161, start_index=10)
        for x, y in zip(full, first + second):
            assert np.array_equal(x.eigenvalues, y.eigenvalues)

    def test_worker_count_invariance(self):
        spec = EnsembleSpec(80, 2, "fixed")  # above the dense-batch cutoff
        a = sample_batch(spec, 4100, 55, workers=1)
        b = sample_batch(spec, 4100, 55, workers=4)
        for x, y in zip(a, b):
            assert np.array_equal(x.eigenvalues, y.eigenvalues)

    def test_large_n_path_matches_single(self):
        spec = EnsembleSpec(80, 2)
        got = sample_batch(spec, 3, 44)
        for i, s in enumerate(got):
            direct = draw(spec, RngStream(44).child_seed(i), index=i)
            assert np.array_equal(s.eigenvalues, direct.eigenvalues)

    def test_count_validation(self):
        with pytest.raises(ValueError):
            sample_batch(EnsembleSpec(4, 2), 0, 1)

    def test_path_validation(self):
        with pytest.raises(ValueError):
            draw(EnsembleSpec(4, 2), 1, path="sparse")
