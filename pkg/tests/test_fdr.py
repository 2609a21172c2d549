"""Permutation-null p-values, rankings, and q-values."""

import warnings

import numpy as np
import pytest

from xcovsel import (
    DataMatrix,
    DegenerateMatrixError,
    ascending_rank,
    cross_correlation,
    cross_covariance,
    harmonic_correction,
    pvalues,
    qvalues,
    rank_features,
)


def _toy(n=8, p=5, q=3, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, p)), rng.standard_normal((n, q))


class TestDataMatrix:
    def test_valid(self):
        dm = DataMatrix(np.ones((2, 3)), ("a", "b", "c"), ("r1", "r2"))
        assert dm.n_observations == 2 and dm.n_features == 3

    @pytest.mark.parametrize(
        "values,names,obs",
        [
            (np.array([[np.nan, 1.0]]), ("a", "b"), ("r1",)),
            (np.ones((2, 2)), ("a", "a"), ("r1", "r2")),
            (np.ones((2, 2)), ("a", "b"), ("r1", "r1")),
            (np.ones((2, 2)), ("a",), ("r1", "r2")),
            (np.ones(3), ("a", "b", "c"), ("r1",)),
        ],
    )
    def test_invalid(self, values, names, obs):
        with pytest.raises(ValueError):
            DataMatrix(values, names, obs)


class TestCrossStatistics:
    def test_correlation_matches_per_pair_pearson(self):
        x, y = _toy(6, 4, 3, seed=1)
        got = cross_correlation(x, y)
        for j in range(4):
            for k in range(3):
                expected = np.corrcoef(x[:, j], y[:, k])[0, 1]
                assert np.isclose(got[j, k], expected, atol=1e-12)

    def test_covariance_divisor_is_n(self):
        x, y = _toy(7, 3, 2, seed=2)
        got = cross_covariance(x, y)
        n = 7
        xc = x - x.mean(axis=0)
        yc = y - y.mean(axis=0)
        assert np.allclose(got, (xc.T @ yc) / n, atol=1e-14)
        # and differs from the unbiased divisor
        assert not np.allclose(got, (xc.T @ yc) / (n - 1))

    def test_shared_column_has_unit_correlation(self):
        x, y = _toy(10, 3, 2, seed=3)
        y[:, 0] = x[:, 1]
        corr = cross_correlation(x, y)
        assert abs(corr[1, 0] - 1.0) < 1e-12

    def test_zero_variance_column_zeroed_with_warning(self):
        x, y = _toy(6, 3, 2, seed=4)
        x[:, 2] = 5.0
        with pytest.warns(UserWarning, match="zero variance"):
            corr = cross_correlation(x, y)
        assert np.all(corr[2, :] == 0)
        assert np.all(np.abs(corr) <= 1 + 1e-12)

    def test_minimum_observations(self):
        with pytest.raises(ValueError, match="at least 3"):
            cross_correlation(np.ones((2, 2)), np.ones((2, 2)))
        with pytest.raises(ValueError, match="at least 2"):
            cross_covariance(np.ones((1, 2)), np.ones((1, 2)))

    def test_mismatched_observations(self):
        with pytest.raises(ValueError, match="observation counts differ"):
            cross_covariance(np.ones((3, 2)), np.ones((4, 2)))

    def test_accepts_data_matrices(self):
        x, y = _toy(5, 2, 2, seed=5)
        dx = DataMatrix(x, ("a", "b"), tuple(f"r{i}" for i in range(5)))
        dy = DataMatrix(y, ("u", "v"), tuple(f"r{i}" for i in range(5)))
        assert np.array_equal(cross_covariance(dx, dy), cross_covariance(x, y))


class TestRankingHelpers:
    def test_ascending_rank_with_ties(self):
        assert list(ascending_rank(np.array([0.5, 0.2, 0.5]))) == [2, 1, 3]

    def test_harmonic_correction_values(self):
        assert harmonic_correction(1) == 1.0
        assert np.isclose(harmonic_correction(4), 1 + 1 / 2 + 1 / 3 + 1 / 4)
        assert round(harmonic_correction(585), 2) == 6.95

    def test_qvalue_formula(self):
        q = qvalues(np.array([0.1, 0.2, 0.3]), np.array([1, 2, 3]))
        assert np.allclose(q, [0.3, 0.3, 0.3])

    def test_qvalues_match_naive_reimplementation(self):
        rng = np.random.default_rng(6)
        pv = rng.random(40)
        tau = ascending_rank(pv)
        for correction, c in (("none", 1.0), ("harmonic", harmonic_correction(40))):
            got = qvalues(pv, tau, correction)
            naive = np.array([c * 40 * pv[j] / tau[j] for j in range(40)])
            assert np.allclose(got, naive, atol=1e-14)
        ratio = qvalues(pv, tau, "harmonic") / qvalues(pv, tau, "none")
        assert np.allclose(ratio, harmonic_correction(40))

    def test_qvalues_validation(self):
        with pytest.raises(ValueError):
            qvalues(np.array([0.5, 1.5]), np.array([1, 2]))
        with pytest.raises(ValueError):
            qvalues(np.array([0.5, 0.5]), np.array([1, 3]))
        with pytest.raises(ValueError):
            qvalues(np.array([0.5, 0.5]), np.array([1, 2]), correction="bonferroni")


class TestPvalues:
    def test_deterministic(self):
        x, y = _toy()
        a = pvalues(x, y, mc_res=50, rng=42)
        b = pvalues(x, y, mc_res=50, rng=42)
        assert np.array_equal(a, b)

    def test_range_and_smoothing(self):
        x, y = _toy(seed=7)
        raw = pvalues(x, y, mc_res=40, rng=1)
        smooth = pvalues(x, y, mc_res=40, rng=1, smoothing=True)
        assert np.all((raw >= 0) & (raw <= 1))
        assert np.all(smooth > 0) and np.all(smooth <= 1)
        # add-one smoothing rewrites count/N as (count+1)/(N+1)
        n_pool = 40 * 5
        counts = raw * n_pool
        assert np.allclose(smooth, (counts + 1) / (n_pool + 1), atol=1e-12)

    def test_global_pvalues_monotone_in_score(self):
        x, y = _toy(10, 6, 3, seed=8)
        scores = np.abs(cross_correlation(x, y)).max(axis=1)
        pv = pvalues(x, y, method="thresholding", mc_res=60, rng=2)
        order = np.argsort(-scores)
        assert np.all(np.diff(pv[order]) >= 0)

    def test_feature_permutation_equivariance(self):
        x, y = _toy(9, 5, 3, seed=9)
        perm = np.array([3, 0, 4, 1, 2])
        a = pvalues(x, y, method="thresholding", mc_res=30, rng=5)
        b = pvalues(x[:, perm], y, method="thresholding", mc_res=30, rng=5)
        assert np.array_equal(a[perm], b)

    def test_local_null_counts(self):
        x, y = _toy(8, 4, 2, seed=10)
        pv = pvalues(x, y, null="local", mc_res=25, rng=3)
        counts = pv * 25
        assert np.allclose(counts, np.round(counts), atol=1e-9)

    def test_per_column_shuffle_differs(self):
        x, y = _toy(8, 4, 3, seed=11)
        a = pvalues(x, y, mc_res=30, rng=4, global_shuffle="within-row")
        b = pvalues(x, y, mc_res=30, rng=4, global_shuffle="per-column")
        assert not np.array_equal(a, b)

    def test_worker_count_invariance(self):
        x, y = _toy(8, 4, 2, seed=12)
        for null in ("global", "local"):
            one = pvalues(x, y, null=null, mc_res=24, rng=6, workers=1)
            two = pvalues(x, y, null=null, mc_res=24, rng=6, workers=2)
            assert np.array_equal(one, two)

    def test_degenerate_input_reported(self):
        # every column constant: all cross correlations are identically
        # zero, so the svd score is undefined no matter the permutation
        x = np.ones((5, 2))
        y = np.arange(15.0).reshape(5, 3)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(DegenerateMatrixError):
                pvalues(x, y, method="svd", mc_res=2, rng=0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(null="both"),
            dict(stat="spearman"),
            dict(mc_res=0),
            dict(workers=0),
            dict(global_shuffle="columns"),
            dict(method="lasso"),
        ],
    )
    def test_validation(self, kwargs):
        x, y = _toy()
        with pytest.raises(ValueError):
            pvalues(x, y, **kwargs)


class TestRankFeatures:
    def test_global_rank_follows_scores(self):
        x, y = _toy(10, 6, 3, seed=13)
        report = rank_features(x, y, method="thresholding", mc_res=40, rng=7)
        assert [r.rank for r in report] == list(range(1, 7))
        scores = [r.score for r in report]
        assert scores == sorted(scores, reverse=True)

    def test_local_rank_follows_pvalues(self):
        x, y = _toy(10, 6, 3, seed=14)
        report = rank_features(x, y, null="local", mc_res=40, rng=8)
        pv = [r.p_value for r in report]
        assert pv == sorted(pv)

    def test_default_correction_pairing(self):
        x, y = _toy(10, 5, 3, seed=15)
        thres = rank_features(x, y, method="thresholding", mc_res=30, rng=9)
        svd = rank_features(x, y, method="svd", mc_res=30, rng=9)
        for r in thres:
            assert np.isclose(r.q_value, 5 * r.p_value / r.rank, atol=1e-12)
        c = harmonic_correction(5)
        for r in svd:
            assert np.isclose(r.q_value, c * 5 * r.p_value / r.rank, atol=1e-12)

    def test_explicit_correction_override(self):
        x, y = _toy(10, 5, 3, seed=16)
        report = rank_features(x, y, method="svd", correction="none", mc_res=30, rng=10)
        for r in report:
            assert np.isclose(r.q_value, 5 * r.p_value / r.rank, atol=1e-12)

    def test_feature_names_from_data_matrix(self):
        x, y = _toy(9, 3, 2, seed=17)
        dx = DataMatrix(x, ("alpha", "beta", "gamma"), tuple(f"s{i}" for i in range(9)))
        report = rank_features(dx, y, mc_res=20, rng=11)
        assert {r.feature_name for r in report} == {"alpha", "beta", "gamma"}

    def test_planted_signal_recovered(self):
        rng = np.random.default_rng(18)
        n, p = 30, 10
        y = rng.standard_normal((n, 2))
        x = rng.standard_normal((n, p))
        for j in range(3):
            x[:, j] = y[:, 0] + 0.2 * rng.standard_normal(n)
        for method in ("thresholding", "svd"):
            report = rank_features(x, y, method=method, mc_res=200, rng=12)
            top = {r.feature_name for r in report[:3]}
            assert top == {"f1", "f2", "f3"}
            planted_q = max(r.q_value for r in report[:3])
            null_q = min(r.q_value for r in report[3:])
            assert planted_q < null_q

    def test_single_variate_global_null_warns(self):
        x, y = _toy(10, 4, 1, seed=19)
        with pytest.warns(UserWarning, match="at least 2 response variates"):
            pvalues(x, y, mc_res=10, rng=0)
        # the degenerate null reproduces the observed scores exactly, so
        # the p-values are the rank positions over the pooled scores
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pv = pvalues(x, y, mc_res=10, rng=0)
        assert set(np.round(pv * 4).astype(int)) == {1, 2, 3, 4}
