"""Model assembly and the three cross-covariance samplers."""

import numpy as np
import pytest

from xcovsel import (
    CovarianceModel,
    ModelParams,
    ScaledOmegaModel,
    SignalBlock,
    assemble_sigma,
    random_orthogonal,
    random_signal_block,
    sample_cross_cov_asymptotic,
    sample_cross_cov_data,
    sample_cross_cov_wishart,
    scaled_sigma_n,
)


class TestModelParams:
    def test_derived_dimensions(self):
        mp = ModelParams(n=6, p_t=2, p_u=3, q_u=4)
        assert (mp.q_t, mp.p, mp.q) == (2, 5, 6)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n=1, p_t=1, p_u=0, q_u=0),
            dict(n=2, p_t=0, p_u=0, q_u=0),
            dict(n=2, p_t=1, p_u=-1, q_u=0),
            dict(n=2, p_t=1, p_u=0, q_u=-1),
            dict(n=2.0, p_t=1, p_u=0, q_u=0),
            dict(n=True, p_t=1, p_u=0, q_u=0),
        ],
    )
    def test_rejects_out_of_domain(self, kwargs):
        with pytest.raises(ValueError):
            ModelParams(**kwargs)

    def test_hashable_for_grid_keys(self):
        assert len({ModelParams(2, 2, 5, 0), ModelParams(2, 2, 5, 0)}) == 1


class TestSignalBlock:
    def test_random_block_consistent_and_bounded(self):
        sb = random_signal_block(4, 123)
        assert sb.matrix.shape == (4, 4)
        assert np.all(sb.singular_values >= 0)
        assert np.all(sb.singular_values <= 1)
        actual = np.linalg.svd(sb.matrix, compute_uv=False)
        assert np.allclose(np.sort(actual), np.sort(sb.singular_values), atol=1e-10)

    def test_mismatched_singular_values_rejected(self):
        with pytest.raises(ValueError, match="do not match"):
            SignalBlock(matrix=np.eye(2), singular_values=np.array([1.0, 0.5]))

    def test_singular_values_above_one_rejected(self):
        with pytest.raises(ValueError, match="\\[0, 1\\]"):
            SignalBlock(matrix=2 * np.eye(2), singular_values=np.array([2.0, 2.0]))

    def test_rectangular_block_allowed(self):
        m = np.array([[0.5, 0.0, 0.0], [0.0, 0.25, 0.0]])
        sb = SignalBlock(matrix=m, singular_values=np.array([0.5, 0.25]))
        assert (sb.p_t, sb.q_t) == (2, 3)

    def test_determinism(self):
        a = random_signal_block(3, 7)
        b = random_signal_block(3, 7)
        assert np.array_equal(a.matrix, b.matrix)


class TestRandomOrthogonal:
    def test_orthonormal(self):
        q = random_orthogonal(5, 0)
        assert np.allclose(q @ q.T, np.eye(5), atol=1e-12)

    def test_bad_dim(self):
        with pytest.raises(ValueError):
            random_orthogonal(0, 0)

    def test_uniform_column_direction(self):
        # Haar-invariance spot check: the first column's first coordinate
        # has mean 0 and variance 1/dim.
        dim, reps = 3, 4000
        vals = np.array(
            [random_orthogonal(dim, 10_000 + i)[0, 0] for i in range(reps)]
        )
        assert abs(vals.mean()) < 4 / np.sqrt(reps)
        assert abs(vals.var() - 1 / dim) < 5 * np.sqrt(2.0 / dim**2 / reps) + 0.01


class TestAssembleSigma:
    def test_block_layout_and_symmetry(self):
        sb = random_signal_block(2, 5)
        model = assemble_sigma(sb, p_u=3, q_u=1)
        sigma = model.sigma
        assert sigma.shape == (8, 8)
        assert np.array_equal(sigma, sigma.T)
        assert np.array_equal(np.diag(sigma), np.ones(8))
        assert np.array_equal(sigma[:2, 5:7], sb.matrix)
        assert np.all(sigma[2:5, 5:] == 0)
        assert np.all(sigma[:5, 7:] == 0)

    def test_positive_semidefinite(self):
        for seed in range(5):
            model = assemble_sigma(random_signal_block(3, seed), p_u=2, q_u=2)
            w = np.linalg.eigvalsh(model.sigma)
            assert w.min() > -1e-12
            assert w.max() < 2 + 1e-12

    def test_dimensions(self):
        model = assemble_sigma(random_signal_block(2, 1), p_u=4, q_u=3)
        assert (model.p_t, model.q_t, model.p, model.q) == (2, 2, 6, 5)


class TestScaledOmega:
    def test_omega_spectral_bound_enforced(self):
        with pytest.raises(ValueError, match="singular value"):
            ScaledOmegaModel(omega=1.5 * np.eye(2), n0=4)

    def test_n_below_reference_rejected(self):
        scaled = ScaledOmegaModel(omega=0.8 * np.eye(2), n0=4)
        with pytest.raises(ValueError, match="below the reference"):
            scaled_sigma_n(scaled, 3)

    def test_block_scaling(self):
        scaled = ScaledOmegaModel(omega=0.8 * np.eye(2), n0=4)
        model = scaled_sigma_n(scaled, 16)
        assert np.allclose(model.signal.matrix, 0.4 * np.eye(2))
        assert (model.p, model.q) == (2, 2)


def _small_model(seed=3):
    return assemble_sigma(random_signal_block(2, seed), p_u=1, q_u=1)


class TestSamplers:
    def test_shapes(self):
        model = _small_model()
        assert sample_cross_cov_wishart(model, 5, 0).shape == (3, 3)
        assert sample_cross_cov_data(model, 5, 0).shape == (3, 3)
        assert sample_cross_cov_asymptotic(model.sigma[:3, 3:], 5, 0).shape == (3, 3)

    def test_determinism(self):
        model = _small_model()
        assert np.array_equal(
            sample_cross_cov_wishart(model, 5, 11), sample_cross_cov_wishart(model, 5, 11)
        )

    @pytest.mark.parametrize(
        "sampler", [sample_cross_cov_wishart, sample_cross_cov_data]
    )
    def test_mean_is_population_block(self, sampler):
        model = _small_model()
        block = model.sigma[: model.p, model.p:]
        reps, n = 50_000, 5
        rng = np.random.default_rng(99)
        acc = np.zeros_like(block)
        for _ in range(reps):
            acc += sampler(model, n, rng)
        mean = acc / reps
        # entry stderr is below sqrt(Var)/sqrt(reps) with Var <= 2/ndof
        tol = 5 * np.sqrt(2 / (n - 1) / reps)
        assert np.max(np.abs(mean - block)) < tol

    def test_asymptotic_mean_and_variance(self):
        block = _small_model().sigma[:3, 3:]
        reps, n = 20_000, 10
        rng = np.random.default_rng(5)
        draws = np.stack([sample_cross_cov_asymptotic(block, n, rng) for _ in range(reps)])
        centered = draws - block
        assert np.max(np.abs(centered.mean(axis=0))) < 5 / np.sqrt((n - 1) * reps)
        var = centered.var(axis=0) * (n - 1)
        assert np.max(np.abs(var - 1)) < 5 * np.sqrt(2 / reps)

    def test_ndof_override_changes_scale(self):
        block = np.zeros((2, 2))
        rng = np.random.default_rng(0)
        a = sample_cross_cov_asymptotic(block, 5, 1)
        b = sample_cross_cov_asymptotic(block, 5, 1, ndof=5)
        assert np.allclose(a * np.sqrt(4), b * np.sqrt(5))

    def test_scaled_model_limit_is_standard_normal(self):
        # With the cross block shrinking as sqrt(n0/n), the centered and
        # sqrt(ndof)-scaled sample block approaches entrywise N(0, 1).
        scaled = ScaledOmegaModel(
            omega=np.array([[0.6, 0.2], [0.1, 0.5]]), n0=4
        )
        n = 10_000
        model = scaled_sigma_n(scaled, n)
        block = model.signal.matrix
        reps = 20_000
        rng = np.random.default_rng(17)
        devs = np.empty((reps, 2, 2))
        for i in range(reps):
            s = sample_cross_cov_wishart(model, n, rng, ndof=n)
            devs[i] = np.sqrt(n) * (s - block)
        assert np.max(np.abs(devs.mean(axis=0))) < 4 / np.sqrt(reps)
        assert np.max(np.abs(devs.var(axis=0) - 1)) < 4 * np.sqrt(2 / reps) + 0.01

    def test_wishart_data_samplers_same_distribution(self):
        # Same model, same n: compare means and entrywise second moments.
        model = _small_model(8)
        reps, n = 30_000, 4
        rng = np.random.default_rng(21)
        w = np.stack([sample_cross_cov_wishart(model, n, rng) for _ in range(reps)])
        d = np.stack([sample_cross_cov_data(model, n, rng) for _ in range(reps)])
        se = np.sqrt((w.var(axis=0) + d.var(axis=0)) / reps)
        assert np.max(np.abs(w.mean(axis=0) - d.mean(axis=0)) / se) < 5
        m2w, m2d = (w**2).mean(axis=0), (d**2).mean(axis=0)
        se2 = np.sqrt(((w**2).var(axis=0) + (d**2).var(axis=0)) / reps)
        assert np.max(np.abs(m2w - m2d) / se2) < 5

    def test_singular_sigma_uses_eigh_fallback(self):
        # Unit singular values make sigma exactly singular; cholesky
        # fails and the eigendecomposition root must take over.
        sb = SignalBlock(matrix=np.eye(2), singular_values=np.array([1.0, 1.0]))
        model = assemble_sigma(sb, p_u=1, q_u=1)
        assert np.linalg.eigvalsh(model.sigma).min() < 1e-12
        s = sample_cross_cov_wishart(model, 4, 2)
        assert s.shape == (3, 3) and np.all(np.isfinite(s))

    def test_indefinite_sigma_rejected(self):
        bad = _small_model().sigma.copy()
        bad[0, 0] = -1.0
        model = CovarianceModel(
            sigma=bad, signal=_small_model().signal, p_u=1, q_u=1
        )
        with pytest.raises(np.linalg.LinAlgError):
            sample_cross_cov_wishart(model, 4, 0)

    def test_bad_ndof(self):
        model = _small_model()
        with pytest.raises(ValueError):
            sample_cross_cov_wishart(model, 5, 0, ndof=0)
        with pytest.raises(ValueError):
            sample_cross_cov_wishart(model, 1, 0)
