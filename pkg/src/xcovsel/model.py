"""Block covariance model and sample cross-covariance distributions.

The population model couples p features X and q response variates Y
through a single p_t x q_t cross-covariance block B = G1 diag(D) G2',
with Haar-orthogonal factors and Uniform[0,1] singular values; all
marginal covariances are the identity and every other cross block is
zero.  Three samplers draw the sample cross-covariance S_XY of n
observations from this model:

* ``sample_cross_cov_wishart``: the exact finite-sample law, the
  off-diagonal block of a Wishart(ndof, Sigma/ndof) draw via the
  Bartlett decomposition.
* ``sample_cross_cov_data``: simulates the observations themselves and
  forms the centered cross-covariance; identical distribution at
  O(n p q) cost, usable at dimensions where a dense Wishart is not.
* ``sample_cross_cov_asymptotic``: the Gaussian limit, independent
  normal entries with variance 1/ndof around the population block.

``ndof`` is the effective degrees of freedom and defaults to n - 1 (the
sample-covariance divisor); pass ndof=n to reproduce the convention in
which S_XY is Wishart(n, Sigma/n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import numpy_impl
from .rng import SeedLike, as_generator


@dataclass(frozen=True)
class ModelParams:
    """The four simulation parameters: sample size and block dimensions.

    q_t always equals p_t; the derived totals are p = p_t + p_u features
    and q = p_t + q_u variates.
    """

    n: int
    p_t: int
    p_u: int
    q_u: int

    def __post_init__(self) -> None:
        for name in ("n", "p_t", "p_u", "q_u"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValueError(f"{name} must be an integer, got {v!r}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2 so the sample covariance exists, got {self.n}")
        if self.p_t < 1:
            raise ValueError(f"p_t must be >= 1, got {self.p_t}")
        if self.p_u < 0 or self.q_u < 0:
            raise ValueError("p_u and q_u must be >= 0")

    @property
    def q_t(self) -> int:
        return self.p_t

    @property
    def p(self) -> int:
        return self.p_t + self.p_u

    @property
    def q(self) -> int:
        return self.p_t + self.q_u


@dataclass(frozen=True)
class SignalBlock:
    """The only nonzero cross-covariance block, with its singular values.

    matrix = G1 diag(singular_values) G2' for semiorthogonal G1, G2; the
    stored singular values must match the matrix (checked at 1e-10) and
    lie in [0, 1] so the assembled covariance stays positive
    semidefinite.  Rectangular blocks are allowed; then len(singular_values)
    equals min(matrix.shape).
    """

    matrix: np.ndarray
    singular_values: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        d = np.atleast_1d(np.asarray(self.singular_values, dtype=float))
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError(f"signal matrix must be 2-d and nonempty, got shape {m.shape}")
        if d.shape != (min(m.shape),):
            raise ValueError(
                f"expected {min(m.shape)} singular values for shape {m.shape}, got {d.shape}"
            )
        if np.any(d < -1e-12) or np.any(d > 1.0 + 1e-10):
            raise ValueError("singular values must lie in [0, 1]")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "singular_values", d)
        actual = np.linalg.svd(m, compute_uv=False)
        if np.max(np.abs(np.sort(actual) - np.sort(d))) > 1e-10:
            raise ValueError("stored singular values do not match the matrix")

    @property
    def p_t(self) -> int:
        return self.matrix.shape[0]

    @property
    def q_t(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class CovarianceModel:
    """Full (p+q) x (p+q) covariance with the block layout of the model.

    Identity diagonal blocks; the signal block and its transpose sit in
    the correlated corner of the cross block; zeros elsewhere.  The
    matrix does not depend on the sample size, so n is supplied to the
    samplers, not stored here.
    """

    sigma: np.ndarray
    signal: SignalBlock
    p_u: int
    q_u: int

    @property
    def p_t(self) -> int:
        return self.signal.p_t

    @property
    def q_t(self) -> int:
        return self.signal.q_t

    @property
    def p(self) -> int:
        return self.signal.p_t + self.p_u

    @property
    def q(self) -> int:
        return self.signal.q_t + self.q_u


@dataclass(frozen=True)
class ScaledOmegaModel:
    """A target cross-covariance Omega at reference sample size n0.

    The induced covariance at sample size n has off-diagonal block
    sqrt(n0/n) * Omega, which is positive semidefinite for all n >= n0
    provided the largest singular value of Omega is at most 1 (checked).
    """

    omega: np.ndarray
    n0: int

    def __post_init__(self) -> None:
        om = np.asarray(self.omega, dtype=float)
        if om.ndim != 2 or om.shape[0] < 1 or om.shape[1] < 1:
            raise ValueError(f"omega must be a nonempty 2-d matrix, got shape {om.shape}")
        if not isinstance(self.n0, (int, np.integer)) or self.n0 < 1:
            raise ValueError(f"n0 must be an integer >= 1, got {self.n0!r}")
        top = float(np.linalg.svd(om, compute_uv=False)[0])
        if top > 1.0 + 1e-10:
            raise ValueError(
                f"largest singular value of omega is {top:.6g}; must be <= 1 "
                "for the scaled covariance to stay positive semidefinite"
            )
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "n0", int(self.n0))


def random_orthogonal(dim: int, rng: SeedLike) -> np.ndarray:
    """Haar-uniform random orthogonal matrix.

    Orthonormalizes a standard-normal matrix and fixes column signs so
    the triangular factor has a positive diagonal, which makes the
    distribution exactly Haar.
    """
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise ValueError(f"dim must be an integer >= 1, got {dim!r}")
    return numpy_impl.haar_orthogonal(as_generator(rng), int(dim))


def random_signal_block(p_t: int, rng: SeedLike) -> SignalBlock:
    """One random signal block G1 diag(D) G2' with D iid Uniform[0,1]."""
    if not isinstance(p_t, (int, np.integer)) or p_t < 1:
        raise ValueError(f"p_t must be an integer >= 1, got {p_t!r}")
    gen = as_generator(rng)
    g1 = numpy_impl.haar_orthogonal(gen, int(p_t))
    g2 = numpy_impl.haar_orthogonal(gen, int(p_t))
    d = gen.random(int(p_t))
    return SignalBlock(matrix=(g1 * d) @ g2.T, singular_values=d)


def assemble_sigma(signal: SignalBlock, p_u: int, q_u: int) -> CovarianceModel:
    """Embed a signal block in the full block-identity covariance."""
    if p_u < 0 or q_u < 0:
        raise ValueError("p_u and q_u must be >= 0")
    p = signal.p_t + int(p_u)
    q = signal.q_t + int(q_u)
    sigma = np.eye(p + q)
    sigma[: signal.p_t, p : p + signal.q_t] = signal.matrix
    sigma[p : p + signal.q_t, : signal.p_t] = signal.matrix.T
    return CovarianceModel(sigma=sigma, signal=signal, p_u=int(p_u), q_u=int(q_u))


def scaled_sigma_n(scaled: ScaledOmegaModel, n: int) -> CovarianceModel:
    """Covariance at sample size n with cross block sqrt(n0/n) * Omega."""
    if n < scaled.n0:
        raise ValueError(
            f"n={n} is below the reference size n0={scaled.n0}; positive "
            "semidefiniteness is only guaranteed for n >= n0"
        )
    block = np.sqrt(scaled.n0 / n) * scaled.omega
    sv = np.linalg.svd(block, compute_uv=False)
    signal = SignalBlock(matrix=block, singular_values=sv)
    return assemble_sigma(signal, p_u=0, q_u=0)


def _square_root(sigma: np.ndarray) -> np.ndarray:
    """A square root L with L L' = sigma.

    Cholesky when sigma is numerically positive definite; otherwise an
    eigendecomposition square root with small negative eigenvalues (down
    to -1e-8) clipped to zero.  Any square root yields the same Wishart
    law, so the fallback changes nothing distributionally.
    """
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(sigma)
        if w.min() < -1e-8:
            raise np.linalg.LinAlgError(
                f"covariance is not positive semidefinite: eigenvalue {w.min():.3g}"
            ) from None
        return v * np.sqrt(np.clip(w, 0.0, None))


def _resolve_ndof(n: int, ndof: int | None) -> int:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"sample size n must be an integer >= 2, got {n!r}")
    nu = n - 1 if ndof is None else int(ndof)
    if nu < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {nu}")
    return nu


def _bartlett_factor(rng: np.random.Generator, dim: int, ndof: int) -> np.ndarray:
    """Lower-trapezoidal Bartlett factor A with A A' ~ Wishart(ndof, I).

    A is dim x min(ndof, dim): chi-distributed diagonal, standard-normal
    entries below it, zeros above.  The trapezoidal truncation covers
    ndof < dim, where the Wishart is singular of rank ndof.
    """
    k = min(ndof, dim)
    a = rng.standard_normal((dim, k))
    for j in range(k):
        a[j, j] = np.sqrt(rng.chisquare(float(ndof - j)))
        a[:j, j] = 0.0
    return a


def sample_cross_cov_wishart(
    model: CovarianceModel, n: int, rng: SeedLike, ndof: int | None = None
) -> np.ndarray:
    """One draw of the p x q block of Wishart(ndof, sigma/ndof)."""
    nu = _resolve_ndof(n, ndof)
    gen = as_generator(rng)
    p, q = model.p, model.q
    left = _square_root(model.sigma)
    a = _bartlett_factor(gen, p + q, nu)
    m = left @ a
    return (m[:p] @ m[p:].T) / nu


def sample_cross_cov_data(
    model: CovarianceModel, n: int, rng: SeedLike, ndof: int | None = None
) -> np.ndarray:
    """Sample cross-covariance of ndof+1 simulated observations.

    Centers the columns and divides by ndof, so the result has exactly
    the Wishart sampler's distribution.
    """
    nu = _resolve_ndof(n, ndof)
    gen = as_generator(rng)
    p, q = model.p, model.q
    left = _square_root(model.sigma)
    z = gen.standard_normal((nu + 1, p + q))
    w = z @ left.T
    w -= w.mean(axis=0)
    return (w[:, :p].T @ w[:, p:]) / nu


def sample_cross_cov_asymptotic(
    sigma_xy: np.ndarray, n: int, rng: SeedLike, ndof: int | None = None
) -> np.ndarray:
    """Gaussian-limit draw: sigma_xy plus iid N(0, 1/ndof) noise."""
    nu = _resolve_ndof(n, ndof)
    gen = as_generator(rng)
    sigma_xy = np.asarray(sigma_xy, dtype=float)
    return sigma_xy + gen.standard_normal(sigma_xy.shape) / np.sqrt(nu)
