"""Selection-probability estimation and the closed-form thresholding risk.

``estimate_selection_probability`` runs the full Monte Carlo procedure:
every trial draws a fresh random signal block (the probability
marginalizes over the random population covariance), samples the cross
covariance with the chosen sampler, ranks features with the chosen
method, and records whether the top-ranked feature was correlated.

``asymptotic_thresholding_risk`` evaluates the limiting probability that
thresholding tops a noise feature, as an integral over the maximum of
independent chi-squared scores: with m = p_u * q central entries and
noncentral entries at the scaled signal values, the risk is

    integral_0^inf  m F(x)^(m-1) f(x) * prod_ij F_nc(x; lambda_ij) dx

where F, f are the chi-squared(1) CDF and density and lambda_ij is the
squared scaled signal entry.  The substitution x = t^2 removes the
x^(-1/2) endpoint singularity, leaving a smooth integrand in t that
adaptive Gauss-Kronrod quadrature handles to high accuracy.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from . import kernels
from .model import ModelParams
from .rng import SeedLike, as_seed_sequence, derive
from .selectors import DegenerateMatrixError

METHOD_IDS = {
    "thresholding": kernels.METHOD_THRESHOLDING,
    "thres": kernels.METHOD_THRESHOLDING,
    "svd": kernels.METHOD_SVD,
}
SAMPLER_IDS = {
    "wishart-exact": kernels.SAMPLER_WISHART,
    "wishart": kernels.SAMPLER_WISHART,
    "data-simulation": kernels.SAMPLER_DATA,
    "data": kernels.SAMPLER_DATA,
    "asymptotic-gaussian": kernels.SAMPLER_ASYMPTOTIC,
    "asymptotic": kernels.SAMPLER_ASYMPTOTIC,
    "asym": kernels.SAMPLER_ASYMPTOTIC,
}

# Trials per derived stream; fixing the decomposition (rather than the
# scheduling) is what makes results invariant to the worker count.
CHUNK_TRIALS = 1000


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""


def normalize_method(method: str) -> str:
    m = method.strip().lower()
    if m not in METHOD_IDS:
        raise ValueError(f"unknown method {method!r}; use 'thresholding' or 'svd'")
    return "svd" if METHOD_IDS[m] == kernels.METHOD_SVD else "thresholding"


def normalize_sampler(sampler: str) -> str:
    s = sampler.strip().lower()
    if s not in SAMPLER_IDS:
        raise ValueError(
            f"unknown sampler {sampler!r}; use 'wishart-exact', "
            "'data-simulation', or 'asymptotic-gaussian'"
        )
    sid = SAMPLER_IDS[s]
    return ("wishart-exact", "data-simulation", "asymptotic-gaussian")[sid]


@dataclass(frozen=True)
class RiskEstimate:
    """Binomial Monte Carlo estimate of a selection probability."""

    value: float
    stderr: float
    trials: int
    discarded: int


def _chunk_sizes(mc_res: int) -> list[int]:
    full, rest = divmod(mc_res, CHUNK_TRIALS)
    return [CHUNK_TRIALS] * full + ([rest] if rest else [])


def _chunk_worker(args) -> tuple[int, int, int]:
    ss, p_t, p_u, q_u, ndof, sampler_id, method_id, n_trials = args
    rng = np.random.default_rng(ss)
    return kernels.mc_batch(rng, p_t, p_u, q_u, ndof, sampler_id, method_id, n_trials)


def estimate_selection_probability(
    params: ModelParams,
    method: str,
    sampler: str,
    mc_res: int,
    rng: SeedLike,
    workers: int = 1,
    ndof: int | None = None,
) -> RiskEstimate:
    """Monte Carlo estimate of P(top-ranked feature is correlated).

    Work is split into fixed chunks of CHUNK_TRIALS trials; chunk i draws
    from the stream derived as (seed, 0, i), so the estimate is identical
    for any worker count.  SVD trials on an identically zero matrix are
    discarded and excluded from the denominator.
    """
    if mc_res < 1:
        raise ValueError(f"mc_res must be >= 1, got {mc_res}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    method_id = METHOD_IDS[normalize_method(method)]
    sampler_id = SAMPLER_IDS[normalize_sampler(sampler)]
    nu = params.n - 1 if ndof is None else int(ndof)
    if nu < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {nu}")
    base = as_seed_sequence(rng)
    tasks = [
        (derive(base, 0, i), params.p_t, params.p_u, params.q_u, nu, sampler_id, method_id, size)
        for i, size in enumerate(_chunk_sizes(mc_res))
    ]
    if workers == 1 or len(tasks) == 1:
        results = [_chunk_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk_worker, tasks))
    loss_sum = sum(r[0] for r in results)
    used = sum(r[1] for r in results)
    discarded = sum(r[2] for r in results)
    if used == 0:
        raise DegenerateMatrixError("every trial was discarded as degenerate")
    value = (used - loss_sum) / used
    stderr = float(np.sqrt(value * (1.0 - value) / used))
    return RiskEstimate(value=value, stderr=stderr, trials=used, discarded=discarded)


@dataclass(frozen=True)
class SweepTable:
    """Per-point estimates of a grid sweep; failed points are recorded."""

    estimates: dict[ModelParams, RiskEstimate]
    failures: dict[ModelParams, str]


def sweep_risk_surface(
    grid: list[ModelParams],
    method: str,
    sampler: str,
    mc_res: int,
    rng: SeedLike,
    workers: int = 1,
    ndof: int | None = None,
) -> SweepTable:
    """One RiskEstimate per grid point.

    Point i uses the stream derived as (seed, 1, i), with the estimator's
    chunking below it, so the table does not depend on the worker count.
    A point that raises is recorded in failures and does not abort the
    sweep.
    """
    if not grid:
        raise ValueError("grid must be nonempty")
    base = as_seed_sequence(rng)
    estimates: dict[ModelParams, RiskEstimate] = {}
    failures: dict[ModelParams, str] = {}
    for i, params in enumerate(grid):
        try:
            estimates[params] = estimate_selection_probability(
                params, method, sampler, mc_res, derive(base, 1, i), workers=workers, ndof=ndof
            )
        except Exception as exc:  # recorded, not fatal
            failures[params] = f"{type(exc).__name__}: {exc}"
    return SweepTable(estimates=estimates, failures=failures)


def noncentral_chisq1_cdf(x, lam):
    """CDF of the noncentral chi-squared with 1 degree of freedom.

    P[Z^2 <= x] for Z ~ N(sqrt(lam), 1), evaluated in terms of the normal
    CDF as Phi(sqrt(x) - sqrt(lam)) - Phi(-sqrt(x) - sqrt(lam)).  Accepts
    scalars or arrays (broadcast); absolute error is at the level of the
    underlying normal CDF (~1e-16).
    """
    x_arr = np.asarray(x, dtype=float)
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(x_arr < 0) or np.any(lam_arr < 0):
        raise ValueError("x and lam must be nonnegative")
    rx = np.sqrt(x_arr)
    rl = np.sqrt(lam_arr)
    out = ndtr(rx - rl) - ndtr(-rx - rl)
    if np.isscalar(x) and np.isscalar(lam):
        return float(out)
    return out


def asymptotic_thresholding_risk(
    scaled_signal: np.ndarray,
    p_u: int,
    q: int,
    epsabs: float = 1e-10,
    epsrel: float = 1e-10,
    limit: int = 200,
) -> float:
    """Limiting probability that thresholding top-ranks a noise feature.

    ``scaled_signal`` holds the scaled population cross-covariances of
    the correlated rows (entry magnitudes are the noncentral means); it
    may have fewer than q columns, in which case the remaining columns
    are zero.  ``p_u`` is the number of noise rows and ``q`` the total
    column count.  Returns 0 immediately when p_u = 0 (no noise feature
    can be top-ranked).
    """
    if p_u < 0 or q < 1:
        raise ValueError("require p_u >= 0 and q >= 1")
    sig = np.atleast_2d(np.asarray(scaled_signal, dtype=float))
    if sig.shape[1] > q:
        raise ValueError(f"scaled_signal has {sig.shape[1]} columns but q={q}")
    if not np.all(np.isfinite(sig)):
        raise ValueError("scaled_signal entries must be finite")
    if p_u == 0:
        return 0.0
    mu = np.abs(np.concatenate([sig.ravel(), np.zeros(sig.shape[0] * (q - sig.shape[1]))]))
    m = p_u * q

    def integrand(t: float) -> float:
        # x = t^2; d[F_c(x)^m] = m (2 Phi(t) - 1)^(m-1) * 2 phi(t) dt
        log_c = np.log1p(-2.0 * ndtr(-t))
        dens = m * np.exp((m - 1) * log_c) * 2.0 * np.exp(-0.5 * t * t) / np.sqrt(2.0 * np.pi)
        prod = float(np.prod(ndtr(t - mu) - ndtr(-t - mu)))
        return dens * prod

    upper = max(10.0, float(mu.max()) + 10.0)
    value, abserr = integrate.quad(integrand, 0.0, upper, epsabs=epsabs, epsrel=epsrel, limit=limit)
    if abserr > 1e-6:
        raise QuadratureError(f"quadrature error estimate {abserr:.3g} exceeds 1e-6")
    return float(value)
