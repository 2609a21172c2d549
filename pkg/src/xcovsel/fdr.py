"""Permutation-null inference for cross-covariance feature selection.

Given paired data matrices X (observations x features) and Y
(observations x variates), features are scored by the chosen selection
method on the cross-correlation (or cross-covariance) matrix, and
per-feature significance comes from permutation nulls:

* global null: each replicate independently shuffles the entries within
  every observation row of Y, and all features' null scores are pooled
  into one reference distribution shared by every feature;
* local null: each replicate permutes Y's observation order, and each
  feature is compared only to its own null scores.

P-values count null scores >= the observed score (so exact zeros are
possible); q-values follow the step-up formula q = c * p * pvalue / rank
with c = 1 or the harmonic-sum dependence correction.

Replicate i of a run seeded with s draws from the stream derived as
(s, i, attempt); a replicate whose permuted matrix cannot be scored is
redrawn with the next attempt index and counted in DIAGNOSTICS.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .rng import SeedLike, as_seed_sequence, derive
from .risk import normalize_method
from .selectors import DegenerateMatrixError, score_svd, score_thresholding

NULL_KINDS = ("global", "local")
GLOBAL_SHUFFLE_MODES = ("within-row", "per-column")
CORRECTIONS = ("none", "harmonic")

DIAGNOSTICS = {"redrawn_replicates": 0}
_MAX_REDRAWS = 100


@dataclass(frozen=True)
class DataMatrix:
    """A labeled observations x features matrix with no missing values."""

    values: np.ndarray
    feature_names: tuple[str, ...]
    observation_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"values must be a nonempty 2-d matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain missing or non-finite entries")
        names = tuple(str(v) for v in self.feature_names)
        obs = tuple(str(v) for v in self.observation_ids)
        if len(names) != values.shape[1]:
            raise ValueError(
                f"{len(names)} feature names for {values.shape[1]} columns"
            )
        if len(obs) != values.shape[0]:
            raise ValueError(f"{len(obs)} observation ids for {values.shape[0]} rows")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if len(set(obs)) != len(obs):
            raise ValueError("observation ids must be unique")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "observation_ids", obs)

    @property
    def n_observations(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FeatureInference:
    """Per-feature inference record; q_value may exceed 1 (unclipped)."""

    feature_name: str
    score: float
    p_value: float
    rank: int
    q_value: float


def _values(data) -> np.ndarray:
    if isinstance(data, DataMatrix):
        return data.values
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a nonempty 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite entries")
    return arr


def _check_paired(xv: np.ndarray, yv: np.ndarray, min_obs: int) -> None:
    if xv.shape[0] != yv.shape[0]:
        raise ValueError(
            f"observation counts differ: X has {xv.shape[0]}, Y has {yv.shape[0]}"
        )
    if xv.shape[0] < min_obs:
        raise ValueError(f"need at least {min_obs} observations, got {xv.shape[0]}")


def cross_covariance(x_data, y_data) -> np.ndarray:
    """Features-of-X by variates-of-Y sample cross covariance (divisor n)."""
    xv, yv = _values(x_data), _values(y_data)
    _check_paired(xv, yv, 2)
    n = xv.shape[0]
    xc = xv - xv.mean(axis=0)
    yc = yv - yv.mean(axis=0)
    return (xc.T @ yc) / n


def cross_correlation(x_data, y_data) -> np.ndarray:
    """Pearson correlation of each X feature with each Y variate.

    A zero-variance column carries no signal; its correlations are set
    to 0 (the 0/0 convention) with a warning.
    """
    xv, yv = _values(x_data), _values(y_data)
    _check_paired(xv, yv, 3)
    xc = xv - xv.mean(axis=0)
    yc = yv - yv.mean(axis=0)
    sx = np.sqrt((xc * xc).sum(axis=0))
    sy = np.sqrt((yc * yc).sum(axis=0))
    dead_x = sx == 0
    dead_y = sy == 0
    if dead_x.any() or dead_y.any():
        warnings.warn(
            f"{int(dead_x.sum())} X column(s) and {int(dead_y.sum())} Y column(s) "
            "have zero variance; their correlations are set to 0",
            stacklevel=2,
        )
    denom = np.outer(np.where(dead_x, 1.0, sx), np.where(dead_y, 1.0, sy))
    corr = (xc.T @ yc) / denom
    corr[dead_x, :] = 0.0
    corr[:, dead_y] = 0.0
    return corr


_STATS = {"correlation": cross_correlation, "covariance": cross_covariance}


def _score_matrix(t: np.ndarray, method: str) -> np.ndarray:
    if method == "svd":
        return score_svd(t)
    return score_thresholding(t)


def _null_scores(xv, yv, method, null, global_shuffle, stat, base, indices):
    """Score vectors for the given permutation replicates.

    Returns (scores, redraws) where scores has one row per replicate.
    """
    n = yv.shape[0]
    stat_fn = _STATS[stat]
    out = np.empty((len(indices), xv.shape[1]))
    redraws = 0
    for row, i in enumerate(indices):
        for attempt in range(_MAX_REDRAWS):
            gen = np.random.default_rng(derive(base, int(i), attempt))
            if null == "local":
                yp = yv[gen.permutation(n), :]
            elif global_shuffle == "within-row":
                yp = gen.permuted(yv, axis=1)
            else:
                yp = gen.permuted(yv, axis=0)
            try:
                out[row] = _score_matrix(stat_fn(xv, yp), method)
                break
            except DegenerateMatrixError:
                redraws += 1
        else:
            raise DegenerateMatrixError(
                f"replicate {i} stayed degenerate after {_MAX_REDRAWS} redraws"
            )
    return out, redraws


def _replicate_worker(args):
    return _null_scores(*args)


def _pvalues_core(
    xv: np.ndarray,
    yv: np.ndarray,
    observed: np.ndarray,
    method: str,
    null: str,
    mc_res: int,
    base,
    stat: str,
    smoothing: bool,
    global_shuffle: str,
    workers: int,
) -> np.ndarray:
    if workers > 1:
        bounds = np.linspace(0, mc_res, workers + 1).astype(int)
        chunks = [np.arange(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        args = [(xv, yv, method, null, global_shuffle, stat, base, idx) for idx in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_replicate_worker, args))
        scores = np.vstack([s for s, _ in parts])
        redraws = sum(r for _, r in parts)
    else:
        scores, redraws = _replicate_worker(
            (xv, yv, method, null, global_shuffle, stat, base, np.arange(mc_res))
        )
    DIAGNOSTICS["redrawn_replicates"] += redraws

    if null == "global":
        pooled = np.sort(scores, axis=None)
        total = pooled.size
        # count of null scores >= observed, via the sorted pool
        ge = total - np.searchsorted(pooled, observed, side="left")
        if smoothing:
            return (1.0 + ge) / (1.0 + total)
        return ge / total
    ge = (scores >= observed).sum(axis=0)
    if smoothing:
        return (1.0 + ge) / (1.0 + mc_res)
    return ge / mc_res


def pvalues(
    x_data,
    y_data,
    method: str = "thresholding",
    null: str = "global",
    mc_res: int = 1000,
    rng: SeedLike = 0,
    stat: str = "correlation",
    smoothing: bool = False,
    global_shuffle: str = "within-row",
    workers: int = 1,
) -> np.ndarray:
    """Per-feature permutation p-values for the chosen method and null.

    ``smoothing`` switches to the add-one estimator
    (1 + count) / (1 + denominator); default off, so zero p-values are
    possible.  ``global_shuffle`` selects how the global null breaks the
    X-Y pairing: "within-row" shuffles each observation's entries,
    "per-column" permutes each variate across observations.
    """
    method = normalize_method(method)
    if null not in NULL_KINDS:
        raise ValueError(f"null must be one of {NULL_KINDS}, got {null!r}")
    if global_shuffle not in GLOBAL_SHUFFLE_MODES:
        raise ValueError(
            f"global_shuffle must be one of {GLOBAL_SHUFFLE_MODES}, got {global_shuffle!r}"
        )
    if stat not in _STATS:
        raise ValueError(f"stat must be one of {tuple(_STATS)}, got {stat!r}")
    if mc_res < 1:
        raise ValueError(f"mc_res must be >= 1, got {mc_res}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    xv, yv = _values(x_data), _values(y_data)
    _check_paired(xv, yv, 3 if stat == "correlation" else 2)
    if null == "global" and global_shuffle == "within-row" and yv.shape[1] < 2:
        warnings.warn(
            "within-row shuffling needs at least 2 response variates; with one "
            "variate the null equals the observed data (use the local null or "
            "per-column shuffling instead)",
            stacklevel=2,
        )
    observed = _score_matrix(_STATS[stat](xv, yv), method)
    base = as_seed_sequence(rng)
    return _pvalues_core(
        xv, yv, observed, method, null, mc_res, base, stat, smoothing, global_shuffle, workers
    )


def ascending_rank(values: np.ndarray) -> np.ndarray:
    """1-based positions in ascending order, ties to the lowest index."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    rank = np.empty(len(values), dtype=int)
    rank[order] = np.arange(1, len(values) + 1)
    return rank


def harmonic_correction(p: int) -> float:
    """The dependence correction factor: sum of 1/j for j = 1..p."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(np.sum(1.0 / np.arange(1, p + 1)))


def qvalues(p_values: np.ndarray, tau: np.ndarray, correction: str = "none") -> np.ndarray:
    """Step-up q-values: q(j) = c * p * p_value(j) / tau(j), unclipped.

    ``tau`` holds 1-based rank positions in ascending p-value order
    (ties to the lowest index; under a pooled global null this equals
    the score-descending ranking).  c = 1 for "none" or the harmonic sum
    for "harmonic"; values may exceed 1 and are reported as computed.
    """
    pv = np.asarray(p_values, dtype=float)
    tau = np.asarray(tau, dtype=int)
    if pv.ndim != 1 or pv.size == 0:
        raise ValueError("p_values must be a nonempty 1-d array")
    if np.any(pv < 0) or np.any(pv > 1):
        raise ValueError("p-values must lie in [0, 1]")
    if tau.shape != pv.shape or sorted(tau) != list(range(1, len(pv) + 1)):
        raise ValueError("tau must be a 1-based ranking of the p-values")
    if correction not in CORRECTIONS:
        raise ValueError(f"correction must be one of {CORRECTIONS}, got {correction!r}")
    c = harmonic_correction(len(pv)) if correction == "harmonic" else 1.0
    return c * len(pv) * pv / tau


def rank_features(
    x_data,
    y_data,
    method: str = "thresholding",
    null: str = "global",
    mc_res: int = 1000,
    correction: str | None = None,
    rng: SeedLike = 0,
    stat: str = "correlation",
    smoothing: bool = False,
    global_shuffle: str = "within-row",
    workers: int = 1,
) -> list[FeatureInference]:
    """Full per-feature report: score, p-value, rank, q-value.

    Under the global null the rank is the score-descending position
    (the pooled reference makes p a monotone transform of the score);
    under the local null it is the ascending-p position.  Ties go to the
    lowest feature index either way.  correction=None applies the
    default pairing: harmonic for svd, none for thresholding.
    """
    method = normalize_method(method)
    if correction is None:
        correction = "harmonic" if method == "svd" else "none"
    if correction not in CORRECTIONS:
        raise ValueError(f"correction must be one of {CORRECTIONS}, got {correction!r}")
    xv = _values(x_data)
    names = (
        x_data.feature_names
        if isinstance(x_data, DataMatrix)
        else tuple(f"f{j + 1}" for j in range(xv.shape[1]))
    )
    if stat not in _STATS:
        raise ValueError(f"stat must be one of {tuple(_STATS)}, got {stat!r}")
    scores = _score_matrix(_STATS[stat](xv, _values(y_data)), method)
    pv = pvalues(
        x_data, y_data, method, null, mc_res, rng,
        stat=stat, smoothing=smoothing, global_shuffle=global_shuffle, workers=workers,
    )
    if null == "global":
        rank = ascending_rank(-scores)
    else:
        rank = ascending_rank(pv)
    qv = qvalues(pv, rank, correction)
    report = [
        FeatureInference(
            feature_name=names[j],
            score=float(scores[j]),
            p_value=float(pv[j]),
            rank=int(rank[j]),
            q_value=float(qv[j]),
        )
        for j in range(len(scores))
    ]
    report.sort(key=lambda r: r.rank)
    return report
