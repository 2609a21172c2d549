"""Feature scores, rankings, and the top-rank loss.

Both selection methods consume only the p x q cross-covariance (or
cross-correlation) matrix: the thresholding score of a feature is the
largest absolute entry in its row, and the SVD score is the absolute
value of its coefficient in the first left singular vector.  Rankings
order features by descending score, ties to the lowest index; feature
indices in rankings are 1-based.
"""

from __future__ import annotations

import numpy as np

# Diagnostic counters; informational only, not part of any result.
DIAGNOSTICS = {"power_iteration_restarts": 0}


class DegenerateMatrixError(ValueError):
    """The matrix has no principal direction (identically zero)."""


def _validate_matrix(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim != 2 or t.shape[0] < 1 or t.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-d matrix, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError("matrix entries must be finite")
    return t


def score_thresholding(t: np.ndarray) -> np.ndarray:
    """Row-wise maximum absolute entry (the row infinity norm)."""
    t = _validate_matrix(t)
    return np.abs(t).max(axis=1)


def _power_iterate(t: np.ndarray, start: np.ndarray) -> tuple[np.ndarray, float]:
    """Run power iteration from `start`; return (unit u, sigma1^2 estimate).

    Iterates on whichever Gram side is smaller, matrix-free, until the
    Rayleigh quotient changes by at most 1e-12 relative or 10,000
    iterations elapse.
    """
    p, q = t.shape
    if p <= q:
        u = start / np.linalg.norm(start)
        lam = -1.0
        for _ in range(10000):
            w = t.T @ u
            lam_new = float(w @ w)
            u_new = t @ w
            nn = np.linalg.norm(u_new)
            if nn == 0.0:
                return u, lam_new
            u = u_new / nn
            if lam >= 0.0 and abs(lam_new - lam) <= 1e-12 * lam_new:
                return u, lam_new
            lam = lam_new
        return u, lam
    v = start / np.linalg.norm(start)
    lam = -1.0
    for _ in range(10000):
        w = t @ v
        lam_new = float(w @ w)
        v_new = t.T @ w
        nn = np.linalg.norm(v_new)
        if nn == 0.0:
            break
        v = v_new / nn
        if lam >= 0.0 and abs(lam_new - lam) <= 1e-12 * lam_new:
            break
        lam = lam_new
    u = t @ v
    un = np.linalg.norm(u)
    if un == 0.0:
        return np.zeros(p), 0.0
    return u / un, float(np.linalg.norm(t.T @ (u / un)) ** 2)


def first_left_singular_vector(t: np.ndarray) -> np.ndarray:
    """Unit first left singular vector of t by matrix-free power iteration.

    The returned u targets ||t t' u - sigma1^2 u|| <= 1e-8 * sigma1^2;
    its largest-magnitude component is made positive.  If the residual
    check fails (near-coincident top singular values slow the iteration),
    the computation restarts from seeded random vectors; restarts are
    tallied in DIAGNOSTICS["power_iteration_restarts"].  When the top
    singular values tie exactly, any unit vector in the top singular
    subspace passes the residual check and is returned; if every restart
    falls short (a near-tie makes the direction ill-determined), the
    last iterate is returned best-effort.

    Raises DegenerateMatrixError for an identically zero matrix, which
    has no principal direction.
    """
    t = _validate_matrix(t)
    if not t.any():
        raise DegenerateMatrixError("zero matrix has no principal direction")
    p, q = t.shape
    start = np.sqrt((t * t).sum(axis=1)) if p <= q else np.sqrt((t * t).sum(axis=0))
    u = None
    for attempt in range(6):
        if attempt > 0:
            DIAGNOSTICS["power_iteration_restarts"] += 1
            restart_rng = np.random.default_rng(attempt)
            start = restart_rng.standard_normal(p if p <= q else q)
            nrm = np.linalg.norm(start)
            if nrm == 0.0:
                continue
        u, lam = _power_iterate(t, start)
        if lam <= 0.0:
            continue
        residual = np.linalg.norm(t @ (t.T @ u) - lam * u)
        if residual <= 1e-8 * lam:
            break
    assert u is not None
    i = int(np.argmax(np.abs(u)))
    if u[i] < 0:
        u = -u
    return u


def score_svd(t: np.ndarray) -> np.ndarray:
    """Absolute components of the first left singular vector."""
    return np.abs(first_left_singular_vector(t))


def ranking_from_scores(s: np.ndarray) -> np.ndarray:
    """Feature indices (1-based) sorted by descending score.

    Equal scores rank in index order, so the lowest index gets the
    better rank.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.ndim != 1 or s.shape[0] < 1:
        raise ValueError(f"scores must be a nonempty 1-d vector, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    if np.any(s < 0):
        raise ValueError("scores must be nonnegative")
    return np.argsort(-s, kind="stable") + 1


def zero_one_loss(order: np.ndarray, p_t: int) -> int:
    """1 iff the top-ranked feature is a noise feature (index > p_t)."""
    order = np.asarray(order)
    if not 0 <= p_t <= order.shape[0]:
        raise ValueError(f"p_t must be in [0, {order.shape[0]}], got {p_t}")
    return int(order[0] > p_t)
