"""Pure NumPy reference implementation of the Monte Carlo trial kernels.

This module is the readable specification of what one simulation trial
does; ``numba_impl`` is its JIT-compiled twin.  Both draw from the
Generator in the same order:

    per trial: G1 normals, G2 normals, D uniforms, then the sampler's
    normals (and chi-square draws for the Wishart sampler).

Sampler ids: 0 = exact Wishart, 1 = data simulation, 2 = asymptotic
Gaussian.  Method ids: 0 = thresholding, 1 = SVD.  ``ndof`` is the
effective degrees of freedom of the sample cross-covariance (n - 1 under
the default convention).

The model for one trial: the population cross-covariance block is
B = G1 diag(D) G2', with G1, G2 Haar orthogonal of size p_t and D iid
Uniform[0,1].  X covariance and Y covariance are identities; only the
first p_t features and first p_t variates are correlated.
"""

from __future__ import annotations

import numpy as np


def haar_orthogonal(rng: np.random.Generator, dim: int) -> np.ndarray:
    """One Haar-distributed orthogonal matrix via QR of a Gaussian matrix.

    The sign of each column is fixed so the R factor has a positive
    diagonal, which makes the QR-based construction exactly Haar.
    """
    z = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return q * signs


def top_left_singular_vector(s: np.ndarray) -> tuple[np.ndarray, bool]:
    """First left singular vector by power iteration on the smaller Gram side.

    Matrix-free: only products with s and s' are formed.  Starts from the
    row-norm (or column-norm) vector, which has positive overlap with the
    top singular subspace for generic inputs; iterates until the Rayleigh
    quotient is stable to 1e-12 relative or 10,000 iterations elapse.
    Returns (u, ok); ok is False only for a zero matrix.
    """
    p, q = s.shape
    if p <= q:
        u = np.sqrt((s * s).sum(axis=1))
        nrm = np.linalg.norm(u)
        if nrm == 0.0:
            return u, False
        u /= nrm
        lam_prev = -1.0
        for _ in range(10000):
            w = s.T @ u
            lam = w @ w
            u_new = s @ w
            nn = np.linalg.norm(u_new)
            if nn == 0.0:
                return u, False
            u = u_new / nn
            if lam_prev >= 0.0 and abs(lam - lam_prev) <= 1e-12 * lam:
                break
            lam_prev = lam
        return u, True
    v = np.sqrt((s * s).sum(axis=0))
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        return np.zeros(p), False
    v /= nrm
    lam_prev = -1.0
    for _ in range(10000):
        w = s @ v
        lam = w @ w
        v_new = s.T @ w
        nn = np.linalg.norm(v_new)
        if nn == 0.0:
            return np.zeros(p), False
        v = v_new / nn
        if lam_prev >= 0.0 and abs(lam - lam_prev) <= 1e-12 * lam:
            break
        lam_prev = lam
    u = s @ v
    un = np.linalg.norm(u)
    if un == 0.0:
        return np.zeros(p), False
    return u / un, True


def _draw_signal(rng: np.random.Generator, p_t: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial signal block B and the conditional factor K_t.

    K_t = G2 diag(sqrt(1 - D^2)) G2' satisfies B'B + K_t K_t' = I, so
    Y_t = X_t B + Z K_t has unit covariance and Cov(X_t, Y_t) = B.
    """
    g1 = haar_orthogonal(rng, p_t)
    g2 = haar_orthogonal(rng, p_t)
    d = rng.random(p_t)
    b = (g1 * d) @ g2.T
    kt = (g2 * np.sqrt(1.0 - d * d)) @ g2.T
    return b, kt


def _sample_wishart(rng, b, kt, p_t, p, q, ndof):
    """Exact-model sample cross-covariance via the Bartlett decomposition.

    Uses the structured square root F = [[I, 0], [C', K]] of the block
    covariance, so only the products that land in the p x q cross block
    are formed.  The Bartlett factor is lower-trapezoidal of width
    min(ndof, p + q), which covers the degenerate ndof < p + q case.
    """
    dim = p + q
    k = min(ndof, dim)
    a = rng.standard_normal((dim, k))
    for j in range(k):
        a[j, j] = np.sqrt(rng.chisquare(float(ndof - j)))
        a[:j, j] = 0.0
    mx = a[:p, :]
    myt = b.T @ a[:p_t, :] + kt @ a[p : p + p_t, :]
    s = np.empty((p, q))
    s[:, :p_t] = mx @ myt.T
    s[:, p_t:] = mx @ a[p + p_t :, :].T
    s /= ndof
    return s


def _sample_data(rng, b, kt, p_t, p, q, ndof):
    """Sample cross-covariance of ndof+1 simulated observations.

    Y_t columns are built conditionally from the X_t columns, all columns
    are centered, and the divisor is ndof; the result is distributed as
    the Wishart sampler's output at O(n p q) cost.
    """
    m = ndof + 1
    zx = rng.standard_normal((m, p))
    zy = rng.standard_normal((m, q))
    yt = zx[:, :p_t] @ b + zy[:, :p_t] @ kt
    x = zx - zx.mean(axis=0)
    y = np.empty((m, q))
    y[:, :p_t] = yt
    y[:, p_t:] = zy[:, p_t:]
    y -= y.mean(axis=0)
    return (x.T @ y) / ndof


def _sample_asymptotic(rng, b, p_t, p, q, ndof):
    """Gaussian-limit sample: independent normal entries around the signal."""
    s = rng.standard_normal((p, q)) / np.sqrt(float(ndof))
    s[:p_t, :p_t] += b
    return s


def _top_feature_thresholding(s: np.ndarray) -> int:
    scores = np.abs(s).max(axis=1)
    return int(np.argmax(scores))


def mc_batch(
    rng: np.random.Generator,
    p_t: int,
    p_u: int,
    q_u: int,
    ndof: int,
    sampler_id: int,
    method_id: int,
    n_trials: int,
) -> tuple[int, int, int]:
    """Run n_trials independent selection trials; count top-rank losses.

    Returns (loss_sum, used, discarded): loss_sum counts trials whose
    top-ranked feature was a noise feature, used counts completed trials,
    discarded counts SVD trials abandoned because the sampled matrix was
    identically zero (no principal direction).
    """
    p = p_t + p_u
    q = p_t + q_u
    loss_sum = 0
    used = 0
    discarded = 0
    for _ in range(n_trials):
        b, kt = _draw_signal(rng, p_t)
        if sampler_id == 0:
            s = _sample_wishart(rng, b, kt, p_t, p, q, ndof)
        elif sampler_id == 1:
            s = _sample_data(rng, b, kt, p_t, p, q, ndof)
        else:
            s = _sample_asymptotic(rng, b, p_t, p, q, ndof)
        if method_id == 0:
            arg = _top_feature_thresholding(s)
        else:
            if not s.any():
                discarded += 1
                continue
            u, _ok = top_left_singular_vector(s)
            arg = int(np.argmax(np.abs(u)))
        loss_sum += 1 if arg >= p_t else 0
        used += 1
    return loss_sum, used, discarded


def paired_batch(
    rng: np.random.Generator,
    p_t: int,
    p_u: int,
    q_u: int,
    ndof: int,
    method_id: int,
    n_trials: int,
) -> tuple[int, int, int, int]:
    """Common-signal paired trials for exact-vs-asymptotic comparison.

    Each trial draws one signal block and evaluates the loss under both
    the exact Wishart sampler and the asymptotic Gaussian sampler.
    Returns (loss_exact_sum, loss_asym_sum, used, discarded); a pair is
    discarded if either matrix is identically zero under the SVD method.
    """
    p = p_t + p_u
    q = p_t + q_u
    loss_exact = 0
    loss_asym = 0
    used = 0
    discarded = 0
    for _ in range(n_trials):
        b, kt = _draw_signal(rng, p_t)
        s_exact = _sample_wishart(rng, b, kt, p_t, p, q, ndof)
        s_asym = _sample_asymptotic(rng, b, p_t, p, q, ndof)
        if method_id == 0:
            arg_e = _top_feature_thresholding(s_exact)
            arg_a = _top_feature_thresholding(s_asym)
        else:
            if not s_exact.any() or not s_asym.any():
                discarded += 1
                continue
            u_e, _ok = top_left_singular_vector(s_exact)
            u_a, _ok = top_left_singular_vector(s_asym)
            arg_e = int(np.argmax(np.abs(u_e)))
            arg_a = int(np.argmax(np.abs(u_a)))
        loss_exact += 1 if arg_e >= p_t else 0
        loss_asym += 1 if arg_a >= p_t else 0
        used += 1
    return loss_exact, loss_asym, used, discarded
