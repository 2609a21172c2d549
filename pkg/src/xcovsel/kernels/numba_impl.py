"""JIT-compiled twin of ``numpy_impl``; same contract, same draw order.

Loops replace vectorized reductions and operands are made contiguous
before matrix products, but the Generator is consumed identically, so a
fixed seed produces the same trial stream as the NumPy backend.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def haar_orthogonal(rng, dim):
    z = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    for j in range(dim):
        if r[j, j] < 0.0:
            for i in range(dim):
                q[i, j] = -q[i, j]
    return q


@njit(cache=True)
def top_left_singular_vector(s):
    p, q = s.shape
    if p <= q:
        u = np.empty(p)
        for i in range(p):
            acc = 0.0
            for j in range(q):
                acc += s[i, j] * s[i, j]
            u[i] = np.sqrt(acc)
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
    v = np.empty(q)
    for j in range(q):
        acc = 0.0
        for i in range(p):
            acc += s[i, j] * s[i, j]
        v[j] = np.sqrt(acc)
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


@njit(cache=True)
def _draw_signal(rng, p_t):
    g1 = haar_orthogonal(rng, p_t)
    g2 = haar_orthogonal(rng, p_t)
    d = rng.random(p_t)
    g2t = np.ascontiguousarray(g2.T)
    b = np.ascontiguousarray((g1 * d) @ g2t)
    kt = (g2 * np.sqrt(1.0 - d * d)) @ g2t
    return b, kt


@njit(cache=True)
def _sample_wishart(rng, b, kt, p_t, p, q, ndof):
    dim = p + q
    k = min(ndof, dim)
    a = rng.standard_normal((dim, k))
    for j in range(k):
        a[j, j] = np.sqrt(rng.chisquare(float(ndof - j)))
        for i in range(j):
            a[i, j] = 0.0
    mx = np.ascontiguousarray(a[:p, :])
    myt = np.ascontiguousarray(b.T) @ np.ascontiguousarray(a[:p_t, :]) + kt @ np.ascontiguousarray(a[p : p + p_t, :])
    s = np.empty((p, q))
    s[:, :p_t] = mx @ np.ascontiguousarray(myt.T)
    s[:, p_t:] = mx @ np.ascontiguousarray(a[p + p_t :, :].T)
    s /= ndof
    return s


@njit(cache=True)
def _sample_data(rng, b, kt, p_t, p, q, ndof):
    m = ndof + 1
    zx = rng.standard_normal((m, p))
    zy = rng.standard_normal((m, q))
    zyt = np.ascontiguousarray(zy[:, :p_t])
    yt = np.ascontiguousarray(zx[:, :p_t]) @ b + zyt @ kt
    x = zx
    for jj in range(p):
        mu = 0.0
        for ii in range(m):
            mu += x[ii, jj]
        mu /= m
        for ii in range(m):
            x[ii, jj] -= mu
    y = np.empty((m, q))
    y[:, :p_t] = yt
    y[:, p_t:] = zy[:, p_t:]
    for jj in range(q):
        mu = 0.0
        for ii in range(m):
            mu += y[ii, jj]
        mu /= m
        for ii in range(m):
            y[ii, jj] -= mu
    return (np.ascontiguousarray(x.T) @ y) / ndof


@njit(cache=True)
def _sample_asymptotic(rng, b, p_t, p, q, ndof):
    z = rng.standard_normal((p, q))
    s = z / np.sqrt(float(ndof))
    s[:p_t, :p_t] += b
    return s


@njit(cache=True)
def _top_feature_thresholding(s):
    p, q = s.shape
    best = -1.0
    arg = 0
    for i in range(p):
        row = 0.0
        for j in range(q):
            v = abs(s[i, j])
            if v > row:
                row = v
        if row > best:
            best = row
            arg = i
    return arg


@njit(cache=True)
def _top_feature_svd(s):
    # returns (arg, degenerate)
    p, q = s.shape
    allzero = True
    for i in range(p):
        for j in range(q):
            if s[i, j] != 0.0:
                allzero = False
                break
        if not allzero:
            break
    if allzero:
        return 0, True
    u, _ok = top_left_singular_vector(s)
    best = -1.0
    arg = 0
    for i in range(p):
        v = abs(u[i])
        if v > best:
            best = v
            arg = i
    return arg, False


@njit(cache=True)
def mc_batch(rng, p_t, p_u, q_u, ndof, sampler_id, method_id, n_trials):
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
            arg, degenerate = _top_feature_svd(s)
            if degenerate:
                discarded += 1
                continue
        loss_sum += 1 if arg >= p_t else 0
        used += 1
    return loss_sum, used, discarded


@njit(cache=True)
def paired_batch(rng, p_t, p_u, q_u, ndof, method_id, n_trials):
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
            arg_e, degen_e = _top_feature_svd(s_exact)
            arg_a, degen_a = _top_feature_svd(s_asym)
            if degen_e or degen_a:
                discarded += 1
                continue
        loss_exact += 1 if arg_e >= p_t else 0
        loss_asym += 1 if arg_a >= p_t else 0
        used += 1
    return loss_exact, loss_asym, used, discarded
