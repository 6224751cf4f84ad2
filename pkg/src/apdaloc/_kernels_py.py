"""Numpy implementations of the hot kernels.

These are the reference versions; ``_kernels_c`` must agree with them to
floating-point rounding.
"""

import numpy as np
from scipy import special

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def distance_terms(d_los, d_hat, sigma, p_mp, gamma_r, gamma_f, bias, d_max):
    """Per-particle distance log-likelihood pieces.

    Returns ``log_nl_sum`` (R,) with the sum over measurements of
    ``log f_NL(d_hat_m | p_r)`` and ``log_ratio`` (R, M) with
    ``log f_L(d_hat_m | p_r) - log f_NL(d_hat_m | p_r)``.
    """
    d_los = np.asarray(d_los, dtype=float)
    d_hat = np.asarray(d_hat, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    r, m = d_los.size, d_hat.size
    if m == 0:
        return np.zeros(r), np.empty((r, 0))

    resid = (d_hat[None, :] - d_los[:, None]) / sigma[None, :]
    log_fl = -0.5 * resid * resid - np.log(sigma)[None, :] - LOG_SQRT_2PI

    delta = d_hat[None, :] - d_los[:, None] - bias
    pos = np.maximum(delta, 0.0)
    f_mp = np.where(
        delta > 0,
        (gamma_f + gamma_r) / gamma_f**2 * (-np.expm1(-pos / gamma_r)) * np.exp(-pos / gamma_f),
        0.0,
    )
    f_fa = np.where((d_hat >= 0) & (d_hat <= d_max), 1.0 / d_max, 0.0)
    f_nl = p_mp * f_mp + (1.0 - p_mp) * f_fa[None, :]
    log_fnl = np.log(np.maximum(f_nl, np.finfo(float).tiny))
    return log_fnl.sum(axis=1), log_fl - log_fnl


def row_log_mix(log_base, log_ratio, log_c0, log_w):
    """``log_base[r] + log(exp(log_c0) + sum_m exp(log_ratio[r, m] + log_w[m]))``."""
    log_base = np.asarray(log_base, dtype=float)
    if log_ratio.shape[1] == 0:
        return log_base + log_c0
    terms = log_ratio + np.asarray(log_w)[None, :]
    top = np.maximum(terms.max(axis=1), log_c0)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.exp(log_c0 - top) + np.exp(terms - top[:, None]).sum(axis=1)
        out = log_base + top + np.log(s)
    return np.where(np.isneginf(top), -np.inf, out)


def column_log_mix(log_ratio, log_weight):
    """``log sum_r exp(log_weight[r] + log_ratio[r, m])`` for each column m."""
    if log_ratio.shape[1] == 0:
        return np.empty(0)
    terms = log_ratio + np.asarray(log_weight)[:, None]
    top = terms.max(axis=0)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = safe + np.log(np.exp(terms - safe[None, :]).sum(axis=0))
    return np.where(np.isneginf(top), -np.inf, out)


def systematic_resample(weights, n, offset):
    """Indices drawn by systematic resampling with a single uniform ``offset`` in [0, 1)."""
    weights = np.asarray(weights, dtype=float)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    points = (np.arange(n) + offset) / n
    idx = np.searchsorted(cdf, points, side="right")
    return np.minimum(idx, weights.size - 1).astype(np.intp)


def rice_rayleigh_log_ratio(u, u_hat):
    """(K, M) array of -u^2/2 + u*u_hat + log i0e(u*u_hat)."""
    u = np.asarray(u, dtype=float)
    z = u[:, None] * np.asarray(u_hat, dtype=float)[None, :]
    return -0.5 * u[:, None] ** 2 + z + np.log(special.i0e(z))
