"""Measurement densities for the LOS/NLOS association model.

Distance model: LOS ranges are Gaussian around the geometric distance; NLOS
ranges follow a mixture of a double-exponential multipath excess delay and a
uniform false-alarm density on ``[0, d_max]``.

Amplitude model: normalized amplitudes (square root of SNR) are Rician for
the LOS component and Rayleigh otherwise, both with unit spread and truncated
below the detection threshold ``gamma``.

Scalar helpers accept numpy arrays where that is natural; the batched
``log_amplitude_ratio`` is what the filter uses per time step.
"""

from __future__ import annotations

import numpy as np
from scipy import special, stats

from . import kernels
from .errors import DomainError
from .types import AmplitudeParams, Anchor, Measurement, NlosParams, Scan, los_distance

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


# --- distance ----------------------------------------------------------------


def f_los_distance(meas: Measurement, p, anchor: Anchor) -> float:
    """Gaussian density of the measured distance around the true LOS distance."""
    if not meas.sigma_d_hat > 0:
        raise ValueError("sigma_d_hat must be positive")
    return float(stats.norm.pdf(meas.d_hat, loc=los_distance(p, anchor), scale=meas.sigma_d_hat))


def f_mp_offset(delta, params: NlosParams):
    """Double-exponential excess-distance density evaluated at ``delta``.

    Integrates to one over ``delta > 0``.
    """
    delta = np.asarray(delta, dtype=float)
    g_r, g_f = params.gamma_r, params.gamma_f
    pos = np.maximum(delta, 0.0)
    out = np.where(
        delta > 0,
        (g_f + g_r) / g_f**2 * (-np.expm1(-pos / g_r)) * np.exp(-pos / g_f),
        0.0,
    )
    return out if out.ndim else float(out)


def f_mp(d_hat, p, anchor: Anchor, params: NlosParams):
    delta = np.asarray(d_hat, dtype=float) - los_distance(p, anchor) - params.bias_b
    return f_mp_offset(delta, params)


def f_fa(d_hat, d_max: float):
    """Uniform false-alarm density; both endpoints belong to the support."""
    if not d_max > 0:
        raise ValueError("d_max must be positive")
    d_hat = np.asarray(d_hat, dtype=float)
    out = np.where((d_hat >= 0) & (d_hat <= d_max), 1.0 / d_max, 0.0)
    return out if out.ndim else float(out)


def f_nlos_distance(d_hat, p, anchor: Anchor, params: NlosParams):
    mp = f_mp(d_hat, p, anchor, params)
    fa = f_fa(d_hat, params.d_max)
    return params.p_mp * mp + (1.0 - params.p_mp) * fa


# --- amplitude ---------------------------------------------------------------


def rice_logpdf(x, nu):
    """Log of the unit-spread Rician density at ``x`` with non-centrality ``nu``."""
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(x) - 0.5 * (x - nu) ** 2 + np.log(special.i0e(x * nu))


def rayleigh_logpdf(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(x) - 0.5 * x * x


def log_detection_prob(u, gamma: float):
    """Log of the Marcum-Q function Q1(u, gamma) = P(u_hat > gamma | u)."""
    u = np.asarray(u, dtype=float)
    if gamma == 0:
        return np.zeros_like(u)
    u_safe = np.maximum(u, 0.0)
    out = np.where(
        u_safe > 0,
        stats.ncx2.logsf(gamma * gamma, 2, np.maximum(u_safe, 1e-300) ** 2),
        -0.5 * gamma * gamma,
    )
    return out


def detection_prob(u, gamma: float):
    """Probability that a unit-spread Rician amplitude exceeds ``gamma``."""
    if np.any(np.asarray(u) < 0) or gamma < 0:
        raise ValueError("u and gamma must be non-negative")
    out = np.exp(log_detection_prob(u, gamma))
    return out if np.ndim(out) else float(out)


def f_los_amplitude(u_hat, u, params: AmplitudeParams):
    """Rician LOS amplitude density truncated below ``gamma`` and renormalized."""
    u_hat = np.asarray(u_hat, dtype=float)
    logp = rice_logpdf(u_hat, u) - log_detection_prob(u, params.gamma)
    out = np.where(u_hat >= params.gamma, np.exp(logp), 0.0)
    return out if out.ndim else float(out)


def f_nlos_amplitude(u_hat, params: AmplitudeParams):
    """Rayleigh NLOS amplitude density truncated below ``gamma`` and renormalized."""
    u_hat = np.asarray(u_hat, dtype=float)
    logp = rayleigh_logpdf(u_hat) + 0.5 * params.gamma**2
    out = np.where(u_hat >= params.gamma, np.exp(logp), 0.0)
    return out if out.ndim else float(out)


def log_amplitude_ratio(u_hat, u, params: AmplitudeParams) -> np.ndarray:
    """``log f_L(u_hat_m | u_k) - log f_NL(u_hat_m)`` as a (K, M) array.

    The Rician/Rayleigh ratio is formed analytically, so ``u_hat = 0`` is
    handled without evaluating ``log 0``.
    """
    u_hat = np.atleast_1d(np.asarray(u_hat, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u_hat < params.gamma):
        raise DomainError("amplitude below detection threshold")
    ratio = kernels.rice_rayleigh_log_ratio(u, u_hat)
    return ratio - log_detection_prob(u, params.gamma)[:, None] - 0.5 * params.gamma**2


# --- association and joint factors --------------------------------------------


def association_weight(a: int, m_count: int, p_e: float) -> float:
    """Prior factor of association hypothesis ``a`` in the joint scan factor.

    ``p_e / M`` for each measurement and ``1 - p_e`` for "no LOS measurement".
    With an empty scan only ``a = 0`` is feasible and its weight stays
    ``1 - p_e``: the probability of observing no LOS component at all.
    """
    if not 0.0 <= p_e <= 1.0:
        raise ValueError("p_e must lie in [0, 1]")
    if m_count < 0 or a < 0:
        raise DomainError("a and m_count must be non-negative")
    if a > m_count:
        raise DomainError(f"association {a} exceeds measurement count {m_count}")
    if a == 0:
        return 1.0 - p_e
    return p_e / m_count


def association_prior(a: int, m_count: int, p_e: float) -> float:
    """Probability of association hypothesis ``a`` given ``m_count`` measurements.

    Equals :func:`association_weight` whenever the scan is non-empty; for an
    empty scan the single hypothesis ``a = 0`` is certain.
    """
    weight = association_weight(a, m_count, p_e)
    return 1.0 if m_count == 0 else weight


def check_scan(scan: Scan, d_max: float) -> None:
    """Reject measurements outside ``[0, d_max]``, where the NLOS density vanishes."""
    for m in scan.measurements:
        if not 0.0 <= m.d_hat <= d_max:
            raise DomainError(f"d_hat={m.d_hat} outside [0, {d_max}] (anchor {scan.anchor_id})")


def likelihood_ratio(
    meas: Measurement,
    p,
    anchor: Anchor,
    u: float,
    nlos: NlosParams,
    amp: AmplitudeParams,
    use_amplitude: bool = True,
) -> float:
    """LOS-versus-NLOS likelihood ratio of a single measurement."""
    if not 0.0 <= meas.d_hat <= nlos.d_max:
        raise DomainError(f"d_hat={meas.d_hat} outside [0, {nlos.d_max}]")
    ratio = f_los_distance(meas, p, anchor) / f_nlos_distance(meas.d_hat, p, anchor, nlos)
    if use_amplitude:
        ratio *= float(np.exp(log_amplitude_ratio(meas.u_hat, u, amp)[0, 0]))
    return float(ratio)


def pseudo_likelihood(
    scan: Scan,
    p,
    u: float,
    a: int,
    anchor: Anchor,
    nlos: NlosParams,
    amp: AmplitudeParams,
    use_amplitude: bool = True,
) -> float:
    """Scan likelihood given the association, up to factors independent of all states."""
    check_scan(scan, nlos.d_max)
    if not 0 <= a <= len(scan):
        raise DomainError(f"association {a} invalid for {len(scan)} measurements")
    d_hat = np.array([m.d_hat for m in scan.measurements])
    log_w = float(np.sum(np.log(f_nlos_distance(d_hat, p, anchor, nlos)))) if len(scan) else 0.0
    weight = float(np.exp(log_w))
    if a == 0:
        return weight
    return weight * likelihood_ratio(scan.measurements[a - 1], p, anchor, u, nlos, amp, use_amplitude)


def joint_factor(
    scan: Scan,
    p,
    u: float,
    a: int,
    q: float,
    anchor: Anchor,
    nlos: NlosParams,
    amp: AmplitudeParams,
    use_amplitude: bool = True,
) -> float:
    """Association weight times pseudo-likelihood, with ``p_e = P_D(u) * q``."""
    p_e = float(detection_prob(u, amp.gamma)) * q
    return association_weight(a, len(scan), p_e) * pseudo_likelihood(
        scan, p, u, a, anchor, nlos, amp, use_amplitude
    )
