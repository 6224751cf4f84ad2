"""Density values and normalization against quadrature and arbitrary-precision oracles."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from apdaloc.errors import DomainError
from apdaloc.likelihoods import (
    association_prior,
    association_weight,
    check_scan,
    detection_prob,
    f_fa,
    f_los_amplitude,
    f_los_distance,
    f_mp,
    f_mp_offset,
    f_nlos_amplitude,
    f_nlos_distance,
    joint_factor,
    likelihood_ratio,
    log_amplitude_ratio,
    pseudo_likelihood,
)
from apdaloc.types import AmplitudeParams, Anchor, Measurement, NlosParams, Scan

ORIGIN = Anchor(1, (0.0, 0.0))

# frozen from 30-digit mpmath evaluations (see the oracle tests below)
F_MP_AT_1_8 = 0.10785167927776834
RICE_5_5 = 0.40098386773718354
MARCUM_Q_3_2 = 0.88672075440239226
RATIO_AT_PEAK = 1994.7114020071634


def mp_f_mp(delta, gr=1.5, gf=6.0):
    delta = mp.mpf(delta)
    return (gf + gr) / mp.mpf(gf) ** 2 * (1 - mp.e ** (-delta / gr)) * mp.e ** (-delta / gf)


def test_frozen_values_match_mpmath():
    mp.mp.dps = 30
    assert float(mp_f_mp(1.8)) == pytest.approx(F_MP_AT_1_8, rel=1e-15)
    assert float(5 * mp.e ** (-25) * mp.besseli(0, 25)) == pytest.approx(RICE_5_5, rel=1e-15)
    q = mp.quad(lambda x: x * mp.e ** (-(x * x + 9) / 2) * mp.besseli(0, 3 * x), [2, mp.inf])
    assert float(q) == pytest.approx(MARCUM_Q_3_2, rel=1e-14)
    ratio = 1 / (mp.mpf("0.1") * mp.sqrt(2 * mp.pi)) / (mp.mpf("0.1") / 50)
    assert float(ratio) == pytest.approx(RATIO_AT_PEAK, rel=1e-15)


# --- distance -------------------------------------------------------------------


def test_f_los_distance_peak_and_one_sigma():
    peak = f_los_distance(Measurement(5.0, 1.0, 0.1), (3.0, 4.0), ORIGIN)
    assert peak == pytest.approx(1 / (0.1 * math.sqrt(2 * math.pi)), rel=1e-14)
    assert peak == pytest.approx(3.98942, abs=1e-5)
    one = f_los_distance(Measurement(5.1, 1.0, 0.1), (3.0, 4.0), ORIGIN)
    assert one == pytest.approx(peak * math.exp(-0.5), rel=1e-12)
    assert f_los_distance(Measurement(45.0, 1.0, 0.1), (3.0, 4.0), ORIGIN) < 1e-300


def test_f_mp_examples(nlos):
    assert f_mp_offset(0.0, nlos) == 0.0
    assert f_mp_offset(-3.0, nlos) == 0.0
    # d_LOS = 10, d_hat = 12, B = 0.2
    value = f_mp(12.0, (10.0, 0.0), ORIGIN, nlos)
    assert value == pytest.approx(F_MP_AT_1_8, rel=1e-13)
    assert value == pytest.approx(0.10782, rel=5e-4)  # approximate figure quoted by the spec


def test_f_mp_integrates_to_one(nlos):
    total, _ = integrate.quad(lambda x: f_mp_offset(x, nlos), 0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


@given(st.floats(0.1, 5.0), st.floats(0.5, 20.0))
@settings(max_examples=25, deadline=None)
def test_f_mp_normalized_for_any_scales(gr, gf):
    params = NlosParams(gamma_r=gr, gamma_f=gf)
    total, _ = integrate.quad(lambda x: f_mp_offset(x, params), 0, np.inf, epsabs=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_f_fa_support():
    assert f_fa(10.0, 50.0) == pytest.approx(0.02)
    assert f_fa(60.0, 50.0) == 0.0
    assert f_fa(0.0, 50.0) == pytest.approx(1 / 50)
    assert f_fa(50.0, 50.0) == pytest.approx(1 / 50)
    with pytest.raises(ValueError):
        f_fa(1.0, 0.0)


def test_f_nlos_distance_mixture(nlos):
    value = f_nlos_distance(12.0, (10.0, 0.0), ORIGIN, nlos)
    assert value == pytest.approx(0.9 * F_MP_AT_1_8 + 0.1 * 0.02, rel=1e-13)
    assert value == pytest.approx(0.099038, rel=5e-4)  # spec figure, built on the rounded f_mp
    uniform = NlosParams(p_mp=0.0)
    d = np.linspace(0, 50, 11)
    np.testing.assert_array_equal(f_nlos_distance(d, (10.0, 0.0), ORIGIN, uniform), f_fa(d, 50.0))


def test_f_nlos_distance_integrates_to_one(nlos):
    p = (3.0, 4.0)
    total, _ = integrate.quad(
        lambda d: f_nlos_distance(d, p, ORIGIN, nlos), 0, 500, points=[5.2, 50.0], limit=400, epsabs=1e-12
    )
    # mass of f_mp beyond the integration bound is negligible here
    assert total == pytest.approx(1.0, abs=1e-8)


# --- amplitude ------------------------------------------------------------------


def test_rice_reduces_to_rayleigh():
    params = AmplitudeParams(gamma=0.0)
    assert f_los_amplitude(1.0, 0.0, params) == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert f_nlos_amplitude(1.0, params) == pytest.approx(0.60653, abs=1e-5)
    assert f_los_amplitude(5.0, 5.0, params) == pytest.approx(RICE_5_5, rel=1e-13)


@pytest.mark.parametrize("gamma", [0.0, 1.0, 2.0])
@pytest.mark.parametrize("u", [0.0, 0.7, 3.0, 10.0])
def test_truncated_rice_integrates_to_one(gamma, u):
    params = AmplitudeParams(gamma=gamma)
    total, _ = integrate.quad(lambda x: f_los_amplitude(x, u, params), gamma, np.inf, epsabs=1e-13, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("gamma", [0.0, 1.0, 2.0])
def test_truncated_rayleigh_integrates_to_one(gamma):
    params = AmplitudeParams(gamma=gamma)
    total, _ = integrate.quad(lambda x: f_nlos_amplitude(x, params), gamma, np.inf, epsabs=1e-13)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert f_nlos_amplitude(gamma - 0.5, params) == 0.0


def test_detection_probability():
    assert detection_prob(np.array([0.0, 3.0, 30.0]), 0.0) == pytest.approx([1.0, 1.0, 1.0])
    for gamma in (0.5, 1.0, 2.5):
        assert detection_prob(0.0, gamma) == pytest.approx(math.exp(-gamma**2 / 2), rel=1e-13)
    assert detection_prob(3.0, 2.0) == pytest.approx(MARCUM_Q_3_2, rel=1e-12)
    with pytest.raises(ValueError):
        detection_prob(-1.0, 1.0)


def test_log_amplitude_ratio_matches_density_ratio():
    params = AmplitudeParams(gamma=1.0)
    u_hat = np.array([1.0, 2.5, 7.0])
    u = np.array([0.0, 2.0, 9.0])
    expected = np.log(
        f_los_amplitude(u_hat[None, :], u[:, None], params) / f_nlos_amplitude(u_hat[None, :], params)
    )
    np.testing.assert_allclose(log_amplitude_ratio(u_hat, u, params), expected, rtol=1e-12, atol=1e-12)
    with pytest.raises(DomainError):
        log_amplitude_ratio([0.5], [1.0], params)


def test_log_amplitude_ratio_handles_zero_amplitude():
    out = log_amplitude_ratio([0.0, 1.0], [0.0], AmplitudeParams())
    np.testing.assert_allclose(out, 0.0, atol=1e-15)  # Rice with u = 0 is Rayleigh


# --- association and joint factors -------------------------------------------------


def test_association_prior_values():
    assert association_prior(3, 10, 0.8) == pytest.approx(0.08)
    assert association_prior(0, 10, 0.8) == pytest.approx(0.2)
    assert association_prior(0, 4, 0.0) == 1.0
    assert association_prior(2, 4, 0.0) == 0.0
    with pytest.raises(DomainError):
        association_prior(5, 4, 0.5)
    assert association_prior(0, 0, 0.8) == 1.0
    assert association_weight(0, 0, 0.8) == pytest.approx(0.2)


@pytest.mark.parametrize("m", [0, 1, 5, 50])
@pytest.mark.parametrize("p_e", [0.0, 0.3, 1.0])
def test_association_prior_sums_to_one(m, p_e):
    total = sum(association_prior(a, m, p_e) for a in range(m + 1))
    assert total == pytest.approx(1.0, abs=1e-14)
    weights = sum(association_weight(a, m, p_e) for a in range(m + 1))
    assert weights == pytest.approx(1.0 - p_e if m == 0 else 1.0, abs=1e-14)


def test_likelihood_ratio_example(nlos):
    amp = AmplitudeParams()
    meas = Measurement(5.0, 3.0, 0.1)
    # d_hat = d_LOS, so delta = -B < 0 and only the uniform part remains
    assert likelihood_ratio(meas, (3.0, 4.0), ORIGIN, 2.0, nlos, amp, use_amplitude=False) == pytest.approx(
        RATIO_AT_PEAK, rel=1e-12
    )
    assert likelihood_ratio(meas, (3.0, 4.0), ORIGIN, 0.0, nlos, amp) == pytest.approx(RATIO_AT_PEAK, rel=1e-12)
    with pytest.raises(DomainError):
        likelihood_ratio(Measurement(55.0, 1.0, 0.1), (3.0, 4.0), ORIGIN, 1.0, nlos, amp)


def test_pseudo_likelihood_structure(nlos):
    amp = AmplitudeParams()
    p, u = (3.0, 4.0), 4.0
    assert pseudo_likelihood(Scan(1, 1), p, u, 0, ORIGIN, nlos, amp) == 1.0
    one = Scan.from_arrays(1, 1, [5.05], [4.2], [0.1])
    m1 = one.measurements[0]
    assert pseudo_likelihood(one, p, u, 0, ORIGIN, nlos, amp) == pytest.approx(f_nlos_distance(5.05, p, ORIGIN, nlos))
    expected = (
        f_los_distance(m1, p, ORIGIN) * f_los_amplitude(4.2, u, amp) / f_nlos_amplitude(4.2, amp)
    )
    assert pseudo_likelihood(one, p, u, 1, ORIGIN, nlos, amp) == pytest.approx(expected, rel=1e-12)
    three = Scan.from_arrays(1, 1, [5.05, 9.0, 20.0], [4.2, 1.0, 0.5], [0.1, 0.2, 0.3])
    w0 = pseudo_likelihood(three, p, u, 0, ORIGIN, nlos, amp)
    w2 = pseudo_likelihood(three, p, u, 2, ORIGIN, nlos, amp)
    assert w2 / w0 == pytest.approx(likelihood_ratio(three.measurements[1], p, ORIGIN, u, nlos, amp), rel=1e-12)


def test_joint_factor_properties(nlos):
    amp = AmplitudeParams()
    scan = Scan.from_arrays(1, 1, [5.05, 9.0], [4.2, 1.0], [0.1, 0.2])
    p, u = (3.0, 4.0), 4.0
    # q -> 0 puts all mass on a = 0
    assert joint_factor(scan, p, u, 1, 0.0, ORIGIN, nlos, amp) == 0.0
    # gamma = 0: p_e equals q exactly
    for a in range(3):
        expected = association_weight(a, 2, 0.7) * pseudo_likelihood(scan, p, u, a, ORIGIN, nlos, amp)
        assert joint_factor(scan, p, u, a, 0.7, ORIGIN, nlos, amp) == pytest.approx(expected, rel=1e-15)
    # marginal over a equals (1 - q) f_NL-product + q/M * sum of ratio-weighted products
    base = pseudo_likelihood(scan, p, u, 0, ORIGIN, nlos, amp)
    ratios = [likelihood_ratio(m, p, ORIGIN, u, nlos, amp) for m in scan.measurements]
    total = sum(joint_factor(scan, p, u, a, 0.7, ORIGIN, nlos, amp) for a in range(3))
    assert total == pytest.approx(base * (0.3 + 0.7 / 2 * sum(ratios)), rel=1e-12)


def test_check_scan_rejects_out_of_range(nlos):
    check_scan(Scan.from_arrays(1, 1, [0.0, 50.0], [1.0, 1.0], [0.1, 0.1]), nlos.d_max)
    with pytest.raises(DomainError):
        check_scan(Scan.from_arrays(1, 1, [50.5], [1.0], [0.1]), nlos.d_max)
