import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from renewcouple import (
    BoundConfigError,
    Exponential,
    Gamma,
    Pareto,
    Uniform,
    Weibull,
    bound_set,
    kappa_R,
    lorden_theta,
    optimize_R,
    residual,
    series_constants,
    stationary_averaged_K,
    stationary_backward,
    tau_moment_bound,
    tv_bound_curve,
)
from renewcouple.bounds import kappa_R_detail, tv_bound_from_K


def polylog_series(beta, q):
    """``sum_{n>=1} (n+2)^beta q^(n-1)`` through the polylogarithm (independent oracle)."""
    mpmath.mp.dps = 40
    b, x = mpmath.mpf(beta), mpmath.mpf(q)
    return float((mpmath.polylog(-b, x) - x - 2**b * x**2) / x**3)


# --- Theta ------------------------------------------------------------------

def test_theta_examples():
    assert lorden_theta(Exponential(1.0)) == pytest.approx(2.0, rel=1e-14)
    assert lorden_theta(Uniform(0, 1)) == pytest.approx(2 / 3, rel=1e-14)
    assert lorden_theta(Gamma(2.0, 1.0)) == pytest.approx(3.0, rel=1e-14)
    g = Gamma(400.0, 400.0)
    assert lorden_theta(g) == pytest.approx(g.mean, rel=0.05)


# --- kappa_R ------------------------------------------------------------------

@pytest.mark.parametrize("rate", [0.3, 1.0, 4.0])
@pytest.mark.parametrize("R", [0.5, 3.0, 20.0])
def test_kappa_R_exponential_is_one(rate, R):
    assert kappa_R(Exponential(rate), R) == pytest.approx(1.0, abs=1e-9)


def test_kappa_R_uniform_oracle():
    assert kappa_R(Uniform(0, 1), 0.5) == pytest.approx(0.5, abs=1e-4)
    d = kappa_R_detail(Uniform(0, 1), 0.9)
    assert d.value == pytest.approx(0.1, abs=1e-4)
    assert d.argmin == pytest.approx(0.9)
    assert d.value <= d.raw


@pytest.mark.parametrize("law", [Gamma(2.0, 1.0), Weibull(1.5, 1.0), Uniform(0, 1)], ids=str)
def test_kappa_R_at_zero_is_one(law):
    assert kappa_R(law, 0.0) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("law", [Gamma(2.0, 1.0), Weibull(0.8, 1.0), Uniform(0, 1)], ids=str)
def test_kappa_R_nonincreasing_in_R(law):
    Rs = np.array([0.1, 0.3, 0.5, 0.7, 0.9]) * (1.0 if law.support[1] == 1 else 5.0)
    vals = [kappa_R(law, R, grid=65) for R in Rs]
    assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))


def test_kappa_R_rejects_R_at_end_of_support():
    with pytest.raises(ValueError):
        kappa_R(Uniform(0, 1), 1.0)


# --- series -------------------------------------------------------------------

def test_series_closed_forms():
    K1, K2 = series_constants(1.0, 0.5)
    assert K1 == pytest.approx(2.0, abs=1e-10)
    assert K2 == pytest.approx(8.0, abs=1e-10)
    K1, _ = series_constants(2.0, 0.5)
    assert K1 == pytest.approx(8.0, abs=1e-10)


@pytest.mark.parametrize("q", [0.05, 0.3, 0.5, 0.9, 0.99])
def test_series_integer_alpha_closed_forms(q):
    # sum q^(n-1) = 1/(1-q); sum (n+2) q^(n-1) = 1/(1-q)^2 + 2/(1-q)
    K1, K2 = series_constants(1.0, q)
    assert K1 == pytest.approx(1 / (1 - q), rel=1e-10)
    assert K2 == pytest.approx(1 / (1 - q) ** 2 + 2 / (1 - q), rel=1e-10)
    K1b, _ = series_constants(2.0, q)
    assert K1b == pytest.approx(K2, rel=1e-10)


def test_series_q_to_zero():
    K1, K2 = series_constants(1.0, 1e-15)
    assert K1 == pytest.approx(1.0, abs=1e-12) and K2 == pytest.approx(3.0, abs=1e-12)
    assert series_constants(1.0, 0.0) == (1.0, 3.0)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, 2.7])
@pytest.mark.parametrize("q", [0.2, 0.9, 0.999, 0.99995])
def test_series_matches_polylog(alpha, q):
    K1, K2 = series_constants(alpha, q)
    assert K1 == pytest.approx(polylog_series(alpha - 1, q), rel=1e-10)
    assert K2 == pytest.approx(polylog_series(alpha, q), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 4.0), st.floats(0.0, 0.9999))
def test_series_ordering(alpha, q):
    K1, K2 = series_constants(alpha, q)
    assert 1.0 <= K1 <= K2


def test_series_rejects_bad_q():
    with pytest.raises(BoundConfigError):
        series_constants(1.0, 1.0)


# --- moment bounds -----------------------------------------------------------

def test_tau_moment_bound_exp_alpha1():
    law, R = Exponential(1.0), 4.0
    q = 1 - (1 - 2 / R) * math.exp(-R)
    K1, K2 = series_constants(1.0, q)
    assert tau_moment_bound(law, 1.0, R, 0.0, 3.0) == pytest.approx(2 * K1 + K2, rel=1e-12)


@pytest.mark.parametrize("law", [Gamma(2.0, 1.0), Uniform(0, 1)], ids=str)
def test_tau_moment_bound_symmetric(law):
    R = 0.9 if law.support[1] == 1 else 5.0
    a = tau_moment_bound(law, 1.0, R, 0.2, 0.6)
    b = tau_moment_bound(law, 1.0, R, 0.6, 0.2)
    assert a == pytest.approx(b, rel=1e-14)


def test_stationary_K_exp_alpha1():
    law, R = Exponential(1.0), 4.0
    q = 1 - (1 - 2 / R) * math.exp(-R)
    K1, K2 = series_constants(1.0, q)
    K = stationary_averaged_K(law, 1.0, R, 0.0)
    assert K == pytest.approx(2 * K1 + K2, rel=1e-12)
    assert K >= K2 * law.moment(1.0)


@pytest.mark.parametrize("law", [Exponential(1.0), Uniform(0, 1), Gamma(2.0, 1.0)], ids=str)
@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_stationary_overshoot_identity(law, alpha):
    # double quadrature of the stationary average of E theta1(b2)^alpha
    stat = stationary_backward(law)
    hi = float(stat.inverse_cdf(1 - 1e-13))
    direct = integrate.quad(lambda b: residual(law, b).moment(alpha) * float(stat.pdf(b)), 0.0, hi,
                            epsabs=0, epsrel=1e-10, limit=200)[0]
    closed = law.moment(alpha + 1) / ((alpha + 1) * law.mean)
    assert direct == pytest.approx(closed, rel=1e-6)


# --- curve and optimisation ---------------------------------------------------

def test_tv_bound_curve_properties():
    K, alpha = 50.0, 2.0
    t = np.geomspace(1.0, 1e4, 200)
    b = tv_bound_from_K(K, alpha, t)
    assert np.all(np.diff(b) <= 0) and b[-1] < 1e-5
    assert tv_bound_from_K(K, alpha, K ** (1 / alpha)) == pytest.approx(2.0)
    big = t[t > 2 * K ** (1 / alpha)]
    np.testing.assert_allclose(tv_bound_from_K(K, alpha, 2 * big), tv_bound_from_K(K, alpha, big) / 4, rtol=1e-14)
    tt, curve = tv_bound_curve(Exponential(1.0), 1.0, 3.0, 0.0, [10.0, 1e6])
    assert curve[0] == 2.0 and curve[1] < 2.0


def test_optimize_R_exp_alpha1_interior_and_stable():
    law = Exponential(1.0)
    R64, K64 = optimize_R(law, 1.0, 0.0, R_range=(2.1, 20.0), grid=64)
    R256, K256 = optimize_R(law, 1.0, 0.0, R_range=(2.1, 20.0), grid=256)
    assert 2.1 < R64 < 20.0
    assert abs(K256 - K64) / K64 < 0.01
    for R in (2.1, 20.0):
        assert K64 <= stationary_averaged_K(law, 1.0, R, 0.0)


def test_optimize_R_uniform_and_gamma_beat_endpoints():
    for law, rng in ((Uniform(0, 1), (0.67, 0.99)), (Gamma(2.0, 1.0), (3.05, 15.0))):
        R, K = optimize_R(law, 1.0, 0.5, R_range=rng, grid=32)
        for end in rng:
            assert K <= stationary_averaged_K(law, 1.0, end, 0.5) * (1 + 1e-9)


@pytest.mark.parametrize("law,alpha", [(Exponential(1.0), 1.0), (Exponential(1.0), 2.0), (Gamma(2.0, 1.0), 2.0),
                                       (Uniform(0, 1), 1.0), (Weibull(1.5, 1.0), 1.5)], ids=str)
def test_bound_set_invariants(law, alpha):
    bs = bound_set(law, alpha, b1=0.3, b2=0.1)
    for p in (bs.pi_R, bs.P_R, bs.kappa_R, bs.q_R):
        assert 0.0 < p <= 1.0
    assert 0.0 < bs.q_R < 1.0
    assert bs.K1 <= bs.K2
    assert bs.theta == pytest.approx(lorden_theta(law))
    assert bs.R_optimized and bs.R > bs.theta
    assert bs.varpi == pytest.approx(tau_moment_bound(law, alpha, bs.R, 0.3, 0.1, kappa=bs.kappa_R))
    text = bs.format()
    assert "R_star" in text and "K(alpha,b1)" in text


def test_bound_set_uniform_R09():
    bs = bound_set(Uniform(0, 1), 1.0, b1=0.0, R=0.9)
    assert bs.kappa_R == pytest.approx(0.1, abs=1e-4)
    assert bs.pi_R == pytest.approx(1 - (2 / 3) / 0.9)
    assert bs.P_R == pytest.approx(bs.pi_R * 0.1)


def test_infeasible_inputs():
    with pytest.raises(BoundConfigError):
        bound_set(Pareto(1.0, 3.0), 2.0)
    with pytest.raises(BoundConfigError):
        bound_set(Exponential(1.0), 1.0, R=1.5)
    with pytest.raises(BoundConfigError):
        bound_set(Uniform(0, 1), 1.0, R=1.0)
    with pytest.raises(BoundConfigError):
        bound_set(Exponential(1.0), 0.5)
    # pareto(alpha=3): kappa_max = 2, so alpha = 1 is admissible
    assert bound_set(Pareto(1.0, 3.0), 1.0).K1 > 0
