import math

import mpmath as mpm
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special as sp

from inv2scatter.errors import DomainError
from inv2scatter.specfun import (AI0, BI0, airy_eval, airy_osc, airy_scaled, bessel_uniform,
                                 hankel1_scaled)


def _maclaurin_ai(x, nterms=40):
    """Ascending series of Ai in 50-digit arithmetic."""
    with mpm.workdps(50):
        x = mpm.mpf(x)
        c1 = mpm.mpf(1) / (mpm.power(3, mpm.mpf(2) / 3) * mpm.gamma(mpm.mpf(2) / 3))
        c2 = mpm.mpf(1) / (mpm.power(3, mpm.mpf(1) / 3) * mpm.gamma(mpm.mpf(1) / 3))
        f, g = mpm.mpf(0), mpm.mpf(0)
        tf, tg = mpm.mpf(1), x
        for k in range(nterms):
            f += tf
            g += tg
            tf *= x ** 3 / ((3 * k + 2) * (3 * k + 3))
            tg *= x ** 3 / ((3 * k + 3) * (3 * k + 4))
        return float(c1 * f - c2 * g)


def test_closed_forms_at_zero():
    q = airy_eval(0.0)
    assert abs(q.ai - 3 ** (-2 / 3) / math.gamma(2 / 3)) <= 1e-13 * AI0
    assert abs(q.bi - 3 ** (-1 / 6) / math.gamma(2 / 3)) <= 1e-13 * BI0
    assert abs(q.ai - 0.3550280539) < 1e-10
    assert abs(q.bi - 0.6149266274) < 1e-10


def test_ai_at_one_matches_series_oracle():
    assert abs(airy_eval(1.0).ai / _maclaurin_ai(1.0) - 1) <= 1e-12


def test_wronskian_on_log_grid():
    neg = -np.logspace(-3, 4, 9000)
    pos = np.linspace(0, 50, 1000)
    x = np.concatenate([neg, pos])
    s = airy_scaled(x)
    # scale factors cancel in the Wronskian
    res = np.abs(math.pi * (s.ai * s.bip - s.aip * s.bi) - 1)
    assert res.max() <= 1e-12


@pytest.mark.parametrize("x", [-49.0, -20.0, -7.3, -1.0, 0.4, 3.0, 8.8, 9.5, 25.0, 49.0])
def test_against_scipy_oracle(x):
    ai, aip, bi, bip = sp.airy(x)
    q = airy_eval(x)
    if x < 0:
        # oscillatory side: compare on the modulus scale
        m = math.hypot(ai, bi)
        mp_ = math.hypot(aip, bip)
        assert abs(q.ai - ai) <= 1e-12 * m and abs(q.bi - bi) <= 1e-12 * m
        assert abs(q.aip - aip) <= 1e-12 * mp_ and abs(q.bip - bip) <= 1e-12 * mp_
    else:
        for a, b in ((q.ai, ai), (q.bi, bi), (q.aip, aip), (q.bip, bip)):
            assert abs(a / b - 1) <= 1e-12


def test_large_negative_modulus_phase():
    x = 1e4
    m, th, _, _ = airy_osc(x)
    with mpm.workdps(40):
        ai, bi = mpm.airyai(-x), mpm.airybi(-x)
        mref = float(mpm.sqrt(ai ** 2 + bi ** 2))
        thref = float(mpm.atan2(bi, ai))
    assert abs(m / mref - 1) <= 1e-10
    assert abs(math.remainder(th - thref, 2 * math.pi)) <= 1e-10 * abs(th)


def test_positivity_on_positive_axis():
    q = airy_eval(np.linspace(0, 100, 500))
    assert np.all(q.ai > 0) and np.all(q.bi > 0)


def test_scaled_large_argument():
    s = airy_scaled(200.0)
    ref = sp.airye(200.0)
    assert abs(s.ai / ref[0] - 1) < 1e-12 and abs(s.bi / ref[2] - 1) < 1e-12
    assert s.scale == pytest.approx(2 / 3 * 200 ** 1.5, rel=1e-15)


def test_osc_definition_at_zero():
    m, th, _, _ = airy_osc(0.0)
    assert m ** 2 == pytest.approx(AI0 ** 2 + BI0 ** 2, rel=1e-14)
    assert th == pytest.approx(math.atan2(BI0, AI0), rel=1e-14)


def test_osc_consistent_with_eval():
    x = np.linspace(0, 50, 2001)
    m, th, _, _ = airy_osc(x)
    q = airy_eval(-x)
    z = m * np.exp(1j * th)
    assert np.max(np.abs(z - (q.ai + 1j * q.bi)) / m) <= 1e-10


def test_osc_modulus_leading_asymptotics():
    x = np.array([1e2, 1e3, 1e4])
    m, _, _, _ = airy_osc(x)
    ratio = m ** 2 * math.pi * np.sqrt(x)
    assert np.all(np.abs(ratio - 1) < 1e-4)
    assert np.all(np.diff(np.abs(ratio - 1)) < 0)


def test_osc_phase_derivative():
    x = np.linspace(1, 40, 50)
    h = 1e-5
    _, thp, _, _ = airy_osc(x + h)
    _, thm, _, _ = airy_osc(x - h)
    m, _, _, dth = airy_osc(x)
    assert np.max(np.abs((thp - thm) / (2 * h) / dth - 1)) < 1e-7


def test_domain_errors():
    with pytest.raises(DomainError):
        airy_eval(float("nan"))
    with pytest.raises(DomainError):
        airy_osc(-1.0)
    with pytest.raises(DomainError):
        bessel_uniform(2.0, 0.01)
    with pytest.raises(DomainError):
        bessel_uniform(0.5, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1.0, max_value=1e4), st.floats(min_value=0.1, max_value=10.0))
def test_bessel_wronskian_property(n, xi):
    jn, yn, jnp, ynp, _ = bessel_uniform(n, xi, scaled=True)
    z = n * xi
    # xi-derivatives carry a factor n
    w = (jn * ynp - jnp * yn) / n
    assert abs(w * math.pi * z / 2 - 1) <= 1e-8


def test_bessel_small_order_series_oracle():
    jn, yn, _, _ = bessel_uniform(2.0, 1.5)
    with mpm.workdps(30):
        z = mpm.mpf(3)
        jref = mpm.nsum(lambda k: (-1) ** k * (z / 2) ** (2 * k + 2) / (mpm.factorial(k) * mpm.factorial(k + 2)), [0, mpm.inf])
        yref = mpm.bessely(2, z)
    assert abs(jn / float(jref) - 1) <= 1e-12
    assert abs(yn / float(yref) - 1) <= 1e-12


@pytest.mark.parametrize("n", [1.0, 10.0, 100.0, 1000.0])
def test_bessel_wronskian_grid(n):
    xi = np.linspace(0.1, 10, 200)
    jn, yn, jnp, ynp, _ = bessel_uniform(n, xi, scaled=True)
    w = (jn * ynp - jnp * yn) / n
    assert np.max(np.abs(w * math.pi * n * xi / 2 - 1)) <= 1e-8


def test_bessel_turning_point_large_order():
    jn, yn, jnp, ynp = bessel_uniform(100.0, 1.0)
    assert all(np.isfinite(v) for v in (jn, yn, jnp, ynp))
    w = (jn * ynp - jnp * yn) / 100.0
    assert abs(w * math.pi * 100 / 2 - 1) <= 1e-8


def test_hankel_scaled_derivative():
    nu, z = 7.5, np.array([3.0, 10.0, 80.0])
    h, dh = hankel1_scaled(nu, z)
    ref = sp.hankel1(nu, z) * np.exp(-1j * z)
    dref = sp.h1vp(nu, z) * np.exp(-1j * z)
    assert np.max(np.abs(h / ref - 1)) < 1e-13
    assert np.max(np.abs(dh / dref - 1)) < 1e-12


@pytest.mark.parametrize("n,xi", [(1000.0, 0.1), (1000.0, 0.2), (1e4, 0.7)])
def test_bessel_scaled_overflow_range(n, xi):
    j, y, jp, yp, scale = bessel_uniform(n, xi, scaled=True)
    assert scale > 600
    with mpm.workdps(30):
        es = mpm.e ** mpm.mpf(scale)
        jref = float(mpm.besselj(n, n * xi) * es)
        yref = float(mpm.bessely(n, n * xi) / es)
        ypref = float(n * mpm.bessely(n, n * xi, 1) / es)
    assert abs(j / jref - 1) < 1e-8
    assert abs(y / yref - 1) < 1e-8
    assert abs(yp / ypref - 1) < 1e-8


def test_bessel_unscaled_matches_scaled_where_finite():
    xi = np.array([0.5, 1.0, 2.0])
    a = bessel_uniform(20.0, xi)
    b = bessel_uniform(20.0, xi, scaled=True)
    e = np.exp(b[4])
    assert np.allclose(a[0], b[0] / e, rtol=1e-14)
    assert np.allclose(a[1], b[1] * e, rtol=1e-14)
