"""Airy and Bessel function evaluation.

Airy functions are computed without external special-function libraries:

* on ``[-12, 9]`` by local Taylor expansion of ``y'' = x y`` about a table of
  anchor points spaced 0.5 apart (the table itself is generated by Taylor
  stepping from the closed-form values at 0 for Bi and the oscillatory side,
  and by backward stepping from the asymptotic expansion at ``x = 9`` for the
  recessive Ai on the positive axis);
* for ``x > 9`` by the standard exponential asymptotic expansions;
* for ``x < -12`` by the modulus/phase expansions, with the phase series
  generated from the modulus series through the Wronskian ``theta' = -1/(pi M^2)``.

Bessel functions of large real order come from ``scipy.special`` (AMOS),
except deep in the non-oscillatory range where ``Y_n`` overflows; there the
Debye expansion is summed directly and returned in exponent-scaled form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special as _sp

from .errors import DomainError

__all__ = [
    "AiryQuad",
    "AiryScaled",
    "airy_eval",
    "airy_scaled",
    "airy_osc",
    "bessel_uniform",
    "hankel1_scaled",
    "AI0",
    "BI0",
    "AIP0",
    "BIP0",
]

AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)
BI0 = 3.0 ** (-1.0 / 6.0) / math.gamma(2.0 / 3.0)
BIP0 = 3.0 ** (1.0 / 6.0) / math.gamma(1.0 / 3.0)

_NEG_SWITCH = -12.0
_POS_SWITCH = 9.0
_NODE_STEP = 0.5
_NODES = np.arange(_NEG_SWITCH, _POS_SWITCH + 0.5 * _NODE_STEP, _NODE_STEP)
_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class AiryQuad:
    """Values of Ai, Bi and their derivatives at one point (or array of points)."""

    ai: np.ndarray | float
    bi: np.ndarray | float
    aip: np.ndarray | float
    bip: np.ndarray | float

    def wronskian(self):
        return self.ai * self.bip - self.aip * self.bi


@dataclass(frozen=True)
class AiryScaled:
    """Exponent-scaled Airy values.

    For ``x > 0`` the true values are ``ai * exp(-scale)``, ``aip * exp(-scale)``,
    ``bi * exp(scale)`` and ``bip * exp(scale)`` with ``scale = (2/3) x^{3/2}``;
    for ``x <= 0`` the scale is zero.
    """

    ai: np.ndarray | float
    bi: np.ndarray | float
    aip: np.ndarray | float
    bip: np.ndarray | float
    scale: np.ndarray | float


def _taylor(x0, y, dy, h, nterms=48):
    """Value and derivative at ``x0 + h`` of the solution of y'' = x y."""
    x0 = np.asarray(x0, dtype=float)
    a_km3 = np.zeros_like(np.asarray(y, dtype=float))
    a_km2 = np.asarray(y, dtype=float)
    a_km1 = np.asarray(dy, dtype=float)
    val = a_km2 + a_km1 * h
    der = a_km1.copy()
    hpow = h.copy()  # h^(k-1)
    for k in range(2, nterms):
        a_k = (x0 * a_km2 + a_km3) / (k * (k - 1))
        der = der + k * a_k * hpow
        hpow = hpow * h
        val = val + a_k * hpow
        a_km3, a_km2, a_km1 = a_km2, a_km1, a_k
    return val, der


@lru_cache(maxsize=None)
def _u_coeffs(n: int = 40):
    u = [1.0]
    for k in range(1, n):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k))
    u = np.array(u)
    v = np.array([1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, n)])
    return u, v


def _asym_pos(x):
    """Scaled asymptotic expansions for large positive x.

    Returns (ai, aip, bi, bip, zeta) with exp(-zeta) removed from Ai, Ai' and
    exp(+zeta) removed from Bi, Bi'.
    """
    x = np.asarray(x, dtype=float)
    zeta = 2.0 / 3.0 * x ** 1.5
    u, v = _u_coeffs()
    inv = 1.0 / zeta
    su_alt = np.zeros_like(x)
    sv_alt = np.zeros_like(x)
    su = np.zeros_like(x)
    sv = np.zeros_like(x)
    p = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    prev = np.full(x.shape, np.inf)
    for k in range(u.size):
        tu = u[k] * p
        tv = v[k] * p
        mag = np.maximum(np.abs(tu), np.abs(tv))
        active = active & (mag < prev) & (mag > 1e-18)
        sign = -1.0 if k % 2 else 1.0
        su_alt = np.where(active, su_alt + sign * tu, su_alt)
        sv_alt = np.where(active, sv_alt + sign * tv, sv_alt)
        su = np.where(active, su + tu, su)
        sv = np.where(active, sv + tv, sv)
        prev = np.where(active, mag, prev)
        if k == 0:
            active = np.ones(x.shape, dtype=bool)
        p = p * inv
        if not active.any():
            break
    q = x ** 0.25
    ai = su_alt / (2.0 * _SQRT_PI * q)
    aip = -q * sv_alt / (2.0 * _SQRT_PI)
    bi = su / (_SQRT_PI * q)
    bip = q * sv / _SQRT_PI
    return ai, aip, bi, bip, zeta


@lru_cache(maxsize=None)
def _modphase_coeffs(n: int = 30):
    """Coefficients of the modulus and phase series in powers of x^{-3}.

    M^2(x) = (pi sqrt x)^{-1} sum m_k x^{-3k}, with alternating m_k;
    theta(x) = pi/4 - sum_k r_k x^{3/2-3k} / (3/2 - 3k),
    where sum r_k t^k is the reciprocal series of sum m_k t^k.
    """
    m = []
    for k in range(n):
        num = 1
        for j in range(1, 3 * k + 1):
            num *= 2 * j - 1
        m.append(Fraction((-1) ** k * num, math.factorial(k) * 96 ** k))
    r = [Fraction(1)]
    for k in range(1, n):
        r.append(-sum(m[j] * r[k - j] for j in range(1, k + 1)))
    theta = [r[k] / (Fraction(3, 2) - 3 * k) for k in range(n)]
    return (np.array([float(c) for c in m]), np.array([float(c) for c in theta]))


def _modphase(x):
    """Modulus M, its derivative, and phase theta of Ai(-x) + i Bi(-x), x >= 12."""
    x = np.asarray(x, dtype=float)
    m, th = _modphase_coeffs()
    t = x ** -3.0
    s = np.zeros_like(x)
    ds = np.zeros_like(x)  # d/dx of sum m_k x^{-3k}
    ph = np.zeros_like(x)
    p = np.ones_like(x)
    prev = np.full(x.shape, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(m.size):
        term = m[k] * p
        mag = np.abs(term)
        if k > 0:
            active = active & (mag < prev) & (mag > 1e-19)
        s = np.where(active, s + term, s)
        ds = np.where(active, ds - 3.0 * k * term / x, ds)
        ph = np.where(active, ph + th[k] * p, ph)
        prev = np.where(active, mag, prev)
        p = p * t
        if not active.any():
            break
    sqx = np.sqrt(x)
    m2 = s / (math.pi * sqx)
    dm2 = ds / (math.pi * sqx) - 0.5 * s / (math.pi * x * sqx)
    mod = np.sqrt(m2)
    dmod = dm2 / (2.0 * mod)
    theta = math.pi / 4.0 - x ** 1.5 * ph
    return mod, dmod, theta


def _build_nodes():
    n = _NODES.size
    ai = np.empty(n)
    aip = np.empty(n)
    bi = np.empty(n)
    bip = np.empty(n)
    i0 = int(round(-_NEG_SWITCH / _NODE_STEP))
    ai[i0], aip[i0], bi[i0], bip[i0] = AI0, AIP0, BI0, BIP0
    h = np.array([-_NODE_STEP])
    for i in range(i0, 0, -1):
        x0 = _NODES[i]
        v, d = _taylor(x0, np.array([ai[i], bi[i]]), np.array([aip[i], bip[i]]),
                       np.repeat(h, 2), nterms=70)
        ai[i - 1], bi[i - 1] = v
        aip[i - 1], bip[i - 1] = d
    h = np.array([_NODE_STEP])
    for i in range(i0, n - 1):
        v, d = _taylor(_NODES[i], np.array([bi[i]]), np.array([bip[i]]), h, nterms=70)
        bi[i + 1], bip[i + 1] = v[0], d[0]
    a, ap, _, _, z = _asym_pos(np.array([_NODES[-1]]))
    ai[-1] = a[0] * math.exp(-z[0])
    aip[-1] = ap[0] * math.exp(-z[0])
    h = np.array([-_NODE_STEP])
    for i in range(n - 1, i0 + 1, -1):
        v, d = _taylor(_NODES[i], np.array([ai[i]]), np.array([aip[i]]), h, nterms=70)
        ai[i - 1], aip[i - 1] = v[0], d[0]
    return ai, aip, bi, bip


_NODE_AI, _NODE_AIP, _NODE_BI, _NODE_BIP = _build_nodes()


def _check(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Airy argument must be finite")
    if np.any(np.abs(arr) > 1e6):
        raise DomainError("Airy argument outside |x| <= 1e6")
    return arr


def _eval_core(x):
    """Return scaled quadruple and scale for an array x."""
    x = np.atleast_1d(x).astype(float)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    bi = np.empty_like(x)
    bip = np.empty_like(x)
    scale = np.zeros_like(x)

    mid = (x >= _NEG_SWITCH) & (x <= _POS_SWITCH)
    if mid.any():
        xm = x[mid]
        idx = np.clip(np.rint((xm - _NEG_SWITCH) / _NODE_STEP).astype(int), 0, _NODES.size - 1)
        x0 = _NODES[idx]
        h = xm - x0
        va, da = _taylor(x0, _NODE_AI[idx], _NODE_AIP[idx], h)
        vb, db = _taylor(x0, _NODE_BI[idx], _NODE_BIP[idx], h)
        sc = np.where(xm > 0, 2.0 / 3.0 * np.abs(xm) ** 1.5, 0.0)
        e = np.exp(sc)
        ai[mid], aip[mid] = va * e, da * e
        bi[mid], bip[mid] = vb / e, db / e
        scale[mid] = sc

    hi = x > _POS_SWITCH
    if hi.any():
        a, ap, b, bp, z = _asym_pos(x[hi])
        ai[hi], aip[hi], bi[hi], bip[hi], scale[hi] = a, ap, b, bp, z

    lo = x < _NEG_SWITCH
    if lo.any():
        s = -x[lo]
        mod, dmod, theta = _modphase(s)
        dtheta = -1.0 / (math.pi * mod ** 2)
        c, sn = np.cos(theta), np.sin(theta)
        ai[lo] = mod * c
        bi[lo] = mod * sn
        aip[lo] = -dmod * c + mod * dtheta * sn
        bip[lo] = -dmod * sn - mod * dtheta * c
    return ai, aip, bi, bip, scale


def _shape(arr, like):
    return float(arr[0]) if np.ndim(like) == 0 else arr.reshape(np.shape(like))


def airy_eval(x) -> AiryQuad:
    """Ai, Bi, Ai', Bi' at ``x`` (scalar or array)."""
    arr = _check(x)
    ai, aip, bi, bip, sc = _eval_core(arr)
    with np.errstate(over="ignore", under="ignore"):
        e = np.exp(-sc)
        ai, aip = ai * e, aip * e
        ep = np.exp(sc)
        bi, bip = bi * ep, bip * ep
    return AiryQuad(_shape(ai, arr), _shape(bi, arr), _shape(aip, arr), _shape(bip, arr))


def airy_scaled(x) -> AiryScaled:
    """Exponent-scaled Airy quadruple; see :class:`AiryScaled`."""
    arr = _check(x)
    ai, aip, bi, bip, sc = _eval_core(arr)
    return AiryScaled(_shape(ai, arr), _shape(bi, arr), _shape(aip, arr),
                      _shape(bip, arr), _shape(sc, arr))


def airy_osc(x):
    """Modulus and continuous phase of ``Ai(-x) + i Bi(-x)`` for ``x >= 0``.

    The phase is the continuous branch with ``theta(0) = pi/3`` and
    ``theta(x) ~ pi/4 - (2/3) x^{3/2}`` for large x.  Also returned are the
    x-derivatives of modulus and phase, ``(M, theta, dM/dx, dtheta/dx)``.
    """
    arr = _check(x)
    if np.any(arr < 0):
        raise DomainError("airy_osc requires x >= 0")
    s = np.atleast_1d(arr).astype(float)
    mod = np.empty_like(s)
    dmod = np.empty_like(s)
    theta = np.empty_like(s)
    far = s > -_NEG_SWITCH
    if far.any():
        mod[far], dmod[far], theta[far] = _modphase(s[far])
    near = ~far
    if near.any():
        q = airy_eval(-s[near])
        ai, bi = np.atleast_1d(q.ai), np.atleast_1d(q.bi)
        aip, bip = np.atleast_1d(q.aip), np.atleast_1d(q.bip)
        m = np.hypot(ai, bi)
        th = np.arctan2(bi, ai)
        sn = s[near]
        approx = np.where(sn > 2.0, math.pi / 4 - 2.0 / 3.0 * sn ** 1.5 * (1 + 5.0 / 32.0 / np.maximum(sn, 1.0) ** 3), th)
        th = th + 2.0 * math.pi * np.rint((approx - th) / (2.0 * math.pi))
        mod[near] = m
        theta[near] = th
        # d/dx of |Ai(-x) + i Bi(-x)| = -(Ai Ai' + Bi Bi')/M evaluated at -x
        dmod[near] = -(ai * aip + bi * bip) / m
    dtheta = -1.0 / (math.pi * mod ** 2)
    out = [mod, theta, dmod, dtheta]
    if np.ndim(arr) == 0:
        return tuple(float(v[0]) for v in out)
    return tuple(v.reshape(arr.shape) for v in out)


@lru_cache(maxsize=1)
def _debye_polys(nterms: int = 7):
    """Debye polynomials ``u_k(t)`` and ``v_k(t)`` as numpy Polynomials."""
    P = np.polynomial.Polynomial
    t2 = P([0, 0, 1])
    u = [P([1.0])]
    for _ in range(1, nterms):
        uk = u[-1]
        integ = (P([1, 0, -5]) * uk).integ()
        u.append(0.5 * t2 * (1 - t2) * uk.deriv() + integ / 8.0)
    v = [P([1.0])]
    tt = P([0, 1])
    for k in range(1, nterms):
        v.append(u[k] + tt * (t2 - 1) * (0.5 * u[k - 1] + tt * u[k - 1].deriv()))
    return u, v


def _debye_forbidden(n, xi):
    """Scaled J, Y and z-derivatives for ``xi < 1`` from the Debye expansion.

    Returns ``(j, y, jp, yp, scale)`` with ``J = j e^{-scale}``,
    ``Y = y e^{scale}``.
    """
    s = np.sqrt(1.0 - xi * xi)
    t = 1.0 / s
    scale = n * (np.log((1.0 + s) / xi) - s)
    u, v = _debye_polys()
    su = np.zeros_like(xi)
    sv = np.zeros_like(xi)
    au = np.zeros_like(xi)
    av = np.zeros_like(xi)
    for k in range(len(u)):
        nk = n ** (-float(k))
        su = su + u[k](t) * nk
        au = au + (-1) ** k * u[k](t) * nk
        sv = sv + v[k](t) * nk
        av = av + (-1) ** k * v[k](t) * nk
    amp = 1.0 / np.sqrt(2.0 * math.pi * n * s)
    # sinh(2 alpha) = 2 s / xi^2 with sech(alpha) = xi
    ampd = np.sqrt(2.0 * s / xi ** 2 / (4.0 * math.pi * n))
    return amp * su, -2.0 * amp * au, ampd * sv, 2.0 * ampd * av, scale


_DEBYE_SCALE = 600.0


def bessel_uniform(n, xi, xi_floor: float = 0.05, scaled: bool = False):
    """J_n(n xi), Y_n(n xi) and their xi-derivatives.

    Real order ``n >= 1`` and ``xi > xi_floor``.  Values come from the AMOS
    routines in ``scipy.special`` except where ``Y`` would overflow (deep in
    ``xi < 1`` at large order), where the Debye expansion with seven terms is
    used.  With ``scaled=True`` the result is ``(j, y, jp, yp, scale)`` and the
    true values are ``J = j e^{-scale}``, ``Y = y e^{scale}`` (same for the
    derivatives); ``scale`` is zero for ``xi >= 1``.
    """
    n = np.asarray(n, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(n < 1):
        raise DomainError("bessel_uniform requires n >= 1")
    if np.any(xi <= xi_floor):
        raise DomainError(f"bessel_uniform requires xi > {xi_floor}")
    n, xi = np.broadcast_arrays(n, xi)
    shape = n.shape
    n, xi = n.ravel(), xi.ravel()
    z = n * xi
    sub = xi < 1.0
    s = np.sqrt(np.where(sub, 1.0 - xi * xi, 0.0))
    scale = np.where(sub, n * (np.log((1.0 + s) / np.where(sub, xi, 1.0)) - s), 0.0)
    deb = scale > _DEBYE_SCALE
    jn = np.empty_like(z)
    yn = np.empty_like(z)
    jnp = np.empty_like(z)
    ynp = np.empty_like(z)
    dir_ = ~deb
    if dir_.any():
        nn, zz, sc = n[dir_], z[dir_], scale[dir_]
        es = np.exp(sc)
        jn[dir_] = _sp.jv(nn, zz) * es
        yn[dir_] = _sp.yv(nn, zz) / es
        jnp[dir_] = nn * _sp.jvp(nn, zz) * es
        ynp[dir_] = nn * _sp.yvp(nn, zz) / es
    if deb.any():
        j, y, jp, yp, _ = _debye_forbidden(n[deb], xi[deb])
        jn[deb], yn[deb], jnp[deb], ynp[deb] = j, y, n[deb] * jp, n[deb] * yp
    out = [jn, yn, jnp, ynp]
    if scaled:
        out.append(scale)
    else:
        with np.errstate(over="ignore", under="ignore"):
            e = np.exp(-scale)
            out = [jn * e, yn / e, jnp * e, ynp / e]
    if not shape:
        return tuple(float(o[0]) for o in out)
    return tuple(o.reshape(shape) for o in out)


def hankel1_scaled(nu, z):
    """H^(1)_nu(z) exp(-i z) and its z-derivative scaled the same way."""
    h = _sp.hankel1e(nu, z)
    # d/dz H1 = H1_{nu-1} - (nu/z) H1_nu
    dh = _sp.hankel1e(nu - 1.0, z) - nu / z * h
    return h, dh
