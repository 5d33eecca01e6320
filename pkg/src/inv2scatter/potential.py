"""Potentials with inverse-square tails and their Langer-modified versions.

Built-in families (all evaluated with exact derivative chains up to order 4):

``rational``
    ``V(x) = (mu_+^2 s(x) + mu_-^2 (1 - s(x))) / (1 + x^2)`` with the switch
    ``s = (1 + tanh x) / 2``.  ``sym2`` is the symmetric case ``mu^2 = 2``.
``barrier_simple``
    ``V(x) = (1 + b x^2) / (1 + (b + 1/2) x^2 + (b / mu^2) x^4)``, a single
    non-degenerate maximum ``V(0) = 1``, ``V''(0) = -1`` with tails
    ``mu^2 x^-2``.  For ``b = 0`` this is ``1 / (1 + x^2 / 2)`` and ``mu^2 = 2``.
``sech2_validation``
    ``V(x) = U sech^2(x)``; exponentially decaying, used only to validate the
    direct solver against the closed-form transmission.
``user_table``
    tabulated values (optionally with derivative columns), spline-interpolated.

The modified potential adds ``c hbar^2 <x>^-2`` with ``<x> = sqrt(1 + x^2)``
and ``c = 1/4`` by default; ``c = 0`` recovers the raw potential.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .errors import ConvergenceError, NoTurningPointError, UnsupportedError

__all__ = [
    "PotentialSpec",
    "ModifiedPotential",
    "HypothesisCheck",
    "HypothesisReport",
    "rational",
    "sym2",
    "barrier_simple",
    "sech2_validation",
    "user_table",
    "spec_from_dict",
    "bracket_inv2",
    "check_hypotheses",
    "turning_points",
    "estimate_E0",
]

MAX_ORDER = 4
FAMILIES = ("rational", "barrier_simple", "sech2_validation", "user_table")


# ---------------------------------------------------------------------------
# derivative jets: arrays of shape (K+1, ...) holding f, f', ..., f^(K)

def _binom(n, k):
    return math.comb(n, k)


def _jet_mul(f, g):
    out = np.zeros_like(f * g)
    for n in range(f.shape[0]):
        out[n] = sum(_binom(n, k) * f[k] * g[n - k] for k in range(n + 1))
    return out


def _jet_recip(p):
    g = np.zeros_like(p)
    g[0] = 1.0 / p[0]
    for n in range(1, p.shape[0]):
        acc = sum(_binom(n, k) * p[k] * g[n - k] for k in range(1, n + 1))
        g[n] = -acc / p[0]
    return g


def _jet_poly(x, coeffs, order):
    """Jet of the polynomial sum coeffs[j] x^j."""
    x = np.asarray(x)
    out = np.zeros((order + 1,) + x.shape, dtype=np.result_type(x, float))
    poly = np.polynomial.Polynomial(coeffs)
    for n in range(order + 1):
        out[n] = poly(x)
        poly = poly.deriv()
    return out


def _jet_tanh(x, order):
    x = np.asarray(x)
    t = np.zeros((order + 1,) + x.shape, dtype=np.result_type(x, float))
    t[0] = np.tanh(x)
    if order >= 1:
        t[1] = 1.0 - t[0] ** 2
    for n in range(1, order):
        sq = sum(_binom(n, k) * t[k] * t[n - k] for k in range(n + 1))
        t[n + 1] = -sq
    return t


def bracket_inv2(x, order=0):
    """Jet of ``<x>^-2 = 1 / (1 + x^2)`` up to ``order``."""
    return _jet_recip(_jet_poly(x, [1.0, 0.0, 1.0], order))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialSpec:
    """A smooth positive potential with inverse-square tail data.

    Attributes
    ----------
    family : str
        One of ``rational``, ``barrier_simple``, ``sech2_validation``,
        ``user_table``.
    params : tuple of float
        Family parameters (see module docstring).
    mu_plus, mu_minus : float
        Tail coefficients: ``x^2 V(x) -> mu_pm^2`` as ``x -> +-inf``.
    tail_remainder_order : int
        Order of the tail remainder ``V - mu^2 x^-2``.
    mirrored : bool
        If set, the spec describes ``x -> V(-x)``.
    table : tuple or None
        For ``user_table``: ``(x, V, dV, d2V, ...)`` as tuples of floats.
    """

    family: str
    params: tuple = ()
    mu_plus: float = 0.0
    mu_minus: float = 0.0
    tail_remainder_order: int = 4
    mirrored: bool = False
    table: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}")

    # -- evaluation --------------------------------------------------------

    @property
    def analytic(self) -> bool:
        """True if ``V`` extends to complex arguments (used for Taylor data)."""
        return self.family != "user_table"

    @property
    def inverse_square(self) -> bool:
        return self.family != "sech2_validation"

    @property
    def symmetric(self) -> bool:
        if self.family == "rational":
            return self.params[0] == self.params[1]
        return self.family in ("barrier_simple", "sech2_validation")

    def reflected(self) -> "PotentialSpec":
        """The potential ``x -> V(-x)``."""
        return replace(self, mirrored=not self.mirrored,
                       mu_plus=self.mu_minus, mu_minus=self.mu_plus)

    def jet(self, x, order=0):
        """Array ``[V, V', ..., V^(order)]`` at ``x`` (real or complex)."""
        if order > MAX_ORDER and self.family == "user_table":
            raise UnsupportedError("derivative order above 4 requested")
        x = np.asarray(x)
        xe = -x if self.mirrored else x
        out = self._jet_base(xe, order)
        if self.mirrored:
            for k in range(1, order + 1, 2):
                out[k] = -out[k]
        return out

    def __call__(self, x, order=0):
        return self.jet(x, order)[order]

    def _jet_base(self, x, order):
        fam = self.family
        if fam == "rational":
            a, b = self.params
            t = _jet_tanh(x, order)
            num = 0.5 * (a - b) * t
            num[0] = num[0] + 0.5 * (a + b)
            return _jet_mul(num, bracket_inv2(x, order))
        if fam == "barrier_simple":
            mu2, beta = self.params
            num = _jet_poly(x, [1.0, 0.0, beta], order)
            den = _jet_poly(x, [1.0, 0.0, beta + 0.5, 0.0, beta / mu2], order)
            return _jet_mul(num, _jet_recip(den))
        if fam == "sech2_validation":
            (u,) = self.params
            t = _jet_tanh(x, order)
            sq = _jet_mul(t, t)
            out = -u * sq
            out[0] = out[0] + u
            return out
        return self._jet_table(x, order)

    def _jet_table(self, x, order):
        if np.iscomplexobj(x):
            raise UnsupportedError("user_table potentials are real-only")
        cols = self.table
        ncols = len(cols) - 1
        if order + 1 > ncols:
            raise UnsupportedError(
                f"user_table provides derivatives up to order {ncols - 1}, requested {order}")
        xt = np.asarray(cols[0])
        out = np.zeros((order + 1,) + np.shape(x))
        inside = (x >= xt[0]) & (x <= xt[-1])
        for k in range(order + 1):
            spline = _table_spline(cols, k)
            vals = np.where(inside, spline(np.clip(x, xt[0], xt[-1])), 0.0)
            mu2 = np.where(x > 0, self.mu_plus ** 2, self.mu_minus ** 2)
            xs = np.where(inside, 1.0, x)
            tail = mu2 * (-1.0) ** k * math.factorial(k + 1) / xs ** (k + 2)
            out[k] = np.where(inside, vals, tail)
        return out


_SPLINES: dict = {}


def _table_spline(cols, k):
    # keep a reference to the table so its id cannot be recycled
    key = (id(cols), k)
    hit = _SPLINES.get(key)
    if hit is None or hit[0] is not cols:
        hit = (cols, CubicSpline(np.asarray(cols[0]), np.asarray(cols[k + 1])))
        _SPLINES[key] = hit
    return hit[1]


def rational(mu_plus2: float, mu_minus2: float) -> PotentialSpec:
    """The ``rational`` family with tail coefficients ``mu_pm^2``."""
    return PotentialSpec("rational", (float(mu_plus2), float(mu_minus2)),
                         math.sqrt(mu_plus2), math.sqrt(mu_minus2), 4)


def sym2() -> PotentialSpec:
    """``V = 2 / (1 + x^2)``."""
    return rational(2.0, 2.0)


def barrier_simple(mu2: float = 2.0, beta: float = 0.0) -> PotentialSpec:
    """Simple barrier normalised to ``V(0) = 1``, ``V''(0) = -1``."""
    if beta == 0.0:
        mu2 = 2.0
    mu = math.sqrt(mu2)
    return PotentialSpec("barrier_simple", (float(mu2), float(beta)), mu, mu, 4)


def sech2_validation(strength: float = 1.0) -> PotentialSpec:
    """``V = U sech^2 x`` (not inverse-square; validation only)."""
    return PotentialSpec("sech2_validation", (float(strength),), 0.0, 0.0, 0)


def user_table(x, values, mu_plus, mu_minus, derivatives=()) -> PotentialSpec:
    """Tabulated potential; outside the table the pure tail ``mu^2/x^2`` is used."""
    cols = (tuple(map(float, x)), tuple(map(float, values))) + tuple(
        tuple(map(float, d)) for d in derivatives)
    return PotentialSpec("user_table", (), float(mu_plus), float(mu_minus), 3, table=cols)


def spec_from_dict(d: dict) -> PotentialSpec:
    """Build a spec from a JSON-style mapping.

    Accepted keys: ``family``, ``params`` and, for ``user_table``, ``x``,
    ``values``, ``derivatives``, ``mu_plus``, ``mu_minus``.  The name ``sym2``
    is accepted as a family alias.
    """
    fam = d.get("family")
    params = list(d.get("params", []))
    if fam == "sym2":
        return sym2()
    if fam == "rational":
        if len(params) != 2:
            raise ValueError("rational needs params [mu_plus^2, mu_minus^2]")
        return rational(*params)
    if fam == "barrier_simple":
        return barrier_simple(*params) if params else barrier_simple()
    if fam == "sech2_validation":
        return sech2_validation(*params) if params else sech2_validation()
    if fam == "user_table":
        return user_table(d["x"], d["values"], d["mu_plus"], d["mu_minus"],
                          d.get("derivatives", ()))
    raise ValueError(f"unknown potential family {fam!r}")


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModifiedPotential:
    """``V0 = V + c hbar^2 <x>^-2`` (``c = 1/4`` is the Langer value).

    ``c = 0`` gives the raw potential, used as a negative control.
    """

    base: PotentialSpec
    hbar: float
    langer: float = 0.25

    def jet(self, x, order=0):
        out = self.base.jet(x, order)
        if self.langer:
            out = out + self.langer * self.hbar ** 2 * bracket_inv2(x, order)
        return out

    def __call__(self, x, order=0):
        return self.jet(x, order)[order]

    def v1(self, x):
        """The subtracted piece ``(V0 - V) / hbar^2``."""
        return self.langer * bracket_inv2(x, 0)[0]

    def reflected(self) -> "ModifiedPotential":
        return replace(self, base=self.base.reflected())

    def tail_coefficient(self, side=+1) -> float:
        """``lim x^2 V0`` on the given side."""
        mu = self.base.mu_plus if side > 0 else self.base.mu_minus
        return mu ** 2 + self.langer * self.hbar ** 2

    def taylor(self, x0: float, nterms: int = 24, radius: float | None = None):
        """Taylor coefficients ``V0^(k)(x0)/k!`` for ``k < nterms``.

        For analytic families the coefficients come from a discrete Cauchy
        integral on a circle in the complex plane; otherwise only the
        analytic derivatives up to order 4 are available.
        """
        if not self.base.analytic:
            jet = self.jet(x0, MAX_ORDER)
            return np.array([jet[k] / math.factorial(k) for k in range(MAX_ORDER + 1)])
        r = radius if radius is not None else self.analytic_radius(x0)
        npts = 128
        theta = 2.0 * np.pi * np.arange(npts) / npts
        z = x0 + r * np.exp(1j * theta)
        vals = self.jet(z, 0)[0]
        c = np.fft.fft(vals) / npts
        k = np.arange(nterms)
        return (c[:nterms] / r ** k).real

    def analytic_radius(self, x0: float) -> float:
        """A safe Cauchy radius: half the distance to the nearest singularity."""
        sing = [1j, -1j]
        fam = self.base.family
        if fam in ("rational", "sech2_validation"):
            sing += [0.5j * math.pi, -0.5j * math.pi]
        if fam == "barrier_simple":
            mu2, beta = self.base.params
            roots = np.roots([beta / mu2, 0.0, beta + 0.5, 0.0, 1.0]) if beta else np.roots([0.5, 0.0, 1.0])
            sing += list(roots)
        dist = min(abs(complex(x0) - complex(s)) for s in sing)
        return min(0.5 * dist, 1.0)

    # -- landmarks ---------------------------------------------------------

    @cached_property
    def _landscape(self):
        return _scan_landscape(self)

    @property
    def peak(self) -> float:
        """Location of the global maximum of ``V0``."""
        return self._landscape[0]

    @property
    def E0(self) -> float:
        return self._landscape[1]


# ---------------------------------------------------------------------------


def _scan_grid():
    core = np.linspace(-50.0, 50.0, 20001)
    far = np.logspace(math.log10(50.0), 6.0, 2000)[1:]
    return np.concatenate([-far[::-1], core, far])


def _scan_landscape(mp: ModifiedPotential):
    x = _scan_grid()
    v = mp(x)
    i = int(np.argmax(v))
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, x.size - 1)]
    try:
        dlo, dhi = float(mp(lo, 1)), float(mp(hi, 1))
    except UnsupportedError:
        # tabulated potential without derivative columns
        dlo = dhi = 0.0
    if dlo > 0.0 > dhi:
        peak = float(brentq(lambda s: float(mp(s, 1)), lo, hi, xtol=1e-15))
    else:
        res = minimize_scalar(lambda s: -float(mp(s)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        peak = float(res.x)
    vmax = float(mp(peak))
    # interior local minima of the sampled profile
    d = np.diff(v)
    mins = np.where((d[:-1] < 0) & (d[1:] > 0))[0] + 1
    best = vmax
    for j in mins:
        lo, hi = x[j - 1], x[j + 1]
        r = minimize_scalar(lambda s: float(mp(s)), bounds=(lo, hi), method="bounded",
                            options={"xatol": 1e-12})
        best = min(best, float(r.fun))
    return peak, best


def estimate_E0(mp: ModifiedPotential) -> float:
    """Largest E such that ``V0 = E'`` has exactly two roots for all ``0 < E' < E``.

    For a unimodal ``V0`` this is the maximum; otherwise it is the lowest
    interior local minimum (the saddle between bumps).
    """
    return mp.E0


def turning_points(mp: ModifiedPotential, E: float) -> tuple[float, float]:
    """Roots ``x2 < 0 < x1`` of ``V0(x) = E`` (relative to the peak location)."""
    if not (E > 0.0):
        raise NoTurningPointError("energy must be positive")
    if E >= mp.E0:
        raise NoTurningPointError(f"E={E} is not below E0={mp.E0}")
    x1 = _outer_root(mp, E, +1)
    x2 = _outer_root(mp, E, -1)
    return x2, x1


def _outer_root(mp: ModifiedPotential, E: float, side: int) -> float:
    peak = mp.peak
    a_tail = mp.tail_coefficient(side)
    step = max(1.0, math.sqrt(a_tail / E)) if a_tail > 0 else 1.0
    lo = peak
    hi = peak + side * step
    f = lambda s: float(mp(s)) - E  # noqa: E731
    n = 0
    while f(hi) > 0.0:
        lo = hi
        hi = peak + side * (abs(hi - peak) * 2.0)
        n += 1
        if n > 200:
            raise ConvergenceError("could not bracket turning point", state=(lo, hi))
    a, b = (lo, hi) if side > 0 else (hi, lo)
    try:
        root = brentq(f, a, b, xtol=1e-300, rtol=8.9e-16, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceError(f"turning point refinement failed: {exc}", state=(a, b)) from exc
    return float(root)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    witness: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class HypothesisReport:
    mode: str
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def as_dict(self):
        return {
            "mode": self.mode,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "witness": c.witness, "detail": c.detail}
                for c in self.checks
            ],
        }


def check_hypotheses(spec: PotentialSpec, mode: str = "theorem1", grid=None) -> HypothesisReport:
    """Check the structural hypotheses on a sample grid.

    ``theorem1``: positivity and inverse-square tails on both sides.
    ``barrier6``: additionally ``V(0)=1``, ``V'(0)=0``, ``V''(0)=-1``,
    ``0 < V <= 1`` and strictly monotone flanks.
    """
    if mode not in ("theorem1", "barrier6"):
        raise ValueError(f"unknown hypothesis mode {mode!r}")
    x = _scan_grid() if grid is None else np.asarray(grid, dtype=float)
    checks = []
    v = spec(x)
    bad = np.where(~(v > 0))[0]
    checks.append(HypothesisCheck("positivity", bad.size == 0,
                                  float(x[bad[0]]) if bad.size else None))
    for side, mu in ((+1, spec.mu_plus), (-1, spec.mu_minus)):
        pts = side * np.array([1e2, 1e3])
        dev = np.abs(pts ** 2 * spec(pts) - mu ** 2)
        ok = (spec.inverse_square and mu > 0 and dev[1] <= 1e-2 * mu ** 2
              and dev[1] * 1e3 <= 2.0 * dev[0] * 1e2 + 1e-9)
        name = "tail_plus" if side > 0 else "tail_minus"
        detail = "" if spec.inverse_square else "hypotheses: not inverse-square"
        checks.append(HypothesisCheck(name, bool(ok), None if ok else float(pts[1]), detail))
    if mode == "barrier6":
        jet = spec.jet(0.0, 2)
        checks.append(HypothesisCheck("normalisation_V0", abs(jet[0] - 1.0) < 1e-12, 0.0))
        checks.append(HypothesisCheck("critical_point", abs(jet[1]) < 1e-12, 0.0))
        checks.append(HypothesisCheck("curvature", abs(jet[2] + 1.0) < 1e-12, 0.0))
        above = np.where(v > 1.0 + 1e-14)[0]
        checks.append(HypothesisCheck("bounded_by_one", above.size == 0,
                                      float(x[above[0]]) if above.size else None))
        xm = np.linspace(1e-3, 50.0, 10000)
        dp = spec(xm, 1)
        bad = np.where(~(dp < 0))[0]
        checks.append(HypothesisCheck("decreasing_right", bad.size == 0,
                                      float(xm[bad[0]]) if bad.size else None))
        dm = spec(-xm, 1)
        bad = np.where(~(dm > 0))[0]
        checks.append(HypothesisCheck("increasing_left", bad.size == 0,
                                      float(-xm[bad[0]]) if bad.size else None))
    return HypothesisReport(mode, tuple(checks))
