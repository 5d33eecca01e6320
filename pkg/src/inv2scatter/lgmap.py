"""Liouville-Green (Langer) coordinate through a simple turning point.

For ``Q0 = V0 - E`` the map is

    zeta(x) = sign(x - x1) |(3/2) int_{x1}^x sqrt|Q0||^{2/3},

with ``q = -Q0 / zeta = zeta'^2 > 0``.  With ``w = q^{1/4} f`` the equation
``-hbar^2 f'' + (Q0 - hbar^2 V1) f = 0`` becomes
``-hbar^2 w_zz = (zeta + hbar^2 Vt) w`` where

    Vt = V1 / q - q^{-1/4} d^2 q^{1/4} / dzeta^2
       = V1 / zeta'^2 - zeta''' / (2 zeta'^3) + 3 zeta''^2 / (4 zeta'^4).

Away from ``x1`` the derivatives of ``zeta`` follow from differentiating
``zeta zeta'^2 = -Q0``.  Close to ``x1`` these formulas cancel
catastrophically, so a power series ``zeta = sum z_k h^k`` (``h = x - x1``)
is used instead; its coefficients are obtained from the Taylor series of
``V0`` at ``x1`` by solving ``zeta zeta'^2 = -Q0`` order by order.

The left half-line is handled by reflection: a map with ``side="left"``
describes ``x -> V0(-x)`` and all its arguments are reflected coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._quad import cumulative_panels, gl_nodes
from .action import tail_integrand
from .errors import DomainError
from .potential import ModifiedPotential, bracket_inv2, turning_points

__all__ = ["ZetaMap", "build_zeta_map", "zeta_series", "ZeroEnergyZetaReport",
           "zero_energy_zeta_check"]

_NGL = 16


def zeta_series(qcoef: np.ndarray) -> np.ndarray:
    """Coefficients ``z_k`` (``z_0 = 0``) with ``zeta zeta'^2 = -Q0``.

    ``qcoef[k]`` is the Taylor coefficient of ``Q0`` at the turning point
    (``qcoef[0]`` is ignored and treated as 0; ``qcoef[1] < 0`` required).
    """
    K = len(qcoef)
    if not qcoef[1] < 0:
        raise DomainError("turning point must be simple with V0' < 0")
    z = np.zeros(K)
    z[1] = (-qcoef[1]) ** (1.0 / 3.0)
    P = np.polynomial.polynomial
    for m in range(2, K):
        zeta = z[:m + 1].copy()
        dz = P.polyder(zeta)
        prod = P.polymul(zeta, P.polymul(dz, dz))
        r = prod[m] if prod.size > m else 0.0
        r += qcoef[m]
        z[m] = -r / ((2 * m + 1) * z[1] ** 2)
    return z


@dataclass
class ZetaMap:
    """Langer coordinate on one side of the barrier.

    Attributes
    ----------
    mp : ModifiedPotential
        The potential, already reflected for ``side == "left"``.
    E : float
    side : str
        ``"right"`` or ``"left"``.
    x1 : float
        Turning point on this side (positive, in this map's coordinates).
    x_far : float
        End of the tabulated allowed region; beyond it a mapped tail rule is used.
    patch : float
        Radius of the series patch around ``x1``.
    """

    mp: ModifiedPotential
    E: float
    side: str
    x1: float
    x_far: float
    patch: float
    zcoef: np.ndarray = field(repr=False)
    _du_f: float = field(repr=False, default=0.0)
    _du_a: float = field(repr=False, default=0.0)
    _cum_f: np.ndarray = field(repr=False, default=None)
    _cum_a: np.ndarray = field(repr=False, default=None)

    # -- integral of sqrt|Q0| --------------------------------------------

    def _gap_f(self, u):
        """sqrt(V0 - E) at x = x1 - u^2 times 2u."""
        x = self.x1 - u * u
        h = u * u
        jet = self.mp.jet(self.x1, 2)
        taylor = -jet[1] * h + 0.5 * jet[2] * h * h
        gap = np.where(h < 1e-5 * (1 + self.x1), taylor, self.mp(x) - self.E)
        return 2.0 * u * np.sqrt(np.maximum(gap, 0.0))

    def _gap_a(self, u):
        """sqrt(E - V0) at x = x1 + u^2 times 2u."""
        x = self.x1 + u * u
        h = u * u
        jet = self.mp.jet(self.x1, 2)
        taylor = -(jet[1] * h + 0.5 * jet[2] * h * h)
        gap = np.where(h < 1e-5 * (1 + self.x1), taylor, self.E - self.mp(x))
        return 2.0 * u * np.sqrt(np.maximum(gap, 0.0))

    def _setup_tables(self, npanel=400):
        uf = math.sqrt(self.x1)
        ua = math.sqrt(self.x_far - self.x1)
        self._du_f = uf / npanel
        self._du_a = ua / npanel
        self._cum_f = cumulative_panels(self._gap_f, np.linspace(0.0, uf, npanel + 1), _NGL)
        self._cum_a = cumulative_panels(self._gap_a, np.linspace(0.0, ua, npanel + 1), _NGL)

    def _partial(self, fun, cum, du, u):
        k = np.minimum(np.floor(u / du).astype(int), cum.size - 1)
        lo = k * du
        t, w = gl_nodes(_NGL)
        half = 0.5 * (u - lo)
        pts = (0.5 * (u + lo))[..., None] + half[..., None] * t
        vals = fun(pts)
        return cum[k] + half * (vals @ w)

    def action_integral(self, x):
        """Signed ``int_{x1}^x sqrt|Q0|`` (negative for ``x < x1``)."""
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-12):
            raise DomainError("ZetaMap argument must be >= 0 (reflect for the other side)")
        out = np.zeros_like(x)
        forb = x < self.x1
        if forb.any():
            u = np.sqrt(self.x1 - x[forb])
            out[forb] = -self._partial(self._gap_f, self._cum_f, self._du_f, u)
        allowed = (~forb) & (x <= self.x_far)
        if allowed.any():
            u = np.sqrt(x[allowed] - self.x1)
            out[allowed] = self._partial(self._gap_a, self._cum_a, self._du_a, u)
        beyond = x > self.x_far
        if beyond.any():
            out[beyond] = self._cum_a[-1] + self._tail_integral(x[beyond])
        return out

    def _tail_integral(self, x):
        """``int_{x_far}^x sqrt(E - V0)`` for ``x > x_far``."""
        c = self.x_far
        s0 = c / x
        t, w = gl_nodes(40)
        half = 0.5 * (1.0 - s0)
        s = (0.5 * (1.0 + s0))[..., None] + half[..., None] * t
        g = tail_integrand(self.mp, self.E, c / s) * c / (s * s)
        return math.sqrt(self.E) * (x - c) + half * (g @ w)

    # -- zeta and derivatives ----------------------------------------------

    def _series_derivs(self, h):
        z = self.zcoef
        P = np.polynomial.polynomial
        d0 = P.polyval(h, z)
        c1 = P.polyder(z)
        c2 = P.polyder(c1)
        c3 = P.polyder(c2)
        return d0, P.polyval(h, c1), P.polyval(h, c2), P.polyval(h, c3)

    def derivs(self, x):
        """``(zeta, zeta', zeta'', zeta''')`` with respect to x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        h = x - self.x1
        inpatch = np.abs(h) < self.patch
        z = np.empty((4,) + x.shape)
        if inpatch.any():
            z[:, inpatch] = np.array(self._series_derivs(h[inpatch]))
        out = ~inpatch
        if out.any():
            z[:, out] = np.array(self._direct_derivs(x[out]))
        return z

    def _direct_derivs(self, x):
        I = self.action_integral(x)
        zeta = np.sign(I) * (1.5 * np.abs(I)) ** (2.0 / 3.0)
        jet = self.mp.jet(x, 2)
        Q0 = jet[0] - self.E
        Q1, Q2 = jet[1], jet[2]
        d1 = np.sqrt(-Q0 / zeta)
        N = Q1 + d1 ** 3
        D = 2.0 * zeta * d1
        d2 = -N / D
        Np = Q2 + 3.0 * d1 ** 2 * d2
        Dp = 2.0 * d1 ** 2 + 2.0 * zeta * d2
        d3 = -(Np * D - N * Dp) / D ** 2
        return zeta, d1, d2, d3

    def zeta(self, x):
        return _squeeze(self.derivs(x)[0], x)

    def q(self, x):
        """``q = -Q0 / zeta = zeta'^2``."""
        return _squeeze(self.derivs(x)[1] ** 2, x)

    def schwarzian_term(self, x):
        """``q^{-1/4} d^2 q^{1/4} / dzeta^2``."""
        _, d1, d2, d3 = self.derivs(x)
        return _squeeze(d3 / (2.0 * d1 ** 3) - 0.75 * d2 ** 2 / d1 ** 4, x)

    def vtilde(self, x):
        """Transformed potential ``Vt`` at ``x``."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        _, d1, d2, d3 = self.derivs(xa)
        v1 = self.mp.v1(xa)
        vt = v1 / d1 ** 2 - d3 / (2.0 * d1 ** 3) + 0.75 * d2 ** 2 / d1 ** 4
        return _squeeze(vt, x)

    def vtilde_direct(self, x):
        """``Vt`` from the non-series formulas only (for overlap checks)."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        _, d1, d2, d3 = self._direct_derivs(xa)
        vt = self.mp.v1(xa) / d1 ** 2 - d3 / (2.0 * d1 ** 3) + 0.75 * d2 ** 2 / d1 ** 4
        return _squeeze(vt, x)

    def vtilde_series(self, x):
        """``Vt`` from the turning-point series only."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        _, d1, d2, d3 = self._series_derivs(xa - self.x1)
        vt = self.mp.v1(xa) / d1 ** 2 - d3 / (2.0 * d1 ** 3) + 0.75 * d2 ** 2 / d1 ** 4
        return _squeeze(vt, x)

    def beta_terms(self, x):
        """``(beta0, beta1)`` of the forbidden-side representation of ``Vt``.

        ``q (Vt + 5/(16 zeta^2)) = E beta0 + <x>^-3 beta1`` for the Langer
        value of ``V1``.
        """
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        jet = self.mp.jet(xa, 2)
        V0, V1, V2 = jet
        Q0 = V0 - self.E
        b0 = (0.25 * (V2 / V0 - V2 / Q0) + 5.0 / 16.0 * ((V1 / Q0) ** 2 - (V1 / V0) ** 2)) / self.E
        br = (1.0 + xa ** 2) ** 1.5
        b1 = br * (0.25 / (1.0 + xa ** 2) - 0.25 * V2 / V0 + 5.0 / 16.0 * (V1 / V0) ** 2)
        return _squeeze(b0, x), _squeeze(b1, x)

    # -- inverse and landmarks ----------------------------------------------

    def x_of_zeta(self, zeta):
        """Inverse map by bracketed Newton iteration."""
        zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
        target = np.sign(zeta) * (2.0 / 3.0) * np.abs(zeta) ** 1.5
        zmin = float(self.zeta(0.0))
        if np.any(zeta < zmin - 1e-12):
            raise DomainError("zeta below zeta(0)")
        grid = np.concatenate([np.linspace(0.0, self.x1, 400, endpoint=False),
                               self.x1 + np.geomspace(1e-9, max(self.x_far - self.x1, 1.0), 800)])
        zg = self.zeta(grid)
        x = np.interp(zeta, zg, grid)
        big = zeta > zg[-1]
        if big.any():
            x[big] = np.maximum(grid[-1], (target[big] / math.sqrt(self.E)) + self.x1)
        for _ in range(60):
            d = self.derivs(x)
            step = (d[0] - zeta) / d[1]
            x = np.maximum(x - step, 0.0)
            if np.all(np.abs(step) <= 1e-15 * (1.0 + np.abs(x))):
                break
        return _squeeze(x, zeta) if np.ndim(zeta) else float(x[0])

    @property
    def zeta0(self) -> float:
        """``zeta`` at ``x = 0`` (negative)."""
        return float(self.zeta(0.0))

    def tau(self, x, hbar):
        """Airy argument ``-hbar^{-2/3} zeta``."""
        return -hbar ** (-2.0 / 3.0) * self.zeta(x)

    def transformed_residual(self, x, f, fp, fpp):
        """Residual of the zeta-form equation for ``w = q^{1/4} f``.

        Given samples of a solution ``f`` of the original equation with its
        first two x-derivatives, builds ``w`` and its zeta-derivatives by the
        chain rule and returns ``(-hbar^2 w_zz - (zeta + hbar^2 Vt) w) / |w|``
        together with the scale ``|hbar^2 w_zz|`` for normalisation.
        """
        hbar = self.mp.hbar
        z, d1, d2, d3 = self.derivs(x)
        p = np.sqrt(d1)  # q^{1/4}
        p1 = d2 / (2.0 * p)
        p2 = d3 / (2.0 * p) - d2 ** 2 / (4.0 * p ** 3)
        w = p * f
        wx = p1 * f + p * fp
        wxx = p2 * f + 2.0 * p1 * fp + p * fpp
        wz = wx / d1
        wzz = (wxx - d2 * wz) / d1 ** 2
        vt = self.vtilde(x)
        lhs = -hbar ** 2 * wzz
        rhs = (z + hbar ** 2 * vt) * w
        return lhs - rhs, np.maximum(np.abs(lhs), np.abs(rhs))


def _squeeze(arr, like):
    if np.ndim(like) == 0:
        return float(np.asarray(arr).reshape(-1)[0])
    return np.asarray(arr).reshape(np.shape(like))


def build_zeta_map(mp: ModifiedPotential, E: float, side: str = "right",
                   x_far: float | None = None, nterms: int = 22) -> ZetaMap:
    """Construct the Langer map for one side of the barrier."""
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    x2, x1 = turning_points(mp, E)
    m = mp if side == "right" else mp.reflected()
    xt = x1 if side == "right" else -x2
    other = x2 if side == "right" else -x1
    if x_far is None:
        x_far = max(10.0 * xt, 1e3)
    radius = m.analytic_radius(xt) if m.base.analytic else 0.0
    qcoef = m.taylor(xt, nterms)
    qcoef = np.array(qcoef, dtype=float)
    qcoef[0] = 0.0
    if not m.base.analytic:
        radius = 0.05
    patch = 0.25 * min(radius, xt - other)
    if not m.base.analytic:
        patch = min(patch, 0.02)
    zmap = ZetaMap(mp=m, E=E, side=side, x1=xt, x_far=float(x_far), patch=patch,
                   zcoef=zeta_series(qcoef))
    zmap._setup_tables()
    return zmap


@dataclass(frozen=True)
class ZeroEnergyZetaReport:
    """Comparison of ``(2/3)|zeta|^{3/2}`` with the zero-energy action near 0.

    ``defect`` is ``max |(2/3)|zeta(x)|^{3/2} - int_x^{x1} sqrt(V0)|`` over the
    grid, ``reference`` is the size of the integral at ``x = 0`` and
    ``bound`` is ``E log(1/E)``.
    """

    E: float
    eps: float
    x: np.ndarray
    defect: np.ndarray
    reference: float
    bound: float

    @property
    def max_defect(self) -> float:
        return float(np.max(np.abs(self.defect)))

    @property
    def relative_defect(self) -> float:
        return self.max_defect / self.reference


def zero_energy_zeta_check(zmap: ZetaMap, eps: float = 0.1, npts: int = 21) -> ZeroEnergyZetaReport:
    """Evaluate the small-x representation of ``zeta`` at low energy."""
    from ._quad import gl_adaptive

    E = zmap.E
    if E > 1e-2:
        raise DomainError("zero-energy check requires E <= 1e-2")
    x = np.linspace(0.0, eps * zmap.x1, npts)
    lhs = (2.0 / 3.0) * np.abs(zmap.zeta(x)) ** 1.5
    mp = zmap.mp

    def zero_action(a):
        return gl_adaptive(lambda s: np.sqrt(mp(s)), a, zmap.x1, tol=1e-14)

    rhs = np.array([zero_action(a) for a in x])
    return ZeroEnergyZetaReport(E=E, eps=eps, x=x, defect=lhs - rhs,
                                reference=float(rhs[0]), bound=E * math.log(1.0 / E))
