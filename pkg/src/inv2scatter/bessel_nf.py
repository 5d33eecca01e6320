"""Bessel normal form on the allowed side and its Hankel-kernel basis.

With ``y = sqrt(E) x`` and ``F(y) = V0(y / sqrt(E)) / E - 1`` the map
``xi(y)`` is fixed by

    int_{y1}^y sqrt(-F) du = int_1^xi sqrt(1 - t^-2) dt = sqrt(xi^2 - 1) - arcsec(xi),
    int_y^{y1} sqrt(F) du  = int_xi^1 sqrt(t^-2 - 1) dt = arccosh(1/xi) - sqrt(1 - xi^2),

so ``-F = xi_y^2 (1 - xi^-2)``.  Both sides are routed through their Langer
variables (``Z Z'^2 = -Q`` with ``Q = F`` and ``Q = xi^-2 - 1``), which are
analytic across the turning point; near ``y1`` both are power series.

With ``Omega = xi_y`` (equal to ``exp(-int_xi^inf mu)``, ``mu = xi_yy / xi_y^2``)
and ``phi = Omega^{1/2} f``, the equation for ``f`` becomes

    -hbar^2 phi'' + (xi^-2 (1 - hbar^2/4) - 1) phi = hbar^2 W0 phi,
    W0 = c / ((E + y^2) xi_y^2) - 1/(4 xi^2) - mu'/2 - mu^2/4,

where ``c`` is the Langer coefficient (``W0 = O(xi^-3)`` for ``c = 1/4``).
For ``n = 1/hbar`` the outgoing solution solves

    phi1 = phi1^0 + int_xi^inf G(xi, s) W0(s) phi1(s) ds,   phi1^0 = xi^{1/2} H^(1)_n(n xi),
    G(xi, s) = (pi / 4i) [phi1^0(xi) phi2^0(s) - phi1^0(s) phi2^0(xi)],

and ``phi2`` likewise with ``H^(2)``.  Writing ``phi_j = phi_j^0 g`` gives
``g = 1 + pref (P - K)`` with a unimodular ratio in ``K``, so the Picard
solver of the Airy route applies unchanged.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from ._quad import cumulative_panels, gl_nodes
from .airy_connect import _gl01, _hermite, _Volterra
from ._magnus import phase_grid, propagate
from .errors import DomainError
from .lgmap import zeta_series
from .potential import ModifiedPotential, PotentialSpec, turning_points
from .scattering import ScatteringMatrix, smatrix_from_jost
from .specfun import hankel1_scaled

__all__ = ["XiMap", "xi_map_build", "omega_eval", "transformed_w0", "BesselBasis",
           "bessel_basis", "bessel_jost", "forward_integral", "backward_integral",
           "normal_form_residual", "bessel_transformed_residual", "BesselJost", "smatrix_bessel"]

_NGL = 16
_NGL_V = 8
_XI_PATCH = 0.2
_NTERMS = 24
EPS_DEFAULT = 0.3
RESOLUTION = 0.5
_N_MIN = 5.0


def forward_integral(xi):
    """``int_1^xi sqrt(1 - t^-2) dt`` for ``xi >= 1``."""
    xi = np.asarray(xi, dtype=float)
    return np.sqrt(xi * xi - 1.0) - np.arccos(1.0 / xi)


def backward_integral(xi):
    """``int_xi^1 sqrt(t^-2 - 1) dt`` for ``0 < xi <= 1``."""
    xi = np.asarray(xi, dtype=float)
    return np.arccosh(1.0 / xi) - np.sqrt(1.0 - xi * xi)


def _langer_derivs(Z, Q0, Q1, Q2):
    """First three derivatives of ``Z`` from ``Z Z'^2 = -Q`` (off the turning point)."""
    d1 = np.sqrt(-Q0 / Z)
    N = Q1 + d1 ** 3
    D = 2.0 * Z * d1
    d2 = -N / D
    Np = Q2 + 3.0 * d1 ** 2 * d2
    Dp = 2.0 * d1 ** 2 + 2.0 * Z * d2
    d3 = -(Np * D - N * Dp) / D ** 2
    return d1, d2, d3


def _poly_derivs(c, h):
    P = np.polynomial.polynomial
    c1 = P.polyder(c)
    c2 = P.polyder(c1)
    c3 = P.polyder(c2)
    return P.polyval(h, c), P.polyval(h, c1), P.polyval(h, c2), P.polyval(h, c3)


# Langer variable of the normal form, series at xi = 1
_QXI = np.array([0.0] + [(-1.0) ** k * (k + 1) for k in range(1, _NTERMS)])
_ZXI = zeta_series(_QXI)


def _zxi(xi):
    """``(Z, Z', Z'', Z''')`` of the normal form at ``xi``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty((4,) + xi.shape)
    h = xi - 1.0
    near = np.abs(h) < _XI_PATCH
    if near.any():
        out[:, near] = np.array(_poly_derivs(_ZXI, h[near]))
    far = ~near
    if far.any():
        x = xi[far]
        I = np.where(x > 1.0, forward_integral(np.maximum(x, 1.0)),
                     -backward_integral(np.minimum(x, 1.0)))
        Z = np.sign(I) * (1.5 * np.abs(I)) ** (2.0 / 3.0)
        d = _langer_derivs(Z, x ** -2 - 1.0, -2.0 * x ** -3, 6.0 * x ** -4)
        out[0, far] = Z
        out[1:, far] = np.array(d)
    return out


def _xi_of_z(Z):
    """Inverse of the normal-form Langer variable by Newton iteration."""
    Z = np.atleast_1d(np.asarray(Z, dtype=float))
    target = (2.0 / 3.0) * np.abs(Z) ** 1.5
    lin = 1.0 + Z / _ZXI[1]
    # A(xi) ~ xi - pi/2 for large xi, B(xi) ~ log(2/xi) - 1 for small xi
    xi = np.where(Z >= 0, np.maximum(target + 0.5 * math.pi, lin),
                  np.where(lin > 0.8, lin, 2.0 * np.exp(-target - 1.0)))
    for _ in range(80):
        d = _zxi(xi)
        step = (d[0] - Z) / d[1]
        new = xi - step
        new = np.where(new <= 0.0, 0.5 * xi, new)
        done = np.abs(new - xi) <= 1e-15 * np.abs(xi)
        xi = new
        if np.all(done):
            break
    return xi


@dataclass
class XiMap:
    """The normal-form coordinate ``xi(y)`` for ``y >= eps``.

    ``y_grid``/``xi_grid`` are a monotone tabulation used to seed inverse
    evaluations; ``xi0`` and ``y0 = -xi0`` are the far-field offsets with
    ``xi = y + xi0 + O(1/y)``.
    """

    mp: ModifiedPotential
    E: float
    eps: float
    y1: float
    y_far: float
    patch: float
    zcoef: np.ndarray = field(repr=False)
    y_grid: np.ndarray = field(repr=False, default=None)
    xi_grid: np.ndarray = field(repr=False, default=None)
    xi0: float = float("nan")
    _du_f: float = field(repr=False, default=0.0)
    _du_a: float = field(repr=False, default=0.0)
    _cum_f: np.ndarray = field(repr=False, default=None)
    _cum_a: np.ndarray = field(repr=False, default=None)

    @property
    def hbar(self) -> float:
        return self.mp.hbar

    @property
    def x1(self) -> float:
        return self.y1 / math.sqrt(self.E)

    @property
    def y0(self) -> float:
        return -self.xi0

    # -- F and its jet in y ------------------------------------------------
    def F_jet(self, y, order=2):
        rE = math.sqrt(self.E)
        jet = self.mp.jet(np.asarray(y) / rE, order)
        out = [jet[k] / self.E * rE ** (-k) for k in range(order + 1)]
        out[0] = out[0] - 1.0
        return out

    def _gap(self, u, sign):
        y = self.y1 + sign * u * u
        h = u * u
        j1 = self.F_jet(self.y1, 2)
        taylor = j1[1] * sign * h + 0.5 * j1[2] * h * h
        F = np.where(h < 1e-5 * (1.0 + self.y1), taylor, self.F_jet(y, 0)[0])
        val = F if sign < 0 else -F
        return 2.0 * u * np.sqrt(np.maximum(val, 0.0))

    def _setup_tables(self, npanel=400):
        uf = math.sqrt(self.y1 - self.eps)
        ua = math.sqrt(self.y_far - self.y1)
        self._du_f = uf / npanel
        self._du_a = ua / npanel
        self._cum_f = cumulative_panels(lambda u: self._gap(u, -1), np.linspace(0.0, uf, npanel + 1), _NGL)
        self._cum_a = cumulative_panels(lambda u: self._gap(u, +1), np.linspace(0.0, ua, npanel + 1), _NGL)

    def _partial(self, sign, cum, du, u):
        k = np.minimum(np.floor(u / du).astype(int), cum.size - 1)
        lo = k * du
        t, w = gl_nodes(_NGL)
        half = 0.5 * (u - lo)
        pts = (0.5 * (u + lo))[..., None] + half[..., None] * t
        return cum[k] + half * (self._gap(pts, sign) @ w)

    def _tail(self, y):
        """``int_{y_far}^y (sqrt(-F) - 1)`` via ``s = y_far / u``."""
        c = self.y_far
        s0 = c / y
        t, w = gl_nodes(40)
        half = 0.5 * (1.0 - s0)
        s = (0.5 * (1.0 + s0))[..., None] + half[..., None] * t
        u = c / s
        g = (np.sqrt(np.maximum(-self.F_jet(u, 0)[0], 0.0)) - 1.0) * c / (s * s)
        return half * (g @ w)

    def action(self, y):
        """Signed ``int_{y1}^y sqrt|F|``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros_like(y)
        forb = y < self.y1
        if forb.any():
            out[forb] = -self._partial(-1, self._cum_f, self._du_f, np.sqrt(self.y1 - y[forb]))
        mid = (~forb) & (y <= self.y_far)
        if mid.any():
            out[mid] = self._partial(+1, self._cum_a, self._du_a, np.sqrt(y[mid] - self.y1))
        far = y > self.y_far
        if far.any():
            out[far] = self._cum_a[-1] + (y[far] - self.y_far) + self._tail(y[far])
        return out

    # -- xi and derivatives ----------------------------------------------
    def derivs(self, y):
        """``(xi, xi_y, xi_yy, xi_yyy)`` at ``y``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if np.any(y < self.eps * (1.0 - 1e-12)):
            raise DomainError(f"xi map is defined for y >= eps = {self.eps}")
        out = np.empty((4,) + y.shape)
        h = y - self.y1
        near = np.abs(h) < self.patch
        if near.any():
            zy = _poly_derivs(self.zcoef, h[near])
            xi = _xi_of_z(zy[0])
            zx = _zxi(xi)
            x1 = zy[1] / zx[1]
            x2 = (zy[2] - zx[2] * x1 ** 2) / zx[1]
            x3 = (zy[3] - zx[3] * x1 ** 3 - 3.0 * zx[2] * x1 * x2) / zx[1]
            out[:, near] = np.array([xi, x1, x2, x3])
        far = ~near
        if far.any():
            yf = y[far]
            I = self.action(yf)
            Z = np.sign(I) * (1.5 * np.abs(I)) ** (2.0 / 3.0)
            xi = _xi_of_z(Z)
            F0, F1, F2 = self.F_jet(yf, 2)
            # -F = xi_y^2 S(xi), S = 1 - xi^-2
            R0, R1, R2 = -F0, -F1, -F2
            S = 1.0 - xi ** -2
            S1 = 2.0 * xi ** -3
            S2 = -6.0 * xi ** -4
            x1 = np.sqrt(R0 / S)
            N = R1 - S1 * x1 ** 3
            D = 2.0 * S * x1
            x2 = N / D
            Np = R2 - S2 * x1 ** 4 - 3.0 * S1 * x1 ** 2 * x2
            Dp = 2.0 * S1 * x1 ** 2 + 2.0 * S * x2
            x3 = (Np * D - N * Dp) / D ** 2
            out[:, far] = np.array([xi, x1, x2, x3])
        return out

    def xi(self, y):
        return _squeeze(self.derivs(y)[0], y)

    def identity_residual(self, y):
        """``1 - V0/E - xi_y^2 (1 - xi^-2)`` at ``y``."""
        d = self.derivs(y)
        F = self.F_jet(np.atleast_1d(np.asarray(y, dtype=float)), 0)[0]
        return _squeeze(-F - d[1] ** 2 * (1.0 - d[0] ** -2), y)

    def y_of_xi(self, eta):
        """Inverse map by Newton iteration seeded from the tabulation."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        lo = self.xi_grid[0]
        if np.any(eta < lo * (1.0 - 1e-12)):
            raise DomainError("xi below the map range")
        y = np.interp(eta, self.xi_grid, self.y_grid)
        big = eta > self.xi_grid[-1]
        y[big] = eta[big] - self.xi0
        for _ in range(60):
            d = self.derivs(y)
            step = (d[0] - eta) / d[1]
            y = np.maximum(y - step, self.eps)
            if np.all(np.abs(step) <= 1e-15 * (1.0 + np.abs(y))):
                break
        return _squeeze(y, eta)

    @property
    def xi1(self) -> float:
        """``xi`` at the lower end ``y = eps`` of the map."""
        return float(self.xi_grid[0])


def _squeeze(arr, like):
    if np.ndim(like) == 0:
        return float(np.asarray(arr).reshape(-1)[0])
    return np.asarray(arr).reshape(np.shape(like))


def xi_map_build(spec: PotentialSpec, E: float, eps: float = EPS_DEFAULT, hbar: float = 0.0,
                 langer: float = 0.25, y_far: float | None = None) -> XiMap:
    """Construct ``xi(y)`` for ``V0`` at energy ``E`` on ``y >= eps``.

    ``hbar`` and ``langer`` select ``V0``; the defaults give the classical
    potential ``V``.
    """
    mp = ModifiedPotential(spec, hbar, langer=langer)
    x2, x1 = turning_points(mp, E)
    rE = math.sqrt(E)
    y1 = rE * x1
    if not 0.0 < eps < y1:
        raise DomainError(f"eps={eps} must lie in (0, y1={y1:.6g})")
    if y_far is None:
        y_far = rE * max(10.0 * x1, 1e3)
    if mp.base.analytic:
        qx = mp.taylor(x1, _NTERMS)
        radius = mp.analytic_radius(x1) * rE
    else:
        qx = mp.taylor(x1)
        radius = 0.02 * rE
    k = np.arange(len(qx))
    qy = np.array(qx, dtype=float) / E * rE ** (-k)
    qy[0] = 0.0
    zc = zeta_series(qy)
    # keep |xi - 1| inside the normal-form series patch
    slope = zc[1] / _ZXI[1]
    patch = min(0.25 * radius, 0.25 * (y1 - eps), 0.5 * _XI_PATCH / slope)
    xm = XiMap(mp=mp, E=E, eps=eps, y1=y1, y_far=float(y_far), patch=patch, zcoef=zc)
    xm._setup_tables()
    yg = np.unique(np.concatenate([np.linspace(eps, y1, 400),
                                   y1 + np.geomspace(1e-6, max(y_far - y1, 1.0), 800)]))
    xm.y_grid = yg
    xm.xi_grid = xm.derivs(yg)[0]
    # xi - y -> xi0: A(xi) = xi - pi/2 + O(1/xi) and I(y) = y + const + O(1/y)
    lim = xm._cum_a[-1] - y_far + float(xm._tail(np.array([1e300]))[0])
    xm.xi0 = math.pi / 2.0 + lim
    return xm


def _mu_parts(d):
    xi, x1, x2, x3 = d
    mu = x2 / x1 ** 2
    dmu = x3 / x1 ** 3 - 2.0 * x2 ** 2 / x1 ** 4
    return mu, dmu


def omega_eval(xmap: XiMap, eta):
    """``(mu, Omega)`` at ``xi = eta``.

    ``mu = (d_xi y)^2 xi_yy`` and ``Omega = exp(-int_eta^inf mu) = xi_y``.
    """
    y = xmap.y_of_xi(eta)
    d = xmap.derivs(y)
    mu, _ = _mu_parts(d)
    return _squeeze(mu, eta), _squeeze(d[1], eta)


def _w0_from(xmap: XiMap, y, d):
    xi, x1 = d[0], d[1]
    mu, dmu = _mu_parts(d)
    c = xmap.mp.langer
    return c / ((xmap.E + y * y) * x1 ** 2) - 0.25 / xi ** 2 - 0.5 * dmu - 0.25 * mu ** 2


def transformed_w0(xmap: XiMap, xi):
    """Potential ``W0`` of the normal-form equation at ``xi``."""
    y = np.atleast_1d(xmap.y_of_xi(xi))
    return _squeeze(_w0_from(xmap, y, xmap.derivs(y)), xi)


def normal_form_residual(xmap: XiMap, hbar: float, x, f, fp, fpp):
    """Residual of the normal-form equation for ``phi = Omega^{1/2} f``.

    ``f`` and its first two x-derivatives are sampled at ``x``.  Returns
    ``(residual, scale)`` with ``scale`` the largest term in magnitude.
    """
    rE = math.sqrt(xmap.E)
    y = np.asarray(x, dtype=float) * rE
    d = xmap.derivs(y)
    xi, x1, x2, x3 = d
    p = np.sqrt(x1)
    p1 = x2 / (2.0 * p)
    p2 = x3 / (2.0 * p) - x2 ** 2 / (4.0 * p ** 3)
    gy, gyy = fp / rE, fpp / xmap.E
    phi = p * f
    phy = p1 * f + p * gy
    phyy = p2 * f + 2.0 * p1 * gy + p * gyy
    phx = phy / x1
    phxx = (phyy - x2 * phx) / x1 ** 2
    w0 = _w0_from(xmap, y, d)
    a = -hbar ** 2 * phxx
    b = (xi ** -2 * (1.0 - 0.25 * hbar ** 2) - 1.0) * phi
    c = -hbar ** 2 * w0 * phi
    return a + b + c, np.maximum(np.maximum(np.abs(a), np.abs(b)), np.abs(c))


# ---------------------------------------------------------------------------
# Hankel-kernel Volterra basis


def _hankel_parts(n, xi):
    """``(log H1(n xi), d log H1 / dxi, N^2, chi)`` with ``H1 = N e^{i chi}``."""
    z = n * xi
    h, dh = hankel1_scaled(n, z)
    h = np.atleast_1d(h)
    dh = np.atleast_1d(dh)
    logh = np.log(h) + 1j * z
    dlog = n * dh / h
    N2 = np.abs(h) ** 2
    return logh, dlog, N2


def _phase(n, xi, ref_xi=None, ref_chi=None):
    """Continuous ``chi = arg H1(n xi)`` (unwrapped along sorted ``xi``)."""
    z = n * xi
    h = np.atleast_1d(hankel1_scaled(n, z)[0])
    a = np.angle(h)
    if ref_xi is None:
        return z + np.unwrap(a)
    # shift each value to the branch nearest the reference point's phase
    ref = np.atleast_1d(ref_chi) - n * np.atleast_1d(ref_xi)
    return z + a + 2.0 * np.pi * np.round((ref - a) / (2.0 * np.pi))


@dataclass
class BesselBasis:
    """Perturbed Hankel solutions ``phi_1, phi_2`` on ``y in [y_start, y_end]``.

    ``g[j-1]`` are the factors ``phi_j / phi_j^0`` at the nodes and
    ``dg[j-1]`` their xi-derivatives.
    """

    xmap: XiMap
    hbar: float
    y: np.ndarray
    xi: np.ndarray
    g: tuple
    dg: tuple
    picard_history: tuple
    _solvers: tuple = field(repr=False, default=())
    _extra: dict = field(repr=False, default_factory=dict)

    @property
    def n(self) -> float:
        return 1.0 / self.hbar

    def phi(self, j: int):
        """``(log phi_j, d log phi_j / dxi)`` at the nodes."""
        return self._extra["phi"](self.y, j)

    def evaluate(self, y, j: int = 1):
        """``(log phi_j, d log phi_j / dxi, xi)`` at arbitrary ``y`` in the grid."""
        return self._extra["phi"](np.atleast_1d(np.asarray(y, dtype=float)), j)

    def wronskian(self) -> np.ndarray:
        """``phi_1 phi_2' - phi_1' phi_2`` (xi-derivatives) at every node.

        The unperturbed value is ``-4i/pi``; the Volterra equations preserve
        it exactly.
        """
        l1, d1, _ = self.phi(1)
        l2, d2, _ = self.phi(2)
        return np.exp(l1 + l2) * (d2 - d1)

    def volterra_residual(self, j: int = 1) -> float:
        """Max deviation at panel midpoints between the integral operator
        applied to the converged ``g`` and the stored Hermite interpolant."""
        return self._extra["residual"](j)


def bessel_transformed_residual(basis: BesselBasis, xi, j: int = 1, rel_step: float = 1e-2) -> np.ndarray:
    """Relative residual of the normal-form equation for ``phi_j`` at ``xi``.

    With ``l = phi_xi / phi`` the equation reads
    ``-hbar^2 (l_xi + l^2) + xi^-2 (1 - hbar^2/4) - 1 - hbar^2 W0 = 0``;
    ``l_xi`` is a five-point difference with step ``rel_step * hbar``.
    """
    h = basis.hbar
    xm = basis.xmap
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    dz = np.full(xi.shape, rel_step * h)
    offs = np.array([-2.0, -1.0, 1.0, 2.0])
    pts = xi[:, None] + dz[:, None] * offs[None, :]
    _, l, _ = basis.evaluate(np.atleast_1d(xm.y_of_xi(pts.ravel())), j)
    l = l.reshape(pts.shape)
    lz = (l[:, 0] - 8.0 * l[:, 1] + 8.0 * l[:, 2] - l[:, 3]) / (12.0 * dz)
    _, l0, _ = basis.evaluate(np.atleast_1d(xm.y_of_xi(xi)), j)
    w0 = np.atleast_1d(transformed_w0(xm, xi))
    a = -h ** 2 * (lz + l0 ** 2)
    b = xi ** -2 * (1.0 - 0.25 * h ** 2) - 1.0
    c = -h ** 2 * w0
    return np.abs(a + b + c) / (np.abs(a) + np.abs(b) + np.abs(c))


def _bessel_grid(xmap: XiMap, n: float, a: float, b: float, resolution: float) -> np.ndarray:
    L = b - a
    off = np.unique(np.concatenate([np.linspace(0.0, min(L, 20.0), 3001),
                                    np.geomspace(20.0, L, 3000) if L > 20.0 else []]))
    aux = a + off
    aux[-1] = b
    d = xmap.derivs(aux)
    rate = n * d[1] * (np.sqrt(np.abs(1.0 - d[0] ** -2)) + n ** (-1.0 / 3.0))
    dens = (rate / resolution + 1.0 / (0.1 * (np.abs(aux - xmap.y1) + 1.0))
            + 1.0 / (0.1 * (aux + 1.0)))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(aux))])
    m = max(int(math.ceil(cum[-1])), 16)
    nodes = np.interp(np.linspace(0.0, cum[-1], m + 1), cum, aux)
    nodes[0], nodes[-1] = a, b
    return nodes


def _bessel_tail(xmap: XiMap, n: float, y_end: float, sigma: float, w0_scale: float):
    """``(P, K)`` over ``[xi_end, inf)`` with ``g = 1``.

    ``xi N^2 W0`` is fitted as ``xi^-3`` times a cubic in ``1/xi`` through
    four far samples; ``K`` is its first integration-by-parts term.
    """
    ys = y_end * np.array([0.35, 0.5, 0.7, 1.0])
    d = xmap.derivs(ys)
    xi = d[0]
    w0 = w0_scale * _w0_from(xmap, ys, d)
    _, _, N2 = _hankel_parts(n, xi)
    f = xi * N2 * w0
    m = xi[:, None] ** (-(3.0 + np.arange(4))[None, :])
    coef = np.linalg.solve(m, f)
    pw = 2.0 + np.arange(4)
    xN = xi[-1]
    tail_P = float(np.sum(coef * xN ** (-pw) / pw))
    chi_p = 2.0 / (math.pi * xN * N2[-1])
    lkp = -2j * sigma * chi_p
    tail_K = f[-1] / lkp
    return tail_P, tail_K


def bessel_basis(xmap: XiMap, hbar: float, y_start: float | None = None,
                 y_end: float | None = None, resolution: float = RESOLUTION,
                 tol: float = 1e-12, w0_scale: float = 1.0) -> BesselBasis:
    """Solve the Hankel-kernel Volterra equations for ``phi_1, phi_2``.

    The grid starts at the turning point ``y1`` (``xi = 1``) by default;
    below it the split into ``P`` and ``K`` loses accuracy exponentially.
    ``w0_scale = 0`` switches the perturbation off.
    """
    n = 1.0 / hbar
    if n < _N_MIN:
        raise DomainError(f"Bessel route needs n = 1/hbar >= {_N_MIN:g}")
    a = xmap.y1 if y_start is None else float(y_start)
    if a < xmap.eps:
        raise DomainError("y_start below the map range")
    b = max(xmap.y_far, 40.0 + xmap.y1) if y_end is None else float(y_end)
    y = _bessel_grid(xmap, n, a, b, resolution)
    t, w = _gl01(_NGL_V)
    h = np.diff(y)
    yq = y[:-1, None] + h[:, None] * t[None, :]
    dn = xmap.derivs(y)
    dq = xmap.derivs(yq.ravel())
    xin, xiq = dn[0], dq[0].reshape(yq.shape)
    chin = _phase(n, xin)
    k = np.arange(y.size - 1)
    chiq = _phase(n, xiq.ravel(), np.repeat(xin[:-1], _NGL_V), np.repeat(chin[:-1], _NGL_V)
                  ).reshape(yq.shape)
    _, _, N2n = _hankel_parts(n, xin)
    _, _, N2q = _hankel_parts(n, xiq.ravel())
    w0q = w0_scale * _w0_from(xmap, yq.ravel(), dq).reshape(yq.shape)
    uq = xiq * N2q.reshape(yq.shape)
    base = uq * w0q * dq[1].reshape(yq.shape) * w[None, :] * h[:, None]
    del k
    solvers = {}
    for j in (1, 2):
        sigma = 1.0 if j == 1 else -1.0
        lkn = -2j * sigma * chin
        lkq = -2j * sigma * chiq
        wK = np.exp(lkn[:-1, None] - lkq) * base
        s = _Volterra(x=y, hbar=1.0, pref=-0.25j * sigma * math.pi, node_u=xin * N2n, node_lk=lkn,
                      node_d1=dn[1], gl_t=t, wP=base.astype(complex), wK=wK, dtype=complex,
                      dg_sign=1.0)
        s.tail_P, s.tail_K = _bessel_tail(xmap, n, b, sigma, w0_scale)
        s.solve(tol)
        solvers[j] = s

    def running(ye, j):
        """``(P, K, xi, g, dg/dxi)`` at arbitrary points of the grid."""
        s = solvers[j]
        sigma = 1.0 if j == 1 else -1.0
        kk = np.clip(np.searchsorted(y, ye, side="right") - 1, 0, y.size - 2)
        yb = y[kk + 1]
        de = xmap.derivs(ye)
        chie = _phase(n, de[0], xin[kk], chin[kk])
        lke = -2j * sigma * chie
        hh = yb - ye
        yq2 = ye[:, None] + hh[:, None] * t[None, :]
        dq2 = xmap.derivs(yq2.ravel())
        chiq2 = _phase(n, dq2[0], np.repeat(xin[kk], _NGL_V), np.repeat(chin[kk], _NGL_V)
                       ).reshape(yq2.shape)
        _, _, N2q2 = _hankel_parts(n, dq2[0])
        w0q2 = w0_scale * _w0_from(xmap, yq2.ravel(), dq2)
        b2 = (dq2[0] * N2q2 * w0q2 * dq2[1]).reshape(yq2.shape) * w[None, :] * hh[:, None]
        hp = y[kk + 1] - y[kk]
        tt = (yq2 - y[kk, None]) / hp[:, None]
        H = _hermite(tt)
        gq = (H[0] * s.g[kk, None] + H[1] * hp[:, None] * s.dg[kk, None]
              + H[2] * s.g[kk + 1, None] + H[3] * hp[:, None] * s.dg[kk + 1, None])
        IP = np.sum(b2 * gq, axis=1)
        IK = np.sum(np.exp(lke[:, None] + 2j * sigma * chiq2) * b2 * gq, axis=1)
        P = s.P[kk + 1] + IP
        K = np.exp(lke - s.node_lk[kk + 1]) * s.K[kk + 1] + IK
        _, _, N2e = _hankel_parts(n, de[0])
        g = 1.0 + s.pref * (P - K)
        dg = K / (de[0] * N2e)
        return de, g, dg

    def phi(ye, j):
        de, g, dg = running(ye, j)
        xi = de[0]
        logh, dlogh, _ = _hankel_parts(n, xi)
        if j == 2:
            logh, dlogh = np.conj(logh), np.conj(dlogh)
        logphi = 0.5 * np.log(xi) + logh + np.log(g)
        dphi = 0.5 / xi + dlogh + dg / g
        return logphi, dphi, xi

    def residual(j):
        s = solvers[j]
        g2 = s.g.copy()
        inner = 0.5 * (y[:-1] + y[1:])
        _, g_mid, _ = running(inner, j)
        # compare against the Hermite interpolant of the stored nodes
        tm = np.full(inner.size, 0.5)
        H = _hermite(tm)
        interp = H[0] * g2[:-1] + H[1] * h * s.dg[:-1] + H[2] * g2[1:] + H[3] * h * s.dg[1:]
        return float(np.max(np.abs(g_mid - interp)))

    basis = BesselBasis(xmap=xmap, hbar=hbar, y=y, xi=xin,
                        g=(solvers[1].g, solvers[2].g),
                        dg=(solvers[1].dg / dn[1], solvers[2].dg / dn[1]),
                        picard_history=(tuple(solvers[1].history), tuple(solvers[2].history)),
                        _solvers=(solvers[1], solvers[2]))
    basis._extra["phi"] = phi
    basis._extra["residual"] = residual
    return basis


@dataclass(frozen=True)
class BesselJost:
    """``f+`` from the Bessel route: ``f = exp(log_value)``, ``f' = dlog f``."""

    E: float
    hbar: float
    x: np.ndarray
    log_value: np.ndarray
    dlog: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return np.exp(self.log_value)


def bessel_jost(basis: BesselBasis, x) -> BesselJost:
    """``f+`` at physical points ``x`` (inside the basis grid).

    ``f+ = C Omega^{-1/2} phi_1`` with ``C`` fixed by ``xi - y -> xi0`` and the
    Hankel asymptotics, ``C = sqrt(pi n / 2) e^{-i(n xi0 - n pi/2 - pi/4)}``.
    """
    xm = basis.xmap
    n = basis.n
    rE = math.sqrt(xm.E)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = rE * x
    if np.any(y < basis.y[0]) or np.any(y > basis.y[-1]):
        raise DomainError("points outside the Bessel basis grid")
    logphi, dphi, _ = basis.evaluate(y, 1)
    d = xm.derivs(y)
    mu, _ = _mu_parts(d)
    logC = 0.5 * math.log(0.5 * math.pi * n) - 1j * (n * xm.xi0 - 0.5 * n * math.pi - 0.25 * math.pi)
    logf = logC - 0.5 * np.log(d[1]) + logphi
    dlog = rE * d[1] * (dphi - 0.5 * mu)
    return BesselJost(E=xm.E, hbar=basis.hbar, x=x, log_value=logf, dlog=dlog)


def _carry_to_origin(spec: PotentialSpec, E: float, hbar: float, x0: float, logf: complex,
                     u: complex, resolution: float = 0.15):
    """Carry Jost data ``(log f, f'/f)`` from ``x0`` to ``x = 0`` for the raw potential."""
    mp = ModifiedPotential(spec, hbar, langer=0.0)
    ih2 = 1.0 / hbar ** 2
    k = math.sqrt(E) / hbar
    kappa = lambda x: np.maximum(np.sqrt(np.abs(mp(x) - E)) / hbar, k)  # noqa: E731
    nodes = phase_grid(kappa, x0, 0.0, c=resolution)
    prop = propagate(lambda x: (mp(x) - E) * ih2, nodes, np.array([1.0, u]))
    f, df = prop.vec[-1]
    return logf + prop.log_scale[-1] + cmath.log(f), complex(df / f)


def smatrix_bessel(spec: PotentialSpec, E: float, hbar: float, x_match: float | None = None,
                   eps: float = EPS_DEFAULT, langer: float = 0.25) -> ScatteringMatrix:
    """S-matrix with the Jost data taken from the Bessel route.

    ``f+`` (and ``f-`` via the reflected potential) is evaluated at
    ``x_match`` (default ``2 x1``) and carried to ``x = 0`` by direct
    integration, so the only semiclassical input is the far-side solution.
    Diagnostic only; the provenance is ``"wkb-refined"``.
    """
    data = []
    for s in ((spec,) if spec.symmetric else (spec, spec.reflected())):
        xm = xi_map_build(s, E, eps=eps, hbar=hbar, langer=langer)
        xa = 2.0 * xm.x1 if x_match is None else float(x_match)
        b = bessel_basis(xm, hbar, y_start=min(xm.y1, math.sqrt(E) * xa))
        fj = bessel_jost(b, np.array([xa]))
        data.append(_carry_to_origin(s, E, hbar, xa, complex(fj.log_value[0]), complex(fj.dlog[0])))
    lp, up = data[0]
    lm, um = (lp, -up) if spec.symmetric else (data[1][0], -data[1][1])
    return smatrix_from_jost(E, hbar, lp, up, lm, um, "wkb-refined")
