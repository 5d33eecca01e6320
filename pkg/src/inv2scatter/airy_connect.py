"""Perturbed Airy bases, connection coefficients and the WKB S-matrix.

In the Langer coordinate the equation reads ``-hbar^2 w_zz = (zeta + hbar^2 Vt) w``.
With ``tau = -hbar^{-2/3} zeta`` the bases are

    phi2 = Bi(tau) (1 + hbar a2),            zeta in [zeta0, 0],
    phi1 = hbar^{-2/3} phi2 int_{-inf}^zeta phi2^{-2} / pi,
    psi2 = (Ai - i Bi)(tau) (1 + hbar b2),   zeta >= 0,     psi1 = conj(psi2).

The corrections solve Volterra equations whose kernels are separable
through the Airy Wronskian:

    a2(zeta) = -pi hbar^{-1/3} int_zeta^0 Ai Bi(eta) [1 - rho(zeta)/rho(eta)] Vt g deta,
    b2(zeta) = -(i pi/2) hbar^{-1/3} int_zeta^inf M^2(eta) [1 - e^{2i(theta(zeta)-theta(eta))}] Vt g deta,

with ``g = 1 + hbar a2`` (resp. ``1 + hbar b2``), ``rho = Ai/Bi`` and
``Ai(-s) + i Bi(-s) = M e^{i theta}``.  Writing each as ``pref * (P - K)``,
``P`` is a plain running integral and ``K`` a running integral with a
bounded kernel ratio, so one Picard sweep over panels is a pair of
recurrences.  Panel integrals use Gauss-Legendre nodes with the Airy
factors evaluated exactly and ``g`` interpolated by cubic Hermite
polynomials from node values and node derivatives
``dg/dzeta = K / u(zeta)`` (``u = Ai Bi`` or ``M^2``).

All grids are in ``x``; ``zeta``, its derivatives and ``Vt`` come from the
:class:`~inv2scatter.lgmap.ZetaMap`.  Exponentially large and small Airy
factors are carried as ``(mantissa, log scale)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from ._quad import gl_nodes
from .action import compute_actions
from .errors import ConditioningError, ConvergenceError, DomainError
from .lgmap import ZetaMap, build_zeta_map
from .potential import ModifiedPotential, PotentialSpec
from .scattering import ScatteringMatrix, smatrix_from_jost
from .specfun import airy_osc, airy_scaled

__all__ = ["PerturbedBasis", "ConnectionData", "AiryRoute", "SemiclassicalJost",
           "basis_left", "basis_right", "connection", "transformed_residual", "build_airy_route",
           "jost_semiclassical", "smatrix_wkb", "smatrix_leading", "ScatteringMatrix"]

_NGL = 8
_ZETA_FLOOR = 40.0
RESOLUTION = 0.5


def _gl01(n):
    t, w = gl_nodes(n)
    return 0.5 * (t + 1.0), 0.5 * w


def _hermite(t):
    t2, t3 = t * t, t * t * t
    return (2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + t, -2 * t3 + 3 * t2, t3 - t2)


def _vt_from_derivs(zmap: ZetaMap, x, d):
    _, d1, d2, d3 = d
    return zmap.mp.v1(x) / d1 ** 2 - d3 / (2.0 * d1 ** 3) + 0.75 * d2 ** 2 / d1 ** 4


def _node_grid(zmap: ZetaMap, hbar: float, a: float, b: float, resolution: float) -> np.ndarray:
    """Panel edges on ``[a, b]`` following the Airy phase or growth rate.

    The density per unit ``x`` is ``zeta' (sqrt|zeta| + hbar^{1/3}) / (hbar c)``
    plus a geometric term resolving the variation of ``Vt``.
    """
    L = b - a
    near = np.linspace(0.0, min(L, 20.0), 3001)
    parts = [near]
    if L > 20.0:
        parts.append(np.geomspace(20.0, L, 3000))
    off = np.unique(np.concatenate(parts))
    aux = a + off
    aux[-1] = b
    d = zmap.derivs(aux)
    rate = d[1] * (np.sqrt(np.abs(d[0])) + hbar ** (1.0 / 3.0)) / hbar
    dens = rate / resolution + 1.0 / (0.1 * (np.abs(aux - zmap.x1) + 1.0)) + 1.0 / (0.1 * (aux + 1.0))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(aux))])
    n = max(int(math.ceil(cum[-1])), 16)
    nodes = np.interp(np.linspace(0.0, cum[-1], n + 1), cum, aux)
    nodes[0], nodes[-1] = a, b
    return nodes


@dataclass
class _Kernel:
    """Airy-side factors at a set of points.

    ``u`` is the weight of the plain integral ``P``; ``lk`` is the log of the
    kernel function, so the ``K`` kernel between points is ``exp(lk(zeta) - lk(eta))``.
    """

    u: np.ndarray
    lk: np.ndarray


def _left_kernel(hbar, zeta):
    tau = -hbar ** (-2.0 / 3.0) * zeta
    A = airy_scaled(np.maximum(tau, 0.0))
    ai, bi = np.atleast_1d(A.ai), np.atleast_1d(A.bi)
    xi = np.atleast_1d(A.scale)
    return _Kernel(u=ai * bi, lk=np.log(ai / bi) - 2.0 * xi), A


def _right_kernel(hbar, zeta, sigma):
    s = np.maximum(hbar ** (-2.0 / 3.0) * zeta, 0.0)
    M, th, dM, dth = (np.atleast_1d(v) for v in airy_osc(s))
    return _Kernel(u=M * M, lk=2j * sigma * th), (M, th, dM, dth)


@dataclass
class _Volterra:
    """Picard solver for ``corr = pref (P - K)`` on panels ``[x_k, x_{k+1}]``.

    Integrals run from each point to the right end of the grid (plus a
    tail contribution supplied by the caller).
    """

    x: np.ndarray
    hbar: float
    pref: complex
    node_u: np.ndarray
    node_lk: np.ndarray
    node_d1: np.ndarray
    gl_t: np.ndarray
    wP: np.ndarray  # (npanel, ngl): u Vt zeta' w h
    wK: np.ndarray  # (npanel, ngl): exp(lk_k - lk_m) u Vt zeta' w h
    dtype: type
    tail_P: complex = 0.0
    tail_K: complex = 0.0
    g: np.ndarray = None
    dg: np.ndarray = None  # dg/dx at nodes
    P: np.ndarray = None
    K: np.ndarray = None
    history: list = field(default_factory=list)
    dg_sign: float = 1.0

    def g_at_gl(self, g=None, dg=None):
        g = self.g if g is None else g
        dg = self.dg if dg is None else dg
        h = np.diff(self.x)[:, None]
        H = _hermite(self.gl_t)
        return (H[0] * g[:-1, None] + H[1] * h * dg[:-1, None]
                + H[2] * g[1:, None] + H[3] * h * dg[1:, None])

    def sweep(self, g, dg):
        gq = self.g_at_gl(g, dg)
        IP = np.sum(self.wP * gq, axis=1)
        IK = np.sum(self.wK * gq, axis=1)
        n = self.x.size
        P = np.empty(n, dtype=self.dtype)
        K = np.empty(n, dtype=self.dtype)
        P[-1] = self.tail_P
        K[-1] = self.tail_K
        P[:-1] = self.tail_P + np.cumsum(IP[::-1])[::-1]
        ratio = np.exp(self.node_lk[:-1] - self.node_lk[1:])
        if self.dtype is complex:
            # unimodular ratios: closed-form running sum
            ph = np.exp(-self.node_lk)
            acc = np.cumsum((IK * ph[:-1])[::-1])[::-1]
            K[:-1] = np.exp(self.node_lk[:-1]) * (acc + ph[-1] * self.tail_K)
        else:
            k = self.tail_K
            for j in range(n - 2, -1, -1):
                k = ratio[j] * k + IK[j]
                K[j] = k
        corr = self.pref * (P - K)
        g_new = 1.0 + self.hbar * corr
        # dg/dzeta = K / u, then chain rule
        dg_new = self.dg_sign * K / self.node_u * self.node_d1
        return g_new, dg_new, P, K

    def solve(self, tol=1e-12, max_iter=200):
        g = np.ones(self.x.size, dtype=self.dtype)
        dg = np.zeros(self.x.size, dtype=self.dtype)
        for it in range(max_iter):
            g_new, dg_new, P, K = self.sweep(g, dg)
            diff = float(np.max(np.abs(g_new - g)))
            self.history.append(diff)
            g, dg = g_new, dg_new
            if diff <= tol:
                self.g, self.dg, self.P, self.K = g, dg, P, K
                return
        raise ConvergenceError("Picard iteration for the Airy correction did not converge",
                               state={"history": self.history[-5:]})


@dataclass
class PerturbedBasis:
    """Perturbed Airy basis on one side of ``zeta = 0``.

    ``side == "left"``: nodes cover ``x in [0, x1]`` (``zeta in [zeta0, 0]``);
    ``corr`` holds ``(a1, a2)`` (real).  ``side == "right"``: nodes cover
    ``[x1, x_max]``; ``corr`` holds ``(b1, b2)``.  Values of the basis
    functions are ``exp(log_scale[j]) * value[j]`` and their zeta-derivatives
    ``exp(log_scale[j]) * deriv[j]``.
    """

    side: str
    zmap: ZetaMap
    hbar: float
    x: np.ndarray
    zeta: np.ndarray
    corr: tuple
    dcorr: tuple
    value: tuple
    deriv: tuple
    log_scale: tuple
    picard_history: tuple
    _solvers: tuple = field(repr=False, default=())
    _extra: dict = field(repr=False, default_factory=dict)

    @property
    def E(self) -> float:
        return self.zmap.E

    @property
    def zeta_max(self) -> float:
        return float(self.zeta[-1])

    def envelope_bound(self) -> np.ndarray:
        """Shape of the a priori bound on the correction at the nodes."""
        if self.side == "left":
            return np.minimum(1.0, self.hbar ** (1 / 3) * np.sqrt(1.0 + (self.hbar ** (-2 / 3) * self.zeta) ** 2) ** 0.5)
        return (1.0 + self.zeta ** 2) ** -0.75

    def bound_ratio(self, j: int = 2) -> float:
        """``sup |corr_j| / bound`` over the grid."""
        return float(np.max(np.abs(self.corr[j - 1]) / self.envelope_bound()))

    def wronskian(self) -> np.ndarray:
        """``W(f1, f2)`` of the two basis functions at every node."""
        (v1, v2), (d1, d2), (l1, l2) = self.value, self.deriv, self.log_scale
        return np.exp(l1 + l2) * (v1 * d2 - d1 * v2)

    def evaluate(self, x, j: int = 2):
        """``(log value, d log / dzeta, zeta)`` of basis function ``j`` at ``x``.

        Points need not be nodes; the Volterra integrals are re-evaluated
        from the nearest node with the converged correction.
        """
        return self._extra["evaluate"](np.atleast_1d(np.asarray(x, dtype=float)), j)

    def volterra_residual(self, j: int = 2) -> float:
        """Back-substitution residual of the Volterra equation.

        The converged correction is re-inserted into the integral operator
        evaluated with twice as many quadrature nodes per panel; the result
        is the max deviation from the stored correction.
        """
        return self._extra["residual"](j)


def _prepare(zmap, hbar, x, kernel_fn, pref, dtype):
    t, w = _gl01(_NGL)
    h = np.diff(x)
    xq = x[:-1, None] + h[:, None] * t[None, :]
    dn = zmap.derivs(x)
    dq = zmap.derivs(xq.ravel())
    vq = _vt_from_derivs(zmap, xq.ravel(), dq).reshape(xq.shape)
    kn, extra_n = kernel_fn(dn[0])
    kq, extra_q = kernel_fn(dq[0])
    uq = kq.u.reshape(xq.shape)
    lq = kq.lk.reshape(xq.shape)
    base = uq * vq * dq[1].reshape(xq.shape) * w[None, :] * h[:, None]
    wK = np.exp(kn.lk[:-1, None] - lq) * base
    solver = _Volterra(x=x, hbar=hbar, pref=pref, node_u=kn.u, node_lk=kn.lk, node_d1=dn[1],
                       gl_t=t, wP=base.astype(dtype), wK=wK.astype(dtype), dtype=dtype)
    return solver, dn, extra_n


def _panel_integrals(zmap, hbar, kernel_fn, solver, xa, xb, lk_ref, n=_NGL):
    """Integrals of ``u Vt g`` and ``exp(lk_ref - lk) u Vt g`` over ``[xa, xb]`` pointwise."""
    t, w = _gl01(n)
    h = xb - xa
    xq = xa[:, None] + h[:, None] * t[None, :]
    dq = zmap.derivs(xq.ravel())
    vq = _vt_from_derivs(zmap, xq.ravel(), dq).reshape(xq.shape)
    kq, _ = kernel_fn(dq[0])
    base = (kq.u * dq[1]).reshape(xq.shape) * vq * w[None, :] * h[:, None]
    k = np.clip(np.searchsorted(solver.x, xq.ravel(), side="right") - 1, 0, solver.x.size - 2)
    hp = solver.x[k + 1] - solver.x[k]
    tt = (xq.ravel() - solver.x[k]) / hp
    H = _hermite(tt)
    gq = (H[0] * solver.g[k] + H[1] * hp * solver.dg[k] + H[2] * solver.g[k + 1]
          + H[3] * hp * solver.dg[k + 1]).reshape(xq.shape)
    IP = np.sum(base * gq, axis=1)
    IK = np.sum(np.exp(lk_ref[:, None] - kq.lk.reshape(xq.shape)) * base * gq, axis=1)
    return IP, IK


def _running(zmap, hbar, kernel_fn, solver, x, lk_x):
    """``(P, K)`` at arbitrary points inside the grid."""
    k = np.clip(np.searchsorted(solver.x, x, side="right") - 1, 0, solver.x.size - 2)
    xb = solver.x[k + 1]
    IP, IK = _panel_integrals(zmap, hbar, kernel_fn, solver, x, xb, lk_x)
    P = solver.P[k + 1] + IP
    K = np.exp(lk_x - solver.node_lk[k + 1]) * solver.K[k + 1] + IK
    return P, K


def _residual(zmap, hbar, kernel_fn, solver):
    """Max deviation of ``pref (P - K)`` recomputed with a doubled rule."""
    x = solver.x
    IP, IK = _panel_integrals(zmap, hbar, kernel_fn, solver, x[:-1], x[1:], solver.node_lk[:-1],
                              n=2 * _NGL)
    n = x.size
    P = np.empty(n, dtype=solver.dtype)
    K = np.empty(n, dtype=solver.dtype)
    P[-1], K[-1] = solver.tail_P, solver.tail_K
    P[:-1] = solver.tail_P + np.cumsum(IP[::-1])[::-1]
    ratio = np.exp(solver.node_lk[:-1] - solver.node_lk[1:])
    kk = solver.tail_K
    for j in range(n - 2, -1, -1):
        kk = ratio[j] * kk + IK[j]
        K[j] = kk
    corr = solver.pref * (P - K)
    stored = (solver.g - 1.0) / hbar
    return float(np.max(np.abs(corr - stored)))


def basis_left(zmap: ZetaMap, hbar: float, resolution: float = RESOLUTION,
               tol: float = 1e-12) -> PerturbedBasis:
    """Forbidden-side basis ``phi1, phi2`` on ``zeta in [zeta0, 0]``."""
    if not zmap.x1 > 0 or not zmap.zeta0 < 0:
        raise DomainError("the map has no forbidden interval between x = 0 and the turning point")
    x = _node_grid(zmap, hbar, 0.0, zmap.x1, resolution)
    kernel_fn = lambda z: _left_kernel(hbar, z)
    solver, dn, A = _prepare(zmap, hbar, x, kernel_fn, -math.pi * hbar ** (-1.0 / 3.0), float)
    solver.solve(tol)
    zeta = dn[0]
    zeta[-1] = 0.0
    h23 = hbar ** (-2.0 / 3.0)
    ai, bi = np.atleast_1d(A.ai), np.atleast_1d(A.bi)
    aip, bip = np.atleast_1d(A.aip), np.atleast_1d(A.bip)
    xi = np.atleast_1d(A.scale)
    g = solver.g
    gz = solver.dg / dn[1]  # dg/dzeta
    a2 = (g - 1.0) / hbar
    # phi1 = phi2 J with J = rho Jh; Jh from a forward recurrence
    rho_l = solver.node_lk  # log(Ai/Bi)
    t, w = _gl01(_NGL)
    hx = np.diff(x)
    xq = x[:-1, None] + hx[:, None] * t[None, :]
    dq = zmap.derivs(xq.ravel())
    Aq = airy_scaled(np.maximum(-h23 * dq[0], 0.0))
    biq = np.atleast_1d(Aq.bi).reshape(xq.shape)
    xiq = np.atleast_1d(Aq.scale).reshape(xq.shape)
    gq = solver.g_at_gl()
    # 1/(rho_k Bi(eta)^2) = exp(-lk_k - 2 xi_eta) / Bs^2, with lk = log(As/Bs) - 2 xi
    integ = (np.exp(-rho_l[1:, None] - 2.0 * xiq) / (biq ** 2 * gq ** 2)
             * dq[1].reshape(xq.shape) * w[None, :] * hx[:, None])
    IJ = np.sum(integ, axis=1) * h23 / math.pi
    Jh = np.empty(x.size)
    Jh[0] = 1.0 / g[0] ** 2
    step = np.exp(rho_l[:-1] - rho_l[1:])
    for k in range(1, x.size):
        Jh[k] = step[k - 1] * Jh[k - 1] + IJ[k - 1]
    g1 = g * Jh
    a1 = (g1 - 1.0) / hbar
    # phi2 = e^{xi} [bi g], phi2' = e^{xi} [-h23 bip g + bi gz]
    v2 = bi * g
    d2 = -h23 * bip * g + bi * gz
    # phi1 = e^{-xi} ai g Jh; phi1' = phi2' J + h23 / (pi phi2)
    r = ai / bi
    v1 = ai * g1
    d1 = d2 * r * Jh + h23 / (math.pi * v2)
    gz1 = (d1 + h23 * aip * g1) / ai  # d(g Jh)/dzeta
    basis = PerturbedBasis(side="left", zmap=zmap, hbar=hbar, x=x, zeta=zeta,
                           corr=(a1, a2), dcorr=(gz1 / hbar, gz / hbar),
                           value=(v1, v2), deriv=(d1, d2), log_scale=(-xi, xi),
                           picard_history=tuple(solver.history), _solvers=(solver,))

    def evaluate(xe, j):
        if np.any(xe < 0) or np.any(xe > zmap.x1):
            raise DomainError("left basis evaluated outside [0, x1]")
        de = zmap.derivs(xe)
        ke, Ae = kernel_fn(de[0])
        P, K = _running(zmap, hbar, kernel_fn, solver, xe, ke.lk)
        ge = 1.0 + hbar * solver.pref * (P - K)
        gze = K / ke.u
        aie, bie = np.atleast_1d(Ae.ai), np.atleast_1d(Ae.bi)
        aipe, bipe = np.atleast_1d(Ae.aip), np.atleast_1d(Ae.bip)
        xie = np.atleast_1d(Ae.scale)
        val2 = bie * ge
        der2 = -h23 * bipe * ge + bie * gze
        if j == 2:
            return xie + np.log(val2), der2 / val2, de[0]
        # Jh at xe from the node on its left
        k = np.clip(np.searchsorted(x, xe, side="right") - 1, 0, x.size - 2)
        tt, ww = _gl01(_NGL)
        hh = xe - x[k]
        xq2 = x[k][:, None] + hh[:, None] * tt[None, :]
        dq2 = zmap.derivs(xq2.ravel())
        Aq2 = airy_scaled(np.maximum(-h23 * dq2[0], 0.0))
        kk = np.clip(np.searchsorted(x, xq2.ravel(), side="right") - 1, 0, x.size - 2)
        hp = x[kk + 1] - x[kk]
        H = _hermite((xq2.ravel() - x[kk]) / hp)
        gq2 = (H[0] * g[kk] + H[1] * hp * solver.dg[kk] + H[2] * g[kk + 1]
               + H[3] * hp * solver.dg[kk + 1]).reshape(xq2.shape)
        inte = (np.exp(-ke.lk[:, None] - 2.0 * np.atleast_1d(Aq2.scale).reshape(xq2.shape))
                / (np.atleast_1d(Aq2.bi).reshape(xq2.shape) ** 2 * gq2 ** 2)
                * dq2[1].reshape(xq2.shape) * ww[None, :] * hh[:, None])
        Jhe = np.exp(rho_l[k] - ke.lk) * Jh[k] + np.sum(inte, axis=1) * h23 / math.pi
        val1 = aie * ge * Jhe
        der1 = der2 * (aie / bie) * Jhe + h23 / (math.pi * val2)
        return -xie + np.log(val1), der1 / val1, de[0]

    basis._extra["evaluate"] = evaluate
    basis._extra["residual"] = lambda j: (_residual(zmap, hbar, kernel_fn, solver) if j == 2
                                         else math.nan)
    return basis


def _right_tail(zmap, hbar, x_end, sigma):
    """``(P, K)`` contributions of ``[zeta_end, inf)`` with ``g = 1``.

    ``Vt zeta^2`` is modelled as a cubic in ``zeta^{-3/2}`` through four
    far-field samples and ``M^2`` as ``hbar^{1/3} / (pi sqrt(zeta))``; the
    oscillatory integral is its first integration-by-parts term.
    """
    xs = x_end * np.array([0.35, 0.5, 0.7, 1.0])
    d = zmap.derivs(xs)
    z = d[0]
    vt = _vt_from_derivs(zmap, xs, d)
    m = z[:, None] ** (-1.5 * np.arange(4)[None, :])
    coef = np.linalg.solve(m, vt * z ** 2)
    zN = z[-1]
    s = hbar ** (-2.0 / 3.0) * zN
    M, th, dM, dth = airy_osc(s)
    c = M * M * math.sqrt(zN)  # M^2 sqrt(zeta) ~ hbar^{1/3}/pi
    # int_zN^inf zeta^{-5/2 - 3k/2} = zN^{-3/2 - 3k/2} / (3/2 + 3k/2)
    pw = 1.5 + 1.5 * np.arange(4)
    tail_P = c * float(np.sum(coef * zN ** (-pw) / pw))
    thz = hbar ** (-2.0 / 3.0) * dth
    tail_K = M * M * vt[-1] / (2j * sigma * thz)
    return tail_P, tail_K


def _right_end(zmap: ZetaMap, zeta_max: float | None) -> float:
    x_end = zmap.x_far
    target = _ZETA_FLOOR if zeta_max is None else zeta_max
    if zeta_max is not None or float(zmap.zeta(x_end)) < target:
        x_end = float(np.asarray(zmap.x_of_zeta(target)).ravel()[0])
    return x_end


def basis_right(zmap: ZetaMap, hbar: float, zeta_max: float | None = None,
                resolution: float = RESOLUTION, tol: float = 1e-12,
                which: tuple = (1, 2)) -> PerturbedBasis:
    """Oscillatory-side basis ``psi1, psi2`` on ``zeta in [0, zeta_max]``.

    By default the grid ends at ``x = zmap.x_far`` (``max(10 x1, 1e3)``),
    moved outward if needed so that ``zeta_max >= 40``.  ``which`` selects
    the basis functions to solve for; ``psi1`` is computed independently
    with the conjugate kernel, not by conjugation.
    """
    x_end = _right_end(zmap, zeta_max)
    x = _node_grid(zmap, hbar, zmap.x1, x_end, resolution)
    h23 = hbar ** (-2.0 / 3.0)
    solvers = {}
    corr, dcorr, value, deriv = [None, None], [None, None], [None, None], [None, None]
    dn = None
    for j in which:
        sigma = 1.0 if j == 2 else -1.0
        kernel_fn = (lambda sg: (lambda z: _right_kernel(hbar, z, sg)))(sigma)
        solver, dn, (M, th, dM, dth) = _prepare(
            zmap, hbar, x, kernel_fn, -0.5j * sigma * math.pi * hbar ** (-1.0 / 3.0), complex)
        solver.tail_P, solver.tail_K = _right_tail(zmap, hbar, x_end, sigma)
        solver.solve(tol)
        solvers[j] = (solver, kernel_fn)
        g = solver.g
        gz = solver.dg / dn[1]
        ph = np.exp(-1j * sigma * th)
        corr[j - 1] = (g - 1.0) / hbar
        dcorr[j - 1] = gz / hbar
        value[j - 1] = M * ph * g
        deriv[j - 1] = h23 * (dM - 1j * sigma * M * dth) * ph * g + M * ph * gz
    zeta = dn[0]
    zeta[0] = 0.0
    zero = np.zeros(x.size)
    basis = PerturbedBasis(side="right", zmap=zmap, hbar=hbar, x=x, zeta=zeta,
                           corr=tuple(corr), dcorr=tuple(dcorr), value=tuple(value),
                           deriv=tuple(deriv), log_scale=(zero, zero),
                           picard_history=tuple(tuple(solvers[j][0].history) for j in which),
                           _solvers=tuple(solvers[j][0] for j in which))

    def evaluate(xe, j):
        if j not in solvers:
            raise ValueError(f"psi{j} was not computed")
        solver, kernel_fn = solvers[j]
        sigma = 1.0 if j == 2 else -1.0
        if np.any(xe < zmap.x1):
            raise DomainError("right basis evaluated below the turning point")
        de = zmap.derivs(xe)
        ke, (Me, the, dMe, dthe) = kernel_fn(de[0])
        inside = xe <= x_end
        P = np.empty(xe.size, dtype=complex)
        K = np.empty(xe.size, dtype=complex)
        if inside.any():
            P[inside], K[inside] = _running(zmap, hbar, kernel_fn, solver, xe[inside], ke.lk[inside])
        for i in np.nonzero(~inside)[0]:
            P[i], K[i] = _right_tail(zmap, hbar, float(xe[i]), sigma)
        ge = 1.0 + hbar * solver.pref * (P - K)
        gze = K / ke.u
        ph = np.exp(-1j * sigma * the)
        val = Me * ph * ge
        der = h23 * (dMe - 1j * sigma * Me * dthe) * ph * ge + Me * ph * gze
        return np.log(val), der / val, de[0]

    def residual(j):
        solver, kernel_fn = solvers[j]
        return _residual(zmap, hbar, kernel_fn, solver)

    basis._extra["evaluate"] = evaluate
    basis._extra["residual"] = residual
    return basis


def transformed_residual(basis: PerturbedBasis, zeta, j: int = 2, rel_step: float = 1e-2) -> np.ndarray:
    """Relative residual of ``-hbar^2 w_zz = (zeta + hbar^2 Vt) w`` for a basis function.

    With ``l = w_z / w`` the equation is ``-hbar^2 (l_z + l^2) = zeta + hbar^2 Vt``;
    ``l_z`` is a five-point central difference of ``l`` evaluated at
    non-node points.  The step is ``rel_step`` times the local Airy length
    ``hbar^{2/3} / (1 + |s|^{1/2})``.
    """
    hbar = basis.hbar
    zmap = basis.zmap
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    s = np.abs(zeta) * hbar ** (-2.0 / 3.0)
    dz = rel_step * hbar ** (2.0 / 3.0) / (1.0 + np.sqrt(s))
    offs = np.array([-2.0, -1.0, 1.0, 2.0])
    zs = zeta[:, None] + dz[:, None] * offs[None, :]
    xs = np.atleast_1d(zmap.x_of_zeta(zs.ravel()))
    _, l, _ = basis.evaluate(xs, j)
    l = l.reshape(zs.shape)
    lz = (l[:, 0] - 8.0 * l[:, 1] + 8.0 * l[:, 2] - l[:, 3]) / (12.0 * dz)
    x0 = np.atleast_1d(zmap.x_of_zeta(zeta))
    _, l0, _ = basis.evaluate(x0, j)
    vt = zmap.vtilde(x0)
    lhs = -hbar ** 2 * (lz + l0 ** 2)
    rhs = zeta + hbar ** 2 * vt
    scale = hbar ** 2 * (np.abs(lz) + np.abs(l0) ** 2) + np.abs(zeta) + hbar ** 2 * np.abs(vt)
    return np.abs(lhs - rhs) / scale


@dataclass(frozen=True)
class ConnectionData:
    """``psi2 = c1 phi1 + c2 phi2`` with Wronskians evaluated at ``zeta = 0``."""

    E: float
    hbar: float
    c1: complex
    c2: complex
    w_phi: float
    w_psi2_phi2: complex
    w_psi2_phi1: complex

    @property
    def normalized_w_phi(self) -> float:
        """``-pi hbar^{2/3} W(phi1, phi2)``; tends to 1."""
        return -math.pi * self.hbar ** (2.0 / 3.0) * self.w_phi

    @property
    def defects(self) -> tuple[float, float]:
        """``(|c1 - 1|, |c2 + i|)``."""
        return abs(self.c1 - 1.0), abs(self.c2 + 1j)


def connection(left: PerturbedBasis, right: PerturbedBasis) -> ConnectionData:
    """Connection coefficients from the Wronskians at ``zeta = 0``."""
    if left.side != "left" or right.side != "right":
        raise ValueError("connection expects a left and a right basis")
    if left.E != right.E or left.hbar != right.hbar:
        raise ValueError("bases belong to different (E, hbar)")
    hbar = left.hbar
    # both grids end/start at x1 where all log scales vanish
    p1, p2 = left.value[0][-1], left.value[1][-1]
    dp1, dp2 = left.deriv[0][-1], left.deriv[1][-1]
    s2, ds2 = right.value[1][0], right.deriv[1][0]
    w12 = p1 * dp2 - dp1 * p2
    if abs(w12) < 1e-3 * hbar ** (-2.0 / 3.0):
        raise ConditioningError("W(phi1, phi2) is too small to connect the bases")
    w22 = s2 * dp2 - ds2 * p2
    w21 = s2 * dp1 - ds2 * p1
    return ConnectionData(E=left.E, hbar=hbar, c1=w22 / w12, c2=-w21 / w12, w_phi=float(w12),
                          w_psi2_phi2=complex(w22), w_psi2_phi1=complex(w21))


@dataclass(frozen=True)
class SemiclassicalJost:
    """Jost solution from the Airy route at points ``x`` (this side's coordinates).

    ``f = exp(log_value)`` and ``f' = dlog * f`` with respect to the
    physical coordinate.
    """

    side: str
    E: float
    hbar: float
    x: np.ndarray
    log_value: np.ndarray
    dlog: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return np.exp(self.log_value)

    @property
    def derivative(self) -> np.ndarray:
        return self.dlog * self.value


@dataclass
class AiryRoute:
    """Bases, connection and normalisation for one Jost solution."""

    side: str
    zmap: ZetaMap
    left: PerturbedBasis
    right: PerturbedBasis
    conn: ConnectionData
    T: float
    log_pref: complex

    @property
    def E(self) -> float:
        return self.zmap.E

    @property
    def hbar(self) -> float:
        return self.left.hbar

    def jost(self, x) -> SemiclassicalJost:
        """``f+`` of this side's potential at ``x >= 0``.

        For ``side == "minus"`` the result is ``f-`` at the physical point
        ``-x``; the derivative is returned in physical coordinates.
        """
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xa < 0):
            raise DomainError("the Airy route is built on x >= 0 of its own side")
        logw = np.empty(xa.size, dtype=complex)
        dlw = np.empty(xa.size, dtype=complex)
        zp = np.empty(xa.size)
        right = xa >= self.zmap.x1
        if right.any():
            lw, dl, z = self.right.evaluate(xa[right], 2)
            logw[right], dlw[right], zp[right] = lw, dl, z
        if (~right).any():
            xl = xa[~right]
            l1, d1, z = self.left.evaluate(xl, 1)
            l2, d2, _ = self.left.evaluate(xl, 2)
            c1, c2 = self.conn.c1, self.conn.c2
            # psi2 = c2 phi2 (1 + (c1/c2) phi1/phi2)
            ratio = (c1 / c2) * np.exp(l1 - l2)
            logw[~right] = cmath.log(c2) + l2 + np.log1p(ratio)
            dlw[~right] = (d2 + ratio * d1) / (1.0 + ratio)
            zp[~right] = z
        d = self.zmap.derivs(xa)
        zd1, zd2 = d[1], d[2]
        # f = pref q^{-1/4} w, q = zeta'^2;  f'/f = zeta' w_zeta/w - zeta''/(2 zeta')
        logf = self.log_pref - 0.5 * np.log(zd1) + logw
        dlog = zd1 * dlw - 0.5 * zd2 / zd1
        if self.side == "minus":
            dlog = -dlog
        return SemiclassicalJost(side=self.side, E=self.E, hbar=self.hbar, x=xa,
                                 log_value=logf, dlog=dlog)


def build_airy_route(spec: PotentialSpec, E: float, hbar: float, side: str = "plus",
                     langer: float = 0.25, resolution: float = RESOLUTION,
                     zeta_max: float | None = None) -> AiryRoute:
    """Everything needed for ``f+`` (``side="plus"``) or ``f-`` on the Airy route."""
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    mp = ModifiedPotential(spec, hbar, langer)
    zmap = build_zeta_map(mp, E, side="right" if side == "plus" else "left")
    acts = compute_actions(mp, E)
    T = acts.Tplus if side == "plus" else acts.Tminus
    left = basis_left(zmap, hbar, resolution)
    right = basis_right(zmap, hbar, zeta_max=zeta_max, resolution=resolution, which=(2,))
    conn = connection(left, right)
    log_pref = (0.5 * math.log(math.pi) + 0.25 * math.log(E) - math.log(hbar) / 6.0
                + 1j * (T / hbar + 0.25 * math.pi))
    return AiryRoute(side=side, zmap=zmap, left=left, right=right, conn=conn, T=T,
                     log_pref=log_pref)


def jost_semiclassical(spec: PotentialSpec, E: float, hbar: float, x, side: str = "plus",
                       langer: float = 0.25, resolution: float = RESOLUTION) -> SemiclassicalJost:
    """Jost solution from the perturbed Airy bases.

    ``x`` is measured on the chosen side: ``f+(x)`` for ``side="plus"``,
    ``f-(-x)`` for ``side="minus"``.
    """
    return build_airy_route(spec, E, hbar, side, langer, resolution).jost(x)


def smatrix_leading(spec: PotentialSpec, E: float, hbar: float, langer: float = 0.25) -> ScatteringMatrix:
    """Leading-order entries ``t = e^{-(S+iT)/hbar}``, ``r+- = -i e^{-2i T-+/hbar}``."""
    acts = compute_actions(ModifiedPotential(spec, hbar, langer), E)
    log_t = complex(-acts.S / hbar, -acts.T / hbar)
    r_minus = -1j * cmath.exp(-2j * acts.Tplus / hbar)
    r_plus = -1j * cmath.exp(-2j * acts.Tminus / hbar)
    return ScatteringMatrix(E=E, hbar=hbar, log_t=log_t, r_plus=r_plus, r_minus=r_minus,
                            provenance="wkb-leading")


def smatrix_wkb(spec: PotentialSpec, E: float, hbar: float, refined: bool = False,
                langer: float = 0.25, resolution: float = RESOLUTION) -> ScatteringMatrix:
    """Semiclassical S-matrix.

    ``refined=False`` returns the leading-order entries.  ``refined=True``
    evaluates both Jost solutions at ``x = 0`` through the Airy bases
    (including all ``hbar`` corrections) and forms the S-matrix from their
    Wronskians.
    """
    if not refined:
        return smatrix_leading(spec, E, hbar, langer)
    rp = build_airy_route(spec, E, hbar, "plus", langer, resolution)
    jp = rp.jost(0.0)
    if spec.symmetric:
        lm, um = complex(jp.log_value[0]), -complex(jp.dlog[0])
    else:
        jm = build_airy_route(spec, E, hbar, "minus", langer, resolution).jost(0.0)
        lm, um = complex(jm.log_value[0]), complex(jm.dlog[0])
    lp, up = complex(jp.log_value[0]), complex(jp.dlog[0])
    if abs(um - up) <= 1e-12 * (abs(um) + abs(up)):
        raise ConditioningError("Jost Wronskian cancels at x = 0")
    return smatrix_from_jost(E, hbar, lp, up, lm, um, "wkb-refined")
