"""Zero-energy fundamental system on a half line ``x > x0``.

For ``-hbar^2 psi'' + V psi = 0`` the WKB envelopes relative to
``V0 = V + (hbar^2/4) <x>^-2`` are

    psi1~ = V0^{-1/4} e^{+S/hbar},   psi2~ = V0^{-1/4} e^{-S/hbar},
    S(x) = int_{x0}^x sqrt(V0),

and ``psi_j = psi_j~ (1 + hbar a_j)`` with corrections solving

    a1(x) = 1/2 int_{x0}^x  V0^{-1/2} [e^{2(S(y)-S(x))/hbar} - 1] V2 (1 + hbar a1) dy,
    a2(x) = 1/2 int_x^inf   V0^{-1/2} [e^{-2(S(y)-S(x))/hbar} - 1] V2 (1 + hbar a2) dy,

where ``V2 = <x>^-2/4 - V0''/(4 V0) + (5/16)(V0'/V0)^2`` decays like
``x^-3``.  In the variable ``s = S(y)`` the kernels are separable, so on a
grid uniform in ``s`` one Picard sweep is a pair of linear recurrences.
Each panel integrates the exponential weight exactly against the linear
interpolant of the remaining factor (product integration).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from ._magnus import phase_grid, propagate
from ._quad import cumulative_panels, gl_nodes
from .errors import ConvergenceError, DomainError, HypothesisError
from .potential import ModifiedPotential, PotentialSpec, bracket_inv2

__all__ = ["v2_eval", "default_x0", "ZeroEnergyBasis", "solve_zero_energy", "wronskian_zero",
           "direct_zero_energy", "subordinate_growth"]


def v2_eval(mp: ModifiedPotential, x):
    """``V2 = c <x>^-2 - V0''/(4 V0) + (5/16)(V0'/V0)^2`` with ``c`` the Langer weight.

    With ``mp.langer = 0`` this is the same expression built on the raw
    potential, whose ``x^-2`` part no longer cancels.
    """
    jet = mp.jet(x, 2)
    V0, V1, V2 = jet
    return (mp.langer * bracket_inv2(x, 0)[0] - 0.25 * V2 / V0
            + (5.0 / 16.0) * (V1 / V0) ** 2)


def default_x0(spec: PotentialSpec, frac: float = 0.5) -> float:
    """Smallest ``x`` on a fine grid beyond which ``x^2 V`` stays within ``frac`` of ``mu+^2``."""
    xs = np.concatenate([np.linspace(0.01, 10.0, 2000), np.geomspace(10.0, 1e4, 2000)[1:]])
    mu2 = spec.mu_plus ** 2
    bad = np.abs(xs ** 2 * spec(xs) - mu2) > frac * mu2
    if not bad.any():
        return float(xs[0])
    last = np.nonzero(bad)[0][-1]
    if last + 1 >= xs.size:
        raise HypothesisError("x^2 V does not approach mu^2 within the scanned range")
    return float(xs[last + 1])


@dataclass(frozen=True)
class ZeroEnergyBasis:
    """Zero-energy solutions on ``[x0, xmax]`` sampled on a grid uniform in ``S``.

    ``a1p``, ``a2p`` are x-derivatives.  ``picard_history`` holds the sup
    norms of successive Picard updates for ``a1`` and ``a2``.
    """

    hbar: float
    x0: float
    xmax: float
    x: np.ndarray
    S: np.ndarray
    V0: np.ndarray
    dV0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a1p: np.ndarray
    a2p: np.ndarray
    picard_history: tuple = field(default=((), ()))
    mp: ModifiedPotential | None = field(default=None, repr=False)

    def envelope_logs(self):
        """``log psi1~`` and ``log psi2~``."""
        base = -0.25 * np.log(self.V0)
        return base + self.S / self.hbar, base - self.S / self.hbar

    def _dlog_env(self):
        r = np.sqrt(self.V0) / self.hbar
        c = -0.25 * self.dV0 / self.V0
        return c + r, c - r

    def psi(self, j: int):
        """``(log|psi_j~|, psi_j/psi_j~, psi_j'/psi_j~)``; avoids overflow of ``e^{S/hbar}``."""
        h = self.hbar
        l1, l2 = self.envelope_logs()
        d1, d2 = self._dlog_env()
        if j == 1:
            return l1, 1.0 + h * self.a1, d1 * (1.0 + h * self.a1) + h * self.a1p
        if j == 2:
            return l2, 1.0 + h * self.a2, d2 * (1.0 + h * self.a2) + h * self.a2p
        raise ValueError("j must be 1 or 2")

    def wronskian(self) -> np.ndarray:
        """``W(psi1, psi2)`` at every grid point."""
        h = self.hbar
        b1 = 1.0 + h * self.a1
        b2 = 1.0 + h * self.a2
        return (-2.0 / h) * b1 * b2 + h * (self.a2p * b1 - self.a1p * b2) / np.sqrt(self.V0)


def _s_table(mp: ModifiedPotential, x0: float, xmax: float, npanel: int = 4000):
    edges = np.geomspace(x0, xmax, npanel + 1)
    cum = cumulative_panels(lambda y: np.sqrt(mp(y)), edges, 16)
    return edges, cum


def _s_at(mp, edges, cum, x):
    k = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, edges.size - 2)
    t, w = gl_nodes(16)
    lo = edges[k]
    half = 0.5 * (x - lo)
    pts = (0.5 * (x + lo))[:, None] + half[:, None] * t
    return cum[k] + half * (np.sqrt(mp(pts)) @ w)


def _uniform_s_grid(mp, x0, xmax, n):
    edges, cum = _s_table(mp, x0, xmax)
    targets = np.linspace(0.0, cum[-1], n + 1)
    x = np.interp(targets, cum, edges)
    for _ in range(4):
        x = x - (_s_at(mp, edges, cum, x) - targets) / np.sqrt(mp(x))
        x[0], x[-1] = x0, xmax
    return x, targets


def _panel_weights(lam: float, d: float):
    """Weights of ``int_0^d e^{lam (t - d)} (g0 + (g1 - g0) t/d) dt``."""
    w0 = -math.expm1(-lam * d) / lam
    w1 = 1.0 / lam - w0 / (lam * d)
    # g0 * (w0 - w1) + g1 * w1
    return w0 - w1, w1


def _forward(g, lam, d):
    """``I_i = int_{s_0}^{s_i} e^{lam (s - s_i)} g ds`` on a uniform grid."""
    wa, wb = _panel_weights(lam, d)
    c = wa * g[:-1] + wb * g[1:]
    q = math.exp(-lam * d)
    out = np.empty_like(g)
    out[0] = 0.0
    out[1:] = lfilter([1.0], [1.0, -q], c)
    return out


def _backward(g, lam, d, tail):
    """``J_i = int_{s_i}^{s_N} e^{-lam (s - s_i)} g ds + tail e^{-lam (s_N - s_i)}``."""
    wa, wb = _panel_weights(lam, d)
    # reflected panel: weight concentrates at the left end
    c = wb * g[:-1] + wa * g[1:]
    q = math.exp(-lam * d)
    rev = c[::-1]
    zi = np.array([q * tail])
    acc, _ = lfilter([1.0], [1.0, -q], rev, zi=zi)
    out = np.empty_like(g)
    out[-1] = tail
    out[:-1] = acc[::-1]
    return out


def _trap_cum(g, d):
    out = np.empty_like(g)
    out[0] = 0.0
    out[1:] = np.cumsum(0.5 * d * (g[:-1] + g[1:]))
    return out


def _tail_power(x, f):
    """Fit ``f ~ C x^-p`` from the last two samples; return ``(C, p)``."""
    p = -math.log(abs(f[-1] / f[-2])) / math.log(x[-1] / x[-2]) if f[-2] != 0 and f[-1] != 0 else 3.0
    return f[-1] * x[-1] ** p, p


def solve_zero_energy(spec: PotentialSpec, hbar: float, x0: float | None = None,
                      xmax: float = 1e4, n: int = 20000, tol: float = 1e-12,
                      max_iter: int = 200) -> ZeroEnergyBasis:
    """Construct ``psi1, psi2`` on ``[x0, xmax]`` by Picard iteration."""
    if not 0 < hbar < 1:
        raise DomainError("hbar must lie in (0, 1)")
    if x0 is None:
        x0 = default_x0(spec)
    probe = np.geomspace(x0, xmax, 4000)
    if np.any(spec(probe) <= 0):
        bad = probe[np.argmax(spec(probe) <= 0)]
        raise HypothesisError(f"V is not positive on [x0, xmax]; witness x = {bad:.6g}")
    mp = ModifiedPotential(spec, hbar)
    x, S = _uniform_s_grid(mp, x0, xmax, n)
    d = S[1] - S[0]
    lam = 2.0 / hbar
    jet = mp.jet(x, 1)
    V0, dV0 = jet[0], jet[1]
    base = v2_eval(mp, x) / V0  # V0^{-1/2} V2 dy = (V2 / V0) ds

    # tail beyond xmax for a2: g ~ C y^-p (in x), s ~ sqrt(A) log y
    A = mp.tail_coefficient(+1)
    sqA = math.sqrt(A)
    fx = base * np.sqrt(V0)  # integrand per dy
    C, p = _tail_power(x[-2:], fx[-2:])
    H_tail = C * xmax ** (1.0 - p) / (p - 1.0)
    J_tail = C * xmax ** (1.0 - p) / (p - 1.0 + lam * sqA)

    hist1, hist2 = [], []
    a1 = np.zeros_like(x)
    for it in range(max_iter):
        g = base * (1.0 + hbar * a1)
        I = _forward(g, lam, d)
        new = 0.5 * (I - _trap_cum(g, d))
        diff = float(np.max(np.abs(new - a1)))
        hist1.append(diff)
        a1 = new
        if diff <= tol:
            break
    else:
        raise ConvergenceError("Picard iteration for a1 did not converge", state={"history": hist1})
    a1p = -np.sqrt(V0) / hbar * I

    a2 = np.zeros_like(x)
    for it in range(max_iter):
        g = base * (1.0 + hbar * a2)
        J = _backward(g, lam, d, J_tail)
        Hc = _trap_cum(g[::-1], d)[::-1] + H_tail
        new = 0.5 * (J - Hc)
        diff = float(np.max(np.abs(new - a2)))
        hist2.append(diff)
        a2 = new
        if diff <= tol:
            break
    else:
        raise ConvergenceError("Picard iteration for a2 did not converge", state={"history": hist2})
    a2p = np.sqrt(V0) / hbar * J

    return ZeroEnergyBasis(hbar=hbar, x0=float(x0), xmax=float(xmax), x=x, S=S, V0=V0, dV0=dV0,
                           a1=a1, a2=a2, a1p=a1p, a2p=a2p,
                           picard_history=(tuple(hist1), tuple(hist2)), mp=mp)


def wronskian_zero(basis: ZeroEnergyBasis, points=None):
    """``W(psi1, psi2)``: value at the grid midpoint and the relative spread.

    ``points`` restricts the spread to grid indices (default: all).
    """
    W = basis.wronskian()
    sel = W if points is None else W[np.asarray(points)]
    mid = float(W[W.size // 2])
    spread = float(np.max(np.abs(sel / mid - 1.0)))
    return mid, spread


def direct_zero_energy(spec: PotentialSpec, hbar: float, j: int, x_seed: float, y_seed,
                       x_out, resolution: float = 0.1):
    """Solve ``-hbar^2 psi'' + V psi = 0`` by Magnus propagation from a seed.

    ``y_seed = (psi, psi')`` at ``x_seed``; returns ``(log scale, psi, psi')``
    at ``x_out`` (all on one side of the seed).  Independent of the Volterra
    construction; used as an oracle.
    """
    mp = ModifiedPotential(spec, hbar, langer=0.0)
    x_out = np.atleast_1d(np.asarray(x_out, dtype=float))
    far = x_out.min() if x_out.min() < x_seed else x_out.max()

    def kappa(y):
        return np.sqrt(np.abs(mp(y))) / hbar

    nodes = phase_grid(kappa, x_seed, far, c=resolution)
    desc = nodes[0] > nodes[-1]
    nodes = np.unique(np.concatenate([nodes, x_out]))
    if desc:
        nodes = nodes[::-1].copy()
    key = -nodes if desc else nodes
    keep = np.searchsorted(key, -x_out if desc else x_out)
    prop = propagate(lambda y: mp(y) / hbar ** 2, nodes, np.asarray(y_seed, dtype=complex), keep=keep)
    pick = np.searchsorted(-prop.nodes if desc else prop.nodes, -x_out if desc else x_out)
    return prop.log_scale[pick], prop.vec[pick, 0].real, prop.vec[pick, 1].real


def subordinate_growth(spec: PotentialSpec, hbar: float, X: float = 1e3) -> float:
    """Growth exponent at ``-inf`` of the zero-energy solution decaying at ``+inf``.

    The solution is seeded at ``+X`` with the decaying power ``x^{1/2 - alpha+}``
    and propagated to ``-X``; the returned number is the log-log slope of
    ``|psi|`` over ``[-X, -X/10]``.  A positive value means the solution
    grows at ``-inf``, i.e. no zero-energy resonance.
    """
    alpha = math.sqrt(0.25 + (spec.mu_plus / hbar) ** 2)
    ex = 0.5 - alpha
    seed = np.array([1.0, ex / X])
    pts = np.array([-X / 10.0, -X])
    logs, val, _ = direct_zero_energy(spec, hbar, 2, X, seed, pts)
    lv = logs + np.log(np.abs(val))
    return float((lv[1] - lv[0]) / math.log(10.0))
