"""Action integrals between and beyond the turning points.

``S(E)  = int_{x2}^{x1} sqrt(V0 - E) dx``
``T+(E) = x1 sqrt(E) - int_{x1}^inf (sqrt(E - V0) - sqrt(E)) dx``
``T-(E) = -x2 sqrt(E) - int_{-inf}^{x2} (sqrt(E - V0) - sqrt(E)) dx``

Square-root endpoint singularities are removed with ``x = x1 -+ u^2``; the
infinite tail is mapped to ``(0, 1]`` with ``x = 2 x1 / s``, under which the
integrand (decaying like ``x^-2``) becomes bounded, so no truncation is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quad import gl_adaptive
from .errors import NoTurningPointError
from .potential import ModifiedPotential, turning_points

__all__ = ["ActionData", "action_S", "action_T", "action_dS_dE", "compute_actions",
           "half_action", "tail_integrand", "barrier_gap"]

_TOL = 1e-14


@dataclass(frozen=True)
class ActionData:
    """Turning points and actions at one ``(E, hbar)``."""

    E: float
    hbar: float
    x1: float
    x2: float
    S: float
    Tplus: float
    Tminus: float

    @property
    def T(self) -> float:
        return self.Tplus + self.Tminus


def _degenerate(mp: ModifiedPotential, E: float) -> bool:
    return abs(E - mp.E0) <= 1e-14 * mp.E0


def barrier_gap(mp: ModifiedPotential, E: float, xt: float, h):
    """``V0(xt - h) - E`` for ``h >= 0``, with a Taylor form for tiny ``h``.

    Direct subtraction loses all digits when ``h`` is below rounding level
    of ``xt``; the quadratic Taylor polynomial is exact to O(h^3) there.
    """
    h = np.asarray(h, dtype=float)
    direct = mp(xt - h) - E
    jet = mp.jet(xt, 2)
    taylor = -jet[1] * h + 0.5 * jet[2] * h * h
    small = h < 1e-5 * (1.0 + abs(xt))
    return np.where(small, taylor, direct)


def half_action(mp: ModifiedPotential, E: float, x1: float, a: float) -> float:
    """``int_a^{x1} sqrt(V0 - E)`` for ``a < x1`` inside the barrier."""
    umax = math.sqrt(x1 - a)

    def f(u):
        return 2.0 * u * np.sqrt(np.maximum(barrier_gap(mp, E, x1, u * u), 0.0))

    return gl_adaptive(f, 0.0, umax, tol=_TOL)


def action_S(mp: ModifiedPotential, E: float) -> float:
    """Barrier action ``S(E; hbar)``."""
    if _degenerate(mp, E):
        return 0.0
    x2, x1 = turning_points(mp, E)
    mid = 0.5 * (x1 + x2)
    left = half_action(mp.reflected(), E, -x2, -mid)
    return half_action(mp, E, x1, mid) + left


def tail_integrand(mp: ModifiedPotential, E: float, x):
    """``sqrt(E - V0) - sqrt(E)`` written without cancellation."""
    v = mp(x)
    return -v / (np.sqrt(np.maximum(E - v, 0.0)) + math.sqrt(E))


def _tplus(mp: ModifiedPotential, E: float, x1: float) -> float:
    umax = math.sqrt(x1)
    near = gl_adaptive(lambda u: 2.0 * u * tail_integrand(mp, E, x1 + u * u), 0.0, umax, tol=_TOL)
    c = 2.0 * x1

    def far_f(s):
        return tail_integrand(mp, E, c / s) * c / (s * s)

    far = gl_adaptive(far_f, 0.0, 1.0, tol=_TOL)
    return x1 * math.sqrt(E) - (near + far)


def action_T(mp: ModifiedPotential, E: float) -> tuple[float, float]:
    """Regularised tail phases ``(T+, T-)``."""
    if E <= 0:
        raise NoTurningPointError("energy must be positive")
    x2, x1 = turning_points(mp, E)
    return _tplus(mp, E, x1), _tplus(mp.reflected(), E, -x2)


def action_dS_dE(mp: ModifiedPotential, E: float) -> float:
    """``dS/dE = -(1/2) int_{x2}^{x1} (V0 - E)^{-1/2} dx``."""
    x2, x1 = turning_points(mp, E)
    mid = 0.5 * (x1 + x2)

    def half(m, xt, a):
        umax = math.sqrt(xt - a)

        def f(u):
            return 2.0 * u / np.sqrt(barrier_gap(m, E, xt, u * u))

        return gl_adaptive(f, 0.0, umax, tol=_TOL)

    total = half(mp, x1, mid) + half(mp.reflected(), -x2, -mid)
    return -0.5 * total


def compute_actions(mp: ModifiedPotential, E: float) -> ActionData:
    x2, x1 = turning_points(mp, E)
    S = action_S(mp, E)
    tp, tm = action_T(mp, E)
    return ActionData(E=E, hbar=mp.hbar, x1=x1, x2=x2, S=S, Tplus=tp, Tminus=tm)
