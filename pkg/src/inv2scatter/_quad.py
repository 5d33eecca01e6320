"""Gauss-Legendre quadrature helpers."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gl_fixed(f, a, b, n: int = 20):
    """Fixed-order rule on [a, b]; ``f`` must accept arrays."""
    x, w = gl_nodes(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return half * np.dot(w, f(mid + half * x))


def gl_adaptive(f, a: float, b: float, tol: float = 1e-13, n: int = 20,
                max_depth: int = 24) -> float:
    """Adaptive bisection with a fixed-order panel rule.

    A panel is accepted when splitting it changes the estimate by less than
    its share of ``tol * (1 + |I|)``, where ``I`` is the running global
    estimate, or by less than a few rounding units of the panel itself.
    """
    total_len = abs(b - a)
    if total_len == 0.0:
        return 0.0
    first = gl_fixed(f, a, b, n)
    scale = 1.0 + abs(first)
    stack = [(a, b, first, 0)]
    result = 0.0
    eps = np.finfo(float).eps
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = gl_fixed(f, lo, mid, n)
        right = gl_fixed(f, mid, hi, n)
        share = abs(hi - lo) / total_len
        diff = abs(left + right - whole)
        if not np.isfinite(diff):
            raise FloatingPointError(f"non-finite integrand on [{lo}, {hi}]")
        if (diff <= tol * share * scale or diff <= 1e4 * eps * (abs(left) + abs(right))
                or depth >= max_depth):
            result += left + right
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    return float(result)


def cumulative_panels(f, edges: np.ndarray, n: int = 16) -> np.ndarray:
    """Cumulative integral of ``f`` at the panel edges, starting from 0.

    Each panel [edges[i], edges[i+1]] is integrated with an n-point rule;
    the evaluation is vectorised over all panels at once.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gl_nodes(n)
    lo = edges[:-1, None]
    hi = edges[1:, None]
    half = 0.5 * (hi - lo)
    pts = 0.5 * (hi + lo) + half * x[None, :]
    vals = f(pts)
    panel = (half * vals) @ w
    out = np.empty(edges.size, dtype=np.result_type(panel, float))
    out[0] = 0.0
    np.cumsum(panel, out=out[1:])
    return out
