import math

import numpy as np
import pytest
from scipy.special import airy

from inv2scatter._magnus import phase_grid, propagate, step_matrices, tree_product
from inv2scatter._quad import cumulative_panels, gl_adaptive, gl_fixed


def test_gl_fixed_polynomial_exact():
    assert gl_fixed(lambda x: x ** 39, 0.0, 1.0, 20) == pytest.approx(1 / 40, rel=1e-14)


def test_gl_adaptive_endpoint_sqrt():
    val = gl_adaptive(lambda x: np.sqrt(1 - x * x), -1.0, 1.0, tol=1e-13)
    assert val == pytest.approx(math.pi / 2, abs=1e-11)


def test_cumulative_panels():
    edges = np.linspace(0, math.pi, 50)
    np.testing.assert_allclose(cumulative_panels(np.sin, edges), 1 - np.cos(edges), atol=1e-14)


def test_constant_w_is_exact():
    w = 4.0
    nodes = np.linspace(0, 3, 7)
    p = propagate(lambda x: np.full_like(x, w), nodes, np.array([1.0, 0.0]))
    y = math.exp(p.log_scale[-1]) * p.vec[-1]
    assert y[0].real == pytest.approx(math.cosh(6.0), rel=1e-14)
    assert y[1].real == pytest.approx(2 * math.sinh(6.0), rel=1e-14)


def test_steps_are_unimodular():
    M = step_matrices(lambda x: np.sin(x) - 0.3, np.linspace(0, 10, 200))
    np.testing.assert_allclose(np.linalg.det(M), 1.0, atol=1e-12)


def test_tree_product_matches_sequential():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(13, 2, 2))
    P, L = tree_product(M)
    ref = np.eye(2)
    for m in M:
        ref = m @ ref
    np.testing.assert_allclose(math.exp(L) * P, ref, rtol=1e-12)


def test_airy_equation_sixth_order():
    # y'' = x y from x = 4 down to -6 with Ai data
    ai, aip, _, _ = airy(4.0)
    target = airy(-6.0)[0]
    errs = []
    for n in (100, 200):
        nodes = np.linspace(4.0, -6.0, n + 1)
        p = propagate(lambda x: x, nodes, np.array([ai, aip]))
        errs.append(abs(math.exp(p.log_scale[-1]) * p.vec[-1, 0].real - target))
    assert errs[1] < 1e-9
    assert errs[0] / errs[1] > 40  # 2^6 = 64 for a sixth-order scheme


def test_growth_kept_representable():
    nodes = np.linspace(0, 2000, 4001)
    p = propagate(lambda x: np.ones_like(x), nodes, np.array([1.0, 1.0]))
    assert p.log_scale[-1] + math.log(abs(p.vec[-1, 0])) == pytest.approx(2000.0, rel=1e-12)


def test_phase_grid_direction_and_density():
    g = phase_grid(lambda x: np.full_like(x, 10.0), 5.0, 0.0, c=0.5)
    assert g[0] == 5.0 and g[-1] == 0.0 and np.all(np.diff(g) < 0)
    assert g.size - 1 >= 100
