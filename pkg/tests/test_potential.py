import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from inv2scatter.errors import NoTurningPointError, UnsupportedError
from inv2scatter.potential import (ModifiedPotential, barrier_simple, check_hypotheses,
                                   estimate_E0, rational, sech2_validation, spec_from_dict, sym2,
                                   turning_points, user_table)


def test_modified_value_at_origin():
    assert ModifiedPotential(sym2(), 0.1)(0.0) == pytest.approx(2.0025, rel=1e-15)


def test_symmetric_derivative_vanishes():
    assert ModifiedPotential(sym2(), 0.1)(0.0, 1) == 0.0


def test_tail_product():
    x = 100.0
    assert x * x * sym2()(x) == pytest.approx(2 * x * x / (1 + x * x), rel=1e-15)
    assert x * x * sym2()(x) == pytest.approx(1.9998, abs=1e-4)


def test_langer_term_exact():
    x = np.linspace(-20, 20, 101)
    mp = ModifiedPotential(rational(2.0, 6.0), 0.3)
    assert np.allclose(mp(x) - rational(2.0, 6.0)(x), 0.09 / 4 / (1 + x * x), rtol=0, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(-8, 8), st.sampled_from(["sym2", "asym", "barrier", "barrier_beta"]),
       st.integers(1, 4))
def test_derivatives_match_finite_differences(x, fam, k):
    spec = {"sym2": sym2(), "asym": rational(2.0, 6.0), "barrier": barrier_simple(),
            "barrier_beta": barrier_simple(3.0, 0.5)}[fam]
    mp = ModifiedPotential(spec, 0.1)
    h = 1e-4
    fd = (mp(x + h, k - 1) - mp(x - h, k - 1)) / (2 * h)
    exact = mp(x, k)
    assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


def test_turning_points_closed_form():
    mp = ModifiedPotential(sym2(), 0.1)
    x2, x1 = turning_points(mp, 0.5)
    assert x1 == pytest.approx(math.sqrt(3.005), rel=1e-14)
    assert x2 == pytest.approx(-x1, rel=1e-14)
    assert abs(mp(x1) - 0.5) <= 1e-13 * 0.5


def test_turning_point_exact_one():
    _, x1 = turning_points(ModifiedPotential(sym2(), 1.0), 1.125)
    assert x1 == pytest.approx(1.0, rel=1e-14)


def test_turning_points_monotone_in_energy():
    mp = ModifiedPotential(rational(2.0, 6.0), 0.1)
    E = np.geomspace(1e-4, 1.5, 20)
    x1 = [turning_points(mp, e)[1] for e in E]
    assert np.all(np.diff(x1) < 0)


def test_no_turning_point_above_E0():
    with pytest.raises(NoTurningPointError):
        turning_points(ModifiedPotential(sym2(), 0.1), 2.1)
    with pytest.raises(NoTurningPointError):
        turning_points(ModifiedPotential(sym2(), 0.1), 0.0)


def test_E0_unimodal_and_barrier():
    assert estimate_E0(ModifiedPotential(sym2(), 0.1)) == pytest.approx(2.0025, rel=1e-12)
    assert estimate_E0(ModifiedPotential(barrier_simple(), 0.0, langer=0.0)) == pytest.approx(1.0, rel=1e-12)


def _double_bump(x):
    return 2.0 / (1 + x * x) + 3.0 * np.exp(-(x - 3.0) ** 2)


def test_E0_double_bump_saddle():
    xt = np.linspace(-60, 60, 24001)
    spec = user_table(xt, _double_bump(xt), math.sqrt(2), math.sqrt(2))
    mp = ModifiedPotential(spec, 0.1)
    # oracle: minimise the analytic profile between the bumps
    f = lambda s: _double_bump(s) + 0.0025 / (1 + s * s)  # noqa: E731
    ref = minimize_scalar(f, bounds=(0.5, 2.8), method="bounded", options={"xatol": 1e-12}).fun
    assert estimate_E0(mp) == pytest.approx(ref, rel=1e-3)


def test_positivity_witness():
    xt = np.linspace(-60, 60, 12001)
    v = 2.0 / (1 + xt * xt) - 0.5 * np.exp(-((xt - 5.0) / 0.3) ** 2)
    rep = check_hypotheses(user_table(xt, v, math.sqrt(2), math.sqrt(2)))
    assert not rep.passed
    (fail,) = rep.failures()
    assert fail.name == "positivity"
    assert abs(fail.witness - 5.0) < 0.5


def test_theorem1_passes_for_rational():
    assert check_hypotheses(sym2()).passed
    assert check_hypotheses(rational(2.0, 6.0)).passed


def test_barrier6_passes():
    rep = check_hypotheses(barrier_simple(), mode="barrier6")
    assert rep.passed
    assert {c.name for c in rep.checks} >= {"decreasing_right", "increasing_left", "curvature"}


def test_barrier6_rejects_sym2():
    assert not check_hypotheses(sym2(), mode="barrier6").passed


def test_sech2_flagged():
    rep = check_hypotheses(sech2_validation())
    assert not rep.passed
    assert any("not inverse-square" in c.detail for c in rep.checks)


def test_barrier_normalisation():
    for spec in (barrier_simple(), barrier_simple(3.0, 0.5)):
        v = spec.jet(0.0, 2)
        assert v[0] == pytest.approx(1.0) and abs(v[1]) < 1e-15 and v[2] == pytest.approx(-1.0)


def test_user_table_derivative_unsupported():
    xt = np.linspace(-5, 5, 11)
    spec = user_table(xt, 2 / (1 + xt * xt), 1.0, 1.0)
    with pytest.raises(UnsupportedError):
        spec(0.3, 1)


def test_spec_from_dict_round_trip():
    assert spec_from_dict({"family": "sym2"}) == sym2()
    assert spec_from_dict({"family": "rational", "params": [2, 6]}) == rational(2.0, 6.0)
    with pytest.raises(ValueError):
        spec_from_dict({"family": "nonsense"})


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["sym2", "asym", "barrier"]), st.floats(0.02, 0.5), st.floats(0.01, 0.5))
def test_barrier_positive_between_turning_points(fam, hbar, frac):
    spec = {"sym2": sym2(), "asym": rational(2.0, 6.0), "barrier": barrier_simple()}[fam]
    mp = ModifiedPotential(spec, hbar)
    E = frac * mp.E0
    x2, x1 = turning_points(mp, E)
    x = np.linspace(x2, x1, 1002)[1:-1]
    assert np.all(mp(x) - E > 0)


def test_reflection():
    spec = rational(2.0, 6.0)
    x = np.linspace(-5, 5, 11)
    assert np.allclose(spec.reflected()(x), spec(-x), rtol=1e-15)
    assert spec.reflected().mu_plus == spec.mu_minus
