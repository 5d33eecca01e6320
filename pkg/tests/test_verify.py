import math

import numpy as np
import pytest

from inv2scatter.errors import DomainError
from inv2scatter.potential import rational, sym2
from inv2scatter.verify import (UNIFORMITY_BOUND, compute_cell, energy_uniformity, hbar_convergence,
                                linear_fit, loglog_fit, powerlaw_suite, run_cells, run_suite,
                                zeroenergy_suite, barrier_sweep)

ENERGIES = list(np.geomspace(1e-1, 1e-4, 7))


def test_fit_recovers_exact_line():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    f = loglog_fit(x, 3 * x ** 1.25)
    assert f.slope == pytest.approx(1.25, rel=1e-12)
    assert f.ci95[0] <= f.slope <= f.ci95[1]


def test_fit_needs_three_points():
    with pytest.raises(DomainError):
        linear_fit([1, 2], [1, 2])


def test_cell_records_all_provenances():
    c = compute_cell(sym2(), 0.3, 0.1)
    assert c.status == "ok" and c.reference_unitary
    assert {c.matrix(p).provenance for p in ("reference", "wkb-leading", "wkb-refined")} == {
        "reference", "wkb-leading", "wkb-refined"}
    d = c.as_dict()
    assert d["actions"]["S"] > 0 and math.isfinite(d["sigma11_abs"])


def test_cell_failure_is_recorded():
    c = compute_cell(sym2(), 5.0, 0.1)  # above the barrier
    assert c.status != "ok"


def test_cells_independent_of_worker_count():
    grid = [(E, h) for E in (0.1, 0.3) for h in (0.2, 0.1)]
    a = run_cells(sym2(), grid, ("reference", "wkb-leading"), jobs=1)
    b = run_cells(sym2(), grid, ("reference", "wkb-leading"), jobs=2)
    assert [c.as_dict() | {"runtime": 0} for c in a] == [c.as_dict() | {"runtime": 0} for c in b]


def test_hbar_order():
    rep = hbar_convergence(sym2(), 0.3, (0.2, 0.1, 0.05))
    assert rep.passed
    for k in ("sigma11_order", "sigma12_order"):
        assert 0.8 <= rep.fits[k].slope <= 1.2


def test_hbar_residual_table_golden():
    # regression values of |Sigma_ref / Sigma_0 - 1| for (t, r-) at hbar = 0.2, 0.1, 0.05
    rep = hbar_convergence(sym2(), 0.3, (0.2, 0.1, 0.05))
    golden = [[0.10288393031093747, 0.013617662459295668],
              [0.050144935743206026, 0.006751062871986016],
              [0.024762476675535612, 0.0033683326362955123]]
    np.testing.assert_allclose(rep.diagnostics["residuals"], golden, rtol=1e-7)


@pytest.fixture(scope="module")
def energy_pair():
    refs = {}
    mod = energy_uniformity(sym2(), 0.1, ENERGIES, True, refs)
    n_refs = len(refs)
    raw = energy_uniformity(sym2(), 0.1, ENERGIES, False, refs)
    return mod, raw, refs, n_refs


def test_energy_modified_flat(energy_pair):
    mod = energy_pair[0]
    stat = np.array(mod.diagnostics["residual_over_hbar"])
    assert mod.passed and stat.max() <= UNIFORMITY_BOUND
    assert stat.max() / stat.min() < 1.2


def test_energy_raw_grows(energy_pair):
    raw = energy_pair[1]
    assert raw.passed
    assert raw.diagnostics["slope_lower_95"] > 0
    stat = raw.diagnostics["residual_over_hbar"]
    assert all(b > a for a, b in zip(stat, stat[1:]))


def test_energy_runs_share_references(energy_pair):
    mod, raw, refs, n_refs = energy_pair
    assert n_refs == len(refs) == len(ENERGIES)
    for a, b in zip(mod.cells, raw.cells):
        assert a.reference is b.reference


def test_energy_grid_limit():
    with pytest.raises(DomainError):
        energy_uniformity(sym2(), 0.1, [1.5])


def test_powerlaw_gate():
    rep = powerlaw_suite()
    assert rep.passed
    assert rep.fits["mu2=2.0:slope"].slope == pytest.approx(1.5, abs=0.05)
    assert rep.fits["mu2=6.0:slope"].slope == pytest.approx(2.5, abs=0.05)


def test_zeroenergy_suite():
    rep = zeroenergy_suite()
    assert rep.passed
    assert all(1.6 <= r <= 2.6 for r in rep.diagnostics["ratios"])


def test_barrier_rejects_bad_alpha():
    with pytest.raises(DomainError):
        barrier_sweep(alphas=(1.2,))


def test_barrier_small_alpha_tends_to_order_one():
    rep = barrier_sweep(alphas=(0.05,), hbars=(0.05, 0.02, 0.01))
    assert rep.checks["cells_ok"] and rep.checks["hypotheses_barrier6"]
    assert rep.fits["alpha=0.05:sigma11_order"].slope == pytest.approx(1.0, abs=0.15)


def test_report_summary_lines():
    rep = zeroenergy_suite()
    s = rep.summary()
    assert s.startswith("[PASS] zeroenergy")
    assert rep.as_dict()["first_failure"] is None


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")


def test_deterministic_report():
    a = hbar_convergence(rational(2.0, 6.0), 0.3, (0.2, 0.1, 0.05)).as_dict()
    b = hbar_convergence(rational(2.0, 6.0), 0.3, (0.2, 0.1, 0.05)).as_dict()
    for d in (a, b):
        d.pop("runtime")
        for c in d["cells"]:
            c.pop("runtime", None)
    assert a == b
