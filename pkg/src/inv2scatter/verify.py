"""Parameter sweeps and the gated verification suites.

Each suite returns a :class:`SweepReport`: the per-cell scattering data, the
fitted exponents with confidence intervals, named boolean checks and a few
scaling diagnostics.  Cells are independent and may run in a process pool;
results are always assembled in grid order, so reports do not depend on
the number of workers.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .action import ActionData, compute_actions
from .airy_connect import build_airy_route, smatrix_leading, smatrix_wkb
from .errors import DomainError, Inv2ScatterError
from .lgmap import build_zeta_map
from .potential import ModifiedPotential, PotentialSpec, barrier_simple, check_hypotheses, rational
from .reference import smatrix_reference
from .scattering import ScatteringMatrix

__all__ = ["Fit", "SweepCell", "SweepReport", "loglog_fit", "compute_cell", "run_cells",
           "hbar_convergence", "energy_uniformity", "barrier_sweep", "powerlaw_suite",
           "normalform_suite", "zeroenergy_suite", "UNIFORMITY_BOUND", "UNITARITY_TOL"]

UNITARITY_TOL = 1e-8
# max over E of residual/hbar for sym2 at hbar = 0.1 is 0.454; frozen with margin
UNIFORMITY_BOUND = 0.5
PROVENANCES = ("reference", "wkb-leading", "wkb-refined")


@dataclass(frozen=True)
class Fit:
    """Least-squares line ``y = slope x + intercept`` with a 95% interval on the slope."""

    slope: float
    intercept: float
    stderr: float
    ci95: tuple
    n: int

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "stderr": self.stderr,
                "ci95": list(self.ci95), "n": self.n}


def linear_fit(x, y) -> Fit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise DomainError("a fit needs at least 3 points")
    res = stats.linregress(x, y)
    tq = stats.t.ppf(0.975, x.size - 2)
    half = tq * res.stderr
    return Fit(slope=float(res.slope), intercept=float(res.intercept), stderr=float(res.stderr),
               ci95=(float(res.slope - half), float(res.slope + half)), n=int(x.size))


def loglog_fit(x, y) -> Fit:
    """Fit ``log y`` against ``log x``."""
    return linear_fit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)))


@dataclass
class SweepCell:
    """Results at one ``(E, hbar)``.

    ``sigma11``/``sigma12`` are ``|Sigma_ref / Sigma_leading - 1| / hbar`` for
    ``t`` and ``r_minus``; ``status`` is ``"ok"`` or an error description.
    """

    E: float
    hbar: float
    reference: ScatteringMatrix | None = None
    leading: ScatteringMatrix | None = None
    refined: ScatteringMatrix | None = None
    actions: ActionData | None = None
    status: str = "ok"
    runtime: float = 0.0
    langer: float = 0.25

    def residuals(self) -> tuple[float, float]:
        """``(|t_ref/t_0 - 1|, |r_ref/r_0 - 1|)`` for the leading-order matrix."""
        if self.reference is None or self.leading is None:
            return (math.nan, math.nan)
        et, em, _ = self.reference.relative_error(self.leading)
        return et, em

    @property
    def sigma11(self) -> float:
        return self.residuals()[0] / self.hbar

    @property
    def sigma12(self) -> float:
        return self.residuals()[1] / self.hbar

    @property
    def reference_unitary(self) -> bool:
        return self.reference is not None and abs(self.reference.unitarity_defect) <= UNITARITY_TOL

    def matrix(self, provenance: str) -> ScatteringMatrix | None:
        return {"reference": self.reference, "wkb-leading": self.leading,
                "wkb-refined": self.refined}[provenance]

    def as_dict(self) -> dict:
        out = {"E": self.E, "hbar": self.hbar, "status": self.status, "langer": self.langer}
        for p in PROVENANCES:
            m = self.matrix(p)
            out[p] = None if m is None else m.as_dict()
        if self.actions is not None:
            a = self.actions
            out["actions"] = {"S": a.S, "T_plus": a.Tplus, "T_minus": a.Tminus, "x1": a.x1, "x2": a.x2}
        out["sigma11_abs"], out["sigma12_abs"] = self.sigma11, self.sigma12
        return out


def compute_cell(spec: PotentialSpec, E: float, hbar: float,
                 provenances: tuple = PROVENANCES, langer: float = 0.25,
                 reference: ScatteringMatrix | None = None) -> SweepCell:
    """Evaluate the requested provenances at one grid point.

    Library errors are recorded in ``status`` instead of raised.
    """
    cell = SweepCell(E=E, hbar=hbar, langer=langer)
    t0 = time.perf_counter()
    try:
        if "reference" in provenances:
            cell.reference = reference if reference is not None else smatrix_reference(spec, E, hbar)
            if not cell.reference_unitary:
                cell.status = "reference-unitarity"
        if "wkb-leading" in provenances or "wkb-refined" in provenances:
            cell.actions = compute_actions(ModifiedPotential(spec, hbar, langer=langer), E)
        if "wkb-leading" in provenances:
            cell.leading = smatrix_leading(spec, E, hbar, langer=langer)
        if "wkb-refined" in provenances:
            cell.refined = smatrix_wkb(spec, E, hbar, refined=True, langer=langer)
    except Inv2ScatterError as exc:
        cell.status = f"{type(exc).__name__}: {exc}"
    cell.runtime = time.perf_counter() - t0
    return cell


def _cell_job(args):
    spec, E, hbar, provenances, langer = args
    return compute_cell(spec, E, hbar, provenances, langer)


def run_cells(spec: PotentialSpec, grid, provenances: tuple = PROVENANCES, langer: float = 0.25,
              jobs: int = 1) -> list[SweepCell]:
    """Evaluate ``grid`` (a sequence of ``(E, hbar)``) in order."""
    tasks = [(spec, float(E), float(h), tuple(provenances), langer) for E, h in grid]
    if jobs <= 1 or len(tasks) <= 1:
        return [_cell_job(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_cell_job, tasks))


@dataclass
class SweepReport:
    """Outcome of one suite."""

    name: str
    cells: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def first_failure(self) -> str | None:
        for k, v in self.checks.items():
            if not v:
                return k
        return None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "first_failure": self.first_failure,
            "checks": {k: bool(v) for k, v in self.checks.items()},
            "fits": {k: v.as_dict() for k, v in self.fits.items()},
            "diagnostics": self.diagnostics,
            "cells": [c.as_dict() for c in self.cells],
            "runtime": self.runtime,
        }

    def summary(self) -> str:
        lines = [f"[{'PASS' if self.passed else 'FAIL'}] {self.name} ({self.runtime:.1f} s)"]
        for k, f in self.fits.items():
            lines.append(f"  fit {k}: slope {f.slope:.4f}  95% CI [{f.ci95[0]:.4f}, {f.ci95[1]:.4f}]")
        for k, v in self.checks.items():
            lines.append(f"  {'ok  ' if v else 'FAIL'} {k}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------


def hbar_convergence(spec: PotentialSpec, E: float, hbars, jobs: int = 1,
                     order_range: tuple = (0.8, 1.2)) -> SweepReport:
    """Order in ``hbar`` of the leading-order error of ``Sigma_11`` and ``Sigma_12``."""
    t0 = time.perf_counter()
    hbars = [float(h) for h in hbars]
    cells = run_cells(spec, [(E, h) for h in hbars], ("reference", "wkb-leading"), jobs=jobs)
    rep = SweepReport(name="hbar", cells=cells)
    rep.checks["cells_ok"] = all(c.status == "ok" for c in cells)
    if rep.checks["cells_ok"]:
        res = np.array([c.residuals() for c in cells])
        for k, col in (("sigma11", 0), ("sigma12", 1)):
            f = loglog_fit(hbars, res[:, col])
            rep.fits[f"{k}_order"] = f
            rep.checks[f"{k}_order_in_range"] = order_range[0] <= f.slope <= order_range[1]
        rep.diagnostics["residuals"] = res.tolist()
    rep.runtime = time.perf_counter() - t0
    return rep


def energy_uniformity(spec: PotentialSpec, hbar: float, energies, use_modified: bool = True,
                      references: dict | None = None, jobs: int = 1,
                      bound: float = UNIFORMITY_BOUND) -> SweepReport:
    """``max(residual)/hbar`` across energies, with the modified or the raw potential.

    ``references`` maps ``E`` to a precomputed reference matrix; missing
    entries are computed and added, so two calls can share one set.
    """
    t0 = time.perf_counter()
    energies = [float(E) for E in energies]
    mp = ModifiedPotential(spec, hbar)
    if max(energies) > 0.5 * mp.E0:
        raise DomainError("energies must not exceed E0/2")
    references = {} if references is None else references
    missing = [E for E in energies if E not in references]
    for c in run_cells(spec, [(E, hbar) for E in missing], ("reference",), jobs=jobs):
        references[c.E] = c.reference
    langer = 0.25 if use_modified else 0.0
    cells = [compute_cell(spec, E, hbar, ("reference", "wkb-leading"), langer=langer,
                          reference=references[E]) for E in energies]
    name = "energy-modified" if use_modified else "energy-raw"
    rep = SweepReport(name=name, cells=cells)
    rep.checks["cells_ok"] = all(c.status == "ok" for c in cells)
    if rep.checks["cells_ok"]:
        stat = np.array([max(c.residuals()) / hbar for c in cells])
        rep.diagnostics["residual_over_hbar"] = stat.tolist()
        f = linear_fit(np.log(1.0 / np.array(energies)), stat)
        rep.fits["log_slope"] = f
        if use_modified:
            rep.checks["bounded_by_frozen_constant"] = bool(stat.max() <= bound)
        else:
            # one-sided 95%: lower end of the 90% two-sided interval
            tq = stats.t.ppf(0.95, f.n - 2)
            rep.diagnostics["slope_lower_95"] = float(f.slope - tq * f.stderr)
            rep.checks["positive_log_slope_95"] = bool(f.slope - tq * f.stderr > 0.0)
    rep.runtime = time.perf_counter() - t0
    return rep


def barrier_sweep(spec: PotentialSpec | None = None, alphas=(0.25, 0.5, 0.75),
                  hbars=(0.05, 0.02, 0.01), jobs: int = 1, tol: float = 0.15) -> SweepReport:
    """Barrier-top regime ``E = 1 - hbar^alpha``.

    For each ``alpha`` the fitted order of the leading-order error in
    ``hbar`` is compared with ``1 - alpha``; ``q(x1) hbar^{-alpha/3}`` and
    ``max |Vt| hbar^{4 alpha/3}`` are recorded as scaling diagnostics.
    """
    t0 = time.perf_counter()
    spec = barrier_simple() if spec is None else spec
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
    report = check_hypotheses(spec, mode="barrier6")
    rep = SweepReport(name="barrier")
    rep.checks["hypotheses_barrier6"] = report.passed
    grid = [(1.0 - h ** a, h) for a in alphas for h in hbars]
    for E, h in grid:
        if E >= 1.0 - h:
            raise DomainError(f"E = {E} is within hbar of the barrier top")
    cells = run_cells(spec, grid, ("reference", "wkb-leading"), jobs=jobs)
    rep.cells = cells
    rep.checks["cells_ok"] = all(c.status == "ok" for c in cells)
    if not rep.checks["cells_ok"]:
        rep.runtime = time.perf_counter() - t0
        return rep
    m = len(hbars)
    qdiag, vdiag = {}, {}
    for i, a in enumerate(alphas):
        row = cells[i * m:(i + 1) * m]
        res = np.array([c.residuals() for c in row])
        for k, col in (("sigma11", 0), ("sigma12", 1)):
            f = loglog_fit(hbars, res[:, col])
            rep.fits[f"alpha={a}:{k}_order"] = f
            rep.checks[f"alpha={a}:{k}_order_within_{tol}"] = abs(f.slope - (1.0 - a)) <= tol
        qs, vs = [], []
        for c in row:
            zm = build_zeta_map(ModifiedPotential(spec, c.hbar), c.E)
            qs.append(zm.q(zm.x1) * c.hbar ** (-a / 3.0))
            xs = np.linspace(0.0, 3.0 * zm.x1, 301)
            vs.append(float(np.max(np.abs(zm.vtilde(xs)))) * c.hbar ** (4.0 * a / 3.0))
        qdiag[str(a)], vdiag[str(a)] = qs, vs
        rep.checks[f"alpha={a}:q_scaling_within_factor_2"] = max(qs) / min(qs) <= 2.0
        rep.diagnostics[f"alpha={a}:residuals"] = res.tolist()
    rep.diagnostics["q_scaled"] = qdiag
    rep.diagnostics["vtilde_scaled"] = vdiag
    rep.runtime = time.perf_counter() - t0
    return rep


def powerlaw_suite(mu2s=(2.0, 6.0), energies=None, hbar: float = 1.0, jobs: int = 1,
                   tol: float = 0.05) -> SweepReport:
    """Slope of ``log|t|`` against ``log E`` for symmetric rational potentials.

    The expected slope is ``nu = sqrt(mu^2/hbar^2 + 1/4)``.
    """
    t0 = time.perf_counter()
    energies = list(np.geomspace(1e-4, 1e-2, 5)) if energies is None else [float(E) for E in energies]
    rep = SweepReport(name="powerlaw")
    for mu2 in mu2s:
        spec = rational(mu2, mu2)
        cells = run_cells(spec, [(E, hbar) for E in energies], ("reference",), jobs=jobs)
        rep.cells.extend(cells)
        ok = all(c.status == "ok" for c in cells)
        rep.checks[f"mu2={mu2}:cells_ok"] = ok
        if not ok:
            continue
        f = linear_fit(np.log(energies), [c.reference.log_abs_t for c in cells])
        nu = math.sqrt(mu2 / hbar ** 2 + 0.25)
        rep.fits[f"mu2={mu2}:slope"] = f
        rep.diagnostics[f"mu2={mu2}:nu"] = nu
        rep.checks[f"mu2={mu2}:slope_within_{tol}_of_nu"] = abs(f.slope - nu) <= tol
    rep.runtime = time.perf_counter() - t0
    return rep


def normalform_suite(spec: PotentialSpec | None = None, E: float = 0.3, hbars=(0.1, 0.05),
                     tol: float = 5e-6, npts: int = 41) -> SweepReport:
    """Airy-route against Bessel-route ``f+`` on ``x in [2 x1, 10 x1]``."""
    from .bessel_nf import bessel_basis, bessel_jost, xi_map_build

    t0 = time.perf_counter()
    spec = rational(2.0, 2.0) if spec is None else spec
    rep = SweepReport(name="normalform")
    for h in hbars:
        xm = xi_map_build(spec, E, hbar=h)
        basis = bessel_basis(xm, h)
        x = np.linspace(2.0 * xm.x1, 10.0 * xm.x1, npts)
        fb = bessel_jost(basis, x)
        fa = build_airy_route(spec, E, h).jost(x)
        rel_f = float(np.max(np.abs(np.exp(fb.log_value - fa.log_value) - 1.0)))
        rel_d = float(np.max(np.abs(fb.dlog / fa.dlog - 1.0)))
        rep.diagnostics[f"hbar={h}:f_rel"] = rel_f
        rep.diagnostics[f"hbar={h}:dlog_rel"] = rel_d
        rep.diagnostics[f"hbar={h}:volterra_residual"] = basis.volterra_residual(1)
        rep.checks[f"hbar={h}:f_plus_agreement_{tol}"] = max(rel_f, rel_d) <= tol
        rep.checks[f"hbar={h}:bessel_volterra_residual"] = basis.volterra_residual(1) <= 1e-7
    rep.runtime = time.perf_counter() - t0
    return rep


def zeroenergy_suite(spec: PotentialSpec | None = None, hbars=(0.2, 0.1, 0.05),
                     ratio_range: tuple = (1.6, 2.6), constancy: float = 1e-8) -> SweepReport:
    """``|-hbar W / 2 - 1|`` halving with ``hbar`` and the x-constancy of ``W``."""
    from .zero_energy import solve_zero_energy, wronskian_zero

    t0 = time.perf_counter()
    spec = rational(2.0, 2.0) if spec is None else spec
    rep = SweepReport(name="zeroenergy")
    defects, spreads = [], []
    for h in hbars:
        W, spread = wronskian_zero(solve_zero_energy(spec, h))
        defects.append(abs(-h * W / 2.0 - 1.0))
        spreads.append(spread)
    ratios = [defects[i] / defects[i + 1] for i in range(len(defects) - 1)]
    rep.diagnostics.update(defects=defects, spreads=spreads, ratios=ratios)
    rep.checks["halving_ratio_in_range"] = all(ratio_range[0] <= r <= ratio_range[1] for r in ratios)
    rep.checks[f"x_constancy_{constancy}"] = max(spreads) <= constancy
    rep.runtime = time.perf_counter() - t0
    return rep


SUITES = ("hbar", "energy", "barrier", "powerlaw", "normalform", "zeroenergy")


def run_suite(name: str, spec: PotentialSpec | None = None, params: dict | None = None,
              jobs: int = 1) -> list[SweepReport]:
    """Run a named suite with optional parameter overrides."""
    p = dict(params or {})
    spec_default = rational(2.0, 2.0) if spec is None else spec
    if name == "hbar":
        return [hbar_convergence(spec_default, p.get("E", 0.3), p.get("hbars", (0.2, 0.1, 0.05)),
                                 jobs=jobs)]
    if name == "energy":
        energies = p.get("energies", list(np.geomspace(1e-1, 1e-4, 7)))
        h = p.get("hbar", 0.1)
        refs: dict = {}
        return [energy_uniformity(spec_default, h, energies, True, refs, jobs=jobs),
                energy_uniformity(spec_default, h, energies, False, refs, jobs=jobs)]
    if name == "barrier":
        return [barrier_sweep(spec, p.get("alphas", (0.25, 0.5, 0.75)),
                              p.get("hbars", (0.05, 0.02, 0.01)), jobs=jobs)]
    if name == "powerlaw":
        return [powerlaw_suite(p.get("mu2s", (2.0, 6.0)), p.get("energies"), p.get("hbar", 1.0),
                               jobs=jobs)]
    if name == "normalform":
        return [normalform_suite(spec_default, p.get("E", 0.3), p.get("hbars", (0.1, 0.05)))]
    if name == "zeroenergy":
        return [zeroenergy_suite(spec_default, p.get("hbars", (0.2, 0.1, 0.05)))]
    if name == "all":
        out = []
        # the power law gates the rest
        pl = run_suite("powerlaw", spec, p.get("powerlaw"), jobs)
        out.extend(pl)
        if not all(r.passed for r in pl):
            return out
        for s in SUITES:
            if s != "powerlaw":
                out.extend(run_suite(s, spec, p.get(s), jobs))
        return out
    raise DomainError(f"unknown suite {name!r}")
