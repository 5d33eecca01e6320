"""Command-line front end: ``inv2scatter smatrix|sweep|verify --config <path>``.

The configuration is one JSON document (see README for the schema).  Exit
codes: 0 success, 1 failed assertion or hypothesis check, 2 usage or
configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

from .errors import (ConditioningError, ConvergenceError, DomainError, HypothesisError,
                     Inv2ScatterError)
from .potential import PotentialSpec, check_hypotheses, spec_from_dict

__all__ = ["RunConfig", "ConfigError", "main", "SCHEMA_VERSION", "CSV_HEADER", "load_config",
           "cmd_smatrix", "cmd_sweep", "cmd_verify"]

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
CSV_HEADER = ("E", "hbar", "provenance", "log10_abs_t", "arg_t", "abs_r_plus", "arg_r_plus",
              "abs_r_minus", "arg_r_minus", "S", "T_plus", "T_minus", "sigma11_abs",
              "sigma12_abs", "unitarity_defect", "status")
_PROVENANCES = ("reference", "wkb-leading", "wkb-refined")
_SUITES = ("hbar", "energy", "barrier", "powerlaw", "normalform", "zeroenergy", "all")
OUT_ENV = "INV2SCATTER_OUT"


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config error at '{key}': {message}")
        self.key = key


@dataclass
class RunConfig:
    """Validated run configuration."""

    potential: dict
    E: float | None = None
    hbar: float | None = None
    energies: list = field(default_factory=list)
    hbars: list = field(default_factory=list)
    provenances: list = field(default_factory=lambda: list(_PROVENANCES))
    langer: float = 0.25
    suite: str = "all"
    suite_params: dict = field(default_factory=dict)
    jobs: int = 1
    output_dir: str = "out"
    schema_version: int = SCHEMA_VERSION

    _KEYS = ("schema_version", "potential", "E", "hbar", "energies", "hbars", "provenances",
             "langer", "suite", "suite_params", "jobs", "output_dir")

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        unknown = sorted(set(d) - set(cls._KEYS))
        if unknown:
            raise ConfigError(unknown[0], "unknown key")
        if "potential" not in d:
            raise ConfigError("potential", "missing required key")
        pot = d["potential"]
        if not isinstance(pot, dict):
            raise ConfigError("potential", "must be an object with 'family' and 'params'")
        try:
            spec_from_dict(pot)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError("potential", str(exc)) from None
        cfg = cls(potential=dict(pot))
        sv = d.get("schema_version", SCHEMA_VERSION)
        if sv != SCHEMA_VERSION:
            raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {sv!r}")
        for key in ("E", "hbar"):
            if d.get(key) is not None:
                setattr(cfg, key, _positive(d[key], key))
        for key in ("energies", "hbars"):
            if key in d:
                v = d[key]
                if not isinstance(v, list):
                    raise ConfigError(key, "must be a list of numbers")
                setattr(cfg, key, [_positive(x, f"{key}[{i}]") for i, x in enumerate(v)])
        if "provenances" in d:
            pv = d["provenances"]
            if not isinstance(pv, list) or not pv:
                raise ConfigError("provenances", "must be a non-empty list")
            for i, p in enumerate(pv):
                if p not in _PROVENANCES:
                    raise ConfigError(f"provenances[{i}]", f"unknown provenance {p!r}")
            cfg.provenances = list(pv)
        if "langer" in d:
            if not _is_number(d["langer"]) or d["langer"] < 0:
                raise ConfigError("langer", "must be a non-negative number")
            cfg.langer = float(d["langer"])
        if "suite" in d:
            if not isinstance(d["suite"], str):
                raise ConfigError("suite", "must be a string")
            cfg.suite = d["suite"]
        if "suite_params" in d:
            if not isinstance(d["suite_params"], dict):
                raise ConfigError("suite_params", "must be an object")
            cfg.suite_params = dict(d["suite_params"])
        if "jobs" in d:
            if not isinstance(d["jobs"], int) or isinstance(d["jobs"], bool) or d["jobs"] < 1:
                raise ConfigError("jobs", "must be a positive integer")
            cfg.jobs = d["jobs"]
        if "output_dir" in d:
            if not isinstance(d["output_dir"], str):
                raise ConfigError("output_dir", "must be a string")
            cfg.output_dir = d["output_dir"]
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in self._KEYS}

    def spec(self) -> PotentialSpec:
        return spec_from_dict(self.potential)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _positive(v, key) -> float:
    if not _is_number(v) or v <= 0:
        raise ConfigError(key, "must be a positive number")
    return float(v)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return RunConfig.from_dict(data)


def _g(x) -> str:
    """17 significant digits (empty for missing values)."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".17g")


def _matrix_json(m) -> dict:
    t = m.t
    return {
        "re_t": t.real, "im_t": t.imag, "log10_abs_t": m.log10_abs_t, "arg_t": m.arg_t,
        "re_r_plus": m.r_plus.real, "im_r_plus": m.r_plus.imag,
        "re_r_minus": m.r_minus.real, "im_r_minus": m.r_minus.imag,
        "unitarity_defect": m.unitarity_defect,
    }


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, default=_json_default) + "\n"


def _json_default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _require(cfg: RunConfig, key: str):
    v = getattr(cfg, key)
    if v is None or v == []:
        raise ConfigError(key, "missing required key for this command")
    return v


def _check_theorem_hypotheses(spec: PotentialSpec):
    rep = check_hypotheses(spec, mode="theorem1")
    if not rep.passed:
        raise _HypothesisFailure(rep)


class _HypothesisFailure(Exception):
    def __init__(self, report):
        super().__init__("potential fails the hypothesis check")
        self.report = report


def cmd_smatrix(cfg: RunConfig) -> tuple[dict, dict]:
    """All provenances at one ``(E, hbar)``; returns ``(document, files)``."""
    from .action import compute_actions
    from .potential import ModifiedPotential
    from .verify import compute_cell

    E = _require(cfg, "E")
    hbar = _require(cfg, "hbar")
    spec = cfg.spec()
    _check_theorem_hypotheses(spec)
    cell = compute_cell(spec, E, hbar, tuple(cfg.provenances), langer=cfg.langer)
    if cell.status != "ok":
        raise _CellFailure(cell.status)
    a = cell.actions or compute_actions(ModifiedPotential(spec, hbar, langer=cfg.langer), E)
    doc = {"schema_version": SCHEMA_VERSION, "potential": cfg.potential, "E": E, "hbar": hbar}
    for p in _PROVENANCES:
        m = cell.matrix(p)
        doc[p.replace("-", "_")] = None if m is None else _matrix_json(m)
    doc.update(S=a.S, T_plus=a.Tplus, T_minus=a.Tminus, x1=a.x1, x2=a.x2)
    return doc, {"smatrix.json": _dump(doc)}


class _CellFailure(Exception):
    pass


def sweep_rows(cells, provenances) -> list[list[str]]:
    rows = []
    for c in cells:
        a = c.actions
        s11, s12 = (c.sigma11, c.sigma12) if c.status == "ok" else (None, None)
        for p in provenances:
            m = c.matrix(p)
            if m is None:
                rows.append([_g(c.E), _g(c.hbar), p] + [""] * 12 + [c.status if c.status != "ok" else "missing"])
                continue
            rows.append([
                _g(c.E), _g(c.hbar), p, _g(m.log10_abs_t), _g(m.arg_t),
                _g(abs(m.r_plus)), _g(math.atan2(m.r_plus.imag, m.r_plus.real)),
                _g(abs(m.r_minus)), _g(math.atan2(m.r_minus.imag, m.r_minus.real)),
                _g(a.S if a else None), _g(a.Tplus if a else None), _g(a.Tminus if a else None),
                _g(s11), _g(s12), _g(m.unitarity_defect), c.status,
            ])
    return rows


def cmd_sweep(cfg: RunConfig, jobs: int | None = None) -> tuple[str, dict]:
    """Grid sweep; rows are E-major, hbar-minor, provenance order as configured."""
    from .verify import run_cells

    energies = _require(cfg, "energies")
    hbars = _require(cfg, "hbars")
    spec = cfg.spec()
    _check_theorem_hypotheses(spec)
    grid = [(E, h) for E in energies for h in hbars]
    cells = run_cells(spec, grid, tuple(cfg.provenances), langer=cfg.langer,
                      jobs=cfg.jobs if jobs is None else jobs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(sweep_rows(cells, cfg.provenances))
    text = buf.getvalue()
    failed = sum(c.status != "ok" for c in cells)
    summary = f"{len(cells)} cells, {failed} failed, {len(cells) * len(cfg.provenances)} rows"
    return summary, {"sweep.csv": text}


def cmd_verify(cfg: RunConfig, jobs: int | None = None):
    """Run a verification suite; returns ``(reports, files)``."""
    from .verify import run_suite

    if cfg.suite not in _SUITES:
        raise ConfigError("suite", f"unknown suite {cfg.suite!r}; choose from {', '.join(_SUITES)}")
    spec = cfg.spec()
    reports = run_suite(cfg.suite, spec, cfg.suite_params, jobs=cfg.jobs if jobs is None else jobs)
    doc = {"schema_version": SCHEMA_VERSION, "suite": cfg.suite,
           "passed": all(r.passed for r in reports),
           "reports": [{k: v for k, v in r.as_dict().items() if k != "runtime"} for r in reports]}
    for rd in doc["reports"]:
        for c in rd["cells"]:
            c.pop("runtime", None)
    return reports, {"verify_report.json": _dump(doc)}


def _write(out_dir: str, files: dict) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in files.items():
        p = os.path.join(out_dir, name)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(p)
    return paths


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="inv2scatter",
                                 description="Semiclassical scattering matrices for barrier potentials.")
    ap.add_argument("command", choices=("smatrix", "sweep", "verify"))
    ap.add_argument("--config", required=True, help="path to the JSON configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides the config)")
    ap.add_argument("--jobs", type=int, default=None, help="worker processes for grid cells")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.jobs is not None and args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        out_dir = args.out or os.environ.get(OUT_ENV) or cfg.output_dir
        if args.command == "smatrix":
            doc, files = cmd_smatrix(cfg)
            _write(out_dir, files)
            sys.stdout.write(_dump(doc))
            return EXIT_OK
        if args.command == "sweep":
            summary, files = cmd_sweep(cfg, args.jobs)
            paths = _write(out_dir, files)
            print(f"{summary}; wrote {paths[0]}")
            return EXIT_OK
        reports, files = cmd_verify(cfg, args.jobs)
        paths = _write(out_dir, files)
        for r in reports:
            print(r.summary())
        print(f"report: {paths[0]}")
        failing = [r for r in reports if not r.passed]
        if failing:
            print(f"FAILED: {failing[0].name}: {failing[0].first_failure}", file=sys.stderr)
            return EXIT_ASSERT
        return EXIT_OK
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except _HypothesisFailure as exc:
        sys.stderr.write(_dump(exc.report.as_dict()))
        print("potential fails the hypothesis check", file=sys.stderr)
        return EXIT_ASSERT
    except _CellFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HypothesisError as exc:
        print(f"hypothesis error: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (ConvergenceError, ConditioningError, DomainError, Inv2ScatterError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
