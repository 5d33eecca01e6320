"""Semiclassical scattering for one-dimensional barriers with inverse-square tails.

The top-level namespace re-exports the objects most callers need; the
submodules hold the full API.
"""
from .errors import (ConditioningError, ConvergenceError, DomainError, HypothesisError,
                     Inv2ScatterError, NoTurningPointError, UnsupportedError)
from .potential import (ModifiedPotential, PotentialSpec, barrier_simple, check_hypotheses,
                        rational, sech2_validation, spec_from_dict, sym2, turning_points,
                        user_table)
from .action import ActionData, compute_actions
from .scattering import PROVENANCES, ScatteringMatrix
from .reference import jost_reference, poschl_teller_transmission, smatrix_reference
from .airy_connect import smatrix_leading, smatrix_wkb
from .bessel_nf import smatrix_bessel

__version__ = "0.1.0"

__all__ = [
    "ActionData", "ConditioningError", "ConvergenceError", "DomainError", "HypothesisError",
    "Inv2ScatterError", "ModifiedPotential", "NoTurningPointError", "PROVENANCES",
    "PotentialSpec", "ScatteringMatrix", "UnsupportedError", "barrier_simple",
    "check_hypotheses", "compute_actions", "jost_reference", "poschl_teller_transmission",
    "rational", "sech2_validation", "smatrix_bessel", "smatrix_leading", "smatrix_reference",
    "smatrix_wkb", "spec_from_dict", "sym2", "turning_points", "user_table",
]
