"""Scattering-matrix record shared by the reference and semiclassical routes.

Conventions: ``f+ ~ e^{ikx}`` at ``+inf``, ``f- ~ e^{-ikx}`` at ``-inf`` with
``k = sqrt(E)/hbar``.  A wave incident from the right obeys
``t f- = conj(f+) + r_minus f+`` and one from the left
``t f+ = conj(f-) + r_plus f-``.  Then

    t       = -2i sqrt(E) / (hbar W(f+, f-)),
    r_minus = -W(conj f+, f-) / W(f+, f-),
    r_plus  = -W(conj f-, f+) / W(f-, f+).

``t`` is stored through its complex logarithm because ``|t| ~ e^{-S/hbar}``
underflows double precision for small ``hbar``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

PROVENANCES = ("reference", "wkb-leading", "wkb-refined")


@dataclass(frozen=True)
class ScatteringMatrix:
    """Transmission and reflection amplitudes at one ``(E, hbar)``."""

    E: float
    hbar: float
    log_t: complex
    r_plus: complex
    r_minus: complex
    provenance: str

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def t(self) -> complex:
        return cmath.exp(self.log_t)

    @property
    def log_abs_t(self) -> float:
        return self.log_t.real

    @property
    def log10_abs_t(self) -> float:
        return self.log_t.real / math.log(10.0)

    @property
    def arg_t(self) -> float:
        return math.remainder(self.log_t.imag, 2.0 * math.pi)

    @property
    def unitarity_defect(self) -> float:
        """``|t|^2 + |r_plus|^2 - 1`` (signed)."""
        return (abs(self.r_plus) ** 2 - 1.0) + math.exp(2.0 * self.log_t.real)

    @property
    def unitarity_defect_minus(self) -> float:
        return (abs(self.r_minus) ** 2 - 1.0) + math.exp(2.0 * self.log_t.real)

    def relative_error(self, other: "ScatteringMatrix") -> tuple[float, float, float]:
        """``|X/X_other - 1|`` for ``t``, ``r_minus`` and ``r_plus``."""
        et = abs(cmath.exp(self.log_t - other.log_t) - 1.0)
        em = abs(self.r_minus / other.r_minus - 1.0)
        ep = abs(self.r_plus / other.r_plus - 1.0)
        return et, em, ep

    def as_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "E": self.E,
            "hbar": self.hbar,
            "re_log_t": self.log_t.real,
            "im_log_t": self.log_t.imag,
            "r_plus": [self.r_plus.real, self.r_plus.imag],
            "r_minus": [self.r_minus.real, self.r_minus.imag],
        }


def smatrix_from_jost(E: float, hbar: float, log_fp: complex, up: complex,
                      log_fm: complex, um: complex, provenance: str) -> ScatteringMatrix:
    """Assemble the S-matrix from Jost data at a common point ``x = 0``.

    ``log_f`` is the complex logarithm of the Jost value and ``u = f'/f``.
    Writing every Wronskian as ``f+ f- (u- - u+)`` keeps the computation
    free of cancellation and of overflow.
    """
    d = um - up
    if d == 0:
        from .errors import ConditioningError
        raise ConditioningError("Jost solutions are linearly dependent at x = 0")
    k = math.sqrt(E) / hbar
    log_t = cmath.log(-2j * k / d) - log_fp - log_fm
    # conj(f+)/f+ and conj(f-)/f- are pure phases
    r_minus = -cmath.exp(-2j * log_fp.imag) * (um - up.conjugate()) / d
    r_plus = -cmath.exp(-2j * log_fm.imag) * (um.conjugate() - up) / d
    return ScatteringMatrix(E=E, hbar=hbar, log_t=log_t, r_plus=r_plus,
                            r_minus=r_minus, provenance=provenance)
