"""Dimer lattice material data and polynomial spring forces.

A dimer alternates two masses (1 and ``m``) and two springs. The spring
forces are polynomials with no constant term,

    V1'(r) = r + a12 r^2 + a13 r^3 + ...
    V2'(r) = kappa r + beta r^2 + a23 r^3 + ...

Coefficients are stored in ascending order starting at the linear term, so
``force1=(1.0, 1.0)`` is ``r + r**2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

__all__ = [
    "Material",
    "ValidationReport",
    "validate",
    "require_valid",
    "force",
    "force_deriv",
    "potential",
    "force_coefficients",
]


@dataclass(frozen=True)
class Material:
    """Immutable description of a dimer lattice.

    Parameters
    ----------
    m : float
        Mass of the even-indexed particles; odd-indexed particles have mass 1.
    kappa : float
        Linear stiffness of the second spring.
    force1, force2 : sequence of float
        Ascending coefficients of V1' and V2', starting at the linear term.
    max_degree : int
        Largest admissible polynomial degree of a force.
    """

    m: float
    kappa: float
    force1: tuple = (1.0, 1.0)
    force2: tuple | None = None
    max_degree: int = 3

    def __post_init__(self):
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "force1", tuple(float(v) for v in self.force1))
        f2 = self.force2 if self.force2 is not None else (self.kappa, 1.0)
        object.__setattr__(self, "force2", tuple(float(v) for v in f2))

    @classmethod
    def dimer(cls, m=1.0, kappa=2.0, beta=1.0, cubic1=0.0, cubic2=0.0,
              max_degree=3):
        """Build the standard material with optional cubic terms."""
        f1 = [1.0, 1.0]
        f2 = [kappa, beta]
        if cubic1 or cubic2:
            f1.append(cubic1)
            f2.append(cubic2)
        return cls(m=m, kappa=kappa, force1=tuple(f1), force2=tuple(f2),
                   max_degree=max_degree)

    @property
    def w(self) -> float:
        return 1.0 / self.m

    @property
    def beta(self) -> float:
        return self.force2[1] if len(self.force2) > 1 else 0.0

    @property
    def degree(self) -> int:
        """Largest polynomial degree among the two forces (at least 1)."""
        return max(_trimmed_degree(self.force1), _trimmed_degree(self.force2))

    def mass_matrix(self) -> np.ndarray:
        return np.diag([1.0, self.m])

    def scaled(self, a: float) -> "Material":
        """Material whose forces are ``a**-1 V'(a r)``.

        The degree-d coefficient is multiplied by ``a**(d-1)``. This is
        exact and regular at ``a = 0``, where only the linear terms remain.
        """
        def scale(cs):
            return tuple(c * a ** d for d, c in enumerate(cs))
        return Material(self.m, self.kappa, scale(self.force1),
                        scale(self.force2), self.max_degree)

    def to_dict(self) -> dict:
        return {"m": self.m, "kappa": self.kappa, "force1": list(self.force1),
                "force2": list(self.force2), "max_degree": self.max_degree}


def _trimmed_degree(cs: Sequence[float]) -> int:
    deg = len(cs)
    while deg > 1 and cs[deg - 1] == 0.0:
        deg -= 1
    return deg


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def validate(material: Material) -> ValidationReport:
    """Check the standing hypotheses; never raises."""
    bad = []
    m, kappa = material.m, material.kappa
    if not (np.isfinite(m) and m > 0):
        bad.append("m must be a positive finite number")
    if not (np.isfinite(kappa) and kappa > 0):
        bad.append("kappa must be a positive finite number")
    if not bad and not (1.0 / m > 1.0 or kappa > 1.0):
        bad.append("w>1 or kappa>1 fails")
    for name, cs in (("force1", material.force1), ("force2", material.force2)):
        if len(cs) == 0:
            bad.append(f"{name} is empty")
            continue
        if not all(np.isfinite(cs)):
            bad.append(f"{name} has non-finite coefficients")
        if len(cs) > material.max_degree:
            bad.append(f"{name} degree {len(cs)} exceeds max_degree "
                       f"{material.max_degree}")
    if material.force1 and material.force1[0] != 1.0:
        bad.append("force1 linear coefficient must equal 1")
    if material.force2 and material.force2[0] != kappa:
        bad.append("force2 linear coefficient must equal kappa")
    return ValidationReport(not bad, bad)


def require_valid(material: Material) -> Material:
    """Return ``material`` or raise ConfigurationError listing violations."""
    from .errors import ConfigurationError

    report = validate(material)
    if not report.ok:
        raise ConfigurationError("invalid material: " + "; ".join(report.violations))
    return material


def force_coefficients(material: Material, which: int) -> np.ndarray:
    """Full ascending coefficient array of V_which' including the zero constant."""
    if which == 1:
        cs = material.force1
    elif which == 2:
        cs = material.force2
    else:
        raise ValueError("which must be 1 or 2")
    return np.concatenate(([0.0], cs))


def force(material: Material, which: int, r):
    """Evaluate the spring force V_which'(r)."""
    return P.polyval(r, force_coefficients(material, which))


def force_deriv(material: Material, which: int, order: int, r):
    """Evaluate the ``order``-th derivative of V_which' (order 1 is V'')."""
    if order < 0:
        raise ValueError("order must be non-negative")
    return P.polyval(r, P.polyder(force_coefficients(material, which), order))


def potential(material: Material, which: int, r):
    """Evaluate the spring potential V_which(r), normalized by V(0) = 0."""
    return P.polyval(r, P.polyint(force_coefficients(material, which)))
