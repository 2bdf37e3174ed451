"""Reflection symmetries of mass and spring dimers.

R reflects, (R phi)(x) = phi(-x), and J swaps the two components. A mass
dimer (kappa = 1, identical springs) commutes with S_M = -R and a spring
dimer (m = 1) with S_K = -RJ. Both are involutions that anti-commute with
d/dx, which is what makes the kernel split into an even and an odd part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, InvariantError
from .linear import LinearData, apply_L_prime
from .operator import WaveProblem, energy, phi_op
from .spectral import PeriodicField, inner_product, shift, sobolev_norm

__all__ = [
    "SymmetryOp",
    "SymmetricBasis",
    "AlignedDefect",
    "apply_symmetry",
    "check_invariance",
    "symmetric_basis",
    "check_solution_symmetry",
    "symmetry_report",
    "classify",
    "spring_prediction",
]

KINDS = ("mass", "spring")
CLASSIFY_TOL = 1e-8


@dataclass(frozen=True)
class SymmetryOp:
    """``kind="mass"`` is -R, ``kind="spring"`` is -RJ."""

    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"symmetry kind must be one of {KINDS}, got {self.kind!r}")

    def __call__(self, phi: PeriodicField) -> PeriodicField:
        return apply_symmetry(self, phi)


def apply_symmetry(op: SymmetryOp, phi: PeriodicField) -> PeriodicField:
    """Coefficient action: R sends fhat(k) to fhat(-k) = conj(fhat(k))."""
    c = -np.conj(phi.coeffs)
    if op.kind == "spring":
        c = c[::-1]
    return PeriodicField(c)


def _require_compatible(op: SymmetryOp, material):
    if op.kind == "mass":
        if material.kappa != 1.0:
            raise DomainError(f"mass symmetry needs kappa=1, got kappa={material.kappa!r}")
        if material.force1 != material.force2:
            raise DomainError("mass symmetry needs identical spring forces force1 == force2")
    elif material.m != 1.0:
        raise DomainError(f"spring symmetry needs m=1 (w=1), got m={material.m!r}")


def check_invariance(op: SymmetryOp, problem: WaveProblem, phi: PeriodicField,
                     omega: float) -> dict:
    """Return ||Phi(S phi) - S Phi(phi)|| and |G(S phi) - G(phi)|."""
    _require_compatible(op, problem.material)
    lhs = phi_op(problem, op(phi), omega)
    rhs = op(phi_op(problem, phi, omega))
    g1 = energy(problem, op(phi), omega)[2]
    g0 = energy(problem, phi, omega)[2]
    return {"phi_defect": sobolev_norm(lhs - rhs), "energy_defect": abs(g1 - g0)}


@dataclass(frozen=True)
class SymmetricBasis:
    """Orthonormal kernel basis with S nu_plus = nu_plus, S nu_minus = -nu_minus."""

    nu_plus: PeriodicField
    nu_minus: PeriodicField
    classification: str
    transversality_plus: float

    def to_dict(self):
        return {"classification": self.classification,
                "transversality_plus": self.transversality_plus,
                "nu_plus": self.nu_plus.to_records()[:2],
                "nu_minus": self.nu_minus.to_records()[:2]}


def classify(op: SymmetryOp, data: LinearData, tol: float = CLASSIFY_TOL) -> str:
    """'fixed' if S nu1 = nu1, 'anti' if S nu1 = -nu1, else 'generic'."""
    s1 = op(data.nu1)
    if sobolev_norm(s1 - data.nu1) < tol:
        return "fixed"
    if sobolev_norm(s1 + data.nu1) < tol:
        return "anti"
    return "generic"


def spring_prediction(omega_c: float, tol: float = CLASSIFY_TOL) -> str:
    """Spring-dimer classification from the critical frequency alone.

    omega_c in 2 pi Z gives 'fixed', omega_c in pi + 2 pi Z gives 'anti'.
    """
    j = np.rint(omega_c / np.pi)
    if abs(omega_c - j * np.pi) < tol:
        return "fixed" if int(j) % 2 == 0 else "anti"
    return "generic"


def symmetric_basis(op: SymmetryOp, data: LinearData) -> SymmetricBasis:
    """Split span(nu1, nu2) into S-even and S-odd unit vectors."""
    _require_compatible(op, data.material)
    nu1, nu2 = data.nu1, data.nu2
    kind = classify(op, data)
    if kind == "fixed":
        plus, minus = nu1, nu2
    elif kind == "anti":
        plus, minus = nu2, nu1
    else:
        p = nu1 + op(nu1)
        q = nu2 - op(nu2)
        np_, nq = sobolev_norm(p), sobolev_norm(q)
        if np_ < 1e-10 or nq < 1e-10:
            raise InvariantError("degenerate symmetric combination in generic case")
        plus, minus = p / np_, q / nq
    if sobolev_norm(op(plus) - plus) > 1e-12 or sobolev_norm(op(minus) + minus) > 1e-12:
        raise InvariantError("symmetric basis is not S-even/S-odd")
    tp = inner_product(apply_L_prime(data, plus), plus)
    if abs(tp - data.transversality) > 1e-10 * abs(data.transversality):
        raise InvariantError(f"<L' nu+, nu+> = {tp!r} differs from <L' nu1, nu1>")
    return SymmetricBasis(plus, minus, kind, float(tp))


@dataclass(frozen=True)
class AlignedDefect:
    defect: float
    theta: float
    unaligned: float


def check_solution_symmetry(op: SymmetryOp, phi, n_grid: int = 512) -> AlignedDefect:
    """Minimal ||S(S^theta phi) - S^theta phi|| over the phase theta.

    ``phi`` may be a field or anything with a ``profile`` attribute. Since
    S S^theta = S^-theta S, the defect equals ||S phi - S^{2 theta} phi||,
    a trigonometric polynomial in theta. It is sampled on ``n_grid``
    phases in [0, pi) and the best sample is refined by locating the zero
    of the exact theta-derivative of the squared defect.
    """
    phi = getattr(phi, "profile", phi)
    u = op(phi).coeffs
    v = phi.coeffs
    k = np.arange(phi.N + 1)
    w = np.where(k == 0, 1.0, 2.0)

    def sq(theta):
        e = np.exp(2j * np.multiply.outer(np.atleast_1d(theta), k))
        diff = u[None] - e[:, None, :] * v[None]
        return np.sum(w * np.abs(diff) ** 2, axis=(1, 2))

    def dsq(theta):
        e = np.exp(2j * k * theta)
        diff = u - e * v
        return float(np.sum(w * 2 * np.real(np.conj(diff) * (-2j * k * e * v))))

    thetas = np.pi * np.arange(n_grid) / n_grid
    vals = sq(thetas)
    i = int(np.argmin(vals))
    lo, hi = thetas[i] - np.pi / n_grid, thetas[i] + np.pi / n_grid
    if dsq(lo) < 0 < dsq(hi):
        theta = brentq(dsq, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    else:
        theta = minimize_scalar(lambda t: sq(t)[0], bounds=(lo, hi), method="bounded",
                                options={"xatol": 1e-14}).x
    aligned = shift(phi, theta)
    defect = sobolev_norm(op(aligned) - aligned)
    return AlignedDefect(defect=float(defect), theta=float(theta % np.pi),
                         unaligned=sobolev_norm(op(phi) - phi))


def symmetry_report(op: SymmetryOp, problem: WaveProblem, data: LinearData,
                    point=None) -> dict:
    """Classification, symmetric basis and defects as a JSON-ready dict."""
    basis = symmetric_basis(op, data)
    rng_field = data.nu1 + 0.5 * data.nu2
    inv = check_invariance(op, problem, rng_field, data.omega_c)
    out = {"kind": op.kind, "omega_c": data.omega_c,
           "classification": basis.classification,
           "invariance": inv,
           "basis": basis.to_dict()}
    if op.kind == "spring":
        out["predicted_classification"] = spring_prediction(data.omega_c)
    if point is not None:
        d = check_solution_symmetry(op, point)
        out["solution"] = {"a": point.a, "aligned_defect": d.defect,
                           "theta": d.theta, "unaligned_defect": d.unaligned}
    return out
