"""Nonlinear traveling-wave operator for the dimer lattice.

A profile phi = (phi1, phi2) with frequency omega and speed c solves the
traveling-wave equations when

    Phi(phi, omega) = c^2 omega^2 M phi'' - Delta_-(omega) V'(Delta_+(omega) phi) = 0,

with the difference stencils

    Delta_+ = [[-1, S^omega], [1, -S^-omega]],   Delta_- = [[1, -1], [-S^-omega, S^omega]],

and V' = (V1', V2') applied componentwise. Phi is the L2 gradient of
G = c^2 T + P (kinetic plus potential energy). All nonlinear terms are
evaluated on a grid large enough to be alias-free for polynomial forces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.fft import next_fast_len

from .errors import ConfigurationError, DomainError
from .linear import speed_of_sound, symbol_L
from .model import Material, force_coefficients, require_valid
from .spectral import PeriodicField, apply_pointwise, inner_product, min_grid

__all__ = [
    "WaveProblem",
    "FirstIntegralTrace",
    "delta_plus",
    "delta_minus",
    "phi_op",
    "phi_op_direct",
    "phi_scaled",
    "phi_linearized",
    "phi_omega_derivative",
    "quadratic_term",
    "energy",
    "first_integral",
    "lattice_residual",
    "residual_report",
]


@dataclass(frozen=True)
class WaveProblem:
    """Material, wave speed and discretization.

    ``grid`` defaults to ``max(4 N, (d + 1) N + 1)`` with d the force
    degree, the smallest alias-free size for the force evaluation.
    """

    material: Material
    c: float
    N: int = 64
    grid: int | None = None

    def __post_init__(self):
        require_valid(self.material)
        c_star = speed_of_sound(self.material)
        if not abs(self.c) > c_star:
            raise DomainError(f"subsonic speed: |c|={abs(self.c)!r} <= c_star={c_star!r}")
        if self.N < 2:
            raise ConfigurationError("N must be at least 2")
        need = min_grid(self.N, self.material.degree)
        if self.grid is None:
            object.__setattr__(self, "grid", max(4 * self.N, need))
        elif self.grid < need:
            raise ConfigurationError(
                f"grid {self.grid} below (maxdeg+1)*N+1 = {need}")

    @property
    def degree(self) -> int:
        return self.material.degree


def _shift_arr(c: np.ndarray, theta: float) -> np.ndarray:
    return c * np.exp(1j * theta * np.arange(c.shape[-1]))


def delta_plus(phi: PeriodicField, omega: float) -> PeriodicField:
    """(S^w phi2 - phi1, phi1 - S^-w phi2)."""
    c = phi.coeffs
    return PeriodicField(np.stack([_shift_arr(c[1], omega) - c[0],
                                   c[0] - _shift_arr(c[1], -omega)]))


def delta_minus(f: PeriodicField, omega: float) -> PeriodicField:
    """(f1 - f2, S^w f2 - S^-w f1)."""
    c = f.coeffs
    return PeriodicField(np.stack([c[0] - c[1],
                                   _shift_arr(c[1], omega) - _shift_arr(c[0], -omega)]))


def _second_derivative_term(problem, phi, omega, material):
    k = np.arange(phi.N + 1)
    mass = np.array([1.0, material.m])[:, None]
    return -(problem.c * omega) ** 2 * mass * k ** 2 * phi.coeffs


def _forces(material, r: PeriodicField, grid, N_out=None) -> PeriodicField:
    return apply_pointwise(r, force_coefficients(material, 1),
                           force_coefficients(material, 2),
                           degree=max(material.degree, 1), grid=grid, N_out=N_out)


def _grid_for(problem, N_in, N_out):
    need = max(problem.degree, 1) * N_in + N_out + 1
    if N_in == problem.N and N_out == problem.N:
        return problem.grid
    return next_fast_len(need, real=True)


def phi_op(problem: WaveProblem, phi: PeriodicField, omega: float,
           material: Material | None = None, N_out: int | None = None) -> PeriodicField:
    """Evaluate Phi(phi, omega) in the stencil form.

    ``material`` overrides the problem's forces (used for amplitude
    scaling). ``N_out`` larger than N returns more of the (band-limited)
    exact output; by default the result is truncated to N.
    """
    mat = problem.material if material is None else material
    N_out = phi.N if N_out is None else N_out
    F = _forces(mat, delta_plus(phi, omega), _grid_for(problem, phi.N, N_out), N_out)
    out = -delta_minus(F, omega).coeffs
    out[:, : phi.N + 1] += _second_derivative_term(problem, phi, omega, mat)[:, : N_out + 1]
    return PeriodicField(out)


def phi_op_direct(problem: WaveProblem, phi: PeriodicField, omega: float,
                  material: Material | None = None) -> PeriodicField:
    """Evaluate Phi componentwise, applying shifts before the forces.

    component 1: c^2 w^2 phi1'' + V2'(phi1 - S^-w phi2) - V1'(S^w phi2 - phi1)
    component 2: m c^2 w^2 phi2'' + V1'(phi2 - S^-w phi1) - V2'(S^w phi1 - phi2)
    """
    mat = problem.material if material is None else material
    c = phi.coeffs
    args = PeriodicField(np.stack([c[0] - _shift_arr(c[1], -omega),
                                   c[1] - _shift_arr(c[0], -omega)]))
    args_adv = PeriodicField(np.stack([_shift_arr(c[1], omega) - c[0],
                                       _shift_arr(c[0], omega) - c[1]]))
    f1, f2 = force_coefficients(mat, 1), force_coefficients(mat, 2)
    deg = max(mat.degree, 1)
    # V2' on (phi1 - S^-w phi2) and V1' on (phi2 - S^-w phi1)
    G = _grid_for(problem, phi.N, phi.N)
    A = apply_pointwise(args, f2, f1, degree=deg, grid=G).coeffs
    # V1' on (S^w phi2 - phi1) and V2' on (S^w phi1 - phi2)
    B = apply_pointwise(args_adv, f1, f2, degree=deg, grid=G).coeffs
    return PeriodicField(_second_derivative_term(problem, phi, omega, mat) + A - B)


def phi_scaled(problem: WaveProblem, phi: PeriodicField, omega: float, a: float):
    """a^-1 Phi(a phi, omega), evaluated exactly (also at a = 0)."""
    return phi_op(problem, phi, omega, material=problem.material.scaled(a))


def phi_linearized(problem: WaveProblem, phi: PeriodicField, omega: float,
                   eta: PeriodicField) -> PeriodicField:
    """Derivative of Phi in phi at (phi, omega) applied to eta:

    c^2 w^2 M eta'' - Delta_-(V''(Delta_+ phi) Delta_+ eta).
    """
    mat = problem.material
    G = _grid_for(problem, phi.N, phi.N)
    r = delta_plus(phi, omega).to_samples(G)
    s = delta_plus(eta, omega).to_samples(G)
    d1 = P.polyder(force_coefficients(mat, 1))
    d2 = P.polyder(force_coefficients(mat, 2))
    prod = np.stack([P.polyval(r[0], d1) * s[0], P.polyval(r[1], d2) * s[1]])
    F = PeriodicField.from_samples(prod, phi.N)
    out = -delta_minus(F, omega).coeffs + _second_derivative_term(problem, eta, omega, mat)
    return PeriodicField(out)


def phi_omega_derivative(problem: WaveProblem, phi: PeriodicField, omega: float):
    """Partial derivative of Phi with respect to omega.

    Uses d/dw S^{+-w} = +-d/dx S^{+-w} on both stencils.
    """
    mat = problem.material
    N, G = phi.N, _grid_for(problem, phi.N, phi.N)
    c = phi.coeffs
    k = np.arange(N + 1)
    dphi2 = 1j * k * c[1]
    r = delta_plus(phi, omega).to_samples(G)
    dr = PeriodicField(np.stack([_shift_arr(dphi2, omega),
                                 _shift_arr(dphi2, -omega)])).to_samples(G)
    d1 = P.polyder(force_coefficients(mat, 1))
    d2 = P.polyder(force_coefficients(mat, 2))
    dF = PeriodicField.from_samples(
        np.stack([P.polyval(r[0], d1) * dr[0], P.polyval(r[1], d2) * dr[1]]), N)
    F = _forces(mat, delta_plus(phi, omega), G).coeffs
    dmin = np.zeros_like(F)
    dmin[1] = 1j * k * (_shift_arr(F[1], omega) + _shift_arr(F[0], -omega))
    mass = np.array([1.0, mat.m])[:, None]
    kin = -2 * problem.c ** 2 * omega * mass * k ** 2 * c
    return PeriodicField(kin - delta_minus(PeriodicField(dF.coeffs), omega).coeffs - dmin)


def quadratic_term(problem: WaveProblem, phi: PeriodicField, omega: float):
    """Q(phi, phi) = -Delta_-(q (Delta_+ phi)^2) with q the r^2 coefficients."""
    mat = problem.material
    q1 = mat.force1[1] if len(mat.force1) > 1 else 0.0
    q2 = mat.force2[1] if len(mat.force2) > 1 else 0.0
    sq = apply_pointwise(delta_plus(phi, omega), [0.0, 0.0, q1], [0.0, 0.0, q2],
                         grid=_grid_for(problem, phi.N, phi.N))
    return -delta_minus(sq, omega)


def energy(problem: WaveProblem, phi: PeriodicField, omega: float):
    """Return (T, P, G) with G = c^2 T + P.

    T = (omega^2 / 2) <M phi'', phi> and P is the mean over one period of
    V1(r1) + V2(r2), r = Delta_+ phi.
    """
    mat = problem.material
    k = np.arange(phi.N + 1)
    mass = np.array([1.0, mat.m])[:, None]
    Mphi2 = PeriodicField(-mass * k ** 2 * phi.coeffs)
    T = 0.5 * omega ** 2 * inner_product(Mphi2, phi)
    G = next_fast_len((mat.degree + 1) * phi.N + 1, real=True)
    r = delta_plus(phi, omega).to_samples(G)
    pot = (P.polyval(r[0], P.polyint(force_coefficients(mat, 1)))
           + P.polyval(r[1], P.polyint(force_coefficients(mat, 2))))
    Pot = float(np.mean(pot))
    return float(T), Pot, float(problem.c ** 2 * T + Pot)


@dataclass(frozen=True)
class FirstIntegralTrace:
    """Samples of J_c(phi, omega) on a uniform grid.

    Attributes
    ----------
    x, J, I : ndarray
        Grid points, values of the first integral, and its advance-delay
        integral part.
    variation : float
        max J - min J.
    phi_dot_dphi : float
        <Phi(phi, omega), phi'>.
    mean_dJ : float
        Grid mean of dJ/dx, i.e. (1/2 pi) times its integral over a period.
    pointwise_defect : float
        max |Phi . phi' - dJ/dx| on the grid, using the untruncated Phi.
    """

    x: np.ndarray = field(repr=False)
    J: np.ndarray = field(repr=False)
    I: np.ndarray = field(repr=False)
    variation: float
    phi_dot_dphi: float
    mean_dJ: float
    pointwise_defect: float


def _antiderivative_delay(g: np.ndarray, omega: float) -> np.ndarray:
    """Samples of int_x^{x - omega} g(s) ds for periodic samples g."""
    G = g.shape[-1]
    gh = np.fft.rfft(g) / G
    k = np.arange(gh.shape[-1])
    Ih = np.empty_like(gh)
    Ih[0] = -omega * gh[0]
    kk = k[1:]
    Ih[1:] = (np.exp(-1j * kk * omega) - 1.0) * gh[1:] / (1j * kk)
    return np.fft.irfft(Ih * G, n=G)


def first_integral(problem: WaveProblem, phi: PeriodicField, omega: float) -> FirstIntegralTrace:
    """Evaluate the first integral J_c along one period.

    J = c^2 w^2 ((phi1')^2 + m (phi2')^2) / 2 + V1(phi2 - S^-w phi1)
        + V2(phi1 - S^-w phi2) + I,
    I = int_x^{x-w} V1'(S^w phi2 - phi1) phi1' + int_x^{x-w} V2'(S^w phi1 - phi2) phi2'.
    The grid holds every integrand exactly, so I is computed spectrally.
    """
    mat = problem.material
    N, d = phi.N, mat.degree
    band = (d + 1) * N
    G = next_fast_len(2 * band + 1, real=True)
    c = phi.coeffs
    k = np.arange(N + 1)
    x = 2 * np.pi * np.arange(G) / G

    def samples(arr):
        return PeriodicField(arr).to_samples(G)

    dphi = samples(1j * k * c)
    back = samples(np.stack([c[1] - _shift_arr(c[0], -omega),
                             c[0] - _shift_arr(c[1], -omega)]))
    adv = samples(np.stack([_shift_arr(c[1], omega) - c[0],
                            _shift_arr(c[0], omega) - c[1]]))
    f1, f2 = force_coefficients(mat, 1), force_coefficients(mat, 2)
    V1, V2 = P.polyint(f1), P.polyint(f2)
    g = P.polyval(adv[0], f1) * dphi[0] + P.polyval(adv[1], f2) * dphi[1]
    I = _antiderivative_delay(g, omega)
    cw2 = (problem.c * omega) ** 2
    J = (0.5 * cw2 * (dphi[0] ** 2 + mat.m * dphi[1] ** 2)
         + P.polyval(back[0], V1) + P.polyval(back[1], V2) + I)

    Jh = np.fft.rfft(J) / G
    dJ = np.fft.irfft(1j * np.arange(Jh.size) * Jh * G, n=G)
    phi_full = phi_op(problem, phi, omega, N_out=d * N)
    lhs = np.sum(phi_full.to_samples(G) * dphi, axis=0)
    dphi_field = PeriodicField(1j * k * c)
    return FirstIntegralTrace(
        x=x, J=J, I=I, variation=float(J.max() - J.min()),
        phi_dot_dphi=inner_product(phi_op(problem, phi, omega), dphi_field),
        mean_dJ=float(np.mean(dJ)),
        pointwise_defect=float(np.max(np.abs(lhs - dJ))))


def lattice_residual(problem: WaveProblem, point, samples) -> float:
    """Largest Newton-law residual of the lattice at sampled (j, t).

    ``point`` provides ``profile`` (the field phi) and ``omega``. The
    displacement is u_j(t) = phi_1(omega (j - c t)) for odd j and
    phi_2(omega (j - c t)) for even j; odd sites have mass 1 and spring V1
    to the right, even sites have mass m and spring V2 to the right.
    """
    phi, omega = point.profile, point.omega
    mat = problem.material
    c = problem.c
    samples = np.asarray(samples, dtype=float).reshape(-1, 2)
    j = np.rint(samples[:, 0]).astype(int)
    t = samples[:, 1]
    X = j - c * t
    odd = (j % 2) == 1
    comp = np.where(odd, 0, 1)
    other = 1 - comp
    vals_c = phi.evaluate(omega * X)
    vals_p = phi.evaluate(omega * (X + 1))
    vals_m = phi.evaluate(omega * (X - 1))
    acc = phi.evaluate(omega * X, order=2)
    idx = np.arange(len(j))
    u = vals_c[comp, idx]
    up = vals_p[other, idx]
    um = vals_m[other, idx]
    udd = (c * omega) ** 2 * acc[comp, idx]
    mass = np.where(odd, 1.0, mat.m)
    right = np.where(odd, 1, 2)
    f1, f2 = force_coefficients(mat, 1), force_coefficients(mat, 2)

    def V(which, r):
        return np.where(which == 1, P.polyval(r, f1), P.polyval(r, f2))

    res = mass * udd - V(right, up - u) + V(3 - right, u - um)
    return float(np.max(np.abs(res), initial=0.0))


def residual_report(problem: WaveProblem, point, samples) -> dict:
    """Residual diagnostics of a solved profile, keyed as in the JSON report."""
    phi, omega = point.profile, point.omega
    Phi = phi_op(problem, phi, omega)
    N = phi.N
    k = np.arange(N + 1)
    dphi = PeriodicField(1j * k * phi.coeffs)
    nu0 = PeriodicField.constant(1 / np.sqrt(2), 1 / np.sqrt(2), N)
    trace = first_integral(problem, phi, omega)
    return {
        "phi_residual_l2": float(np.sqrt(inner_product(Phi, Phi))),
        "derivative_orthogonality": abs(inner_product(Phi, dphi)),
        "nu0_orthogonality": abs(inner_product(Phi, nu0)),
        "jc_variation": trace.variation,
        "lattice_residual_max": lattice_residual(problem, point, samples),
    }


def linear_symbol_table(problem: WaveProblem, omega: float, N: int | None = None):
    """Symbol table of L_c[omega] on modes 0..N for this problem."""
    N = problem.N if N is None else N
    return symbol_L(problem.material, problem.c, omega * np.arange(N + 1))
