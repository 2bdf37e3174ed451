"""Linearization of the traveling-wave operator about the zero profile.

At speed c and frequency omega the linear operator acts on mode k through
the 2x2 symbol Ltilde_c(omega k), where

    Ltilde_c(K) = -c^2 K^2 M + Dtilde(K),
    Dtilde(K)  = [[1 + kappa, -(e^{iK} + kappa e^{-iK})],
                  [-(kappa e^{iK} + e^{-iK}), 1 + kappa]],

and M = diag(1, m). The critical frequency omega_c makes Ltilde_c(omega_c)
singular, which produces a two-dimensional kernel on modes k = +-1 besides
the constant vector (1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, InvariantError
from .model import Material
from .spectral import (MultiplierSymbol, PeriodicField, apply_symbol,
                       inner_product, shift, sobolev_norm)

__all__ = [
    "LinearData",
    "symbol_D",
    "symbol_D_prime",
    "symbol_L",
    "symbol_L_prime",
    "dispersion",
    "lambda_plus_prime",
    "speed_of_sound",
    "critical_frequency",
    "omega_bracket",
    "kernel_basis",
    "transversality",
    "transversality_closed_form",
    "coercive_solve",
    "coercivity_bound",
    "v2_lower_bound",
    "L_table",
    "L_prime_table",
    "apply_L",
    "apply_L_prime",
    "apply_L_adjoint",
    "project_out_kernel",
]


# symbols -----------------------------------------------------------------

def symbol_D(material: Material, K) -> np.ndarray:
    """Dtilde(K), shape K.shape + (2, 2). Hermitian for real K."""
    K = np.asarray(K, dtype=float)
    kap = material.kappa
    e = np.exp(1j * K)
    out = np.empty(K.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = 1.0 + kap
    out[..., 1, 1] = 1.0 + kap
    out[..., 0, 1] = -(e + kap / e)
    out[..., 1, 0] = -(kap * e + 1.0 / e)
    return out


def symbol_D_prime(material: Material, K) -> np.ndarray:
    """Componentwise K-derivative of Dtilde."""
    K = np.asarray(K, dtype=float)
    kap = material.kappa
    e = np.exp(1j * K)
    out = np.zeros(K.shape + (2, 2), dtype=complex)
    out[..., 0, 1] = -1j * (e - kap / e)
    out[..., 1, 0] = -1j * (kap * e - 1.0 / e)
    return out


def symbol_L(material: Material, c: float, K) -> np.ndarray:
    """Ltilde_c(K) = -c^2 K^2 M + Dtilde(K)."""
    K = np.asarray(K, dtype=float)
    out = symbol_D(material, K)
    c2K2 = c * c * K * K
    out[..., 0, 0] -= c2K2
    out[..., 1, 1] -= material.m * c2K2
    return out


def symbol_L_prime(material: Material, c: float, K) -> np.ndarray:
    """d/dK of Ltilde_c(K) = -2 c^2 K M + Dtilde'(K)."""
    K = np.asarray(K, dtype=float)
    out = symbol_D_prime(material, K)
    out[..., 0, 0] -= 2 * c * c * K
    out[..., 1, 1] -= 2 * c * c * K * material.m
    return out


def L_table(material: Material, c: float, omega: float, N: int) -> np.ndarray:
    """Symbol of L_c[omega] on modes k = 0..N, shape (N + 1, 2, 2)."""
    return symbol_L(material, c, omega * np.arange(N + 1))


def L_prime_table(material: Material, c: float, omega: float, N: int) -> np.ndarray:
    """Symbol k Ltilde_c'(omega k) of the omega-derivative of L_c[omega]."""
    k = np.arange(N + 1)
    return k[:, None, None] * symbol_L_prime(material, c, omega * k)


# dispersion ---------------------------------------------------------------

def _rho(kap, w, K):
    return np.sqrt((1 + w) ** 2 * (1 - kap) ** 2
                   + 4 * kap * ((1 - w) ** 2 + 4 * w * np.cos(K) ** 2))


def dispersion(material: Material, K, check: bool = True):
    """Eigenvalues of M^-1 Dtilde(K) in closed form.

    Returns ``(lambda_minus, lambda_plus, rho)``. The acoustic branch is
    evaluated in the rationalized form 8 kappa w sin^2 K / (S + rho), with
    S = (1 + kappa)(1 + w), which equals (S - rho) / 2 but keeps full
    relative accuracy near K = 0.

    With ``check`` the values are compared against a direct Hermitian
    eigensolve of M^-1/2 Dtilde M^-1/2.
    """
    K = np.asarray(K, dtype=float)
    kap, w = material.kappa, material.w
    S = (1 + kap) * (1 + w)
    rho = _rho(kap, w, K)
    lam_p = 0.5 * (S + rho)
    lam_m = 8 * kap * w * np.sin(K) ** 2 / (S + rho)
    if check:
        sq = np.array([1.0, np.sqrt(w)])
        A = symbol_D(material, K) * sq[:, None] * sq[None, :]
        ev = np.linalg.eigvalsh(A)
        err = max(np.max(np.abs(ev[..., 0] - lam_m)), np.max(np.abs(ev[..., 1] - lam_p)))
        if err > 1e-10 * S:
            raise InvariantError(
                f"dispersion closed form disagrees with eigensolve by {err:.3e}")
    return lam_m, lam_p, rho


def lambda_plus_prime(material: Material, K):
    """Derivative of the optical branch, -4 kappa w sin(2K) / rho(K)."""
    kap, w = material.kappa, material.w
    return -4 * kap * w * np.sin(2 * np.asarray(K, dtype=float)) / _rho(kap, w, K)


def speed_of_sound(material: Material) -> float:
    """c_star = sqrt(4 kappa w / ((1 + kappa)(1 + w)))."""
    kap, w = material.kappa, material.w
    return float(np.sqrt(4 * kap * w / ((1 + kap) * (1 + w))))


def omega_bracket(material: Material, c: float) -> tuple[float, float]:
    """Interval guaranteed to contain omega_c."""
    kap, w = material.kappa, material.w
    lam_half = dispersion(material, np.pi / 2, check=False)[1]
    return (float(np.sqrt(lam_half) / abs(c)),
            float(np.sqrt((1 + kap) * (1 + w)) / abs(c)))


def critical_frequency(material: Material, c: float, n_newton: int = 5,
                       n_samples: int = 2000) -> float:
    """Unique K > 0 with c^2 K^2 = lambda_plus(K).

    Bisection on the guaranteed bracket, then Newton polishing. The
    uniqueness of the root on (0, upper] is spot-checked by sampling signs.
    """
    c_star = speed_of_sound(material)
    if not abs(c) > c_star:
        raise DomainError(f"subsonic speed: |c|={abs(c)!r} <= c_star={c_star!r}")
    c2 = c * c

    def f(K):
        return c2 * K * K - dispersion(material, K, check=False)[1]

    lo, hi = omega_bracket(material, c)
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise InvariantError("critical-frequency function has no sign change on bracket")
    K = bisect(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    for _ in range(n_newton):
        fk = f(K)
        if fk == 0.0:
            break
        step = fk / (2 * c2 * K - lambda_plus_prime(material, K))
        K_new = K - step
        if not lo <= K_new <= hi:
            break
        if abs(f(K_new)) >= abs(fk):
            break
        K = K_new
    K = float(K)
    if abs(f(K)) >= 1e-13 * max(1.0, c2 * K * K):
        raise InvariantError(f"critical frequency residual {f(K):.3e} above 1e-13")
    xs = np.linspace(hi / n_samples, hi, n_samples)
    signs = np.sign(f(xs))
    changes = int(np.count_nonzero(np.diff(signs[signs != 0])))
    if changes != 1:
        raise InvariantError(f"expected one sign change of the dispersion "
                             f"function on (0, {hi}], found {changes}")
    return K


# kernel -------------------------------------------------------------------

@dataclass(frozen=True)
class LinearData:
    """Everything the linearization at a fixed speed provides.

    ``transversality`` is the numerically computed <L' nu1, nu1>;
    ``transversality_closed`` the closed-form value. ``coercivity_bound``
    is a c-independent bound on ||L^-1 eta||_{H^2} / ||eta||_{L^2} on the
    complement of the kernel.
    """

    material: Material
    c: float
    N: int
    c_star: float
    omega_c: float
    mu_c: np.ndarray
    N_c: float
    nu0: PeriodicField
    nu1: PeriodicField
    nu2: PeriodicField
    transversality: float
    transversality_closed: float
    lambda_plus_prime: float
    breakdown: dict
    coercivity_bound: float
    L: np.ndarray = field(repr=False)
    L_prime: np.ndarray = field(repr=False)

    @property
    def kernel(self):
        return (self.nu0, self.nu1, self.nu2)

    def to_dict(self) -> dict:
        b = self.breakdown
        return {
            "c": self.c,
            "N": self.N,
            "c_star": self.c_star,
            "omega_c": self.omega_c,
            "mu_c": _cplx_list(self.mu_c),
            "N_c": self.N_c,
            "transversality": self.transversality,
            "transversality_closed_form": self.transversality_closed,
            "lambda_plus_prime": self.lambda_plus_prime,
            "coercivity_bound": self.coercivity_bound,
            "breakdown": {"z1": b["z1"], "z2": _cplx(b["z2"]),
                          "v1": _cplx(b["v1"]), "v2": b["v2"],
                          "v2_lower_bound": b["v2_lower_bound"]},
            "nu0": self.nu0.to_records(),
            "nu1": self.nu1.to_records(),
            "nu2": self.nu2.to_records(),
        }


def _cplx(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _cplx_list(v):
    return [_cplx(z) for z in v]


def v2_lower_bound(material: Material) -> float:
    """c-independent lower bound for |1 + kappa - c^2 omega_c^2|.

    Uses v2 = -((1 + kappa)(w - 1) + rho(omega_c)) / 2 and rho >= rho(pi/2).
    """
    kap, w = material.kappa, material.w
    rho_min = _rho(kap, w, np.pi / 2)
    return float(0.5 * ((1 + kap) * (w - 1) + rho_min))


def coercivity_bound(material: Material) -> float:
    """c-independent bound on ||psi||_{H^2} / ||eta||_{L^2} for L psi = eta.

    Mode 0 contributes 1/(sqrt 2 (1 + kappa)), modes +-1 contribute
    2 / |v2|, and modes |k| >= 2 are controlled by a Neumann series around
    -c^2 omega_c^2 k^2 M, whose size is bounded below via the omega_c bracket.
    """
    kap, w = material.kappa, material.w
    c0 = 1.0 / (np.sqrt(2.0) * (1 + kap))
    c1 = 2.0 / v2_lower_bound(material)
    c2 = 2.5 * max(1.0, w) / (min(1.0, w) * (1 + kap))
    return float(max(c0, c1, c2))


def kernel_basis(material: Material, c: float, N: int = 64) -> LinearData:
    """Critical frequency, kernel basis and transversality at speed c.

    nu1 has modes +-1 with nu1hat(1) = mu_c / N_c, where
    mu_c = (e^{i omega_c} + kappa e^{-i omega_c}, 1 + kappa - c^2 omega_c^2)
    spans the null space of Ltilde_c(omega_c). nu2 = S^{-pi/2} nu1.
    """
    if N < 2:
        raise DomainError("truncation N must be at least 2")
    kap, w = material.kappa, material.w
    c_star = speed_of_sound(material)
    om = critical_frequency(material, c)
    e = np.exp(1j * om)
    v1 = e + kap / e
    v2 = 1 + kap - c * c * om * om
    mu = np.array([v1, v2], dtype=complex)
    N_c = float(np.sqrt(2.0) * np.linalg.norm(mu))

    nu0 = PeriodicField.constant(1 / np.sqrt(2), 1 / np.sqrt(2), N)
    nu1 = PeriodicField.from_modes(N, {1: mu / N_c})
    nu2 = shift(nu1, -np.pi / 2)

    L = L_table(material, c, om, N)
    Lp = L_prime_table(material, c, om, N)
    for i, nu in enumerate((nu0, nu1, nu2)):
        r = sobolev_norm(apply_symbol(L, nu))
        if r >= 1e-11:
            raise InvariantError(f"||L nu{i}|| = {r:.3e} not below 1e-11")
    _check_ortho_equivalence(nu1, nu2, N)

    trans = inner_product(apply_symbol(Lp, nu1), nu1)
    lam_pp = float(lambda_plus_prime(material, om))
    rho = float(_rho(kap, w, om))
    closed = transversality_closed_form(rho, v2, w, N_c, c, om, lam_pp)
    if abs(trans - closed) > 1e-8 * abs(closed):
        raise InvariantError(
            f"transversality numeric {trans!r} vs closed form {closed!r}")
    cross = inner_product(apply_symbol(Lp, nu1), nu2)
    if abs(cross) >= 1e-11:
        raise InvariantError(f"<L' nu1, nu2> = {cross:.3e} not below 1e-11")
    v2_low = v2_lower_bound(material)
    if abs(v2) < v2_low * (1 - 1e-12):
        raise InvariantError(f"|v2|={abs(v2)!r} below lower bound {v2_low!r}")

    breakdown = {"z1": float(-2 * c * c * om), "z2": complex(e - kap / e),
                 "v1": complex(v1), "v2": float(v2), "v2_lower_bound": v2_low}
    L.flags.writeable = False
    Lp.flags.writeable = False
    return LinearData(material=material, c=float(c), N=N, c_star=c_star,
                      omega_c=om, mu_c=mu, N_c=N_c, nu0=nu0, nu1=nu1, nu2=nu2,
                      transversality=float(trans), transversality_closed=float(closed),
                      lambda_plus_prime=lam_pp, breakdown=breakdown,
                      coercivity_bound=coercivity_bound(material), L=L, L_prime=Lp)


def _check_ortho_equivalence(nu1, nu2, N):
    # <phi, nu1> = 2 Re z and <phi, nu2> = -2 Im z with z = phihat(1).conj(nu1hat(1)),
    # so both vanish exactly when z does. Probe with the four real directions of mode 1.
    n1 = nu1.coeffs[:, 1]
    for vec in (np.array([1, 0]), np.array([1j, 0]), np.array([0, 1]), np.array([0, 1j])):
        phi = PeriodicField.from_modes(N, {1: vec})
        z = np.dot(vec, np.conj(n1))
        if (abs(inner_product(phi, nu1) - 2 * z.real) > 1e-13
                or abs(inner_product(phi, nu2) + 2 * z.imag) > 1e-13):
            raise InvariantError("kernel orthogonality equivalence fails on mode 1")


def transversality_closed_form(rho, v2, w, N_c, c, omega_c, lam_plus_prime):
    """(2 rho v2 / (w N_c^2)) (2 c^2 omega_c - lambda_plus'(omega_c))."""
    return 2 * rho * v2 / (w * N_c ** 2) * (2 * c * c * omega_c - lam_plus_prime)


def transversality(data: LinearData) -> tuple[float, float]:
    """Return (numeric, closed-form) values of <L'[omega_c] nu1, nu1>."""
    num = inner_product(apply_symbol(data.L_prime, data.nu1), data.nu1)
    return float(num), data.transversality_closed


# operators at omega_c -------------------------------------------------------

def _table(data: LinearData, table: np.ndarray, N: int) -> np.ndarray:
    if N == data.N:
        return table
    raise ValueError(f"field truncation {N} differs from LinearData N={data.N}")


def apply_L(data: LinearData, f: PeriodicField) -> PeriodicField:
    return apply_symbol(_table(data, data.L, f.N), f)


def apply_L_prime(data: LinearData, f: PeriodicField) -> PeriodicField:
    return apply_symbol(_table(data, data.L_prime, f.N), f)


def apply_L_adjoint(data: LinearData, f: PeriodicField) -> PeriodicField:
    """Adjoint of L: H^2 -> L^2 with respect to the H^2 and L^2 pairings.

    Mode k acts by (1 + k^2)^-2 Ltilde_c(omega_c k)^*.
    """
    k = np.arange(f.N + 1)
    adj = np.conj(np.swapaxes(_table(data, data.L, f.N), -1, -2))
    return apply_symbol(adj * ((1.0 + k ** 2) ** -2.0)[:, None, None], f)


def project_out_kernel(data: LinearData, eta: PeriodicField) -> PeriodicField:
    """Remove the components of eta along nu0, nu1 and nu2."""
    out = eta
    for nu in data.kernel:
        out = out - inner_product(eta, nu) * nu
    return out


def coercive_solve(data: LinearData, eta: PeriodicField, check: bool = True,
                   ortho_tol: float = 1e-10) -> PeriodicField:
    """Solve L_c[omega_c] psi = eta with psi orthogonal to the kernel.

    ``eta`` must be orthogonal to nu0, nu1, nu2 within ``ortho_tol``
    (relative to 1 + ||eta||); the small residual components are projected
    away before solving.
    """
    N = data.N
    if eta.N != N:
        eta = eta.resize(N)
    scale = 1.0 + sobolev_norm(eta)
    for i, nu in enumerate(data.kernel):
        p = inner_product(eta, nu)
        if abs(p) > ortho_tol * scale:
            raise DomainError(f"right-hand side not orthogonal to nu{i}: <eta, nu{i}> = {p:.3e}")
    eta = project_out_kernel(data, eta)
    kap = data.material.kappa
    b = data.breakdown
    v1, v2 = b["v1"], b["v2"]
    e = eta.coeffs
    psi = np.zeros_like(e)

    psi[0, 0] = e[0, 0] / (2 * (1 + kap))
    psi[1, 0] = -psi[0, 0]

    p1 = v2 * e[0, 1] / (v2 * v2 + abs(v1) ** 2)
    psi[0, 1] = p1
    psi[1, 1] = -np.conj(v1) / v2 * p1

    if N >= 2:
        blocks = data.L[2:]
        if np.min(np.abs(np.linalg.det(blocks))) == 0.0:
            raise InvariantError("singular mode block in coercive solve")
        psi[:, 2:] = np.linalg.solve(blocks, e[:, 2:].T[..., None])[..., 0].T
    out = PeriodicField(psi)

    if check:
        nrm = sobolev_norm(eta)
        res = sobolev_norm(apply_L(data, out) - eta)
        if res > 1e-10 * max(nrm, 1e-300) and nrm > 0:
            raise InvariantError(f"coercive solve residual {res:.3e} too large")
        h2 = sobolev_norm(out, 2)
        if h2 > data.coercivity_bound * nrm * (1 + 1e-10) + 1e-300:
            raise InvariantError(
                f"coercive estimate violated: {h2:.3e} > {data.coercivity_bound:.3e} * {nrm:.3e}")
    return out
