"""Small-amplitude periodic traveling waves by a projected fixed-point scheme.

Write a solution as phi = a (nu1 + psi), omega = omega_c + s, with psi
orthogonal to the kernel {nu0, nu1, nu2}. Dividing Phi by a gives the
exact rearrangement

    L psi + s L' nu1 = R(psi, s, a),
    R(psi, s, a) = L psi + s L' nu1 - a^-1 Phi(a (nu1 + psi), omega_c + s),

with L = L_c[omega_c] and L' its omega-derivative. Projecting onto the
kernel complement gives a contraction for psi, and pairing with nu1 gives
the frequency shift. The nu2 equation closes automatically because
<Phi(phi), phi'> = 0 for every phi.

``a^-1 Phi(a .)`` is evaluated with forces rescaled coefficientwise, which
is exact and stays regular at a = 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .linear import (LinearData, apply_L, apply_L_prime, coercive_solve,
                     kernel_basis, omega_bracket, project_out_kernel,
                     speed_of_sound)
from .model import Material
from .parallel import pmap
from .operator import (WaveProblem, phi_linearized, phi_omega_derivative,
                       phi_op, phi_scaled, quadratic_term)
from .spectral import PeriodicField, derivative, inner_product, sobolev_norm

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "BranchPoint",
    "Branch",
    "LongWaveParams",
    "LongWaveResult",
    "project_kernel",
    "remainder_R",
    "fixed_point_step",
    "lyapunov_center_step",
    "amplitude_cap",
    "solve_point",
    "solve_branch",
    "newton_solve",
    "longwave_branch",
]

MODES = ("fixed-point", "lyapunov-center")


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.

    Parameters
    ----------
    mode : {"fixed-point", "lyapunov-center"}
    N : int
        Fourier truncation.
    grid : int, optional
        Collocation grid; chosen automatically when omitted.
    tol : float
        Stop when ||psi_new - psi||_{H^2} + |s_new - s| (+ |gamma_new - gamma|)
        falls below this value.
    max_iter : int
    amplitudes : sequence of float, optional
        Explicit amplitude list for a branch; otherwise ``count`` equally
        spaced values up to ``a_max`` (or the cap).
    a_max, count
    relaxation : float
        Under-relaxation factor in (0, 1].
    acceptance_tol : float
        Bound on ||Phi(phi, omega)||_{L^2} required of a converged point.
    a_cap : float, optional
        Amplitude cap; defaults to ``cap_factor * |<L' nu1, nu1>| / ||Q(nu1, nu1)||``.
    """

    mode: str = "fixed-point"
    N: int = 64
    grid: int | None = None
    tol: float = 1e-12
    max_iter: int = 200
    amplitudes: tuple | None = None
    a_max: float | None = None
    count: int = 20
    relaxation: float = 1.0
    acceptance_tol: float = 1e-10
    a_cap: float | None = None
    cap_factor: float = 1e-2

    def __post_init__(self):
        from .errors import ConfigurationError

        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.tol > 0 or not self.acceptance_tol > 0:
            raise ConfigurationError("tolerances must be positive")
        if not 0 < self.relaxation <= 1:
            raise ConfigurationError("relaxation must lie in (0, 1]")
        if self.max_iter < 1 or self.count < 1:
            raise ConfigurationError("max_iter and count must be positive")
        if self.amplitudes is not None:
            object.__setattr__(self, "amplitudes", tuple(float(a) for a in self.amplitudes))


@dataclass(frozen=True)
class BranchPoint:
    """One solved wave phi = a (nu1 + psi) with frequency omega.

    ``xi`` is the normalized frequency correction (omega - omega_c) / a
    (zero at a = 0); ``freq_shift`` is omega - omega_c itself.
    """

    a: float
    omega: float
    xi: float
    freq_shift: float
    psi: PeriodicField
    profile: PeriodicField
    gamma: float | None
    residual: float
    nu2_residual: float
    orthogonality: float
    iterations: int
    converged: bool
    mode: str
    history: list = field(default_factory=list, repr=False)

    def to_dict(self, include_fields: bool = True) -> dict:
        out = {
            "a": self.a,
            "omega": self.omega,
            "xi": self.xi,
            "freq_shift": self.freq_shift,
            "gamma": self.gamma,
            "residual": self.residual,
            "nu2_residual": self.nu2_residual,
            "orthogonality": self.orthogonality,
            "psi_h2": sobolev_norm(self.psi, 2),
            "iterations": self.iterations,
            "converged": self.converged,
            "mode": self.mode,
        }
        if include_fields:
            out["psi"] = self.psi.to_records()
        return out


@dataclass(frozen=True)
class Branch:
    data: LinearData
    points: list
    cap: float
    truncated: bool
    psi_lipschitz: float
    xi_lipschitz: float
    psi_ratios: np.ndarray = field(repr=False)
    xi_ratios: np.ndarray = field(repr=False)

    @property
    def sup_psi_h2(self) -> float:
        return max((sobolev_norm(p.psi, 2) for p in self.points), default=0.0)

    @property
    def sup_xi(self) -> float:
        return max((abs(p.xi) for p in self.points), default=0.0)

    def to_dict(self) -> dict:
        return {
            "linear": self.data.to_dict(),
            "cap": self.cap,
            "cap_binding": bool(self.points) and max(abs(p.a) for p in self.points) >= self.cap * (1 - 1e-12),
            "truncated": self.truncated,
            "psi_lipschitz": self.psi_lipschitz,
            "xi_lipschitz": self.xi_lipschitz,
            "sup_psi_h2": self.sup_psi_h2,
            "sup_xi": self.sup_xi,
            "points": [p.to_dict() for p in self.points],
        }


# projections and the remainder -----------------------------------------------

def project_kernel(data: LinearData, eta: PeriodicField) -> PeriodicField:
    """Orthogonal projection onto span(nu1, nu2)."""
    return (inner_product(eta, data.nu1) * data.nu1
            + inner_product(eta, data.nu2) * data.nu2)


def _frequency_functional(data: LinearData, eta: PeriodicField) -> float:
    return inner_product(eta, data.nu1) / data.transversality


def remainder_R(problem: WaveProblem, data: LinearData, psi: PeriodicField,
                xi: float, a: float) -> PeriodicField:
    """R(psi, xi, a) = L psi + xi L' nu1 - a^-1 Phi(a (nu1 + psi), omega_c + xi).

    ``xi`` here is the frequency shift omega - omega_c. The scaled operator
    is evaluated exactly, so a = 0 gives the limit
    -(L_c[omega_c + xi] - L_c[omega_c] - xi L') (nu1 + psi) - xi L' psi.
    """
    Lp_nu1 = apply_L_prime(data, data.nu1)
    return (apply_L(data, psi) + xi * Lp_nu1
            - phi_scaled(problem, data.nu1 + psi, data.omega_c + xi, a))


def fixed_point_step(problem: WaveProblem, data: LinearData, psi: PeriodicField,
                     xi: float, a: float, relaxation: float = 1.0):
    """One sweep of the projected fixed-point map; returns (psi+, xi+)."""
    R = remainder_R(problem, data, psi, xi, a)
    Lp_nu1 = apply_L_prime(data, data.nu1)
    rhs = R - _frequency_functional(data, R) * Lp_nu1
    rhs = rhs - project_kernel(data, rhs)
    psi_new = coercive_solve(data, rhs)
    if relaxation != 1.0:
        psi_new = relaxation * psi_new + (1 - relaxation) * psi
    xi_new = _frequency_functional(data, remainder_R(problem, data, psi_new, xi, a))
    if relaxation != 1.0:
        xi_new = relaxation * xi_new + (1 - relaxation) * xi
    return psi_new, xi_new


def lyapunov_center_step(problem: WaveProblem, data: LinearData, psi: PeriodicField,
                         xi: float, gamma: float, a: float, relaxation: float = 1.0):
    """One sweep for Phi + gamma phi' = 0; returns (psi+, xi+, gamma+).

    With phi = a (nu1 + psi) and nu1' = -nu2 the augmented equation reads
    L psi + xi L' nu1 + gamma (psi' - nu2) = R. Its nu1 and nu2 components
    determine xi and gamma; the rest determines psi.
    """
    R = remainder_R(problem, data, psi, xi, a)
    Lp_nu1 = apply_L_prime(data, data.nu1)
    rhs = R - _frequency_functional(data, R) * Lp_nu1 - gamma * derivative(psi)
    rhs = rhs - project_kernel(data, rhs)
    psi_new = coercive_solve(data, rhs)
    if relaxation != 1.0:
        psi_new = relaxation * psi_new + (1 - relaxation) * psi
    R_new = remainder_R(problem, data, psi_new, xi, a)
    xi_new = _frequency_functional(data, R_new)
    gamma_new = -inner_product(R_new, data.nu2)
    if relaxation != 1.0:
        xi_new = relaxation * xi_new + (1 - relaxation) * xi
        gamma_new = relaxation * gamma_new + (1 - relaxation) * gamma
    return psi_new, xi_new, gamma_new


def amplitude_cap(problem: WaveProblem, data: LinearData, factor: float = 1e-2) -> float:
    """Heuristic amplitude cap factor * |<L' nu1, nu1>| / q.

    q is the measured norm ||Q(nu1, nu1)|| of the quadratic term. When that
    norm is degenerate (below 1e-3 of an a-priori size of the nonlinearity,
    as happens by cancellation at special speeds or for purely cubic
    forces) the a-priori size is used instead.
    """
    q = sobolev_norm(quadratic_term(problem, data.nu1, data.omega_c))
    bound = _nonlinearity_size(problem, data)
    if q < 1e-3 * bound:
        q = bound
    if q == 0.0:
        return float("inf")
    return float(factor * abs(data.transversality) / q)


def _nonlinearity_size(problem, data):
    # sup of |V''(r) - V''(0)| / |r| type bound at r = Delta_+ nu1, times ||Delta_-|| <= 2
    from .operator import delta_plus

    r = float(np.abs(delta_plus(data.nu1, data.omega_c).to_samples(problem.grid)).max())
    mat = problem.material
    size = 0.0
    for cs in (mat.force1, mat.force2):
        size = max(size, sum(abs(cf) * r ** (d + 1) for d, cf in enumerate(cs) if d >= 1))
    return 2.0 * size


def _resolve_cap(problem, data, config):
    return config.a_cap if config.a_cap is not None else amplitude_cap(problem, data, config.cap_factor)


def _check_problem(problem: WaveProblem, data: LinearData):
    if problem.N != data.N:
        raise DomainError(f"problem N={problem.N} differs from LinearData N={data.N}")
    if problem.material is not data.material and problem.material != data.material:
        raise DomainError("problem and LinearData use different materials")
    if problem.c != data.c:
        raise DomainError("problem and LinearData use different speeds")


def solve_point(problem: WaveProblem, data: LinearData, a: float,
                config: SolverConfig = SolverConfig(),
                warm_start=None, cap: float | None = None) -> BranchPoint:
    """Solve for the wave of amplitude ``a``.

    ``warm_start`` is an optional (psi, xi) or (psi, xi, gamma) initial
    iterate, with xi the frequency shift.

    Raises
    ------
    DomainError
        If |a| exceeds the amplitude cap.
    ConvergenceError
        If the increment does not fall below ``config.tol`` within
        ``config.max_iter`` sweeps, or the converged point misses the
        acceptance tolerance.
    """
    _check_problem(problem, data)
    cap = _resolve_cap(problem, data, config) if cap is None else cap
    if abs(a) > cap:
        raise DomainError(f"amplitude above configured cap: |a|={abs(a)!r} > {cap!r}")
    lc = config.mode == "lyapunov-center"
    psi = PeriodicField.zeros(data.N)
    xi, gamma = 0.0, 0.0
    if warm_start is not None:
        psi, xi = warm_start[0], float(warm_start[1])
        if lc and len(warm_start) > 2:
            gamma = float(warm_start[2])

    if a == 0:
        # the trivial branch is known exactly; iterating would only add roundoff
        zero = PeriodicField.zeros(data.N)
        return BranchPoint(a=0.0, omega=float(data.omega_c), xi=0.0, freq_shift=0.0,
                           psi=zero, profile=zero, gamma=0.0 if lc else None,
                           residual=0.0, nu2_residual=0.0, orthogonality=0.0,
                           iterations=0, converged=True, mode=config.mode, history=[])

    history = []
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        if lc:
            psi_n, xi_n, gamma_n = lyapunov_center_step(problem, data, psi, xi, gamma, a,
                                                        config.relaxation)
            inc = sobolev_norm(psi_n - psi, 2) + abs(xi_n - xi) + abs(gamma_n - gamma)
            gamma = gamma_n
        else:
            psi_n, xi_n = fixed_point_step(problem, data, psi, xi, a, config.relaxation)
            inc = sobolev_norm(psi_n - psi, 2) + abs(xi_n - xi)
        psi, xi = psi_n, xi_n
        history.append(inc)
        if not np.isfinite(inc):
            break
        if inc < config.tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"{config.mode} iteration did not converge at a={a!r} after {it} "
            f"iterations (last increment {history[-1]:.3e}, tol {config.tol:.1e})",
            history)

    omega = data.omega_c + xi
    profile = a * (data.nu1 + psi)
    Phi = phi_op(problem, profile, omega)
    residual = sobolev_norm(Phi)
    ortho = max(abs(inner_product(psi, nu)) for nu in data.kernel)
    point = BranchPoint(a=float(a), omega=float(omega),
                        xi=float(xi / a) if a != 0 else 0.0, freq_shift=float(xi),
                        psi=psi, profile=profile, gamma=float(gamma) if lc else None,
                        residual=residual, nu2_residual=abs(inner_product(Phi, data.nu2)),
                        orthogonality=ortho, iterations=it, converged=True,
                        mode=config.mode, history=history)
    if residual >= config.acceptance_tol:
        raise ConvergenceError(
            f"converged iterate misses acceptance: ||Phi||={residual:.3e} >= "
            f"{config.acceptance_tol:.1e} at a={a!r}", history)
    if ortho > 1e-10:
        raise ConvergenceError(f"psi not orthogonal to the kernel ({ortho:.3e}) at a={a!r}",
                               history)
    if lc and abs(gamma) >= 1e-10:
        raise ConvergenceError(f"Lyapunov-center gamma={gamma:.3e} did not vanish at a={a!r}",
                               history)
    log.debug("a=%g converged in %d iterations, residual %.2e", a, it, residual)
    return point


def amplitude_grid(config: SolverConfig, cap: float) -> list:
    if config.amplitudes is not None:
        return sorted(config.amplitudes, key=abs)
    a_max = cap if config.a_max is None else config.a_max
    return list(np.linspace(a_max / config.count, a_max, config.count))


def _lipschitz(points):
    psi_r, xi_r = [], []
    for p, q in zip(points[:-1], points[1:]):
        da = abs(q.a - p.a)
        if da == 0:
            continue
        psi_r.append(sobolev_norm(q.psi - p.psi, 2) / da)
        xi_r.append(abs(q.xi - p.xi) / da)
    return np.array(psi_r), np.array(xi_r)


def solve_branch(problem: WaveProblem, config: SolverConfig = SolverConfig(),
                 data: LinearData | None = None) -> Branch:
    """Solve over the amplitude grid in increasing |a| with warm starts.

    A failed warm-started solve is retried from zero; a second failure
    truncates the branch there.
    """
    if data is None:
        data = kernel_basis(problem.material, problem.c, problem.N)
    cap = _resolve_cap(problem, data, config)
    points = []
    truncated = False
    for a in amplitude_grid(config, cap):
        warm = None
        if points and points[-1].a != 0:
            prev = points[-1]
            r = a / prev.a
            warm = (prev.psi * r, prev.freq_shift * r * r) + (
                (prev.gamma,) if prev.gamma is not None else ())
        try:
            pt = solve_point(problem, data, a, config, warm, cap=cap)
        except ConvergenceError:
            try:
                pt = solve_point(problem, data, a, config, None, cap=cap)
            except ConvergenceError as exc:
                log.warning("branch truncated at a=%g: %s", a, exc)
                truncated = True
                break
        points.append(pt)
    psi_r, xi_r = _lipschitz(points)
    return Branch(data=data, points=points, cap=cap, truncated=truncated,
                  psi_lipschitz=float(psi_r.max(initial=0.0)),
                  xi_lipschitz=float(xi_r.max(initial=0.0)),
                  psi_ratios=psi_r, xi_ratios=xi_r)


# independent Newton solve ------------------------------------------------------

def _to_real(f: PeriodicField) -> np.ndarray:
    c = f.coeffs
    return np.concatenate([c[:, 0].real, c[:, 1:].real.ravel(), c[:, 1:].imag.ravel()])


def _from_real(x: np.ndarray, N: int) -> PeriodicField:
    c = np.zeros((2, N + 1), dtype=complex)
    c[:, 0] = x[:2]
    n = 2 * N
    c[:, 1:] = (x[2:2 + n] + 1j * x[2 + n:2 + 2 * n]).reshape(2, N)
    return PeriodicField(c)


def newton_solve(problem: WaveProblem, data: LinearData, a: float,
                 tol: float = 1e-14, max_iter: int = 30, initial=None):
    """Gauss-Newton solve of Phi(phi, omega) = 0 with phase conditions.

    Unknowns are the real Fourier coordinates of phi and omega. The
    equations are the truncated Phi together with <phi, nu0> = 0,
    <phi, nu1> = a and <phi, nu2> = 0. The Jacobian is assembled column by
    column from the exact linearization. Returns ``(phi, omega, history)``.
    """
    N = data.N
    n = 2 * (2 * N + 1)
    phi = a * data.nu1 if initial is None else initial[0]
    omega = data.omega_c if initial is None else float(initial[1])
    basis = np.eye(n)
    cons = [data.nu0, data.nu1, data.nu2]
    target = np.array([0.0, a, 0.0])
    history = []
    for _ in range(max_iter):
        F = np.concatenate([_to_real(phi_op(problem, phi, omega)),
                            [inner_product(phi, nu) for nu in cons] - target])
        J = np.zeros((F.size, n + 1))
        for j in range(n):
            e = _from_real(basis[j], N)
            J[:n, j] = _to_real(phi_linearized(problem, phi, omega, e))
            J[n:, j] = [inner_product(e, nu) for nu in cons]
        J[:n, n] = _to_real(phi_omega_derivative(problem, phi, omega))
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        phi = phi + _from_real(step[:n], N)
        omega += step[n]
        size = float(np.linalg.norm(step))
        history.append(size)
        if size < tol * max(1.0, abs(a)):
            break
    return phi, float(omega), history


# long-wave scaling ---------------------------------------------------------------

@dataclass(frozen=True)
class LongWaveParams:
    """c^2 = c_star^2 + eps^2, a = alpha eps^2, Omega = omega / eps."""

    eps: float
    alpha: float
    c: float
    a: float
    Omega: float

    def to_dict(self):
        return {"eps": self.eps, "alpha": self.alpha, "c": self.c, "a": self.a,
                "Omega": self.Omega}


@dataclass(frozen=True)
class LongWaveResult:
    eps: float
    branch: Branch
    params: list
    bracket: tuple
    in_bracket: bool
    omega_lipschitz: float
    sup_norm: float
    sup_deriv_norm: float
    deriv_order: int

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "c": self.branch.data.c,
            "omega_c": self.branch.data.omega_c,
            "bracket": list(self.bracket),
            "in_bracket": self.in_bracket,
            "Omega_lipschitz": self.omega_lipschitz,
            "sup_norm": self.sup_norm,
            "sup_deriv_norm": self.sup_deriv_norm,
            "deriv_order": self.deriv_order,
            "truncated": self.branch.truncated,
            "params": [p.to_dict() for p in self.params],
            "branch": self.branch.to_dict(),
        }


def longwave_branch(material: Material, eps_list: Sequence[float],
                    alpha_list: Sequence[float] | None = None,
                    config: SolverConfig = SolverConfig(),
                    deriv_order: int = 2, alpha_count: int = 8) -> list:
    """Solve branches in the long-wave scaling for each eps.

    Without ``alpha_list`` the alpha grid has ``alpha_count`` points up to
    the smallest amplitude cap over the eps values, so that
    a = alpha eps^2 is admissible for every eps.
    """
    from .errors import ConfigurationError

    c_star = speed_of_sound(material)
    setups = []
    for eps in eps_list:
        if not 0 < eps < 1:
            raise ConfigurationError(f"eps must lie in (0, 1), got {eps!r}")
        c = float(np.sqrt(c_star ** 2 + eps ** 2))
        problem = WaveProblem(material, c, config.N, config.grid)
        data = kernel_basis(material, c, config.N)
        cap = _resolve_cap(problem, data, config)
        setups.append((eps, problem, data, cap))
    if alpha_list is None:
        alpha_max = min(s[3] for s in setups)
        alpha_list = list(np.linspace(alpha_max / alpha_count, alpha_max, alpha_count))
    alpha_list = sorted(alpha_list, key=abs)

    def run(setup):
        eps, problem, data, cap = setup
        if max(abs(al) for al in alpha_list) > cap:
            raise DomainError(f"amplitude above configured cap: alpha grid exceeds {cap!r}")
        cfg = replace(config, amplitudes=tuple(al * eps ** 2 for al in alpha_list))
        branch = solve_branch(problem, cfg, data)
        params = [LongWaveParams(eps=float(eps), alpha=float(al), c=problem.c,
                                 a=float(p.a), Omega=p.omega / eps)
                  for al, p in zip(alpha_list, branch.points)]
        lo, hi = omega_bracket(material, problem.c)
        in_bracket = all(lo <= eps * p.Omega <= hi for p in params)
        ratios = [abs(q.Omega - p.Omega) / abs(q.alpha - p.alpha)
                  for p, q in zip(params[:-1], params[1:]) if q.alpha != p.alpha]
        G = 8 * config.N
        sup0 = supr = 0.0
        for p in branch.points:
            prof = data.nu1 + p.psi
            sup0 = max(sup0, float(np.abs(prof.to_samples(G)).max()))
            supr = max(supr, float(np.abs(derivative(prof, deriv_order).to_samples(G)).max()))
        return LongWaveResult(eps=float(eps), branch=branch, params=params,
                              bracket=(lo, hi), in_bracket=in_bracket,
                              omega_lipschitz=float(max(ratios, default=0.0)),
                              sup_norm=sup0, sup_deriv_norm=supr,
                              deriv_order=deriv_order)

    return pmap(run, setups)
