"""Bundled invariant suite run by ``dimerwave verify`` and the test suite.

Each check returns a :class:`CheckResult` holding the measured quantities
and the thresholds they were compared against. Randomized checks draw from
``numpy.random.default_rng(seed)`` so a run is reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import mpmath
import numpy as np

from .linear import (apply_L, apply_L_adjoint, coercive_solve, dispersion,
                     kernel_basis, lambda_plus_prime, omega_bracket,
                     project_out_kernel, speed_of_sound, symbol_L,
                     symbol_L_prime, transversality)
from .model import Material
from .operator import (WaveProblem, energy, first_integral, lattice_residual,
                       phi_op)
from .solver import (SolverConfig, longwave_branch, newton_solve, solve_branch,
                     solve_point, amplitude_cap)
from .spectral import (MultiplierSymbol, PeriodicField, apply_symbol,
                       derivative, inner_product, shift, sobolev_norm)
from .symmetry import SymmetryOp, check_solution_symmetry, symmetric_basis

__all__ = ["VerifyContext", "CheckResult", "CHECKS", "run_checks"]

C_RATIOS = (1.01, 1.1, 1.5, 2.0, 3.0)


@dataclass
class VerifyContext:
    """Model and numerics shared by all checks, plus cached solves."""

    material: Material = field(default_factory=lambda: Material.dimer(m=1.0, kappa=2.0, beta=1.0))
    c: float = float(np.sqrt(2.0))
    N: int = 32
    N_solver: int = 64
    seed: int = 1
    count: int = 20
    eps: tuple = (0.05, 0.1, 0.2)
    _cache: dict = field(default_factory=dict, repr=False)

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    def data(self, N=None, c=None):
        N = self.N if N is None else N
        c = self.c if c is None else c
        key = ("data", N, c)
        if key not in self._cache:
            self._cache[key] = kernel_basis(self.material, c, N)
        return self._cache[key]

    def problem(self, N=None, c=None):
        return WaveProblem(self.material, self.c if c is None else c,
                           self.N if N is None else N)

    def branch(self, mode="fixed-point"):
        key = ("branch", mode)
        if key not in self._cache:
            cfg = SolverConfig(mode=mode, N=self.N_solver, count=self.count)
            pr = self.problem(self.N_solver)
            if mode == "fixed-point":
                self._cache[key] = solve_branch(pr, cfg, self.data(self.N_solver))
            else:
                fp = self.branch()
                cfg = replace(cfg, amplitudes=tuple(p.a for p in fp.points))
                self._cache[key] = solve_branch(pr, cfg, self.data(self.N_solver))
        return self._cache[key]


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    metrics: dict
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.metrics.items())
        return f"[{status}] criterion {self.number:2d} {self.name}: {shown}"

    def to_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "seconds": self.seconds, "metrics": self.metrics}


def _short(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.3g}"
    return str(v)


# 1 -------------------------------------------------------------------------

def _mp_eigs(kappa, w, K):
    # Hermitian M^-1/2 D M^-1/2 at 40 digits
    mpmath.mp.dps = 40
    kap, ww, KK = mpmath.mpf(kappa), mpmath.mpf(w), mpmath.mpf(K)
    e = mpmath.expj(KK)
    s = mpmath.sqrt(ww)
    A = mpmath.matrix([[1 + kap, -(e + kap / e) * s],
                       [-(kap * e + 1 / e) * s, (1 + kap) * ww]])
    ev = mpmath.eighe(A, eigvals_only=True)
    return sorted(float(x) for x in ev)


def check_dispersion(ctx: VerifyContext, samples: int = 1000) -> CheckResult:
    rng = ctx.rng(1)
    kap = rng.uniform(0.2, 5.0, samples)
    w = rng.uniform(0.2, 5.0, samples)
    K = rng.uniform(0.0, 2 * np.pi, samples)
    rel = prod_rel = printed = 0.0
    for i in range(samples):
        mat = Material(m=1 / w[i], kappa=kap[i], force1=(1.0,), force2=(kap[i],))
        lm, lp, _ = dispersion(mat, K[i])
        em, ep = _mp_eigs(kap[i], w[i], K[i])
        rel = max(rel, abs(lm - em) / abs(em) if em != 0 else abs(lm),
                  abs(lp - ep) / abs(ep))
        det = 4 * kap[i] * w[i] * np.sin(K[i]) ** 2
        if det > 0:
            prod_rel = max(prod_rel, abs(lm * lp - det) / det)
        printed = max(printed, abs(lm * lp - 2 * kap[i] * w[i] * (2 * np.cos(K[i]) ** 2 - 1)))
    ok = rel < 1e-10 and prod_rel < 1e-10
    return CheckResult(1, "dispersion closed forms vs eigensolve", ok,
                       {"max_rel_err": rel, "product_rel_err": prod_rel,
                        "printed_constant_term_gap": printed})


# 2 -------------------------------------------------------------------------

def check_critical_frequency(ctx: VerifyContext) -> CheckResult:
    cs = speed_of_sound(ctx.material)
    worst_res, min_margin, inside = 0.0, np.inf, True
    for r in C_RATIOS:
        c = r * cs
        d = ctx.data(c=c)
        om = d.omega_c
        lo, hi = omega_bracket(ctx.material, c)
        inside &= lo <= om <= hi
        lam = dispersion(ctx.material, om)[1]
        worst_res = max(worst_res, abs(c * c * om * om - lam))
        min_margin = min(min_margin, 2 * c * c * om - lambda_plus_prime(ctx.material, om))
    ok = bool(inside) and worst_res < 1e-12 and min_margin > 0
    return CheckResult(2, "critical frequency brackets and residual", ok,
                       {"in_bracket": bool(inside), "max_residual": worst_res,
                        "min_slope_margin": float(min_margin)})


# 3 -------------------------------------------------------------------------

def check_kernel(ctx: VerifyContext) -> CheckResult:
    d = ctx.data()
    N = d.N
    kern = d.kernel
    L_res = max(sobolev_norm(apply_L(d, nu)) for nu in kern)
    Ls_res = max(sobolev_norm(apply_L_adjoint(d, nu)) for nu in kern)
    gram = np.array([[inner_product(a, b) for b in kern] for a in kern])
    ortho = float(np.abs(gram - np.eye(3)).max())
    # nu2 against the closed form -i mu / N_c on mode 1 and nu1' = -nu2
    nu2_closed = PeriodicField.from_modes(N, {1: -1j * d.mu_c / d.N_c})
    nu2_err = max(sobolev_norm(shift(d.nu1, -np.pi / 2) - nu2_closed),
                  sobolev_norm(d.nu2 - nu2_closed),
                  sobolev_norm(derivative(d.nu1) + d.nu2))
    k = np.concatenate([np.arange(2, N + 1), -np.arange(2, N + 1)])
    smin = float(np.linalg.svd(symbol_L(ctx.material, ctx.c, d.omega_c * k),
                               compute_uv=False)[:, -1].min())
    ok = L_res < 1e-11 and Ls_res < 1e-11 and ortho < 1e-12 and nu2_err < 1e-13 and smin > 1e-6
    return CheckResult(3, "kernel and adjoint kernel", ok,
                       {"L_nu_max": L_res, "Lstar_nu_max": Ls_res, "orthonormality": ortho,
                        "nu2_shift_err": nu2_err, "min_singular_value": smin})


# 4 -------------------------------------------------------------------------

def check_transversality(ctx: VerifyContext) -> CheckResult:
    cs = speed_of_sound(ctx.material)
    rel = cross = sym = 0.0
    signs = set()
    for r in C_RATIOS:
        d = ctx.data(c=r * cs)
        sym_Lp = MultiplierSymbol(
            lambda k, d=d: k[:, None, None] * symbol_L_prime(ctx.material, d.c, d.omega_c * k),
            "L'")
        Lp1 = apply_symbol(sym_Lp, d.nu1)
        Lp2 = apply_symbol(sym_Lp, d.nu2)
        num = inner_product(Lp1, d.nu1)
        closed = transversality(d)[1]
        rel = max(rel, abs(num - closed) / abs(closed))
        cross = max(cross, abs(inner_product(Lp1, d.nu2)))
        sym = max(sym, abs(inner_product(Lp2, d.nu2) - num))
        signs.add(np.sign(num))
    ok = rel < 1e-8 and cross < 1e-11 and sym < 1e-10 and len(signs) == 1 and 0 not in signs
    return CheckResult(4, "transversality numeric vs closed form", ok,
                       {"max_rel_err": rel, "cross_term": cross, "nu2_vs_nu1": sym,
                        "sign": int(next(iter(signs))) if len(signs) == 1 else 0})


# 5 -------------------------------------------------------------------------

def _random_triplet(rng, N):
    phi = PeriodicField.random(N, rng, decay=1.5) * 0.2
    eta = PeriodicField.random(N, rng, decay=1.5)
    omega = float(rng.uniform(0.5, 2.5))
    return phi, eta, omega


def check_gradient(ctx: VerifyContext, trials: int = 20) -> CheckResult:
    rng = ctx.rng(5)
    pr = ctx.problem()
    hs = (1e-2, 1e-3, 1e-4)
    min_order, orth, nu0 = np.inf, 0.0, 0.0
    for _ in range(trials):
        phi, eta, om = _random_triplet(rng, ctx.N)
        Phi = phi_op(pr, phi, om)
        exact = inner_product(Phi, eta)
        errs = []
        for h in hs:
            fd = (energy(pr, phi + h * eta, om)[2] - energy(pr, phi - h * eta, om)[2]) / (2 * h)
            errs.append(abs(fd - exact))
        orders = [np.log10(errs[i] / errs[i + 1]) for i in range(len(hs) - 1)]
        min_order = min(min_order, min(orders))
        dphi = derivative(phi)
        orth = max(orth, abs(inner_product(Phi, dphi))
                   / (1 + sobolev_norm(Phi) * sobolev_norm(dphi)))
        nu0 = max(nu0, abs(inner_product(Phi, ctx.data().nu0)))
    ok = min_order >= 1.9 and orth < 1e-11 and nu0 < 1e-12
    return CheckResult(5, "gradient structure", ok,
                       {"min_fd_order": float(min_order), "deriv_orthogonality": orth,
                        "nu0_component": nu0})


# 6 -------------------------------------------------------------------------

def check_first_integral(ctx: VerifyContext, trials: int = 20) -> CheckResult:
    rng = ctx.rng(6)
    pr = ctx.problem()
    gap = point_defect = 0.0
    for _ in range(trials):
        phi, _, om = _random_triplet(rng, ctx.N)
        tr = first_integral(pr, phi, om)
        gap = max(gap, abs(tr.phi_dot_dphi - tr.mean_dJ))
        point_defect = max(point_defect, tr.pointwise_defect / (1 + np.abs(tr.J).max()))
    branch = ctx.branch()
    prN = ctx.problem(ctx.N_solver)
    variation = max(first_integral(prN, p.profile, p.omega).variation for p in branch.points)
    ok = gap < 1e-9 and point_defect < 1e-9 and variation < 1e-8
    return CheckResult(6, "first integral", ok,
                       {"integral_gap": gap, "pointwise_defect": point_defect,
                        "max_variation_on_solutions": variation})


# 7 -------------------------------------------------------------------------

def check_branch(ctx: VerifyContext) -> CheckResult:
    br = ctx.branch()
    pts = br.points
    iters = max(p.iterations for p in pts)
    resid = max(p.residual for p in pts)
    ortho = max(p.orthogonality for p in pts)
    med_psi = float(np.median(br.psi_ratios))
    med_xi = float(np.median(br.xi_ratios))
    lip_ok = (np.all(np.isfinite(br.psi_ratios)) and np.all(np.isfinite(br.xi_ratios))
              and br.psi_lipschitz <= 10 * med_psi and br.xi_lipschitz <= 10 * med_xi)
    ok = (not br.truncated and len(pts) == ctx.count and iters <= 60 and resid < 1e-10
          and ortho < 1e-10 and np.isfinite(br.sup_psi_h2) and np.isfinite(br.sup_xi)
          and bool(lip_ok))
    return CheckResult(7, "branch solve", ok,
                       {"points": len(pts), "cap": br.cap, "max_iterations": iters,
                        "max_residual": resid, "max_orthogonality": ortho,
                        "sup_psi_h2": br.sup_psi_h2, "sup_xi": br.sup_xi,
                        "psi_lipschitz": br.psi_lipschitz, "xi_lipschitz": br.xi_lipschitz})


# 8 -------------------------------------------------------------------------

def check_lyapunov_center(ctx: VerifyContext) -> CheckResult:
    fp, lc = ctx.branch(), ctx.branch("lyapunov-center")
    dphi = max(sobolev_norm(p.profile - q.profile, 2) for p, q in zip(fp.points, lc.points))
    dom = max(abs(p.omega - q.omega) for p, q in zip(fp.points, lc.points))
    gam = max(abs(q.gamma) for q in lc.points)
    ok = len(lc.points) == len(fp.points) and dphi < 1e-9 and dom < 1e-9 and gam < 1e-10
    return CheckResult(8, "Lyapunov-center consistency", ok,
                       {"max_profile_diff": dphi, "max_omega_diff": dom, "max_gamma": gam})


# 9 -------------------------------------------------------------------------

def check_newton(ctx: VerifyContext) -> CheckResult:
    br = ctx.branch()
    pr = ctx.problem(ctx.N_solver)
    d = ctx.data(ctx.N_solver)
    idx = (len(br.points) // 4, len(br.points) // 2, len(br.points) - 1)
    dphi = dom = 0.0
    for i in idx:
        p = br.points[i]
        phi, om, _ = newton_solve(pr, d, p.a)
        dphi = max(dphi, sobolev_norm(phi - p.profile, 2))
        dom = max(dom, abs(om - p.omega))
    ok = dphi < 1e-9 and dom < 1e-9
    return CheckResult(9, "independent Newton oracle", ok,
                       {"amplitudes": len(idx), "max_profile_diff": dphi, "max_omega_diff": dom})


# 10 ------------------------------------------------------------------------

def lattice_samples(rng, n=100):
    j = rng.integers(-50, 51, n)
    t = rng.uniform(0.0, 20.0, n)
    return np.column_stack([j, t])


def check_lattice(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng(10)
    pr = ctx.problem(ctx.N_solver)
    worst = max(lattice_residual(pr, p, lattice_samples(rng)) for p in ctx.branch().points)
    return CheckResult(10, "lattice Newton-law residual", worst < 1e-8,
                       {"max_residual": worst})


# 11 ------------------------------------------------------------------------

def check_coercivity(ctx: VerifyContext, trials: int = 50) -> CheckResult:
    rng = ctx.rng(11)
    cs = speed_of_sound(ctx.material)
    ratios = []
    bound = None
    for r in C_RATIOS:
        d = ctx.data(c=r * cs)
        bound = d.coercivity_bound
        for _ in range(trials):
            eta = project_out_kernel(d, PeriodicField.random(ctx.N, rng, decay=0.5))
            psi = coercive_solve(d, eta)
            ratios.append(sobolev_norm(psi, 2) / sobolev_norm(eta))
    ratios = np.array(ratios)
    spread = float(ratios.max() / ratios.min())
    ok = spread < 10 and ratios.max() <= bound
    return CheckResult(11, "coercivity uniform in c", ok,
                       {"min_C": float(ratios.min()), "max_C": float(ratios.max()),
                        "spread": spread, "bound": bound})


# 12 ------------------------------------------------------------------------

def check_symmetry(ctx: VerifyContext) -> CheckResult:
    mass = Material.dimer(m=0.5, kappa=1.0, beta=1.0)
    c = float(np.sqrt(2.0))
    pr = WaveProblem(mass, c, ctx.N)
    d = kernel_basis(mass, c, ctx.N)
    pt = solve_point(pr, d, 0.5 * amplitude_cap(pr, d), SolverConfig(N=ctx.N))
    op_m = SymmetryOp("mass")
    defect = check_solution_symmetry(op_m, pt).defect

    op_k = SymmetryOp("spring")
    dk = ctx.data()
    basis = symmetric_basis(op_k, dk)
    plus_err = sobolev_norm(op_k(basis.nu_plus) - basis.nu_plus)
    minus_err = sobolev_norm(op_k(basis.nu_minus) + basis.nu_minus)
    t_err = abs(basis.transversality_plus - dk.transversality) / abs(dk.transversality)
    ok = defect < 1e-9 and plus_err < 1e-12 and minus_err < 1e-12 and t_err < 1e-10
    return CheckResult(12, "symmetry", ok,
                       {"mass_aligned_defect": defect, "spring_class": basis.classification,
                        "nu_plus_err": plus_err, "nu_minus_err": minus_err,
                        "transversality_rel_err": t_err})


# 13 ------------------------------------------------------------------------

def check_longwave(ctx: VerifyContext) -> CheckResult:
    res = longwave_branch(ctx.material, ctx.eps, None, SolverConfig(N=ctx.N_solver))
    converged = all(not r.branch.truncated for r in res)
    in_bracket = all(r.in_bracket for r in res)
    ratios = [r.omega_lipschitz for r in sorted(res, key=lambda r: r.eps)]
    decreasing = all(a < b for a, b in zip(ratios[:-1], ratios[1:]))
    ok = converged and in_bracket and decreasing
    metrics = {"converged": converged, "in_bracket": in_bracket}
    for r in sorted(res, key=lambda r: r.eps):
        metrics[f"ratio_eps={r.eps:g}"] = r.omega_lipschitz
    return CheckResult(13, "long-wave scaling", ok, metrics)


CHECKS = (check_dispersion, check_critical_frequency, check_kernel, check_transversality,
          check_gradient, check_first_integral, check_branch, check_lyapunov_center,
          check_newton, check_lattice, check_coercivity, check_symmetry, check_longwave)


def run_one(check, ctx: VerifyContext) -> CheckResult:
    t0 = time.perf_counter()
    try:
        res = check(ctx)
    except Exception as exc:  # a crash is a failed check, reported with its reason
        number = CHECKS.index(check) + 1
        res = CheckResult(number, check.__name__.removeprefix("check_"), False,
                          {"error": f"{type(exc).__name__}: {exc}"})
    res.seconds = time.perf_counter() - t0
    return res


def run_checks(ctx: VerifyContext | None = None, only=None) -> list:
    ctx = ctx or VerifyContext()
    selected = CHECKS if only is None else [CHECKS[i - 1] for i in only]
    return [run_one(chk, ctx) for chk in selected]
