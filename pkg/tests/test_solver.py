import numpy as np
import pytest

from dimerwave.errors import ConfigurationError, ConvergenceError, DomainError
from dimerwave.linear import apply_L, apply_L_prime, kernel_basis, omega_bracket
from dimerwave.model import Material
from dimerwave.operator import WaveProblem, phi_op
from dimerwave.solver import (SolverConfig, amplitude_cap, amplitude_grid, fixed_point_step,
                              longwave_branch, newton_solve, project_kernel, remainder_R,
                              solve_branch, solve_point)
from dimerwave.spectral import PeriodicField, derivative, inner_product, sobolev_norm

C = np.sqrt(2.0)


def hand_L(kappa, m, c, K):
    e = np.exp(1j * K)
    D = np.array([[1 + kappa, -(e + kappa / e)], [-(kappa * e + 1 / e), 1 + kappa]])
    return D - c * c * K * K * np.diag([1.0, m])


@pytest.fixture(scope="module")
def branch(material, data):
    pr = WaveProblem(material, C, 32)
    return solve_branch(pr, SolverConfig(N=32, a_max=5e-3, count=20), data)


def test_config_rejects_bad_values():
    with pytest.raises(ConfigurationError, match="mode"):
        SolverConfig(mode="newton")
    with pytest.raises(ConfigurationError, match="relaxation"):
        SolverConfig(relaxation=1.5)


def test_projection_basics(data, rng):
    assert project_kernel(data, data.nu1).allclose(data.nu1, atol=1e-15)
    cos2 = PeriodicField.from_modes(data.N, {2: (0.5, 0.0)})
    assert sobolev_norm(project_kernel(data, cos2)) == 0.0
    eta = PeriodicField.random(data.N, rng)
    lhs = project_kernel(data, derivative(eta))
    assert sobolev_norm(lhs - derivative(project_kernel(data, eta))) < 1e-13


def test_remainder_small_amplitude_limit(problem, data):
    zero = PeriodicField.zeros(data.N)
    r0 = remainder_R(problem, data, zero, 0.0, 0.0)
    r4 = remainder_R(problem, data, zero, 0.0, 1e-4)
    r6 = remainder_R(problem, data, zero, 0.0, 1e-6)
    # with quadratic forces R(0, 0, a) = -a Q(nu1, nu1) - L nu1: linear in a, finite as a -> 0
    assert sobolev_norm(r0) < 1e-14
    assert sobolev_norm(r4 - r6) == pytest.approx(sobolev_norm(r4), rel=2e-2)
    assert sobolev_norm(r4 - r6) < 1e-3


def test_remainder_lipschitz_on_ball(problem, data, rng):
    a = 1e-3
    consts = []
    for radius in (1e-2, 1e-3):
        worst = 0.0
        for _ in range(5):
            p1 = PeriodicField.random(data.N, rng, decay=2) * radius
            p2 = PeriodicField.random(data.N, rng, decay=2) * radius
            x1, x2 = rng.uniform(-radius, radius, 2)
            dR = remainder_R(problem, data, p1, x1, a) - remainder_R(problem, data, p2, x2, a)
            # L psi and xi L' nu1 are the linear part; subtract it to leave the nonlinear remainder
            lin = apply_L(data, p1 - p2) + (x1 - x2) * apply_L_prime(data, data.nu1)
            num = sobolev_norm(dR - lin)
            den = sobolev_norm(p1 - p2, 2) + abs(x1 - x2)
            worst = max(worst, num / den)
        consts.append(worst)
    # the constant shrinks with the ball (it is O(||psi|| + |xi| + |a|))
    assert consts[1] < consts[0]


def test_first_step_is_leading_order_corrector(problem, data):
    zero = PeriodicField.zeros(data.N)
    om, h = data.omega_c, 1e-3
    # Q(nu1, nu1) by a symmetric second difference of Phi (exact for quadratic forces)
    Q = (phi_op(problem, h * data.nu1, om) + phi_op(problem, -h * data.nu1, om)) / (2 * h * h)
    Q = Q - project_kernel(data, Q)
    expected = np.zeros((2, data.N + 1), dtype=complex)
    mat = data.material
    for k in range(2, data.N + 1):
        expected[:, k] = np.linalg.solve(hand_L(mat.kappa, mat.m, data.c, k * om), Q.coeffs[:, k])
    expected[0, 0] = Q.coeffs[0, 0] / (2 * (1 + mat.kappa))
    expected[1, 0] = -expected[0, 0]
    for a in (1e-3, 1e-4):
        psi, _ = fixed_point_step(problem, data, zero, 0.0, a)
        diff = sobolev_norm(psi - (-a) * PeriodicField(expected), 2)
        assert diff < 10 * a * a


def test_iterates_contract(problem, data):
    pt = solve_point(problem, data, 5e-3, SolverConfig(N=32))
    h = np.array(pt.history)
    assert len(h) >= 3
    assert np.all(h[1:] <= 0.5 * h[:-1] + 1e-16)


def test_zero_amplitude_is_trivial(problem, data):
    pt = solve_point(problem, data, 0.0, SolverConfig(N=32))
    assert sobolev_norm(pt.psi) == 0.0
    assert pt.xi == 0.0 and pt.omega == data.omega_c


def test_solve_matches_newton(problem, data):
    pt = solve_point(problem, data, 1e-3, SolverConfig(N=32))
    assert pt.converged and pt.residual < 1e-10 and np.isfinite(pt.xi)
    assert pt.orthogonality < 1e-10
    assert abs(inner_product(pt.psi, data.nu0)) < 1e-12
    phi, omega, hist = newton_solve(problem, data, 1e-3)
    assert sobolev_norm(phi - pt.profile, 2) < 1e-12
    assert abs(omega - pt.omega) < 1e-12


def test_remainder_has_no_nu2_component_at_solution(problem, data):
    pt = solve_point(problem, data, 2e-3, SolverConfig(N=32))
    R = remainder_R(problem, data, pt.psi, pt.freq_shift, pt.a)
    assert abs(inner_product(R, data.nu2)) < 1e-12


def test_lyapunov_center_agrees(problem, data):
    fp = solve_point(problem, data, 1e-3, SolverConfig(N=32))
    lc = solve_point(problem, data, 1e-3, SolverConfig(N=32, mode="lyapunov-center"))
    assert sobolev_norm(fp.profile - lc.profile, 2) < 1e-9
    assert abs(fp.omega - lc.omega) < 1e-9
    assert abs(lc.gamma) < 1e-10


def test_amplitude_above_cap(problem, data):
    with pytest.raises(DomainError, match="amplitude above configured cap"):
        solve_point(problem, data, 1.0, SolverConfig(N=32))
    with pytest.raises(DomainError, match="amplitude above configured cap"):
        solve_point(problem, data, 2e-3, SolverConfig(N=32, a_cap=1e-3))


def test_non_convergence_reports_history(problem, data):
    with pytest.raises(ConvergenceError) as info:
        solve_point(problem, data, 5e-3, SolverConfig(N=32, max_iter=1, tol=1e-15))
    assert len(info.value.history) == 1


def test_cap_is_positive_and_default_in_use(problem, data):
    cap = amplitude_cap(problem, data)
    assert 0 < cap < 1
    grid = amplitude_grid(SolverConfig(count=4), cap)
    assert grid[-1] == pytest.approx(cap) and len(grid) == 4


def test_cap_fallback_when_quadratic_term_vanishes():
    # at omega_c = pi the quadratic interaction of nu1 with itself cancels
    mat = Material.dimer(m=1.0, kappa=10.0, beta=1.0)
    c = np.sqrt(22.0) / np.pi
    d = kernel_basis(mat, c, 16)
    assert d.omega_c == pytest.approx(np.pi, abs=1e-12)
    pr = WaveProblem(mat, c, 16)
    cap = amplitude_cap(pr, d)
    assert np.isfinite(cap) and cap < 1
    pt = solve_point(pr, d, 0.5 * cap, SolverConfig(N=16))
    assert pt.residual < 1e-10


def test_branch_single_zero_amplitude(problem, data):
    br = solve_branch(problem, SolverConfig(N=32, amplitudes=(0.0,)), data)
    assert len(br.points) == 1 and sobolev_norm(br.points[0].psi) == 0.0


def test_branch_bounded_and_lipschitz(branch):
    assert len(branch.points) == 20 and not branch.truncated
    assert np.isfinite(branch.sup_psi_h2) and np.isfinite(branch.sup_xi)
    med = np.median(branch.psi_ratios)
    assert branch.psi_lipschitz <= 10 * med
    assert max(p.residual for p in branch.points) < 1e-10


def test_branch_xi_convention(branch, data):
    for p in branch.points:
        assert p.freq_shift == pytest.approx(p.omega - data.omega_c, abs=1e-15)
        assert p.xi == pytest.approx(p.freq_shift / p.a, rel=1e-12)


def test_branch_serializes(branch):
    doc = branch.to_dict()
    assert len(doc["points"]) == 20 and "psi" in doc["points"][0]
    assert doc["cap_binding"] is False


def test_longwave_zero_alpha(material):
    res = longwave_branch(material, [0.1], alpha_list=[0.0], config=SolverConfig(N=16))
    assert all(p.a == 0.0 for p in res[0].branch.points)
    assert res[0].params[0].Omega == pytest.approx(res[0].branch.data.omega_c / 0.1)


def test_longwave_bracket_and_ratio(material):
    eps = (0.05, 0.1, 0.2)
    res = longwave_branch(material, eps, config=SolverConfig(N=32), alpha_count=6)
    for r in res:
        assert r.in_bracket
        lo, hi = omega_bracket(material, r.branch.data.c)
        for p in r.params:
            assert lo <= r.eps * p.Omega <= hi
        assert np.isfinite(r.omega_lipschitz)
    assert max(r.omega_lipschitz for r in res) < 1.0
