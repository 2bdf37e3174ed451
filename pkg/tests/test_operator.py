from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dimerwave.errors import ConfigurationError, DomainError
from dimerwave.model import Material
from dimerwave.operator import (WaveProblem, energy, first_integral, lattice_residual,
                                phi_linearized, phi_omega_derivative, phi_op, phi_op_direct,
                                phi_scaled, residual_report)
from dimerwave.solver import SolverConfig, fixed_point_step, solve_point
from dimerwave.spectral import PeriodicField, derivative, inner_product, shift, sobolev_norm

seeds = st.integers(0, 2 ** 32 - 1)
cubic = Material.dimer(m=0.7, kappa=2.0, beta=0.8, cubic1=0.5, cubic2=-0.3)


def small_field(rng, N=16, amp=0.2):
    return PeriodicField.random(N, rng, decay=1.5) * amp


def test_problem_rejects_subsonic(material):
    with pytest.raises(DomainError, match="subsonic"):
        WaveProblem(material, 1.0, 16)


def test_problem_rejects_small_grid(material):
    with pytest.raises(ConfigurationError, match="grid"):
        WaveProblem(material, np.sqrt(2.0), 16, grid=20)


@pytest.mark.parametrize("omega", [0.3, 1.428, 2.9])
def test_zero_is_a_solution(problem, omega):
    assert sobolev_norm(phi_op(problem, PeriodicField.zeros(problem.N), omega)) == 0.0


@settings(max_examples=20, deadline=None)
@given(seed=seeds, alpha=st.floats(-3, 3), omega=st.floats(0.3, 3.0))
def test_translation_invariance(seed, alpha, omega):
    pr = WaveProblem(cubic, 1.5, 12)
    phi = small_field(np.random.default_rng(seed), 12)
    moved = phi + PeriodicField.constant(alpha, alpha, 12)
    assert phi_op(pr, moved, omega).allclose(phi_op(pr, phi, omega), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, theta=st.floats(-4, 4), omega=st.floats(0.3, 3.0))
def test_shift_equivariance(seed, theta, omega):
    pr = WaveProblem(cubic, 1.5, 12)
    phi = small_field(np.random.default_rng(seed), 12)
    lhs = phi_op(pr, shift(phi, theta), omega)
    assert lhs.allclose(shift(phi_op(pr, phi, omega), theta), atol=1e-13)
    g0 = energy(pr, phi, omega)[2]
    assert energy(pr, shift(phi, theta), omega)[2] == pytest.approx(g0, abs=1e-13)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, omega=st.floats(0.3, 3.0))
def test_difference_form_matches_direct_form(seed, omega):
    pr = WaveProblem(cubic, 1.5, 12)
    phi = small_field(np.random.default_rng(seed), 12, amp=0.5)
    assert phi_op(pr, phi, omega).allclose(phi_op_direct(pr, phi, omega), atol=1e-12)


def test_energy_of_zero(problem):
    assert energy(problem, PeriodicField.zeros(problem.N), 1.2) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("mat", [Material.dimer(), cubic], ids=["quadratic", "cubic"])
def test_gradient_central_difference(mat, rng):
    pr = WaveProblem(mat, 1.5, 16)
    phi, eta = small_field(rng), PeriodicField.random(16, rng, decay=1.5)
    omega = 1.1
    exact = inner_product(phi_op(pr, phi, omega), eta)
    errs = []
    for h in (1e-2, 1e-3, 1e-4):
        fd = (energy(pr, phi + h * eta, omega)[2] - energy(pr, phi - h * eta, omega)[2]) / (2 * h)
        errs.append(abs(fd - exact))
    # second order: each decade of h gains about two decades of accuracy
    assert errs[0] / errs[1] > 10 ** 1.9
    assert errs[1] / errs[2] > 10 ** 1.9 or errs[2] < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=seeds, omega=st.floats(0.3, 3.0))
def test_derivative_orthogonality(seed, omega):
    pr = WaveProblem(cubic, 1.5, 16)
    phi = small_field(np.random.default_rng(seed))
    Phi, dphi = phi_op(pr, phi, omega), derivative(phi)
    assert abs(inner_product(Phi, dphi)) <= 1e-11 * max(sobolev_norm(Phi) * sobolev_norm(dphi), 1e-3)


def test_linearization_finite_difference(rng):
    pr = WaveProblem(cubic, 1.5, 16)
    phi, eta = small_field(rng), PeriodicField.random(16, rng, decay=1.5)
    omega, h = 1.3, 1e-6
    fd = (phi_op(pr, phi + h * eta, omega) - phi_op(pr, phi - h * eta, omega)) / (2 * h)
    assert sobolev_norm(fd - phi_linearized(pr, phi, omega, eta)) < 1e-8


def test_omega_derivative_finite_difference(rng):
    pr = WaveProblem(cubic, 1.5, 16)
    phi = small_field(rng)
    omega, h = 1.3, 1e-6
    fd = (phi_op(pr, phi, omega + h) - phi_op(pr, phi, omega - h)) / (2 * h)
    assert sobolev_norm(fd - phi_omega_derivative(pr, phi, omega)) < 1e-7


@pytest.mark.parametrize("a", [0.3, -0.05, 1e-4])
def test_scaled_operator(a, rng):
    pr = WaveProblem(cubic, 1.5, 16)
    phi = small_field(rng)
    assert phi_scaled(pr, phi, 1.2, a).allclose(phi_op(pr, a * phi, 1.2) / a, atol=1e-12)


def test_first_integral_of_zero(problem):
    tr = first_integral(problem, PeriodicField.zeros(problem.N), 1.4)
    assert np.all(tr.J == 0.0)


@settings(max_examples=10, deadline=None)
@given(seed=seeds, omega=st.floats(0.3, 3.0))
def test_first_integral_derivative_identity(seed, omega):
    pr = WaveProblem(cubic, 1.5, 12)
    phi = small_field(np.random.default_rng(seed), 12)
    tr = first_integral(pr, phi, omega)
    assert tr.pointwise_defect < 1e-12 * (1 + np.abs(tr.J).max())
    assert abs(tr.phi_dot_dphi - tr.mean_dJ) < 1e-12


@pytest.fixture(scope="module")
def solved(material, data):
    pr = WaveProblem(material, np.sqrt(2.0), 32)
    return pr, solve_point(pr, data, 1e-3, SolverConfig(N=32))


def test_first_integral_constant_on_solution(solved):
    pr, pt = solved
    assert first_integral(pr, pt.profile, pt.omega).variation < 1e-8


def test_lattice_residual_zero_solution(problem, rng):
    pt = SimpleNamespace(profile=PeriodicField.zeros(problem.N), omega=1.4)
    samples = np.column_stack([rng.integers(-50, 51, 20), rng.uniform(0, 20, 20)])
    assert lattice_residual(problem, pt, samples) == 0.0


def test_lattice_residual_solved_point(solved, rng):
    pr, pt = solved
    samples = np.column_stack([rng.integers(-50, 51, 100), rng.uniform(0, 20, 100)])
    rep = residual_report(pr, pt, samples)
    assert rep["lattice_residual_max"] < 1e-8
    assert rep["phi_residual_l2"] < 1e-10
    assert rep["jc_variation"] < 1e-8
    assert set(rep) == {"phi_residual_l2", "derivative_orthogonality", "nu0_orthogonality",
                        "jc_variation", "lattice_residual_max"}


def test_lattice_residual_tracks_operator_residual(material, data, rng):
    # stop the iteration early at increasing depth; both residuals must shrink together
    pr = WaveProblem(material, np.sqrt(2.0), 32)
    a = 0.01
    samples = np.column_stack([rng.integers(-50, 51, 100), rng.uniform(0, 20, 100)])
    psi, xi = PeriodicField.zeros(32), 0.0
    rows = []
    for _ in range(3):
        psi, xi = fixed_point_step(pr, data, psi, xi, a)
        pt = SimpleNamespace(profile=a * (data.nu1 + psi), omega=data.omega_c + xi)
        rows.append((sobolev_norm(phi_op(pr, pt.profile, pt.omega)),
                     lattice_residual(pr, pt, samples)))
    rows = np.array(rows)
    assert np.all(np.diff(rows[:, 0]) < 0) and np.all(np.diff(rows[:, 1]) < 0)
    ratio = rows[:, 1] / rows[:, 0]
    assert ratio.max() / ratio.min() < 10
