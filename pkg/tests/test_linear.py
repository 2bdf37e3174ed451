import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from dimerwave.errors import DomainError
from dimerwave.linear import (apply_L, apply_L_prime, coercive_solve, critical_frequency,
                              dispersion, kernel_basis, lambda_plus_prime, omega_bracket,
                              speed_of_sound, symbol_D, symbol_L, transversality)
from dimerwave.model import Material
from dimerwave.spectral import PeriodicField, inner_product, sobolev_norm


def hand_L(kappa, m, c, K):
    """-c^2 K^2 M + D(K), written out from the linearized lattice equations."""
    e = np.exp(1j * K)
    D = np.array([[1 + kappa, -(e + kappa / e)],
                  [-(kappa * e + 1 / e), 1 + kappa]])
    return D - c * c * K * K * np.diag([1.0, m])


def eig_oracle(kappa, w, K):
    m = 1.0 / w
    D = hand_L(kappa, m, 0.0, K)
    return np.sort(np.linalg.eigvals(np.diag([1.0, w]) @ D).real)


materials = st.tuples(st.floats(0.2, 6.0), st.floats(0.2, 6.0)).filter(
    lambda t: t[0] > 1.05 or 1.0 / t[1] > 1.05)


def test_symbol_D_kills_constants_at_zero(material):
    np.testing.assert_allclose(symbol_D(material, 0.0) @ np.ones(2), 0.0, atol=1e-15)


def test_symbol_D_eigenvalues_half_pi(material):
    ev = np.sort(np.linalg.eigvals(np.linalg.inv(material.mass_matrix())
                                   @ symbol_D(material, np.pi / 2)).real)
    np.testing.assert_allclose(ev, [2.0, 4.0], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(K=st.floats(-10, 10), kw=materials)
def test_symbol_D_hermitian_and_matches_hand(K, kw):
    mat = Material.dimer(m=1.0 / kw[1], kappa=kw[0])
    D = symbol_D(mat, K)
    np.testing.assert_allclose(D, D.conj().T, atol=1e-14)
    np.testing.assert_allclose(symbol_L(mat, 1.3, K), hand_L(kw[0], mat.m, 1.3, K), atol=1e-12)


def test_dispersion_half_pi(material):
    lm, lp, rho = dispersion(material, np.pi / 2)
    assert (rho, lp, lm) == (pytest.approx(2.0, abs=1e-15), pytest.approx(4.0, abs=1e-15),
                             pytest.approx(2.0, abs=1e-15))


@settings(max_examples=30, deadline=None)
@given(kw=materials)
def test_acoustic_branch_vanishes_at_zero(kw):
    mat = Material.dimer(m=1.0 / kw[1], kappa=kw[0])
    assert abs(dispersion(mat, 0.0)[0]) < 1e-14


@settings(max_examples=50, deadline=None)
@given(K=st.floats(-8, 8), kw=materials)
def test_dispersion_trace_and_eigensolve(K, kw):
    kap, w = kw
    mat = Material.dimer(m=1.0 / w, kappa=kap)
    lm, lp, _ = dispersion(mat, K)
    assert lm + lp == pytest.approx((1 + kap) * (1 + w), rel=1e-13)
    np.testing.assert_allclose([lm, lp], eig_oracle(kap, w, K), rtol=1e-10,
                               atol=1e-12 * (1 + kap) * (1 + w))


def test_lambda_plus_prime_finite_difference(material):
    h = 1e-6
    for K in (0.3, 1.1, 2.7):
        fd = (dispersion(material, K + h)[1] - dispersion(material, K - h)[1]) / (2 * h)
        assert lambda_plus_prime(material, K) == pytest.approx(fd, abs=1e-8)


def test_speed_of_sound_values():
    assert speed_of_sound(Material.dimer(m=1.0, kappa=2.0)) == pytest.approx(2 / np.sqrt(3), abs=1e-15)
    assert speed_of_sound(Material.dimer(m=1.0, kappa=1.0)) == 1.0


@pytest.mark.parametrize("m, kappa", [(1.0, 2.0), (0.5, 1.0), (0.25, 3.0)])
def test_speed_of_sound_small_k_limit(m, kappa):
    mat = Material.dimer(m=m, kappa=kappa)
    K = 1e-4
    assert np.sqrt(dispersion(mat, K)[0]) / K == pytest.approx(speed_of_sound(mat), rel=1e-6)


def test_critical_frequency_default(material):
    # independent scalar root of 2 K^2 = 3 + sqrt(1 + 8 cos^2 K)
    oracle = brentq(lambda K: 2 * K * K - 3 - np.sqrt(1 + 8 * np.cos(K) ** 2), 0.5, 3.0,
                    xtol=1e-15)
    K = critical_frequency(material, np.sqrt(2.0))
    assert K == pytest.approx(1.428, abs=1e-3)
    assert K == pytest.approx(oracle, abs=1e-13)
    lo, hi = omega_bracket(material, np.sqrt(2.0))
    assert lo <= K <= hi
    assert abs(2 * K * K - dispersion(material, K)[1]) < 1e-12


@settings(max_examples=30, deadline=None)
@given(kw=materials, ratio=st.floats(1.001, 5.0))
def test_critical_frequency_bracket_and_residual(kw, ratio):
    mat = Material.dimer(m=1.0 / kw[1], kappa=kw[0])
    c = ratio * speed_of_sound(mat)
    K = critical_frequency(mat, c)
    lo, hi = omega_bracket(mat, c)
    assert lo <= K <= hi
    assert abs(c * c * K * K - dispersion(mat, K)[1]) < 1e-12 * max(1.0, c * c * K * K)


def test_subsonic_speed_rejected(material):
    with pytest.raises(DomainError, match="subsonic"):
        critical_frequency(material, 1.0)


def test_kernel_orthonormal(data):
    nus = data.kernel
    gram = np.array([[inner_product(a, b) for b in nus] for a in nus])
    np.testing.assert_allclose(gram, np.eye(3), atol=1e-14)
    for nu in nus:
        assert sobolev_norm(apply_L(data, nu)) < 1e-12


def test_mass_dimer_kernel_cosine_form():
    mat = Material.dimer(m=0.5, kappa=1.0, beta=1.0)
    c = np.sqrt(2.0)
    d = kernel_basis(mat, c, 16)
    om = d.omega_c
    x = np.linspace(0, 2 * np.pi, 41)
    vec = np.array([2 * np.cos(om), 2 - c * c * om * om])
    expected = np.outer(vec, np.cos(x))
    got = d.nu1.evaluate(x)
    scale = np.sum(got * expected) / np.sum(expected * expected)
    np.testing.assert_allclose(got, scale * expected, atol=1e-14)


def test_higher_modes_nonsingular(data):
    k = np.arange(2, data.N + 1)
    sv = np.linalg.svd(symbol_L(data.material, data.c, data.omega_c * k), compute_uv=False)
    assert sv.min() > 0.1


def test_transversality_identities(data):
    Lp1 = apply_L_prime(data, data.nu1)
    Lp2 = apply_L_prime(data, data.nu2)
    assert abs(inner_product(Lp1, data.nu2)) < 1e-13
    assert inner_product(Lp2, data.nu2) == pytest.approx(inner_product(Lp1, data.nu1), rel=1e-13)
    num, closed = transversality(data)
    assert num == pytest.approx(closed, rel=1e-10)
    assert 2 * data.c ** 2 * data.omega_c - data.lambda_plus_prime > 0


def test_transversality_constant_sign_over_speeds(material):
    cs = speed_of_sound(material) * np.linspace(1.01, 3.0, 12)
    signs = {np.sign(kernel_basis(material, c, 8).transversality) for c in cs}
    # the sign is negative in this normalization; what matters is that it never flips
    assert signs == {-1.0}


def test_coercive_solve_zero(data):
    assert coercive_solve(data, PeriodicField.zeros(data.N)).allclose(
        PeriodicField.zeros(data.N), atol=0.0)


def test_coercive_solve_mode_two_dense_oracle(data):
    eta = PeriodicField.from_modes(data.N, {2: (0.5, 0.0)})
    psi = coercive_solve(data, eta)
    L2 = hand_L(data.material.kappa, data.material.m, data.c, 2 * data.omega_c)
    np.testing.assert_allclose(psi.coeffs[:, 2], np.linalg.solve(L2, [0.5, 0.0]), atol=1e-14)
    assert np.abs(np.delete(psi.coeffs, 2, axis=1)).max() == 0.0


def test_coercive_solve_random_orthogonal(data, rng):
    eta = PeriodicField.random(data.N, rng)
    for nu in data.kernel:
        eta = eta - inner_product(eta, nu) * nu
    psi = coercive_solve(data, eta)
    assert sobolev_norm(apply_L(data, psi) - eta) < 1e-12
    assert max(abs(inner_product(psi, nu)) for nu in data.kernel) < 1e-13
    assert sobolev_norm(psi, 2) <= data.coercivity_bound * sobolev_norm(eta)


def test_coercive_solve_rejects_kernel_component(data):
    with pytest.raises(DomainError, match="nu1"):
        coercive_solve(data, data.nu1)


def test_coercivity_uniform_over_speeds(material, rng):
    ratios = []
    bound = None
    for r in (1.01, 1.5, 3.0):
        d = kernel_basis(material, r * speed_of_sound(material), 16)
        bound = d.coercivity_bound
        for _ in range(10):
            eta = PeriodicField.random(16, rng, decay=0.5)
            for nu in d.kernel:
                eta = eta - inner_product(eta, nu) * nu
            ratios.append(sobolev_norm(coercive_solve(d, eta), 2) / sobolev_norm(eta))
    assert max(ratios) <= bound


def test_lineardata_serializes(data):
    doc = data.to_dict()
    assert doc["N"] == data.N and len(doc["nu1"]) == data.N + 1
    assert doc["transversality"] == data.transversality
