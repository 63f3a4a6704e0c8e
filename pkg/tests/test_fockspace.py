import math

import numpy as np
import pytest

from weakmeas import (
    QuadratureGrid,
    TruncationWarning,
    alpha_from_quadratures,
    coherent_state,
    default_grid,
    displaced_thermal_state,
    glauber_p_displaced_thermal,
    make_operator,
    position_density,
    position_kernel,
    quadrature_wavefunction,
    thermal_state,
    wavefunction_table,
)


def test_number_operator_diagonal():
    n = make_operator("number", 4)
    assert np.allclose(n.matrix, np.diag([0, 1, 2, 3]))
    assert n.spectrum_lower_bound == 0.0


def test_hamiltonian_diagonal():
    h = make_operator("hamiltonian", 4)
    assert np.allclose(h.matrix, np.diag([0.5, 1.5, 2.5, 3.5]))
    assert h.spectrum_lower_bound == 0.5


def test_canonical_commutator_on_inner_block():
    dim = 40
    q = make_operator("position", dim).matrix
    p = make_operator("momentum", dim).matrix
    comm = q @ p - p @ q
    # truncation corrupts only the top levels; the inner block is exact
    block = comm[:30, :30]
    assert np.max(np.abs(block - 1j * np.eye(30))) < 1e-10


def test_ladder_quadrature_relation():
    dim = 25
    a = make_operator("annihilation", dim).matrix
    q = make_operator("position", dim).matrix
    p = make_operator("momentum", dim).matrix
    assert np.max(np.abs(a - (q + 1j * p) / math.sqrt(2))) < 1e-12


def test_momentum_squared_is_exact_ladder_combination():
    dim = 12
    p2 = make_operator("momentum_squared", dim)
    assert p2.is_hermitian()
    # diagonal n + 1/2, off-diagonal -sqrt(n(n-1))/2 two levels away
    assert np.allclose(np.diag(p2.matrix), np.arange(dim) + 0.5)
    assert p2.matrix[0, 2] == pytest.approx(-math.sqrt(2) / 2)


def test_hermitian_kinds_are_hermitian():
    for kind in ("number", "position", "momentum", "momentum_squared", "hamiltonian"):
        assert make_operator(kind, 17).is_hermitian(), kind


def test_make_operator_rejects_small_dim_and_unknown_kind():
    with pytest.raises(ValueError):
        make_operator("number", 1)
    with pytest.raises(ValueError):
        make_operator("parity", 8)


def test_coherent_vacuum_is_ground_projector():
    rho = coherent_state(0.0, 8)
    expected = np.zeros((8, 8))
    expected[0, 0] = 1.0
    assert np.max(np.abs(rho.matrix - expected)) < 1e-15


def test_coherent_mean_photon_number():
    alpha = alpha_from_quadratures(1.0, 1.0)  # |alpha| = 1
    rho = coherent_state(alpha, 30)
    n = make_operator("number", 30)
    assert rho.expectation(n.matrix).real == pytest.approx(1.0, abs=1e-8)


def test_coherent_is_pure():
    rho = coherent_state(alpha_from_quadratures(1.4, -0.6), 30)
    assert abs(rho.purity() - 1.0) < 1e-10
    rho.validate()


def test_coherent_truncation_guard():
    with pytest.warns(TruncationWarning):
        coherent_state(3.0, 20)  # |alpha|^2 = 9 > 20/4
    with pytest.raises(ValueError):
        coherent_state(3.0, 20, strict=True)


def test_displaced_thermal_reduces_to_coherent():
    alpha = alpha_from_quadratures(0.9, 0.4)
    hot = displaced_thermal_state(alpha, 0.0, 30)
    cold = coherent_state(alpha, 30)
    assert np.max(np.abs(hot.matrix - cold.matrix)) < 1e-10


def test_thermal_quadrature_variance():
    rho = displaced_thermal_state(0.0, 0.5, 40)
    q = make_operator("position", 40)
    var = rho.expectation(q.matrix @ q.matrix).real
    assert var == pytest.approx(1.0, abs=1e-6)  # n_th + 1/2


def test_thermal_ground_population():
    rho = displaced_thermal_state(0.0, 1.0, 40)
    assert rho.matrix[0, 0].real == pytest.approx(0.5, abs=1e-10)


def test_displaced_thermal_validates(rng):
    for _ in range(5):
        alpha = alpha_from_quadratures(rng.uniform(-1, 1), rng.uniform(-1, 1))
        displaced_thermal_state(alpha, rng.uniform(0, 1), 36).validate()


def test_wavefunction_ground_peak():
    assert quadrature_wavefunction(0, 0.0) == pytest.approx(np.pi ** -0.25, abs=1e-12)


def test_wavefunction_odd_parity():
    assert quadrature_wavefunction(1, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_wavefunction_orthonormality_on_grid():
    grid = default_grid(dim=6)
    psi0 = quadrature_wavefunction(0, grid.points)
    psi3 = quadrature_wavefunction(3, grid.points)
    psi5 = quadrature_wavefunction(5, grid.points)
    assert grid.integrate(psi0 * psi0) == pytest.approx(1.0, abs=1e-8)
    assert abs(grid.integrate(psi3 * psi5)) < 1e-8
    assert grid.integrate(psi5 * psi5) == pytest.approx(1.0, abs=1e-8)


def test_spectrum_lower_bounds_hold():
    for kind in ("number", "momentum_squared", "hamiltonian", "position", "momentum"):
        op = make_operator(kind, 24)
        smallest = np.linalg.eigvalsh(op.matrix).min()
        assert smallest >= op.spectrum_lower_bound - 1e-10


def test_wavefunction_matches_recurrence_free_low_orders():
    q = np.linspace(-2, 2, 9)
    # psi_2 = (2 q^2 - 1)/sqrt(2) * psi_0
    psi0 = np.pi ** -0.25 * np.exp(-q * q / 2)
    assert np.allclose(quadrature_wavefunction(2, q), (2 * q * q - 1) / math.sqrt(2) * psi0)


def test_position_kernel_vacuum_center():
    rho = coherent_state(0.0, 10)
    assert position_kernel(rho, 0.0) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-12)


def test_position_kernel_off_diagonal_hermitian(rng):
    from conftest import random_density

    rho = random_density(10, rng)
    left = position_kernel(rho, 0.4, -1.1)
    right = position_kernel(rho, -1.1, 0.4)
    assert left == pytest.approx(right.conjugate(), abs=1e-14)


def test_position_kernel_diagonal_nonnegative(rng):
    from conftest import random_density

    rho = random_density(12, rng)
    dens = position_density(rho, np.linspace(-6, 6, 101))
    assert np.all(dens >= -1e-14)


def test_thermal_diagonal_matches_gaussian():
    rho = displaced_thermal_state(0.0, 0.5, 40)
    q = np.linspace(-3, 3, 13)
    expected = np.exp(-q * q / 2.0) / math.sqrt(2 * math.pi)  # variance n_th + 1/2 = 1
    assert np.max(np.abs(position_density(rho, q) - expected)) < 1e-6


def test_grid_total_probability(rng):
    from conftest import random_density

    grid = default_grid(dim=20)
    for _ in range(3):
        rho = random_density(20, rng)
        assert grid.integrate(position_density(rho, grid.points)) == pytest.approx(
            1.0, abs=1e-6)


def test_doubling_dim_leaves_scalars_converged():
    alpha = alpha_from_quadratures(1.0, 0.5)
    vals = []
    for dim in (30, 60):
        rho = displaced_thermal_state(alpha, 0.4, dim)
        n = make_operator("number", dim)
        vals.append([rho.expectation(n.matrix).real,
                     position_kernel(rho, 0.7).real,
                     rho.purity()])
    assert np.max(np.abs(np.array(vals[0]) - np.array(vals[1]))) < 1e-8


def test_glauber_p_distribution():
    alpha = alpha_from_quadratures(0.8, 0.0)
    p = glauber_p_displaced_thermal(alpha, 0.5)
    assert p(alpha) == pytest.approx(1 / (math.pi * 0.5), abs=1e-12)
    # 2-D quadrature over the complex plane normalizes to one
    g = np.linspace(-5, 5, 220)
    w = g[1] - g[0]
    re, im = np.meshgrid(g, g)
    total = np.sum(p(re + 1j * im)) * w * w
    assert total == pytest.approx(1.0, abs=1e-6)
    assert np.all(p(re + 1j * im) >= 0)
    with pytest.raises(ValueError):
        glauber_p_displaced_thermal(alpha, 0.0)


def test_thermal_state_rejects_negative_occupation():
    with pytest.raises(ValueError):
        thermal_state(-0.1, 10)


def test_grid_with_points_injects_zero_weight_nodes():
    grid = QuadratureGrid.gauss_legendre(5.0, 50)
    extended = grid.with_points([0.0, 1.25])
    assert {0.0, 1.25} <= set(extended.points)
    assert extended.integrate(np.ones(extended.size)) == pytest.approx(10.0, abs=1e-12)


def test_wavefunction_table_shape_and_tail():
    table = wavefunction_table(25, np.array([-14.0, 0.0, 14.0]))
    assert table.shape == (25, 3)
    assert np.all(np.abs(table[:, [0, 2]]) < 1e-12)  # far tails vanish
