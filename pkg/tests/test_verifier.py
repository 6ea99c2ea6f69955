import numpy as np
import pytest

from hopfsmp.profiles import InverseLogSquare, Laplacian, Power
from hopfsmp.verifier import (EnergyModel, GridField, PreconditionError, UnknownScenario, check_sign,
                              comparison_check, default_tol, fd_apply_F, fd_F_points, lattice, minimize_energy,
                              smp_scenario)


def test_quadratic_residual_is_2N():
    for N in (2, 3):
        grid = lattice([-1.0] * N, [1.0] * N, 9)
        u = grid.with_values(np.sum(grid.coords() ** 2, axis=-1))
        res = fd_apply_F(u, Laplacian())
        active = ~res.boundary
        np.testing.assert_allclose(res.values[active], 2.0 * N, rtol=1e-12)
        assert np.all(res.values[res.boundary] == 0.0)


def test_fd_points_matches_cubic_profile():
    # u = x^3 along x_1 with g = t: F = (3x^2)^2 * 6x while (3x^2)^2 stays below t_bar = 1/2
    pts = np.array([[0.3, 0.1], [0.4, -0.2]])
    F = fd_F_points(lambda X: X[..., 0] ** 3, pts, 1e-4, Power(1.0))
    np.testing.assert_allclose(F, 9 * pts[:, 0] ** 4 * 6 * pts[:, 0], rtol=1e-6)


def test_check_sign_examples():
    grid = lattice([0.0, 0.0], [1.0, 1.0], 5)
    vals = np.zeros(grid.shape)
    vals[2, 2] = -1e-3
    f = grid.with_values(vals)
    bad = check_sign(f, "sub", tol=1e-6)
    assert not bad.ok and bad.worst_index == (2, 2) and bad.worst_value == -1e-3
    assert check_sign(f, "sub", tol=1e-2).ok
    assert check_sign(f, "super", tol=0.0).ok
    assert default_tol(0.1) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        check_sign(f, "both")


def test_gridfield_validation():
    with pytest.raises(ValueError):
        GridField(np.zeros(2), np.array([0.1, -0.1]), np.zeros((3, 3)), np.zeros((3, 3), bool))
    with pytest.raises(ValueError):
        GridField(np.zeros(2), np.array([0.1, 0.1]), np.full((3, 3), np.nan), np.zeros((3, 3), bool))


@pytest.mark.parametrize("prof,slope", [(Laplacian(), 0.02), (InverseLogSquare(), 0.02), (Power(1.0), 0.5)])
def test_linear_data_gives_linear_minimizer(prof, slope):
    # constant gradient makes every edge flux equal, so the linear field is stationary
    grid = lattice([0.0, 0.0], [1.0, 1.0], 9)
    X = grid.coords()
    lin = slope * (X[..., 0] - 0.5 * X[..., 1])
    bd = grid.with_values(np.where(grid.boundary, lin, 0.0))
    res = minimize_energy(EnergyModel.from_profiles(prof, 2, octaves_below=60), bd)
    assert res.converged
    np.testing.assert_allclose(res.field.values, lin, atol=1e-9)


def test_energy_is_convex_along_segments():
    m = EnergyModel.from_profiles(InverseLogSquare(), 2, amplitude=0.05, octaves_below=60)
    rng = np.random.default_rng(11)
    h = np.array([0.1, 0.1])
    for _ in range(20):
        a, b = rng.normal(size=(2, 6, 6))
        assert m.energy(0.5 * (a + b), h) <= 0.5 * (m.energy(a, h) + m.energy(b, h)) + 1e-14


def test_hessian_matches_gradient_differences():
    m = EnergyModel.from_profiles(Power(1.0), 2)
    rng = np.random.default_rng(2)
    h = np.array([0.2, 0.25])
    u = rng.normal(size=(5, 4)) * 0.3
    H = m.hessian(u, h).toarray()
    e = np.zeros_like(u)
    e[2, 1] = 1e-6
    col = (m.gradient(u + e, h) - m.gradient(u - e, h)).ravel() / 2e-6
    np.testing.assert_allclose(col, H[:, np.ravel_multi_index((2, 1), u.shape)], atol=1e-6)


def test_gd_agrees_with_newton():
    grid = lattice([0.0, 0.0], [1.0, 1.0], 7)
    X = grid.coords()
    bd = grid.with_values(np.where(grid.boundary, np.sin(3 * X[..., 0]) + X[..., 1] ** 2, 0.0))
    m = EnergyModel.from_profiles(Laplacian(), 2)
    a = minimize_energy(m, bd, method="newton")
    b = minimize_energy(m, bd, method="gd")
    assert a.converged and b.converged
    np.testing.assert_allclose(a.field.values, b.field.values, atol=1e-7)


def test_comparison_identical_and_ordered_data():
    grid = lattice([0.0, 0.0], [1.0, 1.0], 7)
    m = EnergyModel.from_profiles(Laplacian(), 2)
    zero = grid.with_values(np.zeros(grid.shape))
    one = grid.with_values(np.where(grid.boundary, 1.0, 0.0))
    same = comparison_check(one, one, m)
    assert same.ok and abs(same.max_violation) < 1e-12
    ordered = comparison_check(zero, one, m)
    assert ordered.ok and ordered.max_violation <= 0.0
    with pytest.raises(PreconditionError):
        comparison_check(one, zero, m)


def test_scenarios():
    flat = smp_scenario("flat_g")
    assert flat["violated"] and flat["F_zero_on_flat"] and flat["interior_min"]
    lap = smp_scenario("laplacian", n=9)
    assert lap["boundary_min"] and lap["comparison"]["ok"]
    with pytest.raises(UnknownScenario):
        smp_scenario("nope")
