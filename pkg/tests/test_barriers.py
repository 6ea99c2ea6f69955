import math

import numpy as np
import pytest

from hopfsmp.barriers import (BudgetExhaustedError, PolarDirection, build_hopf_barrier, radial_F,
                              radial_F_lower_bound, solve_barrier_ode)
from hopfsmp.profiles import InverseLogPower, InverseLogSquare, Laplacian, Power


def test_laplacian_n3_decay():
    b = solve_barrier_ode(Laplacian(), 3, 0.5, -1.0, rho_max=1.0)
    assert b.slope(1.0) == pytest.approx(-0.25, rel=1e-9)


def test_hopf_barrier_laplacian_closed_form():
    r, eps = 1.0, 1.0
    b = build_hopf_barrier(Laplacian(), 3, r, eps)
    rho = np.linspace(0.5, 1.0, 17)
    np.testing.assert_allclose(b.value(rho), eps * r / 4 * (1 / rho - 1 / r), atol=1e-10)
    assert b.value(0.5) == pytest.approx(eps / 4, rel=1e-10)
    assert b.v[-1] == 0.0 and abs(b.value(1.0)) < 1e-15


def test_hopf_barrier_divergent_k1_exists():
    b = build_hopf_barrier(InverseLogPower(1.0), 2, 1.0, 0.05)
    assert b.rho_end == pytest.approx(1.0)
    assert np.all(b.v_rho < 0) and np.all(np.diff(b.v_rho) > 0)
    assert np.max(np.abs(b.implicit_residual())) < 1e-8


def test_finite_budget_exhausts():
    # g = t: the budget (eps/r)^2/(4N) is far too small to reach rho = r
    with pytest.raises(BudgetExhaustedError):
        build_hopf_barrier(Power(1.0), 2, 1.0, 0.01)


def test_finite_budget_stops_at_exhaustion_radius():
    prof = InverseLogSquare()
    N, rho0, zeta0 = 2, 1.0, -0.01
    b = solve_barrier_ode(prof, N, rho0, zeta0)
    P0 = float(prof.primitive_log(math.log(zeta0 ** 2 / N)))
    assert b.rho_out == pytest.approx(rho0 * math.exp(P0 / (N - 1)), rel=1e-14)
    assert np.all(np.diff(b.v_rho) >= 0)
    assert abs(b.slope_exact(b.rho_out)) == 0.0
    assert np.max(np.abs(b.implicit_residual())) < 1e-8


def test_slope_matches_exact_inversion():
    b = solve_barrier_ode(InverseLogSquare(), 3, 1.0, -0.02)
    rho = np.linspace(1.0, 0.5 * (1.0 + b.rho_out), 50)
    np.testing.assert_allclose(b.slope(rho), b.slope_exact(rho), rtol=1e-8)


def test_bad_inputs():
    with pytest.raises(ValueError):
        solve_barrier_ode(Laplacian(), 2, 1.0, 0.3, rho_max=2.0)
    with pytest.raises(ValueError):
        solve_barrier_ode(Laplacian(), 2, 1.0, -0.3)  # divergent budget needs rho_max


def test_radial_F_zero_on_barrier_and_lower_bound():
    prof = InverseLogPower(1.0)
    N = 3
    b = build_hopf_barrier(prof, N, 1.0, 0.05)
    rng = np.random.default_rng(5)
    d = rng.normal(size=(10_000, N))
    d /= np.linalg.norm(d, axis=1)[:, None]
    rho = 0.75
    F = radial_F(prof, N, d, b.slope(rho), b.curvature(rho), rho)
    lower = radial_F_lower_bound(prof, b, PolarDirection(tuple(d[0])), rho).lower_bound
    assert lower == pytest.approx(0.0, abs=1e-8)  # the ODE is exactly this bound
    assert np.min(F) >= lower - 1e-10
