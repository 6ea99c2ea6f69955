import math

import numpy as np
import pytest

from hopfsmp.counterexample import (NoCounterexample, build_counterexample, fd_disagreement,
                                    interior_ball_ratio, supersolution_certificate, verify_boundary_regularity,
                                    verify_interior_ball)
from hopfsmp.profiles import InverseLogPower, InverseLogSquare, Laplacian, Power


@pytest.fixture(scope="module")
def k3():
    return build_counterexample(InverseLogPower(3.0), 2)


def test_divergent_budget_has_no_counterexample():
    with pytest.raises(NoCounterexample):
        build_counterexample(Laplacian(), 2)
    with pytest.raises(NoCounterexample):
        build_counterexample(InverseLogPower(1.0), 3)


def test_outer_radius_closed_form(k3):
    # G(1) with scale one = P(1); past t_bar the primitive grows by g(t_bar)/2 per unit of ln t
    prof = k3.profile
    L = -prof.lt_bar
    G1 = L ** -2 / 4 + 0.5 * L ** -3 * L
    assert k3.R1 == pytest.approx(2 * math.exp(G1) - 1, rel=1e-13)
    assert k3.R1 == pytest.approx(k3.R1_quadrature, rel=1e-8)


def test_g_identity_and_closed_route(k3):
    # g(u_rho(R)^2) = 2 R1 c^2 along the curve, and the g^{-1} route agrees with root finding
    assert np.max(k3.g_identity_error) < 1e-8
    assert np.max(k3.closed_route_error) < 1e-6
    assert np.max(k3.radius_eq_residual) < 1e-8


def test_curve_is_monotone_and_below_R1(k3):
    # R(1 - c^2) rises towards R1 as c -> 0
    assert np.all(k3.delta > 0)
    assert np.all(np.diff(k3.delta) < 0)  # c is stored decreasing
    assert np.all(np.diff(k3.R) >= 0)
    assert k3.R[0] >= 1.0


def test_regular_boundary_k3(k3):
    assert verify_boundary_regularity(k3)
    assert np.max(fd_disagreement(k3)) < 1e-4
    assert abs(k3.dRdc_formula[-1]) < 1e-3
    assert k3.verdicts["normal_derivative_zero"]


def test_interior_ball_fails_for_k3(k3):
    assert not verify_interior_ball(k3)
    assert interior_ball_ratio(k3)[-1] > interior_ball_ratio(k3)[0]


def test_invlogsq_kink():
    dom = build_counterexample(InverseLogSquare(), 2)
    assert not dom.verdicts["regular_boundary"]
    assert abs(dom.dRdc_formula[-1]) > 0.1


def test_power_has_interior_ball():
    dom = build_counterexample(Power(1.0), 2)
    assert dom.verdicts["interior_ball"]
    assert dom.verdicts["regular_boundary"]


def test_supersolution_certificate(k3):
    cert = supersolution_certificate(k3)
    assert cert.max_k <= 0 and cert.max_F <= 0
    assert cert.k_monotone and cert.eq_residual < 1e-6
    assert cert.ok


def test_polyline_closed(k3):
    poly = k3.boundary_polyline()
    np.testing.assert_allclose(poly[0], poly[-1])
    r = np.linalg.norm(poly, axis=1)
    assert r.min() == pytest.approx(1.0) and r.max() == pytest.approx(k3.R1)
