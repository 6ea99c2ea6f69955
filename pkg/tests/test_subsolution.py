import math

import numpy as np
import pytest

from hopfsmp.profiles import InapplicableError, InverseLogSquare, Laplacian
from hopfsmp.subsolution import (DomainError, SmallnessViolated, assemble_glued_subsolution, build_partition,
                                 compute_R1_annulus, compute_R_abar, distance_check, interface_mismatch,
                                 k_profile, placement, placement_chain_symbolic, rectangle_corner)


@pytest.fixture(scope="module")
def sub():
    return assemble_glued_subsolution(InverseLogSquare(), 2, 1.0, K=2.0)


def test_R1_closed_form():
    # G(0.1) = 1/(4 ln 10) for the integrand g(zeta^2)/zeta
    G = 1.0 / (4.0 * math.log(10.0))
    R1 = compute_R1_annulus(InverseLogSquare(), 2, 1.0, 0.1, K=2.0, enforce_smallness=False)
    assert R1 == pytest.approx(1.0 / math.expm1(G), rel=1e-13)
    assert R1 == pytest.approx(8.7194, abs=1e-4)
    assert compute_R1_annulus(InverseLogSquare(), 2, 2.0, 0.2, K=2.0, enforce_smallness=False) == \
        pytest.approx(2 * R1, rel=1e-13)


def test_R1_errors():
    with pytest.raises(InapplicableError):
        compute_R1_annulus(Laplacian(), 2, 1.0, 0.1)
    with pytest.raises(SmallnessViolated):
        compute_R1_annulus(InverseLogSquare(), 2, 1.0, 0.1, K=2.0)


def test_barrier_exhausts_at_R1_plus_r(sub):
    assert sub.w.slope(sub.R1) == pytest.approx(-sub.eps / sub.r, rel=1e-12)
    assert sub.w.rho_out == pytest.approx(sub.R1 + sub.r, rel=1e-13)


def test_R_abar_endpoints_and_monotone():
    prof, N, r, eps = InverseLogSquare(), 2, 1.0, 0.1
    R1 = compute_R1_annulus(prof, N, r, eps, enforce_smallness=False)
    assert compute_R_abar(prof, N, r, eps, R1, 1.0) == pytest.approx(R1, rel=1e-14)
    assert compute_R_abar(prof, N, r, eps, R1, 0.0) == 0.0
    a = np.linspace(0, 1, 2001)
    assert np.all(np.diff(compute_R_abar(prof, N, r, eps, R1, a)) >= 0)
    assert np.all(np.diff(compute_R_abar(prof, 3, r, eps, R1, a)) >= 0)


def test_partition_bounds_n2(sub):
    p = sub.partition
    g1 = float(sub.profile.g(sub.eps ** 2 / sub.r ** 2))
    assert p.c[1] == pytest.approx(math.sqrt(g1)) and p.s[1] == pytest.approx(math.sqrt(1 - g1))
    assert p.gap_c < p.sigma and p.gap_s < p.sigma
    assert p.S1 <= 2 * sub.K * sub.r and p.S2 <= sub.r / 4
    assert sub.l <= 2 * sub.K * sub.r and sub.l_N <= sub.r / 4
    assert np.all(np.diff(p.R) <= 0)  # nesting: a decreases along the partition


def test_partition_refinement_shrinks_gap():
    prof = InverseLogSquare()
    R1 = compute_R1_annulus(prof, 2, 1.0, 0.1, enforce_smallness=False)
    coarse = build_partition(prof, 2, 1.0, 0.1, 2.0, R1, m0=8)
    fine = build_partition(prof, 2, 1.0, 0.1, 2.0, R1, m0=64)
    assert fine.gap_c < coarse.gap_c and fine.gap_s < coarse.gap_s


def test_interface_continuity(sub):
    dv, dg = interface_mismatch(sub, 1000)
    assert dv * sub.eps < 1e-8
    assert dg * sub.eps / sub.r < 1e-6


def test_boundary_values(sub):
    inner = sub.embed(sub.boundary_points(4, "inner"))
    outer = sub.embed(sub.boundary_points(4, "outer"))
    v_in, _ = sub.evaluate(inner)
    v_out, _ = sub.evaluate(outer)
    assert np.all(v_in <= sub.eps * (1 + 1e-12)) and np.all(v_in > 0)
    assert np.max(np.abs(v_out)) < 1e-12 * sub.eps


def test_symmetry(sub):
    P = sub.boundary_points(3, "inner") + 0.5 * sub.r * np.array([0.6, 0.8])
    x = sub.embed(P)
    v = sub(x)
    for flip in ([-1, 1], [1, -1], [-1, -1]):
        np.testing.assert_allclose(sub(x * np.array(flip)), v, rtol=1e-13)


def test_domain_error(sub):
    with pytest.raises(DomainError):
        sub.evaluate(np.array([[0.0, 0.0]]))
    v, _ = sub.evaluate(np.array([[0.0, 0.0]]), outside="extend")
    # inside the region the extension is the constant w(R1), at most eps
    assert v[0] == pytest.approx(float(sub.w.value(sub.R1)), rel=1e-12)
    assert 0 < v[0] <= sub.eps


def test_k_non_increasing(sub):
    for i in range(0, sub.n, max(1, sub.n // 8)):
        for a in (0.0, 0.5 * sub.partition.a[i], sub.partition.a[i]):
            k = k_profile(sub, i, a)
            # k vanishes identically on the outer shell at a = 1, up to rounding
            assert np.all(k <= 1e-12 * (sub.R1 + sub.r))
            assert np.all(np.diff(k) <= 1e-12 * (sub.R1 + sub.r))


def test_distances(sub):
    axis = np.zeros(sub.N)
    axis[-1] = sub.l_N
    assert sub.distance_to_region(axis[None])[0] == 0.0
    q = rectangle_corner(sub)
    assert sub.distance_to_region(q[None])[0] < sub.l_N
    assert distance_check(sub, 1000, np.random.default_rng(0))


def test_placement_n2(sub):
    d = 1.05 * (32 * (sub.N - 1) * sub.K ** 2 + 7 / 8)
    z = d * np.ones(sub.N) / math.sqrt(sub.N)
    rep = placement(sub, np.zeros(sub.N), d, z)
    assert rep.r_ok and rep.corners_inside and rep.z_in_collar
    assert rep.actual_sum <= rep.chain_lhs < rep.chain_rhs
    assert rep.dist_z < 0.75 * sub.r


def test_placement_chain_vanishes_at_bound():
    _, at_bound, identity = placement_chain_symbolic()
    assert identity and at_bound == 0
