"""Acceptance suite: one PASS/FAIL line per criterion at the stated tolerances."""

import math

import numpy as np
import pytest
import sympy as sp

from hopfsmp.barriers import solve_barrier_ode
from hopfsmp.counterexample import build_counterexample, fd_disagreement, verify_boundary_regularity
from hopfsmp.gintegral import classify_G, compute_G
from hopfsmp.profiles import (InverseLogPower, InverseLogSquare, Laplacian, Power, check_assumptions,
                              directional_sum, h_n, k1, k2)
from hopfsmp.subsolution import (assemble_glued_subsolution, distance_check, interface_mismatch, placement,
                                 placement_chain_symbolic)
from hopfsmp.verifier import (COMPARE_TOL, GRAD_TOL, EnergyModel, glued_fd_check, hopf_pair, scenario_flat_g,
                              scenario_glued, scenario_laplacian)

SAMPLES = 10_000
SLACK = 1e-10


@pytest.fixture(scope="module")
def glued():
    return scenario_glued()


@pytest.fixture(scope="module")
def laplacian_runs():
    return {N: scenario_laplacian(17, N) for N in (2, 3)}


@pytest.fixture(scope="module")
def hopf_runs():
    return {"laplacian": hopf_pair(Laplacian()), "invlogpow_k1": hopf_pair(InverseLogPower(1.0), eps=0.05)}


def test_criterion_1_budget_closed_form(record):
    prof = InverseLogSquare()
    N = 2
    # xi^2 / N spans (0, e^-4]
    xi = np.sqrt(N * np.exp(-4.0 - np.linspace(0.0, 60.0, 50)))
    oracle = -1.0 / (2.0 * np.log(xi ** 2 / N))
    closed = np.array([compute_G(prof, x, "invn", N, "closed").value for x in xi])
    quad = np.array([compute_G(prof, x, "invn", N, "quadrature").value for x in xi])
    err_c = float(np.max(np.abs(closed / oracle - 1)))
    err_q = float(np.max(np.abs(quad / oracle - 1)))
    kinds = {"invlogpow_k1": classify_G(InverseLogPower(1.0)), "laplacian": classify_G(Laplacian()),
             "invlogpow_k1_quadrature": classify_G(InverseLogPower(1.0), method="quadrature"),
             "laplacian_quadrature": classify_G(Laplacian(), method="quadrature")}
    ok = err_c < 1e-8 and err_q < 1e-8 and all(k == "Divergent" for k in kinds.values())
    record(1, "G closed form and divergence classes", ok,
           f"rel err closed={err_c:.2e} quadrature={err_q:.2e}; {kinds}")
    assert ok


def test_criterion_2_laplacian_barrier(record):
    worst_zeta, worst_impl = 0.0, 0.0
    rng = np.random.default_rng(0)
    for N in (2, 3, 4):
        rho0, zeta0 = 1.0, -0.3
        b = solve_barrier_ode(Laplacian(), N, rho0, zeta0, rho_max=8.0)
        exact = zeta0 * (rho0 / b.rho) ** (N - 1)
        worst_zeta = max(worst_zeta, float(np.max(np.abs(b.v_rho / exact - 1))))
        rho = rng.uniform(rho0, 8.0, 200)
        mid = b.slope(rho) / (zeta0 * (rho0 / rho) ** (N - 1)) - 1
        worst_zeta = max(worst_zeta, float(np.max(np.abs(mid))))
        worst_impl = max(worst_impl, float(np.max(np.abs(b.implicit_residual()))))
    ok = worst_zeta < 1e-8 and worst_impl < 1e-8
    record(2, "Laplacian barrier oracle N=2,3,4", ok, f"zeta rel err={worst_zeta:.2e}, implicit={worst_impl:.2e}")
    assert ok


def _lemma_profiles():
    return {"laplacian": Laplacian(), "invlogsq": InverseLogSquare(), "invlogpow_k1": InverseLogPower(1.0),
            "invlogpow_k3": InverseLogPower(3.0), "power_p1": Power(1.0)}


def test_criterion_3_lemma_suite(record):
    rng = np.random.default_rng(3)
    lines, ok = [], True
    n_42 = 0
    for name, prof in _lemma_profiles().items():
        rep = check_assumptions(prof, 3)
        lt = prof.lt_bar - rng.uniform(0.0, 600.0, SAMPLES)
        t = np.exp(lt)
        worst = {}
        if rep.L_iii_monotone:
            # h_n(a) >= h_n(1/n)
            w = np.inf
            for n in (2, 3, 4):
                a = rng.uniform(0, 1, SAMPLES)
                w = min(w, float(np.min(h_n(prof, n, t, a) - h_n(prof, n, t, 1.0 / n))))
            worst["h_n"] = w
            # sum_i g(t d_i^2) d_i^2 >= g(t/N)
            w = np.inf
            for N in (2, 3, 4):
                d = rng.normal(size=(SAMPLES, N))
                d /= np.linalg.norm(d, axis=1)[:, None]
                w = min(w, float(np.min(directional_sum(prof, t, d) - prof.g(t / N))))
            worst["directional"] = w
        if rep.extra_monotone_g and rep.extra_sum_bound:
            n_42 += 1
            a = np.sort(rng.uniform(0, 1, (SAMPLES, 2)), axis=1)
            worst["k1"] = float(np.min(k1(prof, t, a[:, 0]) - k1(prof, t, a[:, 1])))
            worst["k2"] = float(np.min(k2(prof, t, a[:, 0]) - k2(prof, t, a[:, 1])))
        ok &= all(v >= -SLACK for v in worst.values()) and "h_n" in worst
        lines.append(f"{name}: " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))
    ok &= n_42 >= 3
    record(3, "Lemma suite (h_n, directional sum, k1/k2)", ok, "; ".join(lines))
    assert ok


def test_criterion_4_counterexample(record):
    dom = build_counterexample(InverseLogPower(3.0), 2)
    r1_err = abs(dom.R1 / dom.R1_quadrature - 1)
    eqa = float(np.max(np.abs(dom.radius_eq_residual)))
    fd = float(np.max(fd_disagreement(dom)))
    tail = float(abs(dom.dRdc_formula[-1]))
    regular = verify_boundary_regularity(dom)
    sq = build_counterexample(InverseLogSquare(), 2)
    sq_tail = np.abs(sq.dRdc_formula[-8:])
    stable = float(np.ptp(sq_tail) / np.mean(sq_tail))
    limit = check_assumptions(InverseLogSquare(), 2).limit_ratio
    ok = (r1_err < 1e-8 and eqa < 1e-8 and fd < 1e-4 and tail < 1e-3 and regular
          and np.min(sq_tail) > 0.1 and stable < 1e-3 and limit.kind == "positive"
          and abs(limit.value - 0.5) < 1e-3)
    record(4, "Counterexample pipeline", ok,
           f"R1 rel={r1_err:.1e}, radius_eq={eqa:.1e}, fd={fd:.1e}, |dR/dc|(c_min)={tail:.2e}, "
           f"invlogsq |dR/dc|={np.min(sq_tail):.3f} (spread {stable:.1e}), limit={limit.value:.4f}")
    assert ok


def _chain_strict_below_bound():
    d, r, K, M, lam = sp.symbols("d r K M lam", positive=True)
    N = M + 1  # N >= 2
    diff = (d - r / 4) ** 2 - ((d - r / 2) ** 2 + 16 * (N - 1) * K ** 2 * r ** 2 + r ** 2 / 4)
    bound = d / (32 * (N - 1) * K ** 2 + sp.Rational(7, 8))
    # r = lam * bound: the difference is lam (1 - lam) times a positive factor
    q = sp.simplify(sp.factor(diff.subs(r, lam * bound)) / (lam * (1 - lam)))
    return bool(sp.simplify(q).is_positive)


def test_criterion_5_subsolution(record):
    prof = InverseLogSquare()
    _, at_bound, identity = placement_chain_symbolic()
    symbolic = identity and at_bound == 0 and _chain_strict_below_bound()
    parts, ok = [f"symbolic chain={symbolic}"], symbolic
    for N in (2, 3):
        sub = assemble_glued_subsolution(prof, N, 1.0, K=2.0)
        dv, dg = interface_mismatch(sub, 1000)
        fdc = glued_fd_check(sub, SAMPLES)
        lemma = distance_check(sub, 1000, np.random.default_rng(N))
        d = 1.05 * (32 * (N - 1) * 4 + 7 / 8)
        z = d * np.ones(N) / math.sqrt(N)
        pl = placement(sub, np.zeros(N), d, z)
        checks = {"l<=2Kr": sub.l <= 2 * sub.K * sub.r, "l_N<=r/4": sub.l_N <= sub.r / 4,
                  "C1": dv < 1e-6 and dg < 1e-6, "F>=-10h^2": fdc["ok"], "lemma_dist": lemma,
                  "placement": pl.ok}
        ok &= all(checks.values())
        parts.append(f"N={N}: l={sub.l:.4f} l_N={sub.l_N:.4f} iface=({dv:.1e},{dg:.1e}) "
                     f"minF/(eps/r^2)={fdc['min_F_scaled']:.1e} "
                     + " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()))
    record(5, "Subsolution pipeline (K=2, N=2,3)", ok, "; ".join(parts))
    assert ok


def test_criterion_6_smp_scenarios(record, laplacian_runs, glued):
    flat = scenario_flat_g(33, 2)
    lap = {N: r["boundary_min"] for N, r in laplacian_runs.items()}
    ok = flat["violated"] and all(lap.values()) and glued["u_ge_v_at_z"] and glued["contradiction"]
    record(6, "SMP scenarios", ok,
           f"flat_g violated={flat['violated']} (flat nodes {flat['flat_nodes']}/{flat['active_nodes']}); "
           f"laplacian boundary min {lap}; glued u(z)={glued['u_z']:.3e} >= v*(z)={glued['v_star_z']:.3e}")
    assert ok


def test_criterion_7_energy_comparison(record, laplacian_runs, hopf_runs, glued):
    grads = [r["minimizer"]["grad_norm"] for r in laplacian_runs.values()]
    viols = [r["comparison"]["max_violation"] for r in laplacian_runs.values()]
    for rep in hopf_runs.values():
        grads += [rep.sub_result.grad_norm, rep.super_result.grad_norm]
        viols.append(rep.max_violation)
    c = glued["comparison"]
    grads += [c["sub_minimizer"]["grad_norm"], c["super_minimizer"]["grad_norm"]]
    viols += [c["max_violation"], glued["barrier_violation"]]
    rng = np.random.default_rng(7)
    worst_rel = 0.0
    for prof, amp in [(Laplacian(), 1.0), (InverseLogSquare(), 0.05), (InverseLogPower(3.0), 0.1),
                      (Power(1.0), 1.0), (InverseLogSquare(), 7e-11)]:
        m = EnergyModel.from_profiles(prof, 2, amplitude=amp)
        h = np.array([0.1, 0.15])
        for _ in range(5):
            u = rng.normal(size=(7, 6))
            g = m.gradient(u, h)
            k = tuple(rng.integers(1, 5, 2))
            e = np.zeros_like(u)
            step = 1e-5
            e[k] = step
            fd = (m.energy(u + e, h) - m.energy(u - e, h)) / (2 * step)
            worst_rel = max(worst_rel, abs(fd - g[k]) / abs(g[k]))
    ok = max(grads) < GRAD_TOL and max(viols) <= COMPARE_TOL and worst_rel < 1e-5
    record(7, "Energy minimisation and discrete comparison", ok,
           f"max grad norm={max(grads):.1e}, max(v-u)={max(viols):.1e}, gradient FD rel={worst_rel:.1e}")
    assert ok
