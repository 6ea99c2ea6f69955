"""Domain on which a supersolution attains a boundary minimum with zero normal derivative.

Radial supersolution u(rho) = v(rho + 1), where v_rho solves the barrier ODE
(scale g(zeta^2)) from zeta(2) = -1 and is spent at R1 + 1.  For each
direction with cos^2 = c^2 the outer radius R(1 - c^2) is the root of

    R1 c^2 - g(u_rho(R)^2) / 2 = 0.

Near c = 0 the slope u_rho underflows double precision, so every quantity
is carried through the implicit relation in log form:  with
delta = R1 - R, the budget left at R is B = -(N-1) log1p(-delta/(R1+1)) and
ln u_rho(R)^2 = P^{-1}(B).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .barriers import RadialBarrier, solve_barrier_ode
from .gintegral import compute_G
from .profiles import DegeneracyProfile, check_assumptions, classify_tail


class NoCounterexample(ValueError):
    """The hypotheses fail (typically a divergent budget)."""


class RootBracketError(RuntimeError):
    def __init__(self, a: float, msg: str):
        super().__init__(f"root bracket failure at a={a!r}: {msg}")
        self.a = a


C_MIN = 1e-14
N_CURVE = 240
FD_REL_STEP = 1e-4
AGREE_RTOL = 1e-4
VANISH_TOL = 1e-3


@dataclass
class CounterexampleDomain:
    N: int
    profile: DegeneracyProfile
    R1: float
    R1_quadrature: float
    supersolution: RadialBarrier
    c_bar: float
    c: np.ndarray
    delta: np.ndarray  # R1 - R(1 - c^2)
    R: np.ndarray
    dRdc_formula: np.ndarray
    dRdc_fd: np.ndarray
    radius_eq_residual: np.ndarray
    g_identity_error: np.ndarray
    closed_route_error: np.ndarray  # |delta via g^{-1} - delta via root-finding| / delta
    verdicts: dict = field(default_factory=dict)

    @property
    def P0(self) -> float:
        return float(self.profile.primitive_log(0.0))

    def budget_left(self, delta):
        """P(u_rho(R)^2) at R = R1 - delta."""
        return -(self.N - 1) * np.log1p(-np.asarray(delta) / (self.R1 + 1.0))

    def outer_radius(self, c):
        """R(1 - c^2) for 0 <= c <= c_bar (vectorised by scalar solves)."""
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return self.R1 - np.array([_solve_delta(self.profile, self.N, self.R1, x) if x > 0 else 0.0 for x in c])

    def boundary_polyline(self, n_inner: int = 64) -> np.ndarray:
        """Closed 2-D outline in the plane (x_1, x_N): outer curve, side rays, unit inner arc."""
        cs = np.concatenate([self.c[::-1], [0.0]])
        Rs = np.concatenate([self.R[::-1], [self.R1]])
        right = np.column_stack([cs * Rs, np.sqrt(1 - cs ** 2) * Rs])  # c from c_bar down to 0
        left = right[-2::-1] * np.array([-1.0, 1.0])
        outer = np.vstack([left, right[::-1]])  # -c_bar .. 0 .. c_bar
        cb, sb = self.c_bar, math.sqrt(1 - self.c_bar ** 2)
        th = np.linspace(math.atan2(sb, cb), math.atan2(sb, -cb), n_inner)
        inner = np.column_stack([np.cos(th), np.sin(th)])
        return np.vstack([outer, inner, outer[:1]])

    def to_json(self) -> dict:
        return {
            "N": self.N, "profile": self.profile.to_json(), "R1": self.R1,
            "R1_quadrature": self.R1_quadrature, "c_bar": self.c_bar,
            "R_at_c_bar": float(self.R[0]),
            "dRdc_at_cmin": float(self.dRdc_formula[-1]),
            "max_radius_eq_residual": float(np.max(self.radius_eq_residual)),
            "max_fd_disagreement": float(np.max(fd_disagreement(self))),
            "verdicts": dict(self.verdicts),
        }


def _ln_t_of_delta(profile, N, R1, delta):
    B = -(N - 1) * math.log1p(-delta / (R1 + 1.0))
    return profile.primitive_inverse_log(B)


def radius_eq_residual(profile, N, R1, c, delta) -> float:
    """R1 (1 - a) - g(u_rho(R)^2) / 2 with a = 1 - c^2, R = R1 - delta."""
    return R1 * c * c - 0.5 * float(profile.g_log(_ln_t_of_delta(profile, N, R1, delta)))


def _solve_delta(profile, N, R1, c) -> float:
    """delta = R1 - R(1 - c^2) by bracketed root-finding in ln delta."""
    target = R1 * c * c

    def fun(ld):
        return 0.5 * float(profile.g_log(_ln_t_of_delta(profile, N, R1, math.exp(ld)))) - target

    hi = math.log(R1)  # R = 0
    if fun(hi) < 0:
        raise RootBracketError(1 - c * c, "g at R = 0 below 2 R1 c^2")
    lo = hi - 1.0
    while fun(lo) > 0:
        lo = hi - 2.0 * (hi - lo)
        if hi - lo > 1e4:
            raise RootBracketError(1 - c * c, "no sign change towards R1")
    ld = brentq(fun, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(ld)


def _delta_closed(profile, N, R1, c) -> float:
    """Same quantity through g^{-1}: g(t) = 2 R1 c^2, then the implicit relation."""
    lt = profile.g_inverse_log(2 * R1 * c * c)
    P = float(profile.primitive_log(lt))
    return -(R1 + 1.0) * math.expm1(-P / (N - 1))


def dRdc_formula(profile, N, R1, c, delta):
    """-(R+1) sqrt(2 R1)/(N-1) * g^{3/2}/(t g') at t = u_rho(R(1-c^2))^2."""
    lt = np.array([_ln_t_of_delta(profile, N, R1, d) for d in np.atleast_1d(delta)])
    R = R1 - np.atleast_1d(delta)
    return -(R + 1.0) * math.sqrt(2 * R1) / (N - 1) * np.asarray(profile.ratio_log(lt))


def _dRdc_fd(profile, N, R1, c) -> float:
    h = FD_REL_STEP * c
    dp = _solve_delta(profile, N, R1, c + h)
    dm = _solve_delta(profile, N, R1, c - h)
    return -(dp - dm) / (2 * h)


def _dRdc_fd_backward(profile, N, R1, c, delta_c) -> float:
    """One-sided second-order stencil, used at c_bar where c + h leaves the valid range."""
    h = FD_REL_STEP * c
    d1 = _solve_delta(profile, N, R1, c - h)
    d2 = _solve_delta(profile, N, R1, c - 2 * h)
    return -(3 * delta_c - 4 * d1 + d2) / (2 * h)


def build_counterexample(profile: DegeneracyProfile, N: int, c_min: float = C_MIN,
                         n_curve: int = N_CURVE) -> CounterexampleDomain:
    if N < 2:
        raise ValueError("N must be at least 2")
    if profile.budget_divergent:
        raise NoCounterexample("budget integral diverges; Hopf's lemma holds for this profile")
    G1 = compute_G(profile, 1.0, "one", N, method="closed").value
    G1q = compute_G(profile, 1.0, "one", N, method="quadrature").value
    R1 = 2.0 * math.exp(G1 / (N - 1)) - 1.0
    R1q = 2.0 * math.exp(G1q / (N - 1)) - 1.0
    v = solve_barrier_ode(profile, N, 2.0, -1.0, "one")

    g_bar = float(profile.g_log(profile.lt_bar))
    c_bar = min(0.5, math.sqrt(g_bar / (2 * R1)) * (1 - 1e-12))
    if R1 - _solve_delta(profile, N, R1, c_bar) < 1.0:
        lo, hi = c_min, c_bar
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if R1 - _solve_delta(profile, N, R1, mid) >= 1.0:
                lo = mid
            else:
                hi = mid
            if hi / lo - 1 < 1e-13:
                break
        c_bar = lo
    c = np.geomspace(c_bar, c_min, n_curve)
    delta = np.array([_solve_delta(profile, N, R1, x) for x in c])
    R = R1 - delta
    dRf = dRdc_formula(profile, N, R1, c, delta)
    dRfd = np.array([_dRdc_fd(profile, N, R1, x) for x in c[1:]])
    dRfd = np.concatenate([[_dRdc_fd_backward(profile, N, R1, c[0], delta[0])], dRfd])
    res = np.array([abs(radius_eq_residual(profile, N, R1, x, d)) for x, d in zip(c, delta)])
    lt = np.array([_ln_t_of_delta(profile, N, R1, d) for d in delta])
    gid = np.abs(np.asarray(profile.g_log(lt)) / (2 * R1 * c * c) - 1.0)
    closed = np.array([_delta_closed(profile, N, R1, x) for x in c])
    cre = np.abs(closed - delta) / delta

    dom = CounterexampleDomain(N, profile, R1, R1q, v, c_bar, c, delta, R, dRf, dRfd, res, gid, cre)
    dom.verdicts["normal_derivative_zero"] = bool(
        v.rho_out is not None and v.v_rho[-1] == 0.0 and abs(v.rho_out - (R1 + 1)) <= 1e-12 * (R1 + 1)
    )
    dom.verdicts["regular_boundary"] = verify_boundary_regularity(dom)
    dom.verdicts["interior_ball"] = verify_interior_ball(dom)
    return dom


def fd_disagreement(dom: CounterexampleDomain) -> np.ndarray:
    return np.abs(dom.dRdc_fd - dom.dRdc_formula) / np.abs(dom.dRdc_formula)


def verify_boundary_regularity(dom: CounterexampleDomain, tol: float = VANISH_TOL) -> bool:
    """dR/dc -> 0 by both routes, routes agreeing to AGREE_RTOL."""
    agree = bool(np.all(fd_disagreement(dom) < AGREE_RTOL))
    f, d = np.abs(dom.dRdc_formula), np.abs(dom.dRdc_fd)
    tail = slice(-STABLE_TAIL, None)
    shrinking = bool(np.all(np.diff(f[tail]) <= 0))
    return agree and shrinking and bool(f[-1] < tol and d[-1] < tol)


STABLE_TAIL = 8


def interior_ball_ratio(dom: CounterexampleDomain) -> np.ndarray:
    """|(1/c) dR/dc| along the curve."""
    return np.abs(dom.dRdc_formula) / dom.c


def verify_interior_ball(dom: CounterexampleDomain) -> bool:
    """(1/c) dR/dc stays bounded towards c -> 0, cross-checked against g/(t g') boundedness."""
    kind = classify_tail(interior_ball_ratio(dom)).kind
    bounded = kind != "infinite"
    rep = check_assumptions(dom.profile, dom.N)
    if rep.C2_bounded is not None and rep.C2_bounded != bounded:
        raise RuntimeError("interior ball scan disagrees with the g/(t g') boundedness scan")
    return bounded


@dataclass
class SupersolutionCertificate:
    max_k: float
    max_F: float
    k_monotone: bool  # on the part of each shell where u_rho^2 <= t_bar
    k_monotone_full: bool  # on the whole shell, including the constant extension of g
    eq_residual: float

    @property
    def ok(self) -> bool:
        return self.max_k <= 0 and self.max_F <= 0 and self.k_monotone and self.eq_residual < 1e-6

    def to_json(self) -> dict:
        return {"max_k": self.max_k, "max_F": self.max_F, "k_monotone": self.k_monotone,
                "k_monotone_full": self.k_monotone_full, "eq_residual": self.eq_residual, "ok": self.ok}


def _k_and_F(profile, N, a, rho, lt):
    """k(rho) and F(u) at radius rho, direction with sin^2 = a; lt = ln u_rho^2."""
    ga = np.asarray(profile.g_log(lt + math.log(a)))
    g1 = np.asarray(profile.g_log(lt))
    A = 1 - a + a * ga
    B = N - 2 + a + (1 - a) * ga
    k = rho * (N - 1) * A - (rho + 1) * g1 * B
    ur = -np.exp(0.5 * lt)
    urr = -(N - 1) * ur / ((rho + 1) * g1)
    F = urr * A + ur / rho * B
    return k, F


def _nondecreasing(k) -> bool:
    if len(k) < 2:
        return True
    return bool(np.all(np.diff(k) >= -1e-12 * np.abs(k).max()))


def supersolution_certificate(dom: CounterexampleDomain, n_a: int = 24, n_rho: int = 64,
                              n_eq: int = 200) -> SupersolutionCertificate:
    """k(rho) <= 0, k non-decreasing and F(u) <= 0 on 1 < rho < R(a), a in [1 - c_bar^2, 1).

    The equation u_rr g(u_r^2) + (N-1) u_r/(rho+1) = 0 is checked by central
    differences of the slope recovered from the implicit relation.
    """
    prof, N, R1 = dom.profile, dom.N, dom.R1
    max_k = -np.inf
    max_F = -np.inf
    mono = mono_full = True
    idx = np.linspace(0, len(dom.c) - 1, n_a).astype(int)
    for c, R, dl in zip(dom.c[idx], dom.R[idx], dom.delta[idx]):
        a = 1 - c * c
        gap = (R - 1.0) * np.linspace(1.0, 0.0, n_rho + 1)[1:]  # R - rho
        rho = R - gap
        B = -(N - 1) * np.log1p(-(dl + gap) / (R1 + 1.0))
        lt = np.array([prof.primitive_inverse_log(b) for b in B])
        k, F = _k_and_F(prof, N, a, rho, lt)
        max_k = max(max_k, float(np.max(k)))
        max_F = max(max_F, float(np.max(F)))
        mono_full &= _nondecreasing(k)
        mono &= _nondecreasing(k[lt <= prof.lt_bar])

    v = dom.supersolution
    P0 = float(prof.primitive_log(0.0))
    rho_hi = (R1 + 1.0) * math.exp(-0.05 * P0 / (N - 1))  # leave 5% of the budget to the tail
    rho = np.linspace(v.rho_in * 1.001, rho_hi, n_eq)
    lz = np.log(-v.slope_exact(rho))
    rho = rho[np.abs(2 * lz - prof.lt_bar) > 0.05]  # g' jumps where u_r^2 crosses t_bar
    h = 1e-5 * rho

    def lz_at(x):
        return np.log(-v.slope_exact(x))

    dlz = (lz_at(rho - 2 * h) - 8 * lz_at(rho - h) + 8 * lz_at(rho + h) - lz_at(rho + 2 * h)) / (12 * h)
    g = np.asarray(prof.g_log(2 * np.log(-v.slope_exact(rho))))
    # divide the equation by u_r: (ln|u_r|)' g + (N-1)/rho = 0
    eq = np.abs(dlz * g + (N - 1) / rho) / ((N - 1) / rho)
    return SupersolutionCertificate(max_k, max_F, mono, mono_full, float(np.max(eq)))
