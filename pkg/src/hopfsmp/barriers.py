"""Radial barriers from the Cauchy problem zeta' = -(N-1)/rho * zeta / g(zeta^2 c).

The ODE is separable: P(zeta^2 c) - P(zeta0^2 c) = -(N-1) ln(rho/rho0), with
P the profile primitive.  We integrate y = ln(-zeta) numerically (zeta
underflows long before the budget is spent for logarithmic profiles) and
switch to exact inversion of the implicit relation for the last sliver of
budget, where the right-hand side stiffens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .gintegral import Scale, scale_factor
from .profiles import DegeneracyProfile


class DegenerateODEError(ValueError):
    """g vanishes at the initial slope; the ODE right-hand side is undefined."""


class BudgetExhaustedError(RuntimeError):
    def __init__(self, rho_out: float, r: float):
        super().__init__(f"budget exhausted at rho={rho_out:.17g} before r={r:.17g}")
        self.rho_out = rho_out
        self.r = r


TAIL_FRACTION = 1e-3
TAIL_NODES_PER_OCTAVE = 4
TAIL_OCTAVES = 120


@dataclass(frozen=True)
class PolarDirection:
    d: tuple

    def __post_init__(self):
        arr = np.asarray(self.d, dtype=float)
        n = np.linalg.norm(arr)
        if n == 0:
            raise ValueError("zero direction")
        object.__setattr__(self, "d", tuple(arr / n))

    @property
    def a(self) -> float:
        return self.d[-1] ** 2

    @property
    def N(self) -> int:
        return len(self.d)


@dataclass
class RadialBarrier:
    rho: np.ndarray
    v: np.ndarray
    v_rho: np.ndarray
    v_rhorho: np.ndarray
    N: int
    profile: DegeneracyProfile
    scale: Scale
    rho0: float
    zeta0: float
    rho_out: float | None = None  # exhaustion radius when the budget is finite
    dense_y: object = field(default=None, repr=False)  # integrator dense output of ln(-zeta)
    dense_end: float | None = None
    _v: CubicHermiteSpline = field(default=None, repr=False)
    _dv: object = field(default=None, repr=False)

    def __post_init__(self):
        self._v = CubicHermiteSpline(self.rho, self.v, self.v_rho, extrapolate=False)
        if np.all(np.isfinite(self.v_rhorho)):
            self._dv = CubicHermiteSpline(self.rho, self.v_rho, self.v_rhorho, extrapolate=False)
        else:
            self._dv = PchipInterpolator(self.rho, self.v_rho, extrapolate=False)

    @property
    def rho_in(self) -> float:
        return float(self.rho[0])

    @property
    def rho_end(self) -> float:
        return float(self.rho[-1])

    @property
    def c(self) -> float:
        return scale_factor(self.scale, self.N)

    def _check(self, rho):
        rho = np.asarray(rho, dtype=float)
        span = self.rho_end - self.rho_in
        if np.any(rho < self.rho_in - 1e-12 * span) or np.any(rho > self.rho_end + 1e-12 * span):
            raise ValueError("rho outside the barrier domain")
        return np.clip(rho, self.rho_in, self.rho_end)

    def value(self, rho):
        return self._v(self._check(rho))

    def slope(self, rho):
        rho = self._check(rho)
        out = np.minimum(self._dv(rho), 0.0)
        if self.dense_y is not None:
            inside = np.asarray(rho <= self.dense_end)
            if np.any(inside):
                r = np.asarray(rho)[inside] if np.ndim(rho) else float(rho)
                z = -np.exp(self.dense_y(r)[0])
                if np.ndim(rho):
                    out = np.array(out, dtype=float)
                    out[inside] = z
                else:
                    out = float(z)
        return out

    def curvature(self, rho):
        """v_rho_rho from the ODE right-hand side at the interpolated slope."""
        rho = self._check(rho)
        return ode_rhs(self.profile, self.N, self.scale, rho, self.slope(rho))

    def budget_left(self, rho=None, gap=None):
        """P(zeta(rho)^2 c) from the implicit relation.

        ``gap`` = rho_out - rho avoids cancellation next to the exhaustion radius.
        """
        if gap is not None:
            if self.rho_out is None:
                raise ValueError("gap form needs a finite exhaustion radius")
            gap = np.asarray(gap, dtype=float)
            return -(self.N - 1) * np.log1p(-gap / self.rho_out)
        rho = np.asarray(rho, dtype=float)
        P0 = float(self.profile.primitive_log(math.log(self.zeta0 ** 2 * self.c)))
        return P0 - (self.N - 1) * np.log(rho / self.rho0)

    def exact_parts(self, rho=None, gap=None):
        """(ln zeta^2, zeta, zeta') at rho via the implicit relation, vectorised."""
        if rho is None:
            rho = self.rho_out - np.asarray(gap, dtype=float)
        rho = np.asarray(rho, dtype=float)
        B = np.asarray(self.budget_left(rho, gap), dtype=float)
        spent = (B <= 0) if not self.profile.budget_divergent else np.zeros(B.shape, bool)
        lt = np.full(B.shape, -np.inf)
        if np.any(~spent):
            lt[~spent] = np.asarray(self.profile.primitive_inverse_log(B[~spent])) - math.log(self.c)
        zeta = -np.exp(0.5 * lt)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.asarray(self.profile.g_log(lt + math.log(self.c)))
            zp = np.where(spent, 0.0, -(self.N - 1) * zeta / (rho * g))
        return lt, zeta, zp

    def slope_exact(self, rho):
        """v_rho by inverting the implicit relation directly."""
        rho = np.atleast_1d(self._check(rho))
        return self.exact_parts(rho)[1]

    def implicit_residual(self) -> np.ndarray:
        """|P(zeta^2 c) - P(zeta0^2 c) + (N-1) ln(rho/rho0)| at every node with zeta < 0."""
        return implicit_residual(self.profile, self.N, self.scale, self.rho0, self.zeta0, self.rho, self.v_rho)

    def to_csv_rows(self):
        yield ("rho", "v", "v_rho", "v_rhorho")
        for row in zip(self.rho, self.v, self.v_rho, self.v_rhorho):
            yield tuple(float(x) for x in row)


def _zeta_from_budget(profile: DegeneracyProfile, target: float, c: float) -> float:
    """|zeta| with P(zeta^2 c) = target; zero once the finite budget is spent."""
    if not profile.budget_divergent and target <= 0:
        return 0.0
    lt = float(profile.primitive_inverse_log(target))
    return math.exp(0.5 * (lt - math.log(c)))


def ode_rhs(profile: DegeneracyProfile, N: int, scale, rho, zeta):
    """zeta' = -(N-1) zeta / (rho g(zeta^2 c)), with value 0 where zeta = 0 and g zeta^{-1} -> inf."""
    c = scale_factor(scale, N)
    rho = np.asarray(rho, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lt = 2.0 * np.log(np.abs(zeta)) + math.log(c)
        g = np.asarray(profile.g_log(lt))
        out = -(N - 1) * zeta / (rho * g)
    out = np.where(zeta == 0, 0.0 if _zero_limit(profile) else np.inf, out)
    return float(out) if out.ndim == 0 else out


def _zero_limit(profile: DegeneracyProfile) -> bool:
    """Whether zeta / g(zeta^2) -> 0 as zeta -> 0 (sampled along a geometric sequence)."""
    lt = profile.lt_bar - np.log(2.0) * np.arange(200, 260)
    with np.errstate(over="ignore", divide="ignore"):
        vals = np.exp(0.5 * lt) / np.asarray(profile.g_log(lt))
    return bool(np.all(np.isfinite(vals)) and vals[-1] < vals[0] and vals[-1] < 1e-6)


def implicit_residual(profile, N, scale, rho0, zeta0, rho, zeta) -> np.ndarray:
    c = scale_factor(scale, N)
    zeta = np.asarray(zeta, dtype=float)
    keep = zeta < 0
    P0 = float(profile.primitive_log(math.log(zeta0 ** 2 * c)))
    lt = 2.0 * np.log(-zeta[keep]) + math.log(c)
    return np.abs(np.asarray(profile.primitive_log(lt)) - P0 + (N - 1) * np.log(np.asarray(rho)[keep] / rho0))


def _hermite_cumulative(x, f, fp):
    """Cumulative integral of f from x[0] via trapezoid with the Hermite endpoint correction."""
    h = np.diff(x)
    inc = 0.5 * h * (f[1:] + f[:-1])
    corr = h * h * (fp[:-1] - fp[1:]) / 12.0
    inc = inc + np.where(np.isfinite(corr), corr, 0.0)
    return np.concatenate([[0.0], np.cumsum(inc)])


def solve_barrier_ode(profile: DegeneracyProfile, N: int, rho0: float, zeta0: float, scale="invn",
                      rho_max: float | None = None, method: str = "DOP853", rtol: float = 1e-12,
                      atol: float = 1e-13, max_step: float = np.inf, first_step: float | None = None,
                      dense: int = 400) -> RadialBarrier:
    """Integrate outward from rho0 until the budget is spent or rho_max is reached.

    v is anchored so that v = 0 at the last grid node.
    """
    if not zeta0 < 0:
        raise ValueError("zeta0 must be negative")
    if not rho0 > 0:
        raise ValueError("rho0 must be positive")
    sc = Scale.parse(scale)
    c = scale_factor(sc, N)
    lc = math.log(c)
    y0 = math.log(-zeta0)
    if float(profile.g_log(2 * y0 + lc)) <= 0:
        raise DegenerateODEError(f"g vanishes at the initial slope |zeta0|={-zeta0}")

    divergent = profile.budget_divergent
    P0 = float(profile.primitive_log(2 * y0 + lc))
    rho_out = None if divergent else rho0 * math.exp(P0 / (N - 1))
    if rho_max is None:
        if divergent:
            raise ValueError("rho_max is required when the budget diverges")
        rho_max = rho_out
    rho_end = rho_max if rho_out is None else min(rho_max, rho_out)
    exhausts = rho_out is not None and rho_out <= rho_max

    def rhs(rho, y):
        g = float(profile.g_log(2 * y[0] + lc))
        return [-(N - 1) / (rho * g)]

    events = None
    if exhausts:
        def budget_event(rho, y):
            return float(profile.primitive_log(2 * y[0] + lc)) - TAIL_FRACTION * P0
        budget_event.terminal = True
        budget_event.direction = -1
        events = budget_event

    kw = {"first_step": first_step} if first_step is not None else {}
    sol = solve_ivp(rhs, (rho0, rho_end), [y0], method=method, rtol=rtol, atol=atol, max_step=max_step,
                    events=events, dense_output=True, **kw)
    if sol.status < 0:
        raise RuntimeError(f"barrier integration failed: {sol.message}")
    rho_ode_end = float(sol.t[-1])
    nodes = np.union1d(sol.t, np.linspace(rho0, rho_ode_end, dense + 1))
    y = sol.sol(nodes)[0]
    y[0] = y0
    zeta = -np.exp(y)

    if exhausts:
        P_e = float(profile.primitive_log(2 * y[-1] + lc))
        budgets = P_e * 2.0 ** (-np.arange(1, TAIL_OCTAVES * TAIL_NODES_PER_OCTAVE + 1) / TAIL_NODES_PER_OCTAVE)
        r_tail = rho0 * np.exp((P0 - budgets) / (N - 1))
        z_tail = np.array([-_zeta_from_budget(profile, b, c) for b in budgets])
        keep = r_tail > rho_ode_end
        r_tail, z_tail = r_tail[keep], z_tail[keep]
        r_tail, idx = np.unique(r_tail, return_index=True)
        z_tail = z_tail[idx]
        keep = r_tail < rho_out
        nodes = np.concatenate([nodes, r_tail[keep], [rho_out]])
        zeta = np.concatenate([zeta, z_tail[keep], [0.0]])
        ok = np.concatenate([np.diff(nodes) > 0, [True]])
        nodes, zeta = nodes[ok], zeta[ok]

    curv = ode_rhs(profile, N, sc, nodes, zeta)
    cum = _hermite_cumulative(nodes, zeta, curv)
    v = cum - cum[-1]
    return RadialBarrier(nodes, v, zeta, curv, N, profile, sc, float(rho0), float(zeta0),
                         rho_out if exhausts else None, sol.sol, rho_ode_end)


def build_hopf_barrier(profile: DegeneracyProfile, N: int, r: float, eps: float, scale="invn",
                       **kw) -> RadialBarrier:
    """Annulus barrier on [r/2, r]: slope -eps/r at r/2, v(r) = 0."""
    if not (r > 0 and eps > 0):
        raise ValueError("r and eps must be positive")
    c = scale_factor(scale, N)
    if (eps / r) ** 2 * c > profile.t_bar:
        raise ValueError("initial slope outside the validity range of g")
    if not profile.budget_divergent:
        P0 = float(profile.primitive_log(math.log((eps / r) ** 2 * c)))
        rho_out = 0.5 * r * math.exp(P0 / (N - 1))
        if rho_out < r:
            raise BudgetExhaustedError(rho_out, r)
    return solve_barrier_ode(profile, N, 0.5 * r, -eps / r, scale, rho_max=r, **kw)


@dataclass(frozen=True)
class RadialFValue:
    exact: float
    lower_bound: float


def _axis_profiles(profiles, N):
    if isinstance(profiles, DegeneracyProfile):
        return [profiles] * N
    profiles = list(profiles)
    if len(profiles) != N:
        raise ValueError("need one profile per axis")
    return profiles


def radial_F(profiles, N: int, d, v_rho, v_rhorho, rho):
    """F at rho*d for a radial function, per-axis coefficients.  ``d`` may be (..., N)."""
    gs = _axis_profiles(profiles, N)
    d2 = np.asarray(d, dtype=float) ** 2
    v_rho = np.asarray(v_rho, dtype=float)[..., None]
    G = np.stack([np.asarray(gs[i].g(v_rho[..., 0] ** 2 * d2[..., i])) for i in range(N)], axis=-1)
    main = np.sum(G * d2, axis=-1)
    side = np.sum(G * (1 - d2), axis=-1)
    return np.asarray(v_rhorho) * main + v_rho[..., 0] / np.asarray(rho) * side


def radial_F_lower_bound(profiles, barrier: RadialBarrier, direction: PolarDirection | Sequence[float],
                         rho: float) -> RadialFValue:
    """Exact radial F and the bound v_rr g_N(v_r^2/N) + (N-1) v_r/rho."""
    N = barrier.N
    d = direction if isinstance(direction, PolarDirection) else PolarDirection(tuple(direction))
    gs = _axis_profiles(profiles, N)
    vr = float(barrier.slope(rho))
    vrr = float(barrier.curvature(rho))
    exact = float(radial_F(gs, N, np.asarray(d.d), vr, vrr, rho))
    lower = vrr * float(gs[-1].g(vr * vr / N)) + (N - 1) * vr / rho
    return RadialFValue(exact, lower)


def lemma_directional_gap(profile: DegeneracyProfile, t, d) -> np.ndarray:
    """sum_i g(t d_i^2) d_i^2 - g(t/N) for unit directions d (last axis)."""
    d = np.asarray(d, dtype=float)
    N = d.shape[-1]
    t = np.asarray(t, dtype=float)
    d2 = d ** 2
    lhs = np.sum(np.asarray(profile.g(t[..., None] * d2)) * d2, axis=-1)
    return lhs - np.asarray(profile.g(t / N))


__all__ = [
    "BudgetExhaustedError", "DegenerateODEError", "PolarDirection", "RadialBarrier", "RadialFValue",
    "build_hopf_barrier", "implicit_residual", "lemma_directional_gap", "ode_rhs", "radial_F",
    "radial_F_lower_bound", "solve_barrier_ode",
]
