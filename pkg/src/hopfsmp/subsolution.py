"""Piecewise-radial subsolution on a collar around a convex region.

Everything is rotationally symmetric about the x_N axis, so the geometry
lives in the half-plane (s, Y) with s = |(x_1, ..., x_{N-1})| and Y = x_N.
Piece i is the shifted radial profile w(rho_i - R_i + R1) around the center
C^i, on the sector of directions with sin^2 in [a_{i+1}, a_i].  Centers
follow C^i = C^{i-1} + (R_{i-1} - R_i)(cos alpha_i, sin alpha_i), so the
pieces agree to first order across each interface ray.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .barriers import RadialBarrier, solve_barrier_ode
from .profiles import DegeneracyProfile, InapplicableError, estimate_K

MAX_NODES = 2 ** 20


class SmallnessViolated(ValueError):
    def __init__(self, lhs: float, bound: float):
        super().__init__(f"smallness condition fails: {lhs:.6g} > {bound:.6g}")
        self.lhs = lhs
        self.bound = bound


class MeshFailure(RuntimeError):
    def __init__(self, nodes: int, gap: float, sigma: float):
        super().__init__(f"Riemann gap {gap:.3g} >= sigma {sigma:.3g} with {nodes} nodes")
        self.nodes, self.gap, self.sigma = nodes, gap, sigma


class DomainError(ValueError):
    """Query point outside the closed collar."""


def smallness_lhs(g_val: float) -> float:
    """2 sqrt(g) + 1/2 sqrt(g) |ln g|."""
    y = math.sqrt(g_val)
    return 2 * y + 0.5 * y * abs(math.log(g_val))


def _g_eps(profile: DegeneracyProfile, ratio: float, scale: float = 1.0) -> float:
    """g((eps/r)^2 * scale) computed in log form."""
    if scale == 0:
        return float(profile.g_log(-np.inf))
    return float(profile.g_log(2 * math.log(ratio) + math.log(scale)))


def default_xibar(profile: DegeneracyProfile, K: float) -> float:
    """Largest xi with xi^2 <= t_bar and the smallness inequality at g(xi^2)."""
    bound = 1.0 / (4 * K)
    hi = 0.5 * profile.lt_bar
    f = lambda lx: smallness_lhs(float(profile.g_log(2 * lx))) - bound
    if f(hi) <= 0:
        return math.exp(hi)
    lo = hi - 1.0
    while f(lo) > 0:
        lo = hi - 2 * (hi - lo)
        if hi - lo > 1e6:
            raise SmallnessViolated(f(lo) + bound, bound)
    lx = brentq(f, lo, hi, xtol=1e-14, rtol=1e-15)
    return math.exp(lx) * (1 - 1e-12)


def compute_R1_annulus(profile: DegeneracyProfile, N: int, r: float, eps: float, K: float | None = None,
                       enforce_smallness: bool = True) -> float:
    """R1 = r / (exp(G(eps/r)/(N-1)) - 1), G with integrand g(zeta^2)/zeta."""
    if profile.budget_divergent:
        raise InapplicableError("budget integral diverges")
    ratio = eps / r
    if ratio ** 2 > profile.t_bar:
        raise ValueError("(eps/r)^2 exceeds t_bar")
    if enforce_smallness:
        if K is None:
            K = estimate_K(profile, N)
            if K is None:
                raise InapplicableError("no K exists for this profile")
        lhs = smallness_lhs(_g_eps(profile, ratio))
        if lhs > 1.0 / (4 * K):
            raise SmallnessViolated(lhs, 1.0 / (4 * K))
    G = float(profile.primitive_log(2 * math.log(ratio)))
    return r / math.expm1(G / (N - 1))


def compute_R_abar(profile: DegeneracyProfile, N: int, r: float, eps: float, R1: float, abar):
    """Shell radius for the sector pinned at sin^2 = abar."""
    abar = np.asarray(abar, dtype=float)
    ratio = eps / r
    g1 = _g_eps(profile, ratio)
    with np.errstate(divide="ignore"):
        ga = np.asarray(profile.g_log(2 * math.log(ratio) + np.log(abar)))
    num = N - 2 + abar + ga * (1 - abar)
    den = 1 - abar + ga * abar
    assert np.all(den > 0), "denominator vanished"
    out = g1 * R1 / (N - 1) * num / den
    return float(out) if out.ndim == 0 else out


@dataclass
class PartitionAlpha:
    alpha: np.ndarray  # pi/2 = alpha_0 > alpha_1 > ... > alpha_n = 0
    c: np.ndarray
    s: np.ndarray
    R: np.ndarray  # R(a_i), a_i = s_i^2, i = 0..n-1 (R_0 = R1)
    S1: float
    S2: float
    sigma: float
    gap_c: float
    gap_s: float
    int_c: float
    int_s: float
    m: int
    bound_S1: float  # 2 r sqrt(g)/(exp(G/(N-1)) - 1)
    bound_S2: float  # r sqrt(g)/(exp(G/(N-1)) - 1) * (2 sqrt(g) + 1/2 sqrt(g)|ln g|)

    @property
    def n(self) -> int:
        return len(self.alpha) - 1

    @property
    def a(self) -> np.ndarray:
        return self.s ** 2


def _alpha_nodes(c1: float, s1: float, m: int) -> np.ndarray:
    ac = np.arccos(np.clip(c1 + (1 - c1) * np.arange(m + 1) / m, -1, 1))
    as_ = np.arcsin(np.clip(s1 * np.arange(m + 1) / m, -1, 1))
    alpha = np.unique(np.concatenate([[0.5 * np.pi], ac, as_]))[::-1]
    keep = np.concatenate([[True], -np.diff(alpha) > 1e-15])
    alpha = alpha[keep]
    alpha[-1] = 0.0
    return alpha


def build_partition(profile: DegeneracyProfile, N: int, r: float, eps: float, K: float,
                    R1: float | None = None, m0: int = 64, max_nodes: int = MAX_NODES) -> PartitionAlpha:
    if R1 is None:
        R1 = compute_R1_annulus(profile, N, r, eps, K)
    ratio = eps / r
    g1 = _g_eps(profile, ratio)
    c1, s1 = math.sqrt(g1), math.sqrt(1 - g1)
    sigma = R1 * g1
    Rc = lambda c: compute_R_abar(profile, N, r, eps, R1, 1 - c * c)
    Rs = lambda s: compute_R_abar(profile, N, r, eps, R1, s * s)
    int_c, _ = quad(Rc, c1, 1.0, epsabs=1e-13 * R1, epsrel=1e-12, limit=500)
    int_s, _ = quad(Rs, 0.0, s1, epsabs=1e-13 * R1, epsrel=1e-12, limit=500)
    m = m0
    while True:
        alpha = _alpha_nodes(c1, s1, m)
        c, s = np.cos(alpha), np.sin(alpha)
        c[0], s[0] = 0.0, 1.0
        c[1], s[1] = c1, s1
        c[-1], s[-1] = 1.0, 0.0
        R = compute_R_abar(profile, N, r, eps, R1, s[:-1] ** 2)
        R[0] = R1
        sum_c = float(np.sum(R[1:] * (c[2:] - c[1:-1])))
        sum_s = float(np.sum(R[1:] * (s[1:-1] - s[2:])))
        gap_c, gap_s = abs(sum_c - int_c), abs(sum_s - int_s)
        if gap_c < sigma and gap_s < sigma:
            break
        m *= 2
        if len(alpha) > max_nodes:
            raise MeshFailure(len(alpha), max(gap_c, gap_s), sigma)
    S1 = R1 * c1 + sum_c
    S2 = R1 * (1 - s1) + sum_s
    G = float(profile.primitive_log(2 * math.log(ratio)))
    base = r * c1 / math.expm1(G / (N - 1))
    return PartitionAlpha(alpha, c, s, R, S1, S2, sigma, gap_c, gap_s, int_c, int_s, m,
                          2 * base, base * smallness_lhs(g1))


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


@dataclass
class GluedSubsolution:
    N: int
    profile: DegeneracyProfile
    r: float
    eps: float
    K: float
    R1: float
    partition: PartitionAlpha
    centers: np.ndarray  # (n, 2) half-plane centers C^0..C^{n-1}
    l: float
    l_N: float
    w: RadialBarrier
    _u: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        p = self.partition
        self._u = np.column_stack([p.c, p.s])  # interface directions, index j = 0..n

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def R(self) -> np.ndarray:
        return self.partition.R

    @property
    def O_star_Y(self) -> float:
        return self.R1 - self.l_N

    # -- coordinates ----------------------------------------------------------
    def half_plane(self, x) -> np.ndarray:
        """Map points centred at O* (last axis = coordinates) to (s, Y) of the construction."""
        x = np.asarray(x, dtype=float)
        s = np.linalg.norm(x[..., :-1], axis=-1)
        Y = np.abs(x[..., -1]) + self.O_star_Y
        return np.stack([s, Y], axis=-1)

    def piece_index(self, P) -> np.ndarray:
        """Sector lookup: number of interface rays the point lies strictly below."""
        P = np.asarray(P, dtype=float)
        flat = P.reshape(-1, 2)
        lo = np.zeros(len(flat), dtype=int)  # invariant: answer >= lo
        hi = np.full(len(flat), self.n - 1, dtype=int)  # answer <= hi
        while np.any(lo < hi):
            mid = (lo + hi + 1) // 2
            below = _cross(self._u[mid], flat - self.centers[mid]) < 0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid - 1)
        return lo.reshape(P.shape[:-1])

    def local(self, P, idx=None):
        """(piece index, rho_i, unit direction from C^i) in the half-plane."""
        P = np.asarray(P, dtype=float)
        if idx is None:
            idx = self.piece_index(P)
        diff = P - self.centers[idx]
        rho = np.linalg.norm(diff, axis=-1)
        d = diff / np.where(rho > 0, rho, 1.0)[..., None]
        return idx, rho, d

    def collar_depth(self, x) -> np.ndarray:
        """rho_i - R_i: distance past the inner boundary (negative inside the region)."""
        idx, rho, _ = self.local(self.half_plane(x))
        return rho - self.R[idx]

    # -- evaluation -----------------------------------------------------------
    def _w_parts(self, depth):
        """w, w', w'' at collar depth rho_i - R_i in [0, r]; slopes from the implicit relation."""
        depth = np.clip(depth, 0.0, self.r)
        W = self.w.value(depth + self.R1)
        _, W1, W2 = self.w.exact_parts(gap=self.r - depth)
        return W, W1, W2

    def evaluate(self, x, outside: str = "strict", idx=None):
        """(v, grad v) at points centred at O*.

        outside = "strict" raises DomainError off the closed collar; "extend"
        returns the constant inner value inside the region and 0 beyond the
        outer boundary.
        """
        x = np.asarray(x, dtype=float)
        P = self.half_plane(x)
        idx, rho, d = self.local(P, idx)
        depth = rho - self.R[idx]
        tol = 1e-12 * (self.R1 + self.r)
        bad = (depth < -tol) | (depth > self.r + tol)
        if outside == "strict" and np.any(bad):
            raise DomainError("point outside the closed collar")
        W, W1, _ = self._w_parts(depth)
        if outside == "extend":
            W = np.where(depth > self.r, 0.0, W)
            W1 = np.where((depth > self.r) | (depth < 0), 0.0, W1)
        grad_half = W1[..., None] * d
        s = P[..., 0]
        xp = x[..., :-1]
        radial = xp / np.where(s > 0, s, 1.0)[..., None]
        g_prime = grad_half[..., :1] * radial
        g_N = grad_half[..., 1:] * np.sign(x[..., -1:])
        return W, np.concatenate([g_prime, g_N], axis=-1)

    def __call__(self, x, outside: str = "extend"):
        return self.evaluate(x, outside)[0]

    def analytic_F(self, x):
        """F(v) at collar points from the piece's radial data (s > 0 assumed for N > 2)."""
        x = np.asarray(x, dtype=float)
        P = self.half_plane(x)
        idx, rho, d = self.local(P)
        depth = rho - self.R[idx]
        _, W1, W2 = self._w_parts(depth)
        ds, dY = d[..., 0], d[..., 1]
        gY = np.asarray(self.profile.g(W1 ** 2 * dY ** 2))
        F = W2 * ds ** 2 + W1 * dY ** 2 / rho + gY * (W2 * dY ** 2 + W1 * ds ** 2 / rho)
        if self.N > 2:
            s = P[..., 0]
            F = F + (self.N - 2) * W1 * ds / s
        scale = np.abs(W2) + np.abs(W1) / rho * (self.N - 1)
        return F, np.where(scale > 0, scale, np.finfo(float).tiny)

    # -- region geometry ------------------------------------------------------
    def arcs(self):
        """(center, radius, angle_lo, angle_hi) of each inner-boundary arc in the half-plane."""
        return self.centers, self.R, self.partition.alpha[1:], self.partition.alpha[:-1]

    def distance_to_region(self, x, chunk: int = 256) -> np.ndarray:
        """Euclidean distance to the closed region (0 inside), by projection onto each arc."""
        x = np.asarray(x, dtype=float)
        P = self.half_plane(x).reshape(-1, 2)
        idx, rho, _ = self.local(P)
        inside = rho <= self.R[idx]
        C, R, lo, hi = self.arcs()
        e_lo = C + R[:, None] * np.column_stack([np.cos(lo), np.sin(lo)])
        e_hi = C + R[:, None] * np.column_stack([np.cos(hi), np.sin(hi)])
        out = np.empty(len(P))
        for k in range(0, len(P), chunk):
            Q = P[k:k + chunk, None, :]
            diff = Q - C[None]
            dist_c = np.linalg.norm(diff, axis=-1)
            ang = np.arctan2(diff[..., 1], diff[..., 0])
            within = (ang >= lo[None] - 1e-15) & (ang <= hi[None] + 1e-15)
            radial = np.abs(dist_c - R[None])
            ends = np.minimum(np.linalg.norm(Q - e_lo[None], axis=-1), np.linalg.norm(Q - e_hi[None], axis=-1))
            out[k:k + chunk] = np.min(np.where(within, np.minimum(radial, ends), ends), axis=1)
        out[inside] = 0.0
        return out.reshape(x.shape[:-1])

    def boundary_points(self, k_per_arc: int = 2, which: str = "inner") -> np.ndarray:
        """Half-plane points on the inner (region) or outer (collar) boundary, first quadrant."""
        C, R, lo, hi = self.arcs()
        t = (np.arange(k_per_arc) + 0.5) / k_per_arc
        ang = lo[:, None] + (hi - lo)[:, None] * t[None]
        rad = (R + (self.r if which == "outer" else 0.0))[:, None]
        pts = C[:, None, :] + rad[..., None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        return pts.reshape(-1, 2)

    def embed(self, P, rng=None, signs=None) -> np.ndarray:
        """Lift half-plane points (s, Y >= O*_Y) to R^N centred at O*."""
        P = np.asarray(P, dtype=float)
        n = len(P)
        if rng is None:
            rng = np.random.default_rng(0)
        if self.N > 2:
            e = rng.normal(size=(n, self.N - 1))
            e /= np.linalg.norm(e, axis=1)[:, None]
        else:
            e = np.ones((n, 1)) if signs is None else np.asarray(signs, float)[:, :1]
        yN = P[:, 1] - self.O_star_Y
        if signs is not None:
            yN = yN * np.asarray(signs, float)[:, -1]
        return np.column_stack([P[:, :1] * e, yN])

    def interface_pairs(self, count: int, rng=None):
        """Random points on interface rays, with the two adjacent piece indices."""
        rng = np.random.default_rng(1) if rng is None else rng
        j = rng.integers(1, self.n, size=count)
        depth = rng.uniform(0.0, self.r, size=count)
        P = self.centers[j] + (self.R[j] + depth)[:, None] * self._u[j]
        return P, j - 1, j

    def to_json(self) -> dict:
        p = self.partition
        return {
            "N": self.N, "profile": self.profile.to_json(), "r": self.r, "eps": self.eps, "K": self.K,
            "R1": self.R1, "n": self.n, "l": self.l, "l_N": self.l_N, "O_star_Y": self.O_star_Y,
            "S1": p.S1, "S2": p.S2, "sigma": p.sigma, "gap_c": p.gap_c, "gap_s": p.gap_s,
            "bound_S1": p.bound_S1, "bound_S2": p.bound_S2,
            "two_K_r": 2 * self.K * self.r, "quarter_r": self.r / 4,
        }


def assemble_glued_subsolution(profile: DegeneracyProfile, N: int, r: float, eps: float | None = None,
                               K: float | None = None, xibar: float | None = None,
                               enforce_smallness: bool = True, **partition_kw) -> GluedSubsolution:
    if K is None:
        K = estimate_K(profile, N)
        if K is None:
            raise InapplicableError("no K exists for this profile")
    if eps is None:
        eps = r * (xibar if xibar is not None else default_xibar(profile, K))
    R1 = compute_R1_annulus(profile, N, r, eps, K, enforce_smallness)
    part = build_partition(profile, N, r, eps, K, R1, **partition_kw)
    n = part.n
    steps = (part.R[:-1] - part.R[1:])[:, None] * np.column_stack([part.c[1:n], part.s[1:n]])
    centers = np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)])
    l = float(centers[-1, 0] + part.R[-1])
    l_N = float(R1 - centers[-1, 1])
    w = solve_barrier_ode(profile, N, R1, -eps / r, "one")
    return GluedSubsolution(N, profile, r, eps, K, R1, part, centers, l, l_N, w)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def interface_mismatch(sub: GluedSubsolution, count: int = 1000, rng=None) -> tuple[float, float]:
    """Max |v+ - v-| / eps and |grad v+ - grad v-| / (eps / r) over random interface points."""
    rng = np.random.default_rng(3) if rng is None else rng
    P, i0, i1 = sub.interface_pairs(count, rng)
    x = sub.embed(P, rng)
    v0, g0 = sub.evaluate(x, idx=i0)
    v1, g1 = sub.evaluate(x, idx=i1)
    dv = float(np.max(np.abs(v0 - v1))) / sub.eps
    dg = float(np.max(np.linalg.norm(g0 - g1, axis=-1))) / (sub.eps / sub.r)
    return dv, dg


def rectangle_boundary_samples(sub: GluedSubsolution, count: int, rng=None) -> np.ndarray:
    """Uniform samples on the faces of the box [-l, l]^{N-1} x [-l_N, l_N] (centred at O*)."""
    rng = np.random.default_rng(2) if rng is None else rng
    half = np.array([sub.l] * (sub.N - 1) + [sub.l_N])
    x = rng.uniform(-1, 1, size=(count, sub.N)) * half
    face = rng.integers(0, sub.N, size=count)
    sign = rng.choice([-1.0, 1.0], size=count)
    x[np.arange(count), face] = sign * half[face]
    return x


def rectangle_corner(sub: GluedSubsolution) -> np.ndarray:
    return np.array([sub.l] * (sub.N - 1) + [sub.l_N])


def distance_check(sub: GluedSubsolution, count: int = 1000, rng=None) -> bool:
    pts = np.vstack([rectangle_boundary_samples(sub, count, rng), rectangle_corner(sub)[None]])
    return bool(np.all(sub.distance_to_region(pts) < sub.l_N))


def k_profile(sub: GluedSubsolution, i: int, a: float, n_rho: int = 64) -> np.ndarray:
    """k(rho) for piece i in direction sin^2 = a on its shell (F >= 0 iff k <= 0)."""
    Ri = sub.R[i]
    rho = Ri + sub.r * np.linspace(0, 1, n_rho + 1)[:-1]
    arg = rho - Ri + sub.R1
    lt, _, _ = sub.w.exact_parts(gap=sub.r - (rho - Ri))
    ga = np.asarray(sub.profile.g_log(lt + math.log(a))) if a > 0 else np.zeros_like(lt)
    g1 = np.asarray(sub.profile.g_log(lt))
    N = sub.N
    return arg * (N - 2 + a + (1 - a) * ga) - (N - 1) * rho / g1 * (1 - a + a * ga)


@dataclass
class PlacementReport:
    r_max: float
    r_ok: bool
    q: np.ndarray
    q_star: np.ndarray
    corners_inside: bool
    chain_lhs: float  # (d - r/2)^2 + 16(N-1)K^2 r^2 + r^2/4
    chain_rhs: float  # (d - r/4)^2
    actual_sum: float  # (d - r/2)^2 + sum 4 l_i^2
    dist_q: float
    dist_z: float
    z_in_collar: bool

    @property
    def ok(self) -> bool:
        return (self.r_ok and self.corners_inside and self.chain_lhs < self.chain_rhs
                and self.actual_sum <= self.chain_lhs and self.z_in_collar)


def placement(sub: GluedSubsolution, p, dist_pC: float, z) -> PlacementReport:
    """Place the region so that its collar reaches z while its box stays inside B(p, d - r/4)."""
    p, z = np.asarray(p, float), np.asarray(z, float)
    N, r, K = sub.N, sub.r, sub.K
    r_max = dist_pC / (32 * (N - 1) * K ** 2 + 7.0 / 8.0)
    dpz = np.linalg.norm(z - p)
    q = p + (z - p) * (dpz - r / 2) / dpz
    sgn = np.where(z - p >= 0, 1.0, -1.0)
    half = rectangle_corner(sub)
    q_star = q - sgn * half
    corners = q_star + np.array(np.meshgrid(*[[-1.0, 1.0]] * N, indexing="ij")).reshape(N, -1).T * half
    corners_inside = bool(np.all(np.linalg.norm(corners - p, axis=1) < dist_pC - r / 4))
    lhs = (dist_pC - r / 2) ** 2 + 16 * (N - 1) * K ** 2 * r ** 2 + r ** 2 / 4
    rhs = (dist_pC - r / 4) ** 2
    actual = (dist_pC - r / 2) ** 2 + float(np.sum(4 * half ** 2))
    dq = float(sub.distance_to_region((q - q_star)[None])[0])
    dz = float(sub.distance_to_region((z - q_star)[None])[0])
    return PlacementReport(r_max, r < r_max, q, q_star, corners_inside, lhs, rhs, actual, dq, dz,
                           bool(0 < dz < 0.75 * r))


def placement_chain_symbolic():
    """Return (difference, value at the bound) for (d - r/4)^2 - [(d - r/2)^2 + 16(N-1)K^2 r^2 + r^2/4]."""
    import sympy as sp

    d, r, K, N = sp.symbols("d r K N", positive=True)
    diff = (d - r / 4) ** 2 - ((d - r / 2) ** 2 + 16 * (N - 1) * K ** 2 * r ** 2 + r ** 2 / 4)
    bound = d / (32 * (N - 1) * K ** 2 + sp.Rational(7, 8))
    factored = sp.factor(sp.expand(diff))
    at_bound = sp.simplify(diff.subs(r, bound))
    target = r * (d / 2 - r * (16 * (N - 1) * K ** 2 + sp.Rational(7, 16)))
    identity = sp.simplify(sp.expand(diff - target)) == 0
    return factored, at_bound, identity
