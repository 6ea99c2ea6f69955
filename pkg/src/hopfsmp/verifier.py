"""Finite-difference checks of F on lattices, discrete energy minimisation and
maximum-principle scenarios.

F is applied in non-divergence form with central differences.  The energy
J_h(u) = h^N sum_i sum_edges L_i(D_i u) uses forward differences so that it is a
sum of convex edge terms; its Hessian is the graph Laplacian weighted by
g_i((D_i u)^2), because L_i'' (p) = g_i(p^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .barriers import build_hopf_barrier
from .profiles import (DegeneracyProfile, FlatOnInterval, InverseLogSquare, LagrangianDensity, Laplacian,
                       solve_lagrangian_density)

GRAD_TOL = 1e-8
COMPARE_TOL = 1e-6


class PreconditionError(ValueError):
    pass


class UnknownScenario(KeyError):
    pass


# ---------------------------------------------------------------------------
# Lattice fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridField:
    """Values on the lattice lo + h * k; ``boundary`` marks nodes with prescribed values."""

    lo: np.ndarray
    h: np.ndarray
    values: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.h) <= 0):
            raise ValueError("spacing must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        if self.values.shape != self.boundary.shape:
            raise ValueError("boundary mask shape mismatch")

    @property
    def N(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def hi(self) -> np.ndarray:
        return self.lo + self.h * (np.asarray(self.shape) - 1)

    def axes(self) -> list[np.ndarray]:
        return [self.lo[i] + self.h[i] * np.arange(n) for i, n in enumerate(self.shape)]

    def coords(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def with_values(self, values) -> "GridField":
        return replace(self, values=np.asarray(values, dtype=float))

    def at(self, x) -> float:
        """Value at the node nearest to x."""
        k = np.rint((np.asarray(x, float) - self.lo) / self.h).astype(int)
        return float(self.values[tuple(k)])

    def to_csv_rows(self, residual: "GridField | None" = None):
        X = self.coords().reshape(-1, self.N)
        cols = [X, self.values.reshape(-1, 1)]
        if residual is not None:
            cols.append(residual.values.reshape(-1, 1))
        return np.hstack(cols)


def lattice(lo, hi, n) -> GridField:
    """Box lattice with n nodes per axis (int or sequence); the outer faces are boundary."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    n = np.broadcast_to(np.asarray(n, int), lo.shape)
    h = (hi - lo) / (n - 1)
    mask = np.zeros(tuple(n), dtype=bool)
    for i in range(len(n)):
        sl = [slice(None)] * len(n)
        sl[i] = 0
        mask[tuple(sl)] = True
        sl[i] = -1
        mask[tuple(sl)] = True
    return GridField(lo, h, np.zeros(tuple(n)), mask)


def _face_mask(shape) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    for i in range(len(shape)):
        sl = [slice(None)] * len(shape)
        sl[i] = 0
        m[tuple(sl)] = True
        sl[i] = -1
        m[tuple(sl)] = True
    return m


def _axis_list(profiles, N):
    if isinstance(profiles, (DegeneracyProfile, LagrangianDensity)):
        return [profiles] * N
    profiles = list(profiles)
    if len(profiles) != N:
        raise ValueError("need one entry per axis")
    return profiles


# ---------------------------------------------------------------------------
# Non-divergence operator
# ---------------------------------------------------------------------------

def fd_apply_F(field: GridField, profiles, stencil: str = "node") -> GridField:
    """sum_i g_i((delta_i u)^2) delta_ii u at nodes with a full stencil.

    stencil = "node": the node is free and off the box faces; "strict": in
    addition every stencil neighbour is free.  Other nodes get residual 0 and
    are marked boundary in the result.
    """
    gs = _axis_list(profiles, field.N)
    u = field.values
    out = np.zeros_like(u)
    active = ~(_face_mask(u.shape) | field.boundary)
    for i in range(field.N):
        h = field.h[i]
        up = np.roll(u, -1, axis=i)
        dn = np.roll(u, 1, axis=i)
        d1 = (up - dn) / (2 * h)
        d2 = (up - 2 * u + dn) / (h * h)
        out += np.asarray(gs[i].g(d1 * d1)) * d2
        if stencil == "strict":
            active &= ~np.roll(field.boundary, -1, axis=i) & ~np.roll(field.boundary, 1, axis=i)
    out = np.where(active, out, 0.0)
    return GridField(field.lo, field.h, out, ~active)


def fd_F_points(func, points, h: float, profiles) -> np.ndarray:
    """F of a callable at scattered points by central differences of step h along each axis."""
    X = np.asarray(points, dtype=float)
    N = X.shape[-1]
    gs = _axis_list(profiles, N)
    u0 = np.asarray(func(X))
    out = np.zeros(len(X))
    for i in range(N):
        e = np.zeros(N)
        e[i] = h
        up, dn = np.asarray(func(X + e)), np.asarray(func(X - e))
        d1 = (up - dn) / (2 * h)
        out += np.asarray(gs[i].g(d1 * d1)) * (up - 2 * u0 + dn) / (h * h)
    return out


def default_tol(h: float, fourth_derivative_bound: float = 1.0) -> float:
    return 10.0 * h * h * fourth_derivative_bound


@dataclass(frozen=True)
class SignVerdict:
    ok: bool
    mode: str
    tol: float
    worst_index: tuple | None
    worst_point: list | None
    worst_value: float

    def to_json(self) -> dict:
        return {"ok": self.ok, "mode": self.mode, "tol": self.tol, "worst_index": self.worst_index,
                "worst_point": self.worst_point, "worst_value": self.worst_value}


def check_sign(residuals: GridField, mode: str = "sub", tol: float | None = None) -> SignVerdict:
    """sub: all active residuals >= -tol; super: all <= tol."""
    if mode not in ("sub", "super"):
        raise ValueError("mode is 'sub' or 'super'")
    if tol is None:
        tol = default_tol(float(np.max(residuals.h)))
    active = ~residuals.boundary
    if not active.any():
        return SignVerdict(True, mode, tol, None, None, 0.0)
    vals = np.where(active, residuals.values, np.inf if mode == "sub" else -np.inf)
    k = np.unravel_index(np.argmin(vals) if mode == "sub" else np.argmax(vals), vals.shape)
    worst = float(vals[k])
    ok = worst >= -tol if mode == "sub" else worst <= tol
    point = (residuals.lo + residuals.h * np.asarray(k)).tolist()
    return SignVerdict(bool(ok), mode, tol, tuple(int(i) for i in k), point, worst)


# ---------------------------------------------------------------------------
# Discrete energy
# ---------------------------------------------------------------------------

@dataclass
class EnergyModel:
    """J_h(u) / amplitude^2 evaluated at amplitude * u.

    Working in units of ``amplitude`` keeps tolerances meaningful when the
    physical field is tiny; amplitude = 1 is the plain energy.
    """

    densities: Sequence[LagrangianDensity]
    amplitude: float = 1.0

    @classmethod
    def from_profiles(cls, profiles, N: int, amplitude: float = 1.0, **density_kw) -> "EnergyModel":
        gs = _axis_list(profiles, N)
        cache: dict[int, LagrangianDensity] = {}
        dens = []
        for g in gs:
            if id(g) not in cache:
                cache[id(g)] = solve_lagrangian_density(g, **density_kw)
            dens.append(cache[id(g)])
        return cls(dens, amplitude)

    @property
    def N(self) -> int:
        return len(self.densities)

    def _diffs(self, u, h):
        return [np.diff(u, axis=i) / h[i] for i in range(self.N)]

    def energy(self, u, h) -> float:
        a = self.amplitude
        vol = float(np.prod(h))
        return vol * sum(float(np.sum(self.densities[i].L(a * D))) for i, D in enumerate(self._diffs(u, h))) / a ** 2

    def gradient(self, u, h) -> np.ndarray:
        a = self.amplitude
        vol = float(np.prod(h))
        grad = np.zeros_like(u)
        for i, D in enumerate(self._diffs(u, h)):
            flux = self.densities[i].dL(a * D) / a * (vol / h[i])
            # edge (k, k+1): d/du_{k+1} = +flux, d/du_k = -flux
            pad = [(0, 0)] * self.N
            pad[i] = (1, 0)
            grad += np.pad(flux, pad)
            pad[i] = (0, 1)
            grad -= np.pad(flux, pad)
        return grad

    def hessian(self, u, h) -> sp.csr_matrix:
        a = self.amplitude
        vol = float(np.prod(h))
        n = u.size
        idx = np.arange(n).reshape(u.shape)
        rows, cols, vals = [], [], []
        diag = np.zeros(n)
        for i, D in enumerate(self._diffs(u, h)):
            w = np.asarray(self.densities[i].d2L(a * D)).ravel() * (vol / h[i] ** 2)
            lo = np.take(idx, np.arange(u.shape[i] - 1), axis=i).ravel()
            hi = np.take(idx, np.arange(1, u.shape[i]), axis=i).ravel()
            rows += [lo, hi]
            cols += [hi, lo]
            vals += [-w, -w]
            np.add.at(diag, lo, w)
            np.add.at(diag, hi, w)
        rows.append(np.arange(n))
        cols.append(np.arange(n))
        vals.append(diag)
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


@dataclass
class MinimizeResult:
    field: GridField
    grad_norm: float
    iterations: int
    converged: bool
    energy: float
    method: str

    def to_json(self) -> dict:
        return {"grad_norm": self.grad_norm, "iterations": self.iterations, "converged": self.converged,
                "energy": self.energy, "method": self.method}


def _free_grad(model, u, h, free):
    return np.where(free, model.gradient(u, h), 0.0)


def minimize_energy(model: EnergyModel, boundary: GridField, initial=None, method: str = "newton",
                    tol: float = GRAD_TOL, max_iter: int | None = None) -> MinimizeResult:
    """Minimise J_h over free nodes with ``boundary.values`` fixed on ``boundary.boundary``.

    newton: damped Newton on the sparse Hessian with an energy line search,
    falling back to the gradient step when the Newton direction is not a
    descent direction.  gd: steepest descent with Armijo backtracking.
    """
    if not np.all(np.isfinite(boundary.values)):
        raise ValueError("boundary values must be finite")
    h = boundary.h
    free = ~boundary.boundary
    u = np.array(boundary.values if initial is None else np.where(free, initial, boundary.values), dtype=float)
    if max_iter is None:
        max_iter = 200 if method == "newton" else 200000
    E = model.energy(u, h)
    g = _free_grad(model, u, h, free)
    gn = float(np.linalg.norm(g))
    it = 0
    fidx = np.flatnonzero(free.ravel())
    step = 1.0
    while gn >= tol and it < max_iter:
        it += 1
        if method == "newton":
            H = model.hessian(u, h)[fidx][:, fidx]
            shift = 1e-14 * max(float(H.diagonal().max()), 1e-300)
            H = H + shift * sp.identity(len(fidx), format="csr")
            try:
                d_free = -spla.spsolve(H.tocsc(), g.ravel()[fidx])
            except RuntimeError:
                d_free = -g.ravel()[fidx]
            if not np.all(np.isfinite(d_free)) or float(d_free @ g.ravel()[fidx]) >= 0:
                d_free = -g.ravel()[fidx]
            d = np.zeros(u.size)
            d[fidx] = d_free
            d = d.reshape(u.shape)
            t = 1.0
        elif method == "gd":
            d = -g
            t = step
        else:
            raise ValueError(f"unknown method {method!r}")
        slope = float(np.sum(g * d))
        accepted = False
        for _ in range(60):
            un = u + t * d
            En = model.energy(un, h)
            if En <= E + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # energy differences are below roundoff: accept a full step that reduces the gradient
            un = u + (1.0 if method == "newton" else step) * d
            gnew = _free_grad(model, un, h, free)
            if np.linalg.norm(gnew) >= gn:
                break
            En = model.energy(un, h)
        u, E = un, En
        if method == "gd":
            step = min(2.0 * t, 1e6)
        g = _free_grad(model, u, h, free)
        gn = float(np.linalg.norm(g))
    return MinimizeResult(boundary.with_values(u), gn, it, gn < tol, E, method)


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

@dataclass
class ComparisonReport:
    ok: bool
    max_violation: float  # max(v - u) over nodes
    sub_result: MinimizeResult | None
    super_result: MinimizeResult | None
    sub_certificate: SignVerdict | None = None
    super_certificate: SignVerdict | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "ok": self.ok, "max_violation": self.max_violation,
            "sub_minimizer": None if self.sub_result is None else self.sub_result.to_json(),
            "super_minimizer": None if self.super_result is None else self.super_result.to_json(),
            "sub_certificate": None if self.sub_certificate is None else self.sub_certificate.to_json(),
            "super_certificate": None if self.super_certificate is None else self.super_certificate.to_json(),
            **self.details,
        }


def comparison_check(sub_bdry: GridField, super_bdry: GridField, model: EnergyModel,
                     sub_field: GridField | None = None, super_field: GridField | None = None,
                     profiles=None, tol: float = COMPARE_TOL, sign_tol: float | None = None,
                     method: str = "newton") -> ComparisonReport:
    """Minimise for both boundary data and check v <= u + tol nodewise.

    An external sub (super) field, certified by check_sign on its free
    nodes, replaces the minimiser on that side of the comparison.
    """
    mask = sub_bdry.boundary
    if not np.array_equal(mask, super_bdry.boundary):
        raise PreconditionError("boundary masks differ")
    if np.any(sub_bdry.values[mask] > super_bdry.values[mask]):
        raise PreconditionError("sub boundary data exceeds super boundary data")
    lo_res = minimize_energy(model, sub_bdry, method=method)
    hi_res = minimize_energy(model, super_bdry, method=method)
    v, u = lo_res.field.values, hi_res.field.values
    cert_lo = cert_hi = None
    if sub_field is not None:
        cert_lo = check_sign(fd_apply_F(sub_field, profiles, "strict"), "sub", sign_tol)
        v = sub_field.values
    if super_field is not None:
        cert_hi = check_sign(fd_apply_F(super_field, profiles, "strict"), "super", sign_tol)
        u = super_field.values
    viol = float(np.max(v - u))
    ok = viol <= tol and lo_res.converged and hi_res.converged
    ok &= (cert_lo is None or cert_lo.ok) and (cert_hi is None or cert_hi.ok)
    return ComparisonReport(bool(ok), viol, lo_res, hi_res, cert_lo, cert_hi)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------

def quartic_well(x) -> np.ndarray:
    """-(x_N^2 - 1)^4 on |x_N| <= 1, zero elsewhere."""
    y = np.asarray(x)[..., -1]
    return np.where(np.abs(y) <= 1, -(y * y - 1) ** 4, 0.0)


def flat_zone_lattice(n: int, N: int, half: float = 1.9) -> GridField:
    """Lattice on [-half, half]^N; half is nudged until |x_N| = 1 falls between nodes."""
    if n % 2 == 0:
        raise ValueError("use an odd node count so that x_N = 0 is a node")
    while True:
        h = 2 * half / (n - 1)
        k = 1.0 / h
        if abs(k - round(k)) > 0.05:
            break
        half *= 1.01
    return lattice([-half] * N, [half] * N, n)


def scenario_flat_g(n: int = 33, N: int = 2, T: float = 2.0) -> dict:
    """Quartic well with g_N zero on [0, T]: F vanishes on the flat zone yet the minimum is interior."""
    grid = flat_zone_lattice(n, N)
    X = grid.coords()
    u = grid.with_values(quartic_well(X))
    gN = FlatOnInterval(T)
    profiles = [Laplacian()] * (N - 1) + [gN]
    res = fd_apply_F(u, profiles)
    # central-difference slope along x_N decides the flat zone
    d1 = (np.roll(u.values, -1, axis=N - 1) - np.roll(u.values, 1, axis=N - 1)) / (2 * grid.h[-1])
    active = ~res.boundary
    flat = active & (d1 * d1 <= T)
    max_flat = float(np.max(np.abs(res.values[flat]))) if flat.any() else math.nan
    vmin = float(u.values.min())
    at_min = active & (u.values == vmin)
    kmin = np.unravel_index(np.argmax(at_min), u.shape)
    interior_min = bool(at_min.any())
    non_constant = bool(np.ptp(u.values) > 0)
    zero_on_flat = bool(flat.any() and max_flat == 0.0)
    return {
        "scenario": "flat_g", "N": N, "grid": n, "h": float(grid.h[0]), "T": T,
        "flat_nodes": int(flat.sum()), "active_nodes": int(active.sum()),
        "max_abs_F_on_flat": max_flat, "max_abs_F": float(np.max(np.abs(res.values[active]))),
        "max_slope_sq": float(np.max(d1[active] ** 2)),
        "min_value": vmin, "min_point": (grid.lo + grid.h * np.asarray(kmin)).tolist(),
        "F_zero_on_flat": zero_on_flat, "interior_min": interior_min, "non_constant": non_constant,
        "violated": bool(zero_on_flat and interior_min and non_constant),
    }


def _laplacian_boundary(grid: GridField, shift: float = 0.0) -> GridField:
    X = grid.coords()
    data = 1.0 + 0.5 * np.sum(np.sin(np.pi * X) ** 2 * (1 + X), axis=-1) / grid.N - shift
    return grid.with_values(np.where(grid.boundary, data, 0.0))


def scenario_laplacian(n: int = 17, N: int = 2, method: str = "newton") -> dict:
    """Discrete minimiser with positive non-constant boundary data, started from an interior dip."""
    grid = lattice([0.0] * N, [1.0] * N, n)
    bd = _laplacian_boundary(grid)
    X = grid.coords()
    dip = -np.exp(-np.sum((X - 0.5) ** 2, axis=-1) / 0.02)
    model = EnergyModel.from_profiles(Laplacian(), N)
    res = minimize_energy(model, bd, initial=dip, method=method)
    u = res.field.values
    free = ~grid.boundary
    min_b, min_i = float(u[grid.boundary].min()), float(u[free].min())
    # comparison pair: lowered boundary data below the original
    low = _laplacian_boundary(grid, shift=0.25)
    low = low.with_values(np.where(grid.boundary, low.values - 0.1 * grid.coords()[..., 0], 0.0))
    cmp = comparison_check(low, bd, model, method=method)
    return {
        "scenario": "laplacian", "N": N, "grid": n, "minimizer": res.to_json(),
        "min_boundary": min_b, "min_interior": min_i,
        "boundary_min": bool(min_b < min_i), "comparison": cmp.to_json(),
    }


def annulus_lattice(r: float, n: int, N: int) -> GridField:
    """Box lattice on [-r, r]^N with boundary = nodes outside the open annulus r/2 < |x| < r."""
    grid = lattice([-r] * N, [r] * N, n)
    rho = np.linalg.norm(grid.coords(), axis=-1)
    return replace(grid, boundary=grid.boundary | (rho <= 0.5 * r) | (rho >= r))


def hopf_pair(profile: DegeneracyProfile | None = None, N: int = 2, r: float = 1.0, eps: float = 0.1,
              n: int = 41, shift: float = 0.1, method: str = "newton") -> ComparisonReport:
    """Annulus barrier below the minimiser with data eps inside and a raised zero outside."""
    profile = Laplacian() if profile is None else profile
    barrier = build_hopf_barrier(profile, N, r, eps)
    grid = annulus_lattice(r, n, N)
    rho = np.linalg.norm(grid.coords(), axis=-1)
    inner = rho <= 0.5 * r
    vb = np.asarray(barrier.value(np.clip(rho, 0.5 * r, r)))
    sub_vals = np.where(grid.boundary, np.where(inner, vb, 0.0), 0.0)
    sup_vals = np.where(grid.boundary, np.where(inner, eps, shift * eps), 0.0)
    model = EnergyModel.from_profiles(profile, N, amplitude=eps)
    sub_b = grid.with_values(sub_vals / eps)
    sup_b = grid.with_values(sup_vals / eps)
    v = grid.with_values(vb / eps)
    rep = comparison_check(sub_b, sup_b, model, sub_field=None, method=method)
    viol = float(np.max(v.values - rep.super_result.field.values))
    rep.details.update({"barrier_violation": viol, "barrier_max": float(vb.max()), "eps": eps})
    rep.ok = rep.ok and viol <= COMPARE_TOL
    rep.max_violation = max(rep.max_violation, viol)
    return rep


def scenario_glued(h_over_r: float = 1.0 / 16, K: float = 2.0, r: float = 1.0, direction_deg: float = 30.0,
                   margin: float = 1.05, method: str = "newton") -> dict:
    """Place the glued subsolution next to a touching point z and compare with the discrete solution.

    The discrete u takes eps on the placed region and 0 beyond its collar,
    the data the ball inclusion guarantees for a supersolution vanishing at z.
    """
    from .subsolution import assemble_glued_subsolution, placement

    N = 2
    profile = InverseLogSquare()
    sub = assemble_glued_subsolution(profile, N, r, K=K)
    eps = sub.eps
    d = margin * r * (32 * (N - 1) * K ** 2 + 7.0 / 8.0)
    p = np.zeros(N)
    th = math.radians(direction_deg)
    z = d * np.array([math.cos(th), math.sin(th)])
    rep = placement(sub, p, d, z)
    # lattice through z covering the collar of the placed region
    half = np.array([sub.l + r, sub.l_N + r]) * 1.02
    h = h_over_r * r
    k_lo = np.ceil((z - (rep.q_star - half)) / h).astype(int)
    k_hi = np.ceil(((rep.q_star + half) - z) / h).astype(int)
    lo = z - k_lo * h
    shape = tuple(k_lo + k_hi + 1)
    grid = GridField(lo, np.full(N, h), np.zeros(shape), _face_mask(shape))
    X = grid.coords() - rep.q_star
    depth = sub.collar_depth(X)
    inside = sub.distance_to_region(X) == 0.0
    outside = depth >= r
    bmask = grid.boundary | inside | outside
    u_b = grid.with_values(np.where(inside, 1.0, 0.0))
    u_b = replace(u_b, boundary=bmask)
    vstar = np.asarray(sub(X, outside="extend")) / eps
    vstar = np.where(outside, 0.0, vstar)
    v_b = replace(grid.with_values(np.where(bmask, vstar, 0.0)), boundary=bmask)
    model = EnergyModel.from_profiles(profile, N, amplitude=eps, octaves_below=400)
    cmp = comparison_check(v_b, u_b, model, method=method)
    u = cmp.super_result.field
    viol = float(np.max(vstar - u.values))
    cmp.ok = cmp.ok and viol <= COMPARE_TOL
    uz = u.at(z) * eps
    vz = float(sub((z - rep.q_star)[None], outside="extend")[0])
    return {
        "scenario": "glued", "N": N, "profile": profile.to_json(), "K": K, "r": r, "eps": eps,
        "dist_pC": d, "z": z.tolist(), "q_star": rep.q_star.tolist(), "h": h, "grid": [int(k) for k in shape],
        "placement_ok": rep.ok, "dist_z_region": rep.dist_z, "u_z": uz, "v_star_z": vz,
        "barrier_violation": viol, "comparison": cmp.to_json(),
        "u_ge_v_at_z": bool(uz >= vz > 0), "contradiction": bool(rep.ok and uz >= vz > 0 and cmp.ok),
    }


def glued_fd_check(sub, count: int = 10000, h: float | None = None, rng=None) -> dict:
    """F(v) by central differences at random collar points whose stencil stays in the collar.

    Reports the raw minimum and the minimum in units of eps / r^2.
    """
    rng = np.random.default_rng(5) if rng is None else rng
    r = sub.r
    h = 1e-3 * r if h is None else h
    j = rng.integers(0, sub.n, size=count)
    a = rng.uniform(sub.partition.alpha[j + 1], sub.partition.alpha[j])
    depth = rng.uniform(3 * h, r - 3 * h, size=count)
    P = sub.centers[j] + (sub.R[j] + depth)[:, None] * np.column_stack([np.cos(a), np.sin(a)])
    X = sub.embed(P, rng)
    profiles = [Laplacian()] * (sub.N - 1) + [sub.profile]
    F = fd_F_points(lambda x: sub(x, outside="extend"), X, h, profiles)
    Fn = F / (sub.eps / r ** 2)
    tol = default_tol(h / r)
    return {"count": count, "h": h, "tol": tol, "min_F": float(F.min()), "min_F_scaled": float(Fn.min()),
            "ok": bool(Fn.min() >= -tol and F.min() >= -tol)}


SCENARIOS = {"flat_g": scenario_flat_g, "laplacian": scenario_laplacian, "glued": scenario_glued}


def smp_scenario(name: str, **kw) -> dict:
    try:
        fn = SCENARIOS[name]
    except KeyError:
        raise UnknownScenario(name) from None
    return fn(**kw)
