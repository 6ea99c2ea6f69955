"""Diffusion coefficients g for the operator F(u) = sum_i g_i(u_{x_i}^2) u_{x_i x_i}.

Every profile is evaluated on [0, t_bar] by its own law and extended by a
constant past t_bar.  Most of the degeneracy lives at t -> 0+, far below
double precision for the logarithmic families, so each profile also exposes
a log-space interface (``*_log`` methods taking ``lt = ln t``).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.interpolate import BPoly, PchipInterpolator
from scipy.optimize import brentq

LN2 = math.log(2.0)


class ProfileError(ValueError):
    """Invalid profile parameters or data."""


class ExtrapolationError(ProfileError):
    """A tabulated profile was queried outside its sample hull."""


class InapplicableError(ValueError):
    """The requested quantity is vacuous for this profile (e.g. divergent budget)."""


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


class DegeneracyProfile:
    """Base class.  Subclasses implement the ``_core_*`` laws on (0, t_bar]."""

    family: str = "abstract"
    closed_form: bool = True

    def __init__(self, t_bar: float, extension_value: float | None = None):
        if not t_bar > 0:
            raise ProfileError("t_bar must be positive")
        self.t_bar = float(t_bar)
        self.lt_bar = math.log(self.t_bar)
        if extension_value is None:
            extension_value = float(self._core_g_log(np.array(self.lt_bar)))
        self.extension_value = float(extension_value)

    # -- laws on (0, t_bar]; overridden ---------------------------------------
    def _core_g_log(self, lt):
        raise NotImplementedError

    def _core_tdg_log(self, lt):
        raise NotImplementedError

    def _core_primitive_log(self, lt):
        raise NotImplementedError

    @property
    def g_zero(self) -> float:
        return float(self._core_g_log(np.array(-np.inf)))

    @property
    def budget_divergent(self) -> bool:
        """True when int_0 g(s)/s ds diverges, i.e. G = +inf."""
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return bool(float(self._core_primitive_log(np.array(-np.inf))) == -np.inf)

    # -- public evaluation ----------------------------------------------------
    def g_log(self, lt):
        lt = np.asarray(lt, dtype=float)
        core = self._core_g_log(np.minimum(lt, self.lt_bar))
        return _scalar_or_array(lt, np.where(lt > self.lt_bar, self.extension_value, core))

    def tdg_log(self, lt):
        """t * g'(t) as a function of ln t."""
        lt = np.asarray(lt, dtype=float)
        core = self._core_tdg_log(np.minimum(lt, self.lt_bar))
        return _scalar_or_array(lt, np.where(lt > self.lt_bar, 0.0, core))

    def g(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ProfileError("g is defined for t >= 0 only")
        with np.errstate(divide="ignore"):
            return _scalar_or_array(t, np.asarray(self.g_log(np.log(t))))

    def dg(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self.tdg_log(np.log(t))) / t
        return _scalar_or_array(t, out)

    def primitive_log(self, lt):
        """P(t) = 1/2 int_0^t g(s)/s ds, normalised so that P(0+) = 0 when finite.

        For divergent budgets P(0+) = -inf and only differences are meaningful.
        """
        lt = np.asarray(lt, dtype=float)
        core = self._core_primitive_log(np.minimum(lt, self.lt_bar))
        ext = float(self._core_primitive_log(np.array(self.lt_bar))) + 0.5 * self.extension_value * (
            lt - self.lt_bar
        )
        return _scalar_or_array(lt, np.where(lt > self.lt_bar, ext, core))

    def ratio_log(self, lt):
        """g^{3/2} / (t g') at t = exp(lt); +inf where g' vanishes."""
        lt = np.asarray(lt, dtype=float)
        num = np.asarray(self.g_log(lt)) ** 1.5
        den = np.asarray(self.tdg_log(lt))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)
        return _scalar_or_array(lt, out)

    def c2_ratio_log(self, lt):
        """g / (t g') at t = exp(lt)."""
        lt = np.asarray(lt, dtype=float)
        num = np.asarray(self.g_log(lt))
        den = np.asarray(self.tdg_log(lt))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)
        return _scalar_or_array(lt, out)

    def g_inverse_log(self, y: float) -> float:
        """ln t in (0, t_bar] with g(t) = y (g must be increasing there)."""
        if not 0 < y <= self.extension_value:
            raise ProfileError(f"g-inverse target {y} outside (0, g(t_bar)]")
        if y == self.extension_value:
            return self.lt_bar
        return _increasing_root(lambda lt: float(self._core_g_log(np.array(lt))) - y, self.lt_bar)

    def primitive_inverse_log(self, y):
        """ln t with P(t) = y.  Extension region is inverted exactly."""
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        p_bar = float(self.primitive_log(self.lt_bar))
        ext = flat >= p_bar
        out = np.empty_like(flat)
        if np.any(ext):
            if self.extension_value <= 0:
                raise ProfileError("primitive is flat past t_bar")
            out[ext] = self.lt_bar + 2.0 * (flat[ext] - p_bar) / self.extension_value
        if np.any(~ext):
            out[~ext] = self._core_primitive_inverse_log(flat[~ext])
        return float(out[0]) if y.ndim == 0 else out.reshape(y.shape)

    def _core_primitive_inverse_log(self, y: np.ndarray) -> np.ndarray:
        return np.array([
            _increasing_root(lambda lt: float(self._core_primitive_log(np.array(lt))) - v, self.lt_bar) for v in y
        ])

    def kinks(self) -> tuple:
        """t values where g' may jump."""
        return (self.t_bar,)

    # -- serialisation --------------------------------------------------------
    def params(self) -> dict:
        return {}

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "params": self.params(),
            "t_bar": self.t_bar,
            "extension_value": self.extension_value,
        }

    def __repr__(self) -> str:
        p = ", ".join(f"{k}={v!r}" for k, v in self.params().items() if not isinstance(v, list))
        return f"{type(self).__name__}({p}{', ' if p else ''}t_bar={self.t_bar:.6g})"

    def __eq__(self, other) -> bool:
        return isinstance(other, DegeneracyProfile) and self.to_json() == other.to_json()

    def __hash__(self) -> int:
        return hash(json.dumps(self.to_json(), sort_keys=True))


def _increasing_root(fun, hi: float) -> float:
    """Root of an increasing function of lt on (-inf, hi], bracketed by doubling."""
    if fun(hi) < 0:
        raise ProfileError("target beyond the upper end of the valid range")
    step = 1.0
    lo = hi - step
    while fun(lo) > 0:
        step *= 2.0
        lo = hi - step
        if step > 1e300:
            raise ProfileError("could not bracket root")
    if fun(lo) == 0:
        return lo
    return brentq(fun, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)


class Laplacian(DegeneracyProfile):
    family = "laplacian"

    def __init__(self, t_bar: float = 1.0, extension_value: float | None = None):
        super().__init__(t_bar, extension_value)

    def _core_g_log(self, lt):
        return np.ones_like(np.asarray(lt, dtype=float))

    def _core_tdg_log(self, lt):
        return np.zeros_like(np.asarray(lt, dtype=float))

    def _core_primitive_log(self, lt):
        return 0.5 * np.asarray(lt, dtype=float)

    def g_inverse_log(self, y):
        raise ProfileError("g is constant; no inverse")

    def _core_primitive_inverse_log(self, y):
        return 2.0 * y


class InverseLogPower(DegeneracyProfile):
    """g(t) = 1 / |ln t|^k."""

    family = "invlogpow"

    def __init__(self, k: float, t_bar: float | None = None, extension_value: float | None = None):
        if not k > 0:
            raise ProfileError("k must be positive")
        self.k = float(k)
        if t_bar is None:
            t_bar = math.exp(-1.0) if self.k < 2 else math.exp(-2.0 * self.k)
        if not t_bar < 1:
            raise ProfileError("t_bar must be below 1 for the logarithmic family")
        super().__init__(t_bar, extension_value)

    def _L(self, lt):
        return -np.asarray(lt, dtype=float)

    def _core_g_log(self, lt):
        L = self._L(lt)
        with np.errstate(divide="ignore"):
            return np.where(np.isinf(L), 0.0, L ** (-self.k))

    def _core_tdg_log(self, lt):
        L = self._L(lt)
        with np.errstate(divide="ignore"):
            return np.where(np.isinf(L), 0.0, self.k * L ** (-self.k - 1.0))

    def _core_primitive_log(self, lt):
        L = self._L(lt)
        if self.k == 1.0:
            return -0.5 * np.log(L)
        with np.errstate(divide="ignore"):
            return L ** (1.0 - self.k) / (2.0 * (self.k - 1.0))

    def g_inverse_log(self, y):
        if not 0 < y <= self.extension_value:
            raise ProfileError(f"g-inverse target {y} outside (0, g(t_bar)]")
        return -(y ** (-1.0 / self.k))

    def _core_primitive_inverse_log(self, y):
        if self.k == 1.0:
            return -np.exp(-2.0 * y)
        if self.k > 1.0 and np.any(y <= 0):
            raise ProfileError("finite primitive is positive")
        return -((2.0 * (self.k - 1.0) * y) ** (1.0 / (1.0 - self.k)))

    def params(self):
        return {"k": self.k}


class InverseLogSquare(InverseLogPower):
    """k = 2 member, valid on (0, e^-4]."""

    family = "invlogsq"

    def __init__(self, t_bar: float | None = None, extension_value: float | None = None):
        super().__init__(2.0, math.exp(-4.0) if t_bar is None else t_bar, extension_value)

    def params(self):
        return {}


class Power(DegeneracyProfile):
    """g(t) = t^p.  Finite budget, vanishing limit ratio, bounded g/(t g')."""

    family = "power"

    def __init__(self, p: float, t_bar: float | None = None, extension_value: float | None = None):
        if not p > 0:
            raise ProfileError("p must be positive")
        self.p = float(p)
        if t_bar is None:
            t_bar = (1.0 + self.p) ** (-1.0 / self.p)
        super().__init__(t_bar, extension_value)

    def _core_g_log(self, lt):
        return np.exp(self.p * np.asarray(lt, dtype=float))

    def _core_tdg_log(self, lt):
        return self.p * np.exp(self.p * np.asarray(lt, dtype=float))

    def _core_primitive_log(self, lt):
        return np.exp(self.p * np.asarray(lt, dtype=float)) / (2.0 * self.p)

    def g_inverse_log(self, y):
        if not 0 < y <= self.extension_value:
            raise ProfileError(f"g-inverse target {y} outside (0, g(t_bar)]")
        return math.log(y) / self.p

    def _core_primitive_inverse_log(self, y):
        if np.any(y <= 0):
            raise ProfileError("finite primitive is positive")
        return np.log(2.0 * self.p * y) / self.p

    def params(self):
        return {"p": self.p}


class FlatOnInterval(DegeneracyProfile):
    """g = 0 on [0, T], then a linear ramp reaching 1 at T + ramp."""

    family = "flat"

    def __init__(self, T: float, ramp: float = 1.0, t_bar: float | None = None,
                 extension_value: float | None = None):
        if not T > 0 or not ramp > 0:
            raise ProfileError("T and ramp must be positive")
        self.T = float(T)
        self.ramp = float(ramp)
        super().__init__(self.T + self.ramp if t_bar is None else t_bar, extension_value)

    def _core_g_log(self, lt):
        t = np.exp(np.asarray(lt, dtype=float))
        return np.clip((t - self.T) / self.ramp, 0.0, 1.0)

    def _core_tdg_log(self, lt):
        t = np.exp(np.asarray(lt, dtype=float))
        return np.where((t > self.T) & (t < self.T + self.ramp), t / self.ramp, 0.0)

    def _core_primitive_log(self, lt):
        t = np.exp(np.asarray(lt, dtype=float))
        tt = np.clip(t, self.T, self.T + self.ramp)
        ramp_part = ((tt - self.T) - self.T * np.log(tt / self.T)) / self.ramp
        top = np.where(t > self.T + self.ramp, np.log(np.maximum(t, 1e-300) / (self.T + self.ramp)), 0.0)
        return 0.5 * (ramp_part + top)

    def kinks(self):
        return (self.T, self.t_bar)

    def g_inverse_log(self, y):
        if not 0 < y <= min(1.0, self.extension_value):
            raise ProfileError("g-inverse target outside the ramp")
        return math.log(self.T + y * self.ramp)

    def params(self):
        return {"T": self.T, "ramp": self.ramp}


class Tabulated(DegeneracyProfile):
    """Sampled (t, g, g') data, interpolated by monotone cubics."""

    family = "tabulated"
    closed_form = False

    def __init__(self, t: Sequence[float], g: Sequence[float], gprime: Sequence[float],
                 extension_value: float | None = None, derivative_rtol: float = 5e-2):
        t = np.asarray(t, dtype=float)
        gv = np.asarray(g, dtype=float)
        gp = np.asarray(gprime, dtype=float)
        if t.ndim != 1 or len(t) < 3 or not (len(t) == len(gv) == len(gp)):
            raise ProfileError("need at least 3 aligned samples")
        if np.any(np.diff(t) <= 0):
            raise ProfileError("sample t values must be strictly increasing")
        if t[0] < 0:
            raise ProfileError("sample t values must be nonnegative")
        dd = np.diff(gv) / np.diff(t)
        mid = 0.5 * (gp[1:] + gp[:-1])
        scale = np.maximum(np.abs(dd), np.abs(mid)).max() + 1e-300
        if np.max(np.abs(dd - mid)) > derivative_rtol * scale:
            raise ProfileError("g' inconsistent with divided differences of g")
        self.t_samples, self.g_samples, self.gp_samples = t, gv, gp
        self._g = PchipInterpolator(t, gv, extrapolate=False)
        self._gp = PchipInterpolator(t, gp, extrapolate=False)
        super().__init__(t[-1], extension_value)

    def _check_hull(self, t):
        if np.any(t < self.t_samples[0] * (1 - 1e-15)):
            raise ExtrapolationError(f"query below the smallest sample t={self.t_samples[0]}")

    def _core_g_log(self, lt):
        t = np.exp(np.asarray(lt, dtype=float))
        self._check_hull(t)
        return np.asarray(self._g(np.clip(t, self.t_samples[0], self.t_bar)))

    def _core_tdg_log(self, lt):
        t = np.exp(np.asarray(lt, dtype=float))
        self._check_hull(t)
        return t * np.asarray(self._gp(np.clip(t, self.t_samples[0], self.t_bar)))

    @property
    def g_zero(self):
        if self.t_samples[0] > 0:
            raise ExtrapolationError("table does not reach t = 0")
        return float(self.g_samples[0])

    def _core_primitive_log(self, lt):
        g0 = self.g_zero
        lt_arr = np.atleast_1d(np.asarray(lt, dtype=float))
        out = np.empty_like(lt_arr)
        for j, x in enumerate(lt_arr):
            if x == -np.inf:
                out[j] = 0.0 if g0 == 0 else -np.inf
                continue
            t = math.exp(x)
            rest, _ = quad(lambda s: (float(self._g(s)) - g0) / s if s > 0 else float(self._gp(0.0)),
                           0.0, t, epsabs=1e-14, epsrel=1e-12, limit=200)
            out[j] = 0.5 * (g0 * x + rest) if g0 > 0 else 0.5 * rest
        return out.reshape(np.shape(lt))

    def params(self):
        return {"t": self.t_samples.tolist(), "g": self.g_samples.tolist(),
                "gprime": self.gp_samples.tolist()}

    @classmethod
    def from_csv(cls, path, **kw) -> "Tabulated":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls([float(r["t"]) for r in rows], [float(r["g"]) for r in rows],
                   [float(r["gprime"]) for r in rows], **kw)


FAMILIES = {
    "laplacian": Laplacian,
    "invlogpow": InverseLogPower,
    "invlogsq": InverseLogSquare,
    "power": Power,
    "flat": FlatOnInterval,
    "tabulated": Tabulated,
}


def profile_from_json(record: dict | str | Path) -> DegeneracyProfile:
    if not isinstance(record, dict):
        text = Path(record).read_text() if Path(str(record)).exists() else str(record)
        record = json.loads(text)
    family = record["family"]
    if family not in FAMILIES:
        raise ProfileError(f"unknown family {family!r}")
    params = dict(record.get("params", {}))
    kw = {"extension_value": record.get("extension_value")}
    if family != "tabulated":
        kw["t_bar"] = record.get("t_bar")
        if family == "laplacian" and kw["t_bar"] is None:
            kw["t_bar"] = 1.0
    return FAMILIES[family](**params, **kw)


def eval_g(profile: DegeneracyProfile, t):
    return profile.g(t)


# ---------------------------------------------------------------------------
# Structural assumptions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitRatio:
    kind: str  # "zero" | "positive" | "infinite"
    value: float | None = None


@dataclass
class AssumptionReport:
    L_i_ordering: bool
    L_ii_positivity: bool
    L_iii_monotone: bool
    extra_monotone_g: bool
    extra_sum_bound: bool
    limit_ratio: LimitRatio | None
    C2_bounded: bool | None
    K_estimate: float | None
    K_status: str  # "certified" | "absent" | "inapplicable"
    budget_divergent: bool

    def to_json(self) -> dict:
        d = self.__dict__.copy()
        d["limit_ratio"] = None if self.limit_ratio is None else self.limit_ratio.__dict__
        return d


SCAN_DEPTH = 60
STABLE_WINDOW = 8
STABLE_RTOL = 1e-3


def scan_grid(profile: DegeneracyProfile, depth: int = SCAN_DEPTH, per_octave: int = 1) -> np.ndarray:
    """ln t on the geometric grid t_bar * 2^{-j/per_octave}, ordered towards 0."""
    return profile.lt_bar - LN2 * np.arange(depth * per_octave + 1) / per_octave


def classify_tail(values: np.ndarray) -> LimitRatio:
    """Decide the t -> 0+ behaviour of a sequence sampled towards 0."""
    values = np.asarray(values, dtype=float)
    tail = values[-STABLE_WINDOW:]
    if np.any(np.isinf(tail)):
        return LimitRatio("infinite")
    if tail[-1] < 1e-12:
        return LimitRatio("zero", 0.0)
    rel = np.abs(np.diff(tail)) / np.abs(tail[1:])
    if rel.max() < STABLE_RTOL:
        return LimitRatio("positive", float(tail[-1]))
    return LimitRatio("zero", 0.0) if tail[-1] < tail[0] else LimitRatio("infinite")


def check_assumptions(profile: DegeneracyProfile, N: int, others: Sequence[DegeneracyProfile] | None = None,
                      tol: float = 1e-12) -> AssumptionReport:
    if N < 2:
        raise ValueError("N must be at least 2")
    others = list(others) if others is not None else [Laplacian()] * (N - 1)
    lt = scan_grid(profile, per_octave=16)[::-1]  # increasing t
    g = np.asarray(profile.g_log(lt))
    tdg = np.asarray(profile.tdg_log(lt))
    g0 = profile.g_zero

    ordering = bool(np.all(g >= -tol) and np.all(g <= 1 + tol) and 0 <= g0 <= 1)
    for o in others:
        go = np.asarray(o.g_log(lt))
        ordering &= bool(np.all(g <= go + tol) and np.all(go <= 1 + tol))
    positive = bool(np.all(g > 0))
    s = g + tdg
    monotone = bool(np.all(np.diff(s) >= -tol))
    extra_mono = bool(np.all(tdg >= -tol))
    extra_sum = bool(np.all(s <= 1 + tol))

    if not positive:
        return AssumptionReport(ordering, False, monotone, extra_mono, extra_sum, None, None, None,
                                "inapplicable", profile.budget_divergent)

    lt_scan = scan_grid(profile)
    limit = classify_tail(profile.ratio_log(lt_scan))
    c2 = classify_tail(profile.c2_ratio_log(lt_scan)).kind != "infinite"
    try:
        K = estimate_K(profile, N)
        status = "certified" if K is not None else "absent"
    except InapplicableError:
        K, status = None, "inapplicable"
    return AssumptionReport(ordering, positive, monotone, extra_mono, extra_sum, limit, c2, K, status,
                            profile.budget_divergent)


def estimate_K(profile: DegeneracyProfile, N: int, safety: float = 1.01) -> float | None:
    """Smallest K (times ``safety``) with sqrt(g(xi^2/N)) <= K (e^{G(xi)} - 1) on the scan grid.

    Returns None when the ratio grows without bound towards xi -> 0.
    """
    if profile.budget_divergent:
        raise InapplicableError("G diverges; the K condition is vacuous")
    lt = scan_grid(profile)  # lt = ln(xi^2 / N)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sqrt(np.asarray(profile.g_log(lt))) / np.expm1(np.asarray(profile.primitive_log(lt)))
    if classify_tail(ratio).kind == "infinite":
        return None
    return float(np.max(ratio)) * safety


def certify_K(profile: DegeneracyProfile, N: int, K: float, per_octave: int = 16) -> bool:
    if profile.budget_divergent:
        raise InapplicableError("G diverges; the K condition is vacuous")
    lt = scan_grid(profile, per_octave=per_octave)
    lhs = np.sqrt(np.asarray(profile.g_log(lt)))
    rhs = K * np.expm1(np.asarray(profile.primitive_log(lt)))
    return bool(np.all(lhs <= rhs * (1 + 1e-12)))


# ---------------------------------------------------------------------------
# Technical lemmas, evaluated pointwise
# ---------------------------------------------------------------------------

def h_n(profile: DegeneracyProfile, n: int, t, a):
    a = np.asarray(a, dtype=float)
    return profile.g(t * (1 - a) / (n - 1)) * (1 - a) + profile.g(t * a) * a


def k1(profile: DegeneracyProfile, t, a):
    a = np.asarray(a, dtype=float)
    return (1 - a) + a * profile.g(t * a)


def k2(profile: DegeneracyProfile, t, a):
    a = np.asarray(a, dtype=float)
    return -a - (1 - a) * profile.g(t * a)


def directional_sum(profile: DegeneracyProfile, t, d: np.ndarray):
    """sum_i g(t d_i^2) d_i^2 for unit direction(s) ``d`` (last axis)."""
    d2 = np.asarray(d, dtype=float) ** 2
    t = np.asarray(t, dtype=float)[..., None] if np.ndim(t) else t
    return np.sum(profile.g(t * d2) * d2, axis=-1)


# ---------------------------------------------------------------------------
# Lagrangian density: 2 t^2 f'' + 5 t f' + f = g, bounded at 0
# ---------------------------------------------------------------------------

def _f_direct(profile: DegeneracyProfile, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """f(t) = 2 int_0^1 (1-u) g(u^2 t) du and t f'(t), by adaptive quadrature.

    The u-range is split where u^2 t crosses a kink of g, so every segment
    has a smooth integrand, and each row is scaled by g(t) so that the
    vector error control is relative per t.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = len(t)
    with np.errstate(divide="ignore"):
        cuts = [np.sqrt(np.minimum(k / t, 1.0)) for k in profile.kinks()]
    edges = np.sort(np.vstack([np.zeros(n)] + cuts + [np.ones(n)]), axis=0)
    gt = np.asarray(profile.g(t))
    scale = np.where(gt > 0, gt, 1.0)
    total = np.zeros(2 * n)
    for lo, hi in zip(edges[:-1], edges[1:]):
        width = hi - lo
        if not np.any(width > 0):
            continue

        def integrand(v, lo=lo, width=width):
            u = lo + width * v
            x = u * u * t
            gx = np.asarray(profile.g(x))
            with np.errstate(divide="ignore"):
                tdg = np.where(x > 0, np.asarray(profile.tdg_log(np.log(np.where(x > 0, x, 1.0)))), 0.0)
            w = 2 * (1 - u) * width / scale
            return np.concatenate([w * gx, w * tdg])

        val, _ = quad_vec(integrand, 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=400, norm="max")
        total += val
    return total[:n] * scale, total[n:] * scale


@dataclass
class LagrangianDensity:
    """Sampled f with an interpolant in s = ln t.  L(p) = f(p^2) p^2 / 2."""

    profile: DegeneracyProfile
    t: np.ndarray
    f_values: np.ndarray
    tfp_values: np.ndarray
    constant: float | None = None
    _F: BPoly | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.constant is None:
            s = np.log(self.t)
            gs = np.asarray(self.profile.g(self.t))
            fss = 0.5 * (gs - self.f_values - 3 * self.tfp_values)
            # quintic Hermite in s = ln t: F, F_s and F_ss are all known at the nodes
            self._F = BPoly.from_derivatives(s, np.column_stack([self.f_values, self.tfp_values, fss]),
                                             extrapolate=False)

    def _eval(self, t):
        t = np.asarray(t, dtype=float)
        if self.constant is not None:
            return np.full_like(t, self.constant), np.zeros_like(t)
        flat = t.ravel()
        F = np.empty_like(flat)
        Fs = np.empty_like(flat)
        zero = flat <= 0
        inside = (~zero) & (flat >= self.t[0]) & (flat <= self.t[-1])
        outside = ~(zero | inside)
        F[zero] = self.profile.g_zero
        Fs[zero] = 0.0
        if inside.any():
            s = np.log(flat[inside])
            F[inside] = self._F(s)
            # derivative of the same interpolant keeps L' consistent with L
            Fs[inside] = self._F(s, 1)
        if outside.any():
            uniq, inv = np.unique(flat[outside], return_inverse=True)
            fv, tv = _f_direct(self.profile, uniq)
            F[outside] = fv[inv]
            Fs[outside] = tv[inv]
        return F.reshape(t.shape), Fs.reshape(t.shape)

    def f(self, t):
        return self._eval(t)[0]

    def tf_prime(self, t):
        return self._eval(t)[1]

    def L(self, p):
        p = np.asarray(p, dtype=float)
        return 0.5 * self.f(p * p) * p * p

    def dL(self, p):
        """L'(p) = p (f + t f') at t = p^2; equals int_0^p g(q^2) dq."""
        p = np.asarray(p, dtype=float)
        F, Fs = self._eval(p * p)
        return p * (F + Fs)

    def d2L(self, p):
        p = np.asarray(p, dtype=float)
        return np.asarray(self.profile.g(p * p))

    def residual(self, t_points, ds: float = 0.02) -> np.ndarray:
        """|f + 5 t f' + 2 t^2 f'' - g| by 5-point differences in ln t on directly integrated f."""
        t_points = np.atleast_1d(np.asarray(t_points, dtype=float))
        if self.constant is not None:
            return np.abs(self.constant - np.asarray(self.profile.g(t_points)))
        offs = np.arange(-2, 3) * ds
        grid = np.exp(np.log(t_points)[:, None] + offs[None, :])
        F, _ = _f_direct(self.profile, grid.ravel())
        F = F.reshape(grid.shape)
        Fs = (F[:, 0] - 8 * F[:, 1] + 8 * F[:, 3] - F[:, 4]) / (12 * ds)
        Fss = (-F[:, 0] + 16 * F[:, 1] - 30 * F[:, 2] + 16 * F[:, 3] - F[:, 4]) / (12 * ds * ds)
        # t f' = F_s, t^2 f'' = F_ss - F_s
        return np.abs(F[:, 2] + 5 * Fs + 2 * (Fss - Fs) - np.asarray(self.profile.g(t_points)))


def solve_lagrangian_density(profile: DegeneracyProfile, octaves_below: int = 160, octaves_above: int = 12,
                             per_octave: int = 16) -> LagrangianDensity:
    """Particular solution of the Euler equation bounded at t = 0.

    With homogeneous modes t^{-1/2}, t^{-1}, variation of parameters gives
    f(t) = int_0^1 (sigma^{-1/2} - 1) g(sigma t) d sigma; the substitution
    sigma = u^2 removes the endpoint singularity.
    """
    lt = profile.lt_bar + LN2 * np.arange(-octaves_below * per_octave, octaves_above * per_octave + 1) / per_octave
    t = np.exp(lt)
    if isinstance(profile, Laplacian) or (
        profile.family == "tabulated" and np.ptp(profile.g_samples) == 0 and profile.extension_value == profile.g_samples[0]
    ):
        c = profile.g_zero
        return LagrangianDensity(profile, t, np.full_like(t, c), np.zeros_like(t), constant=c)
    f, tfp = _f_direct(profile, t)
    return LagrangianDensity(profile, t, f, tfp)
