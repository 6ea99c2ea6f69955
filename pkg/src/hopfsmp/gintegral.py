"""The budget integral G(xi) = int_0^xi g(zeta^2 * c) / zeta d zeta, with c = 1/N or 1.

Substituting t = zeta^2 c gives G(xi) = P(xi^2 c) where P is the profile
primitive 1/2 int_0^t g(s)/s ds.  Closed-form families use P directly; the
quadrature route integrates in s = -ln zeta, where the improper end becomes
an infinite interval with a bounded integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

from .profiles import DegeneracyProfile

DIVERGENCE_CEILING = 1e6
INCREMENT_FLOOR = 1e-10
CONVERGED_INCREMENT = 1e-12
MAX_SEGMENTS = 100


class Scale(str, Enum):
    INVN = "invn"  # g(zeta^2 / N)
    ONE = "one"    # g(zeta^2)

    @classmethod
    def parse(cls, s) -> "Scale":
        return s if isinstance(s, Scale) else cls(str(s).lower())


def scale_factor(scale, N: int) -> float:
    return 1.0 / N if Scale.parse(scale) is Scale.INVN else 1.0


@dataclass(frozen=True)
class GBudget:
    xi: float
    scale: Scale
    N: int
    value: float  # +inf when divergent

    @property
    def divergent(self) -> bool:
        return math.isinf(self.value)

    @property
    def kind(self) -> str:
        return "Divergent" if self.divergent else "Finite"

    def to_json(self) -> dict:
        return {"xi": self.xi, "scale": self.scale.value, "N": self.N, "kind": self.kind,
                "value": None if self.divergent else self.value}


def _quadrature_G(profile: DegeneracyProfile, xi: float, c: float) -> float:
    """Integrate g(c e^{-2s}) ds over s in [-ln xi, inf) on doubling segments."""
    s0 = -math.log(xi)

    def integrand(s):
        return float(profile.g_log(math.log(c) - 2.0 * s))

    total = 0.0
    increments = []
    a, width = s0, 1.0
    for _ in range(MAX_SEGMENTS):
        b = a + width
        inc, _ = quad(integrand, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)
        total += inc
        increments.append(inc)
        if total > DIVERGENCE_CEILING:
            return math.inf
        if inc < CONVERGED_INCREMENT:
            return total
        if len(increments) >= 8:
            last = np.asarray(increments[-8:])
            if np.all(last > INCREMENT_FLOOR) and np.all(last[1:] / last[:-1] >= 0.95):
                return math.inf
        a, width = b, 2.0 * width
    return math.inf


def compute_G(profile: DegeneracyProfile, xi: float, scale="invn", N: int = 2,
              method: str = "auto") -> GBudget:
    sc = Scale.parse(scale)
    xi = float(xi)
    if N < 1:
        raise ValueError("N must be positive")
    ax = abs(xi)
    if ax == 0.0:
        return GBudget(xi, sc, N, 0.0)
    c = scale_factor(sc, N)
    if method == "auto":
        method = "closed" if profile.closed_form else "quadrature"
    if method == "closed":
        if profile.budget_divergent:
            value = math.inf
        else:
            value = float(profile.primitive_log(2.0 * math.log(ax) + math.log(c)))
    elif method == "quadrature":
        value = _quadrature_G(profile, ax, c)
    else:
        raise ValueError(f"unknown method {method!r}")
    return GBudget(xi, sc, N, value)


def classify_G(profile: DegeneracyProfile, scale="invn", N: int = 2, method: str = "auto") -> str:
    """'Finite' or 'Divergent'.  Only the behaviour at zeta -> 0 matters, so probe a small xi."""
    c = scale_factor(scale, N)
    xi = math.sqrt(min(profile.t_bar, 1.0) / c) * 0.5
    return compute_G(profile, xi, scale, N, method).kind


def G_difference(profile: DegeneracyProfile, xi1: float, xi0: float, scale="invn", N: int = 2) -> float:
    """G(xi1) - G(xi0), finite even when both values are +inf."""
    c = scale_factor(scale, N)
    l1 = 2.0 * math.log(abs(xi1)) + math.log(c)
    l0 = 2.0 * math.log(abs(xi0)) + math.log(c)
    return float(profile.primitive_log(l1)) - float(profile.primitive_log(l0))
