"""Geometry of the switching line y = x + eta for the Filippov limit.

The line is parametrised by its x-coordinate throughout. The normal vector is
n = (-1, 1), so ``lie1(i, x) > 0`` means f_i pushes orbits from R1 towards R2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError
from .model import ModelParams, State, vector_field_region

DEGENERACY_TOL = 1e-10
MEMBERSHIP_TOL = 1e-12


class Visibility(str, enum.Enum):
    VISIBLE = "visible"
    INVISIBLE = "invisible"
    DEGENERATE = "degenerate"


class SigmaKind(str, enum.Enum):
    CROSSING = "crossing"
    SLIDING = "sliding"
    TANGENCY_1 = "tangency1"
    TANGENCY_2 = "tangency2"


@dataclass(frozen=True)
class TangencyPoint:
    location: State
    field_index: int
    visibility: Visibility
    curvature: float  # second Lie derivative of g along f_i, at the point


@dataclass(frozen=True)
class SlidingSegment:
    x_lo: float
    x_hi: float
    stability: str  # "attracting" | "repelling"
    endpoints: tuple[TangencyPoint, TangencyPoint]

    @property
    def attracting(self) -> bool:
        return self.stability == "attracting"

    def contains(self, x: float, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.x_lo + tol < x < self.x_hi - tol

    def endpoint_at(self, x: float) -> TangencyPoint:
        a, b = self.endpoints
        return a if abs(a.location.x - x) <= abs(b.location.x - x) else b


@dataclass(frozen=True)
class PseudoEquilibrium:
    label: str  # "+" or "-"
    location: State
    admissible: bool
    sliding_stability: str  # "stable" | "unstable"
    kind: str  # "node" | "saddle"
    sliding_slope: float


def on_sigma(x: float, p: ModelParams) -> State:
    return State(x, x + p.eta)


def lie1(i: int, x: float, p: ModelParams) -> float:
    """(f_i . n) on the switching line at abscissa x."""
    return x - 1.0 + p.mu - p.eta * p.kappa(i)


def lie2(i: int, s, p: ModelParams) -> float:
    """Second Lie derivative f_i . grad(f_i . n) at an arbitrary point."""
    k = p.kappa(i)
    x, y = s
    return (1.0 + k) * (1.0 - (1.0 + k) * x) - k * p.mu + k * k * y


def tangency_value(i: int, p: ModelParams) -> float:
    """Second Lie derivative evaluated at F_i in closed form."""
    k = p.kappa(i)
    return p.mu + (p.mu - p.eta - 1.0) * k - p.eta * k * k


def _tangency(i: int, p: ModelParams, tol: float) -> TangencyPoint:
    k = p.kappa(i)
    x = 1.0 - p.mu + p.eta * k
    loc = State(x, 1.0 - p.mu + (1.0 + k) * p.eta)
    v = tangency_value(i, p)
    if abs(v) < tol:
        vis = Visibility.DEGENERATE
    elif (v < 0) == (i == 1):
        # F1 lives in R1 (g < 0): visible when the orbit bends back down
        vis = Visibility.VISIBLE
    else:
        vis = Visibility.INVISIBLE
    return TangencyPoint(loc, i, vis, v)


def tangency_points(p: ModelParams, tol: float = DEGENERACY_TOL) -> tuple[TangencyPoint, TangencyPoint]:
    return _tangency(1, p, tol), _tangency(2, p, tol)


def sliding_segment(p: ModelParams) -> SlidingSegment | None:
    if p.eta == 0:
        return None
    f1, f2 = tangency_points(p)
    if p.eta > 0:
        return SlidingSegment(f1.location.x, f2.location.x, "attracting", (f1, f2))
    return SlidingSegment(f2.location.x, f1.location.x, "repelling", (f2, f1))


def effective_mixing(x: float, p: ModelParams) -> float:
    """Mixing rate of the convex combination that is tangent to the switching line."""
    if p.eta == 0:
        raise DomainError("sliding dynamics undefined for eta = 0")
    return (x + p.mu - 1.0) / p.eta


def convex_coefficient(x: float, p: ModelParams, tol: float = 1e-12) -> float:
    lam = (effective_mixing(x, p) - p.kappa1) / p.dkappa
    if lam < -tol or lam > 1.0 + tol:
        raise DomainError(f"x = {x!r} is outside the sliding segment (lambda = {lam!r})")
    return min(max(lam, 0.0), 1.0)


def sliding_combination(x: float, p: ModelParams):
    """Both Cartesian components of (1 - lam) f1 + lam f2 on the line; lam unclamped."""
    lam = (effective_mixing(x, p) - p.kappa1) / p.dkappa
    s = on_sigma(x, p)
    return (1.0 - lam) * vector_field_region(1, s, p) + lam * vector_field_region(2, s, p)


def sliding_field(x: float, p: ModelParams) -> float:
    """Common component of the sliding velocity along (1, 1)."""
    if p.eta == 0:
        raise DomainError("sliding dynamics undefined for eta = 0")
    return (p.eta + (1.0 - p.mu - p.eta) * x - x * x) / p.eta


def sliding_field_slope(x: float, p: ModelParams) -> float:
    return (1.0 - p.mu - p.eta - 2.0 * x) / p.eta


def pseudo_discriminant(p: ModelParams) -> float:
    return (p.eta + p.mu + 1.0) ** 2 - 4.0 * p.mu


def pseudo_equilibria(p: ModelParams) -> list[PseudoEquilibrium]:
    """Both zeros of the sliding field (empty when they are complex)."""
    if p.eta == 0:
        raise DomainError("pseudo-equilibria undefined for eta = 0")
    disc = pseudo_discriminant(p)
    if disc < 0:
        return []
    seg = sliding_segment(p)
    r = math.sqrt(disc)
    c = 1.0 - p.mu - p.eta
    out = []
    for label, x in (("-", 0.5 * (c - r)), ("+", 0.5 * (c + r))):
        slope = sliding_field_slope(x, p)
        stable = slope < 0
        # normally attracting + sliding-stable, or normally repelling + sliding-unstable: node
        node = stable == seg.attracting
        out.append(
            PseudoEquilibrium(
                label=label,
                location=on_sigma(x, p),
                admissible=seg.contains(x),
                sliding_stability="stable" if stable else "unstable",
                kind="node" if node else "saddle",
                sliding_slope=slope,
            )
        )
    return out


def classify_sigma_point(x: float, p: ModelParams, tol: float = 1e-12) -> SigmaKind:
    l1 = lie1(1, x, p)
    l2 = lie1(2, x, p)
    if abs(l1) <= tol:
        return SigmaKind.TANGENCY_1
    if abs(l2) <= tol:
        return SigmaKind.TANGENCY_2
    return SigmaKind.CROSSING if l1 * l2 > 0 else SigmaKind.SLIDING
