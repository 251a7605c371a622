"""Closed-form bifurcation atlas of the Filippov limit in the (mu, eta)-plane."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .filippov import pseudo_equilibria
from .model import ModelParams

BOUNDARY_TOL = 1e-9

DEFAULT_MU_RANGE = (-0.2, 1.0)
DEFAULT_ETA_RANGE = (-1.2, 0.6)


class Region(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"
    VI = "VI"
    VII = "VII"
    VIII = "VIII"


# attractors in each open region; "Gamma" is the crossing periodic orbit
REGION_ATTRACTORS = {
    Region.I: ("p1",),
    Region.II: ("q+",),
    Region.III: ("p2",),
    Region.IV: ("p1",),
    Region.V: ("Gamma",),
    Region.VI: ("p2",),
    Region.VII: ("p2",),
    Region.VIII: ("p1", "p2"),
}

REGION_SHADING = {Region.V: "periodic", Region.VIII: "bistable"}


@dataclass(frozen=True)
class Boundary:
    """Returned instead of a region when the query sits on a bifurcation curve."""

    curves: tuple[str, ...]
    segments: tuple[str, ...]

    def __str__(self) -> str:
        return "boundary:" + ",".join(self.segments)


@dataclass(frozen=True)
class Codim2Point:
    kind: str
    mu: float
    eta: float


@dataclass
class BifCurve:
    label: str
    sublabels: list[tuple[str, np.ndarray]] = field(default_factory=list)


@dataclass
class PWSDiagram:
    curves: list[BifCurve]
    points: list[Codim2Point]
    regions: list[tuple[Region, str | None]]
    mu_range: tuple[float, float]
    eta_range: tuple[float, float]

    def to_json_dict(self) -> dict:
        return {
            "curves": [
                {
                    "label": c.label,
                    "sublabels": [{"name": n, "mu_eta_polyline": poly.tolist()} for n, poly in c.sublabels],
                }
                for c in self.curves
            ],
            "points": [{"kind": q.kind, "mu": q.mu, "eta": q.eta} for q in self.points],
            "regions": [{"id": r.value, "shading": s} for r, s in self.regions],
        }

    def rows(self):
        for c in self.curves:
            for name, poly in c.sublabels:
                for mu, eta in poly:
                    yield mu, eta, c.label, name


def be_curve(i: int, mu: float, p: ModelParams) -> float:
    k = p.kappa(i)
    return mu / k - 1.0 / (1.0 + k)


def ps_interval(p: ModelParams) -> tuple[float, float]:
    k1, k2 = p.kappa1, p.kappa2
    return k1**2 / (1 + k1) ** 2, k2**2 / (1 + k2) ** 2


def ps_formula(mu: float) -> float:
    return -(mu + 1.0) + 2.0 * math.sqrt(mu)


def ps_curve(mu: float, p: ModelParams) -> float | None:
    if mu < 0:
        raise DomainError("the pseudo-saddle-node curve needs mu >= 0")
    lo, hi = ps_interval(p)
    if lo < mu < hi:
        return ps_formula(mu)
    return None


def codim2_points(p: ModelParams) -> list[Codim2Point]:
    k1, k2 = p.kappa1, p.kappa2
    return [
        Codim2Point("FB1", k1 / (1 + k1), 0.0),
        Codim2Point("FB2", k2 / (1 + k2), 0.0),
        Codim2Point("BB", k1 * k2 / ((k1 + 1) * (k2 + 1)), -1.0 / ((k1 + 1) * (k2 + 1))),
        Codim2Point("GB1", k1**2 / (k1 + 1) ** 2, -1.0 / (k1 + 1) ** 2),
        Codim2Point("GB2", k2**2 / (k2 + 1) ** 2, -1.0 / (k2 + 1) ** 2),
    ]


def _points(p: ModelParams) -> dict[str, Codim2Point]:
    return {q.kind: q for q in codim2_points(p)}


def curve_distances(mu: float, eta: float, p: ModelParams) -> dict[str, float]:
    """Euclidean distance from (mu, eta) to each codimension-one curve."""
    out = {}
    for i in (1, 2):
        k = p.kappa(i)
        out[f"BE{i}"] = abs(eta - be_curve(i, mu, p)) / math.hypot(1.0, 1.0 / k)
    out["FF"] = abs(eta)
    lo, hi = ps_interval(p)
    # PS is concave and monotone on its interval; distance via a clamped local search
    if mu >= 0:
        m = min(max(mu, lo), hi)
        ms = np.clip(m + np.linspace(-0.05, 0.05, 201), lo, hi)
        d = np.hypot(ms - mu, -(ms + 1) + 2 * np.sqrt(ms) - eta).min()
        if lo < mu < hi:
            d = min(d, abs(eta - ps_formula(mu)))
        out["PS"] = float(d)
    else:
        out["PS"] = math.hypot(mu - lo, eta - ps_formula(lo))
    return out


def classify_region(mu: float, eta: float, p: ModelParams, tol: float = BOUNDARY_TOL) -> Region | Boundary:
    """Region I..VIII from closed-form admissibility, or a Boundary within ``tol`` of a curve."""
    q = p.with_(mu=mu, eta=eta, epsilon=0.0)
    near = [c for c, d in curve_distances(mu, eta, q).items() if d < tol]
    if near:
        segs = []
        for c in near:
            try:
                segs.append(segment_label(c, mu, eta, q, tol=max(tol, 1e-9) * 20))
            except DomainError:
                segs.append(c)
        return Boundary(tuple(near), tuple(segs))

    p1_adm = eta > be_curve(1, mu, q)
    p2_adm = eta < be_curve(2, mu, q)
    if eta > 0:
        if p1_adm:
            return Region.I
        if p2_adm:
            return Region.III
        return Region.II
    if p1_adm and p2_adm:
        return Region.VIII
    if p1_adm:
        return Region.IV
    if not p2_adm:
        return Region.V
    n_adm = sum(pe.admissible for pe in pseudo_equilibria(q))
    return Region.VII if n_adm == 2 else Region.VI


def segment_label(curve: str, mu: float, eta: float, p: ModelParams, tol: float = BOUNDARY_TOL) -> str:
    """Sub-segment of a codimension-one curve, split at the codimension-two points."""
    pts = _points(p)
    if curve == "FF":
        if abs(eta) > tol:
            raise DomainError(f"({mu}, {eta}) is not on FF")
        if mu < pts["FB1"].mu:
            return "FF1"
        if mu < pts["FB2"].mu:
            return "FU"
        return "FF2"
    if curve == "BE1":
        if abs(eta - be_curve(1, mu, p)) > tol:
            raise DomainError(f"({mu}, {eta}) is not on BE1")
        if mu > pts["FB1"].mu:
            return "BE1^P"
        if mu > pts["BB"].mu:
            return "^BE1^P"
        if mu > pts["GB1"].mu:
            return "~BE1^P"
        return "BE1^F"
    if curve == "BE2":
        if abs(eta - be_curve(2, mu, p)) > tol:
            raise DomainError(f"({mu}, {eta}) is not on BE2")
        if mu > pts["FB2"].mu:
            return "BE2^P"
        if mu > pts["GB2"].mu:
            return "^BE2^P"
        if mu > pts["BB"].mu:
            return "^BE2^F"
        return "BE2^F"
    if curve == "PS":
        lo, hi = ps_interval(p)
        if not (lo - tol <= mu <= hi + tol) or abs(eta - ps_formula(max(mu, 0.0))) > tol:
            raise DomainError(f"({mu}, {eta}) is not on PS")
        return "PS"
    raise DomainError(f"unknown curve {curve!r}")


def _be_segments(i: int, p: ModelParams) -> list[tuple[str, float, float]]:
    pts = _points(p)
    if i == 1:
        cuts = [("BE1^F", -math.inf, pts["GB1"].mu), ("~BE1^P", pts["GB1"].mu, pts["BB"].mu),
                ("^BE1^P", pts["BB"].mu, pts["FB1"].mu), ("BE1^P", pts["FB1"].mu, math.inf)]
    else:
        cuts = [("BE2^F", -math.inf, pts["BB"].mu), ("^BE2^F", pts["BB"].mu, pts["GB2"].mu),
                ("^BE2^P", pts["GB2"].mu, pts["FB2"].mu), ("BE2^P", pts["FB2"].mu, math.inf)]
    return cuts


def _sample(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, max(n, 2))


def pws_diagram(
    p: ModelParams,
    mu_range: tuple[float, float] = DEFAULT_MU_RANGE,
    eta_range: tuple[float, float] = DEFAULT_ETA_RANGE,
    n_samples: int = 200,
) -> PWSDiagram:
    if n_samples < 1:
        raise DomainError("n_samples must be positive")
    mu_lo, mu_hi = mu_range
    eta_lo, eta_hi = eta_range
    curves = []

    for i in (1, 2):
        k = p.kappa(i)
        c = 1.0 / (1.0 + k)
        # mu-range where BE_i stays inside the eta window
        m_lo = max(mu_lo, (eta_lo + c) * k)
        m_hi = min(mu_hi, (eta_hi + c) * k)
        curve = BifCurve(f"BE{i}")
        for name, a, b in _be_segments(i, p):
            a, b = max(a, m_lo), min(b, m_hi)
            if a < b:
                mus = _sample(a, b, n_samples)
                curve.sublabels.append((name, np.column_stack([mus, mus / k - c])))
        curves.append(curve)

    pts = _points(p)
    ff = BifCurve("FF")
    if eta_lo <= 0 <= eta_hi:
        for name, a, b in (("FF1", -math.inf, pts["FB1"].mu), ("FU", pts["FB1"].mu, pts["FB2"].mu),
                           ("FF2", pts["FB2"].mu, math.inf)):
            a, b = max(a, mu_lo), min(b, mu_hi)
            if a < b:
                mus = _sample(a, b, n_samples)
                ff.sublabels.append((name, np.column_stack([mus, np.zeros_like(mus)])))
    curves.append(ff)

    ps = BifCurve("PS")
    lo, hi = ps_interval(p)
    a, b = max(lo, mu_lo, 0.0), min(hi, mu_hi)
    if a < b:
        mus = _sample(a, b, n_samples)
        etas = -(mus + 1.0) + 2.0 * np.sqrt(mus)
        keep = (etas >= eta_lo) & (etas <= eta_hi)
        if keep.any():
            ps.sublabels.append(("PS", np.column_stack([mus[keep], etas[keep]])))
    curves.append(ps)

    points = [q for q in codim2_points(p) if mu_lo <= q.mu <= mu_hi and eta_lo <= q.eta <= eta_hi]
    regions = [(r, REGION_SHADING.get(r)) for r in Region]
    return PWSDiagram(curves, points, regions, tuple(mu_range), tuple(eta_range))


def region_report(mu: float, eta: float, p: ModelParams) -> dict:
    """Everything the classifier knows about one parameter point, as plain data."""
    from .filippov import sliding_segment, tangency_points
    from .model import region_equilibrium

    q = p.with_(mu=mu, eta=eta, epsilon=0.0)
    reg = classify_region(mu, eta, q)
    eqs = []
    for i in (1, 2):
        s = region_equilibrium(i, q)
        adm = (eta > be_curve(1, mu, q)) if i == 1 else (eta < be_curve(2, mu, q))
        eqs.append({"name": f"p{i}", "x": s.x, "y": s.y, "admissible": bool(adm), "type": "stable node"})
    seg = sliding_segment(q)
    tps = tangency_points(q)
    out = {
        "mu": mu,
        "eta": eta,
        "kappa1": q.kappa1,
        "kappa2": q.kappa2,
        "region": reg.value if isinstance(reg, Region) else None,
        "boundary": list(reg.segments) if isinstance(reg, Boundary) else None,
        "equilibria": eqs,
        "tangency_points": [
            {"name": f"F{t.field_index}", "x": t.location.x, "y": t.location.y, "visibility": t.visibility.value}
            for t in tps
        ],
        "sliding_segment": None,
        "pseudo_equilibria": [],
        "attractors": list(REGION_ATTRACTORS[reg]) if isinstance(reg, Region) else None,
    }
    if seg is not None:
        out["sliding_segment"] = {"x_lo": seg.x_lo, "x_hi": seg.x_hi, "stability": seg.stability}
        for pe in pseudo_equilibria(q):
            out["pseudo_equilibria"].append(
                {
                    "name": f"q{pe.label}",
                    "x": pe.location.x,
                    "y": pe.location.y,
                    "admissible": pe.admissible,
                    "sliding_stability": pe.sliding_stability,
                    "kind": pe.kind,
                }
            )
    return out
