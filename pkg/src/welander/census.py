"""Empirical attractor census over a grid of initial conditions."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .flow import IntegrationConfig, integrate_pws, integrate_smooth
from .model import ModelParams, State, region_equilibrium, vector_field_region, vector_field_smooth

CLUSTER_TOL = 1e-5
CYCLE_AMPLITUDE = 1e-4


@dataclass
class Outcome:
    kind: str  # equilibrium | cycle | unknown
    state: State
    amplitude: float = 0.0
    detail: str = ""


@dataclass
class Cluster:
    kind: str
    state: State
    count: int
    members: list[int] = field(default_factory=list)


@dataclass
class Census:
    params: ModelParams
    outcomes: list[Outcome]
    equilibria: list[Cluster]
    cycles: list[Cluster]
    unknown: list[int]
    newton_equilibria: list = field(default_factory=list)  # EquilibriumRecord list for epsilon > 0

    @property
    def periodic_orbit(self) -> bool:
        return bool(self.cycles)

    @property
    def n_stable_equilibria(self) -> int:
        return len(self.equilibria)

    def summary(self) -> dict:
        return {
            "equilibria": [{"x": c.state.x, "y": c.state.y, "basin_count": c.count} for c in self.equilibria],
            "periodic_orbit": self.periodic_orbit,
            "cycle_count": sum(c.count for c in self.cycles),
            "unknown": list(self.unknown),
            "newton_equilibria": [{"x": r.state.x, "y": r.state.y, "type": r.type} for r in self.newton_equilibria],
        }


def default_ic_grid(p: ModelParams, n: int = 6) -> list[State]:
    ys = [p.mu / p.kappa1, p.mu / p.kappa2, p.eta, 0.0]
    xs = np.linspace(-0.5, 2.0, n)
    yy = np.linspace(min(ys) - 1.0, max(ys) + 1.0, n)
    return [State(float(x), float(y)) for x in xs for y in yy]


def _speed(s, p: ModelParams) -> float:
    if p.epsilon > 0:
        return float(np.max(np.abs(vector_field_smooth(s, p))))
    g = s[1] - s[0] - p.eta
    if g == 0:
        return np.inf
    return float(np.max(np.abs(vector_field_region(2 if g > 0 else 1, s, p))))


def classify_orbit(s0, p: ModelParams, cfg: IntegrationConfig) -> Outcome:
    """Integrate to t_max and decide between equilibrium, cycle and unknown."""
    try:
        if p.epsilon == 0:
            traj = integrate_pws(s0, p, cfg, box=1e3)
        else:
            traj = integrate_smooth(s0, p, cfg)
    except NumericalError as exc:
        return Outcome("unknown", State(float(s0[0]), float(s0[1])), detail=f"{type(exc).__name__}: {exc}")
    end = traj.final_state
    if traj.status == "converged":
        if p.epsilon == 0 and p.eta == 0:
            return Outcome("equilibrium", State(1.0 - p.mu, 1.0 - p.mu), detail="fold-fold point")
        return Outcome("equilibrium", end, detail="pseudo-equilibrium")
    if traj.status == "left-box":
        return Outcome("unknown", end, detail="left bounding box")
    t = traj.t
    late = t >= 0.5 * cfg.t_max
    y = traj.states[late, 1]
    amp = float(y.max() - y.min()) if y.size else 0.0
    if amp > CYCLE_AMPLITUDE:
        # non-decaying: the last quarter must oscillate as much as the third one
        q3 = (t >= 0.5 * cfg.t_max) & (t < 0.75 * cfg.t_max)
        q4 = t >= 0.75 * cfg.t_max
        a3 = np.ptp(traj.states[q3, 1]) if q3.any() else 0.0
        a4 = np.ptp(traj.states[q4, 1]) if q4.any() else 0.0
        if a4 > 0.5 * a3:
            return Outcome("cycle", end, amp)
        return Outcome("unknown", end, amp, "slowly decaying oscillation")
    if p.epsilon == 0:
        # regular equilibria are reached exponentially; snap to the analytic location
        for i in (1, 2):
            e = region_equilibrium(i, p)
            if max(abs(e.x - end.x), abs(e.y - end.y)) < CLUSTER_TOL:
                return Outcome("equilibrium", e, amp)
    if _speed(end, p) < 1e-8:
        return Outcome("equilibrium", end, amp)
    return Outcome("unknown", end, amp, "no convergence within t_max")


def _worker(args):
    s0, p, cfg = args
    return classify_orbit(s0, p, cfg)


def _cluster(outcomes: list[Outcome], kind: str, tol: float) -> list[Cluster]:
    clusters: list[Cluster] = []
    for i, o in enumerate(outcomes):
        if o.kind != kind:
            continue
        for c in clusters:
            if kind == "cycle" or max(abs(c.state.x - o.state.x), abs(c.state.y - o.state.y)) < tol:
                c.count += 1
                c.members.append(i)
                break
        else:
            clusters.append(Cluster(kind, o.state, 1, [i]))
    return clusters


def attractor_census(p: ModelParams, cfg: IntegrationConfig | None = None, ic_grid=None,
                     workers: int = 1) -> Census:
    """Attractors reached from a grid of initial conditions; results ordered by grid index."""
    cfg = cfg or IntegrationConfig(max_step=1.0, t_max=500.0)
    ics = list(ic_grid) if ic_grid is not None else default_ic_grid(p)
    if not ics:
        raise ValueError("ic_grid must be nonempty")
    jobs = [(s, p, cfg) for s in ics]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            outcomes = list(ex.map(_worker, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        outcomes = [_worker(j) for j in jobs]
    census = Census(
        params=p,
        outcomes=outcomes,
        equilibria=_cluster(outcomes, "equilibrium", CLUSTER_TOL),
        cycles=_cluster(outcomes, "cycle", CLUSTER_TOL),
        unknown=[i for i, o in enumerate(outcomes) if o.kind == "unknown"],
    )
    if p.epsilon > 0:
        from .continuation import equilibria_all

        census.newton_equilibria = equilibria_all(p)
    return census


def smooth_region_label(c: Census) -> str:
    """Empirical label of the smooth-model regions A-D."""
    n_eq = len(c.newton_equilibria)
    n_stable = c.n_stable_equilibria
    if c.unknown:
        return "unknown"
    if c.periodic_orbit and n_stable == 0:
        return "B"
    if n_stable == 2:
        return "D"
    if n_stable == 1 and n_eq == 1 and not c.periodic_orbit:
        return "A"
    if n_stable == 1 and n_eq == 3:
        return "C"
    return "other"


__all__ = ["Outcome", "Cluster", "Census", "attractor_census", "classify_orbit", "default_ic_grid", "smooth_region_label"]
