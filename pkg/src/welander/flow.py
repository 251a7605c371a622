"""Trajectory integration for the smooth model and the Filippov limit.

For epsilon = 0 the orbit is built segment by segment. Inside R1/R2 the fields are
linear with diagonal Jacobian, so arcs are evaluated in closed form and the
switching function along an arc is a sum of two exponentials: its zeros are
bracketed exactly around its single critical point and refined with brentq.
Sliding arcs on the switching line integrate the scalar sliding field.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    ChatterError,
    EscapeError,
    GeometryError,
    InvalidParameterError,
    ManifoldTypeError,
    StiffnessError,
)
from .filippov import (
    PseudoEquilibrium,
    lie1,
    pseudo_equilibria,
    sliding_field,
    sliding_segment,
)
from .model import (
    ModelParams,
    State,
    jacobian_smooth,
    vector_field_region,
)

MAX_EVENTS = 1_000_000
# at eta = 0 orbits spiral into the fold-fold point with algebraically shrinking loops
FOLD_FOLD_TOL = 1e-4


class Regime(str, enum.Enum):
    R1 = "R1"
    R2 = "R2"
    SLIDING = "SLIDE"
    SMOOTH = "SMOOTH"


@dataclass(frozen=True)
class IntegrationConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    event_tol: float = 1e-10
    max_step: float = 0.1
    t_max: float = 500.0

    def __post_init__(self) -> None:
        for name in ("rel_tol", "abs_tol", "event_tol", "max_step", "t_max"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")

    def halved(self) -> IntegrationConfig:
        return IntegrationConfig(self.rel_tol / 2, self.abs_tol / 2, self.event_tol / 2, self.max_step, self.t_max)


@dataclass
class Segment:
    regime: Regime
    t: np.ndarray
    z: np.ndarray  # (n, 2)

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])


@dataclass(frozen=True)
class Event:
    t: float
    state: State
    kind: str  # cross | slide | depart | graze | converged
    regime: Regime  # regime entered after the event
    direction: int = 0  # +1 for R1 -> R2 crossings, -1 for R2 -> R1


@dataclass
class Trajectory:
    segments: list[Segment] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    status: str = "completed"  # completed | converged | stopped | left-box

    @property
    def t(self) -> np.ndarray:
        return np.concatenate([s.t for s in self.segments])

    @property
    def states(self) -> np.ndarray:
        return np.vstack([s.z for s in self.segments])

    @property
    def regimes(self) -> list[Regime]:
        return [s.regime for s in self.segments for _ in range(len(s.t))]

    @property
    def final_state(self) -> State:
        z = self.segments[-1].z[-1]
        return State(float(z[0]), float(z[1]))

    @property
    def t_final(self) -> float:
        return self.segments[-1].t_end

    def rows(self):
        for s in self.segments:
            for t, (x, y) in zip(s.t, s.z):
                yield float(t), float(x), float(y), s.regime.value


# ---------------------------------------------------------------- smooth model


def _smooth_rhs(p: ModelParams):
    k1, dk, mu, eta, eps = p.kappa1, p.dkappa, p.mu, p.eta, p.epsilon
    tanh = math.tanh

    def rhs(t, z):
        x, y = z
        k = k1 + 0.5 * (1.0 + tanh((y - x - eta) / eps)) * dk
        return [1.0 - (1.0 + k) * x, mu - k * y]

    return rhs


def _smooth_jac(p: ModelParams):
    def jac(t, z):
        return jacobian_smooth(z, p)

    return jac


def integrate_smooth(s0, p: ModelParams, cfg: IntegrationConfig | None = None, t_end: float | None = None,
                     events=None) -> Trajectory:
    """Adaptive embedded Runge-Kutta (DOP853). Negative ``t_end`` integrates backwards."""
    if not p.epsilon > 0:
        raise InvalidParameterError("integrate_smooth needs epsilon > 0")
    cfg = cfg or IntegrationConfig()
    t_end = cfg.t_max if t_end is None else t_end
    sol = solve_ivp(
        _smooth_rhs(p),
        (0.0, t_end),
        [float(s0[0]), float(s0[1])],
        method="DOP853",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        events=events,
    )
    if sol.status == -1:
        raise StiffnessError(f"step size underflow: {sol.message}", State(*sol.y[:, -1]), float(sol.t[-1]))
    traj = Trajectory([Segment(Regime.SMOOTH, sol.t, sol.y.T.copy())])
    if sol.status == 1:
        traj.status = "stopped"
    traj.sol = sol
    return traj


# ------------------------------------------------------------ Filippov limit


def _linear_arc(i: int, z0, p: ModelParams, d: int):
    """Closed-form arc of d*f_i from z0 and the switching function along it."""
    k = p.kappa(i)
    xs, ys = 1.0 / (1.0 + k), p.mu / k
    a, b = (1.0 + k) * d, k * d
    cx, cy = z0[0] - xs, z0[1] - ys

    def state(tau):
        return xs + cx * np.exp(-a * tau), ys + cy * np.exp(-b * tau)

    c0 = ys - xs - p.eta

    def g(tau):
        return c0 - cx * math.exp(-a * tau) + cy * math.exp(-b * tau)

    g.scale = 16 * np.finfo(float).eps * (abs(c0) + abs(cx) + abs(cy))
    # g'(tau) = a*cx*e^{-a tau} - b*cy*e^{-b tau} vanishes at most once
    tc = None
    if cx != 0 and cy != 0:
        r = b * cy / (a * cx)
        if r > 0:
            tc = -math.log(r) / (a - b)
    return state, g, tc


def _first_exit(g, sgn: int, horizon: float, tc: float | None) -> float | None:
    """First tau in (0, horizon] where sgn*g reaches zero; g is monotone between knots.

    ``sgn*g(0)`` is positive, or zero up to rounding when the arc starts on the line
    and moves into its region.
    """
    knots = [0.0]
    if tc is not None and 0.0 < tc < horizon:
        knots.append(tc)
    knots.append(horizon)
    for lo, hi in zip(knots[:-1], knots[1:]):
        if sgn * g(hi) > 0:
            continue
        if lo == 0.0 and hi == tc and abs(g(0.0)) <= g.scale and abs(g(hi)) <= g.scale:
            # leaving a tangency point: the critical point is the start itself, up to rounding
            continue
        if sgn * g(lo) > 0:
            return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        # on the line and moving out of the region (or touching it at the critical point)
        return lo
    return None


class _PWSIntegrator:
    def __init__(self, p: ModelParams, cfg: IntegrationConfig, direction: int = 1,
                 stop: Callable[[Event], bool] | None = None, box: float | None = None):
        if p.epsilon != 0:
            raise InvalidParameterError("the Filippov integrator needs epsilon = 0")
        self.p = p
        self.cfg = cfg
        self.d = direction
        self.stop = stop
        self.box = box
        self.seg = sliding_segment(p)
        self.traj = Trajectory()
        self.n_events = 0

    # effective Lie derivatives of the (possibly time-reversed) fields
    def elie(self, i: int, x: float) -> float:
        return self.d * lie1(i, x, self.p)

    def g(self, z) -> float:
        return z[1] - z[0] - self.p.eta

    def _event(self, t, z, kind, regime, direction=0) -> bool:
        ev = Event(t, State(float(z[0]), float(z[1])), kind, regime, direction)
        self.traj.events.append(ev)
        self.n_events += 1
        if self.n_events > MAX_EVENTS:
            raise ChatterError(f"more than {MAX_EVENTS} switching events")
        return bool(self.stop and self.stop(ev))

    def _sample_times(self, tau: float) -> np.ndarray:
        n = max(2, int(math.ceil(tau / self.cfg.max_step)) + 1)
        return np.linspace(0.0, tau, n)

    def _departure_regime(self, x: float, tangent: int) -> Regime:
        other = 2 if tangent == 1 else 1
        e = self.elie(other, x)
        if abs(e) <= 1e-14:
            raise GeometryError(f"departure direction undefined at degenerate tangency x = {x!r}")
        return Regime.R2 if e > 0 else Regime.R1

    def _regime_on_sigma(self, x: float) -> Regime:
        """Where an orbit starting on the switching line goes next."""
        e1, e2 = self.elie(1, x), self.elie(2, x)
        tol = 1e-12
        if abs(e1) <= tol and abs(e2) <= tol:
            raise GeometryError(f"both fields tangent at x = {x!r}")
        if abs(e1) <= tol:
            return self._departure_regime(x, 1)
        if abs(e2) <= tol:
            return self._departure_regime(x, 2)
        if e1 > 0 and e2 > 0:
            return Regime.R2
        if e1 < 0 and e2 < 0:
            return Regime.R1
        return Regime.SLIDING

    def run(self, s0, t_end: float) -> Trajectory:
        z = np.array([float(s0[0]), float(s0[1])])
        t = 0.0
        gz = self.g(z)
        if abs(gz) <= self.cfg.event_tol:
            z[1] = z[0] + self.p.eta
            regime = self._regime_on_sigma(z[0])
        else:
            regime = Regime.R2 if gz > 0 else Regime.R1
        zero_len = 0
        while t < t_end:
            if regime is Regime.SLIDING:
                t, z, regime, done = self._slide(t, z, t_end)
            else:
                t_before = t
                t, z, regime, done = self._region_arc(t, z, regime, t_end)
                # arcs shorter than the event tolerance make no resolvable progress
                zero_len = zero_len + 1 if t - t_before <= self.cfg.event_tol else 0
                if zero_len > 2:
                    raise GeometryError(f"orbit cannot leave the switching line at x = {z[0]!r}")
            if done:
                break
        return self.traj

    def _outside_box(self, zs: np.ndarray) -> int | None:
        if self.box is None:
            return None
        out = np.nonzero(np.abs(zs).max(axis=1) > self.box)[0]
        return int(out[0]) if out.size else None

    def _region_arc(self, t, z, regime, t_end):
        i = 1 if regime is Regime.R1 else 2
        sgn = -1 if i == 1 else 1
        state, g, tc = _linear_arc(i, z, self.p, self.d)
        horizon = t_end - t
        tau = _first_exit(g, sgn, horizon, tc)
        hit = tau is not None
        if not hit:
            tau = horizon
        taus = self._sample_times(tau)
        xs, ys = state(taus)
        zs = np.column_stack([xs, ys])
        k = self._outside_box(zs)
        if k is not None:
            zs = zs[: k + 1]
            taus = taus[: k + 1]
            self.traj.segments.append(Segment(regime, t + taus, zs))
            self.traj.status = "left-box"
            return t + taus[-1], zs[-1], regime, True
        if hit:
            zs[-1, 1] = zs[-1, 0] + self.p.eta
        self.traj.segments.append(Segment(regime, t + taus, zs))
        t_new = t + tau
        z_new = zs[-1].copy()
        if not hit:
            return t_new, z_new, regime, True
        x = z_new[0]
        e1, e2 = self.elie(1, x), self.elie(2, x)
        ei = e1 if i == 1 else e2
        ej = e2 if i == 1 else e1
        tol = 1e-12
        if abs(ei) <= tol:
            # graze of the current field: stay on the same side
            stop = self._event(t_new, z_new, "graze", regime)
            return t_new, z_new, regime, stop
        if abs(ej) <= tol:
            new = Regime.R2 if i == 1 else Regime.R1
            stop = self._event(t_new, z_new, "cross", new, 1 if new is Regime.R2 else -1)
            return t_new, z_new, new, stop
        if e1 > 0 and e2 > 0:
            new = Regime.R2
        elif e1 < 0 and e2 < 0:
            new = Regime.R1
        elif e1 > 0 > e2:
            stop = self._event(t_new, z_new, "slide", Regime.SLIDING)
            return t_new, z_new, Regime.SLIDING, stop
        else:
            raise GeometryError(f"orbit reached a repelling part of the switching line at x = {x!r}")
        if new is regime:
            # the field already points back into its own region: a graze lost in rounding
            stop = self._event(t_new, z_new, "graze", regime)
            return t_new, z_new, regime, stop
        stop = self._event(t_new, z_new, "cross", new, 1 if new is Regime.R2 else -1)
        if self.p.eta == 0 and abs(x - (1.0 - self.p.mu)) < FOLD_FOLD_TOL:
            self._event(t_new, z_new, "converged", new)
            self.traj.status = "converged"
            return t_new, z_new, new, True
        return t_new, z_new, new, stop

    def _slide(self, t, z, t_end):
        p, seg = self.p, self.seg
        if seg is None:
            raise GeometryError("no sliding segment at eta = 0")
        if seg.x_hi - seg.x_lo <= self.cfg.event_tol:
            raise GeometryError(f"sliding segment of width {seg.x_hi - seg.x_lo!r} is below the event tolerance")
        x0 = float(z[0])
        v0 = self.d * sliding_field(x0, p)
        # the first zero of the sliding field ahead of x0 (if inside the segment) is never reached
        target = None
        if abs(v0) <= 1e-15:
            target = x0
        else:
            ahead = [pe for pe in pseudo_equilibria(p) if (pe.location.x - x0) * v0 > 0]
            ahead.sort(key=lambda pe: abs(pe.location.x - x0))
            tol = self.cfg.event_tol
            # a pseudo-equilibrium at an endpoint can fall just outside the segment by rounding
            if ahead and seg.x_lo - tol <= ahead[0].location.x <= seg.x_hi + tol:
                target = min(max(ahead[0].location.x, seg.x_lo), seg.x_hi)
        if target is not None and abs(target - x0) <= self.cfg.event_tol:
            self.traj.segments.append(Segment(Regime.SLIDING, np.array([t, t]), np.array([z, z])))
            self._event(t, z, "converged", Regime.SLIDING)
            self.traj.status = "converged"
            return t, z, Regime.SLIDING, True

        end_x = seg.x_hi if v0 > 0 else seg.x_lo
        d = self.d
        eta = p.eta

        def rhs(_, u):
            return [d * sliding_field(u[0], p)]

        events = []
        if target is None:
            def reach_end(_, u):
                return u[0] - end_x
            reach_end.terminal = True
            events.append(reach_end)
        else:
            tol = self.cfg.event_tol

            def converge(_, u):
                return abs(u[0] - target) - tol
            converge.terminal = True
            events.append(converge)
        sol = solve_ivp(rhs, (t, t_end), [x0], method="DOP853", rtol=self.cfg.rel_tol, atol=self.cfg.abs_tol,
                        max_step=self.cfg.max_step, events=events)
        xs = sol.y[0]
        ts = sol.t
        zs = np.column_stack([xs, xs + eta])
        if sol.status == 1:
            t_ev = float(sol.t_events[0][0])
            x_ev = float(sol.y_events[0][0][0]) if target is not None else end_x
            ts = np.append(ts[ts < t_ev], t_ev)
            zs = np.vstack([zs[: len(ts) - 1], [x_ev, x_ev + eta]])
        self.traj.segments.append(Segment(Regime.SLIDING, ts, zs))
        t_new, z_new = float(ts[-1]), zs[-1].copy()
        if sol.status != 1:
            return t_new, z_new, Regime.SLIDING, True
        if target is not None:
            self._event(t_new, z_new, "converged", Regime.SLIDING)
            self.traj.status = "converged"
            return t_new, z_new, Regime.SLIDING, True
        tangent = seg.endpoint_at(end_x).field_index
        new = self._departure_regime(end_x, tangent)
        stop = self._event(t_new, z_new, "depart", new)
        return t_new, z_new, new, stop


def integrate_pws(s0, p: ModelParams, cfg: IntegrationConfig | None = None, t_end: float | None = None,
                  stop: Callable[[Event], bool] | None = None, box: float | None = None) -> Trajectory:
    """Event-driven Filippov integration; negative ``t_end`` follows the time-reversed flow."""
    cfg = cfg or IntegrationConfig()
    t_end = cfg.t_max if t_end is None else t_end
    direction = 1 if t_end >= 0 else -1
    integ = _PWSIntegrator(p, cfg, direction, stop, box)
    traj = integ.run(s0, abs(t_end))
    if direction < 0:
        for s in traj.segments:
            s.t = -s.t
    if traj.status == "completed" and traj.events and stop and stop(traj.events[-1]):
        traj.status = "stopped"
    return traj


def integrate(s0, p: ModelParams, cfg: IntegrationConfig | None = None, t_end: float | None = None) -> Trajectory:
    if p.epsilon == 0:
        return integrate_pws(s0, p, cfg, t_end)
    return integrate_smooth(s0, p, cfg, t_end)


# ------------------------------------------------------------ periodic orbits


@dataclass
class PeriodicOrbit:
    representative_state: State
    period: float
    samples: np.ndarray
    stability: str
    multiplier: float  # derivative of the return map at the fixed point


def return_map(x_cross: float, p: ModelParams, cfg: IntegrationConfig | None = None, direction: int = 1) -> float:
    """Next same-direction crossing of the switching line, starting on its crossing part."""
    return _pws_return(x_cross, p, cfg or IntegrationConfig(), direction)[0]


def _pws_return(x_cross, p, cfg, direction=1):
    e1, e2 = lie1(1, x_cross, p), lie1(2, x_cross, p)
    if not (direction * e1 > 0 and direction * e2 > 0):
        raise InvalidParameterError(f"x = {x_cross!r} is not on the crossing part in direction {direction:+d}")

    def stop(ev: Event) -> bool:
        return ev.kind == "cross" and ev.direction == direction

    traj = integrate_pws((x_cross, x_cross + p.eta), p, cfg, cfg.t_max, stop=stop)
    hits = [ev for ev in traj.events if ev.kind == "cross" and ev.direction == direction]
    if not hits:
        raise EscapeError(f"no return to the section within t = {cfg.t_max}")
    return hits[0].state.x, hits[0].t, traj


def _smooth_section(p: ModelParams, eq):
    """Ray y = y_eq, x > x_eq; orientation is the local sense of rotation."""
    J = jacobian_smooth(eq, p)
    # dy/dt just to the right of the equilibrium
    sense = 1 if J[1, 0] > 0 else -1
    return float(eq[0]), float(eq[1]), sense


def _smooth_return(x, p, cfg, section):
    xe, ye, sense = section
    t_skip = 1e-6

    def hit(t, z):
        return (z[1] - ye) if t > t_skip else sense * 1.0
    hit.terminal = True
    hit.direction = sense
    traj = integrate_smooth((x, ye), p, cfg, cfg.t_max, events=[hit])
    sol = traj.sol
    if sol.status != 1 or not len(sol.t_events[0]):
        raise EscapeError(f"no return to the section within t = {cfg.t_max}")
    zr = sol.y_events[0][0]
    if zr[0] < xe:
        raise EscapeError("orbit returned on the wrong side of the focus")
    return float(zr[0]), float(sol.t_events[0][0]), traj


def _scan_fixed_point(R, xs):
    prev = None
    for x in xs:
        try:
            fx = R(x)[0] - x
        except EscapeError:
            prev = None
            continue
        if prev is not None and prev[1] * fx < 0:
            return prev[0], x
        prev = (x, fx)
    return None


def find_periodic_orbit(p: ModelParams, cfg: IntegrationConfig | None = None,
                        bracket: tuple[float, float] | None = None) -> PeriodicOrbit | None:
    """Fixed point of a return map by bracketed root finding; None if no sign change is found."""
    cfg = cfg or IntegrationConfig()
    if p.epsilon == 0:
        if p.eta == 0:
            return None
        x_c = max(1.0 - p.mu + p.eta * p.kappa1, 1.0 - p.mu + p.eta * p.kappa2)

        def R(x):
            return _pws_return(x, p, cfg)

        if bracket is None:
            xs = x_c + np.geomspace(1e-7, 3.0, 60)
        orientation = "crossing"
    else:
        from .continuation import equilibria_all

        eqs = [e for e in equilibria_all(p) if e.type in ("unstable-focus", "stable-focus", "unstable-node")]
        if not eqs:
            return None
        eq = eqs[0].state
        section = _smooth_section(p, eq)

        def R(x):
            return _smooth_return(x, p, cfg, section)

        if bracket is None:
            xs = section[0] + np.geomspace(1e-5, 2.0, 50)
        orientation = "ray"
    if bracket is None:
        bracket = _scan_fixed_point(R, xs)
        if bracket is None:
            return None
    a, b = bracket
    try:
        fa, fb = R(a)[0] - a, R(b)[0] - b
    except EscapeError:
        return None
    if fa * fb > 0:
        return None
    xf = brentq(lambda x: R(x)[0] - x, a, b, xtol=1e-13, rtol=1e-13)
    h = 1e-6 * max(1.0, abs(xf))
    try:
        slope = (R(xf + h)[0] - R(xf - h)[0]) / (2 * h)
    except EscapeError:
        slope = math.nan
    xr, period, traj = R(xf)
    y0 = xf + p.eta if orientation == "crossing" else section[1]
    samples = traj.states
    return PeriodicOrbit(
        representative_state=State(xf, y0),
        period=period,
        samples=samples,
        stability="stable" if abs(slope) < 1 else "unstable",
        multiplier=slope,
    )


# ------------------------------------------------------- invariant manifolds


def manifold_orbit(eq, p: ModelParams, direction: str, side: int = 1, cfg: IntegrationConfig | None = None,
                   t_end: float = 50.0, offset: float = 1e-7, box: float = 5.0) -> Trajectory:
    """One branch of a (strong) stable or unstable manifold as an orbit polyline.

    ``eq`` is a State (regular equilibrium) or a PseudoEquilibrium. For pseudo-equilibria
    ``side`` selects the branch in R1 (-1) or R2 (+1).
    """
    cfg = cfg or IntegrationConfig()
    if direction not in ("strong-stable", "stable", "unstable", "strong-unstable"):
        raise ValueError(f"unknown manifold direction {direction!r}")
    backward = direction in ("strong-stable", "stable")
    if isinstance(eq, PseudoEquilibrium):
        if p.epsilon != 0:
            raise ManifoldTypeError("pseudo-equilibria exist only for epsilon = 0")
        return _pseudo_manifold(eq, p, direction, side, cfg, t_end, offset, box)
    s = np.array([float(eq[0]), float(eq[1])])
    if p.epsilon == 0:
        # regular equilibria of the linear fields are stable nodes with strong direction (1, 0)
        if direction != "strong-stable":
            raise ManifoldTypeError(f"an admissible p_i is a stable node; it has no {direction} manifold")
        start = s + side * offset * np.array([1.0, 0.0])
        return integrate_pws(start, p, cfg, -t_end, box=box)
    J = jacobian_smooth(s, p)
    w, V = np.linalg.eig(J)
    if np.iscomplexobj(w) and np.any(np.abs(w.imag) > 0):
        raise ManifoldTypeError("a focus has no one-dimensional invariant manifolds")
    w = w.real
    V = V.real
    order = np.argsort(w)
    lo, hi = order
    if direction == "strong-stable":
        if not (w[lo] < 0 and w[hi] < 0):
            raise ManifoldTypeError("strong stable manifold requires a stable node")
        v = V[:, lo]
    elif direction == "stable":
        if not (w[lo] < 0 < w[hi]):
            raise ManifoldTypeError("stable manifold (one-dimensional) requires a saddle")
        v = V[:, lo]
    elif direction == "unstable":
        if not (w[lo] < 0 < w[hi]):
            raise ManifoldTypeError("unstable manifold (one-dimensional) requires a saddle")
        v = V[:, hi]
    else:
        if not (w[lo] > 0 and w[hi] > 0):
            raise ManifoldTypeError("strong unstable manifold requires an unstable node")
        v = V[:, hi]
    start = s + side * offset * v / np.linalg.norm(v)

    def leave(t, z):
        return box - max(abs(z[0]), abs(z[1]))
    leave.terminal = True
    return integrate_smooth(start, p, cfg, -t_end if backward else t_end, events=[leave])


def _pseudo_manifold(q: PseudoEquilibrium, p, direction, side, cfg, t_end, offset, box):
    seg = sliding_segment(p)
    if not q.admissible:
        raise ManifoldTypeError("manifolds are defined only for admissible pseudo-equilibria")
    arriving = direction in ("strong-stable", "stable")
    # off the line, orbits only arrive at an attracting segment and only leave a repelling one
    if arriving != seg.attracting:
        raise ManifoldTypeError(f"the {direction} set of a pseudo-{q.kind} on a {seg.stability} segment lies on the line")
    if arriving:
        want = "strong-stable" if q.kind == "node" else "stable"
    else:
        want = "strong-unstable" if q.kind == "node" else "unstable"
    if direction != want:
        raise ManifoldTypeError(f"a pseudo-{q.kind} on a {seg.stability} segment has a {want} manifold, not {direction}")
    i = 1 if side < 0 else 2
    qs = np.array(q.location, dtype=float)
    f = vector_field_region(i, qs, p)
    sgn = -1.0 if arriving else 1.0
    start = qs + sgn * offset * f / np.linalg.norm(f)
    return integrate_pws(start, p, cfg, -t_end if arriving else t_end, box=box)


__all__ = [
    "Regime",
    "IntegrationConfig",
    "Segment",
    "Event",
    "Trajectory",
    "PeriodicOrbit",
    "integrate",
    "integrate_smooth",
    "integrate_pws",
    "return_map",
    "find_periodic_orbit",
    "manifold_orbit",
]
