"""Numerical bifurcation analysis of the smooth model (epsilon > 0).

Equilibria of the smooth system satisfy x = 1/(1+k), y = mu/k where k is the local
mixing rate. Writing k = kappa1 + dkappa*sigma(t) with the logistic sigma, the switch
consistency condition becomes one scalar equation in t, which is used to seed Newton
so that no equilibrium is missed. Curves are traced with a pseudo-arclength
predictor-corrector on augmented systems {F = 0, test functions = 0}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .errors import ConvergenceError, DomainError, InvalidParameterError
from .model import ModelParams, State

_NAMES = ("mu", "eta", "epsilon")
_SECH_CUTOFF = 350.0


# ----------------------------------------------------------------- kernels


def _terms(x, y, mu, eta, eps, k1, dk):
    """u, local mixing k and dkappa times H', H'', H''' at (x, y)."""
    u = y - x - eta
    z = u / eps
    th = math.tanh(z)
    sech2 = 0.0 if abs(z) > _SECH_CUTOFF else 1.0 / math.cosh(z) ** 2
    k = k1 + 0.5 * (1.0 + th) * dk
    a = dk * sech2 / (2.0 * eps)
    b = -dk * th * sech2 / eps**2
    c = dk * sech2 * (3.0 * th * th - 1.0) / eps**3
    return u, k, a, b, c


def _field(x, y, mu, eta, eps, k1, dk):
    _, k, _, _, _ = _terms(x, y, mu, eta, eps, k1, dk)
    return np.array([1.0 - (1.0 + k) * x, mu - k * y])


def _jac(x, y, k, a):
    return np.array([[-(1.0 + k) + x * a, -x * a], [y * a, -k - y * a]])


def _B(x, y, a, b, v, w):
    uv, uw = v[1] - v[0], w[1] - w[0]
    return -np.array(
        [
            b * uv * uw * x + a * (uv * w[0] + uw * v[0]),
            b * uv * uw * y + a * (uv * w[1] + uw * v[1]),
        ]
    )


def _C(x, y, b, c, v, w, r):
    uv, uw, ur = v[1] - v[0], w[1] - w[0], r[1] - r[0]
    return -np.array(
        [
            c * uv * uw * ur * x + b * (uv * uw * r[0] + uv * ur * w[0] + uw * ur * v[0]),
            c * uv * uw * ur * y + b * (uv * uw * r[1] + uv * ur * w[1] + uw * ur * v[1]),
        ]
    )


def _lyapunov_from(J, B, C) -> float:
    """Planar first Lyapunov coefficient from multilinear forms (Kuznetsov's invariant formula)."""
    tr, det = J[0, 0] + J[1, 1], np.linalg.det(J)
    if det <= 0:
        raise DomainError("first Lyapunov coefficient needs det J > 0")
    omega = math.sqrt(det - 0.25 * tr * tr) if det > 0.25 * tr * tr else math.sqrt(det)
    # J q = i omega q (trace neglected; it vanishes at the Hopf point)
    if abs(J[0, 1]) >= abs(J[1, 0]):
        q = np.array([J[0, 1], 1j * omega - J[0, 0]], dtype=complex)
    else:
        q = np.array([1j * omega - J[1, 1], J[1, 0]], dtype=complex)
    q /= np.linalg.norm(q)
    if abs(J[1, 0]) >= abs(J[0, 1]):
        pv = np.array([J[1, 0], -1j * omega - J[0, 0]], dtype=complex)
    else:
        pv = np.array([-1j * omega - J[1, 1], J[0, 1]], dtype=complex)
    pv /= np.conj(np.vdot(pv, q))
    qb = np.conj(q)
    s = np.linalg.solve(J.astype(complex), B(q, qb))
    r = np.linalg.solve(2j * omega * np.eye(2) - J, B(q, q))
    val = np.vdot(pv, C(q, q, qb)) - 2.0 * np.vdot(pv, B(q, s)) + np.vdot(pv, B(qb, r))
    return float(val.real / (2.0 * omega))


# ------------------------------------------------------------ equilibria


_TYPES = ("stable-node", "stable-focus", "unstable-focus", "unstable-node", "saddle")


def classify_jacobian(tr: float, det: float) -> str:
    if det < 0:
        return "saddle"
    disc = tr * tr - 4.0 * det
    if tr < 0:
        return "stable-focus" if disc < 0 else "stable-node"
    return "unstable-focus" if disc < 0 else "unstable-node"


@dataclass(frozen=True)
class EquilibriumRecord:
    state: State
    params: ModelParams
    trace: float
    det: float
    discriminant: float
    type: str
    residual: float

    @property
    def eigen_summary(self) -> tuple[float, float, float]:
        return self.trace, self.det, self.discriminant

    @property
    def stable(self) -> bool:
        return self.type in ("stable-node", "stable-focus")

    def jacobian(self) -> np.ndarray:
        p = self.params
        _, k, a, _, _ = _terms(self.state.x, self.state.y, p.mu, p.eta, p.epsilon, p.kappa1, p.dkappa)
        return _jac(self.state.x, self.state.y, k, a)


def _require_eps(p: ModelParams) -> None:
    if not p.epsilon > 0:
        raise InvalidParameterError("the smooth analysis needs epsilon > 0")


def _record(z, p: ModelParams) -> EquilibriumRecord:
    x, y = float(z[0]), float(z[1])
    _, k, a, _, _ = _terms(x, y, p.mu, p.eta, p.epsilon, p.kappa1, p.dkappa)
    J = _jac(x, y, k, a)
    tr, det = float(J[0, 0] + J[1, 1]), float(np.linalg.det(J))
    res = float(np.max(np.abs(_field(x, y, p.mu, p.eta, p.epsilon, p.kappa1, p.dkappa))))
    return EquilibriumRecord(State(x, y), p, tr, det, tr * tr - 4 * det, classify_jacobian(tr, det), res)


def solve_equilibrium(p: ModelParams, guess, max_iter: int = 50, tol: float = 1e-10) -> EquilibriumRecord:
    """Damped Newton with the analytic Jacobian."""
    _require_eps(p)
    args = (p.mu, p.eta, p.epsilon, p.kappa1, p.dkappa)
    z = np.array([float(guess[0]), float(guess[1])])
    f = _field(z[0], z[1], *args)
    r = float(np.max(np.abs(f)))
    for _ in range(max_iter):
        if r < tol:
            break
        _, k, a, _, _ = _terms(z[0], z[1], *args)
        try:
            dz = np.linalg.solve(_jac(z[0], z[1], k, a), -f)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular Jacobian in Newton iteration", r) from None
        lam = 1.0
        while True:
            zn = z + lam * dz
            fn = _field(zn[0], zn[1], *args)
            rn = float(np.max(np.abs(fn)))
            if rn < r or lam < 1e-4:
                break
            lam *= 0.5
        z, f, r = zn, fn, rn
    if not r < tol:
        raise ConvergenceError(f"Newton did not converge in {max_iter} iterations (residual {r:.3g})", r)
    return _record(z, p)


def reduced_equation(t, p: ModelParams):
    """Scalar equilibrium condition in the logit t of the switch value (vectorised)."""
    k = p.kappa1 + p.dkappa * expit(t)
    return p.mu / k - 1.0 / (1.0 + k) - p.eta - 0.5 * p.epsilon * t


def _reduced_roots(p: ModelParams) -> list[State]:
    T = 2.0 * (abs(p.mu) / p.kappa1 + 1.0 + abs(p.eta)) / p.epsilon + 1.0
    n = int(min(max(4001, 2 * T / 0.01), 2_000_001))
    t = np.linspace(-T, T, n)
    g = reduced_equation(t, p)
    roots = []
    idx = np.nonzero(np.signbit(g[:-1]) != np.signbit(g[1:]))[0]
    for i in idx:
        roots.append(brentq(lambda s: float(reduced_equation(s, p)), t[i], t[i + 1], xtol=1e-14))
    # near-tangential double roots hide between samples; catch them at local extrema of g
    dg = np.diff(g)
    ext = np.nonzero(np.signbit(dg[:-1]) != np.signbit(dg[1:]))[0] + 1
    for i in ext:
        if abs(g[i]) < 1e-6 and not any(abs(r - t[i]) < 2 * (t[1] - t[0]) for r in roots):
            roots.append(float(t[i]))
    out = []
    for r in roots:
        k = p.kappa1 + p.dkappa * float(expit(r))
        out.append(State(1.0 / (1.0 + k), p.mu / k))
    return out


def _pws_candidates(p: ModelParams) -> list[State]:
    from .filippov import pseudo_equilibria
    from .model import region_equilibrium

    pws = p.with_(epsilon=0.0)
    cands = [region_equilibrium(1, pws), region_equilibrium(2, pws)]
    if p.eta != 0:
        cands += [q.location for q in pseudo_equilibria(pws)]
    return cands


def equilibria_all(p: ModelParams, grid: int = 5, dedup_tol: float = 1e-6) -> list[EquilibriumRecord]:
    """All equilibria, sorted by x (descending, i.e. from the R1 side to the R2 side)."""
    _require_eps(p)
    seeds = _reduced_roots(p) + _pws_candidates(p)
    xs = np.linspace(0.3, 1.1, grid)
    ys = np.linspace(min(p.mu / p.kappa2, p.mu / p.kappa1) - 0.2, max(p.mu / p.kappa2, p.mu / p.kappa1) + 0.2, grid)
    seeds += [State(float(x), float(y)) for x in xs for y in ys]
    found: list[EquilibriumRecord] = []
    for s in seeds:
        try:
            rec = solve_equilibrium(p, s)
        except ConvergenceError:
            continue
        if all(max(abs(rec.state.x - f.state.x), abs(rec.state.y - f.state.y)) > dedup_tol for f in found):
            found.append(rec)
    if not found:
        raise ConvergenceError("no equilibrium found")
    found.sort(key=lambda r: -r.state.x)
    return found


# -------------------------------------------------------- augmented systems


class _System:
    """Unknowns X = (x, y, *free); equations (F1, F2, *tests)."""

    def __init__(self, p: ModelParams, free: Sequence[str], tests: Sequence[str]):
        for f in free:
            if f not in _NAMES:
                raise InvalidParameterError(f"unknown free parameter {f!r}")
        for t in tests:
            if t not in ("det", "tr", "cusp", "l1"):
                raise InvalidParameterError(f"unknown test function {t!r}")
        if len(free) not in (len(tests), len(tests) + 1):
            raise InvalidParameterError("need as many free parameters as test functions, or one more")
        self.p = p
        self.free = tuple(free)
        self.tests = tuple(tests)
        self.k1, self.dk = p.kappa1, p.dkappa

    @property
    def dim(self) -> int:
        return 2 + len(self.free)

    def unpack(self, X):
        vals = {"mu": self.p.mu, "eta": self.p.eta, "epsilon": self.p.epsilon}
        for name, v in zip(self.free, X[2:]):
            vals[name] = float(v)
        return float(X[0]), float(X[1]), vals["mu"], vals["eta"], vals["epsilon"]

    def pack(self, x, y, mu, eta, eps) -> np.ndarray:
        vals = {"mu": mu, "eta": eta, "epsilon": eps}
        return np.array([x, y] + [vals[n] for n in self.free], dtype=float)

    def params(self, X) -> ModelParams:
        _, _, mu, eta, eps = self.unpack(X)
        return self.p.with_(mu=mu, eta=eta, epsilon=eps)

    def test_value(self, name: str, X) -> float:
        x, y, mu, eta, eps = self.unpack(X)
        return test_function(name, x, y, mu, eta, eps, self.k1, self.dk)

    def F(self, X) -> np.ndarray:
        x, y, mu, eta, eps = self.unpack(X)
        out = list(_field(x, y, mu, eta, eps, self.k1, self.dk))
        for t in self.tests:
            out.append(test_function(t, x, y, mu, eta, eps, self.k1, self.dk))
        return np.array(out)

    def J(self, X) -> np.ndarray:
        x, y, mu, eta, eps = self.unpack(X)
        u, k, a, b, _ = _terms(x, y, mu, eta, eps, self.k1, self.dk)
        # differentials of u, k and a with respect to (x, y, mu, eta, eps)
        du = np.array([-1.0, 1.0, 0.0, -1.0, 0.0])
        dk = a * du + np.array([0, 0, 0, 0, -a * u / eps])
        da = b * du + np.array([0, 0, 0, 0, -a / eps - u * b / eps])
        dx = np.array([1.0, 0, 0, 0, 0])
        dy = np.array([0, 1.0, 0, 0, 0])
        dmu = np.array([0, 0, 1.0, 0, 0])
        rows = [-dk * x - (1.0 + k) * dx, dmu - dk * y - k * dy]
        fd_tests = []
        for i, t in enumerate(self.tests):
            if t == "tr":
                rows.append(-2.0 * dk + da * (x - y) + a * (dx - dy))
            elif t == "det":
                rows.append((1.0 + 2.0 * k) * dk + da * ((1.0 + k) * y - k * x) + a * (dk * (y - x) + (1.0 + k) * dy - k * dx))
            else:
                rows.append(np.zeros(5))
                fd_tests.append((2 + i, t))
        full = np.vstack(rows)
        cols = [0, 1] + [2 + _NAMES.index(n) for n in self.free]
        Jx = full[:, cols]
        for row, t in fd_tests:
            Jx[row] = self._fd_row(t, X)
        return Jx

    def _fd_row(self, t, X) -> np.ndarray:
        _, _, _, _, eps = self.unpack(X)
        out = np.empty(self.dim)
        for j in range(self.dim):
            h = 1e-6 * min(1.0, eps) * max(1.0, abs(X[j]))
            Xp, Xm = X.copy(), X.copy()
            Xp[j] += h
            Xm[j] -= h
            out[j] = (self.test_value(t, Xp) - self.test_value(t, Xm)) / (2 * h)
        return out


def test_function(name, x, y, mu, eta, eps, k1, dk) -> float:
    u, k, a, b, c = _terms(x, y, mu, eta, eps, k1, dk)
    J = _jac(x, y, k, a)
    if name == "tr":
        return float(J[0, 0] + J[1, 1])
    if name == "det":
        return float(k * (1.0 + k) + a * ((1.0 + k) * y - k * x))
    if name == "cusp":
        return _cusp_value(x, y, J, a, b)
    if name == "l1":
        return _lyapunov_from(J, lambda v, w: _B(x, y, a, b, v, w), lambda v, w, r: _C(x, y, b, c, v, w, r))
    raise InvalidParameterError(f"unknown test function {name!r}")


def _cusp_value(x, y, J, a, b) -> float:
    """Quadratic fold coefficient w.B(v,v) normalised by w.F_eta; sign-free in v and w."""
    U, _, Vt = np.linalg.svd(J)
    v, w = Vt[-1], U[:, -1]
    Feta = np.array([x * a, y * a])
    den = float(w @ Feta)
    if den == 0:
        return math.inf
    return float(w @ _B(x, y, a, b, v, v)) / den


# ------------------------------------------------------ pseudo-arclength engine


@dataclass(frozen=True)
class StepSettings:
    h0: float = 1e-3
    h_min: float = 1e-12
    h_max: float = 0.02
    max_steps: int = 20000
    newton_tol: float = 1e-11
    newton_max_iter: int = 12
    small_eps: float = 0.02  # below this, step bounds shrink proportionally to epsilon

    def __post_init__(self) -> None:
        if not 0 < self.h_min <= self.h0 <= self.h_max:
            raise InvalidParameterError("need 0 < h_min <= h0 <= h_max")


@dataclass
class BranchPoint:
    kind: str  # fold | hopf | bt | cusp | gh
    state: State
    mu: float
    eta: float
    epsilon: float
    diagnostics: dict = field(default_factory=dict)
    label: str = ""

    @property
    def location(self) -> tuple[State, float, float, float]:
        return self.state, self.mu, self.eta, self.epsilon


@dataclass
class Branch:
    """Polyline in (x, y, *free) plus located special points."""

    free: tuple[str, ...]
    tests: tuple[str, ...]
    base: ModelParams
    points: np.ndarray
    events: list[BranchPoint] = field(default_factory=list)
    status: str = "completed"
    label: str = ""

    def column(self, name: str) -> np.ndarray:
        if name == "x":
            return self.points[:, 0]
        if name == "y":
            return self.points[:, 1]
        if name in self.free:
            return self.points[:, 2 + self.free.index(name)]
        return np.full(len(self.points), getattr(self.base, name))

    @property
    def mu_eta(self) -> np.ndarray:
        return np.column_stack([self.column("mu"), self.column("eta")])

    def rows(self):
        """Branch CSV rows: mu, eta, epsilon, x, y, trace, det, label, event."""
        k1, dk = self.base.kappa1, self.base.dkappa
        mu, eta, eps = self.column("mu"), self.column("eta"), self.column("epsilon")
        for i, (x, y) in enumerate(self.points[:, :2]):
            tr = test_function("tr", x, y, mu[i], eta[i], eps[i], k1, dk)
            det = test_function("det", x, y, mu[i], eta[i], eps[i], k1, dk)
            yield mu[i], eta[i], eps[i], x, y, tr, det, self.label, ""
        for ev in self.events:
            s = ev.state
            tr = test_function("tr", s.x, s.y, ev.mu, ev.eta, ev.epsilon, k1, dk)
            det = test_function("det", s.x, s.y, ev.mu, ev.eta, ev.epsilon, k1, dk)
            yield ev.mu, ev.eta, ev.epsilon, s.x, s.y, tr, det, self.label, ev.label or ev.kind


TwoParCurve = Branch


def _null_vector(A: np.ndarray) -> np.ndarray:
    return np.linalg.svd(A)[2][-1]


def _newton(sys: _System, X: np.ndarray, extra: Callable | None, settings: StepSettings):
    """Newton on F(X) = 0 augmented by one linear row (a, b): a.X = b, or square if extra is None."""
    for it in range(settings.newton_max_iter):
        F = sys.F(X)
        J = sys.J(X)
        if extra is not None:
            a, b = extra
            F = np.append(F, a @ X - b)
            J = np.vstack([J, a])
        if not np.all(np.isfinite(F)) or not np.all(np.isfinite(J)):
            return None, it
        try:
            dX = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None, it
        X = X + dX
        if np.max(np.abs(dX)) < settings.newton_tol * max(1.0, np.max(np.abs(X))):
            F = sys.F(X)
            if np.max(np.abs(F)) < 1e-9:
                return X, it + 1
    F = sys.F(X)
    if np.all(np.isfinite(F)) and np.max(np.abs(F)) < 1e-10:
        return X, settings.newton_max_iter
    return None, settings.newton_max_iter


def _correct(sys, Xp, T, settings):
    return _newton(sys, Xp, (T, float(T @ Xp)), settings)


def _eps_scale(sys: _System, X, settings: StepSettings) -> float:
    eps = sys.unpack(X)[4]
    return min(1.0, eps / settings.small_eps)


def _locate(sys, Xa, Ta, Xb, psi: Callable, settings, tol=1e-11):
    """Zero of psi along the branch between Xa and Xb by Illinois regula falsi in pseudo-arclength."""
    sa, sb = 0.0, float(Ta @ (Xb - Xa))
    fa, fb = psi(Xa), psi(Xb)
    best = (Xa, fa) if abs(fa) < abs(fb) else (Xb, fb)
    side = 0
    for _ in range(100):
        s = sb - fb * (sb - sa) / (fb - fa)
        X, _ = _correct(sys, Xa + s * Ta, Ta, settings)
        if X is None:
            s = 0.5 * (sa + sb)
            X, _ = _correct(sys, Xa + s * Ta, Ta, settings)
            if X is None:
                break
        f = psi(X)
        if abs(f) < abs(best[1]):
            best = (X, f)
        if abs(f) < tol or abs(sb - sa) < 1e-15:
            break
        if np.signbit(f) == np.signbit(fb):
            sb, fb = s, f
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            sa, fa = s, f
            if side == 1:
                fb *= 0.5
            side = 1
    return best


def _trace(sys: _System, X0, T0, settings: StepSettings, inside: Callable, monitors: dict, terminal=(),
           accept: Callable | None = None):
    """One-directional pseudo-arclength continuation with event location."""
    X, T = np.asarray(X0, float), np.asarray(T0, float)
    T = T / np.linalg.norm(T)
    pts = [X]
    events = []
    mvals = {n: f(X) for n, f in monitors.items()}
    h = settings.h0 * _eps_scale(sys, X, settings)
    status = "max-steps"
    while len(pts) < settings.max_steps:
        hmax = settings.h_max * _eps_scale(sys, X, settings)
        hmin = settings.h_min
        h = min(h, hmax)
        Xn, its = _correct(sys, X + h * T, T, settings)
        ok = Xn is not None and np.linalg.norm(Xn - X) < 2.0 * h
        if ok:
            Tn = _null_vector(sys.J(Xn))
            if Tn @ T < 0:
                Tn = -Tn
            ok = Tn @ T > 0.95
        if not ok:
            h *= 0.5
            if h < hmin:
                status = "step-collapse"
                break
            continue
        nv = {n: f(Xn) for n, f in monitors.items()}
        stop = False
        for name, v in nv.items():
            v0 = mvals[name]
            if np.isfinite(v) and np.isfinite(v0) and np.signbit(v) != np.signbit(v0):
                Xe, fe = _locate(sys, X, T, Xn, monitors[name], settings)
                if accept is None or accept(name, Xe, fe, v0, v):
                    events.append((name, Xe, fe))
                    if name in terminal:
                        pts.append(Xe)
                        status = f"terminal:{name}"
                        stop = True
        if stop:
            break
        X, T, mvals = Xn, Tn, nv
        pts.append(X)
        if not inside(X):
            status = "left-window"
            break
        if its <= 3:
            h = min(1.5 * h, hmax)
    return np.array(pts), events, status


def _both_ways(sys, X0, settings, inside, monitors, terminal=(), accept=None, orient=None):
    T0 = _null_vector(sys.J(X0))
    if orient is not None and T0 @ orient < 0:
        T0 = -T0
    fwd, ev1, st1 = _trace(sys, X0, T0, settings, inside, monitors, terminal, accept)
    bwd, ev2, st2 = _trace(sys, X0, -T0, settings, inside, monitors, terminal, accept)
    pts = np.vstack([bwd[::-1], fwd[1:]])
    return pts, ev2[::-1] + ev1, (st2, st1)


def _to_point(sys: _System, kind: str, X, diagnostics=None) -> BranchPoint:
    x, y, mu, eta, eps = sys.unpack(X)
    diag = {t: test_function(t, x, y, mu, eta, eps, sys.k1, sys.dk) for t in ("tr", "det")}
    diag.update(diagnostics or {})
    return BranchPoint(kind, State(x, y), mu, eta, eps, diag)


def _window_box(window, margin: float = 0.25):
    (m0, m1), (e0, e1) = window
    dm, de = (m1 - m0) * margin, (e1 - e0) * margin
    return (m0 - dm, m1 + dm), (e0 - de, e1 + de)


def _relabel(points: list[BranchPoint], kind: str, prefix: str) -> None:
    pts = sorted((q for q in points if q.kind == kind), key=lambda q: q.mu)
    if len(pts) == 1 and kind == "cusp":
        pts[0].label = prefix
        return
    for i, q in enumerate(pts, 1):
        q.label = f"{prefix}{i}"


# ---------------------------------------------------- one-parameter branches


def continue_equilibrium(p0: ModelParams, eq0, free_param: str = "mu", settings: StepSettings | None = None,
                         bounds: tuple[float, float] = (-0.2, 1.0), state_bound: float = 1e3) -> Branch:
    """Equilibrium branch in one parameter with fold (det J) and Hopf (tr J, det J > 0) events."""
    _require_eps(p0)
    if free_param not in ("mu", "eta"):
        raise InvalidParameterError("free parameter must be mu or eta")
    settings = settings or StepSettings(h_max=0.01)
    sys = _System(p0, (free_param,), ())
    rec = solve_equilibrium(p0, eq0.state if isinstance(eq0, EquilibriumRecord) else eq0)
    X0 = sys.pack(rec.state.x, rec.state.y, p0.mu, p0.eta, p0.epsilon)

    def inside(X):
        return bounds[0] <= X[2] <= bounds[1] and max(abs(X[0]), abs(X[1])) < state_bound

    monitors = {"det": lambda X: sys.test_value("det", X), "tr": lambda X: sys.test_value("tr", X)}

    def accept(name, X, f, *_):
        if abs(f) > 1e-8:
            return False
        return name == "det" or sys.test_value("det", X) > 0

    orient = np.zeros(3)
    orient[2] = 1.0
    pts, evs, status = _both_ways(sys, X0, settings, inside, monitors, accept=accept, orient=orient)
    events = [_to_point(sys, "fold" if n == "det" else "hopf", X) for n, X, _ in evs]
    return Branch((free_param,), (), p0, pts, events, status=str(status), label="EQ")


# ------------------------------------------------------ closed-form seeds


def _k_of_t(t, p):
    return p.kappa1 + p.dkappa * expit(t)


def fold_curve_closed_form(t, p: ModelParams):
    """Exact fold curve, parametrised by the logit t of the switch value at the equilibrium."""
    t = np.asarray(t, float)
    s = expit(t)
    k = p.kappa1 + p.dkappa * s
    a = 2.0 * p.dkappa * s * (1.0 - s) / p.epsilon
    with np.errstate(divide="ignore"):
        mu = k * k / (1.0 + k) ** 2 - k * k / a
    eta = mu / k - 1.0 / (1.0 + k) - 0.5 * p.epsilon * t
    return mu, eta, 1.0 / (1.0 + k), mu / k


def hopf_curve_closed_form(t, p: ModelParams):
    """Exact Hopf curve (where det J > 0) in the same parametrisation; NaN elsewhere."""
    t = np.asarray(t, float)
    s = expit(t)
    k = p.kappa1 + p.dkappa * s
    a = 2.0 * p.dkappa * s * (1.0 - s) / p.epsilon
    with np.errstate(divide="ignore"):
        mu = k * (1.0 / (1.0 + k) - (1.0 + 2.0 * k) / a)
    eta = mu / k - 1.0 / (1.0 + k) - 0.5 * p.epsilon * t
    valid = a > (1.0 + k) ** 3
    return np.where(valid, mu, np.nan), np.where(valid, eta, np.nan), 1.0 / (1.0 + k), mu / k


def bt_epsilon(k, kappa1: float = 0.1, kappa2: float = 1.0):
    """Largest epsilon at which the equilibrium with mixing value k can be a BT point."""
    dk = kappa2 - kappa1
    return 2.0 * (k - kappa1) * (kappa2 - k) / (dk * (1.0 + k) ** 3)


def _seeds(kind: str, p: ModelParams, window, n: int = 801):
    t = np.linspace(-40.0, 40.0, n)
    f = fold_curve_closed_form if kind == "fold" else hopf_curve_closed_form
    mu, eta, x, y = f(t, p)
    (m0, m1), (e0, e1) = window
    ok = np.isfinite(mu) & (mu >= m0) & (mu <= m1) & (eta >= e0) & (eta <= e1)
    return [(t[i], x[i], y[i], mu[i], eta[i]) for i in np.nonzero(ok)[0]]


def _logit_of(sys: _System, X) -> float:
    x, y, mu, eta, eps = sys.unpack(X)
    return 2.0 * (y - x - eta) / eps


def _trace_curve(kind: str, p: ModelParams, window, settings: StepSettings | None, monitors_for, terminal, accept,
                 label: str) -> list[Branch]:
    _require_eps(p)
    settings = settings or StepSettings()
    test = "det" if kind == "fold" else "tr"
    sys = _System(p, ("mu", "eta"), (test,))
    (bm0, bm1), (be0, be1) = _window_box(window)

    def inside(X):
        return bm0 <= X[2] <= bm1 and be0 <= X[3] <= be1 and max(abs(X[0]), abs(X[1])) < 1e3

    seeds = _seeds(kind, p, window)
    branches = []
    covered: list[tuple[float, float]] = []
    for t0, x, y, mu, eta in seeds:
        if any(lo - 1e-9 <= t0 <= hi + 1e-9 for lo, hi in covered):
            continue
        X0, _ = _newton(_System(p.with_(eta=eta), ("mu",), (test,)), np.array([x, y, mu]), None, settings)
        if X0 is None:
            continue
        X0 = np.array([X0[0], X0[1], X0[2], eta])
        monitors = monitors_for(sys)
        pts, evs, status = _both_ways(sys, X0, settings, inside, monitors, terminal, accept(sys))
        ts = [_logit_of(sys, X) for X in pts]
        covered.append((min(ts), max(ts)))
        br = Branch(("mu", "eta"), (test,), p, pts, status=str(status), label=label)
        for name, X, _ in evs:
            br.events.append(_to_point(sys, _EVENT_KIND[(kind, name)], X))
        branches.append(br)
    return branches


_EVENT_KIND = {("fold", "tr"): "bt", ("fold", "cusp"): "cusp", ("hopf", "det"): "bt", ("hopf", "l1"): "gh"}


def _small_relative(f, v0, v1, rel=1e-6) -> bool:
    return abs(f) <= rel * max(1.0, abs(v0), abs(v1))


def continue_fold_curve(p: ModelParams, window=((-0.2, 1.0), (-1.2, 0.6)), settings: StepSettings | None = None,
                        start: BranchPoint | None = None) -> Branch:
    """Fold curve S at fixed epsilon, with cusp and BT detection.

    Without ``start`` the curve is seeded from the exact fold parametrisation; a given
    fold point is continued from directly.
    """
    def monitors_for(sys):
        return {"tr": lambda X: sys.test_value("tr", X), "cusp": lambda X: sys.test_value("cusp", X)}

    def accept(sys):
        # the cusp quotient also changes sign through a pole; keep genuine zeros only
        return lambda name, X, f, v0, v1: abs(f) < 1e-8 and (name != "cusp" or _small_relative(f, v0, v1))

    if start is not None:
        if start.kind != "fold":
            raise InvalidParameterError("continue_fold_curve needs a fold point")
        settings = settings or StepSettings()
        sys = _System(p.with_(epsilon=start.epsilon), ("mu", "eta"), ("det",))
        (bm0, bm1), (be0, be1) = _window_box(window)
        X0 = sys.pack(start.state.x, start.state.y, start.mu, start.eta, start.epsilon)
        X0, _ = _correct(sys, X0, np.array([0, 0, 0, 1.0]), settings)
        if X0 is None:
            raise ConvergenceError("fold start point does not satisfy the fold system")
        pts, evs, status = _both_ways(
            sys, X0, settings, lambda X: bm0 <= X[2] <= bm1 and be0 <= X[3] <= be1, monitors_for(sys), (), accept(sys)
        )
        br = Branch(("mu", "eta"), ("det",), sys.p, pts, status=str(status), label="S")
        br.events = [_to_point(sys, _EVENT_KIND[("fold", n)], X) for n, X, _ in evs]
    else:
        parts = _trace_curve("fold", p, window, settings, monitors_for, (), accept, "S")
        if not parts:
            return Branch(("mu", "eta"), ("det",), p, np.empty((0, 4)), status="no-fold", label="S")
        br = _merge(parts, "S")
    _relabel(br.events, "bt", "BT")
    _relabel(br.events, "cusp", "CP")
    return br


def continue_hopf_curve(p: ModelParams, window=((-0.2, 1.0), (-1.2, 0.6)), settings: StepSettings | None = None,
                        start: BranchPoint | None = None) -> Branch:
    """Hopf curve H at fixed epsilon; ends at BT points, GH points at sign changes of l1."""
    def monitors_for(sys):
        def l1(X):
            try:
                return sys.test_value("l1", X)
            except DomainError:
                return math.nan
        return {"det": lambda X: sys.test_value("det", X), "l1": l1}

    def accept(sys):
        return lambda name, X, f, v0, v1: _small_relative(f, v0, v1, 1e-6 if name == "l1" else 1e-8)

    if start is not None:
        if start.kind != "hopf":
            raise InvalidParameterError("continue_hopf_curve needs a Hopf point")
        settings = settings or StepSettings()
        sys = _System(p.with_(epsilon=start.epsilon), ("mu", "eta"), ("tr",))
        (bm0, bm1), (be0, be1) = _window_box(window)
        X0 = sys.pack(start.state.x, start.state.y, start.mu, start.eta, start.epsilon)
        X0, _ = _correct(sys, X0, np.array([0, 0, 0, 1.0]), settings)
        if X0 is None:
            raise ConvergenceError("Hopf start point does not satisfy the Hopf system")
        pts, evs, status = _both_ways(
            sys, X0, settings, lambda X: bm0 <= X[2] <= bm1 and be0 <= X[3] <= be1, monitors_for(sys), ("det",),
            accept(sys)
        )
        br = Branch(("mu", "eta"), ("tr",), sys.p, pts, status=str(status), label="H")
        br.events = [_to_point(sys, _EVENT_KIND[("hopf", n)], X) for n, X, _ in evs]
    else:
        parts = _trace_curve("hopf", p, window, settings, monitors_for, ("det",), accept, "H")
        if not parts:
            return Branch(("mu", "eta"), ("tr",), p, np.empty((0, 4)), status="no-hopf", label="H")
        br = _merge(parts, "H")
    _relabel(br.events, "bt", "BT")
    _relabel(br.events, "gh", "GH")
    return br


def _merge(parts: list[Branch], label: str) -> Branch:
    if len(parts) == 1:
        return parts[0]
    pts = np.vstack([b.points for b in parts])
    events = [e for b in parts for e in b.events]
    return Branch(parts[0].free, parts[0].tests, parts[0].base, pts, events, ";".join(b.status for b in parts), label)


def hopf_criticality(branch: Branch) -> np.ndarray:
    """l1 at every sample of a Hopf branch (NaN where undefined)."""
    sys = _System(branch.base, branch.free, branch.tests)
    out = np.empty(len(branch.points))
    for i, X in enumerate(branch.points):
        try:
            out[i] = sys.test_value("l1", X)
        except DomainError:
            out[i] = math.nan
    return out


def first_lyapunov(eq: EquilibriumRecord, tol: float = 1e-6) -> float:
    """First Lyapunov coefficient at a Hopf equilibrium; negative means supercritical."""
    if eq.det <= 0:
        raise DomainError("first Lyapunov coefficient needs det J > 0")
    if abs(eq.trace) > tol:
        raise DomainError(f"not a Hopf point: trace = {eq.trace:.3g}")
    p = eq.params
    return test_function("l1", eq.state.x, eq.state.y, p.mu, p.eta, p.epsilon, p.kappa1, p.dkappa)


def first_lyapunov_fd(eq: EquilibriumRecord, h: float | None = None) -> float:
    """Same coefficient with second and third derivatives taken by finite differences of F."""
    p = eq.params
    if eq.det <= 0:
        raise DomainError("first Lyapunov coefficient needs det J > 0")
    h = h or 1e-3 * min(1.0, p.epsilon)
    z0 = np.array(eq.state)
    args = (p.mu, p.eta, p.epsilon, p.kappa1, p.dkappa)

    def f(z):
        return _field(z[0], z[1], *args)

    def B_real(v, w):
        return (f(z0 + h * (v + w)) - f(z0 + h * (v - w)) - f(z0 - h * (v - w)) + f(z0 - h * (v + w))) / (4 * h * h)

    def C_real(v, w, r):
        acc = np.zeros(2)
        for s1 in (1, -1):
            for s2 in (1, -1):
                for s3 in (1, -1):
                    acc += s1 * s2 * s3 * f(z0 + h * (s1 * v + s2 * w + s3 * r))
        return acc / (8 * h**3)

    def B(v, w):
        vr, vi, wr, wi = v.real, v.imag, w.real, w.imag
        return B_real(vr, wr) - B_real(vi, wi) + 1j * (B_real(vr, wi) + B_real(vi, wr))

    def C(v, w, r):
        out = np.zeros(2, dtype=complex)
        for cv, av in ((1, v.real), (1j, v.imag)):
            for cw, aw in ((1, w.real), (1j, w.imag)):
                for cr, ar in ((1, r.real), (1j, r.imag)):
                    out += cv * cw * cr * C_real(av, aw, ar)
        return out

    J = eq.jacobian()
    return _lyapunov_from(J, B, C)


def record_at(bp: BranchPoint, p: ModelParams) -> EquilibriumRecord:
    return _record(bp.state, p.with_(mu=bp.mu, eta=bp.eta, epsilon=bp.epsilon))


# ------------------------------------------------------- three-parameter loci


def continue_bt_in_epsilon(start: BranchPoint, p: ModelParams, eps_min: float = 0.004,
                           window=((-0.2, 1.0), (-1.2, 0.6)), settings: StepSettings | None = None) -> Branch:
    """BT curve {F = 0, tr J = 0, det J = 0} in (mu, eta, epsilon)."""
    if start.kind != "bt":
        raise InvalidParameterError("continue_bt_in_epsilon needs a BT point")
    settings = settings or StepSettings(h_max=0.01)
    sys = _System(p.with_(epsilon=start.epsilon), ("mu", "eta", "epsilon"), ("tr", "det"))
    (bm0, bm1), (be0, be1) = _window_box(window)

    def inside(X):
        return X[4] >= eps_min and bm0 <= X[2] <= bm1 and be0 <= X[3] <= be1

    X0 = sys.pack(start.state.x, start.state.y, start.mu, start.eta, start.epsilon)
    X0, _ = _correct(sys, X0, np.array([0, 0, 0, 0, 1.0]), settings)
    if X0 is None:
        raise ConvergenceError("BT start point does not satisfy the BT system")
    pts, _, status = _both_ways(sys, X0, settings, inside, {}, orient=np.array([0, 0, 1.0, 0, 0]))
    return Branch(("mu", "eta", "epsilon"), ("tr", "det"), sys.p, pts, status=str(status), label="BT")


def continue_cusp_locus(start: BranchPoint, p: ModelParams, eps_range=(0.004, 0.3),
                        window=((-0.2, 1.0), (-1.2, 0.6)), settings: StepSettings | None = None) -> Branch:
    """Cusp points {F = 0, det J = 0, cusp test = 0} with epsilon free; BT crossings flagged."""
    if start.kind != "cusp":
        raise InvalidParameterError("continue_cusp_locus needs a cusp point")
    settings = settings or StepSettings(h_max=0.005)
    sys = _System(p.with_(epsilon=start.epsilon), ("mu", "eta", "epsilon"), ("det", "cusp"))
    (bm0, bm1), (be0, be1) = _window_box(window)

    def inside(X):
        return eps_range[0] <= X[4] <= eps_range[1] and bm0 <= X[2] <= bm1 and be0 <= X[3] <= be1

    X0 = sys.pack(start.state.x, start.state.y, start.mu, start.eta, start.epsilon)
    X0, _ = _correct(sys, X0, np.array([0, 0, 0, 0, 1.0]), settings)
    if X0 is None:
        raise ConvergenceError("cusp start point does not satisfy the cusp system")
    monitors = {"tr": lambda X: sys.test_value("tr", X)}
    pts, evs, status = _both_ways(sys, X0, settings, inside, monitors, orient=np.array([0, 0, 1.0, 0, 0]))
    br = Branch(("mu", "eta", "epsilon"), ("det", "cusp"), sys.p, pts, status=str(status), label="CP-locus")
    br.events = [_to_point(sys, "gbc", X) for _, X, _ in evs]
    return br


def smooth_diagram(p: ModelParams, window=((-0.2, 1.0), (-1.2, 0.6)), settings: StepSettings | None = None):
    """S and H at the epsilon of ``p`` with all codimension-two points (labels sorted by mu)."""
    S = continue_fold_curve(p, window, settings)
    H = continue_hopf_curve(p, window, settings)
    return S, H


def _bt_start(p: ModelParams, which: int = 1) -> BranchPoint:
    S = continue_fold_curve(p)
    bts = sorted((e for e in S.events if e.kind == "bt"), key=lambda e: e.mu)
    if not bts:
        raise ConvergenceError(f"no BT point on S at epsilon = {p.epsilon}")
    return bts[min(which, len(bts)) - 1]


def locate_dbt(bt_curve: Branch | None = None, kappa1: float = 0.1, kappa2: float = 1.0) -> tuple[float, float, float]:
    """Epsilon maximum of the BT curve by a quadratic fit through its three highest samples."""
    if bt_curve is None:
        p = ModelParams(mu=0.0, eta=-0.5, kappa1=kappa1, kappa2=kappa2, epsilon=0.1)
        bt_curve = continue_bt_in_epsilon(_bt_start(p), p)
    pts = bt_curve.points
    eps = bt_curve.column("epsilon")
    i = int(np.argmax(eps))
    if i == 0 or i == len(eps) - 1:
        raise ConvergenceError("no interior epsilon maximum on the BT curve")
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    sl = s[i - 1 : i + 2]
    c2, c1, c0 = np.polyfit(sl - sl[1], eps[i - 1 : i + 2], 2)
    ds = -c1 / (2 * c2)
    out = []
    for name in ("mu", "eta"):
        col = bt_curve.column(name)[i - 1 : i + 2]
        q = np.polyfit(sl - sl[1], col, 2)
        out.append(float(np.polyval(q, ds)))
    return out[0], out[1], float(c0 - c1 * c1 / (4 * c2))


def locate_gbc(kappa1: float = 0.1, kappa2: float = 1.0, eps_start: float = 0.1) -> tuple[float, float, float]:
    """Point where the cusp locus meets the BT curve (cusp coinciding with a BT point)."""
    p = ModelParams(mu=0.0, eta=-0.5, kappa1=kappa1, kappa2=kappa2, epsilon=eps_start)
    S = continue_fold_curve(p)
    cusps = [e for e in S.events if e.kind == "cusp"]
    if not cusps:
        raise ConvergenceError(f"no cusp on S at epsilon = {eps_start}")
    locus = continue_cusp_locus(cusps[0], p)
    if not locus.events:
        raise ConvergenceError("cusp locus does not meet the BT curve")
    g = min(locus.events, key=lambda e: abs(e.epsilon - eps_start))
    return g.mu, g.eta, g.epsilon


def hopf_points_on_slices(p: ModelParams, etas: Iterable[float], mu_range=(-0.2, 1.0)) -> list[BranchPoint]:
    """Hopf events found by equilibrium continuation in mu along horizontal slices."""
    out = []
    for eta in etas:
        q = p.with_(eta=float(eta), mu=mu_range[0])
        for rec in equilibria_all(q):
            br = continue_equilibrium(q, rec, "mu", bounds=mu_range)
            out += [e for e in br.events if e.kind == "hopf"]
    return out


__all__ = [
    "EquilibriumRecord",
    "BranchPoint",
    "Branch",
    "TwoParCurve",
    "StepSettings",
    "classify_jacobian",
    "solve_equilibrium",
    "equilibria_all",
    "reduced_equation",
    "continue_equilibrium",
    "continue_fold_curve",
    "continue_hopf_curve",
    "continue_bt_in_epsilon",
    "continue_cusp_locus",
    "first_lyapunov",
    "first_lyapunov_fd",
    "hopf_criticality",
    "fold_curve_closed_form",
    "hopf_curve_closed_form",
    "bt_epsilon",
    "smooth_diagram",
    "locate_dbt",
    "locate_gbc",
    "hopf_points_on_slices",
    "test_function",
    "record_at",
]
