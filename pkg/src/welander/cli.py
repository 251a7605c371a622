"""Command-line front end. Output is data only (CSV/JSON) for external plotting.

Settings come from built-in defaults, then the JSON file given by --config, then
command-line flags, each overriding the previous one.
Exit codes: 0 success, 2 invalid configuration or parameters, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .atlas import Region, classify_region, pws_diagram, region_report
from .census import attractor_census, default_ic_grid, smooth_region_label
from .errors import DomainError, InvalidParameterError, ManifoldTypeError, NumericalError, WelanderError
from .filippov import Visibility, pseudo_equilibria, sliding_segment, tangency_points
from .flow import IntegrationConfig, find_periodic_orbit, integrate, manifold_orbit
from .model import ModelParams, PhysicalParams, State, nondimensionalize, region_equilibrium

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


# ------------------------------------------------------------------ config


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelBlock(_Strict):
    mu: float = 0.25
    eta: float = -0.2
    kappa1: float = 0.1
    kappa2: float = 1.0
    epsilon: float = 0.0


class PhysicalBlock(_Strict):
    gamma: float
    T_a: float
    T_0: float
    S_0: float
    F_0: float
    H_depth: float
    alpha_S: float
    alpha_T: float
    k1: float
    k2: float
    g_star: float
    rho_0: float


class WindowBlock(_Strict):
    mu: tuple[float, float] = (-0.2, 1.0)
    eta: tuple[float, float] = (-1.2, 0.6)

    @model_validator(mode="after")
    def _ordered(self):
        if not (self.mu[0] < self.mu[1] and self.eta[0] < self.eta[1]):
            raise ValueError("window bounds must be increasing")
        return self


class GridBlock(_Strict):
    n_mu: int = Field(20, ge=1)
    n_eta: int = Field(20, ge=1)
    n_ic: int = Field(3, ge=1)


class IntegrationBlock(_Strict):
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    event_tol: float = 1e-10
    max_step: float = 0.1
    t_max: float = 500.0


class SweepBlock(_Strict):
    epsilons: Optional[list[float]] = None
    eps_start: float = 0.005
    eps_stop: float = 0.155
    eps_step: float = 0.005

    def values(self) -> list[float]:
        if self.epsilons is not None:
            return [float(e) for e in self.epsilons]
        n = int(round((self.eps_stop - self.eps_start) / self.eps_step)) + 1
        return [round(self.eps_start + i * self.eps_step, 12) for i in range(n)]


class ContinuationBlock(_Strict):
    free_param: Literal["mu", "eta"] = "mu"
    guess: Optional[tuple[float, float]] = None
    bounds: tuple[float, float] = (-0.2, 1.0)
    h_max: float = Field(0.01, gt=0)


class OutputBlock(_Strict):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class ScenarioConfig(_Strict):
    model: ModelBlock = ModelBlock()
    physical: Optional[PhysicalBlock] = None
    window: WindowBlock = WindowBlock()
    grid: GridBlock = GridBlock()
    initial_conditions: Optional[list[tuple[float, float]]] = None
    integration: IntegrationBlock = IntegrationBlock()
    sweep: Optional[SweepBlock] = None
    continuation: ContinuationBlock = ContinuationBlock()
    output: OutputBlock = OutputBlock()
    workers: int = Field(1, ge=1)
    n_samples: int = Field(200, ge=1)

    def params(self) -> ModelParams:
        if self.physical is not None:
            return nondimensionalize(PhysicalParams(**self.physical.model_dump()), self.model.epsilon)
        return ModelParams(**self.model.model_dump())

    def integration_config(self) -> IntegrationConfig:
        return IntegrationConfig(**self.integration.model_dump())


# ------------------------------------------------------------------ output


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_plain(data), fh, indent=1, sort_keys=False)
        fh.write("\n")


def _plain(o):
    if isinstance(o, dict):
        return {str(k): _plain(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_plain(v) for v in o]
    if isinstance(o, np.ndarray):
        return _plain(o.tolist())
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if np.isfinite(f) else None
    if isinstance(o, np.integer):
        return int(o)
    return o


TRAJ_HEADER = ["t", "x", "y", "regime"]
BRANCH_HEADER = ["mu", "eta", "epsilon", "x", "y", "trace", "det", "label", "event"]


# ---------------------------------------------------------------- commands


def _attractor_text(rep: dict) -> str:
    reg = rep["region"]
    parts = []
    adm_eq = [e["name"] for e in rep["equilibria"] if e["admissible"]]
    adm_q = [q for q in rep["pseudo_equilibria"] if q["admissible"]]
    seg = rep["sliding_segment"]
    atts = rep["attractors"]
    if atts == ["Gamma"]:
        parts.append("stable crossing periodic orbit")
    elif len(atts) == 2:
        parts.append("bistable " + ", ".join(atts))
    elif atts:
        parts.append(f"{atts[0]} global attractor")
    for q in adm_q:
        if q["kind"] == "saddle":
            parts.append(f"saddle pseudo-equilibrium {q['name']}")
        else:
            parts.append(f"{q['name']} {seg['stability']} pseudo-node admissible")
    if not adm_eq and not adm_q and atts != ["Gamma"]:
        parts.append("no admissible equilibria")
    return f"{reg}: " + "; ".join(parts)


def cmd_classify(cfg: ScenarioConfig, args) -> int:
    p = cfg.params()
    if p.epsilon != 0:
        raise InvalidParameterError("classify reports the epsilon = 0 region atlas; use sweep for epsilon > 0")
    rep = region_report(p.mu, p.eta, p)
    if rep["region"] is None:
        rep["summary"] = "boundary: " + ", ".join(rep["boundary"])
        print(json.dumps({"warning": "point lies on a bifurcation curve", "segments": rep["boundary"]}), file=sys.stderr)
    else:
        rep["summary"] = _attractor_text(rep)
    print(rep["summary"])
    for e in rep["equilibria"]:
        print(f"  {e['name']} = ({e['x']:.6g}, {e['y']:.6g}) {'admissible' if e['admissible'] else 'virtual'}")
    for q in rep["pseudo_equilibria"]:
        print(f"  q{q['name'][1:]} = ({q['x']:.6g}, {q['y']:.6g}) {'admissible' if q['admissible'] else 'virtual'}"
              f" {q['kind']}, sliding-{q['sliding_stability']}")
    if rep["sliding_segment"]:
        s = rep["sliding_segment"]
        print(f"  sliding segment x in ({s['x_lo']:.6g}, {s['x_hi']:.6g}), {s['stability']}")
    for t in rep["tangency_points"]:
        print(f"  {t['name']} = ({t['x']:.6g}, {t['y']:.6g}) {t['visibility']}")
    if cfg.output.path:
        out = Path(cfg.output.path)
        if cfg.output.format == "json":
            write_json(out, rep)
        else:
            rows = [(k, json.dumps(_plain(v)) if isinstance(v, (list, dict)) else v) for k, v in rep.items()]
            write_csv(out, ["key", "value"], rows)
    return EXIT_OK


def _ic_list(cfg: ScenarioConfig, p: ModelParams) -> list[State]:
    if cfg.initial_conditions is not None:
        return [State(float(a), float(b)) for a, b in cfg.initial_conditions]
    return default_ic_grid(p, cfg.grid.n_ic)


def _manifold_jobs(p: ModelParams):
    """(name, point, direction, side) for every admissible (pseudo-)equilibrium."""
    jobs = []
    if p.epsilon == 0:
        for i in (1, 2):
            e = region_equilibrium(i, p)
            g = e.y - e.x - p.eta
            if (i == 1 and g < 0) or (i == 2 and g > 0):
                for side in (-1, 1):
                    jobs.append((f"p{i}", e, "strong-stable", side))
        if p.eta != 0:
            for q in pseudo_equilibria(p):
                if q.admissible:
                    for d in ("strong-stable", "stable", "unstable", "strong-unstable"):
                        for side in (-1, 1):
                            jobs.append((f"q{q.label}", q, d, side))
    else:
        from .continuation import equilibria_all

        for n, rec in enumerate(equilibria_all(p)):
            for d in ("strong-stable", "stable", "unstable", "strong-unstable"):
                for side in (-1, 1):
                    jobs.append((f"e{n}", rec.state, d, side))
    return jobs


def _portrait_job(args):
    kind, payload, p, icfg = args
    try:
        if kind == "orbit":
            return integrate(payload, p, icfg), None
        name, point, d, side = payload
        return manifold_orbit(point, p, d, side, icfg), None
    except ManifoldTypeError:
        return None, "skip"
    except NumericalError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def cmd_portrait(cfg: ScenarioConfig, args) -> int:
    p = cfg.params()
    icfg = cfg.integration_config()
    jobs = [("orbit", s, p, icfg) for s in _ic_list(cfg, p)]
    jobs += [("manifold", m, p, icfg) for m in _manifold_jobs(p)]
    if cfg.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_portrait_job, jobs))
    else:
        results = [_portrait_job(j) for j in jobs]

    orbits, failures = [], []
    for (kind, payload, _, _), (traj, err) in zip(jobs, results):
        if kind == "orbit":
            name = f"orbit_{len([o for o in orbits if o['kind'] == 'orbit']):03d}"
            meta = {"kind": "orbit", "name": name, "initial_state": list(payload)}
        else:
            pname, _, d, side = payload
            name = f"manifold_{pname}_{d}_{'minus' if side < 0 else 'plus'}"
            meta = {"kind": "manifold", "name": name, "point": pname, "direction": d, "side": side}
        if err == "skip":
            continue
        if err is not None:
            failures.append({**meta, "error": err})
            continue
        meta["trajectory"] = traj
        orbits.append(meta)

    geometry = {"params": p.to_dict(), "switching_line": {"slope": 1.0, "intercept": p.eta}}
    if p.epsilon == 0:
        seg = sliding_segment(p)
        geometry["tangency_points"] = [
            {"name": f"F{t.field_index}", "x": t.location.x, "y": t.location.y, "visibility": t.visibility.value,
             "degenerate": t.visibility is Visibility.DEGENERATE}
            for t in tangency_points(p)
        ]
        geometry["sliding_segment"] = (
            None if seg is None else {"x_lo": seg.x_lo, "x_hi": seg.x_hi, "stability": seg.stability}
        )
        geometry["equilibria"] = [
            {"name": f"p{i}", "x": region_equilibrium(i, p).x, "y": region_equilibrium(i, p).y} for i in (1, 2)
        ]
        geometry["pseudo_equilibria"] = [] if p.eta == 0 else [
            {"name": f"q{q.label}", "x": q.location.x, "y": q.location.y, "admissible": q.admissible, "kind": q.kind}
            for q in pseudo_equilibria(p)
        ]
    else:
        from .continuation import equilibria_all

        geometry["equilibria"] = [
            {"name": f"e{n}", "x": r.state.x, "y": r.state.y, "type": r.type} for n, r in enumerate(equilibria_all(p))
        ]
    try:
        po = find_periodic_orbit(p, icfg)
    except NumericalError as exc:
        po = None
        failures.append({"kind": "periodic_orbit", "error": str(exc)})
    if po is not None:
        geometry["periodic_orbit"] = {
            "x": po.representative_state.x, "y": po.representative_state.y, "period": po.period,
            "stability": po.stability, "multiplier": po.multiplier,
        }

    out = Path(cfg.output.path or "portrait")
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    if cfg.output.format == "json":
        data = dict(geometry)
        data["orbits"] = [
            {k: v for k, v in o.items() if k != "trajectory"} | {"samples": [list(r) for r in o["trajectory"].rows()]}
            for o in orbits
        ]
        if po is not None:
            data["periodic_orbit"]["samples"] = po.samples
        data["failures"] = failures
        write_json(out / "portrait.json", data)
        manifest.append("portrait.json")
    else:
        for o in orbits:
            write_csv(out / f"{o['name']}.csv", TRAJ_HEADER, o["trajectory"].rows())
            manifest.append(f"{o['name']}.csv")
        if po is not None:
            write_csv(out / "periodic_orbit.csv", ["x", "y"], po.samples)
            manifest.append("periodic_orbit.csv")
        geometry["files"] = manifest
        geometry["orbits"] = [{k: v for k, v in o.items() if k != "trajectory"} for o in orbits]
        geometry["failures"] = failures
        write_json(out / "geometry.json", geometry)
    print(json.dumps({"written": str(out), "orbits": len(orbits), "failures": len(failures)}))
    return EXIT_OK


def _smooth_slice(p: ModelParams, window):
    from .continuation import continue_fold_curve, continue_hopf_curve, hopf_criticality

    curves, points, failures = [], [], []
    for name, fn in (("S", continue_fold_curve), ("H", continue_hopf_curve)):
        try:
            br = fn(p, window)
        except NumericalError as exc:
            failures.append({"curve": name, "error": str(exc)})
            continue
        curves.append(br)
        points += [{"kind": e.kind, "label": e.label, "mu": e.mu, "eta": e.eta, "epsilon": e.epsilon}
                   for e in br.events]
    return curves, points, failures


def _curve_json(br, eps):
    from .continuation import hopf_criticality

    subs = []
    if br.label == "H" and len(br.points):
        l1 = hopf_criticality(br)
        ok = np.isfinite(l1)
        if ok.any():
            # l1 is undefined at the BT end points; borrow the nearest defined value
            idx = np.arange(len(l1))
            l1 = np.interp(idx, idx[ok], l1[ok])
        crit = np.where(l1 < 0, "supercritical", "subcritical")
        start = 0
        for i in range(1, len(crit) + 1):
            if i == len(crit) or crit[i] != crit[start]:
                subs.append({"name": f"H-{crit[start]}", "mu_eta_polyline": br.mu_eta[start:i]})
                start = i
    else:
        subs.append({"name": br.label, "mu_eta_polyline": br.mu_eta})
    return {"label": br.label, "epsilon": eps, "sublabels": subs}


def cmd_diagram(cfg: ScenarioConfig, args) -> int:
    p = cfg.params()
    window = (tuple(cfg.window.mu), tuple(cfg.window.eta))
    out = Path(cfg.output.path or "diagram")
    out.mkdir(parents=True, exist_ok=True)
    if cfg.sweep is not None:
        return _diagram_sweep(cfg, p, window, out)
    if p.epsilon == 0:
        d = pws_diagram(p, window[0], window[1], cfg.n_samples)
        if cfg.output.format == "json":
            write_json(out / "diagram.json", d.to_json_dict())
        else:
            write_csv(out / "curves.csv", ["mu", "eta", "label", "sublabel"], d.rows())
            write_csv(out / "points.csv", ["kind", "mu", "eta"], [(q.kind, q.mu, q.eta) for q in d.points])
        print(json.dumps({"written": str(out), "curves": len(d.curves), "points": len(d.points)}))
        return EXIT_OK
    curves, points, failures = _smooth_slice(p, window)
    _write_slice(out, cfg.output.format, p.epsilon, curves, points, failures, "diagram")
    print(json.dumps({"written": str(out), "curves": len(curves), "points": len(points), "failures": failures}))
    return EXIT_OK


def _write_slice(out: Path, fmt: str, eps, curves, points, failures, stem):
    if fmt == "json":
        write_json(out / f"{stem}.json", {
            "epsilon": eps,
            "curves": [_curve_json(c, eps) for c in curves],
            "points": points,
            "failures": failures,
        })
    else:
        write_csv(out / f"{stem}.csv", BRANCH_HEADER, (r for c in curves for r in c.rows()))


def _diagram_sweep(cfg, p, window, out) -> int:
    from .continuation import continue_bt_in_epsilon, continue_cusp_locus, locate_dbt

    eps_values = cfg.sweep.values()
    gh_locus, cp_locus, failures = [], [], []
    bt_start = cusp_start = None
    for i, eps in enumerate(eps_values):
        q = p.with_(epsilon=eps)
        curves, points, fails = _smooth_slice(q, window)
        failures += [{**f, "epsilon": eps} for f in fails]
        _write_slice(out, cfg.output.format, eps, curves, points, fails, f"slice_{i:03d}")
        gh_locus += [pt for pt in points if pt["kind"] == "gh"]
        cp_locus += [pt for pt in points if pt["kind"] == "cusp"]
        for c in curves:
            for e in c.events:
                if e.kind == "bt" and bt_start is None:
                    bt_start = (e, q)
                if e.kind == "cusp" and cusp_start is None:
                    cusp_start = (e, q)
    loci = {"slices": [{"index": i, "epsilon": e} for i, e in enumerate(eps_values)], "GH": gh_locus, "CP": cp_locus}
    if bt_start is not None:
        try:
            bt = continue_bt_in_epsilon(bt_start[0], bt_start[1], window=window)
            loci["BT"] = bt.points[:, 2:5]
            mu, eta, eps = locate_dbt(bt)
            loci["DBT"] = {"mu": mu, "eta": eta, "epsilon": eps}
        except NumericalError as exc:
            failures.append({"curve": "BT", "error": str(exc)})
    if cusp_start is not None:
        try:
            cl = continue_cusp_locus(cusp_start[0], cusp_start[1], window=window)
            loci["CP_continued"] = cl.points[:, 2:5]
            if cl.events:
                g = min(cl.events, key=lambda e: e.epsilon)
                loci["GBC"] = {"mu": g.mu, "eta": g.eta, "epsilon": g.epsilon}
        except NumericalError as exc:
            failures.append({"curve": "CP", "error": str(exc)})
    loci["failures"] = failures
    write_json(out / "loci.json", loci)
    print(json.dumps({"written": str(out), "slices": len(eps_values), "failures": len(failures)}))
    return EXIT_OK


def _sweep_point(args):
    mu, eta, p, icfg, n_ic = args
    q = p.with_(mu=mu, eta=eta)
    try:
        c = attractor_census(q, icfg, default_ic_grid(q, n_ic))
    except (NumericalError, DomainError) as exc:
        return mu, eta, 0, 0, f"unknown:{type(exc).__name__}"
    if q.epsilon == 0:
        reg = classify_region(mu, eta, q)
        label = reg.value if isinstance(reg, Region) else str(reg)
    else:
        label = smooth_region_label(c)
    if c.unknown:
        label = "unknown" if q.epsilon > 0 else f"{label}|unknown"
    return mu, eta, c.n_stable_equilibria, int(c.periodic_orbit), label


def sweep_rows(p: ModelParams, window, n_mu: int, n_eta: int, icfg: IntegrationConfig, n_ic: int = 3,
               workers: int = 1) -> list[tuple]:
    mus = np.linspace(window[0][0], window[0][1], n_mu)
    etas = np.linspace(window[1][0], window[1][1], n_eta)
    jobs = [(float(m), float(e), p, icfg, n_ic) for e in etas for m in mus]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_sweep_point, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    return [_sweep_point(j) for j in jobs]


def cmd_sweep(cfg: ScenarioConfig, args) -> int:
    p = cfg.params()
    icfg = cfg.integration_config()
    if cfg.integration == IntegrationBlock():
        icfg = IntegrationConfig(max_step=1.0, t_max=500.0)
    rows = sweep_rows(p, (cfg.window.mu, cfg.window.eta), cfg.grid.n_mu, cfg.grid.n_eta, icfg, cfg.grid.n_ic,
                      cfg.workers)
    header = ["mu", "eta", "n_stable_eq", "cycle_flag", "region_label"]
    out = Path(cfg.output.path or "sweep.csv")
    if cfg.output.format == "json":
        write_json(out, [dict(zip(header, r)) for r in rows])
    else:
        write_csv(out, header, rows)
    print(json.dumps({"written": str(out), "points": len(rows), "cycles": sum(r[3] for r in rows)}))
    return EXIT_OK


def cmd_continue_eq(cfg: ScenarioConfig, args) -> int:
    from .continuation import StepSettings, continue_equilibrium, equilibria_all

    p = cfg.params()
    c = cfg.continuation
    starts = [c.guess] if c.guess is not None else [r.state for r in equilibria_all(p)]
    branches = []
    for s in starts:
        br = continue_equilibrium(p, State(*s), c.free_param, StepSettings(h_max=c.h_max), c.bounds)
        if any(np.min(np.abs(b.points[:, :3] - br.points[len(br.points) // 2, :3]).sum(axis=1)) < 1e-6
               for b in branches):
            continue
        branches.append(br)
    out = Path(cfg.output.path or "branch.csv")
    if cfg.output.format == "json":
        write_json(out, {
            "free_param": c.free_param,
            "params": p.to_dict(),
            "branches": [
                {"points": [dict(zip(BRANCH_HEADER, r)) for r in b.rows()], "status": b.status} for b in branches
            ],
        })
    else:
        write_csv(out, BRANCH_HEADER, (r for b in branches for r in b.rows()))
    events = [{"kind": e.kind, "mu": e.mu, "eta": e.eta} for b in branches for e in b.events]
    print(json.dumps({"written": str(out), "branches": len(branches), "events": events}))
    return EXIT_OK


def cmd_bt_locate(cfg: ScenarioConfig, args) -> int:
    from .continuation import locate_dbt, locate_gbc

    p = cfg.params()
    dbt = locate_dbt(kappa1=p.kappa1, kappa2=p.kappa2)
    gbc = locate_gbc(kappa1=p.kappa1, kappa2=p.kappa2)
    rows = [("DBT", *dbt), ("GBC", *gbc)]
    header = ["kind", "mu", "eta", "epsilon"]
    if cfg.output.path:
        out = Path(cfg.output.path)
        if cfg.output.format == "json":
            write_json(out, [dict(zip(header, r)) for r in rows])
        else:
            write_csv(out, header, rows)
    print(json.dumps([dict(zip(header, r)) for r in rows]))
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "portrait": cmd_portrait,
    "diagram": cmd_diagram,
    "sweep": cmd_sweep,
    "continue-eq": cmd_continue_eq,
    "bt-locate": cmd_bt_locate,
}


# ------------------------------------------------------------------ parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mu", type=float)
    common.add_argument("--eta", type=float)
    common.add_argument("--kappa1", type=float)
    common.add_argument("--kappa2", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--config", type=Path, help="JSON scenario file; flags override its fields")
    common.add_argument("--out", help="output file (classify, sweep, continue-eq, bt-locate) or directory")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--workers", type=int)

    parser = argparse.ArgumentParser(prog="welander", description="Adjusted Welander model analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    c = sub.add_parser("classify", parents=[common], help="region and Filippov geometry of one (mu, eta) point")
    c.add_argument("mu_pos", nargs="?", type=float, metavar="MU")
    c.add_argument("eta_pos", nargs="?", type=float, metavar="ETA")
    sub.add_parser("portrait", parents=[common], help="trajectories, manifolds and geometry for a phase portrait")
    d = sub.add_parser("diagram", parents=[common], help="two-parameter bifurcation diagram")
    d.add_argument("--sweep-epsilon", action="store_true", help="sweep epsilon over the configured slices")
    s = sub.add_parser("sweep", parents=[common], help="attractor census on a (mu, eta) grid")
    s.add_argument("--n-mu", type=int)
    s.add_argument("--n-eta", type=int)
    e = sub.add_parser("continue-eq", parents=[common], help="equilibrium branch in one parameter")
    e.add_argument("--free", choices=("mu", "eta"))
    sub.add_parser("bt-locate", parents=[common], help="locate the DBT and GBC points")
    return parser


def load_config(args) -> ScenarioConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidParameterError(f"cannot read config: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidParameterError("config must be a JSON object")
    model = dict(data.get("model") or {})
    for key in ("mu", "eta", "kappa1", "kappa2", "epsilon"):
        v = getattr(args, key, None)
        if v is not None:
            model[key] = v
    if getattr(args, "mu_pos", None) is not None:
        model["mu"] = args.mu_pos
    if getattr(args, "eta_pos", None) is not None:
        model["eta"] = args.eta_pos
    data["model"] = model
    output = dict(data.get("output") or {})
    if args.out is not None:
        output["path"] = args.out
    if args.format is not None:
        output["format"] = args.format
    data["output"] = output
    if args.workers is not None:
        data["workers"] = args.workers
    if getattr(args, "n_mu", None) is not None or getattr(args, "n_eta", None) is not None:
        grid = dict(data.get("grid") or {})
        if args.n_mu is not None:
            grid["n_mu"] = args.n_mu
        if args.n_eta is not None:
            grid["n_eta"] = args.n_eta
        data["grid"] = grid
    if getattr(args, "free", None) is not None:
        data["continuation"] = dict(data.get("continuation") or {}) | {"free_param": args.free}
    if getattr(args, "sweep_epsilon", False) and data.get("sweep") is None:
        data["sweep"] = {}
    cfg = ScenarioConfig.model_validate(data)
    cfg.params()  # model invariants are checked before dispatch
    return cfg


def _fail(code: int, exc: BaseException) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
    except ValidationError as exc:
        return _fail(EXIT_INVALID, exc)
    except (InvalidParameterError, DomainError, ValueError) as exc:
        return _fail(EXIT_INVALID, exc)
    try:
        return COMMANDS[args.command](cfg, args)
    except (InvalidParameterError, DomainError) as exc:
        return _fail(EXIT_INVALID, exc)
    except (NumericalError, WelanderError) as exc:
        return _fail(EXIT_NUMERICAL, exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
