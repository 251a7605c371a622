import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import welander.continuation as cont
from welander.atlas import Boundary, classify_region, curve_distances
from welander.continuation import (
    BranchPoint,
    bt_epsilon,
    classify_jacobian,
    continue_equilibrium,
    equilibria_all,
    first_lyapunov,
    first_lyapunov_fd,
    fold_curve_closed_form,
    hopf_criticality,
    hopf_curve_closed_form,
    record_at,
    smooth_diagram,
    solve_equilibrium,
)
from welander.errors import ConvergenceError, DomainError, InvalidParameterError
from welander.filippov import pseudo_equilibria
from welander.flow import IntegrationConfig, find_periodic_orbit
from welander.model import ModelParams, State, jacobian_smooth, region_equilibrium, vector_field_smooth

P01 = ModelParams(0.0, -0.5, epsilon=0.1)


@pytest.fixture(scope="module")
def diagram():
    return smooth_diagram(P01)


def logit_of(x, y, mu, eta, eps):
    return 2 * (y - x - eta) / eps


# ---------------------------------------------------------------- equilibria


def test_solve_equilibrium_examples():
    a1 = solve_equilibrium(ModelParams(0.01, -0.4, epsilon=0.1), (0.9, 0.1))
    assert a1.type == "stable-node"
    assert (a1.state.x, a1.state.y) == pytest.approx((1 / 1.1, 0.1), abs=1e-3)
    assert a1.residual < 1e-10
    assert np.abs(vector_field_smooth(a1.state, a1.params)).max() < 1e-10
    a2 = solve_equilibrium(ModelParams(0.1, -0.4, epsilon=0.1), (0.7, 0.4))
    assert a2.type == "stable-focus" and a2.discriminant < 0
    with pytest.raises(InvalidParameterError):
        solve_equilibrium(ModelParams(0.1, -0.4), (0.7, 0.4))


def test_solve_equilibrium_failure_reports_residual():
    with pytest.raises(ConvergenceError) as info:
        solve_equilibrium(ModelParams(0.1, -0.4, epsilon=0.1), (1e200, -1e200), max_iter=3)
    assert info.value.residual is None or info.value.residual > 0


@pytest.mark.parametrize("t,d,kind", [(-1, 1, "stable-focus"), (-3, 1, "stable-node"), (1, 1, "unstable-focus"),
                                      (3, 1, "unstable-node"), (0.5, -1, "saddle")])
def test_classify_jacobian(t, d, kind):
    assert classify_jacobian(t, d) == kind


def types(p):
    return sorted(e.type for e in equilibria_all(p))


def test_equilibria_counts_by_region():
    assert len(equilibria_all(ModelParams(0.1, -0.4, epsilon=0.1))) == 1
    d = types(ModelParams(0.01, -0.65, epsilon=0.1))
    assert len(d) == 3 and d.count("saddle") == 1 and sum(t.startswith("stable") for t in d) == 2
    c = types(ModelParams(0.04, -0.575, epsilon=0.1))
    assert len(c) == 3 and c.count("saddle") == 1
    assert sum(t.startswith("stable") for t in c) == 1 and sum(t.startswith("unstable") for t in c) == 1


@given(st.floats(-0.1, 0.8), st.floats(-1.0, 0.4), st.floats(0.02, 0.3))
@settings(max_examples=30, deadline=None)
def test_equilibria_all_roots_are_distinct_zeros(mu, eta, eps):
    p = ModelParams(mu, eta, epsilon=eps)
    eqs = equilibria_all(p)
    assert 1 <= len(eqs) <= 3
    for e in eqs:
        assert np.abs(vector_field_smooth(e.state, p)).max() < 1e-10
        J = jacobian_smooth(e.state, p)
        assert e.trace == pytest.approx(np.trace(J), abs=1e-9)
        assert e.det == pytest.approx(np.linalg.det(J), abs=1e-9 * max(1, abs(e.det)))
    xs = [e.state.x for e in eqs]
    assert all(abs(a - b) > 1e-6 for i, a in enumerate(xs) for b in xs[i + 1:])


# ---------------------------------------------------------------- closed forms


@given(st.floats(-8, 8), st.floats(0.005, 0.3))
def test_closed_form_fold_is_a_fold(t, eps):
    p = ModelParams(0.0, 0.0, epsilon=eps)
    mu, eta, x, y = fold_curve_closed_form(t, p)
    q = p.with_(mu=float(mu), eta=float(eta))
    scale = max(1.0, abs(y))
    assert np.abs(vector_field_smooth((x, y), q)).max() < 1e-11 * scale
    assert abs(np.linalg.det(jacobian_smooth((x, y), q))) < 1e-8 * max(1.0, 1 / eps)


@given(st.floats(-6, 6), st.floats(0.005, 0.3))
def test_closed_form_hopf_has_zero_trace(t, eps):
    p = ModelParams(0.0, 0.0, epsilon=eps)
    mu, eta, x, y = hopf_curve_closed_form(t, p)
    if not np.isfinite(mu):
        return
    q = p.with_(mu=float(mu), eta=float(eta))
    J = jacobian_smooth((x, y), q)
    assert np.abs(vector_field_smooth((x, y), q)).max() < 1e-11 * max(1.0, abs(y))
    assert abs(np.trace(J)) < 1e-8 * max(1.0, 1 / eps)


def test_bt_epsilon_limits():
    assert bt_epsilon(0.1) == pytest.approx(0.0)
    assert bt_epsilon(1.0) == pytest.approx(0.0)
    k = np.linspace(0.1, 1.0, 2001)
    assert float(np.max(bt_epsilon(k))) == pytest.approx(0.147, abs=0.005)


# ---------------------------------------------------------------- one-parameter continuation


def test_slice_through_region_d_has_two_folds():
    p = ModelParams(-0.1, -0.65, epsilon=0.1)
    (rec,) = equilibria_all(p)
    br = continue_equilibrium(p, rec, "mu", bounds=(-0.1, 0.3))
    folds = sorted(e.mu for e in br.events if e.kind == "fold")
    assert len(folds) == 2 and folds[0] < 0.01 < folds[1]
    for e in br.events:
        rec = record_at(e, p)
        assert abs(rec.det if e.kind == "fold" else rec.trace) < 1e-8
        if e.kind == "hopf":
            assert rec.det > 0


def test_slice_eta_minus_half_has_hopf_bounding_oscillations():
    p = ModelParams(-0.1, -0.5, epsilon=0.1)
    (rec,) = equilibria_all(p)
    br = continue_equilibrium(p, rec, "mu", bounds=(-0.1, 0.4))
    hopfs = sorted(e.mu for e in br.events if e.kind == "hopf")
    assert hopfs and any(abs(m - 0.07) < 0.1 for m in hopfs)
    # the equilibrium at (0.07, -0.5) is an unstable focus, so it sits inside the oscillation region
    (eq,) = [e for e in equilibria_all(ModelParams(0.07, -0.5, epsilon=0.1))]
    assert eq.type.startswith("unstable")
    for e in br.events:
        r = record_at(e, p)
        if e.kind == "hopf":
            assert abs(r.trace) < 1e-8 and r.det > 0
            ev = np.linalg.eigvals(r.jacobian())
            assert np.abs(ev.real).max() < 1e-8


def test_branch_samples_are_newton_fixed_points():
    p = ModelParams(-0.1, -0.65, epsilon=0.1)
    (rec,) = equilibria_all(p)
    br = continue_equilibrium(p, rec, "mu", bounds=(-0.1, 0.3))
    rows = list(br.rows())
    assert rows and len(rows[0]) == 9
    for X in br.points[:: max(1, len(br.points) // 25)]:
        q = p.with_(mu=float(X[2]))
        again = solve_equilibrium(q, (X[0], X[1]))
        assert again.residual < 1e-10
        assert max(abs(again.state.x - X[0]), abs(again.state.y - X[1])) < 1e-9


def test_continue_equilibrium_rejects_bad_parameter():
    with pytest.raises(InvalidParameterError):
        continue_equilibrium(P01, (0.9, 0.1), "epsilon")


# ---------------------------------------------------------------- two-parameter curves at eps = 0.1


def test_fold_curve_structure(diagram):
    S, _ = diagram
    kinds = sorted(e.label for e in S.events)
    assert kinds == ["BT1", "BT2", "CP"]
    for e in S.events:
        r = record_at(e, P01)
        assert abs(r.det) < 1e-8 and r.residual < 1e-10
        if e.kind == "bt":
            assert abs(r.trace) < 1e-8


def test_fold_samples_lie_on_closed_form(diagram):
    S, _ = diagram
    for x, y, mu, eta in S.points[:: max(1, len(S.points) // 60)]:
        t = logit_of(x, y, mu, eta, 0.1)
        m, e = (float(v) for v in fold_curve_closed_form(t, P01)[:2])
        assert (mu, eta) == pytest.approx((m, e), abs=1e-8)


def test_hopf_curve_structure(diagram):
    S, H = diagram
    labels = sorted(e.label for e in H.events)
    assert labels == ["BT1", "BT2", "GH1", "GH2"]
    s_bt = sorted((e.mu, e.eta) for e in S.events if e.kind == "bt")
    h_bt = sorted((e.mu, e.eta) for e in H.events if e.kind == "bt")
    for a, b in zip(s_bt, h_bt):
        assert a == pytest.approx(b, abs=1e-6)
    for e in H.events:
        r = record_at(e, P01)
        assert abs(r.trace) < 1e-8
    for x, y, mu, eta in H.points[:: max(1, len(H.points) // 60)]:
        t = logit_of(x, y, mu, eta, 0.1)
        m, e = (float(v) for v in hopf_curve_closed_form(t, P01)[:2])
        if not np.isfinite(m):
            # only the BT end points sit on the det = 0 edge of the closed form's domain
            assert abs(np.linalg.det(jacobian_smooth(State(x, y), P01.with_(mu=mu, eta=eta)))) < 1e-8
            continue
        assert (mu, eta) == pytest.approx((m, e), abs=1e-8)


def test_hopf_criticality_changes_sign_at_gh(diagram):
    _, H = diagram
    l1 = hopf_criticality(H)
    finite = np.isfinite(l1)
    assert (l1[finite] < 0).any() and (l1[finite] > 0).any()
    # supercritical near the region-B slice
    rec = min(
        (record_at(BranchPoint("hopf", State(X[0], X[1]), X[2], X[3], 0.1), P01) for X in H.points),
        key=lambda r: abs(r.params.eta + 0.5) + abs(r.params.mu - 0.07),
    )
    assert first_lyapunov(rec) < 0
    for g in (e for e in H.events if e.kind == "gh"):
        r = record_at(g, P01)
        assert abs(cont.test_function("l1", r.state.x, r.state.y, g.mu, g.eta, 0.1, 0.1, 0.9)) < 1e-6 * \
            np.nanmax(np.abs(l1))


def test_first_lyapunov_matches_finite_differences(diagram):
    _, H = diagram
    rng = np.random.default_rng(3)
    l1 = hopf_criticality(H)
    # near BT l1 grows like 1/det and a fixed difference step stops resolving it
    idx = [i for i in range(len(H.points)) if np.isfinite(l1[i]) and record_at(
        BranchPoint("hopf", State(*H.points[i][:2]), H.points[i][2], H.points[i][3], 0.1), P01).det > 1e-2]
    for i in rng.choice(idx, 5, replace=False):
        X = H.points[i]
        r = record_at(BranchPoint("hopf", State(X[0], X[1]), X[2], X[3], 0.1), P01)
        a, b = first_lyapunov(r), first_lyapunov_fd(r)
        assert a == pytest.approx(b, rel=0.05)


def test_first_lyapunov_domain_errors():
    r = equilibria_all(ModelParams(0.1, -0.4, epsilon=0.1))[0]
    with pytest.raises(DomainError):
        first_lyapunov(r)
    d = [e for e in equilibria_all(ModelParams(0.01, -0.65, epsilon=0.1)) if e.type == "saddle"][0]
    with pytest.raises(DomainError):
        first_lyapunov(d)


@pytest.mark.slow
def test_hopf_amplitude_scales_as_square_root():
    eta = -0.5
    p = ModelParams(-0.1, eta, epsilon=0.1)
    (rec,) = equilibria_all(p)
    br = continue_equilibrium(p, rec, "mu", bounds=(-0.1, 0.4))
    # supercritical crossing nearest the region-B point
    h = min((e for e in br.events if e.kind == "hopf"), key=lambda e: abs(e.mu - 0.07))
    assert first_lyapunov(record_at(h, p)) < 0
    inside = 1 if equilibria_all(p.with_(mu=h.mu + 1e-3))[0].type.startswith("unstable") else -1
    cfg = IntegrationConfig(rel_tol=1e-11, abs_tol=1e-13, t_max=2000.0)
    amps = []
    for d in (1e-3, 1e-4):
        po = find_periodic_orbit(p.with_(mu=h.mu + inside * d), cfg)
        assert po is not None and po.stability == "stable"
        amps.append(np.ptp(po.samples[:, 1]))
    assert amps[0] / amps[1] == pytest.approx(math.sqrt(10), rel=0.2)


# ---------------------------------------------------------------- smooth to PWS


def pws_equilibria(mu, eta, p):
    q = p.with_(mu=mu, eta=eta, epsilon=0.0)
    out = []
    for i in (1, 2):
        e = region_equilibrium(i, q)
        g = e.y - e.x - eta
        if (i == 1 and g < 0) or (i == 2 and g > 0):
            out.append(e)
    out += [pe.location for pe in pseudo_equilibria(q) if pe.admissible]
    return sorted(out)


def test_small_epsilon_equilibria_match_pws_census():
    rng = np.random.default_rng(11)
    p = ModelParams(0.0, 0.0, epsilon=0.005)
    done = 0
    while done < 20:
        mu, eta = rng.uniform(-0.15, 0.9), rng.uniform(-1.1, 0.5)
        if min(curve_distances(mu, eta, p).values()) < 0.03 or isinstance(classify_region(mu, eta, p), Boundary):
            continue
        smooth = sorted(e.state for e in equilibria_all(p.with_(mu=mu, eta=eta)))
        ref = pws_equilibria(mu, eta, p)
        assert len(smooth) == len(ref), (mu, eta)
        for a, b in zip(smooth, ref):
            assert max(abs(a.x - b.x), abs(a.y - b.y)) < 0.02, (mu, eta)
        done += 1
