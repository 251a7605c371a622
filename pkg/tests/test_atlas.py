import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from welander.atlas import (
    REGION_ATTRACTORS,
    Boundary,
    Region,
    be_curve,
    classify_region,
    codim2_points,
    pws_diagram,
    ps_curve,
    ps_formula,
    ps_interval,
    region_report,
    segment_label,
)
from welander.errors import DomainError
from welander.filippov import lie1, sliding_field, tangency_points
from welander.model import ModelParams, region_equilibrium

P = ModelParams(0.0, 0.0)
CAPTIONS = {
    Region.I: (0.0225, 0.35), Region.II: (0.385, 0.35), Region.III: (0.975, 0.35),
    Region.IV: (0.0225, -0.2), Region.V: (0.25, -0.2), Region.VI: (0.525, -0.2),
    Region.VII: (0.0987, -0.463), Region.VIII: (-0.115, -0.95),
}


def brute_signature(mu, eta, p):
    """(sign eta, p1 admissible, p2 admissible, admissible pseudo-equilibria) by direct evaluation."""
    q = p.with_(mu=mu, eta=eta)
    e1, e2 = region_equilibrium(1, q), region_equilibrium(2, q)
    a1 = e1.y - e1.x - eta < 0
    a2 = e2.y - e2.x - eta > 0
    # roots of the sliding numerator located by sign changes on a fine grid, kept if on the sliding part
    xs = np.linspace(-5, 5, 200001)
    f = sliding_field(xs, q)
    n = 0
    for i in np.nonzero((f[:-1] * f[1:] < 0) | (f[:-1] == 0))[0]:
        x = xs[i] if f[i] == 0 else 0.5 * (xs[i] + xs[i + 1])
        n += lie1(1, x, q) * lie1(2, x, q) < 0
    return (eta > 0, a1, a2, n)


def region_from_signature(sig):
    pos, a1, a2, n = sig
    if pos:
        return Region.I if a1 else Region.III if a2 else Region.II
    if a1:
        return Region.VIII if a2 else Region.IV
    if not a2:
        return Region.V
    return Region.VII if n == 2 else Region.VI


@pytest.mark.parametrize("region", list(Region))
def test_caption_points(region):
    mu, eta = CAPTIONS[region]
    assert classify_region(mu, eta, P) is region
    assert region_from_signature(brute_signature(mu, eta, P)) is region


def test_be_curve_captions():
    assert be_curve(1, 0.1259, P) == pytest.approx(0.35, abs=1e-4)
    assert be_curve(2, 0.3, P) == pytest.approx(-0.2, abs=1e-15)
    assert be_curve(1, 0.0209, P) == pytest.approx(-0.70009, abs=1e-5)


def test_ps_curve():
    lo = 0.1**2 / 1.1**2
    assert ps_formula(lo) == pytest.approx(-1 / 1.1**2, abs=1e-12)
    assert ps_formula(0.25) == pytest.approx(-0.25, abs=1e-15)
    assert ps_curve(0.09, P) == pytest.approx(-0.49, abs=1e-15)
    assert ps_curve(0.3, P) is None
    assert ps_curve(0.001, P) is None
    with pytest.raises(DomainError):
        ps_curve(-0.1, P)


def test_codim2_points_values():
    pts = {q.kind: (q.mu, q.eta) for q in codim2_points(P)}
    assert pts["FB1"] == pytest.approx((0.090909, 0.0), abs=1e-6)
    assert pts["FB2"] == pytest.approx((0.5, 0.0))
    assert pts["GB2"] == pytest.approx((0.25, -0.25))
    assert pts["BB"] == pytest.approx((0.0454545, -0.4545), abs=1e-4)
    assert pts["GB1"] == pytest.approx((0.0082645, -0.82645), abs=1e-5)


kappas = st.tuples(st.floats(0.01, 3.0), st.floats(1.1, 30.0)).map(lambda t: ModelParams(0, 0, t[0], t[0] * t[1]))


@given(kappas)
def test_codim2_points_lie_on_their_curves(p):
    pts = {q.kind: q for q in codim2_points(p)}
    for i in (1, 2):
        fb = pts[f"FB{i}"]
        assert fb.eta == 0 and be_curve(i, fb.mu, p) == pytest.approx(0, abs=1e-12)
        gb = pts[f"GB{i}"]
        assert be_curve(i, gb.mu, p) == pytest.approx(gb.eta, abs=1e-12)
        assert ps_formula(gb.mu) == pytest.approx(gb.eta, abs=1e-12)
    bb = pts["BB"]
    assert be_curve(1, bb.mu, p) == pytest.approx(bb.eta, abs=1e-12)
    assert be_curve(2, bb.mu, p) == pytest.approx(bb.eta, abs=1e-12)


@given(kappas, st.floats(-0.3, 1.5), st.sampled_from([1, 2]))
def test_boundary_equilibrium_coincides_with_tangency(p, mu, i):
    q = p.with_(mu=mu, eta=be_curve(i, mu, p))
    e = region_equilibrium(i, q)
    f = tangency_points(q)[i - 1].location
    assert max(abs(e.x - f.x), abs(e.y - f.y)) < 1e-12 * max(1.0, abs(e.y))


@pytest.mark.parametrize("curve,mu,eta,label", [
    ("FF", 0.25, 0.0, "FU"), ("FF", 0.05, 0.0, "FF1"), ("FF", 0.7, 0.0, "FF2"),
    ("BE2", 0.14, -0.36, "^BE2^F"), ("BE2", 0.4, -0.1, "^BE2^P"),
    ("BE2", 0.0, -0.5, "BE2^F"),
    ("BE2", 0.3, -0.2, "^BE2^P"), ("BE2", 0.7, 0.2, "BE2^P"),
    # GB1 < mu < BB is the persistence piece separating VII from VIII; left of GB1 is the fold piece
    ("BE1", -0.0141, -0.141 - 1 / 1.1, "BE1^F"), ("BE1", 0.1259, 1.259 - 1 / 1.1, "BE1^P"),
    ("BE1", 0.07, 0.7 - 1 / 1.1, "^BE1^P"), ("BE1", 0.0209, 0.209 - 1 / 1.1, "~BE1^P"),
])
def test_segment_labels(curve, mu, eta, label):
    assert segment_label(curve, mu, eta, P) == label


def test_segment_label_off_curve_raises():
    with pytest.raises(DomainError):
        segment_label("FF", 0.25, 0.1, P)
    with pytest.raises(DomainError):
        segment_label("BE1", 0.25, 0.1, P)


def test_boundary_indicator():
    b = classify_region(0.25, 0.0, P)
    assert isinstance(b, Boundary) and b.segments == ("FU",)
    b = classify_region(0.3, -0.2, P)
    assert isinstance(b, Boundary) and b.segments == ("^BE2^P",)
    assert isinstance(classify_region(0.09, -0.49, P), Boundary)


def test_grid_cross_validation():
    mus = np.linspace(-0.2, 1.0, 100)
    etas = np.linspace(-1.2, 0.6, 100)
    checked = 0
    for mu, eta in itertools.product(mus, etas):
        r = classify_region(mu, eta, P, tol=1e-3)
        if isinstance(r, Boundary):
            continue
        sig = brute_signature(mu, eta, P) if r in (Region.VI, Region.VII) else None
        if sig is None:
            q = P.with_(mu=mu, eta=eta)
            e1, e2 = region_equilibrium(1, q), region_equilibrium(2, q)
            sig = (eta > 0, e1.y - e1.x < eta, e2.y - e2.x > eta, -1)
        assert region_from_signature(sig) is r, (mu, eta)
        checked += 1
    assert checked > 9000


def test_default_diagram_shape():
    d = pws_diagram(P)
    assert [c.label for c in d.curves] == ["BE1", "BE2", "FF", "PS"]
    assert len(d.points) == 5 and len(d.regions) == 8
    assert dict((r.value, s) for r, s in d.regions)["V"] == "periodic"
    for c in d.curves:
        for name, poly in c.sublabels:
            if c.label == "FF":
                assert np.all(poly[:, 1] == 0.0)
            elif c.label == "PS":
                np.testing.assert_allclose(poly[:, 1], -(poly[:, 0] + 1) + 2 * np.sqrt(poly[:, 0]), atol=1e-12)
            else:
                i = int(c.label[-1])
                np.testing.assert_allclose(poly[:, 1], poly[:, 0] / P.kappa(i) - 1 / (1 + P.kappa(i)), atol=1e-12)
    # sublabel boundaries land on the codimension-two points
    pts = {q.kind: q for q in d.points}
    be1 = dict(d.curves[0].sublabels)
    assert be1["~BE1^P"][0, 0] == pytest.approx(pts["GB1"].mu, abs=1e-10)
    assert be1["~BE1^P"][-1, 0] == pytest.approx(pts["BB"].mu, abs=1e-10)
    ps = d.curves[3].sublabels[0][1]
    assert ps[0] == pytest.approx([pts["GB1"].mu, pts["GB1"].eta], abs=1e-10)
    assert ps[-1] == pytest.approx([pts["GB2"].mu, pts["GB2"].eta], abs=1e-10)
    with pytest.raises(DomainError):
        pws_diagram(P, n_samples=0)


def _curve(name, mu, p):
    if name == "FF":
        return 0.0
    if name == "PS":
        return ps_formula(mu)
    return be_curve(int(name[-1]), mu, p)


def _incidence(p):
    """Region pairs on either side of each curve piece leaving each codimension-two point."""
    d = 1e-2 * min(abs(a.mu - b.mu) for a, b in itertools.combinations(codim2_points(p), 2))
    diag = pws_diagram(p, mu_range=(-5.0, 5.0), eta_range=(-5.0, 5.0), n_samples=3)
    inc = {}
    for q in codim2_points(p):
        edges = set()
        for c in diag.curves:
            for name, poly in c.sublabels:
                for end, other in ((poly[0], poly[-1]), (poly[-1], poly[0])):
                    if math.hypot(end[0] - q.mu, end[1] - q.eta) > 1e-10:
                        continue
                    mu = q.mu + d * np.sign(other[0] - end[0])
                    eta = _curve(c.label, mu, p)
                    # stay well inside the thinnest neighbouring region (PS touches BE quadratically)
                    gaps = [abs(_curve(o.label, mu, p) - eta) for o in diag.curves if o.label != c.label
                            and (o.label != "PS" or ps_interval(p)[0] <= mu <= ps_interval(p)[1])]
                    delta = 0.25 * min(gaps)
                    sides = [classify_region(mu, eta + s * delta, p, tol=1e-15) for s in (-1, 1)]
                    assert all(isinstance(r, Region) for r in sides), (q.kind, name, sides)
                    edges.add((name.replace("~", "").replace("^", ""), frozenset(r.value for r in sides)))
        inc[q.kind] = frozenset(edges)
    return inc


def test_topology_is_stable_in_kappa():
    ref = _incidence(P)
    assert {k: len(e) for k, e in ref.items()} == {"FB1": 4, "FB2": 4, "BB": 4, "GB1": 3, "GB2": 3}
    fb1 = {frozenset(r) for _, r in ref["FB1"]}
    assert fb1 == {frozenset({"I", "IV"}), frozenset({"II", "V"}), frozenset({"I", "II"}), frozenset({"IV", "V"})}
    rng = np.random.default_rng(7)
    for _ in range(10):
        k1 = float(rng.uniform(0.02, 2.0))
        k2 = k1 * float(rng.uniform(1.5, 20.0))
        assert _incidence(ModelParams(0, 0, k1, k2)) == ref, (k1, k2)


def test_region_report_contents():
    rep = region_report(0.25, -0.2, P)
    assert rep["region"] == "V" and rep["attractors"] == list(REGION_ATTRACTORS[Region.V])
    assert rep["sliding_segment"]["stability"] == "repelling"
    qp = [q for q in rep["pseudo_equilibria"] if q["name"] == "q+"][0]
    assert qp["admissible"] and qp["kind"] == "node"
    rep = region_report(0.25, 0.0, P)
    assert rep["region"] is None and rep["boundary"] == ["FU"]
