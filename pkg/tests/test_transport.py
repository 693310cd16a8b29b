import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pacurves.errors import InputError, UnsupportedModelError
from pacurves.manifold import FieldAlongCurve, covariant_derivative_along, model_from_spec
from pacurves.numerics import Grid, Series
from pacurves.properties import random_curve
from pacurves.transport import (
    TORQUED_NOTE,
    TorseFormingLaw,
    builtin_field,
    estimate_law,
    transport_field,
    transport_fields,
)

from conftest import max_abs

CATALOG = [
    ("warped:3:cosh(t)", "concircular", {}),
    ("warped:3:cosh(t)", "anti-torqued", {}),
    ("warped:3:exp(t)", "torqued", {"h": "exp(x/2)"}),
    ("warped:3:cosh(t)", "torqued", {"h": "2 + sin(x)"}),
    ("euclidean:3", "concircular", {"r": 0.7, "center": [0.1, -0.2, 0.3]}),
    ("euclidean:3", "anti-torqued", {"center": [5.0, 0.0, 0.0]}),
    ("euclidean:3", "parallel", {"v": [0.0, 0.6, 0.8]}),
    ("sphere:3:1.5", "concircular", {"v": [0.3, 0.1, -0.2, 1.0]}),
    ("hyperboloid:3:0.8", "concircular", {"v": [0.3, 0.1, -0.2, 1.0]}),
    ("halfspace:3", "anti-torqued", {}),
]


def _curve(spec, rng, g=None):
    m = model_from_spec(spec)
    g = g or Grid.uniform(0, 1, 1e-3)
    if m.kind == "warped":
        # a curve moving in both t and x (random_curve only moves along t)
        from pacurves.curve import frenet_synthesize, CurvatureProfile
        from pacurves.expr import sample

        prof = CurvatureProfile([sample("1.2", g), sample("0.3", g)])
        return m, frenet_synthesize(m, prof, frame0=_warped_frame(m))[0]
    return m, random_curve(m, g, rng)


def _warped_frame(m):
    p = m.default_point()
    a = 0.6
    F = np.array([[np.cos(a), np.sin(a), 0], [-np.sin(a), np.cos(a), 0], [0, 0, 1.0]])
    return F @ m.canonical_frame(p)


@pytest.mark.parametrize("spec,kind,params", CATALOG)
def test_catalog_fields_satisfy_their_law(spec, kind, params, rng):
    # brute force: differentiate the field along a curve and compare with f T + omega V
    m, c = _curve(spec, rng)
    fld = builtin_field(m, kind, **params)
    V, law = fld.along(c)
    D = covariant_derivative_along(m, c, V).vectors
    pred = law.f.values[:, None] * c.velocity + law.omega.values[:, None] * V.vectors
    assert max_abs(m.norm(c.points, D - pred)) < 1e-8


@pytest.mark.parametrize("spec,kind,params", CATALOG)
def test_estimate_law_classifies_catalog(spec, kind, params, rng):
    m, c = _curve(spec, rng)
    V, law = builtin_field(m, kind, **params).along(c)
    est = estimate_law(m, c, V)
    assert est.torse_forming
    assert max_abs(est.law.f.values - law.f.values) < 1e-6
    assert max_abs(est.law.omega.values - law.omega.values) < 1e-6
    if kind == "torqued":
        assert est.law.kind == "generic" and est.law.note == TORQUED_NOTE
    elif kind == "anti-torqued" and spec.startswith("euclidean"):
        # Phi/|Phi| is unit, so it is anti-torqued; not concircular along generic curves
        assert est.law.kind == "anti-torqued"
    else:
        assert est.law.kind == kind


def test_non_torse_forming_field_flagged(rng):
    m, c = _curve("euclidean:3", rng)
    s = c.s
    V = FieldAlongCurve(c, np.column_stack([np.cos(2 * s), np.sin(2 * s), 0.5 + 0 * s]))
    est = estimate_law(m, c, V)
    assert not est.torse_forming
    assert "not torse-forming" in est.law.note


def test_transport_reproduces_concircular_position_field(rng):
    m, c = _curve("euclidean:3", rng)
    r, center = 0.7, np.array([0.1, -0.2, 0.3])
    law = TorseFormingLaw.concircular(Series.constant(c.grid, r))
    W = transport_field(m, c, law, r * (c.points[0] - center))
    assert max_abs(W.vectors - r * (c.points - center)) < 1e-10


@pytest.mark.parametrize("spec", ["sphere:3:1.5", "hyperboloid:3:0.8", "halfspace:3"])
def test_transport_reproduces_catalog_field(spec, rng):
    m, c = _curve(spec, rng)
    kind = "anti-torqued" if spec.startswith("half") else "concircular"
    V, law = builtin_field(m, kind, v=[0.3, 0.1, -0.2, 1.0]).along(c) if kind == "concircular" \
        else builtin_field(m, kind).along(c)
    W = transport_field(m, c, law, V.vectors[0])
    # componentwise: the Lorentz form of a tiny difference can round negative
    assert max_abs(W.vectors - V.vectors) < 1e-9


def test_batched_transport_matches_single(rng):
    m = model_from_spec("sphere:3")
    g = Grid.uniform(0, 1, 1e-2)
    curves = [random_curve(m, g, rng) for _ in range(3)]
    laws = [TorseFormingLaw.anti_torqued(Series(g, 0.5 + 0.1 * k * g.s)) for k in range(3)]
    V0 = []
    for c in curves:
        v = m.tangent_project(c.points[0], rng.normal(size=4))
        V0.append(v / m.norm(c.points[0], v))
    batch = transport_fields(m, curves, laws, V0)
    for c, law, v0, b in zip(curves, laws, V0, batch):
        assert np.array_equal(transport_field(m, c, law, v0).vectors, b.vectors)


@settings(max_examples=15, deadline=None)
@given(f0=st.floats(-2, 2), f1=st.floats(-1, 1), angle=st.floats(0.2, 3.0))
def test_anti_torqued_closure_keeps_unit_length(f0, f1, angle):
    m = model_from_spec("halfspace:2")
    g = Grid.uniform(0, 1, 1e-2)
    rng = np.random.default_rng(0)
    c = random_curve(m, g, rng)
    T0 = c.velocity[0] * c.points[0, -1]
    R = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    V0 = (R @ T0) / c.points[0, -1]
    law = TorseFormingLaw.anti_torqued(Series(g, f0 + f1 * np.sin(3 * g.s)))
    V = transport_field(m, c, law, V0)
    assert max_abs(m.norm(c.points, V.vectors) - 1) < 1e-8


def test_input_validation(rng):
    m, c = _curve("sphere:3:1.5", rng)
    law = TorseFormingLaw.parallel(c.grid)
    with pytest.raises(InputError):
        transport_field(m, c, law, c.points[0])  # normal, not tangent
    with pytest.raises(InputError):
        transport_field(m, c, law, [1.0, 0.0])
    other = TorseFormingLaw.parallel(Grid.uniform(0, 2, 1e-3))
    with pytest.raises(InputError):
        transport_field(m, c, other, c.velocity[0])
    with pytest.raises(UnsupportedModelError):
        builtin_field(model_from_spec("halfspace:3"), "concircular")
