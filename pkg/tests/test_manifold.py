import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from pacurves.errors import DomainError, InputError, UsageError
from pacurves.manifold import (
    Euclidean,
    FieldAlongCurve,
    HyperbolicHalfSpace,
    Sphere,
    WarpedProduct,
    covariant_derivative_along,
    model_from_spec,
)

from conftest import max_abs


def symbolic_christoffel(metric_diag, coords):
    """Gamma^k_ij of a diagonal metric, as a lambdified callable."""
    n = len(coords)
    g = sp.diag(*metric_diag)
    ginv = g.inv()
    G = [[[sp.simplify(sum(ginv[k, l] * (sp.diff(g[l, i], coords[j]) + sp.diff(g[l, j], coords[i])
                                         - sp.diff(g[i, j], coords[l])) for l in range(n)) / 2)
           for j in range(n)] for i in range(n)] for k in range(n)]
    return sp.lambdify(coords, G, "numpy")


@pytest.mark.parametrize("model,metric", [
    (HyperbolicHalfSpace(3), lambda x: [1 / x[2] ** 2] * 3),
    (WarpedProduct(3, "cosh(t)"), lambda x: [1, sp.cosh(x[0]) ** 2, sp.cosh(x[0]) ** 2]),
    (WarpedProduct(3, "exp(2*t)"), lambda x: [1, sp.exp(4 * x[0]), sp.exp(4 * x[0])]),
])
def test_christoffel_matches_symbolic_metric(model, metric, rng):
    coords = sp.symbols("x0:3", real=True)
    Gam = symbolic_christoffel(metric(coords), coords)
    for _ in range(5):
        p = rng.uniform(0.3, 1.5, 3)
        u, v = rng.normal(size=3), rng.normal(size=3)
        G = np.array(Gam(*p), dtype=float)
        want = np.einsum("kij,i,j->k", G, u, v)
        assert np.allclose(model.christoffel(p, u, v), want, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=9, max_size=9))
def test_connection_is_metric_compatible(vals):
    # d<V,W> along a velocity u equals <nabla_u V, W> + <V, nabla_u W>
    m = WarpedProduct(3, "cosh(t)")
    p = np.array(vals[:3]) * 0.3
    u, v, w = np.array(vals[:3]), np.array(vals[3:6]), np.array(vals[6:9])
    h = 1e-6
    dg = (m.inner(p + h * u, v, w) - m.inner(p - h * u, v, w)) / (2 * h)
    rhs = m.inner(p, m.christoffel(p, u, v), w) + m.inner(p, v, m.christoffel(p, u, w))
    assert dg == pytest.approx(rhs, abs=1e-6 * (1 + abs(dg)))


def test_great_circle_is_geodesic_on_sphere():
    from pacurves.curve import ArcLengthCurve
    from pacurves.numerics import Grid

    m = Sphere(2, 2.0)
    g = Grid.uniform(0, 3, 1e-3)
    s = g.s[:, None]
    pts = np.hstack([2 * np.cos(s / 2), 2 * np.sin(s / 2), 0 * s])
    vel = np.hstack([-np.sin(s / 2), np.cos(s / 2), 0 * s])
    c = ArcLengthCurve(m, g, pts, vel)
    acc = covariant_derivative_along(m, c, FieldAlongCurve(c, vel)).vectors
    assert max_abs(acc) < 1e-9


def test_embedded_projection_is_idempotent(rng):
    for m in (model_from_spec("sphere:3:1.5"), model_from_spec("hyperboloid:3:0.7")):
        p = m.project_point(np.r_[rng.normal(size=3), 3.0])
        assert abs(m.constraint_defect(p)) < 1e-12
        v = m.tangent_project(p, rng.normal(size=4))
        assert np.allclose(m.tangent_project(p, v), v, atol=1e-12)
        assert abs(m.ambient_inner(v, p)) < 1e-12


@pytest.mark.parametrize("spec", ["euclidean:3", "halfspace:3", "warped:3:cosh(t)", "sphere:3:2",
                                  "hyperboloid:3", "euclidean:2", "halfspace:2"])
def test_complete_frame_is_positive_orthonormal(spec, rng):
    m = model_from_spec(spec)
    p = m.default_point()
    F = m.canonical_frame(p)
    G = (F * m.metric_diag(p)) @ F.T
    assert np.allclose(G, np.eye(m.dim), atol=1e-12)
    assert m.volume(p, F) > 0
    last = m.complete_frame(p, F[:-1])
    assert np.allclose(last, F[-1], atol=1e-12)


def test_halfspace_domain():
    m = HyperbolicHalfSpace(2)
    with pytest.raises(DomainError):
        m.check_points(np.array([0.0, -1.0]))


@pytest.mark.parametrize("spec", ["torus:2", "euclidean", "sphere:x", "euclidean:1"])
def test_bad_model_specs(spec):
    with pytest.raises((UsageError, InputError, ValueError)):
        model_from_spec(spec)


def test_model_spec_round_trip():
    for spec in ["euclidean:3", "sphere:3:2", "warped:3:cosh(t)"]:
        assert model_from_spec(spec).spec == spec
    assert isinstance(model_from_spec("euclidean:4"), Euclidean)


def test_warped_exp_frame_field_along_t_line():
    # rho = e^t: e1 = e^{-t} d_x is parallel along t-lines, while nabla_{e1} d_t = e1
    from pacurves.curve import ArcLengthCurve
    from pacurves.manifold import FieldAlongCurve, covariant_derivative_along
    from pacurves.numerics import Grid

    m = WarpedProduct(3, "exp(t)")
    g = Grid.uniform(-1, 1, 1e-3)
    s = g.s
    z = np.zeros_like(s)
    curve = ArcLengthCurve(m, g, np.column_stack([s, z, z]), np.column_stack([1 + z, z, z]))
    e1 = np.column_stack([z, np.exp(-s), z])
    D = covariant_derivative_along(m, curve, FieldAlongCurve(curve, e1)).vectors
    assert np.max(np.abs(D)) < 1e-9
    dt = np.column_stack([1 + z, z, z])
    assert np.allclose(m.christoffel(curve.points, e1, dt), e1, atol=1e-14)
