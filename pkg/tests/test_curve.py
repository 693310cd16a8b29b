import numpy as np
import pytest

from pacurves.curve import (
    ArcLengthCurve,
    CurvatureProfile,
    arclength_reparametrize,
    frenet_apparatus,
    frenet_synthesize,
)
from pacurves.errors import DegenerateCurveError, InputError, RegularityError
from pacurves.expr import sample
from pacurves.manifold import model_from_spec
from pacurves.numerics import Grid

from conftest import max_abs

E3 = model_from_spec("euclidean:3")


def helix(a, b, g, derivs=True):
    w = 1 / np.hypot(a, b)
    s = g.s[:, None]
    x = np.hstack([a * np.cos(w * s), a * np.sin(w * s), b * w * s])
    v = np.hstack([-a * w * np.sin(w * s), a * w * np.cos(w * s), b * w + 0 * s])
    x2 = np.hstack([-a * w ** 2 * np.cos(w * s), -a * w ** 2 * np.sin(w * s), 0 * s])
    x3 = np.hstack([a * w ** 3 * np.sin(w * s), -a * w ** 3 * np.cos(w * s), 0 * s])
    return ArcLengthCurve(E3, g, x, v, (x2, x3) if derivs else ())


@pytest.mark.parametrize("a,b", [(1.0, 0.5), (2.0, -1.0), (0.5, 3.0)])
@pytest.mark.parametrize("derivs", [True, False])
def test_helix_curvatures(a, b, derivs):
    g = Grid.uniform(0, 2, 1e-3)
    F = frenet_apparatus(E3, helix(a, b, g, derivs))
    assert max_abs(F.kappa.values - a / (a * a + b * b)) < 1e-9
    assert max_abs(F.tau.values - b / (a * a + b * b)) < 1e-7


def test_frenet_fd_second_order_convergence():
    errs = []
    for h in (0.02, 0.01):
        g = Grid.uniform(0, 2, h)
        F = frenet_apparatus(E3, helix(1.0, 0.5, g, derivs=False), order=2)
        errs.append(max_abs(F.tau.values - 0.4))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2, abs=0.5)


def test_frame_orthonormal_and_frenet_equations_hold():
    g = Grid.uniform(0, 2, 1e-3)
    c = helix(1.0, 0.5, g)
    F = frenet_apparatus(E3, c)
    assert F.gram_defect(E3, c.points).max() < 1e-12
    assert F.frenet_residual(E3, c).max() < 1e-8


def test_straight_line_is_degenerate():
    g = Grid.uniform(0, 1, 1e-2)
    x = np.column_stack([g.s, 0 * g.s, 0 * g.s])
    v = np.column_stack([1 + 0 * g.s, 0 * g.s, 0 * g.s])
    with pytest.raises(DegenerateCurveError):
        frenet_apparatus(E3, ArcLengthCurve(E3, g, x, v))


def test_non_unit_speed_rejected():
    g = Grid.uniform(0, 1, 1e-2)
    x = np.column_stack([2 * g.s, 0 * g.s, 0 * g.s])
    with pytest.raises(RegularityError):
        ArcLengthCurve(E3, g, x, np.tile([2.0, 0, 0], (len(g), 1)))


def test_synthesis_reproduces_helix():
    g = Grid.uniform(0, 3, 1e-3)
    prof = CurvatureProfile([sample("0.8", g), sample("0.4", g)])
    curve, F = frenet_synthesize(E3, prof)
    ref = helix(1.0, 0.5, g)
    # align: canonical initial frame vs the helix frame at s = 0
    F0 = frenet_apparatus(E3, ref)
    R = F.frames[0].T @ F0.frames[0]
    pts = (ref.points - ref.points[0]) @ R.T
    assert max_abs(curve.points - pts) < 1e-10
    assert curve.audit.max_gram_defect < 1e-12


@pytest.mark.parametrize("spec", ["sphere:3:2", "hyperboloid:3", "halfspace:3", "warped:3:cosh(t)"])
def test_synthesis_round_trip_in_curved_models(spec):
    m = model_from_spec(spec)
    g = Grid.uniform(-1, 1, 1e-3)
    prof = CurvatureProfile([sample("1 + 0.3*sin(s)", g), sample("0.5*cos(2*s)", g)])
    curve, _ = frenet_synthesize(m, prof)
    F = frenet_apparatus(m, curve)
    assert max_abs(F.kappa.values - prof.kappa.values) < 1e-8
    assert max_abs(F.tau.values - prof.tau.values) < 1e-6


def test_small_circle_on_sphere_geodesic_curvature():
    # latitude circle at polar angle a on the unit 2-sphere: kappa = cot a
    m = model_from_spec("sphere:2")
    a = 0.7
    g = Grid.uniform(0, 2, 1e-3)
    u = g.s[:, None] / np.sin(a)
    x = np.hstack([np.sin(a) * np.cos(u), np.sin(a) * np.sin(u), np.cos(a) + 0 * u])
    v = np.hstack([-np.sin(u), np.cos(u), 0 * u])
    F = frenet_apparatus(m, ArcLengthCurve(m, g, x, v))
    assert max_abs(F.kappa.values - 1 / np.tan(a)) < 1e-8


def test_signed_curvature_in_plane():
    m = model_from_spec("euclidean:2")
    g = Grid.uniform(0, 1, 1e-3)
    # clockwise unit circle: signed curvature -1, Frenet curvature +1
    x = np.column_stack([np.cos(-g.s), np.sin(-g.s)])
    v = np.column_stack([np.sin(-g.s), -np.cos(-g.s)])
    c = ArcLengthCurve(m, g, x, v)
    assert np.allclose(frenet_apparatus(m, c).kappa.values, 1, atol=1e-9)
    assert np.allclose(frenet_apparatus(m, c, signed=True).kappa.values, -1, atol=1e-9)


def test_reparametrize_cubic_parameter():
    # circle traversed with t -> t^3 + t; arc length of the result is exact
    g = Grid.uniform(0, 1, 1e-3)
    t = g.s
    phi = t ** 3 + t
    dphi = 3 * t ** 2 + 1
    pts = np.column_stack([np.cos(phi), np.sin(phi), 0 * t])
    vel = np.column_stack([-np.sin(phi) * dphi, np.cos(phi) * dphi, 0 * t])
    c = arclength_reparametrize(E3, g, pts, vel)
    assert c.s[-1] == pytest.approx(2.0, abs=1e-10)
    assert max_abs(c.points[:, 0] - np.cos(c.s)) < 1e-9


def test_reparametrize_rejects_stalled_curve():
    g = Grid.uniform(-1, 1, 1e-2)
    pts = np.column_stack([g.s ** 3, 0 * g.s, 0 * g.s])
    vel = np.column_stack([3 * g.s ** 2, 0 * g.s, 0 * g.s])
    with pytest.raises(RegularityError):
        arclength_reparametrize(E3, g, pts, vel)


def test_bad_initial_frame():
    g = Grid.uniform(0, 1, 1e-2)
    prof = CurvatureProfile([sample("1", g), sample("1", g)])
    with pytest.raises(InputError):
        frenet_synthesize(E3, prof, frame0=np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(InputError):
        frenet_synthesize(E3, prof, frame0=2 * np.eye(3))
