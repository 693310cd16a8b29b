import numpy as np
import pytest
import sympy as sp

from pacurves.curve import ArcLengthCurve, CurvatureProfile, frenet_apparatus
from pacurves.errors import (
    DegenerateCurveError,
    InputError,
    NearOrthogonalError,
    ParallelCaseError,
    TorsionVanishingError,
)
from pacurves.expr import sample
from pacurves.golden import load_fixture
from pacurves.manifold import FieldAlongCurve, model_from_spec
from pacurves.numerics import Grid, Series
from pacurves.pa_analysis import (
    analyze,
    curvatures_from_pa,
    decompose,
    geodesic_sphere_residual,
    halfplane_curvature,
    lancret_concircular_check,
    orthogonal_angle_analysis,
    pa_system_residuals,
    sphere_potential_fit,
    surface_pa_curvature,
)

from conftest import max_abs


def test_middle_equation_is_an_identity_symbolically():
    # with kappa, tau solved from the T and B rows, the N row holds
    # identically once lam1^2 = 1 - lam0^2 - c^2
    s = sp.Symbol("s")
    f, l0, c = (sp.Function(n)(s) for n in ("f", "l0", "c"))
    l1 = sp.sqrt(1 - l0 ** 2 - c ** 2)
    kappa = (l0.diff(s) - f * (1 - l0 ** 2)) / c
    tau = -(f * l0 * l1 + l1.diff(s)) / c
    middle = c.diff(s) + kappa * l0 - tau * l1 + f * l0 * c
    assert sp.simplify(middle) == 0


def _helix(a=1.0, b=0.5, span=(-1.0, 1.0), h=1e-3):
    g = Grid.uniform(*span, h)
    w = 1 / np.hypot(a, b)
    s = g.s
    x = np.column_stack([a * np.cos(w * s), a * np.sin(w * s), b * w * s])
    v = np.column_stack([-a * w * np.sin(w * s), a * w * np.cos(w * s), b * w + 0 * s])
    x2 = np.column_stack([-a * w * w * np.cos(w * s), -a * w * w * np.sin(w * s), 0 * s])
    x3 = np.column_stack([a * w ** 3 * np.sin(w * s), -a * w ** 3 * np.cos(w * s), 0 * s])
    m = model_from_spec("euclidean:3")
    return m, ArcLengthCurve(m, g, x, v, (x2, x3))


def test_decomposition_of_g4_matches_closed_form():
    fx = load_fixture("G4")
    fr = frenet_apparatus(fx.model, fx.curve, signed=True)
    d = decompose(fx.model, fx.field, fr)
    s = fx.grid.s
    assert max_abs(d.cos_theta.values + np.sqrt(1 - s ** 2)) < 1e-8
    assert max_abs(d.lam0.values) < 1e-8
    assert max_abs(d.lam1.values - s) < 1e-8
    assert max_abs(d.norm_defect()) < 1e-12


def test_curvatures_from_pa_modes_agree_on_g4():
    fx = load_fixture("G4")
    fr = frenet_apparatus(fx.model, fx.curve, signed=True)
    d = decompose(fx.model, fx.field, fr)
    s = fx.grid.s
    k_exact = 1 / np.sqrt(1 - s ** 2)
    for mode in ("general3d", "concircular"):
        prof = curvatures_from_pa(fx.law.f, d, mode=mode)
        assert max_abs(prof.curvatures[0].values - k_exact) < 1e-6
        assert max_abs(prof.curvatures[1].values - k_exact) < 1e-6
    rep = pa_system_residuals(fr, fx.law, d)
    assert rep.max() < 1e-6


def test_pa_system_flags_wrong_law():
    fx = load_fixture("G4")
    fr = frenet_apparatus(fx.model, fx.curve, signed=True)
    d = decompose(fx.model, fx.field, fr)
    wrong = type(fx.law).concircular(Series.constant(fx.grid, 2.0))
    assert pa_system_residuals(fr, wrong, d).max() > 0.1


def test_decompose_rejects_non_unit_field():
    fx = load_fixture("G4")
    fr = frenet_apparatus(fx.model, fx.curve, signed=True)
    with pytest.raises(InputError):
        decompose(fx.model, FieldAlongCurve(fx.curve, 2 * fx.field.vectors), fr)


def test_geodesic_sphere_residual_nonzero_for_helix():
    m, c = _helix()
    fr = frenet_apparatus(m, c)
    # helix: kappa, tau constant so the residual is tau/kappa = 0.5
    assert geodesic_sphere_residual(fr).max() == pytest.approx(0.5, abs=1e-8)


def test_geodesic_sphere_residual_vanishes_on_g4():
    fx = load_fixture("G4")
    fr = frenet_apparatus(fx.model, fx.curve, signed=True)
    assert geodesic_sphere_residual(fr).max() < 1e-4


def test_geodesic_sphere_needs_torsion():
    g = Grid.uniform(0, 1, 1e-2)
    m = model_from_spec("euclidean:3")
    s = g.s
    c = ArcLengthCurve(m, g, np.column_stack([np.cos(s), np.sin(s), 0 * s]),
                       np.column_stack([-np.sin(s), np.cos(s), 0 * s]))
    with pytest.raises(TorsionVanishingError):
        geodesic_sphere_residual(frenet_apparatus(m, c))


def test_sphere_potential_fit_g4():
    fx = load_fixture("G4")
    fr = frenet_apparatus(fx.model, fx.curve, signed=True)
    d = decompose(fx.model, fx.field, fr)
    a, b, rms = sphere_potential_fit(fx.law.f, d.lifted)
    assert abs(a) < 1e-6 and abs(b - 1) < 1e-6 and rms < 1e-8


def test_lancret_check_true_for_g4_false_for_varying_ratio():
    fx = load_fixture("G4")
    fr = frenet_apparatus(fx.model, fx.curve, signed=True)
    d = decompose(fx.model, fx.field, fr)
    rep = lancret_concircular_check(fx.law.f, d.lifted, fr)
    assert rep.is_lancret and abs(rep.r0 - 1) < 1e-6
    assert rep.residuals.max() < 1e-5
    g = fx.grid
    prof = CurvatureProfile([Series.constant(g, 1.0), Series(g, 1 + 0.3 * g.s)])
    bad = lancret_concircular_check(fx.law.f, d.lifted, prof)
    assert not bad.is_lancret


def test_orthogonal_analysis_on_g3():
    fx = load_fixture("G3")
    fr = frenet_apparatus(fx.model, fx.curve, signed=True)
    d = decompose(fx.model, fx.field, fr)
    with pytest.raises(NearOrthogonalError):
        curvatures_from_pa(fx.law.f, d)
    rep = orthogonal_angle_analysis(fr, fx.law.f, d)
    assert rep.residuals.max() < 1e-4
    with pytest.raises(ParallelCaseError):
        orthogonal_angle_analysis(fr, Series.constant(fx.grid, 0.0), d)


def test_surface_curvature_constant_angle():
    # constant angle in the plane: kappa = -cos(theta) f
    g = Grid.uniform(-1, 1, 1e-3)
    th = sample("pi/3", g)
    out = surface_pa_curvature(sample("2", g), th)
    assert max_abs(out.kappa.values + 1.0) < 1e-12


def test_surface_grim_check_on_g5():
    fx = load_fixture("G5")
    fr = frenet_apparatus(fx.model, fx.curve, signed=True)
    d = decompose(fx.model, fx.field, fr)
    out = surface_pa_curvature(fx.law.f, d.lifted, grim_check=True)
    assert max_abs(out.kappa.values - 1 / np.cosh(fx.grid.s)) < 1e-6
    assert out.grim.max() < 1e-6


def test_halfplane_two_paths_agree_on_g6():
    fx = load_fixture("G6")
    fr = frenet_apparatus(fx.model, fx.curve, signed=True)
    k = halfplane_curvature(fx.curve, signed=True)
    assert max_abs(k.values - fr.curvatures[0].values) < 1e-8
    with pytest.raises(InputError):
        halfplane_curvature(load_fixture("G5").curve)


def test_analyze_reports_every_fixture_field():
    for fid in ("G3", "G4", "G5", "G6"):
        fx = load_fixture(fid)
        rep = analyze(fx.model, fx.curve, fx.field)
        assert rep.passed, (fid, [q for q in rep.quantities if not q["pass"]])


def test_analyze_straight_line_raises():
    g = Grid.uniform(0, 1, 1e-2)
    m = model_from_spec("euclidean:3")
    s = g.s
    c = ArcLengthCurve(m, g, np.column_stack([s, 0 * s, 0 * s]),
                       np.column_stack([1 + 0 * s, 0 * s, 0 * s]))
    with pytest.raises(DegenerateCurveError):
        analyze(m, c)
