import numpy as np
import pytest

from pacurves.curve import frenet_apparatus
from pacurves.errors import (
    DomainError,
    InfeasibleProfileError,
    InputError,
    NearOrthogonalError,
    ParallelCaseError,
)
from pacurves.expr import sample
from pacurves.manifold import model_from_spec
from pacurves.numerics import Grid
from pacurves.pa_analysis import analyze
from pacurves.pa_synthesis import (
    load_presets,
    pa_curvatures_3d,
    synthesize_from_params,
    synthesize_orthogonal,
    synthesize_pa_3d,
    synthesize_pa_surface,
    validate_params,
)
from pacurves.properties import random_pa_triple

from conftest import max_abs

E3 = model_from_spec("euclidean:3")


def _g(a=-1.0, b=1.0, h=1e-3):
    return Grid.uniform(a, b, h)


def _lstsq_sphere(x):
    # |x|^2 = 2 x.c + (R^2 - |c|^2), linear in (c, k)
    A = np.column_stack([2 * x, np.ones(len(x))])
    sol = np.linalg.lstsq(A, (x * x).sum(axis=1), rcond=None)[0]
    c = sol[:3]
    return c, np.sqrt(sol[3] + c @ c)


def test_sphere_example_lies_on_unit_sphere():
    g = _g(-0.9, 0.9)
    res = synthesize_pa_3d(E3, sample("1", g), sample("pi - asin(s)", g), sample("0", g))
    assert res.passed
    k = res.profile.curvatures
    assert max_abs(k[0].values - 1 / np.sqrt(1 - g.s ** 2)) < 1e-10
    assert max_abs(k[1].values - 1 / np.sqrt(1 - g.s ** 2)) < 1e-10
    center, radius = _lstsq_sphere(res.curve.points)
    assert abs(radius - 1) < 1e-6
    assert max_abs(np.linalg.norm(res.curve.points - center, axis=1) - 1) < 1e-6
    assert max_abs(res.extras["sphere_center"] - center) < 1e-6


def test_torsion_free_data_infeasible():
    # lam0 = 0 with constant theta forces tau = 0: a planar curve has no binormal freedom
    g = _g()
    with pytest.raises(InfeasibleProfileError) as ei:
        pa_curvatures_3d(sample("1", g), sample("2.5", g), sample("0", g))
    assert ei.value.intervals


def test_negative_kappa_reports_intervals():
    g = _g()
    with pytest.raises(InfeasibleProfileError) as ei:
        pa_curvatures_3d(sample("1", g), sample("0.5", g), sample("0", g))
    (a, b), = ei.value.intervals
    assert a == pytest.approx(-1) and b == pytest.approx(1)


def test_slack_violation_infeasible():
    g = _g()
    with pytest.raises(InfeasibleProfileError) as ei:
        pa_curvatures_3d(sample("1", g), sample("2.8", g), sample("0.5*s", g))
    for a, b in ei.value.intervals:
        assert a < b and (a > 0.5 or b < -0.5)


def test_near_orthogonal_rejected():
    g = _g()
    with pytest.raises(NearOrthogonalError):
        pa_curvatures_3d(sample("1", g), sample("pi/2", g), sample("0.1", g))


def test_orthogonal_case_tau_is_tanh():
    g = _g(-1.5, 1.5)
    res = synthesize_orthogonal(E3, sample("1", g), sample("sech(s)", g))
    assert res.passed
    kappa, tau = res.profile.curvatures
    assert max_abs(tau.values / kappa.values - np.sinh(g.s)) < 1e-12
    fr = frenet_apparatus(E3, res.curve)
    assert max_abs(fr.curvatures[1].values - np.tanh(g.s)) < 1e-6


def test_orthogonal_sign_flip_negates_lam1_and_tau():
    g = _g(-1.5, 1.5)
    a = synthesize_orthogonal(E3, sample("1", g), sample("sech(s)", g), sign=1, verify=False)
    b = synthesize_orthogonal(E3, sample("1", g), sample("sech(s)", g), sign=-1)
    assert b.passed
    assert max_abs(a.profile.curvatures[1].values + b.profile.curvatures[1].values) < 1e-14
    la = a.extras["p"].values
    assert max_abs(b.extras["orthogonal"].p.values - la) < 1e-8
    assert b.extras["orthogonal"].branch == -1


def test_orthogonal_parallel_and_kappa_errors():
    g = _g()
    with pytest.raises(ParallelCaseError):
        synthesize_orthogonal(E3, sample("0", g), sample("1", g))
    with pytest.raises(InfeasibleProfileError):
        synthesize_orthogonal(E3, sample("1", g), sample("s", g))


def test_orthogonal_warped_short_span():
    g = _g(-1, 1)
    m = model_from_spec("warped:3:cosh(t)")
    res = synthesize_orthogonal(m, sample("0.5", g), sample("1 + 0.2*s^2", g), r=0.2)
    assert res.passed, [q for q in res.quantities if not q["pass"]]


@pytest.mark.parametrize("spec,f,theta,kexp", [
    ("euclidean:2", "0", "atan(sinh(s))", "sech(s)"),
    ("halfspace:2", "1", "atan(sinh(2*s))", "sech(2*s)"),
    ("euclidean:2", "2", "pi/3", "-1"),
])
def test_surface_cases(spec, f, theta, kexp):
    g = _g(-1.5, 1.5)
    m = model_from_spec(spec)
    p0 = [0.0, 1.0] if spec.startswith("half") else None
    res = synthesize_pa_surface(m, sample(f, g), sample(theta, g), p0=p0)
    assert res.passed
    fr = frenet_apparatus(m, res.curve, signed=True)
    assert max_abs(fr.curvatures[0].values - sample(kexp, g).values) < 1e-6


def test_surface_leaving_halfplane_raises():
    g = Grid.uniform(0, 20, 1e-2)
    m = model_from_spec("halfspace:2")
    with pytest.raises(DomainError):
        synthesize_pa_surface(m, sample("0", g), sample("0", g), p0=[0.0, 1.0], T0=[0.0, -1.0])


@pytest.mark.parametrize("spec", ["euclidean:3", "sphere:3:1.3", "hyperboloid:3", "warped:3:cosh(t)"])
def test_random_round_trips(spec, rng):
    m = model_from_spec(spec)
    g = _g(-0.5, 0.5, 2e-3)
    for _ in range(2):
        (f, th, l0, sign), _ = random_pa_triple(rng, g)
        res = synthesize_pa_3d(m, f.series(g), th.series(g), l0.series(g), sign)
        assert res.passed, [q for q in res.quantities if not q["pass"]]


@pytest.mark.parametrize("spec", ["sphere:3", "hyperboloid:3:0.7"])
def test_lancret_in_curved_space_forms(spec):
    g = _g(-0.8, 0.8)
    m = model_from_spec(spec)
    res = synthesize_pa_3d(m, sample("1", g), sample("pi - asin(s)", g), sample("0", g))
    assert res.passed
    assert abs(res.extras["lancret"].r0 - 1) < 1e-5


def test_negative_branch_round_trip():
    g = _g()
    res = synthesize_pa_3d(E3, sample("0.5 + 0.2*sin(s)", g), sample("2.2 + 0.1*s", g),
                           sample("0.3*cos(s)", g), sign=-1)
    assert res.passed
    assert np.all(res.extras["lam1"].values < 0)


@pytest.mark.parametrize("name", sorted(load_presets()))
def test_presets_verify_and_analyze(name):
    params = load_presets()[name]
    res = synthesize_from_params(params)
    assert res.passed, [q for q in res.quantities if not q["pass"]]
    m = model_from_spec(params["model"])
    assert analyze(m, res.curve, res.field).passed


def test_param_validation():
    with pytest.raises(InputError):
        validate_params({"kind": "pa3d", "f": "1"})
    with pytest.raises(InputError):
        validate_params({"kind": "nope"})
    with pytest.raises(InputError):
        validate_params({"kind": "surface", "f": "1", "theta": "1", "colour": 1})
    with pytest.raises(InputError):
        validate_params({"kind": "surface", "f": "1", "theta": "1", "span": [1, 0]})
    p = validate_params({"kind": "surface", "f": "1", "theta": "1"})
    assert p["model"] == "euclidean:2" and p["span"] == [-1.0, 1.0]
