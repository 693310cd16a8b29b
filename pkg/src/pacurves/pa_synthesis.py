"""Construct PA curves and their torse-forming fields from prescribed data.

Given the potential f, the angle theta and (in dimension 3) the tangential
coefficient lam0, the compatibility system fixes the curvatures; the curve
is then integrated from the Frenet equations and the field assembled from
its frame. Every construction is verified by analysing the result again.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .curve import CurvatureProfile, frenet_apparatus, frenet_synthesize
from .errors import (
    InfeasibleProfileError,
    InputError,
    NearOrthogonalError,
    ParallelCaseError,
    PACurvesError,
)
from .expr import sample
from .manifold import Euclidean, FieldAlongCurve, Model, model_from_spec
from .numerics import DEFAULT_STEP, Grid, Series, cumulative_integral
from .pa_analysis import (
    COS_MIN,
    ZERO_F,
    decompose,
    geodesic_sphere_residual,
    lancret_concircular_check,
    orthogonal_angle_analysis,
)
from .transport import TorseFormingLaw, estimate_law, transport_field

FEASIBILITY_MARGIN = 1e-8
ROUND_TRIP_TOL = 1e-5
LAW_RESIDUAL_TOL = 1e-6
TRANSPORT_TOL = 1e-6
MIDDLE_EQ_TOL = 1e-8
ANALYSIS_TOL = 1e-4


def _funcs(x: Series):
    """Closed-form value and derivative of a series, else Hermite splines."""
    if hasattr(x.func, "diff"):
        return x.func, x.func.diff()
    sp = CubicHermiteSpline(x.s, x.values, x.derivative(6))
    return sp, sp.derivative()


def _intervals(s, mask) -> List[tuple]:
    out = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return out
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.r_[idx[0], idx[breaks + 1]]
    ends = np.r_[idx[breaks], idx[-1]]
    return [(float(s[a]), float(s[b])) for a, b in zip(starts, ends)]


def _check_grids(*series):
    g = series[0].grid
    for x in series[1:]:
        if not g.same_as(x.grid):
            raise InputError("prescribed profiles live on different grids")
    return g


def _q(name, err, tol):
    err = np.atleast_1d(np.abs(np.asarray(err, dtype=float)))
    mx = float(np.max(err))
    return {"name": name, "max_err": mx, "rms": float(np.sqrt(np.mean(err ** 2))),
            "tolerance": float(tol), "pass": bool(np.isfinite(mx) and mx <= tol)}


@dataclass(eq=False)
class SynthesisResult:
    """Synthesized curve and field with the verification quantities."""

    curve: object
    field: FieldAlongCurve
    frenet: object
    profile: CurvatureProfile
    law: TorseFormingLaw
    quantities: List[dict] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(q["pass"] for q in self.quantities)

    def quantity(self, name: str) -> dict:
        for q in self.quantities:
            if q["name"] == name:
                return q
        raise KeyError(name)


def _verify_common(res: SynthesisResult, model: Model, expected: dict):
    """Analyse the synthesized curve again and compare with the inputs."""
    curve, V = res.curve, res.field
    qs = res.quantities
    F = frenet_apparatus(model, curve, signed=True)
    for i, (got, want) in enumerate(zip(F.curvatures, res.profile.curvatures)):
        qs.append(_q(f"round_trip:kappa_{i + 1}", got.values - want.values, ROUND_TRIP_TOL))
    D = decompose(model, V, F)
    for name, want in expected.items():
        got = {"cos_theta": D.cos_theta.values, "lam0": D.lam0.values,
               "lam1": D.lambdas[-1].values if len(D.lambdas) > 1 else None,
               "theta": D.lifted.values}[name]
        if got is not None:
            qs.append(_q(f"round_trip:{name}", got - want, ROUND_TRIP_TOL))
    est = estimate_law(model, curve, V)
    qs.append(_q("law_residual", est.residual.values, LAW_RESIDUAL_TOL))
    qs.append(_q("round_trip:f", est.law.f.values - res.law.f.values, ROUND_TRIP_TOL))
    omega = -res.law.f.values * model.inner(curve.points, V.vectors, curve.velocity)
    qs.append(_q("round_trip:omega", est.law.omega.values - omega, ROUND_TRIP_TOL))
    W = transport_field(model, curve, TorseFormingLaw.anti_torqued(res.law.f), V.vectors[0])
    qs.append(_q("transported_vs_assembled", model.norm(curve.points, W.vectors - V.vectors),
                 TRANSPORT_TOL))
    res.extras.update(frenet=F, decomposition=D, estimate=est)
    return F, D, est


@dataclass(eq=False)
class PACurvatures3D:
    """Curvatures forced by (f, theta, lam0) in dimension 3, with the
    pointwise data they were computed from.

    ``parts(s)`` returns f, cos(theta), cos(theta)', lam0, lam0', lam1,
    lam1' at arbitrary s (closed forms where available).
    """

    kappa: Series
    tau: Series
    lam1: Series
    parts: object
    zero_lam0: bool

    @property
    def profile(self) -> CurvatureProfile:
        return CurvatureProfile([self.kappa, self.tau])

    def middle_residual(self) -> np.ndarray:
        """Residual of the N-component equation after substituting kappa, tau.

        It vanishes identically because the other two equations and
        lam0^2 + cos^2 + lam1^2 = 1 imply it.
        """
        s = self.kappa.s
        fv, cc, dc, l0, dl0, l1, dl1 = (np.broadcast_to(a, s.shape) for a in self.parts(s))
        return -fv * l0 * cc - dc - l0 * self.kappa.values + l1 * self.tau.values


def pa_curvatures_3d(f: Series, theta: Series, lambda0: Series, sign: int = 1) -> PACurvatures3D:
    """kappa and tau of a PA curve in a 3-manifold from (f, theta, lam0).

    lam1 = sign * sqrt(1 - lam0^2 - cos^2 theta); when lam0 vanishes
    identically lam1 = sign * sin(theta) instead, so theta may run past
    pi (lam1 then changes sign smoothly). Then
    kappa = (lam0' - f (1 - lam0^2)) / cos(theta),
    tau = -(f lam0 lam1 + lam1') / cos(theta).

    Raises
    ------
    NearOrthogonalError
        If |cos theta| < 1e-4 somewhere.
    InfeasibleProfileError
        If lam0^2 + cos^2 theta > 1 - 1e-8, if kappa <= 0, or if the torsion
        vanishes identically; ``intervals`` lists the offending s-ranges.
    """
    if sign not in (1, -1):
        raise InputError("sign must be +1 or -1")
    grid = _check_grids(f, theta, lambda0)
    s = grid.s
    F, _ = _funcs(f)
    TH, dTH = _funcs(theta)
    L0, dL0 = _funcs(lambda0)
    c = np.cos(theta.values)
    if np.min(np.abs(c)) < COS_MIN:
        raise NearOrthogonalError(
            f"|cos theta| < {COS_MIN:g} on {_intervals(s, np.abs(c) < COS_MIN)}; "
            "use synthesize_orthogonal")
    zero_l0 = bool(np.max(np.abs(lambda0.values)) <= 1e-14 and
                   np.max(np.abs(lambda0.derivative(6))) <= 1e-14)
    if not zero_l0:
        slack = 1 - lambda0.values ** 2 - c ** 2
        bad = slack < FEASIBILITY_MARGIN
        if np.any(bad):
            iv = _intervals(s, bad)
            raise InfeasibleProfileError(f"lam0^2 + cos^2 theta exceeds 1 - 1e-8 on {iv}", iv)

    def parts(x):
        th, dth = TH(x), dTH(x)
        cc, dc = np.cos(th), -np.sin(th) * dth
        l0, dl0 = L0(x), dL0(x)
        if zero_l0:
            l1, dl1 = sign * np.sin(th), sign * np.cos(th) * dth
        else:
            l1 = sign * np.sqrt(1 - l0 ** 2 - cc ** 2)
            dl1 = -(l0 * dl0 + cc * dc) / l1
        return F(x), cc, dc, l0, dl0, l1, dl1

    def kappa(x):
        fv, cc, dc, l0, dl0, l1, dl1 = parts(x)
        return (dl0 - fv * (1 - l0 ** 2)) / cc

    def tau(x):
        fv, cc, dc, l0, dl0, l1, dl1 = parts(x)
        return -(fv * l0 * l1 + dl1) / cc

    ones = np.ones_like(s)
    kv, tv = kappa(s) * ones, tau(s) * ones
    if np.any(kv <= 0):
        iv = _intervals(s, kv <= 0)
        raise InfeasibleProfileError(f"prescribed data force kappa <= 0 on {iv}", iv)
    if np.max(np.abs(tv)) <= 1e-10:
        raise InfeasibleProfileError(
            "torsion vanishes identically: the curve is planar and its binormal "
            "component cannot be prescribed", [(float(s[0]), float(s[-1]))])
    p = parts(s)
    lam1 = Series(grid, p[5] * ones, p[6] * ones)
    return PACurvatures3D(Series(grid, kv, func=kappa), Series(grid, tv, func=tau), lam1,
                          parts, zero_l0)


def synthesize_pa_3d(model: Model, f: Series, theta: Series, lambda0: Series, sign: int = 1,
                     p0=None, frame0=None, verify: bool = True) -> SynthesisResult:
    """Build a PA curve in a 3-manifold from (f, theta, lam0).

    Curvatures come from :func:`pa_curvatures_3d` (same errors); the curve
    is integrated from p0 with initial frame frame0 and the field is
    V = lam0 T + cos(theta) N + lam1 B. With ``verify`` the result is
    analysed again and the round-trip quantities are attached.
    """
    if model.dim != 3:
        raise InputError("synthesize_pa_3d needs a three-dimensional model")
    pc = pa_curvatures_3d(f, theta, lambda0, sign)
    s = pc.kappa.s
    curve, frenet = frenet_synthesize(model, pc.profile, p0, frame0)
    fv, cc, dc, l0, dl0, l1, dl1 = (np.broadcast_to(a, s.shape) for a in pc.parts(s))
    fr = frenet.frames
    V = l0[:, None] * fr[:, 0] + cc[:, None] * fr[:, 1] + l1[:, None] * fr[:, 2]
    law = TorseFormingLaw.anti_torqued(f)
    res = SynthesisResult(curve, FieldAlongCurve(curve, V), frenet, pc.profile, law)
    res.quantities.append(_q("middle_equation", pc.middle_residual(), MIDDLE_EQ_TOL))
    res.extras.update(lam1=pc.lam1)
    if not verify:
        return res
    _verify_common(res, model, {"cos_theta": cc, "lam0": l0, "lam1": l1})
    if pc.zero_lam0 and np.ptp(f.values) <= 1e-12 * max(1.0, abs(f.values[0])):
        _verify_constant_concircular(res, model, f, theta)
    return res


def _verify_constant_concircular(res: SynthesisResult, model, f, theta):
    """Constant-potential concircular data: geodesic-sphere and Lancret checks."""
    F = res.extras["frenet"]
    try:
        gs = geodesic_sphere_residual(F)
        res.quantities.append(_q("geodesic_sphere", gs.series["geodesic_sphere"].values,
                                 ANALYSIS_TOL))
    except PACurvesError as exc:
        res.extras["geodesic_sphere_skipped"] = str(exc)
    try:
        lc = lancret_concircular_check(f, res.extras["decomposition"].lifted, F)
        res.extras["lancret"] = lc
        if lc.is_lancret:
            for name, ser in lc.residuals.series.items():
                tol = ROUND_TRIP_TOL if name == "kappa_vs_constant_f_form" else ANALYSIS_TOL
                res.quantities.append(_q(f"lancret:{name}", ser.values, tol))
    except PACurvesError as exc:
        res.extras["lancret_skipped"] = str(exc)
    if isinstance(model, Euclidean):
        # V - f0 (gamma - center) is constant, so gamma - V/f0 is the center
        f0 = float(f.values[0])
        center = res.curve.points - res.field.vectors / f0
        res.extras["sphere_center"] = center.mean(axis=0)
        res.quantities.append(_q("sphere_center_spread", center - center.mean(axis=0),
                                 ANALYSIS_TOL))


def synthesize_orthogonal(model: Model, f: Series, kappa: Series, r: float = 0.0, sign: int = 1,
                          p0=None, frame0=None, verify: bool = True) -> SynthesisResult:
    """Build a PA curve with angle pi/2 in a 3-manifold.

    p = int f with p = r at the grid midpoint, tau = sign * kappa * sinh(p),
    V = tanh(p) T + sign * sech(p) B. Flipping ``sign`` negates lam1 and
    the torsion, hence tau/kappa.

    Raises
    ------
    ParallelCaseError
        If f vanishes identically.
    InfeasibleProfileError
        If kappa <= 0 somewhere.
    """
    if model.dim != 3:
        raise InputError("synthesize_orthogonal needs a three-dimensional model")
    if sign not in (1, -1):
        raise InputError("sign must be +1 or -1")
    grid = _check_grids(f, kappa)
    s = grid.s
    if np.max(np.abs(f.values)) <= ZERO_F:
        raise ParallelCaseError("f vanishes identically: the field would be parallel")
    if np.any(kappa.values <= 0):
        iv = _intervals(s, kappa.values <= 0)
        raise InfeasibleProfileError(f"kappa <= 0 on {iv}", iv)
    p = cumulative_integral(Series(grid, f.values, f.derivative(6)), (s[grid.mid_index], r),
                            order=4)
    K, _ = _funcs(kappa)

    def tau(x):
        return sign * K(x) * np.sinh(p.at(x))

    tv = tau(s)
    profile = CurvatureProfile([Series(grid, kappa.values, func=K), Series(grid, tv, func=tau)])
    curve, frenet = frenet_synthesize(model, profile, p0, frame0)
    fr = frenet.frames
    l0, l1 = np.tanh(p.values), sign / np.cosh(p.values)
    V = l0[:, None] * fr[:, 0] + l1[:, None] * fr[:, 2]
    law = TorseFormingLaw.anti_torqued(f)
    res = SynthesisResult(curve, FieldAlongCurve(curve, V), frenet, profile, law,
                          extras={"p": p})
    if not verify:
        return res
    _verify_common(res, model, {"cos_theta": np.zeros_like(s), "lam0": l0, "lam1": l1})
    oa = orthogonal_angle_analysis(res.extras["frenet"], f, res.extras["decomposition"])
    res.extras["orthogonal"] = oa
    res.quantities.append(_q("branch", float(oa.branch != sign), 0.5))
    res.quantities.append(_q("r", oa.r - r, ROUND_TRIP_TOL))
    for name, ser in oa.residuals.series.items():
        res.quantities.append(_q(f"orthogonal:{name}", ser.values, ANALYSIS_TOL))
    return res


def synthesize_pa_surface(model: Model, f: Series, theta: Series, p0=None,
                          T0=None, verify: bool = True) -> SynthesisResult:
    """Build a PA curve on a surface from (f, theta).

    The signed curvature (oriented normal) is kappa = theta' - cos(theta) f,
    and V = sin(theta) T + cos(theta) N. ``T0`` is the initial unit tangent;
    the normal completes it by orientation.

    Raises
    ------
    DomainError
        If the curve leaves the upper half-plane.
    """
    if model.dim != 2:
        raise InputError("synthesize_pa_surface needs a two-dimensional model")
    grid = _check_grids(f, theta)
    s = grid.s
    F, _ = _funcs(f)
    TH, dTH = _funcs(theta)
    c = np.cos(theta.values)
    if np.max(np.abs(c)) <= 1e-12:
        raise NearOrthogonalError("cos(theta) vanishes identically: kappa is undetermined")

    def kappa(x):
        return dTH(x) - np.cos(TH(x)) * F(x)

    kv = np.broadcast_to(kappa(s), s.shape).astype(float)
    profile = CurvatureProfile([Series(grid, kv, func=kappa)])
    p0 = model.default_point() if p0 is None else np.asarray(p0, dtype=float)
    frame0 = None
    if T0 is not None:
        T0 = np.asarray(T0, dtype=float)
        T0 = T0 / model.norm(p0, T0)
        frame0 = np.vstack([T0, model.complete_frame(p0, T0[None, :])])
    curve, frenet = frenet_synthesize(model, profile, p0, frame0)
    th = theta.values
    fr = frenet.frames
    V = np.sin(th)[:, None] * fr[:, 0] + np.cos(th)[:, None] * fr[:, 1]
    law = TorseFormingLaw.anti_torqued(f)
    res = SynthesisResult(curve, FieldAlongCurve(curve, V), frenet, profile, law)
    if verify:
        _verify_common(res, model, {"cos_theta": c, "lam0": np.sin(th)})
    return res


# ---------------------------------------------------------------------------
# Parameter sets


PARAM_KEYS = {
    "pa3d": {"f", "theta", "lambda0"},
    "orthogonal": {"f", "kappa"},
    "surface": {"f", "theta"},
}
OPTIONAL_KEYS = {"name", "kind", "model", "span", "step", "sign", "r", "p0", "frame0", "T0",
                 "description", "expect"}


def load_presets() -> dict:
    """Shipped parameter sets keyed by name."""
    text = resources.files("pacurves").joinpath("data/presets.json").read_text()
    return {p["name"]: p for p in json.loads(text)["presets"]}


def validate_params(params: dict) -> dict:
    """Check a parameter set and fill defaults; returns a new dict."""
    if not isinstance(params, dict):
        raise InputError("synthesis parameters must be a JSON object")
    kind = params.get("kind")
    if kind not in PARAM_KEYS:
        raise InputError(f"kind must be one of {sorted(PARAM_KEYS)}, got {kind!r}")
    missing = PARAM_KEYS[kind] - set(params)
    if missing:
        raise InputError(f"{kind} parameters lack {sorted(missing)}")
    unknown = set(params) - PARAM_KEYS[kind] - OPTIONAL_KEYS
    if unknown:
        raise InputError(f"unknown parameter keys {sorted(unknown)}")
    out = dict(params)
    out.setdefault("model", "euclidean:2" if kind == "surface" else "euclidean:3")
    out.setdefault("span", [-1.0, 1.0])
    out.setdefault("step", DEFAULT_STEP)
    out.setdefault("sign", 1)
    out.setdefault("r", 0.0)
    span = out["span"]
    if len(span) != 2 or not float(span[0]) < float(span[1]):
        raise InputError(f"span must be [a, b] with a < b, got {span!r}")
    if not float(out["step"]) > 0:
        raise InputError("step must be positive")
    return out


def synthesize_from_params(params: dict, step: Optional[float] = None,
                           verify: bool = True) -> SynthesisResult:
    """Run the synthesis described by a parameter set (see ``presets.json``).

    Profiles are expressions in ``s``; ``step`` overrides the set's grid step.
    """
    p = validate_params(params)
    model = model_from_spec(p["model"])
    grid = Grid.uniform(float(p["span"][0]), float(p["span"][1]),
                        float(step if step is not None else p["step"]))
    ser = {k: sample(str(p[k]), grid) for k in PARAM_KEYS[p["kind"]]}
    p0 = p.get("p0")
    if p["kind"] == "pa3d":
        return synthesize_pa_3d(model, ser["f"], ser["theta"], ser["lambda0"], int(p["sign"]),
                                p0, p.get("frame0"), verify)
    if p["kind"] == "orthogonal":
        return synthesize_orthogonal(model, ser["f"], ser["kappa"], float(p["r"]),
                                     int(p["sign"]), p0, p.get("frame0"), verify)
    return synthesize_pa_surface(model, ser["f"], ser["theta"], p0, p.get("T0"), verify)
