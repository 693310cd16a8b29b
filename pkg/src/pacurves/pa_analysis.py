"""Diagnostics for prescribed-angle curves.

A unit field V along a Frenet curve decomposes as
``V = lam0 T + cos(theta) N + lam1 B_1 + ...`` (in dimension 2,
``V = sin(theta) T + cos(theta) N``). This module recovers that
decomposition, evaluates the torse-forming compatibility system, inverts
it for the curvatures, and checks the closed-form characterizations that
apply in special cases (orthogonal angle, geodesic spheres, Lancret-type
ratios, surfaces, the upper half-plane).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .curve import ArcLengthCurve, CurvatureProfile, FrenetData, frenet_apparatus
from .errors import (
    DomainError,
    InputError,
    NearOrthogonalError,
    ParallelCaseError,
    TorsionVanishingError,
)
from .manifold import (
    HALFSPACE_EPS,
    Euclidean,
    FieldAlongCurve,
    HyperbolicHalfSpace,
    HyperbolicHyperboloid,
    Model,
    Sphere,
)
from .numerics import Series, cumulative_integral, differentiate_series
from .transport import TorseFormingLaw, estimate_law

DEFAULT_TOL = 1e-4
UNIT_TOL = 1e-6
COS_MIN = 1e-4
ORTHO_TOL = 1e-6
ZERO_F = 1e-6
TORSION_MIN = 1e-6
ORDER = 6


@dataclass(eq=False)
class PADecomposition:
    """Angle and coefficients of a unit field against a Frenet frame.

    ``theta`` is arccos <V, N> in [0, pi]. ``lifted`` is the continuous
    angle that also remembers the sign of the remaining component: in
    dimension 2 it satisfies ``V = sin(lifted) T + cos(lifted) N``; in
    dimension 3 and higher ``tan(lifted) = lam1 / cos(theta)``, which is the
    angle of ``V = cos N + sin B`` when lam0 = 0.
    """

    theta: Series
    lambdas: List[Series]
    cos_theta: Series
    lifted: Series

    @property
    def grid(self):
        return self.theta.grid

    @property
    def lam0(self) -> Series:
        return self.lambdas[0]

    @property
    def lam1(self) -> Series:
        return self.lambdas[1]

    def components(self) -> List[Series]:
        """Frame components (lam0, cos theta, lam1, ..., lam_{m-2})."""
        return [self.lambdas[0], self.cos_theta] + list(self.lambdas[1:])

    def norm_defect(self) -> np.ndarray:
        tot = self.cos_theta.values ** 2 + sum(l.values ** 2 for l in self.lambdas)
        return np.abs(tot - 1.0)


def _series_like(grid, values, deriv=None):
    return Series(grid, values, deriv)


def _lift(y, x):
    return np.unwrap(np.arctan2(y, x))


def decomposition_from_components(grid, lambdas: List[Series], cos_theta: Series) -> PADecomposition:
    """Assemble a decomposition from prescribed coefficient series."""
    c = np.clip(cos_theta.values, -1.0, 1.0)
    other = lambdas[0] if len(lambdas) == 1 else lambdas[1]
    lifted = _lift(other.values, c)
    dlift = None
    if other.deriv is not None and cos_theta.deriv is not None:
        r2 = other.values ** 2 + c ** 2
        dlift = (c * other.deriv - other.values * cos_theta.deriv) / r2
    return PADecomposition(Series(grid, np.arccos(c)), list(lambdas), cos_theta,
                           Series(grid, lifted, dlift))


def decompose(model: Model, fld: FieldAlongCurve, frenet: FrenetData,
              unit_tol: float = UNIT_TOL) -> PADecomposition:
    """Coefficients lam_i = <V, X_i> and theta = arccos <V, N>.

    Raises
    ------
    InputError
        If |V| deviates from 1 by more than ``unit_tol``.
    """
    x = fld.curve.points
    V = fld.vectors
    if not frenet.grid.same_as(fld.grid):
        raise InputError("field and Frenet data live on different grids")
    n = model.norm(x, V)
    bad = np.abs(n - 1.0) > unit_tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InputError(f"field is not unit at s={fld.grid.s[i]:.6g} (|V|={n[i]:.9g})")
    grid = fld.grid
    F = frenet.frames
    comp = [model.inner(x, V, F[:, i]) for i in range(F.shape[1])]
    c = comp[1]
    lambdas = [Series(grid, comp[0])] + [Series(grid, a) for a in comp[2:]]
    return decomposition_from_components(grid, lambdas, Series(grid, c))


@dataclass
class ResidualReport:
    """Named residual series with max/rms summaries and a verdict."""

    series: Dict[str, Series]
    tol: float = DEFAULT_TOL
    extras: dict = field(default_factory=dict)

    def max(self, name: Optional[str] = None) -> float:
        names = [name] if name else list(self.series)
        return float(max(np.max(np.abs(self.series[k].values)) for k in names))

    def rms(self, name: str) -> float:
        return float(np.sqrt(np.mean(self.series[name].values ** 2)))

    @property
    def passed(self) -> bool:
        return self.max() <= self.tol

    def quantities(self, tol: Optional[float] = None) -> List[dict]:
        tol = self.tol if tol is None else tol
        return [{"name": k, "max_err": self.max(k), "rms": self.rms(k), "tolerance": tol,
                 "pass": bool(self.max(k) <= tol)} for k in self.series]


def _d(series: Series, order: int = ORDER) -> np.ndarray:
    return series.derivative(order)


def pa_system_residuals(frenet, law: TorseFormingLaw, decomp: PADecomposition,
                        tol: float = DEFAULT_TOL, order: int = ORDER) -> ResidualReport:
    """Residuals of the compatibility system between curvatures, f and the
    decomposition, one equation per frame direction.

    Equation i compares the X_i component of nabla_T V computed from the
    Frenet formulas with f T - f lam0 V, i.e. the torse-forming law with the
    unit-length closure omega(T) = -f lam0. Accepts FrenetData or a
    CurvatureProfile.
    """
    k = [c.values for c in frenet.curvatures]
    comps = decomp.components()
    m = len(comps)
    if len(k) != m - 1:
        raise InputError("decomposition and curvatures have inconsistent dimensions")
    f = law.f.values
    lam0 = comps[0].values
    out = {}
    names = ["T", "N"] + [f"B{i}" for i in range(1, m - 1)]
    for i in range(m):
        frenet_part = _d(comps[i], order)
        if i > 0:
            frenet_part = frenet_part + comps[i - 1].values * k[i - 1]
        if i < m - 1:
            frenet_part = frenet_part - comps[i + 1].values * k[i]
        law_part = -f * lam0 * comps[i].values + (f if i == 0 else 0.0)
        out[f"eq_{names[i]}"] = Series(decomp.grid, law_part - frenet_part)
    return ResidualReport(out, tol)


def curvatures_from_pa(f: Series, decomp: PADecomposition, mode: str = "general3d",
                       order: int = ORDER) -> CurvatureProfile:
    """Curvature and torsion from the potential and a 3D decomposition.

    ``general3d``: kappa = (lam0' - f (1 - lam0^2)) / cos(theta),
    tau = -(f lam0 lam1 + lam1') / cos(theta).
    ``concircular`` (lam0 = 0): kappa = -f / cos(theta),
    tau = -(lifted theta)'.

    Raises
    ------
    NearOrthogonalError
        When |cos theta| < 1e-4 somewhere; use
        :func:`orthogonal_angle_analysis` instead.
    """
    if len(decomp.lambdas) != 2:
        raise InputError("curvatures_from_pa needs a three-dimensional decomposition")
    c = decomp.cos_theta.values
    if np.min(np.abs(c)) < COS_MIN:
        i = int(np.argmin(np.abs(c)))
        raise NearOrthogonalError(
            f"|cos theta| < {COS_MIN:g} near s={decomp.grid.s[i]:.6g}; "
            "use the orthogonal-angle analysis")
    grid = decomp.grid
    fv = f.values
    if mode == "general3d":
        l0, l1 = decomp.lam0, decomp.lam1
        kappa = (_d(l0, order) - fv * (1 - l0.values ** 2)) / c
        tau = -(fv * l0.values * l1.values + _d(l1, order)) / c
    elif mode == "concircular":
        if np.max(np.abs(decomp.lam0.values)) > ORTHO_TOL:
            raise InputError("concircular mode needs lam0 = 0")
        kappa = -fv / c
        tau = -_d(decomp.lifted, order)
    else:
        raise InputError(f"unknown mode {mode!r}")
    return CurvatureProfile([Series(grid, kappa), Series(grid, tau)])


@dataclass
class OrthogonalAngleReport:
    p: Series
    r: float
    branch: int
    residuals: ResidualReport


def orthogonal_angle_analysis(frenet, f: Series, decomp: PADecomposition,
                              tol: float = DEFAULT_TOL, order: int = ORDER) -> OrthogonalAngleReport:
    """Check V = tanh(p) T + branch * sech(p) B with p = int f + r.

    ``r`` is fitted at the grid midpoint from lam0 = tanh p, the branch is
    the sign of lam1 there. Residuals reported: lam0 - tanh p,
    |lam1| - sech p, tau/kappa - branch*sinh p and its derivative
    (tau/kappa)' - branch*f*cosh p.

    Raises
    ------
    InputError
        If the angle is not pi/2 within 1e-6.
    ParallelCaseError
        If f vanishes identically (the field is then parallel).
    """
    c = decomp.cos_theta.values
    if np.max(np.abs(c)) > ORTHO_TOL:
        raise InputError(f"theta deviates from pi/2 by {np.max(np.abs(c)):.3g}")
    if np.max(np.abs(f.values)) <= ZERO_F:
        raise ParallelCaseError("potential vanishes along the curve: the field is parallel")
    grid = decomp.grid
    mid = grid.mid_index
    lam0, lam1 = decomp.lam0.values, decomp.lam1.values
    r = float(np.arctanh(np.clip(lam0[mid], -1 + 1e-15, 1 - 1e-15)))
    branch = 1 if lam1[mid] >= 0 else -1
    p = cumulative_integral(f, (grid.s[mid], r), order=4)
    kappa, tau = frenet.curvatures[0].values, frenet.curvatures[1].values
    ratio = Series(grid, tau / kappa)
    series = {
        "lam0_vs_tanh_p": Series(grid, lam0 - np.tanh(p.values)),
        "abs_lam1_vs_sech_p": Series(grid, np.abs(lam1) - 1 / np.cosh(p.values)),
        "ratio_vs_sinh_p": Series(grid, ratio.values - branch * np.sinh(p.values)),
        "ratio_derivative_vs_f_cosh_p": Series(
            grid, _d(ratio, order) - branch * f.values * np.cosh(p.values)),
    }
    return OrthogonalAngleReport(p, r, branch, ResidualReport(series, tol))


def geodesic_sphere_residual(profile, tol: float = DEFAULT_TOL,
                             order: int = ORDER) -> ResidualReport:
    """Residual of ((1/tau) (1/kappa)')' + tau/kappa, which vanishes for
    curves on geodesic spheres of 3D space forms.

    Raises
    ------
    TorsionVanishingError
        When |tau| < 1e-6 somewhere.
    """
    kappa, tau = profile.curvatures[0], profile.curvatures[1]
    grid = kappa.grid
    t = tau.values
    if np.min(np.abs(t)) < TORSION_MIN:
        i = int(np.argmin(np.abs(t)))
        raise TorsionVanishingError(f"torsion vanishes near s={grid.s[i]:.6g}")
    if np.any(kappa.values <= 0):
        raise InputError("curvature must be positive")
    u = Series(grid, 1.0 / kappa.values)
    w = Series(grid, differentiate_series(u, order).values / t)
    res = differentiate_series(w, order).values + t / kappa.values
    return ResidualReport({"geodesic_sphere": Series(grid, res)}, tol)


def sphere_potential_fit(f: Series, theta: Series):
    """Fit 1/f = a tan(theta) + b by least squares.

    Pass the lifted angle of the decomposition so tan(theta) carries the
    sign of lam1. Returns ``(a, b, rms)``.
    """
    from .numerics import fit_linear_basis

    c = np.cos(theta.values)
    if np.min(np.abs(c)) < COS_MIN:
        raise NearOrthogonalError(f"|cos theta| < {COS_MIN:g}: tan(theta) is unbounded")
    if np.min(np.abs(f.values)) <= ZERO_F:
        raise InputError("potential must be nowhere zero")
    grid = f.grid
    (a, b), rms = fit_linear_basis([Series(grid, np.tan(theta.values)), Series.constant(grid, 1.0)],
                                   Series(grid, 1.0 / f.values))
    return float(a), float(b), rms


@dataclass
class LancretReport:
    r0: float
    r1: float
    ratio_defect: float
    is_lancret: bool
    residuals: ResidualReport


def lancret_concircular_check(f: Series, theta: Series, profile, tol: float = DEFAULT_TOL,
                              fine_tol: float = 1e-5) -> LancretReport:
    """Constant tau/kappa test for concircular PA curves.

    r0 is the mean of tau/kappa. With F = int f (zero at the midpoint),
    sin(theta) = r0 F + r1 is checked after fitting r1 at the midpoint;
    ``theta`` should be the lifted angle. When f is a constant f0, kappa is
    also compared with |f0| / sqrt(1 - (r0 f0 s + r1)^2).

    A nonconstant ratio is a verdict (``is_lancret`` false), not an error.

    Raises
    ------
    InputError
        If tau/kappa averages to zero (excluded: the ratio must be a
        nonzero constant).
    """
    kappa, tau = profile.curvatures[0].values, profile.curvatures[1].values
    grid = f.grid
    ratio = tau / kappa
    r0 = float(np.mean(ratio))
    if abs(r0) <= ZERO_F:
        raise InputError("tau/kappa vanishes: the ratio must be a nonzero constant")
    defect = float(np.max(np.abs(ratio - r0)))
    mid = grid.mid_index
    F = cumulative_integral(f, (grid.s[mid], 0.0), order=4).values
    sin_t = np.sin(theta.values)
    r1 = float(sin_t[mid] - r0 * F[mid])
    series = {"ratio_constancy": Series(grid, ratio - r0),
              "sin_theta_vs_r0_int_f": Series(grid, sin_t - (r0 * F + r1))}
    extras = {}
    fv = f.values
    if np.ptp(fv) <= 1e-12 * max(1.0, abs(fv[0])):
        f0 = float(fv[0])
        arg = r0 * f0 * grid.s + r1
        inside = np.abs(arg) < 1.0
        pred = np.where(inside, abs(f0) / np.sqrt(np.where(inside, 1 - arg ** 2, 1.0)), np.nan)
        res = np.where(inside, kappa - pred, 0.0)
        series["kappa_vs_constant_f_form"] = Series(grid, res)
        extras["f0"] = f0
    rep = ResidualReport(series, tol, extras)
    return LancretReport(r0, r1, defect, defect <= tol, rep)


@dataclass
class SurfaceCurvature:
    kappa: Series
    grim: Optional[ResidualReport] = None
    constant: Optional[float] = None


def surface_pa_curvature(f: Series, theta: Series, grim_check: bool = False,
                         tol: float = DEFAULT_TOL, order: int = ORDER) -> SurfaceCurvature:
    """Signed curvature kappa = theta' - cos(theta) f of a PA curve on a surface.

    ``theta`` is the lifted angle (V = sin(theta) T + cos(theta) N). With
    ``grim_check`` the case cos(theta) = kappa is tested: kappa is compared
    with sech(s + int f + C), C fitted at the midpoint.
    """
    c = np.cos(theta.values)
    if np.max(np.abs(c)) <= 1e-12:
        raise NearOrthogonalError("cos(theta) vanishes identically: kappa is undetermined")
    grid = theta.grid
    kappa = Series(grid, _d(theta, order) - c * f.values)
    if not grim_check:
        return SurfaceCurvature(kappa)
    mid = grid.mid_index
    F = cumulative_integral(f, (grid.s[mid], 0.0), order=4).values
    k_mid = kappa.values[mid]
    if not 0 < k_mid <= 1:
        raise InputError("sech form needs 0 < kappa <= 1 at the midpoint")
    dk_mid = differentiate_series(kappa, order).values[mid]
    g = 1.0 + f.values[mid]
    # kappa = sech x gives kappa' = -kappa tanh(x) (1 + f); near the peak of
    # sech the tanh form is well conditioned and arccosh is not
    if k_mid > 0.5 and abs(g) > 1e-8 and abs(dk_mid / (k_mid * g)) < 1:
        x_mid = np.arctanh(-dk_mid / (k_mid * g))
    else:
        x_mid = np.arccosh(1.0 / k_mid)
        if dk_mid > 0:
            x_mid = -x_mid
    C = float(x_mid - grid.s[mid] - F[mid])
    series = {"kappa_vs_sech": Series(grid, kappa.values - 1 / np.cosh(grid.s + F + C)),
              "kappa_vs_cos_theta": Series(grid, kappa.values - c)}
    return SurfaceCurvature(kappa, ResidualReport(series, tol), C)


def halfplane_curvature(curve: ArcLengthCurve, signed: bool = False,
                        order: int = ORDER) -> Series:
    """Hyperbolic curvature in the upper half-plane from Euclidean data.

    Uses kappa = y kappa_e + <N_e, d_y> with N_e the Euclidean normal
    obtained by rotating the Euclidean unit tangent a quarter turn, which
    gives the curvature signed with respect to the oriented normal.
    ``signed=False`` returns its absolute value (the Frenet curvature).
    """
    model = curve.model
    if not isinstance(model, HyperbolicHalfSpace) or model.dim != 2:
        raise InputError("halfplane_curvature needs a curve in halfspace:2")
    pts = curve.points
    y = pts[:, 1]
    if np.any(y <= HALFSPACE_EPS):
        raise DomainError("curve touches the boundary of the half-plane")
    v = curve.velocity
    acc = curve.derivs[0] if curve.derivs else \
        differentiate_series(Series(curve.grid, v), order).values
    speed = np.hypot(v[:, 0], v[:, 1])
    kappa_e = (v[:, 0] * acc[:, 1] - v[:, 1] * acc[:, 0]) / speed ** 3
    te = v / speed[:, None]
    n_e_dy = te[:, 0]  # N_e = (-t_y, t_x)
    k = y * kappa_e + n_e_dy
    return Series(curve.grid, k if signed else np.abs(k))


# ---------------------------------------------------------------------------
# Aggregate analysis


LAW_TOL = 1e-6
SPACE_FORMS = (Euclidean, Sphere, HyperbolicHyperboloid, HyperbolicHalfSpace)


@dataclass(eq=False)
class AnalysisReport:
    """Everything :func:`analyze` could establish about a curve (and field).

    ``quantities`` are pass/fail checks in the report format
    ``{name, max_err, rms, tolerance, pass}``; ``info`` holds verdict-free
    findings (law class, Lancret ratio, ...); ``profiles`` are per-node
    series for plotting.
    """

    frenet: FrenetData
    decomposition: Optional[PADecomposition] = None
    estimate: object = None
    quantities: List[dict] = field(default_factory=list)
    info: dict = field(default_factory=dict)
    profiles: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(q["pass"] for q in self.quantities)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def quantity(self, name: str) -> dict:
        for q in self.quantities:
            if q["name"] == name:
                return q
        raise KeyError(name)


def _entry(name, err, tol):
    err = np.abs(np.atleast_1d(np.asarray(err, dtype=float)))
    mx = float(np.max(err))
    rms = float(np.sqrt(np.mean(err ** 2)))
    ok = bool(np.isfinite(mx) and mx <= tol)
    return {"name": name, "max_err": mx if np.isfinite(mx) else None,
            "rms": rms if np.isfinite(rms) else None, "tolerance": float(tol), "pass": ok}


def analyze(model: Model, curve: ArcLengthCurve, fld: Optional[FieldAlongCurve] = None,
            tol: float = DEFAULT_TOL, tolerances: Optional[dict] = None,
            order: int = ORDER) -> AnalysisReport:
    """Run every applicable diagnostic on a curve and an optional unit field.

    Frenet apparatus (signed curvature in dimension 2), then, with a field:
    decomposition, law estimate, the compatibility system with the fitted
    law, curvatures recovered from (f, theta, lam0) against the Frenet
    ones, and the orthogonal-angle, surface and half-plane checks where
    they apply. Tolerances default to ``tol`` (1e-6 for the unit norm, the
    law residual and the unit-length closure) and can be overridden by
    quantity name.

    Raises
    ------
    DegenerateCurveError
        If the curve is not a Frenet curve (a curvature vanishes).
    """
    tols = dict(tolerances or {})

    def t(name, default=tol):
        return tols.get(name, default)

    m = model.dim
    frenet = frenet_apparatus(model, curve, signed=True, order=order)
    rep = AnalysisReport(frenet)
    qs = rep.quantities
    s = curve.s
    rep.profiles["s"] = s
    for i, k in enumerate(frenet.curvatures):
        rep.profiles["kappa" if i == 0 else ("tau" if i == 1 else f"kappa_{i + 1}")] = k.values
    qs.append(_entry("frenet_residual", frenet.frenet_residual(model, curve, order),
                     t("frenet_residual")))
    qs.append(_entry("frame_orthonormality", frenet.gram_defect(model, curve.points),
                     t("frame_orthonormality")))
    if m == 2 and isinstance(model, HyperbolicHalfSpace):
        k2 = halfplane_curvature(curve, signed=True, order=order)
        qs.append(_entry("halfplane_curvature_paths", k2.values - frenet.kappa.values,
                         t("halfplane_curvature_paths")))
    if fld is None:
        return rep

    x, V = curve.points, fld.vectors
    norm = model.norm(x, V)
    qs.append(_entry("unit_norm", norm - 1.0, t("unit_norm", UNIT_TOL)))
    est = estimate_law(model, curve, fld, order)
    rep.estimate = est
    law = est.law
    rep.info.update(law_class=law.kind, law_note=law.note, torse_forming=est.torse_forming,
                    skipped_nodes=int(np.count_nonzero(est.skipped)))
    rep.profiles["f"] = law.f.values
    rep.profiles["omega"] = law.omega.values
    qs.append(_entry("law_residual", est.residual.values, t("law_residual", LAW_TOL)))
    if not qs[-2]["pass"]:
        rep.info["decomposition"] = "skipped: field is not unit"
        return rep
    tv = model.inner(x, V, curve.velocity)
    qs.append(_entry("unit_closure", law.f.values * tv + law.omega.values,
                     t("unit_closure", LAW_TOL)))
    D = decompose(model, fld, frenet, unit_tol=max(UNIT_TOL, t("unit_norm", UNIT_TOL)))
    rep.decomposition = D
    rep.profiles["theta"] = D.theta.values
    rep.profiles["theta_lifted"] = D.lifted.values
    for i, lam in enumerate(D.lambdas):
        rep.profiles[f"lam{i}"] = lam.values
    for name, ser in pa_system_residuals(frenet, law, D, order=order).series.items():
        qs.append(_entry(name, ser.values, t(name)))
    c = D.cos_theta.values
    f = law.f
    if m == 2:
        if np.max(np.abs(c)) > 1e-12:
            sc = surface_pa_curvature(f, D.lifted, order=order)
            qs.append(_entry("kappa_from_pa", sc.kappa.values - frenet.kappa.values,
                             t("kappa_from_pa")))
        return rep
    if m == 3 and np.min(np.abs(c)) >= COS_MIN:
        prof = curvatures_from_pa(f, D, "general3d", order)
        qs.append(_entry("kappa_from_pa", prof.kappa.values - frenet.kappa.values,
                         t("kappa_from_pa")))
        qs.append(_entry("tau_from_pa", prof.tau.values - frenet.tau.values, t("tau_from_pa")))
        fv = f.values
        if np.max(np.abs(D.lam0.values)) <= ORTHO_TOL and np.min(np.abs(fv)) > ZERO_F:
            a, b, rms = sphere_potential_fit(f, D.lifted)
            rep.info.update(sphere_fit_a=a, sphere_fit_b=b, sphere_fit_rms=float(rms))
            ratio = frenet.tau.values / frenet.kappa.values
            if abs(np.mean(ratio)) > ZERO_F:
                lc = lancret_concircular_check(f, D.lifted, frenet, tol)
                rep.info.update(lancret_r0=lc.r0, lancret_r1=lc.r1,
                                lancret_ratio_defect=lc.ratio_defect, is_lancret=lc.is_lancret)
    elif m == 3 and np.max(np.abs(c)) <= ORTHO_TOL and np.max(np.abs(f.values)) > ZERO_F:
        oa = orthogonal_angle_analysis(frenet, f, D, tol, order)
        rep.info.update(orthogonal_r=oa.r, orthogonal_branch=oa.branch)
        for name, ser in oa.residuals.series.items():
            qs.append(_entry(name, ser.values, t(name)))
    if m == 3 and isinstance(model, SPACE_FORMS) and np.min(np.abs(frenet.tau.values)) >= TORSION_MIN:
        gs = geodesic_sphere_residual(frenet, tol, order)
        rep.info["geodesic_sphere_residual"] = gs.max()
    return rep

