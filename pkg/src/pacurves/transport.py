"""Torse-forming fields along curves: transport, law estimation, catalog.

A field V along a unit-speed curve is torse-forming when
``nabla_T V = f T + omega(T) V`` for scalar profiles f and omega(T).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .curve import ArcLengthCurve
from .errors import DegenerateFitError, DomainError, InputError, UnsupportedModelError
from .manifold import (
    Euclidean,
    FieldAlongCurve,
    HyperbolicHalfSpace,
    HyperbolicHyperboloid,
    Model,
    Sphere,
    TangentVector,
    WarpedProduct,
    covariant_derivative_along,
)
from .numerics import Series, StageTable, differentiate_series, integrate_ivp

CLASS_TOL = 1e-6
RESIDUAL_TOL = 1e-6
ANGLE_SKIP = 1e-4
KINDS = ("generic", "concircular", "torqued", "anti-torqued", "parallel")
TORQUED_NOTE = "torqued fields are indistinguishable from generic ones along a single curve"


@dataclass(eq=False)
class TorseFormingLaw:
    """Potential f and omega(T) along a curve.

    ``omega=None`` means the anti-torqued closure omega(T) = -f <V, T>,
    evaluated on the solution during transport.
    """

    f: Series
    omega: Optional[Series] = None
    kind: str = "generic"
    note: str = ""
    tol: float = CLASS_TOL

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown law class {self.kind!r}")
        if self.omega is None and self.kind != "anti-torqued":
            raise InputError("only anti-torqued laws may leave omega implicit")
        if self.kind in ("concircular", "parallel") and np.max(np.abs(self.omega.values)) > self.tol:
            raise InputError(f"{self.kind} law needs omega = 0")
        if self.kind == "parallel" and np.max(np.abs(self.f.values)) > self.tol:
            raise InputError("parallel law needs f = 0")

    @property
    def grid(self):
        return self.f.grid

    @classmethod
    def parallel(cls, grid):
        return cls(Series.constant(grid, 0.0), Series.constant(grid, 0.0), "parallel")

    @classmethod
    def concircular(cls, f: Series):
        return cls(f, Series.constant(f.grid, 0.0), "concircular")

    @classmethod
    def anti_torqued(cls, f: Series):
        return cls(f, None, "anti-torqued")

    def omega_values(self, model: Model, curve: ArcLengthCurve, vectors) -> np.ndarray:
        if self.omega is not None:
            return self.omega.values
        return -self.f.values * model.inner(curve.points, vectors, curve.velocity)


def _as_vector(model, curve, V0):
    if isinstance(V0, TangentVector):
        if not np.allclose(V0.base, curve.points[0], rtol=0, atol=1e-9):
            raise InputError("initial vector is not based at the first curve point")
        V0 = V0.components
    V0 = np.asarray(V0, dtype=float)
    if V0.shape != (model.coord_dim,):
        raise InputError(f"initial vector needs {model.coord_dim} components")
    if model.embedded:
        p = curve.points[0]
        if abs(model.ambient_inner(V0, p)) > 1e-9 * max(1.0, model.c):
            raise InputError("initial vector is not tangent to the model")
    return V0


def _curve_splines(curve: ArcLengthCurve):
    s = curve.s
    acc = curve.derivs[0] if curve.derivs else \
        differentiate_series(Series(curve.grid, curve.velocity), 6).values
    X = CubicHermiteSpline(s, curve.points, curve.velocity, axis=0)
    T = CubicHermiteSpline(s, curve.velocity, acc, axis=0)
    return X, T


def transport_field(model: Model, curve: ArcLengthCurve, law: TorseFormingLaw,
                    V0) -> FieldAlongCurve:
    """Integrate nabla_T V = f T + omega(T) V from ``V0`` at the first node.

    For an anti-torqued law (``law.omega is None``) omega(T) is replaced by
    -f <V, T> at every stage, so a unit V0 stays unit.
    """
    return transport_fields(model, [curve], [law], [V0])[0]


def transport_fields(model: Model, curves: Sequence[ArcLengthCurve],
                     laws: Sequence[TorseFormingLaw], V0s) -> List[FieldAlongCurve]:
    """Batched :func:`transport_field`: one RK4 loop for many curves.

    All curves must live on the same grid in the same model; laws may mix
    prescribed omega and the anti-torqued closure.
    """
    if not (len(curves) == len(laws) == len(V0s)) or not curves:
        raise InputError("curves, laws and initial vectors must be non-empty and equally many")
    grid = curves[0].grid
    for c, law in zip(curves, laws):
        if not (c.grid.same_as(grid) and law.grid.same_as(grid)):
            raise InputError("law and curve live on different grids")
    V0 = np.array([_as_vector(model, c, v) for c, v in zip(curves, V0s)])
    tabs = [_curve_splines(c) for c in curves]
    xs = StageTable(grid, lambda a: np.stack([X(a) for X, _ in tabs], axis=1))
    ts = StageTable(grid, lambda a: np.stack([T(a) for _, T in tabs], axis=1))
    fs = StageTable(grid, lambda a: np.stack([np.broadcast_to(law.f.at(a), np.shape(a))
                                              for law in laws], axis=1))
    closure = np.array([law.omega is None for law in laws])
    ws = StageTable(grid, lambda a: np.stack(
        [np.zeros(np.shape(a)) if law.omega is None else
         np.broadcast_to(law.omega.at(a), np.shape(a)) for law in laws], axis=1))

    def rhs(s, V):
        x, T, f = xs(s), ts(s), fs(s)
        w = np.where(closure, -f * model.inner(x, V, T), ws(s))
        return f[:, None] * T + w[:, None] * V - model.christoffel(x, T, V)

    post = None
    if model.embedded:
        pts = {float(a): i for i, a in enumerate(grid.s)}
        P = np.stack([c.points for c in curves], axis=1)

        def post(s, V):
            return model.tangent_project(P[pts[s]], V)

    sol = integrate_ivp(rhs, V0, grid, post).values
    return [FieldAlongCurve(c, sol[:, b]) for b, c in enumerate(curves)]


@dataclass(eq=False)
class LawEstimate:
    """Result of :func:`estimate_law`. Unpacks as ``(law, rms)``."""

    law: TorseFormingLaw
    rms: float
    residual: Series
    skipped: np.ndarray
    torse_forming: bool
    class_defects: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual.values))

    def __iter__(self):
        yield self.law
        yield self.rms


def estimate_law(model: Model, curve: ArcLengthCurve, fld: FieldAlongCurve,
                 order: int = 6, tol: float = CLASS_TOL) -> LawEstimate:
    """Fit f and omega(T) node by node by projecting nabla_T V onto span{T, V}.

    Nodes where T and V are within ``ANGLE_SKIP`` radians of parallel are
    excluded from the fit and filled by interpolation. The remainder
    orthogonal to span{T, V} is the non-torse-forming residual.

    Raises
    ------
    DomainError
        If the field vanishes at some node.
    DegenerateFitError
        If T and V are parallel at every node.
    """
    x, T, V = curve.points, curve.velocity, fld.vectors
    vv = model.inner(x, V, V)
    if np.min(vv) <= 1e-24:
        i = int(np.argmin(vv))
        raise DomainError(f"field vanishes at s={curve.s[i]:.6g}")
    D = covariant_derivative_along(model, curve, fld, order).vectors
    tt = model.inner(x, T, T)
    tv = model.inner(x, T, V)
    dt = model.inner(x, D, T)
    dv = model.inner(x, D, V)
    det = tt * vv - tv * tv
    sin_angle = np.sqrt(np.clip(det / (tt * vv), 0.0, None))
    ok = sin_angle >= ANGLE_SKIP
    if not np.any(ok):
        raise DegenerateFitError("field is parallel to the tangent at every node")
    f = np.where(ok, (dt * vv - dv * tv) / np.where(ok, det, 1.0), 0.0)
    w = np.where(ok, (dv * tt - dt * tv) / np.where(ok, det, 1.0), 0.0)
    s = curve.s
    if not np.all(ok):
        f = np.interp(s, s[ok], f[ok])
        w = np.interp(s, s[ok], w[ok])
    R = D - f[:, None] * T - w[:, None] * V
    if model.embedded:
        R = model.tangent_project(x, R)
    # tangent spaces are Riemannian; clip rounding below zero
    res = np.sqrt(np.clip(model.inner(x, R, R), 0.0, None))
    grid = curve.grid
    defects = {
        "parallel": float(np.max(np.maximum(np.abs(f), np.abs(w)))),
        "concircular": float(np.max(np.abs(w))),
        "anti-torqued": float(np.max(np.abs(w + f * tv))),
    }
    torse = bool(np.max(res) <= RESIDUAL_TOL)
    note = ""
    if defects["parallel"] <= tol:
        kind = "parallel"
    elif defects["concircular"] <= tol:
        kind = "concircular"
    elif defects["anti-torqued"] <= tol:
        kind = "anti-torqued"
    else:
        kind, note = "generic", TORQUED_NOTE
    if not torse:
        note = "field is not torse-forming along this curve"
    law = TorseFormingLaw(Series(grid, f), Series(grid, w), kind, note, tol)
    return LawEstimate(law, float(np.sqrt(np.mean(res ** 2))), Series(grid, res), ~ok, torse,
                       defects)


# ---------------------------------------------------------------------------
# Catalog of global fields


@dataclass(eq=False)
class BuiltinField:
    """A globally defined torse-forming field with closed-form f and omega.

    ``omega(points, tangents)`` returns omega(X) for tangent vectors X; for
    anti-torqued fields it is -f <V, X>.
    """

    model: Model
    name: str
    kind: str
    _vec: callable = field(repr=False)
    _f: callable = field(repr=False)
    _omega: Optional[callable] = field(default=None, repr=False)

    def vectors(self, points):
        return self._vec(np.asarray(points, dtype=float))

    def potential(self, points):
        points = np.asarray(points, dtype=float)
        return np.broadcast_to(self._f(points), points.shape[:-1]).astype(float)

    def omega(self, points, tangents):
        points = np.asarray(points, dtype=float)
        if self.kind == "anti-torqued":
            V = self.vectors(points)
            return -self.potential(points) * self.model.inner(points, V, tangents)
        if self._omega is None:
            return np.zeros(points.shape[:-1])
        return self._omega(points, np.asarray(tangents, dtype=float))

    def along(self, curve: ArcLengthCurve):
        """Restriction to a curve as (FieldAlongCurve, TorseFormingLaw)."""
        grid = curve.grid
        V = FieldAlongCurve(curve, self.vectors(curve.points))
        f = Series(grid, self.potential(curve.points))
        w = Series(grid, self.omega(curve.points, curve.velocity))
        return V, TorseFormingLaw(f, w, self.kind)


def _param(params, key, default=None):
    v = params.get(key, default)
    if v is None:
        raise InputError(f"builtin field needs parameter {key!r}")
    return v


def builtin_field(model: Model, kind: str, **params) -> BuiltinField:
    """Look up a global torse-forming field by model and class.

    ===========  =============  =========================================
    model        kind           field
    ===========  =============  =========================================
    warped       concircular    rho d_t, f = rho'
    warped       torqued        h rho d_t, h = h(x_1) on the fiber (param
                                ``h``, expression in ``x``);
                                f = h rho', omega = d log h
    warped       anti-torqued   d_t, f = rho'/rho
    euclidean    concircular    r (Phi - center), f = r (param ``r``)
    euclidean    anti-torqued   (Phi - center)/|Phi - center|,
                                f = 1/|Phi - center|
    any chart    parallel       constant vector ``v`` (flat models only)
    sphere       concircular    tangent part of constant ``v``,
                                f = -<v, p>/c^2
    hyperboloid  concircular    tangent part of constant ``v``,
                                f = <v, p>_L/c^2
    halfspace    anti-torqued   -x_m d_{x_m}, f = 1
    ===========  =============  =========================================
    """
    kind = kind.lower()
    d = model.coord_dim

    def unsupported():
        return UnsupportedModelError(f"no builtin {kind} field on {model.spec}")

    if isinstance(model, WarpedProduct):
        rho, drho = model.rho, model.drho
        e_t = np.eye(d)[0]
        if kind == "concircular":
            return BuiltinField(model, "rho*d_t", kind,
                                lambda p: rho(p[..., 0])[..., None] * e_t,
                                lambda p: drho(p[..., 0]))
        if kind == "anti-torqued":
            return BuiltinField(model, "d_t", kind,
                                lambda p: np.broadcast_to(e_t, p.shape).copy(),
                                lambda p: drho(p[..., 0]) / rho(p[..., 0]))
        if kind == "torqued":
            from .expr import compile_expr

            h = compile_expr(str(_param(params, "h", "exp(x)")), "x")
            dh = h.diff()
            return BuiltinField(
                model, f"h*rho*d_t (h={h.text})", kind,
                lambda p: (h(p[..., 1]) * rho(p[..., 0]))[..., None] * e_t,
                lambda p: h(p[..., 1]) * drho(p[..., 0]),
                lambda p, X: dh(p[..., 1]) / h(p[..., 1]) * X[..., 1])
        raise unsupported()
    if isinstance(model, Euclidean):
        center = np.asarray(params.get("center", np.zeros(d)), dtype=float)
        if kind == "concircular":
            r = float(_param(params, "r", 1.0))
            return BuiltinField(model, f"{r:g}*Phi", kind, lambda p: r * (p - center),
                                lambda p: np.full(p.shape[:-1], r))

        def radial_norm(p):
            n = np.linalg.norm(p - center, axis=-1)
            if np.any(n <= 1e-12):
                raise DomainError("Phi/|Phi| is undefined at the center")
            return n

        if kind == "anti-torqued":
            return BuiltinField(model, "Phi/|Phi|", kind,
                                lambda p: (p - center) / radial_norm(p)[..., None],
                                lambda p: 1.0 / radial_norm(p))
        if kind == "parallel":
            v = np.asarray(_param(params, "v", np.eye(d)[0]), dtype=float)
            return BuiltinField(model, "constant", kind,
                                lambda p: np.broadcast_to(v, p.shape).copy(),
                                lambda p: np.zeros(p.shape[:-1]))
        raise unsupported()
    if isinstance(model, (Sphere, HyperbolicHyperboloid)):
        if kind != "concircular":
            raise unsupported()
        v = np.asarray(_param(params, "v", np.eye(d)[-1]), dtype=float)
        if v.shape != (d,):
            raise InputError(f"constant vector needs {d} components")
        sign = -1.0 if isinstance(model, Sphere) else 1.0
        c2 = model.c ** 2
        return BuiltinField(model, "tangent part of a constant vector", kind,
                            lambda p: model.tangent_project(p, v),
                            lambda p: sign * model.ambient_inner(p, v) / c2)
    if isinstance(model, HyperbolicHalfSpace):
        if kind != "anti-torqued":
            raise unsupported()
        e_m = np.eye(d)[-1]
        return BuiltinField(model, "-x_m*d_x_m", kind,
                            lambda p: -p[..., -1:] * e_m,
                            lambda p: np.ones(p.shape[:-1]))
    raise unsupported()
