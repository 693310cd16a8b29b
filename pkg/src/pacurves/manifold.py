"""Model Riemannian spaces: metric, Levi-Civita connection, orientation.

Every model works on coordinate arrays with a trailing coordinate axis,
vectorized over any leading axes. Chart models (Euclidean, upper
half-space, warped product) use chart coordinates; embedded models
(sphere, hyperboloid) use ambient coordinates in R^{m+1}, with tangent
vectors represented by ambient vectors orthogonal to the position.

The connection is exposed as a bilinear correction ``christoffel(p, u, v)``
such that the covariant derivative of a field V along a curve with velocity
u is ``dV/ds + christoffel(p, u, V)``. All arithmetic is free of abs/conj,
so complex-step differentiation passes straight through.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InputError, UnsupportedModelError, UsageError
from .numerics import Series, differentiate_series

HALFSPACE_EPS = 1e-8
POINT_TOL = 1e-9


def _dtype(*arrays):
    return np.result_type(*arrays, float)


class Model:
    """Base class; subclasses fill in the metric and connection."""

    kind = "abstract"
    embedded = False

    def __init__(self, dim: int):
        if int(dim) != dim or dim < 2:
            raise InputError("model dimension must be an integer >= 2")
        self.dim = int(dim)

    @property
    def coord_dim(self) -> int:
        return self.dim + 1 if self.embedded else self.dim

    # -- metric -----------------------------------------------------------
    def metric_diag(self, p):
        """Diagonal of the (ambient, for embedded models) metric at ``p``."""
        raise NotImplementedError

    def inner(self, p, u, v):
        return (self.metric_diag(p) * u * v).sum(axis=-1)

    def norm(self, p, u):
        return np.sqrt(self.inner(p, u, u))

    # -- connection -------------------------------------------------------
    def christoffel(self, p, u, v):
        raise NotImplementedError

    def covariant_derivative(self, p, u, v, dv):
        """Pointwise covariant derivative of a field with value ``v`` and
        coordinate derivative ``dv`` along velocity ``u`` at ``p``."""
        return dv + self.christoffel(p, u, v)

    # -- points and frames ------------------------------------------------
    def check_points(self, p, tol: float = POINT_TOL):
        p = np.asarray(p)
        if p.shape[-1] != self.coord_dim:
            raise InputError(f"{self.spec} points need {self.coord_dim} coordinates")
        if not np.all(np.isfinite(p)):
            raise DomainError("non-finite point")

    def default_point(self) -> np.ndarray:
        return np.zeros(self.coord_dim)

    def canonical_frame(self, p) -> np.ndarray:
        """Positively oriented orthonormal frame at ``p`` as an (m, d) array."""
        raise NotImplementedError

    def volume(self, p, frame):
        """Determinant of the frame (plus position column for embedded models).

        Positive for positively oriented frames. ``frame`` has shape
        (..., m, d).
        """
        frame = np.asarray(frame)
        cols = np.swapaxes(frame, -1, -2)
        if self.embedded:
            p = np.asarray(p)
            cols = np.concatenate([cols, p[..., :, None]], axis=-1)
        return np.linalg.det(cols)

    def complete_frame(self, p, vectors):
        """Unit vector completing ``vectors`` (shape (..., m-1, d)) to a
        positively oriented orthonormal frame."""
        vectors = np.asarray(vectors)
        d = self.coord_dim
        lead = vectors.shape[:-2]
        cols = np.swapaxes(vectors, -1, -2)
        k = cols.shape[-1]
        M = np.zeros(lead + (d, d), dtype=_dtype(vectors, p))
        M[..., :, :k] = cols
        if self.embedded:
            M[..., :, k + 1] = p
        alpha = np.empty(lead + (d,), dtype=M.dtype)
        for j in range(d):
            M[..., :, k] = 0.0
            M[..., j, k] = 1.0
            alpha[..., j] = np.linalg.det(M)
        y = alpha / self.metric_diag(p)
        return y / self.norm(p, y)[..., None]

    def orthonormalize(self, p, vectors):
        """Metric Gram-Schmidt over the second-to-last axis of ``vectors``."""
        vectors = np.array(vectors, dtype=_dtype(vectors, p))
        out = np.empty_like(vectors)
        for i in range(vectors.shape[-2]):
            w = vectors[..., i, :]
            for j in range(i):
                w = w - self.inner(p, w, out[..., j, :])[..., None] * out[..., j, :]
            out[..., i, :] = w / self.norm(p, w)[..., None]
        return out

    @property
    def spec(self) -> str:
        return f"{self.kind}:{self.dim}"

    def describe(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec}>"


class Euclidean(Model):
    kind = "euclidean"

    def metric_diag(self, p):
        return np.ones(np.shape(p))

    def christoffel(self, p, u, v):
        return np.zeros(np.broadcast(u, v).shape, dtype=_dtype(u, v))

    def canonical_frame(self, p=None):
        return np.eye(self.dim)


class HyperbolicHalfSpace(Model):
    """Upper half-space with metric x_m^{-2} times the Euclidean one."""

    kind = "halfspace"

    def metric_diag(self, p):
        y = np.asarray(p)[..., -1:]
        return np.broadcast_to(1.0 / (y * y), np.shape(p))

    def inner(self, p, u, v):
        y = np.asarray(p)[..., -1]
        return (u * v).sum(axis=-1) / (y * y)

    def christoffel(self, p, u, v):
        # conformal factor exp(2 phi), phi = -log x_m, so d phi = -dx_m / x_m
        y = np.asarray(p)[..., -1:]
        out = -(u * v[..., -1:] + v * u[..., -1:]) / y
        out[..., -1] += (u * v).sum(axis=-1) / y[..., 0]
        return out

    def check_points(self, p, tol: float = POINT_TOL):
        super().check_points(p, tol)
        if np.any(np.real(np.asarray(p)[..., -1]) <= HALFSPACE_EPS):
            raise DomainError(f"half-space point with x_{self.dim} <= {HALFSPACE_EPS}")

    def default_point(self):
        p = np.zeros(self.dim)
        p[-1] = 1.0
        return p

    def canonical_frame(self, p):
        return np.real(np.asarray(p)[-1]) * np.eye(self.dim)


class WarpedProduct(Model):
    """Interval J times a flat fiber, metric dt^2 + rho(t)^2 |dx|^2.

    Coordinates are (t, x_1, ..., x_{m-1}). ``rho`` may be an expression
    string in ``t`` (its derivative is then exact) or a callable, in which
    case ``drho`` is required.
    """

    kind = "warped"

    def __init__(self, dim: int, rho="exp(t)", drho: Optional[Callable] = None):
        super().__init__(dim)
        if isinstance(rho, str):
            from .expr import compile_expr

            e = compile_expr(rho, "t")
            self.rho_text = rho
            self.rho, self.drho = e, e.diff()
        else:
            if drho is None:
                raise InputError("a callable warping function needs its derivative")
            self.rho_text = getattr(rho, "__name__", "custom")
            self.rho, self.drho = rho, drho

    def metric_diag(self, p):
        p = np.asarray(p)
        r = self.rho(p[..., 0])
        out = np.empty(p.shape, dtype=_dtype(p, r))
        out[..., 0] = 1.0
        out[..., 1:] = (r * r)[..., None]
        return out

    def christoffel(self, p, u, v):
        t = np.asarray(p)[..., 0]
        r = self.rho(t)
        dr = self.drho(t)
        out = np.empty(np.broadcast(u, v).shape, dtype=_dtype(u, v, r))
        out[..., 0] = -r * dr * (u[..., 1:] * v[..., 1:]).sum(axis=-1)
        out[..., 1:] = (dr / r)[..., None] * (u[..., :1] * v[..., 1:] + u[..., 1:] * v[..., :1])
        return out

    def check_points(self, p, tol: float = POINT_TOL):
        super().check_points(p, tol)
        if np.any(np.real(self.rho(np.real(np.asarray(p)[..., 0]))) <= 0):
            raise DomainError("warping function is not positive at a sample")

    def canonical_frame(self, p):
        r = float(np.real(self.rho(np.real(p[0]))))
        e = np.eye(self.dim)
        e[1:, 1:] /= r
        return e

    @property
    def spec(self):
        return f"warped:{self.dim}:{self.rho_text}"

    def describe(self):
        return {"kind": self.kind, "dim": self.dim, "rho": self.rho_text}


class _Embedded(Model):
    embedded = True

    def __init__(self, dim: int, c: float = 1.0):
        super().__init__(dim)
        if not c > 0:
            raise InputError("radius c must be positive")
        self.c = float(c)

    def ambient_inner(self, u, v):
        return self.inner(None, u, v)

    def tangent_project(self, p, v):
        """Ambient-metric orthogonal projection of ``v`` onto T_pM."""
        # <p, p> = +-c^2, so the normal part of v is <v, p> p / <p, p>
        pp = self.ambient_inner(p, p)
        return v - (self.ambient_inner(v, p) / pp)[..., None] * p

    def covariant_derivative(self, p, u, v, dv):
        # ambient derivative followed by tangential projection
        return self.tangent_project(p, dv)

    def project_point(self, p):
        raise NotImplementedError

    def constraint_defect(self, p):
        raise NotImplementedError

    def check_points(self, p, tol: float = POINT_TOL):
        super().check_points(p, tol)
        if np.max(np.abs(self.constraint_defect(np.real(p)))) > tol:
            raise DomainError(f"point(s) off the {self.kind} beyond {tol:g}")

    def default_point(self):
        p = np.zeros(self.coord_dim)
        p[-1] = self.c
        return p

    def canonical_frame(self, p):
        p = np.asarray(p, dtype=float)
        cand = self.tangent_project(p, np.eye(self.coord_dim))
        order = np.argsort(-self.norm(p, cand), kind="stable")[: self.dim - 1]
        base = self.orthonormalize(p, cand[np.sort(order)])
        last = self.complete_frame(p, base)
        return np.vstack([base, last])

    @property
    def spec(self):
        return f"{self.kind}:{self.dim}:{self.c:g}"

    def describe(self):
        return {"kind": self.kind, "dim": self.dim, "c": self.c}


class Sphere(_Embedded):
    """Round sphere |x| = c in Euclidean R^{m+1} (c is the radius)."""

    kind = "sphere"

    def metric_diag(self, p):
        return np.ones(self.coord_dim)

    def christoffel(self, p, u, v):
        # Gauss formula: ambient derivative = covariant derivative - <u,v> p / c^2
        return ((u * v).sum(axis=-1) / self.c ** 2)[..., None] * p

    def project_point(self, p):
        return self.c * p / np.linalg.norm(p, axis=-1, keepdims=True)

    def constraint_defect(self, p):
        return np.linalg.norm(p, axis=-1) - self.c


class HyperbolicHyperboloid(_Embedded):
    """Upper sheet <x, x>_L = -c^2 in Lorentz space, signature (+,...,+,-)."""

    kind = "hyperboloid"

    def metric_diag(self, p):
        g = np.ones(self.coord_dim)
        g[-1] = -1.0
        return g

    def christoffel(self, p, u, v):
        return (-self.inner(p, u, v) / self.c ** 2)[..., None] * p

    def project_point(self, p):
        q = -self.ambient_inner(p, p)
        return self.c * p / np.sqrt(q)[..., None]

    def constraint_defect(self, p):
        q = -self.ambient_inner(p, p)
        return np.sqrt(np.maximum(q, 0.0)) - self.c

    def check_points(self, p, tol: float = POINT_TOL):
        super().check_points(p, tol)
        if np.any(np.real(np.asarray(p)[..., -1]) <= 0):
            raise DomainError("point on the lower sheet of the hyperboloid")


MODEL_KINDS = {
    "euclidean": "euclidean:M            flat R^M",
    "sphere": "sphere:M:C             sphere of radius C in R^(M+1)",
    "halfspace": "halfspace:M            upper half-space model of H^M(-1)",
    "hyperboloid": "hyperboloid:M:C        hyperboloid <x,x>=-C^2 in Lorentz R^(M+1)",
    "warped": "warped:M:RHO           interval x_RHO(t) R^(M-1), RHO an expression in t",
}


def model_from_spec(spec: str) -> Model:
    """Build a model from ``kind:dim[:param]``, e.g. ``sphere:3:2`` or
    ``warped:3:exp(t)``."""
    parts = spec.split(":", 2)
    kind = parts[0].strip().lower()
    try:
        dim = int(parts[1])
    except (IndexError, ValueError):
        raise UsageError(f"model spec {spec!r} lacks a dimension") from None
    param = parts[2] if len(parts) > 2 else None
    if kind == "euclidean":
        return Euclidean(dim)
    if kind == "halfspace":
        return HyperbolicHalfSpace(dim)
    if kind == "sphere":
        return Sphere(dim, float(param) if param else 1.0)
    if kind == "hyperboloid":
        return HyperbolicHyperboloid(dim, float(param) if param else 1.0)
    if kind == "warped":
        return WarpedProduct(dim, param or "exp(t)")
    raise UsageError(f"unknown model kind {kind!r}")


def model_from_dict(d: dict) -> Model:
    kind = d["kind"]
    dim = d["dim"]
    if kind == "sphere":
        return Sphere(dim, d.get("c", 1.0))
    if kind == "hyperboloid":
        return HyperbolicHyperboloid(dim, d.get("c", 1.0))
    if kind == "warped":
        return WarpedProduct(dim, d.get("rho", "exp(t)"))
    return model_from_spec(f"{kind}:{dim}")


# ---------------------------------------------------------------------------
# Point-level API


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))


def _require_same_base(p, *vectors):
    for v in vectors:
        if v.base.shape != np.shape(p) or not np.allclose(v.base, p, rtol=0, atol=1e-12):
            raise UsageError("tangent vector is not based at the given point")


def metric_eval(model: Model, p, u: TangentVector, v: TangentVector) -> float:
    """Inner product of two tangent vectors at ``p``."""
    p = np.asarray(p, dtype=float)
    _require_same_base(p, u, v)
    model.check_points(p)
    if model.embedded:
        for w in (u, v):
            if abs(model.ambient_inner(w.components, p)) > POINT_TOL * max(1.0, model.c):
                raise DomainError("vector is not tangent to the model at p")
    return float(model.inner(p, u.components, v.components))


def tangent_project(model: Model, p, v) -> TangentVector:
    """Project an ambient vector onto the tangent space of an embedded model."""
    if not model.embedded:
        raise UnsupportedModelError(f"{model.spec} is not an embedded model")
    p = np.asarray(p, dtype=float)
    model.check_points(p)
    return TangentVector(p, model.tangent_project(p, np.asarray(v, dtype=float)))


# ---------------------------------------------------------------------------
# Fields along curves


@dataclass(eq=False)
class FieldAlongCurve:
    """One tangent vector per curve sample, based at that sample."""

    curve: "object"
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        n, d = self.curve.points.shape
        if self.vectors.shape != (n, d):
            raise InputError(f"field shape {self.vectors.shape} does not match curve ({n}, {d})")
        if not np.all(np.isfinite(self.vectors)):
            raise InputError("field contains non-finite vectors")

    @property
    def grid(self):
        return self.curve.grid

    def norms(self, model: Model) -> np.ndarray:
        return model.norm(self.curve.points, self.vectors)


def covariant_derivative_along(model: Model, curve, field: FieldAlongCurve,
                               order: int = 6) -> FieldAlongCurve:
    """Covariant derivative of ``field`` along ``curve``, node by node.

    Coordinate derivatives come from finite differences of the given
    ``order``; Euclidean fields are differentiated componentwise, embedded
    fields are differentiated in the ambient space and projected, chart
    models add their Christoffel terms.
    """
    if field.curve is not curve and not np.array_equal(field.curve.points, curve.points):
        raise UsageError("field is not based along this curve")
    if isinstance(model, HyperbolicHalfSpace):
        model.check_points(curve.points)
    dv = differentiate_series(Series(curve.grid, field.vectors), order).values
    return FieldAlongCurve(curve, model.covariant_derivative(curve.points, curve.velocity,
                                                             field.vectors, dv))
