"""Unit-speed curves, their Frenet apparatus, and reconstruction from curvatures."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import DegenerateCurveError, InputError, IntegrationError, RegularityError
from .manifold import FieldAlongCurve, Model, covariant_derivative_along
from .numerics import Grid, Series, StageTable, cumulative_integral, differentiate_series, integrate_ivp

PIVOT_TOL = 1e-7
UNIT_SPEED_TOL = 1e-6
FRAME_TOL = 1e-8
DRIFT_TOL = 1e-6
CURVE_POINT_TOL = 1e-6
DIFF_ORDER = 6
_CSTEP = 1e-30


@dataclass(eq=False)
class ArcLengthCurve:
    """A curve sampled on an arc-length grid.

    ``derivs`` optionally carries exact higher coordinate derivatives
    ``(x'', x''', ...)`` at the nodes; the Frenet apparatus then avoids
    finite differences where it can.
    """

    model: Model
    grid: Grid
    points: np.ndarray
    velocity: np.ndarray
    derivs: tuple = field(default=(), repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        n, d = len(self.grid), self.model.coord_dim
        if self.points.shape != (n, d) or self.velocity.shape != (n, d):
            raise InputError(f"curve arrays must have shape ({n}, {d})")
        self.model.check_points(self.points, CURVE_POINT_TOL)
        speed = self.model.norm(self.points, self.velocity)
        bad = np.abs(speed - 1.0) > UNIT_SPEED_TOL
        if np.any(bad):
            i = int(np.argmax(bad))
            raise RegularityError(
                f"curve is not unit speed at s={self.grid.s[i]:.6g} (speed {speed[i]:.9g})")
        self.derivs = tuple(np.asarray(a, dtype=float) for a in self.derivs)

    @property
    def s(self):
        return self.grid.s

    def __len__(self):
        return len(self.grid)

    def tangent_field(self) -> FieldAlongCurve:
        return FieldAlongCurve(self, self.velocity)

    def restrict(self, mask) -> "ArcLengthCurve":
        """Sub-curve on the nodes selected by a boolean mask (contiguous)."""
        idx = np.flatnonzero(mask)
        sl = slice(idx[0], idx[-1] + 1)
        return ArcLengthCurve(self.model, Grid(self.grid.s[sl]), self.points[sl],
                              self.velocity[sl], tuple(a[sl] for a in self.derivs))


@dataclass(eq=False)
class CurvatureProfile:
    """Curvatures kappa_1..kappa_{m-1} as series on a common grid."""

    curvatures: List[Series]

    def __post_init__(self):
        if not self.curvatures:
            raise InputError("a curvature profile needs at least one curvature")
        g = self.curvatures[0].grid
        for k in self.curvatures[1:]:
            if not g.same_as(k.grid):
                raise InputError("curvatures live on different grids")

    @property
    def grid(self) -> Grid:
        return self.curvatures[0].grid

    @property
    def kappa(self) -> Series:
        return self.curvatures[0]

    @property
    def tau(self) -> Series:
        if len(self.curvatures) < 2:
            raise InputError("profile has no torsion (two-dimensional curve)")
        return self.curvatures[1]

    def __len__(self):
        return len(self.curvatures)


@dataclass(eq=False)
class FrenetData:
    """Frenet frames ``frames[n, i]`` = X_{i+1} at node n, plus curvatures.

    In dimension 3 and higher the last frame vector completes the frame by
    orientation, so the last curvature is signed. In dimension 2 the normal
    is either the Frenet one (curvature >= 0) or the oriented one
    (``signed=True``).
    """

    grid: Grid
    frames: np.ndarray
    curvatures: List[Series]
    signed: bool = False

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    @property
    def T(self):
        return self.frames[:, 0]

    @property
    def N(self):
        return self.frames[:, 1]

    def B(self, i: int = 1):
        return self.frames[:, i + 1]

    @property
    def kappa(self) -> Series:
        return self.curvatures[0]

    @property
    def tau(self) -> Series:
        return self.curvatures[1]

    @property
    def profile(self) -> CurvatureProfile:
        return CurvatureProfile(list(self.curvatures))

    def gram_defect(self, model: Model, points) -> np.ndarray:
        """Per-node max |<X_i, X_j> - delta_ij|."""
        F = self.frames
        G = np.einsum("nid,nd,njd->nij", F, model.metric_diag(points) *
                      np.ones_like(F[:, 0]), F)
        return np.max(np.abs(G - np.eye(self.dim)), axis=(1, 2))

    def frenet_residual(self, model: Model, curve: ArcLengthCurve,
                        order: int = DIFF_ORDER) -> np.ndarray:
        """Per-node max over i of |nabla_T X_i - (-k_{i-1} X_{i-1} + k_i X_{i+1})|."""
        m = self.dim
        k = [c.values for c in self.curvatures]
        worst = np.zeros(len(self.grid))
        for i in range(m):
            D = covariant_derivative_along(model, curve,
                                           FieldAlongCurve(curve, self.frames[:, i]), order).vectors
            if i > 0:
                D = D + k[i - 1][:, None] * self.frames[:, i - 1]
            if i < m - 1:
                D = D - k[i][:, None] * self.frames[:, i + 1]
            worst = np.maximum(worst, model.norm(curve.points, D))
        return worst


# ---------------------------------------------------------------------------
# Arc length


def arclength_reparametrize(model: Model, t, points, velocity=None, n: Optional[int] = None,
                            s0: float = 0.0) -> ArcLengthCurve:
    """Resample a regular curve uniformly in arc length.

    Parameters
    ----------
    model : Model
    t : Grid or array_like
        Raw parameter values, strictly increasing.
    points : array_like, shape (len(t), d)
    velocity : array_like, optional
        d(points)/dt; estimated by finite differences when omitted.
    n : int, optional
        Number of output nodes (default: same as input).
    s0 : float
        Arc length assigned to the first point.

    Raises
    ------
    RegularityError
        If the raw speed vanishes somewhere.
    """
    grid = t if isinstance(t, Grid) else Grid(np.asarray(t, dtype=float))
    points = np.asarray(points, dtype=float)
    if velocity is None:
        velocity = differentiate_series(Series(grid, points), DIFF_ORDER).values
    velocity = np.asarray(velocity, dtype=float)
    speed = model.norm(points, velocity)
    if np.min(speed) <= 1e-10 * max(np.max(speed), 1e-300):
        i = int(np.argmin(speed))
        raise RegularityError(f"raw speed vanishes near t={grid.s[i]:.6g}")
    s_of_t = cumulative_integral(Series(grid, speed), (grid.s[0], 0.0), order=4).values
    length = s_of_t[-1]
    n = len(grid) if n is None else int(n)
    s_new = np.linspace(0.0, length, n)
    # monotone first guess, then Newton on the Hermite arc-length spline
    t_new = PchipInterpolator(s_of_t, grid.s)(s_new)
    S = CubicHermiteSpline(grid.s, s_of_t, speed)
    dS = S.derivative()
    for _ in range(4):
        t_new = np.clip(t_new - (S(t_new) - s_new) / dS(t_new), grid.s[0], grid.s[-1])
    P = CubicHermiteSpline(grid.s, points, velocity, axis=0)
    new_pts = P(t_new)
    new_vel = P.derivative()(t_new)
    if model.embedded:
        new_pts = model.project_point(new_pts)
        new_vel = model.tangent_project(new_pts, new_vel)
    new_vel = new_vel / model.norm(new_pts, new_vel)[:, None]
    new_pts[0], new_pts[-1] = points[0], points[-1]
    return ArcLengthCurve(model, Grid(s_new + s0), new_pts, new_vel)


# ---------------------------------------------------------------------------
# Frenet apparatus


def _normal_from_jet(model, x, x1, x2):
    """Principal normal and first curvature from a 2-jet (complex-safe)."""
    A = model.covariant_derivative(x, x1, x1, x2)
    A = A - (model.inner(x, A, x1) / model.inner(x, x1, x1))[..., None] * x1
    k = model.norm(x, A)
    return A / k[..., None], k


def _pivot_check(grid, k, i):
    bad = np.real(k) < PIVOT_TOL
    if np.any(bad):
        j = int(np.argmax(bad))
        raise DegenerateCurveError(
            f"Frenet curvature kappa_{i} vanishes at s={grid.s[j]:.6g} "
            f"(|k|={abs(k[j]):.3g} < {PIVOT_TOL:g})", s=float(grid.s[j]))


def _frenet_from_jet(model, curve, signed):
    m = model.dim
    x, x1 = curve.points, curve.velocity
    x2 = curve.derivs[0]
    grid = curve.grid
    if m == 2:
        A = model.covariant_derivative(x, x1, x1, x2)
        if signed:
            N = model.complete_frame(x, x1[:, None, :])
            k = model.inner(x, A, N)
        else:
            N, k = _normal_from_jet(model, x, x1, x2)
            _pivot_check(grid, k, 1)
        return FrenetData(grid, np.stack([x1, N], axis=1), [Series(grid, k)], signed)
    # m == 3: torsion from one complex step along the jet
    x3 = curve.derivs[1]
    N, k1 = _normal_from_jet(model, x, x1, x2)
    _pivot_check(grid, k1, 1)
    B = model.complete_frame(x, np.stack([x1, N], axis=1))
    h = _CSTEP
    Nc, _ = _normal_from_jet(model, x + 1j * h * x1, x1 + 1j * h * x2, x2 + 1j * h * x3)
    dN = np.imag(Nc) / h
    DN = model.covariant_derivative(x, x1, N, dN)
    k2 = model.inner(x, DN, B)
    return FrenetData(grid, np.stack([x1, N, B], axis=1), [Series(grid, k1), Series(grid, k2)],
                      True)


def frenet_apparatus(model: Model, curve: ArcLengthCurve, signed: Optional[bool] = None,
                     order: int = DIFF_ORDER) -> FrenetData:
    """Frenet frame and curvatures of a unit-speed curve.

    The frame is built by metric Gram-Schmidt on successive covariant
    derivatives, the last vector being completed by orientation (so the
    last curvature is signed in dimension >= 3). In dimension 2 the normal
    is the Frenet normal, with curvature > 0, unless ``signed`` is true, in
    which case it is the oriented normal and the curvature is signed.

    When the curve carries exact coordinate derivatives up to order m the
    computation is exact up to rounding (the one derivative of the normal
    needed for the torsion is taken by complex step); otherwise covariant
    derivatives use finite differences of the given order.

    Raises
    ------
    DegenerateCurveError
        When a non-final curvature drops below the pivot tolerance.
    """
    m = model.dim
    signed = bool(signed) if m == 2 else True
    if m <= 3 and len(curve.derivs) >= m - 1:
        return _frenet_from_jet(model, curve, signed)
    grid = curve.grid
    x = curve.points
    frames = [curve.velocity]
    ks = []
    for i in range(1, m):
        if i == 1 and curve.derivs:
            W = model.covariant_derivative(x, curve.velocity, curve.velocity, curve.derivs[0])
        else:
            W = covariant_derivative_along(model, curve, FieldAlongCurve(curve, frames[-1]),
                                           order).vectors
        if i < m - 1 or (m == 2 and not signed):
            U = W
            for X in frames:
                U = U - model.inner(x, U, X)[:, None] * X
            n = model.norm(x, U)
            _pivot_check(grid, n, i)
            nxt = U / n[:, None]
        else:
            nxt = model.complete_frame(x, np.stack(frames, axis=1))
        ks.append(Series(grid, model.inner(x, W, nxt)))
        frames.append(nxt)
    return FrenetData(grid, np.stack(frames, axis=1), ks, signed)


# ---------------------------------------------------------------------------
# Synthesis


@dataclass
class SynthesisAudit:
    max_gram_defect: float
    max_constraint_drift: float


def _check_frame0(model, p0, frame0):
    m = model.dim
    if frame0.shape != (m, model.coord_dim):
        raise InputError(f"initial frame must have shape ({m}, {model.coord_dim})")
    G = np.einsum("id,d,jd->ij", frame0, model.metric_diag(p0) * np.ones(model.coord_dim), frame0)
    defect = np.max(np.abs(G - np.eye(m)))
    if defect > FRAME_TOL:
        raise InputError(f"initial frame is not orthonormal (defect {defect:.3g})")
    if model.embedded:
        normal = np.abs(model.ambient_inner(frame0, p0[None, :]))
        if np.max(normal) > FRAME_TOL * max(1.0, model.c):
            raise InputError("initial frame is not tangent to the model")
    if model.volume(p0, frame0) <= 0:
        raise InputError("initial frame is not positively oriented")


def frenet_synthesize(model: Model, profile: CurvatureProfile, p0=None, frame0=None,
                      grid: Optional[Grid] = None):
    """Integrate the Frenet equations from an initial point and frame.

    Parameters
    ----------
    model : Model
    profile : CurvatureProfile
        kappa_1..kappa_{m-1}; values between grid nodes come from the
        series' closed form when present, else a cubic spline.
    p0, frame0 : array_like, optional
        Initial point and positively oriented orthonormal frame (rows
        X_1..X_m). Default to the model's canonical point and frame.
    grid : Grid, optional
        Defaults to the profile's grid.

    Returns
    -------
    (ArcLengthCurve, FrenetData)
        The frame is re-orthonormalized after every step; the returned
        FrenetData carries the prescribed curvatures.
    """
    m, d = model.dim, model.coord_dim
    if len(profile) != m - 1:
        raise InputError(f"a curve in dimension {m} needs {m - 1} curvatures")
    grid = grid or profile.grid
    for i, k in enumerate(profile.curvatures[: m - 2]):
        if np.any(k.values <= 0):
            raise InputError(f"kappa_{i + 1} must be positive on the grid")
    p0 = model.default_point() if p0 is None else np.asarray(p0, dtype=float)
    model.check_points(p0)
    frame0 = model.canonical_frame(p0) if frame0 is None else np.asarray(frame0, dtype=float)
    _check_frame0(model, p0, frame0)

    def generator(a):
        K = np.zeros(np.shape(a) + (m, m))
        for i, k in enumerate(profile.curvatures):
            K[..., i, i + 1] = k.at(a)
            K[..., i + 1, i] = -K[..., i, i + 1]
        return K

    Ks = StageTable(grid, generator)

    def rhs(s, Y):
        x, X = Y[0], Y[1:]
        dY = np.empty_like(Y)
        dY[0] = X[0]
        dY[1:] = Ks(s) @ X - model.christoffel(x, X[0], X)
        return dY

    audit = SynthesisAudit(0.0, 0.0)
    eye = np.eye(m)

    def post_step(s, Y):
        x, X = Y[0], Y[1:]
        if model.embedded:
            drift = float(abs(model.constraint_defect(x)))
            audit.max_constraint_drift = max(audit.max_constraint_drift, drift)
            if drift > DRIFT_TOL:
                raise IntegrationError(f"constraint drift {drift:.3g} at s={s:.6g}")
            x = model.project_point(x)
            X = model.tangent_project(x, X)
        G = (X * model.metric_diag(x)) @ X.T
        audit.max_gram_defect = max(audit.max_gram_defect, float(np.abs(G - eye).max()))
        # Gram-Schmidt in frame order: X <- L^{-1} X with G = L L^T
        X = np.linalg.solve(np.linalg.cholesky(G), X)
        out = np.empty_like(Y)
        out[0], out[1:] = x, X
        return out

    Y0 = np.vstack([p0[None, :], frame0])
    sol = integrate_ivp(rhs, Y0, grid, post_step).values
    points, frames = sol[:, 0], sol[:, 1:]
    curve = ArcLengthCurve(model, grid, points, frames[:, 0])
    curve.audit = audit
    fd = FrenetData(grid, frames, [Series(grid, k.values) for k in profile.curvatures],
                    signed=(m == 2) or m >= 3)
    return curve, fd
