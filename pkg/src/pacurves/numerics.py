"""Numerical kernels shared by every other module.

Fixed-step RK4, finite-difference differentiation on arbitrary grids,
cumulative quadrature with an explicit anchor, and linear least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline, make_interp_spline

from .errors import DegenerateFitError, DomainError, InputError, IntegrationBlowupError

DEFAULT_STEP = 1e-3
MIN_NODES = 5


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing parameter samples (arc length, usually)."""

    s: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1:
            raise InputError("grid must be one-dimensional")
        if s.size < MIN_NODES:
            raise InputError(f"grid needs at least {MIN_NODES} nodes, got {s.size}")
        if not np.all(np.isfinite(s)):
            raise InputError("grid contains non-finite values")
        ds = np.diff(s)
        span = s[-1] - s[0]
        if np.any(ds <= 0):
            raise InputError("grid must be strictly increasing")
        if ds.min() <= 1e-12 * max(span, 1.0):
            raise InputError("grid spacing collapses to zero")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @classmethod
    def uniform(cls, a: float, b: float, h: float = DEFAULT_STEP) -> "Grid":
        if not h > 0:
            raise InputError("step must be positive")
        if not b > a:
            raise InputError("span must be nondegenerate")
        n = int(round((b - a) / h))
        return cls(np.linspace(a, b, max(n, MIN_NODES - 1) + 1))

    def __len__(self):
        return self.s.size

    @property
    def h(self) -> float:
        """Mean spacing."""
        return float((self.s[-1] - self.s[0]) / (self.s.size - 1))

    @property
    def is_uniform(self) -> bool:
        return bool(np.allclose(np.diff(self.s), self.h, rtol=1e-9, atol=0.0))

    @property
    def mid_index(self) -> int:
        return self.s.size // 2

    def same_as(self, other: "Grid") -> bool:
        return self is other or (len(self) == len(other) and np.array_equal(self.s, other.s))

    def contains(self, s: float) -> bool:
        return self.s[0] <= s <= self.s[-1]


@dataclass(eq=False)
class Series:
    """Samples of a scalar or vector quantity on a grid.

    ``deriv`` holds exact derivative samples when they are known (closed
    forms); ``func`` evaluates the quantity off-grid when a closed form is
    available. Both are optional.
    """

    grid: Grid
    values: np.ndarray
    deriv: Optional[np.ndarray] = None
    func: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 0:
            self.values = np.full(len(self.grid), float(self.values))
        if self.values.shape[0] != len(self.grid):
            raise InputError(
                f"series has {self.values.shape[0]} samples for a grid of {len(self.grid)}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InputError("series contains non-finite samples")
        if self.deriv is not None:
            self.deriv = np.asarray(self.deriv, dtype=float)
            if self.deriv.shape != self.values.shape:
                self.deriv = np.broadcast_to(self.deriv, self.values.shape).copy()

    @classmethod
    def from_function(cls, grid: Grid, func, deriv=None) -> "Series":
        """Sample ``func`` (and optionally its derivative ``deriv``) on ``grid``."""
        values = np.broadcast_to(np.asarray(func(grid.s), dtype=float), (len(grid),)).copy()
        d = None
        if deriv is not None:
            d = np.broadcast_to(np.asarray(deriv(grid.s), dtype=float), (len(grid),)).copy()
        return cls(grid, values, d, func)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "Series":
        return cls(grid, np.full(len(grid), float(c)), np.zeros(len(grid)),
                   lambda s: np.full(np.shape(s), float(c)))

    @property
    def s(self) -> np.ndarray:
        return self.grid.s

    def __len__(self):
        return self.values.shape[0]

    def derivative(self, order: int = 2) -> np.ndarray:
        """Exact derivative samples if known, otherwise finite differences."""
        if self.deriv is not None:
            return self.deriv
        return differentiate_series(self, order).values

    def at(self, s):
        """Evaluate off-grid: closed form when available, else a cubic spline."""
        if self.func is not None:
            out = np.asarray(self.func(s), dtype=float)
            return np.broadcast_to(out, np.shape(s) + self.values.shape[1:]).copy()
        return self._spline()(s)

    def _spline(self):
        sp = getattr(self, "_cached_spline", None)
        if sp is None:
            if self.deriv is not None:
                sp = CubicHermiteSpline(self.s, self.values, self.deriv, axis=0)
            else:
                sp = CubicSpline(self.s, self.values, axis=0)
            self._cached_spline = sp
        return sp

    def with_values(self, values, deriv=None) -> "Series":
        return Series(self.grid, values, deriv)


def _check_same_grid(*series: Series) -> Grid:
    grid = series[0].grid
    for x in series[1:]:
        if not grid.same_as(x.grid):
            raise InputError("series live on different grids")
    return grid


# ---------------------------------------------------------------------------
# ODE integration


def rk4_abscissae(grid: Grid) -> np.ndarray:
    """Stage abscissae (s_i, s_i + h_i/2, s_{i+1}) used by :func:`integrate_ivp`.

    Callers that tabulate coefficients ahead of time should evaluate them
    at exactly these values.
    """
    s = grid.s
    h = np.diff(s)
    return np.column_stack([s[:-1], s[:-1] + 0.5 * h, s[1:]])


class StageTable:
    """Vectorized function pre-evaluated at the RK4 stage abscissae of a grid.

    Calls with one of those abscissae are dictionary lookups; anything else
    falls back to calling the function directly.
    """

    def __init__(self, grid: Grid, func: Callable):
        pts = np.unique(rk4_abscissae(grid).ravel())
        self._func = func
        self._values = np.asarray(func(pts))
        self._index = {float(x): i for i, x in enumerate(pts)}

    def __call__(self, s: float):
        i = self._index.get(s)
        if i is None:
            return np.asarray(self._func(np.atleast_1d(s)))[0]
        return self._values[i]


def integrate_ivp(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    grid: Grid,
    post_step: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
) -> Series:
    """Classical fourth-order Runge-Kutta, one step per grid interval.

    Parameters
    ----------
    rhs : callable
        ``rhs(s, y)`` returning dy/ds with the shape of ``y``.
    y0 : array_like
        Initial state at ``grid.s[0]``; any shape.
    grid : Grid
        Output nodes; each interval is one RK4 step.
    post_step : callable, optional
        ``post_step(s, y) -> y`` applied after every step, e.g. to
        re-project onto a constraint manifold.

    Returns
    -------
    Series
        Values of shape ``(len(grid),) + shape(y0)``.

    Raises
    ------
    IntegrationBlowupError
        As soon as a non-finite state appears; ``s_last`` is the last node
        with a finite state.
    """
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise InputError("initial state is not finite")
    stages = rk4_abscissae(grid)
    out = np.empty((len(grid),) + y.shape)
    out[0] = y
    for i, (s0, sm, s1) in enumerate(stages):
        h = s1 - s0
        k1 = rhs(s0, y)
        k2 = rhs(sm, y + (0.5 * h) * k1)
        k3 = rhs(sm, y + (0.5 * h) * k2)
        k4 = rhs(s1, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if post_step is not None:
            y = post_step(s1, y)
        if not np.all(np.isfinite(y)):
            raise IntegrationBlowupError(
                f"non-finite state after s={s0:.6g}", s_last=float(s0))
        out[i + 1] = y
    return Series(grid, out)


# ---------------------------------------------------------------------------
# Differentiation


def _fornberg(x0, xs, m: int = 1):
    """Finite-difference weights for derivatives 0..m at ``x0`` (Fornberg 1988).

    Works with floats or Fractions; returns ``c[k][j]``, the weight of
    ``xs[j]`` in the k-th derivative.
    """
    n = len(xs)
    zero = x0 - x0
    c = [[zero] * n for _ in range(m + 1)]
    c[0][0] = zero + 1
    c1 = zero + 1
    c4 = xs[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = zero + 1
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 = c2 * c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2
            for k in range(mn, 0, -1):
                c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3
            c[0][j] = c4 * c[0][j] / c3
        c1 = c2
    return c


@lru_cache(maxsize=None)
def _uniform_weights(offsets: tuple) -> np.ndarray:
    # exact rationals, so the weights sum to zero in floating point too
    w = _fornberg(Fraction(0), [Fraction(o) for o in offsets], 1)[1]
    return np.array([float(x) for x in w])


def _stencil_starts(n: int, width: int) -> np.ndarray:
    half = (width - 1) // 2
    return np.clip(np.arange(n) - half, 0, n - width)


def differentiate_series(x: Series, order: int = 2) -> Series:
    """Finite-difference derivative of a scalar or vector series.

    Central differences of the given (even) order in the interior and
    one-sided stencils of the same order near the ends, so the accuracy is
    uniform over the whole grid.
    """
    if order not in (2, 4, 6, 8):
        raise InputError("order must be 2, 4, 6 or 8")
    n = len(x.grid)
    width = order + 1
    if n < max(MIN_NODES, width):
        raise InputError(f"need at least {max(MIN_NODES, width)} nodes to differentiate")
    s = x.grid.s
    starts = _stencil_starts(n, width)
    idx = starts[:, None] + np.arange(width)[None, :]
    if x.grid.is_uniform:
        h = x.grid.h
        offs = idx - np.arange(n)[:, None]
        table = {}
        W = np.empty((n, width))
        for i in range(n):
            key = tuple(int(o) for o in offs[i])
            if key not in table:
                table[key] = _uniform_weights(key)
            W[i] = table[key]
        W /= h
    else:
        W = np.empty((n, width))
        for i in range(n):
            W[i] = _fornberg(float(s[i]), [float(v) for v in s[idx[i]]], 1)[1]
    vals = x.values
    if vals.ndim == 1:
        d = np.einsum("nk,nk->n", W, vals[idx])
    else:
        d = np.einsum("nk,nk...->n...", W, vals[idx])
    return Series(x.grid, d)


# ---------------------------------------------------------------------------
# Quadrature


def cumulative_integral(x: Series, anchor=None, order: int = 2) -> Series:
    """Antiderivative of a scalar series pinned to a value at an anchor.

    Parameters
    ----------
    x : Series
        Integrand samples.
    anchor : (float, float), optional
        ``(s_star, value)``; the result equals ``value`` at ``s_star``.
        Defaults to ``(s_0, 0)``.
    order : {2, 4}
        2 is the trapezoid rule. 4 integrates the cubic Hermite interpolant
        (trapezoid plus endpoint-derivative correction), using exact
        derivatives when the series carries them.
    """
    s = x.grid.s
    if anchor is None:
        anchor = (s[0], 0.0)
    s_star, value = float(anchor[0]), float(anchor[1])
    if not x.grid.contains(s_star):
        raise DomainError(f"anchor s={s_star} lies outside [{s[0]}, {s[-1]}]")
    if x.values.ndim != 1:
        raise InputError("cumulative_integral expects a scalar series")
    if order == 2:
        antider = make_interp_spline(s, x.values, k=1).antiderivative()
    elif order == 4:
        antider = CubicHermiteSpline(s, x.values, x.derivative(6)).antiderivative()
    else:
        raise InputError("order must be 2 or 4")
    F = antider(s)
    F = F - antider(s_star) + value
    return Series(x.grid, F, deriv=x.values.copy())


# ---------------------------------------------------------------------------
# Least squares


def fit_linear_basis(basis: Sequence[Series], target: Series, rcond: float = 1e-10):
    """Least-squares coefficients of ``target`` in the span of ``basis``.

    Returns
    -------
    coefficients : ndarray
    rms : float
        Root-mean-square residual of the fit.

    Raises
    ------
    DegenerateFitError
        If the design matrix is numerically rank deficient.
    """
    if not basis:
        raise InputError("empty basis")
    _check_same_grid(target, *basis)
    A = np.column_stack([b.values for b in basis])
    y = target.values
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= rcond * sv[0]:
        raise DegenerateFitError(
            f"basis is rank deficient (singular value ratio {sv[-1] / sv[0]:.3g})")
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return coef, rms
