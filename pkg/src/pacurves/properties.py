"""Seed-pinned randomized checks of the transport law and the PA system.

Random instances use closed-form unit-speed curves (helices, Clifford-type
curves, hyperbolic geodesics) so the only numerical error measured is that
of the code under test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.stats import special_ortho_group

from .curve import ArcLengthCurve
from .errors import InfeasibleProfileError
from .manifold import FieldAlongCurve, Model, covariant_derivative_along, model_from_spec
from .numerics import Grid, Series
from .transport import TorseFormingLaw, estimate_law, transport_fields

SUITE_MODELS = ("euclidean:2", "euclidean:3", "sphere:3:1.5", "hyperboloid:3:0.8",
                "halfspace:2", "halfspace:3", "warped:3:cosh(t)")
UNIT_NORM_TOL = 1e-8
LEMMA_TOL = 1e-6
RECOVERY_TOL = 1e-5
MIDDLE_TOL = 1e-8


class Sinusoid:
    """a + b sin(w s + phi) with exact derivatives (complex-safe)."""

    def __init__(self, a, b, w, phi):
        self.a, self.b, self.w, self.phi = float(a), float(b), float(w), float(phi)

    def __call__(self, s):
        return self.a + self.b * np.sin(self.w * np.asarray(s) + self.phi)

    def diff(self) -> "Sinusoid":
        return Sinusoid(0.0, self.b * self.w, self.w, self.phi + np.pi / 2)

    def series(self, grid: Grid) -> Series:
        return Series(grid, self(grid.s) * np.ones(len(grid)), self.diff()(grid.s), self)

    def __repr__(self):
        return f"{self.a:.6g} + {self.b:.6g}*sin({self.w:.6g}*s + {self.phi:.6g})"


# ---------------------------------------------------------------------------
# Random closed-form curves


def _rotation(rng, n):
    return special_ortho_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)


def random_curve(model: Model, grid: Grid, rng) -> ArcLengthCurve:
    """A random unit-speed curve in ``model`` with exact x'' and x'''."""
    s = grid.s[:, None]
    kind = model.kind
    if kind == "euclidean":
        a, b = rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0) if model.dim == 3 else 0.0
        w = 1 / np.hypot(a, b)
        ph = w * s
        jet = [np.hstack([a * np.cos(ph), a * np.sin(ph), b * ph]),
               w * np.hstack([-a * np.sin(ph), a * np.cos(ph), b + 0 * ph]),
               w ** 2 * np.hstack([-a * np.cos(ph), -a * np.sin(ph), 0 * ph]),
               w ** 3 * np.hstack([a * np.sin(ph), -a * np.cos(ph), 0 * ph])]
        jet = [j[:, : model.dim] for j in jet]
        Q = _rotation(rng, model.dim)
        shift = rng.normal(size=model.dim)
        jet = [j @ Q.T for j in jet]
        jet[0] = jet[0] + shift
    elif kind == "sphere":
        c = model.c
        al = rng.uniform(0.2, 1.3)
        u0, v0 = rng.uniform(0.3, 2.0, size=2)
        k = 1 / (c * np.sqrt(np.cos(al) ** 2 * u0 ** 2 + np.sin(al) ** 2 * v0 ** 2))
        u, v = k * u0, k * v0
        A, B = c * np.cos(al), c * np.sin(al)

        def d(n):
            return np.hstack([A * u ** n * np.cos(u * s + n * np.pi / 2),
                              A * u ** n * np.sin(u * s + n * np.pi / 2),
                              B * v ** n * np.cos(v * s + n * np.pi / 2),
                              B * v ** n * np.sin(v * s + n * np.pi / 2)])

        Q = _rotation(rng, 4)
        jet = [d(n) @ Q.T for n in range(4)]
    elif kind == "hyperboloid":
        c = model.c
        A = rng.uniform(0.2, 1.5)
        B = np.sqrt(A ** 2 + c ** 2)
        u0, v0 = rng.uniform(0.3, 2.0, size=2)
        k = 1 / np.sqrt(A ** 2 * u0 ** 2 + B ** 2 * v0 ** 2)
        u, v = k * u0, k * v0

        def d(n):
            hs, hc = (np.sinh(v * s), np.cosh(v * s)) if n % 2 == 0 else \
                (np.cosh(v * s), np.sinh(v * s))
            return np.hstack([A * u ** n * np.cos(u * s + n * np.pi / 2),
                              A * u ** n * np.sin(u * s + n * np.pi / 2),
                              B * v ** n * hs, B * v ** n * hc])

        R = np.eye(4)
        R[:3, :3] = _rotation(rng, 3)
        jet = [d(n) @ R.T for n in range(4)]
    elif kind == "halfspace":
        # geodesic half-circle x = c + R tanh(s + s0) e, y = R sech(s + s0)
        Rr = rng.uniform(0.5, 2.0)
        x = s + rng.uniform(-0.5, 0.5)
        th, sh = np.tanh(x), 1 / np.cosh(x)
        hor = [th, sh ** 2, -2 * th * sh ** 2, (4 * th ** 2 - 2 * sh ** 2) * sh ** 2]
        ver = [sh, -sh * th, sh * (th ** 2 - sh ** 2), sh * th * (5 * sh ** 2 - th ** 2)]
        e = _rotation(rng, model.dim - 1)[0]
        base = np.r_[rng.normal(size=model.dim - 1), 0.0]
        jet = [Rr * np.hstack([h * e, v]) for h, v in zip(hor, ver)]
        jet[0] = jet[0] + base
    elif kind == "warped":
        x0 = rng.normal(size=model.dim - 1)
        t = s + rng.uniform(-0.5, 0.5)
        z = np.zeros_like(s)
        jet = [np.hstack([t] + [z + c for c in x0]), np.hstack([z + 1] + [z] * (model.dim - 1)),
               np.hstack([z] * model.dim), np.hstack([z] * model.dim)]
    else:
        raise ValueError(kind)
    return ArcLengthCurve(model, grid, jet[0], jet[1], (jet[2], jet[3]))


def random_unit_vector(model: Model, p, T, rng, min_angle: float = 0.2):
    """Random unit tangent vector at ``p`` at least ``min_angle`` away from +-T."""
    while True:
        v = rng.normal(size=model.coord_dim)
        if model.embedded:
            v = model.tangent_project(p, v)
        v = v / model.norm(p, v)
        if abs(model.inner(p, v, T)) < np.cos(min_angle):
            return v


# ---------------------------------------------------------------------------
# Transport suite


@dataclass
class TransportCase:
    model: Model
    curve: ArcLengthCurve
    f: Sinusoid
    V0: np.ndarray


def _random_potential(rng, zero_fraction: float = 0.25) -> Sinusoid:
    if rng.uniform() < zero_fraction:
        return Sinusoid(0, 0, 1, 0)
    a0 = rng.choice([-1, 1]) * rng.uniform(0.3, 1.0)
    return Sinusoid(a0, rng.uniform(-0.2, 0.2), rng.uniform(0.5, 3.0), rng.uniform(0, 2 * np.pi))


def transport_cases(seed: int = 0, n: int = 100, step: float = 1e-3) -> List[TransportCase]:
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(0.0, 1.0, step)
    models = {spec: model_from_spec(spec) for spec in SUITE_MODELS}
    cases = []
    for _ in range(n):
        model = models[SUITE_MODELS[rng.integers(len(SUITE_MODELS))]]
        curve = random_curve(model, grid, rng)
        f = _random_potential(rng)
        V0 = random_unit_vector(model, curve.points[0], curve.velocity[0], rng)
        cases.append(TransportCase(model, curve, f, V0))
    return cases


def _quantity(name, values, tol, **extra):
    values = np.abs(np.asarray(values, dtype=float))
    mx = float(np.max(values)) if values.size else 0.0
    rms = float(np.sqrt(np.mean(values ** 2))) if values.size else 0.0
    q = {"name": name, "max_err": mx, "rms": rms, "tolerance": float(tol),
         "pass": bool(np.isfinite(mx) and mx <= tol)}
    q.update(extra)
    return q


def run_transport_suite(seed: int = 0, n: int = 100, step: float = 1e-3) -> dict:
    """Transport random unit fields with the anti-torqued closure and check:

    - the norm stays 1 (within 1e-8);
    - the potential vanishes iff the field is parallel (both at 1e-6);
    - estimate_law recovers f and omega(T) = -f <V, T> (rms within 1e-5).
    """
    cases = transport_cases(seed, n, step)
    fields: List[FieldAlongCurve] = [None] * len(cases)
    groups = {}
    for i, c in enumerate(cases):
        groups.setdefault(c.model.spec, []).append(i)
    for idx in groups.values():
        model = cases[idx[0]].model
        laws = [TorseFormingLaw.anti_torqued(cases[i].f.series(cases[i].curve.grid)) for i in idx]
        out = transport_fields(model, [cases[i].curve for i in idx], laws,
                               [cases[i].V0 for i in idx])
        for i, fld in zip(idx, out):
            fields[i] = fld
    norm_err, f_rms, w_rms = [], [], []
    forward = backward = n_zero = n_parallel = 0
    for c, fld in zip(cases, fields):
        x, T, V = c.curve.points, c.curve.velocity, fld.vectors
        norm_err.append(np.max(np.abs(c.model.norm(x, V) - 1)))
        est = estimate_law(c.model, c.curve, fld)
        f_true = c.f(c.curve.s) * np.ones(len(x))
        w_true = -f_true * c.model.inner(x, V, T)
        f_rms.append(np.sqrt(np.mean((est.law.f.values - f_true) ** 2)))
        w_rms.append(np.sqrt(np.mean((est.law.omega.values - w_true) ** 2)))
        zero_f = np.max(np.abs(est.law.f.values)) <= LEMMA_TOL
        dV = covariant_derivative_along(c.model, c.curve, fld).vectors
        parallel = np.max(c.model.norm(x, dV)) <= LEMMA_TOL
        n_zero += zero_f
        n_parallel += parallel
        forward += zero_f and not parallel
        backward += parallel and not zero_f
    quantities = [
        _quantity("unit_norm_preservation", norm_err, UNIT_NORM_TOL),
        _quantity("zero_potential_implies_parallel", [forward], 0.0,
                  instances=int(n_zero)),
        _quantity("parallel_implies_zero_potential", [backward], 0.0,
                  instances=int(n_parallel)),
        _quantity("law_recovery_f_rms", f_rms, RECOVERY_TOL),
        _quantity("law_recovery_omega_rms", w_rms, RECOVERY_TOL),
    ]
    return {"suite": "transport", "seed": int(seed), "instances": len(cases),
            "models": sorted(groups), "quantities": quantities,
            "verdict": "pass" if all(q["pass"] for q in quantities) else "fail"}


# ---------------------------------------------------------------------------
# Consistency of the PA system


def random_pa_triple(rng, grid: Grid, max_tries: int = 100):
    """Random feasible (f, theta, lam0, sign) with kappa > 0 on the grid.

    Returns the triple and the :class:`PACurvatures3D` it forces.
    """
    from .pa_synthesis import pa_curvatures_3d

    for _ in range(max_tries):
        f = Sinusoid(rng.uniform(0.3, 1.5), rng.uniform(-0.2, 0.2), rng.uniform(0.5, 2.0),
                     rng.uniform(0, 2 * np.pi))
        th = Sinusoid(rng.uniform(np.pi / 2 + 0.4, np.pi - 0.4), rng.uniform(-0.2, 0.2),
                      rng.uniform(0.5, 2.0), rng.uniform(0, 2 * np.pi))
        smin = float(np.min(np.sin(th(grid.s))))
        lam0 = Sinusoid(0.0, rng.uniform(-0.8, 0.8) * smin, rng.uniform(0.5, 2.0),
                        rng.uniform(0, 2 * np.pi))
        sign = int(rng.choice([-1, 1]))
        try:
            pc = pa_curvatures_3d(f.series(grid), th.series(grid), lam0.series(grid), sign)
        except InfeasibleProfileError:
            continue
        return (f, th, lam0, sign), pc
    raise InfeasibleProfileError("no feasible random triple found")


def run_consistency_suite(seed: int = 0, n: int = 100, step: float = 1e-3) -> dict:
    """The N-component equation holds after solving the other two for kappa, tau."""
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(-1.0, 1.0, step)
    worst = []
    for _ in range(n):
        _, pc = random_pa_triple(rng, grid)
        worst.append(np.max(np.abs(pc.middle_residual())))
    quantities = [_quantity("middle_equation", worst, MIDDLE_TOL)]
    return {"suite": "consistency", "seed": int(seed), "instances": n,
            "quantities": quantities,
            "verdict": "pass" if quantities[0]["pass"] else "fail"}
