"""Closed-form example curves and the pipeline that checks them.

Each fixture lives in ``fixtures/<id>.json``: a model, coordinate
expressions for a unit-speed curve (or integrals of expressions), a field
given by the builtin catalog or by transport, closed-form expectations, and
the list of checks that apply. :func:`run_golden` runs the numerical
pipeline on a fixture and compares every applicable quantity with its
closed form.
"""

from __future__ import annotations

import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ..curve import ArcLengthCurve, arclength_reparametrize, frenet_apparatus
from ..errors import FixtureError, PACurvesError
from ..expr import compile_expr, sample
from ..manifold import FieldAlongCurve, model_from_dict
from ..numerics import DEFAULT_STEP, Grid, Series
from ..pa_analysis import (
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
from ..transport import TorseFormingLaw, builtin_field, estimate_law, transport_field

FIXTURE_IDS = ("G1", "G2", "G3", "G4", "G5", "G6")
DEFAULT_TOL = 1e-4
THREADS_ENV = "PA_CURVES_THREADS"
_cache: Dict[tuple, "GoldenFixture"] = {}
_cache_lock = threading.Lock()


def _read_json(fid: str) -> dict:
    if fid not in FIXTURE_IDS:
        raise FixtureError(f"unknown fixture {fid!r}; known: {', '.join(FIXTURE_IDS)}")
    text = resources.files(__package__).joinpath("fixtures", f"{fid}.json").read_text()
    return json.loads(text)


def _coordinate_jets(coords, grid: Grid, var: str = "s", order: int = 3):
    """Values and first ``order`` derivatives of coordinate expressions."""
    s = grid.s
    cols = []
    for c in coords:
        if isinstance(c, dict):
            g = compile_expr(c["integral"], var)
            vals = g(s), g.diff()(s)
            spline = CubicHermiteSpline(s, *(np.broadcast_to(v, s.shape) for v in vals))
            prim = spline.antiderivative()
            x0 = prim(s) - prim(float(c.get("from", 0.0)))
            col = [x0] + [g.diff(k)(s) for k in range(order)]
        else:
            e = compile_expr(str(c), var)
            col = [e.diff(k)(s) for k in range(order + 1)]
        cols.append([np.broadcast_to(np.asarray(v, dtype=float), s.shape) for v in col])
    return [np.stack([col[k] for col in cols], axis=1) for k in range(order + 1)]


def _sample(expr, grid: Grid) -> Series:
    return sample(expr, grid)


@dataclass(eq=False)
class GoldenFixture:
    id: str
    title: str
    data: dict
    model: object
    grid: Grid
    curve: ArcLengthCurve
    field: FieldAlongCurve
    law: TorseFormingLaw
    tolerances: dict = field(default_factory=dict)

    @property
    def expected(self) -> dict:
        return self.data.get("expected", {})

    def expected_series(self, name: str) -> Series:
        return _sample(self.expected[name], self.grid)

    def expected_vectors(self, name: str) -> np.ndarray:
        return np.stack([_sample(e, self.grid).values for e in self.expected[name]], axis=1)

    def tol(self, name: str, default: float = DEFAULT_TOL) -> float:
        return float(self.tolerances.get(name, default))


def _build(fid: str, step: float) -> GoldenFixture:
    data = _read_json(fid)
    model = model_from_dict(data["model"])
    a, b = (float(compile_expr(str(v))(0.0)) for v in data["span"])
    grid = Grid.uniform(a, b, step)
    x, v, *derivs = _coordinate_jets(data["curve"], grid)
    curve = ArcLengthCurve(model, grid, x, v, tuple(derivs))
    fdata = data["field"]
    if "builtin" in fdata:
        bf = builtin_field(model, fdata["builtin"], **fdata.get("params", {}))
        fld, law = bf.along(curve)
    else:
        spec = fdata["transport"]
        f = _sample(spec["f"], grid)
        if spec["kind"] == "concircular":
            law = TorseFormingLaw.concircular(f)
        elif spec["kind"] == "anti-torqued":
            law = TorseFormingLaw.anti_torqued(f)
        else:
            law = TorseFormingLaw(f, _sample(spec.get("omega", "0"), grid), spec["kind"])
        V0 = np.array([float(compile_expr(str(e))(grid.s[0])) for e in fdata["initial"]])
        fld = transport_field(model, curve, law, V0)
    return GoldenFixture(fid, data.get("title", fid), data, model, grid, curve, fld, law,
                         data.get("tolerances", {}))


def load_fixture(fid: str, step: Optional[float] = None) -> GoldenFixture:
    """Load and sample a fixture (cached per id and step)."""
    step = DEFAULT_STEP if step is None else float(step)
    key = (fid, step)
    with _cache_lock:
        fx = _cache.get(key)
    if fx is None:
        try:
            fx = _build(fid, step)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PACurvesError):
                raise
            raise FixtureError(f"malformed fixture {fid}: {exc}") from exc
        with _cache_lock:
            fx = _cache.setdefault(key, fx)
    return fx


# ---------------------------------------------------------------------------
# Running


def _finite(x) -> Optional[float]:
    x = float(x)
    return x if np.isfinite(x) else None


def _quantity(name, err, tol):
    err = np.atleast_1d(np.abs(np.asarray(err, dtype=float)))
    mx, rms = _finite(np.max(err)), _finite(np.sqrt(np.mean(err ** 2)))
    ok = mx is not None and mx <= tol
    return {"name": name, "max_err": mx, "rms": rms, "tolerance": float(tol), "pass": bool(ok)}


class _Run:
    def __init__(self, fx: GoldenFixture, overrides: Optional[dict]):
        self.fx = fx
        self.over = overrides or {}
        self.quantities: List[dict] = []
        self._frenet = None
        self._decomp = None
        self._estimate = None

    def tol(self, name, default=DEFAULT_TOL):
        if name in self.over:
            return float(self.over[name])
        if default == DEFAULT_TOL and "default" in self.over:
            default = float(self.over["default"])
        return self.fx.tol(name, default)

    def add(self, name, err, tol_key=None, default=DEFAULT_TOL):
        self.quantities.append(_quantity(name, err, self.tol(tol_key or name, default)))

    def fail(self, name, exc, tol_key=None):
        q = _quantity(name, np.nan, self.tol(tol_key or name))
        q["error"] = f"{type(exc).__name__}: {exc}"
        self.quantities.append(q)

    @property
    def frenet(self):
        if self._frenet is None:
            fx = self.fx
            self._frenet = frenet_apparatus(fx.model, fx.curve,
                                            signed=fx.data.get("frenet", {}).get("signed"))
        return self._frenet

    @property
    def decomp(self):
        if self._decomp is None:
            self._decomp = decompose(self.fx.model, self.fx.field, self.frenet)
        return self._decomp

    @property
    def estimate(self):
        if self._estimate is None:
            self._estimate = estimate_law(self.fx.model, self.fx.curve, self.fx.field)
        return self._estimate

    def compare(self, name, numeric, tol_key=None):
        if name in self.fx.expected:
            self.add(name, numeric - self.fx.expected_series(name).values, tol_key)

    # -- checks -------------------------------------------------------------
    def check_frenet(self):
        fx, F = self.fx, self.frenet
        self.compare("kappa", F.kappa.values)
        if "tau" in fx.expected:
            self.compare("tau", F.tau.values)
        if "normal" in fx.expected:
            self.add("normal", F.N - fx.expected_vectors("normal"))
        self.add("frenet_formula_residual", F.frenet_residual(fx.model, fx.curve))
        self.add("frame_gram_defect", F.gram_defect(fx.model, fx.curve.points), default=1e-6)

    def check_transport(self):
        self.add("field", self.fx.field.vectors - self.fx.expected_vectors("field"))

    def check_law(self):
        est = self.estimate
        self.compare("f", est.law.f.values)
        self.add("law_residual", est.residual.values, default=1e-6)
        want = self.fx.expected.get("law_class")
        if want:
            self.add(f"law_class:{est.law.kind}", 0.0 if est.law.kind == want else 1.0,
                     "law_class", default=0.5)

    def check_decomposition(self):
        D = self.decomp
        self.compare("cos_theta", D.cos_theta.values)
        self.compare("lam0", D.lam0.values)
        if len(D.lambdas) > 1:
            self.compare("lam1", D.lam1.values)
            self.compare("abs_lam1", np.abs(D.lam1.values))
        self.add("norm_identity", D.norm_defect(), default=1e-8)

    def check_pa_system(self):
        rep = pa_system_residuals(self.frenet, self.fx.law, self.decomp)
        for q in rep.quantities(self.tol("pa_system")):
            self.add(f"pa_system:{q['name']}", rep.series[q["name"]].values, "pa_system")

    def check_curvatures_from_pa(self):
        mode = "concircular" if self.fx.law.kind == "concircular" else "general3d"
        P = curvatures_from_pa(self.fx.law.f, self.decomp, mode)
        self.add("curvatures_from_pa:kappa", P.kappa.values - self.frenet.kappa.values,
                 "curvatures_from_pa")
        self.add("curvatures_from_pa:tau", np.abs(P.tau.values) - np.abs(self.frenet.tau.values),
                 "curvatures_from_pa")

    def check_orthogonal(self):
        fx = self.fx
        rep = orthogonal_angle_analysis(self.frenet, fx.law.f, self.decomp)
        for name, ser in rep.residuals.series.items():
            self.add(f"orthogonal:{name}", ser.values, "orthogonal")
        ratio = self.frenet.tau.values / self.frenet.kappa.values
        self.compare("ratio", ratio)
        self.compare("p", rep.p.values)
        if "r" in fx.expected:
            self.add("r", rep.r - float(fx.expected["r"]))

    def check_normal_dt(self):
        self.add("normal_dt", self.frenet.N[:, 0])

    def check_position_normal(self):
        x = self.fx.curve.points
        self.add("position_normal", np.sum(x * self.frenet.N, axis=1))

    def check_geodesic_sphere(self):
        rep = geodesic_sphere_residual(self.frenet)
        self.add("geodesic_sphere", rep.series["geodesic_sphere"].values)

    def check_sphere_fit(self):
        a, b, rms = sphere_potential_fit(self.fx.law.f, self.decomp.lifted)
        wa, wb = self.fx.expected["sphere_fit"]
        self.add("sphere_fit:a", a - wa, "sphere_fit")
        self.add("sphere_fit:b", b - wb, "sphere_fit")

    def check_lancret(self):
        rep = lancret_concircular_check(self.fx.law.f, self.decomp.lifted, self.frenet)
        self.add("r0", rep.r0 - float(self.fx.expected["r0"]))
        for name, ser in rep.residuals.series.items():
            self.add(f"lancret:{name}", ser.values, "lancret")

    def check_sphere_membership(self):
        self.add("sphere_membership", np.linalg.norm(self.fx.curve.points, axis=1) - 1.0)

    def check_surface(self):
        fx = self.fx
        sc = surface_pa_curvature(fx.law.f, self.decomp.lifted, grim_check=True)
        want = fx.expected_series("kappa").values
        self.add("surface:kappa", sc.kappa.values - want, "surface")
        for name, ser in sc.grim.series.items():
            self.add(f"surface:{name}", ser.values, "surface")

    def check_halfplane(self):
        k = halfplane_curvature(self.fx.curve)
        self.add("halfplane:kappa", k.values - self.fx.expected_series("kappa").values, "halfplane")
        self.add("halfplane:paths_agree", k.values - self.frenet.kappa.values, "halfplane")
        self.add("halfplane:kappa_vs_cos_theta", self.frenet.kappa.values -
                 self.decomp.cos_theta.values, "halfplane")

    def check_reparametrize(self):
        fx = self.fx
        raw = fx.data.get("raw_curve")
        if raw is None:
            c = arclength_reparametrize(fx.model, fx.grid, fx.curve.points, fx.curve.velocity,
                                        s0=fx.grid.s[0])
            self.add("reparametrize:points", c.points - fx.curve.points, "reparametrize")
            self.add("reparametrize:arclength", c.s - fx.grid.s, "reparametrize")
            return
        var = raw.get("var", "t")
        t0, t1 = (float(compile_expr(str(v))(0.0)) for v in raw["span"])
        tg = Grid(np.linspace(t0, t1, len(fx.grid)))
        x, v = _coordinate_jets(raw["coords"], tg, var, order=1)
        c = arclength_reparametrize(fx.model, tg, x, v, s0=fx.grid.s[0])
        xs, vs = _coordinate_jets(fx.data["curve"], c.grid, order=1)
        self.add("reparametrize:points", c.points - xs, "reparametrize")
        self.add("reparametrize:velocity", c.velocity - vs, "reparametrize")
        self.add("reparametrize:length", c.s[-1] - fx.grid.s[-1], "reparametrize")

    def run(self):
        for name in self.fx.data.get("checks", []):
            fn = getattr(self, f"check_{name}", None)
            if fn is None:
                raise FixtureError(f"fixture {self.fx.id} lists unknown check {name!r}")
            try:
                fn()
            except PACurvesError as exc:
                self.fail(name, exc)
        return self.quantities


def run_golden(fid: str, tolerances: Optional[dict] = None, step: Optional[float] = None) -> dict:
    """Run the full pipeline on a fixture and compare with its closed forms.

    ``tolerances`` overrides per-quantity tolerances by key; the key
    ``"default"`` replaces the 1e-4 fallback of quantities the fixture does
    not pin. Failures are
    report entries, not exceptions (except for an unknown fixture id).
    """
    fx = load_fixture(fid, step)
    quantities = _Run(fx, tolerances).run()
    return {
        "fixture": fx.id,
        "title": fx.title,
        "inputs": {
            "model": fx.model.describe(),
            "span": [float(fx.grid.s[0]), float(fx.grid.s[-1])],
            "step": float(fx.grid.h),
            "nodes": len(fx.grid),
        },
        "quantities": quantities,
        "verdict": "pass" if all(q["pass"] for q in quantities) else "fail",
    }


def thread_count(n_jobs: int) -> int:
    env = os.environ.get(THREADS_ENV)
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            from ..errors import UsageError

            raise UsageError(f"{THREADS_ENV} must be a positive integer") from None
    return max(1, min(cap, n_jobs))


def run_all(ids=FIXTURE_IDS, tolerances: Optional[dict] = None,
            step: Optional[float] = None) -> List[dict]:
    """Run several fixtures, concurrently up to ``PA_CURVES_THREADS`` workers.

    Reports come back in the order of ``ids``.
    """
    ids = list(ids)
    for fid in ids:
        _read_json(fid)
    workers = thread_count(len(ids))
    if workers == 1:
        return [run_golden(fid, tolerances, step) for fid in ids]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda fid: run_golden(fid, tolerances, step), ids))
