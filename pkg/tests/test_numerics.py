import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from pacurves.errors import InputError
from pacurves.expr import compile_expr, sample
from pacurves.numerics import (
    Grid,
    Series,
    cumulative_integral,
    differentiate_series,
    fit_linear_basis,
    integrate_ivp,
)


def test_uniform_grid_hits_endpoints():
    g = Grid.uniform(-1, 1, 1e-3)
    assert len(g) == 2001
    assert g.s[0] == -1 and g.s[-1] == 1
    assert g.h == pytest.approx(1e-3)
    assert g.s[g.mid_index] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("s", [[0, 1, 2], [0, 1, 1, 2, 3, 4], [0, 2, 1, 3, 4, 5]])
def test_bad_grids_rejected(s):
    with pytest.raises(InputError):
        Grid(np.asarray(s, dtype=float))


def test_series_rejects_nonfinite():
    g = Grid.uniform(0, 1, 0.1)
    with pytest.raises(InputError):
        Series(g, np.full(len(g), np.nan))


@pytest.mark.parametrize("order", [2, 4, 6])
def test_derivative_convergence_order(order):
    errs = []
    for h in (0.04, 0.02):
        g = Grid.uniform(0, 2, h)
        d = differentiate_series(Series(g, np.sin(3 * g.s)), order).values
        errs.append(np.max(np.abs(d - 3 * np.cos(3 * g.s))))
    rate = np.log2(errs[0] / errs[1])
    assert rate == pytest.approx(order, abs=0.6)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=7, max_size=7))
def test_order6_stencil_exact_on_sextics(coeffs):
    g = Grid.uniform(-1, 1, 0.05)
    p = np.polynomial.Polynomial(coeffs)
    d = differentiate_series(Series(g, p(g.s)), 6).values
    assert np.max(np.abs(d - p.deriv()(g.s))) <= 1e-8 * (1 + np.max(np.abs(coeffs)))


def test_cumulative_integral_against_symbolic_antiderivative():
    s = sp.Symbol("s")
    expr = sp.exp(-s) * sp.cos(2 * s)
    prim = sp.lambdify(s, sp.integrate(expr, (s, 0, s)))
    g = Grid.uniform(-1, 2, 1e-3)
    ser = sample(str(expr), g)
    I = cumulative_integral(ser, (0.0, 0.0), order=4)
    assert np.max(np.abs(I.values - prim(g.s))) < 1e-12


def test_rk4_fourth_order():
    errs = []
    for h in (0.1, 0.05):
        g = Grid.uniform(0, 1, h)
        y = integrate_ivp(lambda s, y: np.array([y[1], -y[0]]), [0.0, 1.0], g).values
        errs.append(abs(y[-1, 0] - np.sin(1.0)))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(4, abs=0.3)


def test_fit_linear_basis_recovers_coefficients():
    g = Grid.uniform(0, 1, 0.01)
    basis = [Series(g, np.ones(len(g))), Series(g, g.s), Series(g, np.sin(g.s))]
    target = Series(g, 0.5 - 2 * g.s + 3 * np.sin(g.s))
    coef, rms = fit_linear_basis(basis, target)
    assert np.allclose(coef, [0.5, -2, 3], atol=1e-10)
    assert rms < 1e-12


def test_expression_whitelist_and_derivatives():
    e = compile_expr("sech(s)^2 + arcsin(s/2)")
    x = np.linspace(-1, 1, 5)
    assert np.allclose(e(x), 1 / np.cosh(x) ** 2 + np.arcsin(x / 2))
    d = e.diff()(x)
    assert np.allclose(d, -2 * np.tanh(x) / np.cosh(x) ** 2 + 0.5 / np.sqrt(1 - x ** 2 / 4))
    with pytest.raises(InputError):
        compile_expr("__import__('os').system('true')")


def test_sample_carries_exact_derivative():
    g = Grid.uniform(0, 1, 0.1)
    ser = sample("s^3", g)
    assert np.allclose(ser.derivative(2), 3 * g.s ** 2, atol=0, rtol=1e-15)
    assert ser.at(0.55) == pytest.approx(0.55 ** 3)
