"""Small symbolic-expression front end used by fixtures and the CLI.

Expressions are strings in one variable (``s`` by default) built from
sin, cos, tan, sinh, cosh, tanh, sech, arcsin/asin, arctan/atan, arccos,
sqrt, log, exp, pi, powers (``**`` or ``^``) and rationals. Parsing,
differentiation and numpy code generation are delegated to sympy; the
input is checked against a whitelist first because sympy's parser
evaluates Python.
"""

from __future__ import annotations

import functools
import re
import threading

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import InputError

_FUNCS = {
    "sin": sp.sin, "cos": sp.cos, "tan": sp.tan,
    "sinh": sp.sinh, "cosh": sp.cosh, "tanh": sp.tanh,
    "sech": sp.sech, "csch": sp.csch, "coth": sp.coth,
    "asin": sp.asin, "arcsin": sp.asin, "acos": sp.acos, "arccos": sp.acos,
    "atan": sp.atan, "arctan": sp.atan, "asinh": sp.asinh, "arcsinh": sp.asinh,
    "atanh": sp.atanh, "arctanh": sp.atanh,
    "sqrt": sp.sqrt, "log": sp.log, "exp": sp.exp, "abs": sp.Abs,
    "pi": sp.pi, "E": sp.E,
}
_TOKEN = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_ALLOWED_CHARS = re.compile(r"^[A-Za-z_0-9\s\.\+\-\*/\^\(\),]*$")
# sympy's caches are not thread safe during parsing/lambdify
_LOCK = threading.Lock()

_NUMPY_MODULE = [{"sech": lambda x: 1.0 / np.cosh(x), "csch": lambda x: 1.0 / np.sinh(x),
                  "coth": lambda x: 1.0 / np.tanh(x)}, "numpy"]


def parse(text: str, variables=("s",)) -> sp.Expr:
    """Parse ``text`` into a sympy expression in the given variables."""
    if not isinstance(text, str):
        text = repr(text)
    if not _ALLOWED_CHARS.match(text):
        raise InputError(f"illegal characters in expression {text!r}")
    names = set(variables)
    for tok in _TOKEN.findall(text):
        if tok not in _FUNCS and tok not in names:
            raise InputError(f"unknown name {tok!r} in expression {text!r}")
    local = dict(_FUNCS)
    local.update({v: sp.Symbol(v, real=True) for v in variables})
    with _LOCK:
        try:
            return parse_expr(
                text, local_dict=local, global_dict={"Integer": sp.Integer, "Float": sp.Float,
                                                     "Rational": sp.Rational, "Symbol": sp.Symbol},
                transformations=standard_transformations + (convert_xor,),
                evaluate=True,
            )
        except Exception as exc:  # sympy raises a zoo of types here
            raise InputError(f"cannot parse expression {text!r}: {exc}") from exc


class Expression:
    """A parsed scalar expression with numpy evaluation and exact derivatives.

    Evaluation accepts complex input, which the complex-step jets rely on.
    """

    def __init__(self, source, var: str = "s"):
        self.var = var
        self.symbol = sp.Symbol(var, real=True)
        if isinstance(source, sp.Basic):
            self.sym = source
            self.text = str(source)
        else:
            self.text = str(source)
            self.sym = parse(self.text, (var,))
        with _LOCK:
            self._f = sp.lambdify(self.symbol, self.sym, modules=_NUMPY_MODULE)
        self._d = None

    def __call__(self, x):
        x = np.asarray(x)
        out = np.asarray(self._f(x))
        if out.shape != x.shape:
            out = np.broadcast_to(out, x.shape).astype(np.result_type(out, x, float))
        return out

    def diff(self, n: int = 1) -> "Expression":
        if n == 0:
            return self
        if self._d is None:
            with _LOCK:
                d = sp.diff(self.sym, self.symbol)
            self._d = Expression(d, self.var)
        return self._d.diff(n - 1)

    @property
    def is_constant(self) -> bool:
        return self.symbol not in self.sym.free_symbols

    def __repr__(self):
        return f"Expression({self.text!r})"


@functools.lru_cache(maxsize=256)
def _compile_cached(text: str, var: str) -> Expression:
    return Expression(text, var)


def compile_expr(text, var: str = "s") -> Expression:
    """Parse ``text`` as an expression in ``var``; results are cached."""
    return _compile_cached(str(text), var)


def sample(text, grid, var: str = "s"):
    """Sample an expression on a grid as a Series carrying its exact
    derivative and closed form."""
    from .numerics import Series

    e = text if isinstance(text, Expression) else compile_expr(str(text), var)
    d = e.diff()
    shape = grid.s.shape
    return Series(grid, np.broadcast_to(e(grid.s), shape).astype(float),
                  np.broadcast_to(d(grid.s), shape).astype(float), e)
