"""Whitelisted nonlinearity expressions for data-only problem configs.

An expression is a string in the symbols ``x`` (node) and ``s`` (value)
built from numbers, ``pi``, ``+ - * /``, nonnegative integer powers,
``exp`` and ``atan`` (``arctan`` is accepted as an alias). ``x`` may only
appear polynomially, so ``exp`` and ``atan`` arguments must not contain it.

>>> nl = parse_nonlinearity("s**3 + s - 1")
>>> float(nl.f(0.0, 1.0))
1.0
"""
from __future__ import annotations

import re

import numpy as np
import sympy

from .operators import ScalarNonlinearity

X, S = sympy.symbols("x s", real=True)
_NAMES = {"x": X, "s": S, "exp": sympy.exp, "atan": sympy.atan, "arctan": sympy.atan, "pi": sympy.pi}
_GLOBALS = {"Integer": sympy.Integer, "Float": sympy.Float, "Rational": sympy.Rational, "Symbol": sympy.Symbol}
_NUMBER = re.compile(r"(?<![A-Za-z_])(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_]\w*")
_FORBIDDEN = re.compile(r"[^\w\s+\-*/()]|__")


class ExpressionError(ValueError):
    """The expression uses something outside the whitelist."""


def _check(node):
    if node.is_Number or node in (X, S, sympy.pi):
        return
    if isinstance(node, (sympy.Add, sympy.Mul)):
        for arg in node.args:
            _check(arg)
        return
    if isinstance(node, sympy.Pow):
        base, exponent = node.args
        _check(base)
        if exponent.is_Integer and exponent >= 0:
            return
        if exponent == -1 and not base.free_symbols:
            return
        raise ExpressionError(f"only nonnegative integer powers are allowed, got {node}")
    if isinstance(node, (sympy.exp, sympy.atan)):
        (arg,) = node.args
        if X in arg.free_symbols:
            raise ExpressionError(f"x may appear only polynomially, not inside {node.func.__name__}")
        _check(arg)
        return
    raise ExpressionError(f"unsupported construct {node!r}")


def _screen(text: str) -> None:
    # sympy parses by evaluating Python, so reject attribute access, dunder
    # names and unknown identifiers before the text reaches it
    bare = _NUMBER.sub(" ", text)
    if _FORBIDDEN.search(bare):
        raise ExpressionError(f"unsupported characters in {text!r}")
    unknown = sorted(set(_IDENT.findall(bare)) - set(_NAMES))
    if unknown:
        raise ExpressionError(f"unknown names: {', '.join(unknown)}")


def parse_expression(text: str) -> sympy.Expr:
    """Parse and whitelist-check an expression in ``x`` and ``s``."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("expression must be a non-empty string")
    _screen(text)
    try:
        expr = sympy.parse_expr(text, local_dict=dict(_NAMES), global_dict=dict(_GLOBALS), evaluate=True)
    except (sympy.SympifyError, SyntaxError, TypeError, NameError, AttributeError) as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc}") from None
    if not isinstance(expr, sympy.Expr):
        raise ExpressionError(f"{text!r} is not an expression")
    _check(expr)
    return expr


def parse_nonlinearity(text: str) -> ScalarNonlinearity:
    """Build a vectorized :class:`ScalarNonlinearity` with its exact ``df/ds``."""
    expr = parse_expression(text)
    f = sympy.lambdify((X, S), expr, modules="numpy")
    df = sympy.lambdify((X, S), sympy.diff(expr, S), modules="numpy")

    def value(x, s):
        return np.asarray(f(x, s), dtype=float) + 0.0 * np.asarray(s, dtype=float)

    def slope(x, s):
        return np.asarray(df(x, s), dtype=float) + 0.0 * np.asarray(s, dtype=float)

    return ScalarNonlinearity(value, slope, None, text)
