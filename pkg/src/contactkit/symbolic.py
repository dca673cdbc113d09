"""Symbolic factorizations: expression parsing and analytic tensor generation.

Zoo models and user model files both describe ``f``, ``N`` and ``G`` as
elementary expressions. Derivatives through third order are produced by
``sympy`` differentiation and compiled to numpy callables once per
definition; parameter values are bound afterwards.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .derivatives import DerivativeProvider, FDConfig

__all__ = ["SymbolicFactorization", "parse_expression"]

_FUNCTIONS = {"exp": sp.exp, "ln": sp.log, "log": sp.log, "sqrt": sp.sqrt}
_ALLOWED_CHARS = re.compile(r"^[0-9A-Za-z_\.\+\-\*/\^\(\)\s,]*$")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_NUMBER_EXP = re.compile(r"\d(?:\.\d*)?[eE][+-]?\d")


def parse_expression(text: str, symbols: dict[str, sp.Symbol]) -> sp.Expr:
    """Parse ``text`` using only ``+ - * / ^ **``, numbers, the given
    symbols and ``exp``, ``ln``, ``sqrt``."""
    if not isinstance(text, str):
        return sp.sympify(text)
    if not _ALLOWED_CHARS.match(text):
        raise ValueError(f"illegal character in expression {text!r}")
    stripped = _NUMBER_EXP.sub("0", text)
    for name in _IDENT.findall(stripped):
        if name not in symbols and name not in _FUNCTIONS:
            raise ValueError(f"unknown name {name!r} in expression {text!r}")
    local = dict(_FUNCTIONS)
    local.update(symbols)
    expr = parse_expr(
        text,
        local_dict=local,
        global_dict={"Integer": sp.Integer, "Float": sp.Float, "Rational": sp.Rational, "Symbol": sp.Symbol},
        transformations=standard_transformations + (convert_xor,),
    )
    return sp.sympify(expr)


def _lambdify(args, exprs):
    return sp.lambdify(args, exprs, modules="numpy", cse=True)


@dataclass(frozen=True, eq=False)
class SymbolicFactorization:
    """``h = N f`` with perturbation ``G`` given as sympy expressions.

    ``f`` is a list of ``m`` expressions, ``N`` an ``n x m`` nested list and
    ``G`` a list of ``n`` expressions that may also involve ``eps``.
    """

    variables: tuple[sp.Symbol, ...]
    f: tuple[sp.Expr, ...]
    N: tuple[tuple[sp.Expr, ...], ...]
    G: tuple[sp.Expr, ...]
    params: tuple[sp.Symbol, ...] = ()
    eps: sp.Symbol = sp.Symbol("eps")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.f)

    @cached_property
    def _compiled(self):
        z, ps = list(self.variables), list(self.params)
        n, m = self.n, self.m
        if any(len(row) != m for row in self.N) or len(self.N) != n:
            raise ValueError(f"N must be {n} x {m}")
        if len(self.G) != n:
            raise ValueError(f"G must have {n} components")
        Df = [[sp.diff(fi, zj) for zj in z] for fi in self.f]
        D2f = [[[sp.diff(d, zk) for zk in z] for d in row] for row in Df]
        D3f = [[[[sp.diff(d, zl) for zl in z] for d in r2] for r2 in r1] for r1 in D2f]
        DN = [[[sp.diff(self.N[i][a], zj) for a in range(m)] for zj in z] for i in range(n)]
        D2N = [[[[sp.diff(DN[i][j][a], zk) for a in range(m)] for zk in z] for j in range(n)] for i in range(n)]
        args = [z, ps]
        return {
            "f": _lambdify(args, list(self.f)),
            "N": _lambdify(args, [list(r) for r in self.N]),
            "G": _lambdify([z, [self.eps], ps], list(self.G)),
            "df": _lambdify(args, Df),
            "d2f": _lambdify(args, D2f),
            "d3f": _lambdify(args, D3f),
            "dN": _lambdify(args, DN),
            "d2N": _lambdify(args, D2N),
        }

    def provider(self, param_values=(), fd: FDConfig | None = None) -> DerivativeProvider:
        c = self._compiled
        pv = [float(v) for v in param_values]
        n, m = self.n, self.m

        def bind(name, shape):
            fun = c[name]

            def call(zz):
                return np.asarray(fun(list(zz), pv), dtype=float).reshape(shape)

            return call

        return DerivativeProvider(
            f=bind("f", (m,)),
            N=bind("N", (n, m)),
            n=n,
            m=m,
            df=bind("df", (m, n)),
            d2f=bind("d2f", (m, n, n)),
            d3f=bind("d3f", (m, n, n, n)),
            dN=bind("dN", (n, n, m)),
            d2N=bind("d2N", (n, n, n, m)),
            fd=fd or FDConfig(),
        )

    def perturbation(self, param_values=()):
        fun = self._compiled["G"]
        pv = [float(v) for v in param_values]
        n = self.n

        def G(z, eps):
            return np.asarray(fun(list(z), [float(eps)], pv), dtype=float).reshape(n)

        return G
