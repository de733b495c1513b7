"""Registry of analytic data with exact derivatives.

Expressions are written once in SymPy; every derivative the solver needs
(nodal cross-derivatives, the bilaplacian of the initial deflection, the
time derivative of the forcing) is derived symbolically and compiled with
``lambdify``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import sympy as sym

from .bfs import CoefficientField, NodalFunction
from .time_schemes import InitialData, RhsModel

X, Y, T = sym.symbols("x y t", real=True)


def _compile(expr, args):
    fn = sym.lambdify(args, expr, modules="numpy")

    def wrapped(*vals):
        out = fn(*vals)
        shape = np.broadcast(*[np.asarray(v) for v in vals]).shape
        return np.broadcast_to(np.asarray(out, dtype=float), shape)

    wrapped.expr = expr
    return wrapped


def laplacian(expr):
    return sym.diff(expr, X, 2) + sym.diff(expr, Y, 2)


def bilaplacian(expr):
    return laplacian(laplacian(expr))


def nodal(expr, scale: float | None = None) -> NodalFunction:
    """Value, d/dx, d/dy, d2/dxdy of a spatial expression, compiled."""
    if scale is not None:
        expr = scale * expr
    return NodalFunction(
        _compile(expr, (X, Y)),
        _compile(sym.diff(expr, X), (X, Y)),
        _compile(sym.diff(expr, Y), (X, Y)),
        _compile(sym.diff(expr, X, Y), (X, Y)),
    )


@dataclass
class ManufacturedCase:
    """Exact solution u(x, y, t) of u_tt + Lap^2 u = f with its data."""

    name: str
    domain: tuple
    T: float
    u: Callable
    ut: Callable
    f: Callable
    ft: Callable
    initial: InitialData
    u_expr: Optional[sym.Expr] = None

    @property
    def rhs(self) -> RhsModel:
        return RhsModel(self.f, self.ft)

    def exact_nodal(self, t: float) -> NodalFunction:
        e = self.u_expr.subs(T, t)
        return nodal(e)


def manufactured(name, u_expr, domain, T_final) -> ManufacturedCase:
    f_expr = sym.diff(u_expr, T, 2) + bilaplacian(u_expr)
    u0 = u_expr.subs(T, 0)
    u1 = sym.diff(u_expr, T).subs(T, 0)
    accel0 = sym.simplify(f_expr.subs(T, 0) - bilaplacian(u0))
    return ManufacturedCase(
        name=name,
        domain=domain,
        T=T_final,
        u=_compile(u_expr, (X, Y, T)),
        ut=_compile(sym.diff(u_expr, T), (X, Y, T)),
        f=_compile(f_expr, (X, Y, T)),
        ft=_compile(sym.diff(f_expr, T), (X, Y, T)),
        initial=InitialData(nodal(u0), nodal(u1), nodal(accel0)),
        u_expr=u_expr,
    )


@lru_cache(maxsize=None)
def fct2() -> ManufacturedCase:
    """u = sin(2 pi t) sin^2(pi x) sin^2(pi y) on the unit square, T = 1."""
    u = sym.sin(2 * sym.pi * T) * sym.sin(sym.pi * X) ** 2 * sym.sin(sym.pi * Y) ** 2
    return manufactured("fct2", u, (0.0, 1.0, 0.0, 1.0), 1.0)


CASES = {"fct2": fct2}


def get_case(name: str) -> ManufacturedCase:
    try:
        return CASES[name]()
    except KeyError:
        raise KeyError(f"unknown case {name!r}; available: {sorted(CASES)}") from None


# --------------------------------------------------------------------------
# named spatial data for scenario configs


def gaussian_bump_expr(amplitude=0.2, width=10.0, half_side=1.0):
    """amplitude * exp(-|width x|^2) * (1 - (x/a)^2)^2 (1 - (y/a)^2)^2."""
    a = half_side
    return (
        amplitude
        * sym.exp(-(width**2) * (X**2 + Y**2))
        * (1 - (X / a) ** 2) ** 2
        * (1 - (Y / a) ** 2) ** 2
    )


def initial_from_expr(u0_expr, u1_expr=0, forcing_at_0=0, stiffness: CoefficientField | None = None) -> InitialData:
    """Initial data; the acceleration uses c * Lap^2 u0 with c sampled pointwise.

    That is exact where c is locally constant, which holds at every mesh node
    for the piecewise stiffness fields in the registry.
    """
    u0_expr = sym.sympify(u0_expr)
    u1_expr = sym.sympify(u1_expr)
    bih = bilaplacian(u0_expr)
    acc = nodal(sym.sympify(forcing_at_0) - bih)
    if stiffness is not None and not (stiffness.is_constant and stiffness.value == 1.0):
        b = nodal(bih)
        f0 = nodal(sym.sympify(forcing_at_0))
        cf = stiffness
        acc = NodalFunction(
            lambda x, y: f0.value(x, y) - cf(x, y) * b.value(x, y),
            lambda x, y: f0.dx(x, y) - cf(x, y) * b.dx(x, y),
            lambda x, y: f0.dy(x, y) - cf(x, y) * b.dy(x, y),
            lambda x, y: f0.dxy(x, y) - cf(x, y) * b.dxy(x, y),
        )
    return InitialData(nodal(u0_expr), nodal(u1_expr), acc)


def jump_coefficient(threshold=0.2, below=1.0, above=9.0, axis="y") -> CoefficientField:
    """c = below where the coordinate is < threshold, above otherwise."""
    if axis == "y":
        pred = lambda x, y: np.asarray(y) < threshold
    else:
        pred = lambda x, y: np.asarray(x) < threshold
    return CoefficientField.piecewise(pred, below, above)


SPATIAL = {
    "zero": lambda **kw: sym.Integer(0),
    "gaussian_bump": lambda **kw: gaussian_bump_expr(**kw),
}

COEFFICIENTS = {
    "constant": lambda value=1.0: CoefficientField.constant(value),
    "jump": lambda **kw: jump_coefficient(**kw),
}
