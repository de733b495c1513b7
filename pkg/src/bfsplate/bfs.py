"""Bogner-Fox-Schmit bicubic Hermite element.

Local DOF ``4 * corner + kind`` with corners counterclockwise from the
lower-left and kinds (value, d/dx, d/dy, d2/dxdy). Derivative-kind shape
functions are scaled by hx, hy, hx*hy on a physical cell, so the global
coefficients are physical nodal derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .mesh import TensorMesh
from .quadrature import gauss_legendre, tensorize


class ModelError(ValueError):
    """Physically inadmissible model data (e.g. nonpositive stiffness)."""


class MissingDerivativeError(ValueError):
    pass


# cubic Hermite functions on [0, 1], coefficients in increasing powers
HERMITE_COEFFS = np.array(
    [
        [1.0, 0.0, -3.0, 2.0],   # value at 0
        [0.0, 1.0, -2.0, 1.0],   # slope at 0
        [0.0, 0.0, 3.0, -2.0],   # value at 1
        [0.0, 0.0, -1.0, 1.0],   # slope at 1
    ]
)

_CORNERS = ((0, 0), (1, 0), (1, 1), (0, 1))


def hermite(t, deriv: int = 0) -> np.ndarray:
    """(len(t), 4) values of the Hermite quartet or its derivative."""
    if deriv not in (0, 1, 2):
        raise ValueError(f"derivative order {deriv} unsupported")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    c = HERMITE_COEFFS
    if deriv == 0:
        return c[:, 0] + t[:, None] * (c[:, 1] + t[:, None] * (c[:, 2] + t[:, None] * c[:, 3]))
    if deriv == 1:
        return c[:, 1] + t[:, None] * (2 * c[:, 2] + 3 * t[:, None] * c[:, 3])
    return 2 * c[:, 2] + 6 * t[:, None] * c[:, 3]


def _local_layout():
    ix = np.empty(16, dtype=int)
    iy = np.empty(16, dtype=int)
    px = np.empty(16, dtype=int)
    py = np.empty(16, dtype=int)
    for a, (ex, ey) in enumerate(_CORNERS):
        for kind in range(4):
            i = 4 * a + kind
            px[i], py[i] = kind & 1, kind >> 1
            ix[i], iy[i] = 2 * ex + px[i], 2 * ey + py[i]
    return ix, iy, px, py


HX_INDEX, HY_INDEX, X_DERIV_KIND, Y_DERIV_KIND = _local_layout()


def dof_scale(hx: float, hy: float) -> np.ndarray:
    return hx ** X_DERIV_KIND * hy ** Y_DERIV_KIND


def shape_eval(local_dof: int, point, deriv=(0, 0)) -> float:
    """Reference shape function (or reference-coordinate derivative) at a point."""
    dx, dy = deriv
    if dx + dy > 2 or dx < 0 or dy < 0:
        raise ValueError(f"derivative {deriv} unsupported (total order <= 2)")
    if not 0 <= local_dof < 16:
        raise IndexError(f"local dof {local_dof} out of range")
    x, y = point
    return float(hermite(x, dx)[0, HX_INDEX[local_dof]] * hermite(y, dy)[0, HY_INDEX[local_dof]])


def reference_table(xh, yh, deriv=(0, 0)) -> np.ndarray:
    """(npts, 16) reference shape values (unscaled) at points (xh, yh)."""
    return hermite(xh, deriv[0])[:, HX_INDEX] * hermite(yh, deriv[1])[:, HY_INDEX]


def physical_table(mesh: TensorMesh, xh, yh, deriv=(0, 0)) -> np.ndarray:
    """Scaled shape values with physical-coordinate derivatives."""
    s = dof_scale(mesh.hx, mesh.hy) / (mesh.hx ** deriv[0] * mesh.hy ** deriv[1])
    return reference_table(xh, yh, deriv) * s


def laplacian_table(mesh: TensorMesh, xh, yh) -> np.ndarray:
    return physical_table(mesh, xh, yh, (2, 0)) + physical_table(mesh, xh, yh, (0, 2))


_ASSEMBLY_RULE = tensorize(gauss_legendre(4))


def local_mass(mesh: TensorMesh) -> np.ndarray:
    q = _ASSEMBLY_RULE
    phi = physical_table(mesh, q.x, q.y)
    Me = mesh.hx * mesh.hy * (phi.T * q.weights) @ phi
    return 0.5 * (Me + Me.T)


@dataclass(frozen=True)
class CoefficientField:
    """Stiffness c(x, y) > 0: constant, piecewise by predicate, or analytic."""

    kind: str
    value: float = 1.0
    predicate: Optional[Callable] = None
    inside: float = 1.0
    outside: float = 1.0
    func: Optional[Callable] = None

    @classmethod
    def constant(cls, value: float) -> "CoefficientField":
        return cls("constant", value=float(value))

    @classmethod
    def piecewise(cls, predicate, inside: float, outside: float) -> "CoefficientField":
        """``inside`` where ``predicate(x, y)`` holds, ``outside`` elsewhere."""
        return cls("piecewise", predicate=predicate, inside=float(inside), outside=float(outside))

    @classmethod
    def analytic(cls, func) -> "CoefficientField":
        return cls("analytic", func=func)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "constant":
            return np.full(np.broadcast(x, y).shape, self.value)
        if self.kind == "piecewise":
            return np.where(self.predicate(x, y), self.inside, self.outside)
        return np.broadcast_to(np.asarray(self.func(x, y), dtype=float), np.broadcast(x, y).shape)


def _checked_samples(c: CoefficientField, x, y) -> np.ndarray:
    vals = c(x, y)
    if np.any(~(vals > 0)):
        raise ModelError(f"stiffness must be strictly positive, sampled min {np.min(vals)}")
    return vals


def cell_stiffness_samples(mesh: TensorMesh, c: CoefficientField, cells=None) -> np.ndarray:
    """(n_cells, nq) values of c at the assembly quadrature points."""
    q = _ASSEMBLY_RULE
    x0, y0 = mesh.cell_origins()
    if cells is not None:
        x0, y0 = x0[cells], y0[cells]
    X = x0[:, None] + mesh.hx * q.x
    Y = y0[:, None] + mesh.hy * q.y
    return _checked_samples(c, X, Y)


def local_biharmonic(mesh: TensorMesh, c: CoefficientField, cell: int = 0) -> np.ndarray:
    """16x16 matrix of integrals of c * Lap(phi_i) * Lap(phi_j) over one cell."""
    q = _ASSEMBLY_RULE
    lap = laplacian_table(mesh, q.x, q.y)
    cw = cell_stiffness_samples(mesh, c, [cell])[0] * q.weights * mesh.hx * mesh.hy
    K = (lap.T * cw) @ lap
    return 0.5 * (K + K.T)


def biharmonic_ingredients(mesh: TensorMesh, c: CoefficientField):
    """Laplacian table and per-cell quadrature weights (c * w * |cell|)."""
    q = _ASSEMBLY_RULE
    lap = laplacian_table(mesh, q.x, q.y)
    cw = cell_stiffness_samples(mesh, c) * (q.weights * mesh.hx * mesh.hy)
    return lap, cw


@dataclass(frozen=True)
class NodalFunction:
    """A spatial function with the derivatives needed for Hermite interpolation.

    All callables take broadcastable ``(x, y)`` arrays.
    """

    value: Callable
    dx: Optional[Callable] = None
    dy: Optional[Callable] = None
    dxy: Optional[Callable] = None

    @classmethod
    def zero(cls) -> "NodalFunction":
        z = lambda x, y: np.zeros(np.broadcast(x, y).shape)
        return cls(z, z, z, z)


def interpolate_nodal(mesh: TensorMesh, fn: NodalFunction) -> np.ndarray:
    """Full-length DOF vector holding (u, ux, uy, uxy) at every node."""
    parts = (fn.value, fn.dx, fn.dy, fn.dxy)
    missing = [name for name, p in zip(("value", "dx", "dy", "dxy"), parts) if p is None]
    if missing:
        raise MissingDerivativeError(f"interpolation needs {', '.join(missing)}")
    X, Y = mesh.node_coords()
    out = np.empty((mesh.n_nodes, 4))
    for k, p in enumerate(parts):
        out[:, k] = np.broadcast_to(p(X, Y), X.shape)
    return out.ravel()


def evaluate_field(mesh: TensorMesh, coeffs, xh, yh, deriv=(0, 0)) -> np.ndarray:
    """Values of full-length DOF vector(s) at reference points of every cell.

    Returns (n_cells, npts) for one vector or (m, n_cells, npts) for a stack.
    """
    table = reference_table(np.asarray(xh, float), np.asarray(yh, float), deriv)
    scale = dof_scale(mesh.hx, mesh.hy) / (mesh.hx ** deriv[0] * mesh.hy ** deriv[1])
    return kernels.cell_values(coeffs, mesh.cell_dof_table, scale, table)


def evaluate_at(mesh: TensorMesh, coeffs, x, y) -> np.ndarray:
    """Point values of a full-length DOF vector at physical points."""
    cells, xh, yh = mesh.locate(x, y)
    table = reference_table(np.ravel(xh), np.ravel(yh))
    loc = np.asarray(coeffs)[mesh.cell_dof_table[np.ravel(cells)]] * dof_scale(mesh.hx, mesh.hy)
    return np.sum(loc * table, axis=1).reshape(np.shape(xh))
