"""Uniform tensor-product meshes and the BFS degree-of-freedom map.

Nodes are numbered row-major (x fastest), cells likewise. Every node carries
four Hermite DOFs in the order (value, d/dx, d/dy, d2/dxdy), so the global
index of ``(node, kind)`` is ``4 * node + kind``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

DOF_KINDS = ("val", "dx", "dy", "dxy")
NDOF_PER_NODE = 4


class ConfigurationError(ValueError):
    """Invalid mesh or scenario parameters."""


@dataclass(frozen=True)
class TensorMesh:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ConfigurationError("cell counts must be integers")
        if self.nx < 1 or self.ny < 1:
            raise ConfigurationError(f"cell counts must be positive, got nx={self.nx}, ny={self.ny}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ConfigurationError(
                f"degenerate rectangle ({self.x_min}, {self.x_max}) x ({self.y_min}, {self.y_max})"
            )

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def h(self) -> float:
        """Cell diagonal, the mesh size used in the convergence tables."""
        return float(np.hypot(self.hx, self.hy))

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_dofs(self) -> int:
        return NDOF_PER_NODE * self.n_nodes

    @property
    def domain(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)

    @cached_property
    def x_nodes(self) -> np.ndarray:
        return self.x_min + np.arange(self.nx + 1) * self.hx

    @cached_property
    def y_nodes(self) -> np.ndarray:
        return self.y_min + np.arange(self.ny + 1) * self.hy

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat arrays (x, y) of all node coordinates in node order."""
        X, Y = np.meshgrid(self.x_nodes, self.y_nodes)
        return X.ravel(), Y.ravel()

    def cell_origins(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower-left corner of every cell, in cell order."""
        X, Y = np.meshgrid(self.x_nodes[:-1], self.y_nodes[:-1])
        return X.ravel(), Y.ravel()

    @cached_property
    def cell_node_table(self) -> np.ndarray:
        """(n_cells, 4) corner nodes, counterclockwise from lower-left."""
        cx, cy = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        n0 = (cy * (self.nx + 1) + cx).ravel()
        stride = self.nx + 1
        return np.stack([n0, n0 + 1, n0 + 1 + stride, n0 + stride], axis=1)

    @cached_property
    def cell_dof_table(self) -> np.ndarray:
        """(n_cells, 16) global DOF indices; local index = 4 * corner + kind."""
        nodes = self.cell_node_table
        dofs = NDOF_PER_NODE * nodes[:, :, None] + np.arange(NDOF_PER_NODE)
        return dofs.reshape(self.n_cells, 16)

    def locate(self, x, y):
        """Cell index and reference coordinates of physical points.

        Points on interior grid lines are assigned to the cell above/right;
        points on the upper/right boundary to the last cell.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        sx = (x - self.x_min) / self.hx
        sy = (y - self.y_min) / self.hy
        cx = np.clip(np.floor(sx).astype(int), 0, self.nx - 1)
        cy = np.clip(np.floor(sy).astype(int), 0, self.ny - 1)
        return cy * self.nx + cx, sx - cx, sy - cy


def build_mesh(domain, nx: int, ny: int) -> TensorMesh:
    """Mesh of the rectangle ``domain = (x_min, x_max, y_min, y_max)``."""
    x_min, x_max, y_min, y_max = (float(v) for v in domain)
    return TensorMesh(x_min, x_max, y_min, y_max, nx, ny)


def cell_nodes(mesh: TensorMesh, cell: int) -> tuple[int, int, int, int]:
    if not 0 <= cell < mesh.n_cells:
        raise IndexError(f"cell {cell} out of range for {mesh.n_cells} cells")
    return tuple(int(n) for n in mesh.cell_node_table[cell])


@dataclass(frozen=True)
class DofMap:
    """Clamped-boundary classification and free-DOF renumbering."""

    mesh: TensorMesh
    constrained: np.ndarray = field(repr=False)
    free_index: np.ndarray = field(repr=False)
    free_dofs: np.ndarray = field(repr=False)

    @property
    def n_total(self) -> int:
        return self.mesh.n_dofs

    @property
    def n_free(self) -> int:
        return int(self.free_dofs.size)

    @property
    def n_constrained(self) -> int:
        return self.n_total - self.n_free

    @staticmethod
    def global_index(node: int, kind: int) -> int:
        return NDOF_PER_NODE * node + kind

    @staticmethod
    def node_kind(index: int) -> tuple[int, int]:
        return divmod(index, NDOF_PER_NODE)

    def restrict(self, full: np.ndarray) -> np.ndarray:
        """Free entries of a full-length DOF vector."""
        return np.asarray(full)[..., self.free_dofs]

    def extend(self, free: np.ndarray) -> np.ndarray:
        """Full-length DOF vector with zeros on the clamped boundary."""
        free = np.asarray(free)
        out = np.zeros(free.shape[:-1] + (self.n_total,), dtype=free.dtype)
        out[..., self.free_dofs] = free
        return out

    @cached_property
    def cell_free_table(self) -> np.ndarray:
        """(n_cells, 16) free indices of the local DOFs, -1 where clamped."""
        return self.free_index[self.mesh.cell_dof_table]


def classify_boundary(mesh: TensorMesh) -> DofMap:
    """Flag all four DOFs of every boundary node as clamped."""
    i = np.arange(mesh.nx + 1)
    j = np.arange(mesh.ny + 1)
    I, J = np.meshgrid(i, j)
    on_boundary = ((I == 0) | (I == mesh.nx) | (J == 0) | (J == mesh.ny)).ravel()
    constrained = np.repeat(on_boundary, NDOF_PER_NODE)
    free_dofs = np.flatnonzero(~constrained)
    free_index = np.full(mesh.n_dofs, -1, dtype=np.int64)
    free_index[free_dofs] = np.arange(free_dofs.size)
    return DofMap(mesh, constrained, free_index, free_dofs)
