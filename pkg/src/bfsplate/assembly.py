"""Global mass and biharmonic matrices over the free (non-clamped) DOFs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .bfs import CoefficientField, biharmonic_ingredients, local_biharmonic, local_mass
from .mesh import DofMap, TensorMesh, classify_boundary

SCHEMES = ("cgp1", "cgp2", "gc3")
# unknown coefficient vectors per time step
_VECTORS_PER_STEP = {"cgp1": 2, "cgp2": 4, "gc3": 4}


def _csr(rows, cols, vals, n) -> sp.csr_matrix:
    m = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


@dataclass(frozen=True)
class AssembledOperators:
    mesh: TensorMesh
    dofmap: DofMap
    M: sp.csr_matrix
    A: sp.csr_matrix

    @property
    def n_free(self) -> int:
        return self.dofmap.n_free

    @property
    def n_total(self) -> int:
        return self.dofmap.n_total

    def report(self) -> dict:
        return {
            "J_total": self.n_total,
            "free": self.n_free,
            "nnz_M": int(self.M.nnz),
            "nnz_A": int(self.A.nnz),
        }


def assemble_mass(mesh: TensorMesh, dofmap: DofMap | None = None) -> sp.csr_matrix:
    dofmap = dofmap or classify_boundary(mesh)
    rows, cols, vals = kernels.scatter_constant(dofmap.cell_free_table, local_mass(mesh))
    return _csr(rows, cols, vals, dofmap.n_free)


def assemble_biharmonic(mesh: TensorMesh, c: CoefficientField, dofmap: DofMap | None = None) -> sp.csr_matrix:
    dofmap = dofmap or classify_boundary(mesh)
    if c.is_constant:
        rows, cols, vals = kernels.scatter_constant(dofmap.cell_free_table, local_biharmonic(mesh, c))
    else:
        lap, cw = biharmonic_ingredients(mesh, c)
        rows, cols, vals = kernels.scatter_weighted(dofmap.cell_free_table, lap, cw)
    return _csr(rows, cols, vals, dofmap.n_free)


def assemble(mesh: TensorMesh, c: CoefficientField | None = None) -> AssembledOperators:
    """Mass M and biharmonic A with clamped DOFs eliminated.

    Cells are visited in ascending order and duplicates summed in that order,
    so repeated assembly is bit-identical.
    """
    c = c if c is not None else CoefficientField.constant(1.0)
    dofmap = classify_boundary(mesh)
    return AssembledOperators(mesh, dofmap, assemble_mass(mesh, dofmap), assemble_biharmonic(mesh, c, dofmap))


def report_counts(ops: AssembledOperators, scheme: str) -> dict:
    """Unknown and nonzero counts of the per-step system of ``scheme``.

    ``dof`` counts all BFS DOFs (boundary included) per unknown vector;
    ``dof_free`` is the size of the system actually solved; ``nnz`` is taken
    from that system's stored pattern.
    """
    from .time_schemes import step_matrix

    if scheme not in _VECTORS_PER_STEP:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    k = _VECTORS_PER_STEP[scheme]
    S = step_matrix(scheme, ops.M, ops.A, 1.0)
    return {
        "scheme": scheme,
        "cells": ops.mesh.n_cells,
        "dof": k * ops.n_total,
        "dof_free": k * ops.n_free,
        "nnz": int(S.nnz),
    }


def write_triplets(matrix, path) -> None:
    """Write ``row col value`` lines (0-based), one stored entry per line."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", newline="\n") as fh:
        for r, c_, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c_} {v:.17g}\n")


def read_triplets(path, n: int) -> sp.csr_matrix:
    data = np.loadtxt(path, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix((n, n))
    return _csr(data[:, 0].astype(int), data[:, 1].astype(int), data[:, 2], n)
