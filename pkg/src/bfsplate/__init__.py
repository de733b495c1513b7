"""Biharmonic wave equation with Bogner-Fox-Schmit elements and Galerkin-collocation in time."""
from .kernels import BACKEND as KERNEL_BACKEND
from .mesh import TensorMesh, DofMap, build_mesh, cell_nodes, classify_boundary
from .assembly import AssembledOperators, assemble, report_counts

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "TensorMesh",
    "DofMap",
    "build_mesh",
    "cell_nodes",
    "classify_boundary",
    "AssembledOperators",
    "assemble",
    "report_counts",
]
