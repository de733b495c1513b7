"""Backend selection for the cell kernels.

The compiled extension is used when importable; set ``BFSPLATE_PURE=1`` to
force the NumPy implementation.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("BFSPLATE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass


def _idx(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def scatter_constant(cell_free, local, impl=None):
    impl = impl or _impl
    return impl.scatter_constant(_idx(cell_free), _f64(local))


def scatter_weighted(cell_free, table, cell_weights, impl=None):
    impl = impl or _impl
    return impl.scatter_weighted(_idx(cell_free), _f64(table), _f64(cell_weights))


def cell_values(coeffs, cell_dofs, scale, table, impl=None):
    """(m, n_cells, npts) values of m coefficient vectors (or (n_cells, npts) for one)."""
    impl = impl or _impl
    coeffs = np.asarray(coeffs, dtype=np.float64)
    single = coeffs.ndim == 1
    out = impl.cell_values(_f64(np.atleast_2d(coeffs)), _idx(cell_dofs), _f64(scale), _f64(table))
    return out[0] if single else out
