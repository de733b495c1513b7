"""NumPy implementations of the cell kernels (used when the extension is absent)."""
import numpy as np


def _free_pairs(cell_free):
    ncell, nloc = cell_free.shape
    rows = np.repeat(cell_free, nloc, axis=1)
    cols = np.tile(cell_free, (1, nloc))
    keep = (rows >= 0) & (cols >= 0)
    return rows, cols, keep


def scatter_constant(cell_free, local):
    rows, cols, keep = _free_pairs(cell_free)
    vals = np.broadcast_to(np.asarray(local).ravel(), rows.shape)
    return rows[keep], cols[keep], vals[keep]


def scatter_weighted(cell_free, table, cell_weights):
    rows, cols, keep = _free_pairs(cell_free)
    local = np.einsum("eq,qi,qj->eij", cell_weights, table, table, optimize=True)
    local = 0.5 * (local + local.transpose(0, 2, 1))
    vals = local.reshape(rows.shape)
    return rows[keep], cols[keep], vals[keep]


def cell_values(coeffs, cell_dofs, scale, table):
    loc = coeffs[:, cell_dofs] * scale
    return loc @ table.T
