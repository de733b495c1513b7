# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled cell loops: local-to-global scatter and per-cell field evaluation."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef Py_ssize_t _count_pairs(const long long[:, ::1] cell_free):
    cdef Py_ssize_t e, i, nfree, total = 0
    for e in range(cell_free.shape[0]):
        nfree = 0
        for i in range(cell_free.shape[1]):
            if cell_free[e, i] >= 0:
                nfree += 1
        total += nfree * nfree
    return total


def scatter_constant(const long long[:, ::1] cell_free, const double[:, ::1] local):
    cdef Py_ssize_t n = _count_pairs(cell_free)
    rows_a = np.empty(n, dtype=np.int64)
    cols_a = np.empty(n, dtype=np.int64)
    vals_a = np.empty(n, dtype=np.float64)
    cdef long long[::1] rows = rows_a
    cdef long long[::1] cols = cols_a
    cdef double[::1] vals = vals_a
    cdef Py_ssize_t e, i, j, k = 0
    cdef Py_ssize_t nloc = cell_free.shape[1]
    cdef long long gi, gj
    for e in range(cell_free.shape[0]):
        for i in range(nloc):
            gi = cell_free[e, i]
            if gi < 0:
                continue
            for j in range(nloc):
                gj = cell_free[e, j]
                if gj < 0:
                    continue
                rows[k] = gi
                cols[k] = gj
                vals[k] = local[i, j]
                k += 1
    return rows_a, cols_a, vals_a


def scatter_weighted(const long long[:, ::1] cell_free, const double[:, ::1] table,
                     const double[:, ::1] cell_weights):
    """Triplets of sum_q w[e, q] * T[q, i] * T[q, j] over free local pairs."""
    cdef Py_ssize_t n = _count_pairs(cell_free)
    rows_a = np.empty(n, dtype=np.int64)
    cols_a = np.empty(n, dtype=np.int64)
    vals_a = np.empty(n, dtype=np.float64)
    cdef long long[::1] rows = rows_a
    cdef long long[::1] cols = cols_a
    cdef double[::1] vals = vals_a
    cdef Py_ssize_t nloc = cell_free.shape[1]
    cdef Py_ssize_t nq = table.shape[0]
    cdef Py_ssize_t e, i, j, q, k = 0
    cdef long long gi, gj
    cdef double s
    local_a = np.empty((nloc, nloc), dtype=np.float64)
    cdef double[:, ::1] local = local_a
    for e in range(cell_free.shape[0]):
        for i in range(nloc):
            for j in range(i, nloc):
                s = 0.0
                for q in range(nq):
                    s += cell_weights[e, q] * table[q, i] * table[q, j]
                local[i, j] = s
                local[j, i] = s
        for i in range(nloc):
            gi = cell_free[e, i]
            if gi < 0:
                continue
            for j in range(nloc):
                gj = cell_free[e, j]
                if gj < 0:
                    continue
                rows[k] = gi
                cols[k] = gj
                vals[k] = local[i, j]
                k += 1
    return rows_a, cols_a, vals_a


def cell_values(const double[:, ::1] coeffs, const long long[:, ::1] cell_dofs,
                const double[::1] scale, const double[:, ::1] table):
    """Values of several DOF vectors at reference points of every cell.

    coeffs: (m, n_dofs); table: (npts, nloc). Returns (m, n_cells, npts).
    """
    cdef Py_ssize_t m = coeffs.shape[0]
    cdef Py_ssize_t ncell = cell_dofs.shape[0]
    cdef Py_ssize_t nloc = cell_dofs.shape[1]
    cdef Py_ssize_t npts = table.shape[0]
    out_a = np.zeros((m, ncell, npts), dtype=np.float64)
    cdef double[:, :, ::1] out = out_a
    cdef double loc[64]
    cdef Py_ssize_t r, e, i, p
    cdef double s
    if nloc > 64:
        raise ValueError("at most 64 local DOFs supported")
    for r in range(m):
        for e in range(ncell):
            for i in range(nloc):
                loc[i] = coeffs[r, cell_dofs[e, i]] * scale[i]
            for p in range(npts):
                s = 0.0
                for i in range(nloc):
                    s += table[p, i] * loc[i]
                out[r, e, p] = s
    return out_a
