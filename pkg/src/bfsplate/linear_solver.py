"""Sparse direct solves with a reusable factorization (SuperLU via SciPy).

One :class:`Factorization` may be shared between threads; calls to
:meth:`Factorization.solve` are serialized by an internal lock. Each solve
applies up to ``refine`` steps of iterative refinement against the stored
matrix.

Before factorizing, rows and columns are equilibrated (Ruiz scaling rounded
to powers of two, so the scaling itself is exact). The Galerkin-collocation
block matrix mixes M, A, tau*M and M/tau blocks over BFS derivative DOFs; its
condition number drops from ~1e15 to ~1e3 under this scaling.
"""
from __future__ import annotations

import threading
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

PIVOT_RTOL = 1e-14
DENSE_DIAGNOSIS_LIMIT = 3000  # SuperLU does not report which pivot vanished
EQUILIBRATE_SWEEPS = 8


def equilibrate(S, sweeps: int = EQUILIBRATE_SWEEPS):
    """Row and column scalings r, c (powers of two) with diag(r) S diag(c) ~ unit max entries."""
    S = sp.csr_matrix(S, dtype=float)
    r = np.ones(S.shape[0])
    c = np.ones(S.shape[1])
    for _ in range(sweeps):
        B = abs(sp.diags(r) @ S @ sp.diags(c))
        rows = B.max(axis=1).toarray().ravel()
        r /= np.sqrt(np.where(rows > 0, rows, 1.0))
        B = abs(sp.diags(r) @ S @ sp.diags(c))
        cols = B.max(axis=0).toarray().ravel()
        c /= np.sqrt(np.where(cols > 0, cols, 1.0))
    pow2 = lambda v: np.exp2(np.round(np.log2(v)))
    return pow2(r), pow2(c)


def _dense_zero_pivot(S):
    """First negligible pivot of a dense partial-pivoting LU, or None."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, _ = sla.lu_factor(S.toarray(), check_finite=False)
    colmax = np.abs(S).max(axis=0).toarray().ravel()
    bad = np.flatnonzero(np.abs(np.diag(lu)) <= PIVOT_RTOL * max(colmax.max(), 1e-300))
    return int(bad[0]) if bad.size else None


class SingularMatrixError(ArithmeticError):
    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class Factorization:
    def __init__(self, S, symmetric: bool = False, refine: int = 2, scale: bool = True):
        S = sp.csc_matrix(S, dtype=float)
        if S.shape[0] != S.shape[1]:
            raise ValueError(f"matrix must be square, got {S.shape}")
        self.n = S.shape[0]
        self.symmetric = symmetric
        self.refine = refine
        self._S = S.tocsr()
        self._lock = threading.Lock()
        self._lu = None
        if self.n == 0:
            return
        scale = abs(S).max() if S.nnz else 0.0
        if scale == 0.0:
            raise SingularMatrixError("matrix is zero; first pivot vanishes", pivot=0)
        empty = np.flatnonzero(np.diff(S.indptr) == 0)
        if empty.size:
            raise SingularMatrixError(f"column {empty[0]} is structurally zero", pivot=int(empty[0]))
        if scale:
            self._r, self._c = equilibrate(S)
        else:
            self._r, self._c = np.ones(self.n), np.ones(self.n)
        B = (sp.diags(self._r) @ S @ sp.diags(self._c)).tocsc()
        # symmetric mode only changes the column ordering heuristic
        permc = "MMD_AT_PLUS_A" if symmetric else "COLAMD"
        try:
            self._lu = spla.splu(B, permc_spec=permc)
        except RuntimeError as exc:
            pivot = _dense_zero_pivot(S) if self.n <= DENSE_DIAGNOSIS_LIMIT else None
            where = f" at pivot {pivot}" if pivot is not None else ""
            raise SingularMatrixError(f"factorization failed{where}: {exc}", pivot=pivot) from exc
        # each pivot is judged against its own column: BFS derivative DOFs make
        # column magnitudes span many decades, so a single global scale misfires
        colmax = abs(B).max(axis=0).toarray().ravel()
        diag = np.abs(self._lu.U.diagonal())
        bad = np.flatnonzero(diag < PIVOT_RTOL * colmax[self._lu.perm_c])
        if bad.size:
            col = int(self._lu.perm_c[bad[0]])
            raise SingularMatrixError(
                f"pivot {bad[0]} (column {col}) is {diag[bad[0]]:.3e}, "
                f"below {PIVOT_RTOL:g} * max|S[:, {col}]|",
                pivot=int(bad[0]),
            )

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError(f"rhs has length {b.shape[0]}, system has dimension {self.n}")
        if self.n == 0:
            return b.copy()
        with self._lock:
            x = self._lu_solve(b)
            if not self.refine:
                return x
            # iterative refinement: the BFS derivative DOFs make S badly scaled and
            # SuperLU's backward error alone can leave ~1e-6 relative forward error
            r = b - self._S @ x
            rn = np.linalg.norm(r)
            for _ in range(self.refine):
                if rn == 0.0:
                    break
                x_new = x + self._lu_solve(r)
                r_new = b - self._S @ x_new
                rn_new = np.linalg.norm(r_new)
                if not rn_new < rn:
                    break
                x, r, rn = x_new, r_new, rn_new
            return x

    def _lu_solve(self, b):
        r, c = (self._r, self._c) if b.ndim == 1 else (self._r[:, None], self._c[:, None])
        return c * self._lu.solve(r * b)


def factorize(S, symmetric: bool = False, refine: int = 2, scale: bool = True) -> Factorization:
    return Factorization(S, symmetric=symmetric, refine=refine, scale=scale)


def solve(f: Factorization, b) -> np.ndarray:
    return f.solve(b)


def relative_residual(S, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(S @ x - b)
    return float(r / nb) if nb > 0 else float(r)
