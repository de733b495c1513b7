"""Time discretizations of M u'' + A u = F written for (u0, u1) = (u, du/dt).

``gc3``  Galerkin-collocation with C1 piecewise cubics (Hermite basis).
``cgp1`` continuous Galerkin-Petrov, piecewise linear (Crank-Nicolson).
``cgp2`` continuous Galerkin-Petrov, piecewise quadratic.

Hermite coefficient convention on an interval of length tau:
``(w(t_{n-1}), tau * w'(t_{n-1}), w(t_n), tau * w'(t_n))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .bfs import NodalFunction, hermite, interpolate_nodal, physical_table
from .linear_solver import Factorization, factorize, relative_residual
from .mesh import DofMap
from .quadrature import gauss_legendre, gauss_lobatto, tensorize

SCHEMES = ("cgp1", "cgp2", "gc3")

# integrals of the mapped Hermite functions over an interval, in units of tau
XI_INTEGRALS = (1 / 2, 1 / 12, 1 / 2, -1 / 12)
# integrals of their time derivatives (tau-independent)
XI_DERIV_INTEGRALS = (-1.0, 0.0, 1.0, 0.0)


class SchemeError(ValueError):
    pass


def _check_scheme(scheme):
    if scheme not in SCHEMES:
        raise SchemeError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


# --------------------------------------------------------------------------
# time mesh


@dataclass(frozen=True)
class TimePartition:
    """Nodes 0 = t_0 < ... < t_N = T.

    Uniform partitions keep one exact step length, so a single factorization
    serves every interval.
    """

    nodes: np.ndarray
    uniform_step: Optional[float] = None

    def __post_init__(self):
        t = np.asarray(self.nodes, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least one interval")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("time nodes must start at 0 and increase strictly")
        object.__setattr__(self, "nodes", t)

    @classmethod
    def uniform(cls, T: float, N: int) -> "TimePartition":
        if N < 1 or T <= 0:
            raise ValueError(f"invalid uniform partition T={T}, N={N}")
        t = np.arange(N + 1) * (T / N)
        t[-1] = T
        return cls(t, uniform_step=T / N)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        if self.uniform_step is not None:
            return np.full(self.N, self.uniform_step)
        return np.diff(self.nodes)

    @property
    def tau(self) -> float:
        return float(self.steps.max())

    def interval_of(self, t: float, side: str = "left") -> int:
        """1-based interval containing t; at a node, the interval to its ``side``."""
        if t < self.nodes[0] or t > self.nodes[-1]:
            raise ValueError(f"t={t} outside [0, {self.T}]")
        if side == "left":
            n = int(np.searchsorted(self.nodes, t, side="left"))
        else:
            n = int(np.searchsorted(self.nodes, t, side="right"))
        return min(max(n, 1), self.N)


# --------------------------------------------------------------------------
# loads


class LoadAssembler:
    """Vectors ``(F)_i = int g(x) phi_i dx`` over free DOFs, by per-cell Gauss quadrature."""

    def __init__(self, dofmap: DofMap, points: int = 6):
        mesh = dofmap.mesh
        self.dofmap = dofmap
        q = tensorize(gauss_legendre(points))
        x0, y0 = mesh.cell_origins()
        self.X = x0[:, None] + mesh.hx * q.x
        self.Y = y0[:, None] + mesh.hy * q.y
        self.weights = q.weights * mesh.hx * mesh.hy
        self.table = physical_table(mesh, q.x, q.y)
        self.cell_dofs = mesh.cell_dof_table

    def __call__(self, values_or_fn) -> np.ndarray:
        vals = values_or_fn(self.X, self.Y) if callable(values_or_fn) else values_or_fn
        local = (np.broadcast_to(vals, self.X.shape) * self.weights) @ self.table
        full = np.bincount(self.cell_dofs.ravel(), weights=local.ravel(), minlength=self.dofmap.n_total)
        return full[self.dofmap.free_dofs]


@dataclass
class RhsModel:
    """Forcing f(x, y, t) and its time derivative; ``None`` means zero."""

    f: Optional[Callable] = None
    ft: Optional[Callable] = None

    @classmethod
    def zero(cls) -> "RhsModel":
        return cls()

    @property
    def is_zero(self) -> bool:
        return self.f is None

    def loads(self, assembler: LoadAssembler, t: float, deriv: int = 0) -> np.ndarray:
        """Load vector of f (deriv=0) or of df/dt (deriv=1), the latter unscaled by tau."""
        if self.is_zero:
            return np.zeros(assembler.dofmap.n_free)
        g = self.f if deriv == 0 else self.ft
        if g is None:
            raise ValueError("time derivative of the forcing is required")
        return assembler(lambda x, y: g(x, y, t))


# --------------------------------------------------------------------------
# step systems


def _bmat(blocks):
    return sp.bmat(blocks, format="csc")


def gc_matrix(M, A, tau: float) -> sp.csc_matrix:
    """Block matrix of one Galerkin-collocation step.

    Unknown ordering (u0_2, u0_3, u1_2, u1_3); rows: velocity Galerkin
    equation, PDE Galerkin equation, velocity collocation, PDE collocation.
    """
    return _bmat(
        [
            [M, None, -(tau / 2) * M, (tau / 12) * M],
            [(tau / 2) * A, -(tau / 12) * A, M, None],
            [None, (1 / tau) * M, -M, None],
            [A, None, None, (1 / tau) * M],
        ]
    )


@dataclass(frozen=True)
class CgpCoefficients:
    """Reference-interval data of cGP(k): Lagrange trial at k+1 Lobatto nodes,
    Legendre test polynomials of degree < k.

    ``alpha[i, j] = int l_j' psi_i``; ``beta[i, j] = int l_j psi_i`` (times tau);
    ``load[i, s] = w_s psi_i(t_s)`` (times tau) for the Lobatto time quadrature.
    """

    k: int
    nodes: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    load: np.ndarray

    def lagrange(self, that, deriv: int = 0) -> np.ndarray:
        """(len(that), k+1) Lagrange basis (or derivative w.r.t. reference time)."""
        that = np.atleast_1d(np.asarray(that, dtype=float))
        cols = []
        for j in range(self.k + 1):
            others = np.delete(self.nodes, j)
            poly = np.poly1d(others, r=True) / np.prod(self.nodes[j] - others)
            cols.append((poly.deriv(deriv) if deriv else poly)(that))
        return np.column_stack(cols)


def cgp_coefficients(k: int) -> CgpCoefficients:
    if k not in (1, 2):
        raise SchemeError(f"cGP(k) supports k in (1, 2), got {k}")
    rule = gauss_lobatto(k + 1)
    base = CgpCoefficients(k, rule.nodes, None, None, None)
    L = base.lagrange(rule.nodes)
    dL = base.lagrange(rule.nodes, 1)
    # shifted Legendre polynomials 1, 2t-1
    psi = np.vstack([np.ones_like(rule.nodes), 2 * rule.nodes - 1])[:k]
    alpha = (psi * rule.weights) @ dL
    beta = (psi * rule.weights) @ L
    for a in (alpha, beta):
        a[np.abs(a) < 1e-14] = 0.0
    return CgpCoefficients(k, rule.nodes, alpha, beta, psi * rule.weights)


def _scaled(coef, mat):
    return None if coef == 0.0 else coef * mat


def cgp_matrix(k: int, M, A, tau: float) -> sp.csc_matrix:
    """Block matrix of one cGP(k) step; unknowns (u0 at nodes 1..k, u1 at nodes 1..k)."""
    c = cgp_coefficients(k)
    blocks = [[None] * (2 * k) for _ in range(2 * k)]
    for i in range(k):
        for j in range(k):
            a, b = c.alpha[i, j + 1], tau * c.beta[i, j + 1]
            blocks[i][j] = _scaled(a, M)
            blocks[i][k + j] = _scaled(-b, M)
            blocks[k + i][j] = _scaled(b, A)
            blocks[k + i][k + j] = _scaled(a, M)
    n = M.shape[0]
    for i in range(2 * k):
        if all(b is None for b in blocks[i]):
            blocks[i][i] = sp.csr_matrix((n, n))
    return _bmat(blocks)


def step_matrix(scheme: str, M, A, tau: float) -> sp.csc_matrix:
    _check_scheme(scheme)
    if scheme == "gc3":
        return gc_matrix(M, A, tau)
    return cgp_matrix(int(scheme[-1]), M, A, tau)


@dataclass
class StepSystem:
    scheme: str
    M: sp.spmatrix
    A: sp.spmatrix
    tau: float
    S: sp.csc_matrix
    factorization: Factorization
    cgp: Optional[CgpCoefficients] = None

    @property
    def n(self) -> int:
        return self.M.shape[0]


def build_gc_system(M, A, tau: float) -> StepSystem:
    if M.shape != A.shape:
        raise ValueError("M and A must have the same shape")
    if not tau > 0:
        raise ValueError("step length must be positive")
    S = gc_matrix(M, A, tau)
    return StepSystem("gc3", M, A, tau, S, factorize(S))


def build_cgp_system(k: int, M, A, tau: float) -> StepSystem:
    if M.shape != A.shape:
        raise ValueError("M and A must have the same shape")
    if not tau > 0:
        raise ValueError("step length must be positive")
    S = cgp_matrix(k, M, A, tau)
    return StepSystem(f"cgp{k}", M, A, tau, S, factorize(S), cgp_coefficients(k))


def build_system(scheme: str, M, A, tau: float) -> StepSystem:
    _check_scheme(scheme)
    if scheme == "gc3":
        return build_gc_system(M, A, tau)
    return build_cgp_system(int(scheme[-1]), M, A, tau)


def gc_rhs(sys: StepSystem, prev, loads) -> np.ndarray:
    """Right-hand side of a collocation step.

    prev = (u0_0, u0_1, u1_0, u1_1) in Hermite convention;
    loads = (F(t_{n-1}), F_t(t_{n-1}), F(t_n), F_t(t_n)), time derivatives unscaled.
    """
    u00, u01, u10, u11 = prev
    F0, F1, F2, F3 = loads
    tau, M, A = sys.tau, sys.M, sys.A
    b1 = M @ (u00 + (tau / 2) * u10 + (tau / 12) * u11)
    fbar = (tau / 2) * F0 + (tau**2 / 12) * F1 + (tau / 2) * F2 - (tau**2 / 12) * F3
    b2 = fbar + M @ u10 - A @ ((tau / 2) * u00 + (tau / 12) * u01)
    return np.concatenate([b1, b2, np.zeros_like(b1), F2])


def gc_step(sys: StepSystem, prev, loads):
    """Advance one interval; returns (u0_2, u0_3, u1_2, u1_3)."""
    x = sys.factorization.solve(gc_rhs(sys, prev, loads))
    return tuple(np.split(x, 4))


def gc_collocation_residuals(sys: StepSystem, new, F2) -> tuple[float, float]:
    """Relative residuals of the two endpoint collocation conditions."""
    u02, u03, u12, u13 = new
    M, A, tau = sys.M, sys.A, sys.tau
    a, b = M @ u03 / tau, M @ u12
    r_vel = np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    c, d = M @ u13 / tau, A @ u02
    scale = max(np.linalg.norm(c), np.linalg.norm(d), np.linalg.norm(F2), 1e-300)
    r_pde = np.linalg.norm(c + d - F2) / scale
    return float(r_vel), float(r_pde)


def cgp_rhs(sys: StepSystem, prev, loads) -> np.ndarray:
    """prev = (u0, u1) at t_{n-1}; loads = F at the k+1 Lobatto nodes of the interval."""
    c = sys.cgp
    k, tau = c.k, sys.tau
    u0, u1 = prev
    M0, A0, M1 = sys.M @ u0, sys.A @ u0, sys.M @ u1
    top, bottom = [], []
    for i in range(k):
        top.append(-c.alpha[i, 0] * M0 + tau * c.beta[i, 0] * M1)
        f = tau * sum(c.load[i, s] * loads[s] for s in range(k + 1))
        bottom.append(f - c.alpha[i, 0] * M1 - tau * c.beta[i, 0] * A0)
    return np.concatenate(top + bottom)


def cgp_step(sys: StepSystem, prev, loads):
    """Advance one interval; returns (u0 at nodes 1..k, u1 at nodes 1..k) as (k, n) arrays."""
    k = sys.cgp.k
    x = sys.factorization.solve(cgp_rhs(sys, prev, loads))
    parts = np.split(x, 2 * k)
    return np.array(parts[:k]), np.array(parts[k:])


# --------------------------------------------------------------------------
# initial data


@dataclass
class InitialData:
    """u(0), du/dt(0) and, for the C1 scheme, d2u/dt2(0) = f(0) - Lap^2 u(0)."""

    u0: NodalFunction
    u1: NodalFunction
    accel0: Optional[NodalFunction] = None

    @classmethod
    def zero(cls) -> "InitialData":
        z = NodalFunction.zero()
        return cls(z, z, z)


ACCELERATIONS = ("interpolate", "discrete")


def initial_state(
    dofmap: DofMap, data: InitialData, tau1: float, scheme: str = "gc3",
    acceleration: str = "interpolate", M=None, A=None, F0=None,
):
    """Discrete start values by nodal interpolation.

    gc3 returns (u0_0, u0_1, u1_0, u1_1) with the derivative slots scaled by
    tau1; cGP schemes return (u0_0, u1_0).

    ``acceleration`` picks the gc3 start acceleration: ``"interpolate"`` takes
    the nodal interpolant of ``data.accel0``; ``"discrete"`` solves
    M a = F0 - A u0 (F0 defaults to zero), which is the semi-discrete equation
    at t = 0. Only the discrete start keeps the discrete energy constant from
    the first step on; the interpolated one adds a one-off jump on step 1.
    """
    if acceleration not in ACCELERATIONS:
        raise ValueError(f"acceleration must be one of {ACCELERATIONS}, got {acceleration!r}")
    mesh = dofmap.mesh
    u0 = dofmap.restrict(interpolate_nodal(mesh, data.u0))
    u1 = dofmap.restrict(interpolate_nodal(mesh, data.u1))
    if scheme != "gc3":
        return u0, u1
    if acceleration == "discrete":
        if M is None or A is None:
            raise ValueError("the discrete start acceleration needs M and A")
        rhs = -(A @ u0) if F0 is None else np.asarray(F0, dtype=float) - A @ u0
        a0 = factorize(M, symmetric=True).solve(rhs)
    else:
        if data.accel0 is None:
            raise ValueError("the C1 scheme needs f(.,0) - Lap^2 u0 for the initial acceleration")
        a0 = dofmap.restrict(interpolate_nodal(mesh, data.accel0))
    return u0, tau1 * u1, u1, tau1 * a0


# --------------------------------------------------------------------------
# trajectories


@dataclass
class SolutionTrajectory:
    """Piecewise polynomial (u0, u1) over a time partition, free DOFs only.

    gc3: ``values[c]`` and ``dscaled[c]`` hold, for component c in (0, 1), the
    value and the tau_n-scaled time derivative at every node (node 0 scaled by
    tau_1). cGP(k): ``values[c]`` at nodes, ``interior[c]`` at the interior
    Lobatto points of each interval.
    """

    scheme: str
    partition: TimePartition
    dofmap: DofMap
    values: np.ndarray  # (2, N+1, n)
    dscaled: Optional[np.ndarray] = None  # (2, N+1, n)
    interior: Optional[np.ndarray] = None  # (2, N, k-1, n)
    residuals: list = field(default_factory=list)

    @property
    def n_free(self) -> int:
        return self.values.shape[2]

    def interval_coefficients(self, n: int, which: int) -> np.ndarray:
        """(nbasis, n_free) coefficients of component ``which`` on interval n (1-based)."""
        if self.scheme == "gc3":
            steps = self.partition.steps
            d_left = self.dscaled[which, n - 1]
            if n >= 2 and steps[n - 1] != steps[n - 2]:
                d_left = d_left * (steps[n - 1] / steps[n - 2])
            return np.stack([self.values[which, n - 1], d_left, self.values[which, n], self.dscaled[which, n]])
        parts = [self.values[which, n - 1][None]]
        if self.interior is not None and self.interior.shape[2]:
            parts.append(self.interior[which, n - 1])
        parts.append(self.values[which, n][None])
        return np.concatenate(parts)

    def basis(self, n: int, t, deriv: int = 0) -> np.ndarray:
        """(len(t), nbasis) time basis of interval n at absolute times t."""
        t0 = self.partition.nodes[n - 1]
        tau = self.partition.steps[n - 1]
        that = (np.atleast_1d(np.asarray(t, dtype=float)) - t0) / tau
        if self.scheme == "gc3":
            return hermite(that, deriv) / tau**deriv
        return cgp_coefficients(int(self.scheme[-1])).lagrange(that, deriv) / tau**deriv

    def evaluate(self, t: float, which: int = 0, deriv: int = 0, side: str = "left") -> np.ndarray:
        """Free DOF vector of u0 (which=0) or u1 (which=1), or its time derivative."""
        if deriv not in (0, 1):
            raise ValueError("deriv must be 0 or 1")
        n = self.partition.interval_of(t, side)
        coeffs = self.interval_coefficients(n, which)
        nodes = self.partition.nodes
        if deriv == 0 and t == nodes[n]:
            return coeffs[-2 if self.scheme == "gc3" else -1].copy()
        if deriv == 0 and t == nodes[n - 1]:
            return coeffs[0].copy()
        if self.scheme == "gc3" and deriv == 1 and t == nodes[n]:
            return coeffs[3] / self.partition.steps[n - 1]
        if self.scheme == "gc3" and deriv == 1 and t == nodes[n - 1]:
            return coeffs[1] / self.partition.steps[n - 1]
        return self.basis(n, t, deriv)[0] @ coeffs

    def node_state(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        return self.values[0, n], self.values[1, n]


def energy(M, A, u0, u1) -> float:
    return 0.5 * float(u0 @ (A @ u0) + u1 @ (M @ u1))


def simulate(
    scheme: str,
    M,
    A,
    partition: TimePartition,
    initial,
    rhs: RhsModel | None = None,
    loads: LoadAssembler | None = None,
    dofmap: DofMap | None = None,
    check_residuals: bool = False,
    on_step: Callable | None = None,
) -> SolutionTrajectory:
    """Run a scheme over the whole partition.

    ``initial`` is the output of :func:`initial_state` for the scheme. The
    factorization is rebuilt only when the step length changes.
    """
    _check_scheme(scheme)
    rhs = rhs or RhsModel.zero()
    if not rhs.is_zero and loads is None:
        raise ValueError("a load assembler is required for nonzero forcing")
    N, n = partition.N, M.shape[0]
    steps = partition.steps
    nodes = partition.nodes
    values = np.empty((2, N + 1, n))
    systems: dict[float, StepSystem] = {}

    def system(tau):
        if tau not in systems:
            systems.clear()
            systems[tau] = build_system(scheme, M, A, tau)
        return systems[tau]

    def load(t, deriv=0):
        return np.zeros(n) if rhs.is_zero else rhs.loads(loads, t, deriv)

    if scheme == "gc3":
        dscaled = np.empty((2, N + 1, n))
        u00, u01, u10, u11 = initial
        values[:, 0] = u00, u10
        dscaled[:, 0] = u01, u11
        traj = SolutionTrajectory(scheme, partition, dofmap, values, dscaled=dscaled)
        F_left = (load(nodes[0]), load(nodes[0], 1))
        for i in range(1, N + 1):
            tau = steps[i - 1]
            sys = system(tau)
            d0, d1 = dscaled[0, i - 1], dscaled[1, i - 1]
            if i >= 2 and tau != steps[i - 2]:
                ratio = tau / steps[i - 2]
                d0, d1 = d0 * ratio, d1 * ratio
            F_right = (load(nodes[i]), load(nodes[i], 1))
            prev = (values[0, i - 1], d0, values[1, i - 1], d1)
            new = gc_step(sys, prev, F_left + F_right)
            values[:, i] = new[0], new[2]
            dscaled[:, i] = new[1], new[3]
            if check_residuals:
                traj.residuals.append(gc_collocation_residuals(sys, new, F_right[0]))
            F_left = F_right
            if on_step is not None:
                on_step(i, traj)
        return traj

    k = int(scheme[-1])
    coeffs = cgp_coefficients(k)
    interior = np.empty((2, N, k - 1, n))
    values[:, 0] = initial
    traj = SolutionTrajectory(scheme, partition, dofmap, values, interior=interior)
    F_left = load(nodes[0])
    for i in range(1, N + 1):
        tau = steps[i - 1]
        sys = system(tau)
        t_loc = nodes[i - 1] + tau * coeffs.nodes
        F_nodes = [F_left] + [load(t) for t in t_loc[1:-1]] + [load(nodes[i])]
        u0_new, u1_new = cgp_step(sys, (values[0, i - 1], values[1, i - 1]), F_nodes)
        values[:, i] = u0_new[-1], u1_new[-1]
        interior[0, i - 1] = u0_new[:-1]
        interior[1, i - 1] = u1_new[:-1]
        F_left = F_nodes[-1]
        if on_step is not None:
            on_step(i, traj)
    return traj


def step_residual(sys: StepSystem, x, b) -> float:
    return relative_residual(sys.S, x, b)
