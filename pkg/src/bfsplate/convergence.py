"""Error norms against manufactured solutions and convergence-order tables."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble
from .bfs import evaluate_field
from .cases import ManufacturedCase
from .mesh import TensorMesh, build_mesh
from .quadrature import gauss_legendre, tensorize
from .time_schemes import (
    LoadAssembler,
    SolutionTrajectory,
    TimePartition,
    initial_state,
    simulate,
)

FINE_SAMPLES = 100  # L-infinity additionally samples t_{n-1} + j tau_n / 100, j = 1..99
TIME_GAUSS_POINTS = 5
SPACE_GAUSS_POINTS = 6
_TIME_CHUNK = 32


@dataclass
class NormReport:
    linf_tau: float
    linf: float
    l2l2: float


class _SpatialErrorEvaluator:
    """Squared L2(Omega) errors of a trajectory at batches of times."""

    def __init__(self, traj: SolutionTrajectory, exact, points: int = SPACE_GAUSS_POINTS):
        self.traj = traj
        self.mesh: TensorMesh = traj.dofmap.mesh
        self.exact = exact
        q = tensorize(gauss_legendre(points))
        self.q = q
        x0, y0 = self.mesh.cell_origins()
        self.X = (x0[:, None] + self.mesh.hx * q.x).ravel()
        self.Y = (y0[:, None] + self.mesh.hy * q.y).ravel()
        self.w = np.tile(q.weights * self.mesh.hx * self.mesh.hy, self.mesh.n_cells)

    def interval_fields(self, n: int) -> np.ndarray:
        """(nbasis, n_points) spatial values of the interval's u0 coefficients."""
        coeffs = self.traj.dofmap.extend(self.traj.interval_coefficients(n, 0))
        vals = evaluate_field(self.mesh, coeffs, self.q.x, self.q.y)
        return vals.reshape(coeffs.shape[0], -1)

    def squared(self, n: int, times, fields=None) -> np.ndarray:
        fields = self.interval_fields(n) if fields is None else fields
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.empty(times.size)
        for s in range(0, times.size, _TIME_CHUNK):
            tt = times[s : s + _TIME_CHUNK]
            uh = self.traj.basis(n, tt) @ fields
            ex = self.exact(self.X[None, :], self.Y[None, :], tt[:, None])
            out[s : s + _TIME_CHUNK] = ((uh - ex) ** 2) @ self.w
        return out


def spatial_l2_error(traj: SolutionTrajectory, case: ManufacturedCase, t: float) -> float:
    ev = _SpatialErrorEvaluator(traj, case.u)
    n = traj.partition.interval_of(t)
    return float(math.sqrt(max(ev.squared(n, [t])[0], 0.0)))


def compute_norms(traj: SolutionTrajectory, case: ManufacturedCase) -> NormReport:
    ev = _SpatialErrorEvaluator(traj, case.u)
    part = traj.partition
    tg = gauss_legendre(TIME_GAUSS_POINTS)
    j = np.arange(1, FINE_SAMPLES) / FINE_SAMPLES
    node_max = 0.0
    fine_max = 0.0
    l2 = 0.0
    for n in range(1, part.N + 1):
        t0, tau = part.nodes[n - 1], part.steps[n - 1]
        fields = ev.interval_fields(n)
        ends = ev.squared(n, [t0, part.nodes[n]], fields) if n == 1 else ev.squared(n, [part.nodes[n]], fields)
        node_max = max(node_max, ends.max())
        fine_max = max(fine_max, ev.squared(n, t0 + j * tau, fields).max())
        l2 += tau * float(tg.weights @ ev.squared(n, t0 + tg.nodes * tau, fields))
    return NormReport(math.sqrt(node_max), math.sqrt(max(node_max, fine_max)), math.sqrt(l2))


def compute_eoc(e_coarse: float, e_fine: float):
    """log2 of the error ratio; ``None`` when either error is not positive."""
    if not (e_coarse > 0 and e_fine > 0):
        return None
    return math.log2(e_coarse / e_fine)


@dataclass
class EocRow:
    level: int
    tau: float
    h: float
    errors: NormReport
    eoc: tuple = (None, None, None)
    seconds: float = 0.0


@dataclass
class EocTable:
    scheme: str
    case: str
    rows: list = field(default_factory=list)

    def add(self, row: EocRow) -> None:
        if self.rows:
            prev = self.rows[-1].errors
            e = row.errors
            row.eoc = (
                compute_eoc(prev.linf_tau, e.linf_tau),
                compute_eoc(prev.linf, e.linf),
                compute_eoc(prev.l2l2, e.l2l2),
            )
        self.rows.append(row)

    @property
    def final_eoc(self) -> tuple:
        return self.rows[-1].eoc

    HEADER = ["level", "tau", "h", "err_linf_tau", "eoc", "err_linf", "eoc", "err_l2l2", "eoc"]

    def _records(self):
        for r in self.rows:
            e = r.errors
            yield [r.level, r.tau, r.h, e.linf_tau, r.eoc[0], e.linf, r.eoc[1], e.l2l2, r.eoc[2]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for rec in self._records():
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in rec])
        return buf.getvalue()

    def to_text(self) -> str:
        head = f"{'level':>5} {'tau':>9} {'h':>9} {'Linf_tau(L2)':>12} {'EOC':>5} {'Linf(L2)':>10} {'EOC':>5} {'L2(L2)':>10} {'EOC':>5}"
        lines = [f"{self.scheme} / {self.case}", head]
        fmt_eoc = lambda v: f"{'--':>5}" if v is None else f"{v:5.2f}"
        for r in self.rows:
            e = r.errors
            lines.append(
                f"{r.level:>5} {r.tau:9.6f} {r.h:9.6f} {e.linf_tau:12.3e} {fmt_eoc(r.eoc[0])} "
                f"{e.linf:10.3e} {fmt_eoc(r.eoc[1])} {e.l2l2:10.3e} {fmt_eoc(r.eoc[2])}"
            )
        return "\n".join(lines) + "\n"


def run_level(scheme: str, case: ManufacturedCase, level: int, tau0: float = 0.1, n0: int = 5):
    """Solve one level (tau0 / 2^level, (n0 2^level)^2 cells); returns (trajectory, norms)."""
    n = n0 * 2**level
    mesh = build_mesh(case.domain, n, n)
    ops = assemble(mesh)
    N = int(round(case.T / tau0)) * 2**level
    part = TimePartition.uniform(case.T, N)
    init = initial_state(ops.dofmap, case.initial, part.steps[0], scheme)
    traj = simulate(
        scheme, ops.M, ops.A, part, init, rhs=case.rhs, loads=LoadAssembler(ops.dofmap), dofmap=ops.dofmap
    )
    return traj, compute_norms(traj, case)


def run_study(scheme: str, case: ManufacturedCase, levels: int, tau0: float = 0.1, n0: int = 5, log=None) -> EocTable:
    if levels < 2:
        raise ValueError("a convergence study needs at least two levels")
    table = EocTable(scheme, case.name)
    for level in range(levels):
        start = time.perf_counter()
        traj, norms = run_level(scheme, case, level, tau0, n0)
        mesh = traj.dofmap.mesh
        table.add(EocRow(level, traj.partition.tau, mesh.h, norms, seconds=time.perf_counter() - start))
        if log is not None:
            log(f"{scheme} level {level}: {norms} ({table.rows[-1].seconds:.1f} s)")
    return table
