"""Config-driven production runs: sensor signal, grid snapshots, counts report.

A scenario file is INI text with the sections ``domain``, ``mesh``, ``time``,
``scheme``, ``coefficient``, ``initial``, ``forcing``, ``sensor`` and
``output``. Spatial data are picked from named built-ins (see
:mod:`bfsplate.cases`) so every derivative the solver needs stays exact.
"""
from __future__ import annotations

import configparser
import csv
import io
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .assembly import assemble, report_counts
from .bfs import CoefficientField, reference_table, dof_scale
from .cases import COEFFICIENTS, SPATIAL, get_case, initial_from_expr
from .mesh import ConfigurationError, TensorMesh, build_mesh
from .quadrature import gauss_legendre, tensorize
from .time_schemes import (
    ACCELERATIONS,
    SCHEMES,
    InitialData,
    LoadAssembler,
    RhsModel,
    SolutionTrajectory,
    TimePartition,
    initial_state,
    simulate,
)

SECTIONS = ("domain", "mesh", "time", "scheme", "coefficient", "initial", "forcing", "sensor", "output")


class ConfigError(ConfigurationError):
    """Malformed scenario file; the message names the section, key and line."""


class SolverFailure(RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


# --------------------------------------------------------------------------
# sensor


@dataclass(frozen=True)
class SensorRegion:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ConfigurationError(f"sensor region has no area: {self}")

    @classmethod
    def centered(cls, cx=0.75, cy=0.0, half_width=1.0 / 32) -> "SensorRegion":
        return cls(cx - half_width, cx + half_width, cy - half_width, cy + half_width)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def split(self, axis: str = "x", at=None) -> tuple["SensorRegion", "SensorRegion"]:
        if axis == "x":
            m = 0.5 * (self.x0 + self.x1) if at is None else at
            return SensorRegion(self.x0, m, self.y0, self.y1), SensorRegion(m, self.x1, self.y0, self.y1)
        m = 0.5 * (self.y0 + self.y1) if at is None else at
        return SensorRegion(self.x0, self.x1, self.y0, m), SensorRegion(self.x0, self.x1, m, self.y1)


def _clip(lo, hi, grid):
    inner = grid[(grid > lo) & (grid < hi)]
    return np.concatenate([[lo], inner, [hi]])


def sensor_weights(mesh: TensorMesh, region: SensorRegion, points: int = 4) -> np.ndarray:
    """Full-length vector w with w . coeffs = integral of the field over the region.

    The region is cut along the grid lines; each piece lies in one cell and
    gets its own tensor Gauss rule.
    """
    xa, xb, ya, yb = mesh.domain
    if region.x0 < xa or region.x1 > xb or region.y0 < ya or region.y1 > yb:
        raise ConfigurationError(f"sensor region {region} is not inside the domain {mesh.domain}")
    q = tensorize(gauss_legendre(points))
    xs = _clip(region.x0, region.x1, mesh.x_nodes)
    ys = _clip(region.y0, region.y1, mesh.y_nodes)
    w = np.zeros(mesh.n_dofs)
    scale = dof_scale(mesh.hx, mesh.hy)
    for j in range(ys.size - 1):
        for i in range(xs.size - 1):
            px = xs[i] + (xs[i + 1] - xs[i]) * q.x
            py = ys[j] + (ys[j + 1] - ys[j]) * q.y
            cx = min(int((0.5 * (xs[i] + xs[i + 1]) - xa) // mesh.hx), mesh.nx - 1)
            cy = min(int((0.5 * (ys[j] + ys[j + 1]) - ya) // mesh.hy), mesh.ny - 1)
            cell = cy * mesh.nx + cx
            xh = (px - (xa + cx * mesh.hx)) / mesh.hx
            yh = (py - (ya + cy * mesh.hy)) / mesh.hy
            jac = (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j])
            local = (q.weights * jac) @ reference_table(xh, yh) * scale
            np.add.at(w, mesh.cell_dof_table[cell], local)
    return w


def sensor_integral(mesh: TensorMesh, coeffs, region: SensorRegion) -> float:
    """Integral over the region of a full-length DOF vector."""
    return float(sensor_weights(mesh, region) @ np.asarray(coeffs, dtype=float))


def sensor_value(traj: SolutionTrajectory, mesh: TensorMesh, region: SensorRegion, t: float, weights=None) -> float:
    w = sensor_weights(mesh, region) if weights is None else weights
    u = traj.evaluate(t)
    return float(w[traj.dofmap.free_dofs] @ u)


# --------------------------------------------------------------------------
# config


def _number(text: str) -> float:
    """Decimal or exact fraction such as ``1/32``."""
    return float(Fraction(text.strip()))


def _key_lines(text: str) -> dict:
    lines, section = {}, None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            lines[(section, None)] = i
        elif section and s and s[0] not in "#;":
            key = re.split(r"[=:]", s, 1)[0].strip().lower()
            lines.setdefault((section, key), i)
    return lines


class _Reader:
    def __init__(self, parser, lines, source):
        self.p, self.lines, self.source = parser, lines, source

    def where(self, section, key=None):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        loc = f"{self.source}:{line}" if line else self.source
        return f"{loc}: [{section}]" + (f" {key}" if key else "")

    def fail(self, section, key, msg):
        raise ConfigError(f"{self.where(section, key)}: {msg}")

    def has(self, section, key):
        return self.p.has_option(section, key)

    def raw(self, section, key, default=None):
        if not self.p.has_section(section):
            if default is not None:
                return default
            self.fail(section, None, "missing section")
        if not self.p.has_option(section, key):
            if default is not None:
                return default
            self.fail(section, key, "missing key")
        return self.p.get(section, key).strip()

    def num(self, section, key, default=None):
        text = self.raw(section, key, None if default is None else str(default))
        try:
            return _number(text)
        except (ValueError, ZeroDivisionError):
            self.fail(section, key, f"expected a number, got {text!r}")

    def integer(self, section, key, default=None):
        text = self.raw(section, key, None if default is None else str(default))
        try:
            return int(text)
        except ValueError:
            self.fail(section, key, f"expected an integer, got {text!r}")

    def options(self, section, prefix, skip=()):
        """Numeric keyword arguments ``prefix_name = value`` of a section."""
        out = {}
        if not self.p.has_section(section):
            return out
        for key in self.p.options(section):
            if key.startswith(prefix) and key not in skip:
                name = key[len(prefix):]
                val = self.p.get(section, key).strip()
                try:
                    out[name] = _number(val)
                except (ValueError, ZeroDivisionError):
                    out[name] = val
        return out


@dataclass
class ScenarioConfig:
    domain: tuple
    nx: int
    ny: int
    T: float
    N: int
    scheme: str
    coefficient: CoefficientField
    initial: InitialData
    rhs: RhsModel
    acceleration: str = "interpolate"
    sensor: SensorRegion | None = None
    sample_per_step: int = 1
    snapshot_times: tuple = ()
    sensor_csv: str = "sensor.csv"
    snapshot_prefix: str = "snapshot"
    report: str = "counts.txt"
    source: str = "<config>"
    labels: dict = field(default_factory=dict)

    @property
    def tau(self) -> float:
        return self.T / self.N

    def mesh(self) -> TensorMesh:
        return build_mesh(self.domain, self.nx, self.ny)


def _spatial(reader, section, key, default="zero"):
    name = reader.raw(section, key, default)
    if name not in SPATIAL:
        reader.fail(section, key, f"unknown built-in {name!r}; available: {sorted(SPATIAL)}")
    kw = reader.options(section, key + "_")
    try:
        return SPATIAL[name](**kw), name
    except TypeError as exc:
        reader.fail(section, key, f"bad parameters for {name!r}: {exc}")


def _reader(text, source):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    r = _Reader(parser, _key_lines(text), source)
    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        r.fail(unknown[0], None, f"unknown section; expected one of {list(SECTIONS)}")
    return r


def _parse_space(r):
    domain = tuple(r.num("domain", k) for k in ("x_min", "x_max", "y_min", "y_max"))
    if not (domain[1] > domain[0] and domain[3] > domain[2]):
        r.fail("domain", None, f"inverted or empty rectangle {domain}")
    nx, ny = r.integer("mesh", "nx"), r.integer("mesh", "ny")
    if nx < 1 or ny < 1:
        r.fail("mesh", None, f"cell counts must be positive, got {nx}x{ny}")
    ckind = r.raw("coefficient", "kind", "constant")
    if ckind not in COEFFICIENTS:
        r.fail("coefficient", "kind", f"unknown coefficient {ckind!r}; available: {sorted(COEFFICIENTS)}")
    ckw = r.options("coefficient", "", skip=("kind",))
    try:
        coef = COEFFICIENTS[ckind](**ckw)
    except (TypeError, ValueError) as exc:
        r.fail("coefficient", None, f"bad parameters for {ckind!r}: {exc}")
    mesh = build_mesh(domain, nx, ny)
    x0, y0 = mesh.cell_origins()
    samples = coef(x0 + 0.5 * mesh.hx, y0 + 0.5 * mesh.hy)
    if np.any(~(samples > 0)):
        r.fail("coefficient", None, "stiffness must be strictly positive")
    return domain, nx, ny, coef


def parse_mesh_config(text: str, source: str = "<config>"):
    """Only the domain, mesh and coefficient sections; returns (mesh, coefficient)."""
    r = _reader(text, source)
    domain, nx, ny, coef = _parse_space(r)
    return build_mesh(domain, nx, ny), coef


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    r = _reader(text, source)
    parser = r.p
    domain, nx, ny, coef = _parse_space(r)

    T = r.num("time", "t")
    if T <= 0:
        r.fail("time", "t", "final time must be positive")
    if r.has("time", "n"):
        N = r.integer("time", "n")
        if N < 1:
            r.fail("time", "n", "step count must be positive")
    elif r.has("time", "step"):
        step = r.num("time", "step")
        N = int(round(T / step)) if step > 0 else 0
        if N < 1 or abs(N * step - T) > 1e-12 * T:
            r.fail("time", "step", f"step {step} does not divide T = {T}")
    else:
        r.fail("time", "n", "give either n or step")

    scheme = r.raw("scheme", "kind").lower()
    if scheme not in SCHEMES:
        r.fail("scheme", "kind", f"unknown scheme {scheme!r}; expected one of {SCHEMES}")

    labels = {}
    fkind = r.raw("forcing", "kind", "zero")
    case_name = r.raw("initial", "case", "")
    if case_name:
        try:
            case = get_case(case_name)
        except KeyError as exc:
            r.fail("initial", "case", exc.args[0])
        if not (coef.is_constant and coef.value == 1.0):
            r.fail("coefficient", "kind", f"case {case_name!r} assumes c = 1")
        initial = case.initial
        labels["initial"] = case_name
    else:
        u0, n0 = _spatial(r, "initial", "u0")
        u1, n1 = _spatial(r, "initial", "u1")
        if fkind != "zero":
            r.fail("forcing", "kind", "nonzero forcing needs an initial case with matching data")
        initial = initial_from_expr(u0, u1, 0, coef)
        labels["initial"] = f"{n0}/{n1}"
    acceleration = r.raw("initial", "acceleration", "interpolate").lower()
    if acceleration not in ACCELERATIONS:
        r.fail("initial", "acceleration", f"expected one of {ACCELERATIONS}, got {acceleration!r}")
    if fkind == "zero":
        rhs = RhsModel.zero()
    else:
        try:
            rhs = get_case(fkind).rhs
        except KeyError as exc:
            r.fail("forcing", "kind", exc.args[0])
        if fkind != case_name:
            r.fail("forcing", "kind", f"forcing {fkind!r} must match the initial case {case_name!r}")

    sensor, m = None, 1
    if parser.has_section("sensor") and r.raw("sensor", "enabled", "yes").lower() not in ("no", "false", "0", "off"):
        try:
            sensor = SensorRegion.centered(
                r.num("sensor", "center_x", 0.75), r.num("sensor", "center_y", 0.0), r.num("sensor", "half_width", "1/32")
            )
        except ConfigurationError as exc:
            r.fail("sensor", None, str(exc))
        if sensor.x0 < domain[0] or sensor.x1 > domain[1] or sensor.y0 < domain[2] or sensor.y1 > domain[3]:
            r.fail("sensor", None, "sensor region is not inside the domain")
        m = r.integer("sensor", "sample_per_step", 1)
        if m < 1:
            r.fail("sensor", "sample_per_step", "must be at least 1")

    snaps = ()
    text_times = r.raw("output", "snapshot_times", "")
    if text_times:
        try:
            snaps = tuple(_number(s) for s in re.split(r"[,\s]+", text_times) if s)
        except (ValueError, ZeroDivisionError):
            r.fail("output", "snapshot_times", f"expected numbers, got {text_times!r}")
        if any(t < 0 or t > T * (1 + 1e-14) for t in snaps):
            r.fail("output", "snapshot_times", f"times must lie in [0, {T}]")

    names = {}
    for key, default in (("sensor_csv", "sensor.csv"), ("snapshot_prefix", "snapshot"), ("report", "counts.txt")):
        val = r.raw("output", key, default)
        if os.sep in val or val in ("", ".", ".."):
            r.fail("output", key, f"expected a plain file name, got {val!r}")
        names[key] = val

    return ScenarioConfig(
        domain=domain, nx=nx, ny=ny, T=T, N=N, scheme=scheme, coefficient=coef, initial=initial, rhs=rhs,
        acceleration=acceleration, sensor=sensor, sample_per_step=m, snapshot_times=snaps, source=source, labels=labels, **names,
    )


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None


def load_config(path) -> ScenarioConfig:
    return parse_config(_read(path), source=str(path))


def load_mesh_config(path):
    return parse_mesh_config(_read(path), source=str(path))


# --------------------------------------------------------------------------
# outputs


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def sensor_csv(times, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "u_c"])
    for t, v in zip(times, values):
        w.writerow([_fmt(t), _fmt(v)])
    return buf.getvalue()


def snapshot_text(mesh: TensorMesh, full, t: float) -> str:
    """Header then (ny+1) rows of (nx+1) nodal deflections, y increasing by row."""
    vals = np.asarray(full)[0::4].reshape(mesh.ny + 1, mesh.nx + 1)
    head = [
        f"nx {mesh.nx}",
        f"ny {mesh.ny}",
        "domain " + " ".join(_fmt(v) for v in mesh.domain),
        f"t {_fmt(t)}",
    ]
    rows = [" ".join(_fmt(v) for v in row) for row in vals]
    return "\n".join(head + rows) + "\n"


def read_snapshot(text: str):
    lines = text.splitlines()
    nx, ny = int(lines[0].split()[1]), int(lines[1].split()[1])
    domain = tuple(float(v) for v in lines[2].split()[1:])
    t = float(lines[3].split()[1])
    vals = np.array([[float(v) for v in ln.split()] for ln in lines[4:]])
    if vals.shape != (ny + 1, nx + 1):
        raise ValueError(f"snapshot grid is {vals.shape}, header says {(ny + 1, nx + 1)}")
    return nx, ny, domain, t, vals


def counts_text(ops, scheme: str) -> str:
    rep = report_counts(ops, scheme)
    return "".join(f"{k}: {rep[k]}\n" for k in ("scheme", "cells", "dof", "dof_free", "nnz"))


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    trajectory: SolutionTrajectory
    times: np.ndarray
    sensor: np.ndarray | None
    files: list


def sample_times(partition: TimePartition, m: int) -> np.ndarray:
    if m <= 1:
        return partition.nodes.copy()
    t = [partition.nodes[:1]]
    for n in range(1, partition.N + 1):
        t0, tau = partition.nodes[n - 1], partition.steps[n - 1]
        t.append(t0 + tau * np.arange(1, m) / m)
        t.append(partition.nodes[n : n + 1])
    return np.concatenate(t)


def simulate_scenario(cfg: ScenarioConfig):
    mesh = cfg.mesh()
    ops = assemble(mesh, cfg.coefficient)
    part = TimePartition.uniform(cfg.T, cfg.N)
    loads = LoadAssembler(ops.dofmap)
    F0 = None if cfg.rhs.is_zero else cfg.rhs.loads(loads, 0.0)
    init = initial_state(
        ops.dofmap, cfg.initial, part.steps[0], cfg.scheme,
        acceleration=cfg.acceleration, M=ops.M, A=ops.A, F0=F0,
    )
    step = [0]

    def track(i, _traj):
        step[0] = i

    try:
        traj = simulate(
            cfg.scheme, ops.M, ops.A, part, init, rhs=cfg.rhs, loads=loads,
            dofmap=ops.dofmap, on_step=track,
        )
    except (ArithmeticError, np.linalg.LinAlgError, FloatingPointError) as exc:
        raise SolverFailure(f"solver failed at step {step[0] + 1}: {exc}", step=step[0] + 1) from exc
    if not np.all(np.isfinite(traj.values)):
        bad = int(np.argmax(~np.all(np.isfinite(traj.values[0]), axis=1)))
        raise SolverFailure(f"non-finite solution at step {bad}", step=bad)
    return mesh, ops, traj


def run_scenario(cfg: ScenarioConfig, out_dir) -> ScenarioResult:
    """Run the time loop and write sensor CSV, snapshots and the counts report."""
    mesh, ops, traj = simulate_scenario(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []

    def write(name, text):
        p = out / name
        with open(p, "w", newline="\n") as fh:
            fh.write(text)
        files.append(p)

    times, signal = traj.partition.nodes, None
    if cfg.sensor is not None:
        w = sensor_weights(mesh, cfg.sensor)
        times = sample_times(traj.partition, cfg.sample_per_step)
        signal = np.array([sensor_value(traj, mesh, cfg.sensor, t, weights=w) for t in times])
        write(cfg.sensor_csv, sensor_csv(times, signal))
    for k, t in enumerate(cfg.snapshot_times):
        t = min(t, cfg.T)
        full = traj.dofmap.extend(traj.evaluate(t))
        write(f"{cfg.snapshot_prefix}_{k:03d}.txt", snapshot_text(mesh, full, t))
    write(cfg.report, counts_text(ops, cfg.scheme))
    return ScenarioResult(cfg, traj, times, signal, files)


def info_lines(mesh: TensorMesh, coefficient=None) -> list[str]:
    """dof and nnz of every scheme's per-step system on ``mesh``."""
    ops = assemble(mesh, coefficient)
    reps = [report_counts(ops, s) for s in SCHEMES]
    lines = [f"mesh: {mesh.nx}x{mesh.ny} ({mesh.n_cells} cells)", "[dof]"]
    lines += [f"{r['scheme']}: {r['dof']}" for r in reps]
    lines.append("[dof_free]")
    lines += [f"{r['scheme']}: {r['dof_free']}" for r in reps]
    lines.append("[nnz]")
    lines += [f"{r['scheme']}: {r['nnz']}" for r in reps]
    return lines
