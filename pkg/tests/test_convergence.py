import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bfsplate.assembly import assemble
from bfsplate.cases import fct2
from bfsplate.convergence import (
    EocRow,
    EocTable,
    NormReport,
    compute_eoc,
    compute_norms,
    run_study,
    spatial_l2_error,
)
from bfsplate.mesh import build_mesh
from bfsplate.time_schemes import InitialData, LoadAssembler, TimePartition, initial_state, simulate


def test_eoc_examples():
    assert compute_eoc(8e-3, 2e-3) == pytest.approx(2.0, abs=1e-14)
    assert compute_eoc(1e-3, 1e-3) == 0.0
    assert round(compute_eoc(3.296e-3, 7.835e-4), 2) == 2.07


@pytest.mark.parametrize("pair", [(0.0, 1e-3), (1e-3, 0.0), (-1.0, 1.0), (0.0, 0.0)])
def test_eoc_absent_for_nonpositive(pair):
    assert compute_eoc(*pair) is None


@given(
    e=st.floats(1e-12, 1.0),
    p=st.floats(-6.0, 6.0),
)
def test_eoc_recovers_power(e, p):
    assert compute_eoc(e, e * 2.0 ** (-p)) == pytest.approx(p, abs=1e-9)


@given(a=st.floats(1e-10, 1.0), b=st.floats(1e-10, 1.0))
def test_eoc_antisymmetric(a, b):
    assert compute_eoc(a, b) == pytest.approx(-compute_eoc(b, a), abs=1e-12)


def _zero_trajectory(scheme, n=5, N=4):
    ops = assemble(build_mesh((0, 1, 0, 1), n, n))
    part = TimePartition.uniform(1.0, N)
    init = initial_state(ops.dofmap, InitialData.zero(), part.tau, scheme)
    return simulate(scheme, ops.M, ops.A, part, init, dofmap=ops.dofmap)


@pytest.mark.parametrize("scheme", ["cgp1", "cgp2", "gc3"])
def test_zero_trajectory_error_is_exact_norm(scheme):
    traj = _zero_trajectory(scheme)
    assert np.all(traj.values == 0)
    # u(., 0.25) = sin(pi/2) sin^2(pi x) sin^2(pi y), L2 norm sqrt(9/64)
    assert spatial_l2_error(traj, fct2(), 0.25) == pytest.approx(0.375, rel=1e-10)


def test_zero_case_zero_trajectory_norms_vanish():
    case = fct2()
    zero = dataclasses.replace(case, name="zero", u=lambda x, y, t: 0.0 * (x + y + t))
    r = compute_norms(_zero_trajectory("gc3"), zero)
    assert (r.linf_tau, r.linf, r.l2l2) == (0.0, 0.0, 0.0)


@pytest.fixture(scope="module")
def studies():
    return {s: run_study(s, fct2(), 3) for s in ("cgp1", "cgp2", "gc3")}


def test_fct2_error_at_start_is_zero():
    ops = assemble(build_mesh((0, 1, 0, 1), 5, 5))
    case = fct2()
    part = TimePartition.uniform(1.0, 10)
    init = initial_state(ops.dofmap, case.initial, part.tau, "gc3")
    traj = simulate("gc3", ops.M, ops.A, part, init, rhs=case.rhs, loads=LoadAssembler(ops.dofmap), dofmap=ops.dofmap)
    assert spatial_l2_error(traj, case, 0.0) == 0.0


def test_gc3_level0_magnitude(studies):
    e = studies["gc3"].rows[0].errors.linf_tau
    assert 1.165e-3 / 2 <= e <= 1.165e-3 * 2


def test_cgp2_node_superconvergence_gap(studies):
    e = studies["cgp2"].rows[2].errors
    assert e.linf_tau == pytest.approx(4.553e-6, rel=0.5)
    assert e.linf == pytest.approx(1.247e-5, rel=0.5)
    assert e.linf / e.linf_tau > 2
    ratios = [r.errors.linf / r.errors.linf_tau for r in studies["cgp2"].rows]
    assert ratios == sorted(ratios)


def test_gc3_norms_close(studies):
    for r in studies["gc3"].rows:
        assert r.errors.linf / r.errors.linf_tau <= 1.1


@pytest.mark.parametrize("scheme", ["cgp1", "cgp2", "gc3"])
def test_norm_invariants(studies, scheme):
    rows = studies[scheme].rows
    for r in rows:
        assert 0 <= r.errors.linf_tau <= r.errors.linf
        assert r.errors.l2l2 >= 0
    assert rows[0].eoc == (None, None, None)
    for a, b in zip(rows, rows[1:]):
        assert b.errors.linf_tau < a.errors.linf_tau
        assert b.errors.linf < a.errors.linf
        assert b.errors.l2l2 < a.errors.l2l2
        assert b.tau == a.tau / 2 and b.h == pytest.approx(a.h / 2, rel=1e-14)


def test_csv_layout(studies):
    text = studies["gc3"].to_csv()
    assert "\r" not in text
    lines = text.splitlines()
    assert lines[0] == "level,tau,h,err_linf_tau,eoc,err_linf,eoc,err_l2l2,eoc"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[4] == first[6] == first[8] == ""
    last = [float(v) for v in lines[3].split(",")]
    assert last[0] == 2 and last[1] == 0.025
    assert math.isclose(last[4], studies["gc3"].final_eoc[0])


def test_text_table(studies):
    text = studies["cgp1"].to_text()
    assert text.splitlines()[0] == "cgp1 / fct2"
    assert "--" in text.splitlines()[2]


def test_study_needs_two_levels():
    with pytest.raises(ValueError):
        run_study("gc3", fct2(), 1)


def test_table_add_computes_eoc():
    t = EocTable("x", "y")
    t.add(EocRow(0, 0.1, 0.2, NormReport(8e-3, 8e-3, 0.0)))
    t.add(EocRow(1, 0.05, 0.1, NormReport(2e-3, 1e-3, 1.0)))
    assert t.final_eoc[0] == pytest.approx(2.0) and t.final_eoc[1] == pytest.approx(3.0)
    assert t.final_eoc[2] is None
