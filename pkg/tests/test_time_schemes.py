import math

import numpy as np
import pytest
import scipy.sparse as sp
import sympy as sym
from hypothesis import given, settings, strategies as st

from bfsplate.assembly import assemble
from bfsplate.bfs import hermite, interpolate_nodal
from bfsplate.cases import bilaplacian, fct2, gaussian_bump_expr, initial_from_expr, nodal, X, Y
from bfsplate.mesh import build_mesh
from bfsplate.quadrature import gauss_legendre
from bfsplate.time_schemes import (
    XI_DERIV_INTEGRALS,
    XI_INTEGRALS,
    InitialData,
    LoadAssembler,
    SchemeError,
    TimePartition,
    build_cgp_system,
    build_gc_system,
    build_system,
    cgp_coefficients,
    cgp_step,
    energy,
    gc_collocation_residuals,
    gc_matrix,
    gc_rhs,
    gc_step,
    initial_state,
    simulate,
    step_matrix,
)

ONE = sp.csr_matrix([[1.0]])


@pytest.fixture(scope="module")
def ops5():
    return assemble(build_mesh((0, 1, 0, 1), 5, 5))


def test_hermite_time_integrals():
    g = gauss_legendre(3)
    H, dH = hermite(g.nodes), hermite(g.nodes, 1)
    assert np.allclose(g.weights @ H, XI_INTEGRALS, atol=1e-15)
    assert np.allclose(g.weights @ dH, XI_DERIV_INTEGRALS, atol=1e-15)
    assert XI_INTEGRALS == (1 / 2, 1 / 12, 1 / 2, -1 / 12)


def test_gc_matrix_scalar_toy():
    S = gc_matrix(ONE, ONE, 1.0).toarray()
    want = [[1, 0, -1 / 2, 1 / 12], [1 / 2, -1 / 12, 1, 0], [0, 1, -1, 0], [1, 0, 0, 1]]
    assert np.array_equal(S, np.array(want))


def test_gc_matrix_tau_scaling():
    S1 = gc_matrix(ONE, 2 * ONE, 0.3).toarray()
    S2 = gc_matrix(ONE, 2 * ONE, 0.6).toarray()
    assert np.isclose(S2[0, 2], 2 * S1[0, 2]) and np.isclose(S2[0, 3], 2 * S1[0, 3])
    assert np.isclose(S2[1, 0], 2 * S1[1, 0]) and np.isclose(S2[1, 1], 2 * S1[1, 1])
    assert np.isclose(S2[2, 1], S1[2, 1] / 2) and np.isclose(S2[3, 3], S1[3, 3] / 2)
    assert S2[0, 0] == S1[0, 0] and S2[3, 0] == S1[3, 0]


def test_gc_dimension():
    ops = assemble(build_mesh((0, 1, 0, 1), 16, 16))
    assert ops.n_free == 900
    assert gc_matrix(ops.M, ops.A, 0.1).shape == (3600, 3600)


def test_block_counts():
    ops = assemble(build_mesh((0, 1, 0, 1), 3, 3))
    nnz_block = ops.M.nnz  # M and A share a pattern on this mesh
    assert (ops.M != 0).nnz <= nnz_block
    assert step_matrix("gc3", ops.M, ops.A, 0.1).nnz == 10 * nnz_block
    assert step_matrix("cgp2", ops.M, ops.A, 0.1).nnz == 12 * nnz_block
    assert step_matrix("cgp1", ops.M, ops.A, 0.1).nnz == 4 * nnz_block


def test_gc_step_scalar_exact():
    # u'' + u = 0, u(0) = 1, u'(0) = 0, tau = 1; state (u, tau u', v, tau v') = (1, 0, 0, -1)
    R = sym.Rational
    S = sym.Matrix([[1, 0, -R(1, 2), R(1, 12)], [R(1, 2), -R(1, 12), 1, 0], [0, 1, -1, 0], [1, 0, 0, 1]])
    b = sym.Matrix([1 - R(1, 12), -R(1, 2), 0, 0])
    x = S.LUsolve(b)
    sys_ = build_gc_system(ONE, ONE, 1.0)
    z = np.zeros(1)
    got = gc_step(sys_, (np.ones(1), z, z, -np.ones(1)), (z, z, z, z))
    assert np.allclose(np.concatenate(got), [float(v) for v in x], rtol=1e-14, atol=1e-15)
    assert abs(got[0][0] - math.cos(1.0)) < 1e-2


def test_gc_zero_step():
    sys_ = build_gc_system(ONE, ONE, 0.1)
    z = np.zeros(1)
    assert all(np.all(v == 0) for v in gc_step(sys_, (z, z, z, z), (z, z, z, z)))


def test_gc_rhs_formula(ops5):
    rng = np.random.default_rng(3)
    tau = 0.1
    sys_ = build_gc_system(ops5.M, ops5.A, tau)
    prev = [rng.standard_normal(ops5.n_free) for _ in range(4)]
    F = [rng.standard_normal(ops5.n_free) for _ in range(4)]
    b = np.split(gc_rhs(sys_, prev, F), 4)
    M, A = ops5.M, ops5.A
    assert np.allclose(b[0], M @ prev[0] + tau / 2 * (M @ prev[2]) + tau / 12 * (M @ prev[3]))
    b2 = tau / 2 * F[0] + tau**2 / 12 * F[1] + tau / 2 * F[2] - tau**2 / 12 * F[3] + M @ prev[2]
    b2 -= A @ (tau / 2 * prev[0] + tau / 12 * prev[1])
    assert np.allclose(b[1], b2)
    assert np.all(b[2] == 0) and np.array_equal(b[3], F[2])


def test_cn_scalar_step():
    tau = 0.1
    sys_ = build_cgp_system(1, ONE, ONE, tau)
    u, v = cgp_step(sys_, (np.ones(1), np.zeros(1)), [np.zeros(1), np.zeros(1)])
    q = tau**2 / 4
    assert u[0, 0] == pytest.approx((1 - q) / (1 + q), rel=1e-14)
    assert v[0, 0] == pytest.approx(-tau / (1 + q), rel=1e-14)


def test_cgp_coefficients():
    c1 = cgp_coefficients(1)
    assert np.allclose(c1.alpha, [[-1, 1]]) and np.allclose(c1.beta, [[0.5, 0.5]])
    c2 = cgp_coefficients(2)
    assert np.allclose(c2.nodes, [0, 0.5, 1])
    # Lagrange basis reproduces the nodes
    assert np.allclose(c2.lagrange(c2.nodes), np.eye(3))
    # row sums of alpha vanish (derivative of a constant), beta rows give int psi_i
    assert np.allclose(c2.alpha.sum(axis=1), 0) and np.allclose(c2.beta.sum(axis=1), [1, 0])
    with pytest.raises(SchemeError):
        cgp_coefficients(3)


def test_unknown_scheme(ops5):
    with pytest.raises(SchemeError):
        build_system("rk4", ops5.M, ops5.A, 0.1)
    with pytest.raises(ValueError):
        build_gc_system(ops5.M, ops5.A, 0.0)


def kind_scale(dofmap):
    """1, hx, hy, hx*hy per free DOF: the size of a unit-slope nodal derivative."""
    m = dofmap.mesh
    return np.array([1.0, m.hx, m.hy, m.hx * m.hy])[dofmap.free_dofs % 4]


def trapezoid_oracle(M, A, d, u, v, tau, steps, loads):
    """Independent Crank-Nicolson in displacement form.

    (M + tau^2/4 A) u+ = (M - tau^2/4 A) u + tau M v + tau^2/4 (F + F+),
    v+ = 2 (u+ - u) / tau - v; solved densely by Cholesky in the variables
    u / d so the matrix has uniform scale.
    """
    from scipy.linalg import cho_factor, cho_solve

    D = np.diag(d)
    Md, Ad = D @ M.toarray() @ D, D @ A.toarray() @ D
    q = tau**2 / 4
    fac = cho_factor(Md + q * Ad)
    us, vs = [u], [v]
    for i in range(steps):
        uh, vh = us[-1] / d, vs[-1] / d
        rhs = (Md - q * Ad) @ uh + tau * (Md @ vh) + q * d * (loads(i) + loads(i + 1))
        un = cho_solve(fac, rhs)
        vn = 2 * (un - uh) / tau - vh
        us.append(d * un)
        vs.append(d * vn)
    return np.concatenate([np.array(us), np.array(vs)], axis=1)


def test_cgp1_is_crank_nicolson(ops5):
    case = fct2()
    part = TimePartition.uniform(1.0, 20)
    L = LoadAssembler(ops5.dofmap)
    init = initial_state(ops5.dofmap, case.initial, part.tau, "cgp1")
    traj = simulate("cgp1", ops5.M, ops5.A, part, init, rhs=case.rhs, loads=L, dofmap=ops5.dofmap)
    F = lambda i: case.rhs.loads(L, part.nodes[i])
    ref = trapezoid_oracle(ops5.M, ops5.A, kind_scale(ops5.dofmap), init[0], init[1], part.tau, 20, F)
    got = np.concatenate([traj.values[0], traj.values[1]], axis=1)
    assert np.max(np.abs(got - ref)) <= 1e-12 * np.max(np.abs(ref))


def bump_setup(n=16):
    mesh = build_mesh((-1, 1, -1, 1), n, n)
    ops = assemble(mesh)
    data = initial_from_expr(gaussian_bump_expr(), 0, 0)
    return ops, data


@pytest.mark.parametrize("scheme", ["cgp1", "cgp2", "gc3"])
def test_energy_conserved(scheme):
    ops, data = bump_setup(8)
    part = TimePartition.uniform(0.03, 50)
    init = initial_state(ops.dofmap, data, part.tau, scheme, acceleration="discrete", M=ops.M, A=ops.A)
    traj = simulate(scheme, ops.M, ops.A, part, init, dofmap=ops.dofmap)
    E = np.array([energy(ops.M, ops.A, *traj.node_state(i)) for i in range(part.N + 1)])
    assert np.max(np.abs(E - E[0])) / E[0] <= 1e-10


def test_interpolated_acceleration_energy_after_first_step():
    # the interpolated start is not a solution of the discrete equation at t=0:
    # energy moves once on step 1, then stays put
    ops, data = bump_setup(8)
    part = TimePartition.uniform(0.03, 50)
    init = initial_state(ops.dofmap, data, part.tau, "gc3")
    traj = simulate("gc3", ops.M, ops.A, part, init, dofmap=ops.dofmap)
    E = np.array([energy(ops.M, ops.A, *traj.node_state(i)) for i in range(part.N + 1)])
    assert abs(E[1] - E[0]) / E[0] > 1e-6
    assert np.max(np.abs(E[1:] - E[1])) / E[1] <= 1e-10


def test_discrete_acceleration_solves_semidiscrete_equation():
    ops, data = bump_setup(6)
    rng = np.random.default_rng(3)
    F0 = rng.standard_normal(ops.dofmap.n_free)
    u0, _, _, a = initial_state(ops.dofmap, data, 0.1, "gc3", acceleration="discrete", M=ops.M, A=ops.A, F0=F0)
    assert np.linalg.norm(ops.M @ (a / 0.1) + ops.A @ u0 - F0) <= 1e-12 * np.linalg.norm(F0)


def test_start_accelerations_agree_for_fct2(ops5):
    case = fct2()
    a = initial_state(ops5.dofmap, case.initial, 0.1, "gc3")
    b = initial_state(ops5.dofmap, case.initial, 0.1, "gc3", acceleration="discrete", M=ops5.M, A=ops5.A)
    for x, y in zip(a, b):
        assert np.allclose(x, y, atol=1e-12)


def test_unknown_acceleration_rejected(ops5):
    with pytest.raises(ValueError):
        initial_state(ops5.dofmap, fct2().initial, 0.1, "gc3", acceleration="exact")


@pytest.mark.parametrize("scheme", ["cgp1", "cgp2", "gc3"])
def test_zero_data_zero_trajectory(scheme, ops5):
    part = TimePartition.uniform(0.5, 5)
    init = initial_state(ops5.dofmap, InitialData.zero(), part.tau, scheme)
    traj = simulate(scheme, ops5.M, ops5.A, part, init, dofmap=ops5.dofmap)
    assert np.all(traj.values == 0)


def random_smooth_fields(rng, ops, count):
    """Nodal interpolants of random trigonometric fields with modes up to 3."""
    X_, Y_ = ops.mesh.node_coords()
    out = []
    for _ in range(count):
        v = np.zeros((X_.size, 4))
        for k in range(1, 4):
            for l in range(1, 4):
                a = rng.standard_normal()
                sx, cx = np.sin(k * np.pi * X_), k * np.pi * np.cos(k * np.pi * X_)
                sy, cy = np.sin(l * np.pi * Y_), l * np.pi * np.cos(l * np.pi * Y_)
                v += a * np.column_stack([sx * sy, cx * sy, sx * cy, cx * cy])
        out.append(ops.dofmap.restrict(v.ravel()))
    return np.array(out)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["cgp1", "cgp2", "gc3"]))
def test_step_linearity(seed, scheme):
    ops = assemble(build_mesh((0, 1, 0, 1), 4, 4))
    sys_ = build_system(scheme, ops.M, ops.A, 0.07)
    rng = np.random.default_rng(seed)
    nstate = 4 if scheme == "gc3" else 2
    nload = 4 if scheme == "gc3" else int(scheme[-1]) + 1
    step = gc_step if scheme == "gc3" else cgp_step
    p1, p2 = random_smooth_fields(rng, ops, 2 * nstate).reshape(2, nstate, -1)
    f1, f2 = (ops.M @ random_smooth_fields(rng, ops, 2 * nload).T).T.reshape(2, nload, -1)
    a, b = rng.uniform(-2, 2, 2)
    out = lambda p, f: np.concatenate([np.ravel(v) for v in step(sys_, tuple(p), list(f))])
    lhs = out(a * p1 + b * p2, a * f1 + b * f2)
    rhs = a * out(p1, f1) + b * out(p2, f2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


@pytest.fixture(scope="module")
def gc_run(ops5):
    case = fct2()
    part = TimePartition.uniform(1.0, 10)
    init = initial_state(ops5.dofmap, case.initial, part.tau, "gc3")
    return simulate(
        "gc3", ops5.M, ops5.A, part, init, rhs=case.rhs, loads=LoadAssembler(ops5.dofmap),
        dofmap=ops5.dofmap, check_residuals=True,
    )


def test_c1_junctions_exact(gc_run):
    for n in range(1, gc_run.partition.N):
        t = gc_run.partition.nodes[n]
        for which in (0, 1):
            left = gc_run.evaluate(t, which, 1, side="left")
            right = gc_run.evaluate(t, which, 1, side="right")
            assert np.array_equal(left, right)
            assert np.array_equal(gc_run.evaluate(t, which, 0, "left"), gc_run.evaluate(t, which, 0, "right"))


def test_collocation_residuals(gc_run):
    assert len(gc_run.residuals) == gc_run.partition.N
    assert max(max(r) for r in gc_run.residuals) <= 1e-9


def test_evaluate_at_nodes(gc_run):
    p = gc_run.partition
    n = 4
    t = p.nodes[n]
    assert np.array_equal(gc_run.evaluate(t), gc_run.values[0, n])
    assert np.allclose(gc_run.evaluate(t, 0, 1), gc_run.dscaled[0, n] / p.steps[n - 1], rtol=0, atol=0)
    with pytest.raises(ValueError):
        gc_run.evaluate(1.5)


def test_evaluate_velocity_matches_derivative(gc_run):
    # collocation: u0' = u1 at every node
    for n in range(1, gc_run.partition.N + 1):
        t = gc_run.partition.nodes[n]
        d = gc_run.evaluate(t, 0, 1)
        assert np.max(np.abs(d - gc_run.evaluate(t, 1))) <= 1e-10 * np.max(np.abs(d) + 1)


def test_hermite_midpoint_partition_of_unity():
    H = hermite(0.5)[0]
    assert H @ np.array([1.0, 0.0, 1.0, 0.0]) == 1.0


def test_cgp2_continuity_and_interior(ops5):
    case = fct2()
    part = TimePartition.uniform(1.0, 8)
    init = initial_state(ops5.dofmap, case.initial, part.tau, "cgp2")
    traj = simulate("cgp2", ops5.M, ops5.A, part, init, rhs=case.rhs, loads=LoadAssembler(ops5.dofmap), dofmap=ops5.dofmap)
    for n in range(1, part.N):
        t = part.nodes[n]
        assert np.array_equal(traj.evaluate(t, side="left"), traj.evaluate(t, side="right"))
    mid = 0.5 * (part.nodes[2] + part.nodes[3])
    assert np.array_equal(traj.evaluate(mid), traj.interior[0, 2, 0])


def test_nonuniform_steps_keep_c1(ops5):
    case = fct2()
    nodes = np.concatenate([np.linspace(0, 0.5, 6), np.linspace(0.5, 1.0, 11)[1:]])
    part = TimePartition(nodes)
    init = initial_state(ops5.dofmap, case.initial, part.steps[0], "gc3")
    traj = simulate(
        "gc3", ops5.M, ops5.A, part, init, rhs=case.rhs, loads=LoadAssembler(ops5.dofmap),
        dofmap=ops5.dofmap, check_residuals=True,
    )
    t = 0.5  # step changes from 0.1 to 0.05 here
    left, right = traj.evaluate(t, 0, 1, "left"), traj.evaluate(t, 0, 1, "right")
    assert np.allclose(left, right, rtol=1e-14, atol=1e-14 * np.max(np.abs(left)))
    assert max(max(r) for r in traj.residuals) <= 1e-9
    # the result is close to the exact solution at T
    from bfsplate.convergence import spatial_l2_error

    assert spatial_l2_error(traj, case, 1.0) < 1e-3


def test_initial_state_fct2(ops5):
    case = fct2()
    u00, u01, u10, u11 = initial_state(ops5.dofmap, case.initial, 0.1, "gc3")
    assert np.all(u00 == 0)
    assert np.allclose(u01, 0.1 * u10) and np.max(np.abs(u10)) > 1
    # u_tt(0) = 0 for sin(2 pi t): the acceleration slot is the interpolant of f(0) - Lap^2 u0 = 0
    assert np.max(np.abs(u11)) < 1e-10


def test_initial_state_bump():
    ops, data = bump_setup(8)
    tau = 0.003
    u00, u01, u10, u11 = initial_state(ops.dofmap, data, tau, "gc3")
    assert np.all(u10 == 0) and np.all(u01 == 0)
    want = -tau * ops.dofmap.restrict(interpolate_nodal(ops.mesh, nodal(bilaplacian(gaussian_bump_expr()))))
    assert np.allclose(u11, want, rtol=1e-13, atol=0)


def test_initial_state_zero(ops5):
    state = initial_state(ops5.dofmap, InitialData.zero(), 0.1, "gc3")
    assert all(np.all(s == 0) for s in state)


def test_initial_state_requires_acceleration(ops5):
    d = fct2().initial
    with pytest.raises(ValueError):
        initial_state(ops5.dofmap, InitialData(d.u0, d.u1, None), 0.1, "gc3")


def test_partition_validation():
    with pytest.raises(ValueError):
        TimePartition(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError):
        TimePartition(np.array([0.1, 1.0]))
    p = TimePartition.uniform(1.0, 4)
    assert p.interval_of(0.25, "left") == 1 and p.interval_of(0.25, "right") == 2
    assert p.interval_of(0.0) == 1 and p.interval_of(1.0, "right") == 4
    assert np.all(p.steps == 0.25) and p.nodes[-1] == 1.0
