import dataclasses

import numpy as np
import pytest
import scipy.sparse as sp

from egstokes.assembly import DiscretizationParams, assemble_system
from egstokes.linsolve import KrylovConfig, fgmres
from egstokes.precond import (ALL_KINDS, EGSmoother, InnerSolveError, PrecondKind,
                              VelocityBlockSolver, apply_block_preconditioner, compatible_rhs,
                              eg_velocity_precond, pressure_projector, solve_stokes)
from egstokes.problems import builtin_problem

from conftest import square, system


def test_kind_parsing():
    assert PrecondKind.parse("bl") is PrecondKind.BL
    assert PrecondKind.BD.exact and not PrecondKind.MU.exact
    assert [k.shape for k in ALL_KINDS] == ["D", "L", "U"] * 2
    with pytest.raises(ValueError, match="unknown preconditioner"):
        PrecondKind.parse("XX")


@pytest.mark.parametrize("kind", ["BD", "BL", "BU"])
def test_preconditioner_linear(kind):
    b = system(3)
    vs = VelocityBlockSolver.build(b.A, b.dofmap.n_cg)
    rng = np.random.default_rng(0)
    n = b.n_u + b.n_p
    for _ in range(20):
        r, s = rng.standard_normal(n), rng.standard_normal(n)
        c = rng.uniform(-2, 2)
        lhs = apply_block_preconditioner(kind, b, vs, r + c * s)
        rhs = apply_block_preconditioner(kind, b, vs, r) + c * apply_block_preconditioner(kind, b, vs, s)
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(lhs)


def test_block_formulas():
    b = system(2)
    vs = VelocityBlockSolver.build(b.A, b.dofmap.n_cg)
    Ainv = np.linalg.inv(b.A.toarray())
    r = np.random.default_rng(1).standard_normal(b.n_u + b.n_p)
    ru, rp = r[:b.n_u], r[b.n_u:]
    w = b.Mp / (2.0 * b.mu_cells)
    zd = apply_block_preconditioner("BD", b, vs, r)
    assert np.allclose(zd[:b.n_u], Ainv @ ru, atol=1e-9)
    assert np.allclose(zd[b.n_u:], rp / w)
    zl = apply_block_preconditioner("BL", b, vs, r)
    assert np.allclose(zl[b.n_u:], (rp - b.B @ (Ainv @ ru)) / w, atol=1e-8)
    zu = apply_block_preconditioner("BU", b, vs, r)
    assert np.allclose(zu[:b.n_u], Ainv @ (ru - b.B.T @ (rp / w)), atol=1e-8)


def test_decoupled_system_needs_at_most_two_iterations():
    b = system(3, "ex2")
    decoupled = dataclasses.replace(b, B=sp.csr_matrix(b.B.shape), rhs_p=np.zeros(b.n_p))
    _, _, rep = solve_stokes(decoupled, "BD")
    assert rep.converged and rep.iterations <= 2


def test_exact_inverse_one_iteration():
    b = system(1, "ex2")
    K = b.saddle_matrix().toarray()
    _, rep = fgmres(K, lambda r: np.linalg.solve(K, r), b.rhs, KrylovConfig(rel_tol=1e-10))
    assert rep.converged and rep.iterations == 1


def test_eg_precond_zero_in_zero_out():
    b = system(3)
    sm = EGSmoother.build(b.A, b.dofmap.n_cg)
    assert not eg_velocity_precond(sm, np.zeros(b.n_u)).any()


def inner_count(L, tol=1e-3):
    b = system(L)
    vs = VelocityBlockSolver.build(b.A, b.dofmap.n_cg)
    vs.rel_tol = tol
    vs.solve(np.random.default_rng(L).standard_normal(b.n_u))
    return vs.reports[-1].iterations


def test_inner_iterations_h32():
    assert inner_count(5) <= 30


def test_inner_growth_bounded():
    assert inner_count(6) <= 2 * inner_count(4)


def test_inner_failure_strict():
    b = system(3)
    vs = VelocityBlockSolver.build(b.A, b.dofmap.n_cg, max_iters=2, strict=True)
    with pytest.raises(InnerSolveError) as exc:
        vs.solve(np.ones(b.n_u))
    assert exc.value.report.iterations == 2


@pytest.mark.parametrize("L", [3, 4])
def test_triangular_not_worse_than_diagonal(L):
    b = system(L)
    vs = VelocityBlockSolver.build(b.A, b.dofmap.n_cg)
    its = {k: solve_stokes(b, k, vsolve=vs)[2].iterations for k in ("BD", "BL", "BU")}
    assert its["BL"] <= its["BD"] + 2 and its["BU"] <= its["BD"] + 2


def test_mean_zero_pressure_after_solve():
    b = system(4)
    u, p, rep = solve_stokes(b, "BL", KrylovConfig(rel_tol=1e-10))
    assert rep.converged
    assert abs(b.Mp @ p) <= 1e-10 * np.linalg.norm(p)
    assert pressure_projector(system(2, "ex2")) is None


def test_compatible_rhs_removes_constant():
    b = system(3)
    rhs = compatible_rhs(b)
    assert abs(rhs[b.n_u:].sum()) < 1e-14
    assert np.array_equal(compatible_rhs(system(3, "ex2")), system(3, "ex2").rhs)


def test_bd_counts_under_viscosity_scaling():
    # with u scaled by 1/mu the preconditioned operators are similar; Euclidean
    # FGMRES weighs the pressure residual differently, so counts agree only roughly
    counts = {}
    for mu in (1.0, 1e-2):
        b = assemble_system(square(4), builtin_problem("ex1", mu=mu, scale=1.0 / mu),
                            DiscretizationParams())
        counts[mu] = solve_stokes(b, "BD")[2].iterations
    assert abs(counts[1.0] - counts[1e-2]) <= 0.25 * counts[1.0]


def test_alternative_velocity_block():
    b = system(3)
    _, _, rep = solve_stokes(b, "BD", velocity_block="AE")
    assert rep.converged
