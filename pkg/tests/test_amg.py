import numpy as np
import pytest
import scipy.sparse as sp

from egstokes.amg import amg_setup, amg_vcycle, standard_aggregation, strength_graph
from egstokes.linsolve import KrylovConfig, fgmres

from conftest import system


def laplace1d(n):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def laplace2d(n):
    T = laplace1d(n)
    return (sp.kron(T, sp.identity(n)) + sp.kron(sp.identity(n), T)).tocsr()


def test_1d_laplacian_converges():
    A = laplace1d(64)
    hier = amg_setup(A, max_coarse=8)
    assert len(hier) > 1
    b = np.random.default_rng(0).standard_normal(64)
    _, rep = fgmres(A, lambda r: amg_vcycle(hier, r), b, KrylovConfig(rel_tol=1e-8))
    assert rep.converged and rep.iterations <= 15


def test_level_sizes_decrease():
    hier = amg_setup(laplace2d(40))
    sizes = hier.sizes
    assert all(a > b for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] <= 200
    for lvl in hier.levels[:-1]:
        # each fine unknown belongs to exactly one aggregate
        assert lvl.aggregates.min() == 0
        assert len(np.unique(lvl.aggregates)) == lvl.P.shape[1]


def test_vcycle_symmetric_and_linear():
    A = system(4).A
    n = 2 * system(4).mesh.n_vertices
    sym = ((A + A.T) * 0.5).tocsr()[:n, :n]
    hier = amg_setup(sym, components=np.repeat([0, 1], n // 2))
    rng = np.random.default_rng(1)
    r, s = rng.standard_normal(n), rng.standard_normal(n)
    Vr, Vs = amg_vcycle(hier, r), amg_vcycle(hier, s)
    assert abs(Vr @ s - r @ Vs) <= 1e-10 * abs(Vr @ s)
    assert np.allclose(amg_vcycle(hier, r + 2.5 * s), Vr + 2.5 * Vs, rtol=0, atol=1e-12 * np.abs(Vr).max())
    assert r @ Vr > 0


def test_component_labels_respected():
    A = laplace2d(12)
    block = sp.block_diag([A, A]).tocsr()
    comps = np.repeat([0, 1], A.shape[0])
    S = strength_graph(block + sp.eye(block.shape[0], k=A.shape[0]) * -0.9, components=comps)
    rows, cols = S.nonzero()
    assert np.all(comps[rows] == comps[cols])
    agg = standard_aggregation(S)
    for a in np.unique(agg):
        assert len(np.unique(comps[agg == a])) == 1


def test_strength_threshold():
    A = sp.csr_matrix(np.array([[1.0, -0.5, -0.01], [-0.5, 1.0, 0.0], [-0.01, 0.0, 1.0]]))
    S = strength_graph(A, theta=0.08).toarray()
    assert S[0, 1] == 1 and S[0, 2] == 0


def test_empty_row_rejected():
    A = sp.csr_matrix((3, 3))
    with pytest.raises(ValueError, match="empty rows"):
        amg_setup(A)
