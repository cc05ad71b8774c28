"""Smoothed-aggregation algebraic multigrid for SPD matrices.

The V-cycle uses identical damped-Jacobi pre- and post-smoothing and
``R = P^T``, so one cycle is a fixed symmetric linear operator and can be
used inside Krylov methods as a preconditioner.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


@dataclass
class AmgLevel:
    A: sp.csr_matrix
    diag: np.ndarray
    damping: float
    P: sp.csr_matrix = None
    R: sp.csr_matrix = None
    aggregates: np.ndarray = None


@dataclass
class AmgHierarchy:
    levels: list = field(default_factory=list)
    coarse_solver: object = None

    @property
    def sizes(self):
        return [lvl.A.shape[0] for lvl in self.levels]

    def __len__(self):
        return len(self.levels)


def strength_graph(A: sp.csr_matrix, theta: float = 0.08, components=None) -> sp.csr_matrix:
    """Symmetric strength of connection ``|a_ij| >= theta sqrt(|a_ii a_jj|)``.

    With ``components`` (one integer label per unknown) only couplings
    between unknowns of the same label count as strong.
    """
    A = sp.csr_matrix(A)
    C = A.tocoo()
    d = np.abs(A.diagonal())
    keep = (C.row != C.col) & (np.abs(C.data) >= theta * np.sqrt(d[C.row] * d[C.col]))
    if components is not None:
        components = np.asarray(components)
        keep &= components[C.row] == components[C.col]
    S = sp.csr_matrix((np.ones(keep.sum()), (C.row[keep], C.col[keep])), shape=A.shape)
    S = ((S + S.T) > 0).astype(float).tocsr()
    S.sort_indices()
    return S


def standard_aggregation(S: sp.csr_matrix) -> np.ndarray:
    """Greedy three-pass aggregation on a strength graph; returns aggregate ids."""
    n = S.shape[0]
    indptr, indices = S.indptr, S.indices
    agg = np.full(n, -1, dtype=np.int64)
    count = 0
    # pass 1: seed aggregates whose whole neighbourhood is free
    for i in range(n):
        if agg[i] >= 0:
            continue
        nbrs = indices[indptr[i]:indptr[i + 1]]
        if len(nbrs) == 0 or np.all(agg[nbrs] < 0):
            agg[i] = count
            agg[nbrs] = count
            count += 1
    # pass 2: attach leftovers to a neighbouring aggregate
    pending = np.flatnonzero(agg < 0)
    snapshot = agg.copy()
    for i in pending:
        nbrs = indices[indptr[i]:indptr[i + 1]]
        owned = nbrs[snapshot[nbrs] >= 0]
        if len(owned):
            agg[i] = snapshot[owned[0]]
    # pass 3: anything still free forms a new aggregate with its free neighbours
    for i in np.flatnonzero(agg < 0):
        if agg[i] >= 0:
            continue
        nbrs = indices[indptr[i]:indptr[i + 1]]
        agg[i] = count
        free = nbrs[agg[nbrs] < 0]
        agg[free] = count
        count += 1
    return agg


def _spectral_radius_dinv_a(A, diag, iters: int = 20, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[0])
    lam = 1.0
    for _ in range(iters):
        y = (A @ x) / diag
        lam = np.linalg.norm(y) / np.linalg.norm(x)
        x = y / np.linalg.norm(y)
    # power iteration underestimates; pad slightly
    return 1.1 * lam


def amg_setup(matrix, strength: float = 0.08, max_coarse: int = 200,
              max_levels: int = 25, components=None) -> AmgHierarchy:
    """Build a smoothed-aggregation hierarchy for an SPD matrix.

    ``components`` labels the unknowns of a vector problem; aggregates then
    never mix labels, and coarse unknowns inherit the label of their aggregate.
    """
    A = sp.csr_matrix(matrix, dtype=float)
    A.sort_indices()
    if A.shape[0] != A.shape[1]:
        raise ValueError("AMG needs a square matrix")
    if np.any(np.diff(A.indptr) == 0):
        raise ValueError("AMG setup failed: matrix has empty rows")
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise ValueError("AMG setup failed: non-positive diagonal entry")

    hier = AmgHierarchy()
    while True:
        diag = A.diagonal()
        rho = _spectral_radius_dinv_a(A, diag)
        omega = (4.0 / 3.0) / rho
        level = AmgLevel(A=A, diag=diag, damping=omega)
        hier.levels.append(level)
        n = A.shape[0]
        if n <= max_coarse or len(hier.levels) >= max_levels:
            break
        agg = standard_aggregation(strength_graph(A, strength, components))
        n_agg = int(agg.max()) + 1
        if n_agg >= n:
            break
        sizes = np.bincount(agg, minlength=n_agg).astype(float)
        T = sp.csr_matrix((1.0 / np.sqrt(sizes[agg]), (np.arange(n), agg)), shape=(n, n_agg))
        P = (T - omega * sp.diags(1.0 / diag) @ (A @ T)).tocsr()
        P.eliminate_zeros()
        R = P.T.tocsr()
        level.P, level.R, level.aggregates = P, R, agg
        if components is not None:
            coarse = np.empty(n_agg, dtype=np.asarray(components).dtype)
            coarse[agg] = components
            components = coarse
        A = (R @ A @ P).tocsr()
        A = ((A + A.T) * 0.5).tocsr()
        A.sort_indices()
    Ac = hier.levels[-1].A.toarray()
    try:
        hier.coarse_solver = ("chol", sla.cho_factor(Ac))
    except np.linalg.LinAlgError:
        hier.coarse_solver = ("pinv", np.linalg.pinv(Ac, hermitian=True))
    return hier


def _coarse_solve(hier: AmgHierarchy, b):
    kind, data = hier.coarse_solver
    if kind == "chol":
        return sla.cho_solve(data, b)
    return data @ b


def amg_vcycle(hier: AmgHierarchy, rhs, level: int = 0) -> np.ndarray:
    """One V-cycle from a zero initial guess."""
    lvl = hier.levels[level]
    if level == len(hier.levels) - 1:
        return _coarse_solve(hier, rhs)
    x = lvl.damping * rhs / lvl.diag
    r = rhs - lvl.A @ x
    x = x + lvl.P @ amg_vcycle(hier, lvl.R @ r, level + 1)
    x += lvl.damping * (rhs - lvl.A @ x) / lvl.diag
    return x
