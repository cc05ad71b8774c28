"""Sparse assembly of the interior-penalty EG Stokes system.

Facet terms use a local basis of 14 functions (7 from the plus cell, 7 from
the minus cell).  CG1 traces have zero jump across interior facets, so those
jump entries are set to exactly zero rather than left to cancel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import DIRICHLET, INTERIOR, NEUMANN, Mesh, barycentric
from .quadrature import interval_rule, triangle_rule
from .space import (PENALTY_SCALES, DofMap, ProblemSpec, as_cell_mu, facet_mu,
                    local_strains, local_values, penalty_weight)


@dataclass(frozen=True)
class DiscretizationParams:
    """Symmetrization switch, penalty parameter and penalty scaling.

    The jump penalty on a facet is ``w_e * alpha / h_e``.  The default
    ``penalty="mu"`` uses ``w_e = mu_e``; ``"2mu"`` uses ``2 mu_e`` (the same
    weight as the viscous terms) and ``"unit"`` drops the viscosity.  For
    constant viscosity ``("mu", alpha)`` equals ``("2mu", alpha / 2)``.
    """

    theta: int = 0
    alpha: float = 1.0
    penalty: str = "mu"

    def __post_init__(self):
        if self.theta not in (-1, 0, 1):
            raise ValueError(f"theta must be -1, 0 or 1, got {self.theta}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.penalty not in PENALTY_SCALES:
            raise ValueError(f"penalty must be one of {PENALTY_SCALES}, got {self.penalty!r}")


@dataclass
class BlockSystem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    Mp: np.ndarray
    AE: sp.csr_matrix
    rhs_u: np.ndarray
    rhs_p: np.ndarray
    params: DiscretizationParams
    mu_cells: np.ndarray
    dofmap: DofMap
    mesh: Mesh = field(repr=False)

    @property
    def n_u(self) -> int:
        return self.dofmap.n_u

    @property
    def n_p(self) -> int:
        return self.dofmap.n_p

    @property
    def rhs(self) -> np.ndarray:
        return np.concatenate([self.rhs_u, self.rhs_p])

    @property
    def pressure_weights(self) -> np.ndarray:
        """Diagonal of the viscosity-weighted pressure mass, |T| / (2 mu_T)."""
        return self.Mp / (2.0 * self.mu_cells)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        u, p = x[:self.n_u], x[self.n_u:]
        return np.concatenate([self.A @ u + self.B.T @ p, self.B @ u])

    def saddle_matrix(self) -> sp.csr_matrix:
        return sp.bmat([[self.A, self.B.T], [self.B, None]], format="csr")


def _volume_stiffness(mesh: Mesh, dofmap: DofMap, mu_cells: np.ndarray):
    eps, _ = local_strains(mesh)
    dofs = dofmap.cell_dofs(mesh.cells)
    K = np.einsum("c,cjab,ciab->cij", 2.0 * mu_cells * mesh.cell_areas, eps, eps)
    rows = np.repeat(dofs, 7, axis=1).ravel()
    cols = np.tile(dofs, (1, 7)).ravel()
    return rows, cols, K.ravel()


def _facet_basis(mesh: Mesh, facets: np.ndarray, s: np.ndarray):
    """Jump values ``(F, 14, Q, 2)``, averaged normal strains ``(F, 14, 2)`` and DOFs."""
    dofmap = DofMap.from_mesh(mesh)
    eps, _ = local_strains(mesh)
    plus = mesh.facet_plus[facets]
    minus = mesh.facet_minus[facets]
    interior = minus >= 0
    minus_safe = np.where(interior, minus, plus)
    n = mesh.facet_normals[facets]
    v = mesh.vertices[mesh.facet_vertices[facets]]
    x = v[:, None, 0, :] * (1 - s)[None, :, None] + v[:, None, 1, :] * s[None, :, None]

    F, Q = len(facets), len(s)
    jump = np.zeros((F, 14, Q, 2))
    avg = np.zeros((F, 14, 2))
    dofs = np.zeros((F, 14), dtype=np.int64)
    for side, cells, sign in ((0, plus, 1.0), (1, minus_safe, -1.0)):
        tri = mesh.vertices[mesh.cells[cells]]
        lam = barycentric(tri[:, None], x)
        vals = local_values(lam, x, mesh.cell_centroids[cells][:, None, :])
        vals = np.swapaxes(vals, 1, 2)  # (F, 7, Q, 2)
        en = np.einsum("fkab,fb->fka", eps[cells], n)
        sl = slice(7 * side, 7 * side + 7)
        dofs[:, sl] = dofmap.cell_dofs(mesh.cells[cells], cells)
        if side == 0:
            jump[:, sl] = vals
            avg[:, sl] = np.where(interior[:, None, None], 0.5, 1.0) * en
        else:
            jump[:, sl] = sign * vals * interior[:, None, None, None]
            avg[:, sl] = 0.5 * en * interior[:, None, None]
    # continuous CG1 traces: zero jump across interior facets
    jump[interior, 0:6] = 0.0
    jump[interior, 7:13] = 0.0
    return jump, avg, dofs, x, interior


def _scatter(rows, cols, vals, shape):
    M = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    M.sum_duplicates()
    M.sort_indices()
    return M


def _penalized_facets(mesh: Mesh) -> np.ndarray:
    return np.flatnonzero((mesh.facet_markers == INTERIOR) | (mesh.facet_markers == DIRICHLET))


def assemble_a(mesh: Mesh, dofmap: DofMap, params: DiscretizationParams, mu_cells) -> sp.csr_matrix:
    """Matrix of the bilinear form a_theta (rows are test functions)."""
    if not isinstance(params, DiscretizationParams):
        params = DiscretizationParams(*params)
    mu_cells = as_cell_mu(mu_cells, mesh)
    r0, c0, v0 = _volume_stiffness(mesh, dofmap, mu_cells)
    facets = _penalized_facets(mesh)
    s, w = interval_rule(2)
    jump, avg, dofs, _, _ = _facet_basis(mesh, facets, s)
    L = mesh.facet_lengths[facets]
    mu_f = facet_mu(mesh, mu_cells)[facets]
    # (i = test, j = trial); every facet integral is |e| * sum_q w_q
    ji = np.einsum("fiqd,q->fid", jump, w)
    cons = -np.einsum("fjd,fid->fij", avg, ji)
    sym = params.theta * np.einsum("fjd,fid->fij", ji, avg)
    pen_w = penalty_weight(params.penalty, mu_f) * params.alpha
    pen = pen_w[:, None, None] * np.einsum("fjqd,fiqd,q->fij", jump, jump, w)
    K = (2.0 * mu_f * L)[:, None, None] * (cons + sym) + pen
    r1 = np.repeat(dofs, 14, axis=1).ravel()
    c1 = np.tile(dofs, (1, 14)).ravel()
    n = dofmap.n_u
    return _scatter(np.r_[r0, r1], np.r_[c0, c1], np.r_[v0, K.ravel()], (n, n))


def assemble_energy_gram(mesh: Mesh, dofmap: DofMap, alpha: float, mu_cells,
                         penalty: str = "mu") -> sp.csr_matrix:
    """Symmetric Gram matrix of the energy inner product."""
    mu_cells = as_cell_mu(mu_cells, mesh)
    r0, c0, v0 = _volume_stiffness(mesh, dofmap, mu_cells)
    facets = _penalized_facets(mesh)
    s, w = interval_rule(2)
    jump, _, dofs, _, _ = _facet_basis(mesh, facets, s)
    pen_w = penalty_weight(penalty, facet_mu(mesh, mu_cells)[facets]) * alpha
    K = pen_w[:, None, None] * np.einsum("fjqd,fiqd,q->fij", jump, jump, w)
    r1 = np.repeat(dofs, 14, axis=1).ravel()
    c1 = np.tile(dofs, (1, 14)).ravel()
    n = dofmap.n_u
    AE = _scatter(np.r_[r0, r1], np.r_[c0, c1], np.r_[v0, K.ravel()], (n, n))
    # exact symmetry regardless of summation order
    return ((AE + AE.T) * 0.5).tocsr()


def assemble_b(mesh: Mesh, dofmap: DofMap) -> sp.csr_matrix:
    """Matrix of b(v, w): rows are cells (pressure), columns velocity DOFs."""
    _, div = local_strains(mesh)
    dofs = dofmap.cell_dofs(mesh.cells)
    r0 = np.repeat(np.arange(mesh.n_cells), 7)
    v0 = (-mesh.cell_areas[:, None] * div).ravel()

    facets = _penalized_facets(mesh)
    s, w = interval_rule(2)
    jump, _, fdofs, _, interior = _facet_basis(mesh, facets, s)
    L = mesh.facet_lengths[facets]
    n = mesh.facet_normals[facets]
    flux = L[:, None] * np.einsum("fjqd,fd,q->fj", jump, n, w)
    half = np.where(interior, 0.5, 1.0)
    rp = np.repeat(mesh.facet_plus[facets], 14)
    vp = (half[:, None] * flux).ravel()
    inner = interior
    rm = np.repeat(mesh.facet_minus[facets][inner], 14)
    vm = (0.5 * flux[inner]).ravel()
    rows = np.r_[r0, rp, rm]
    cols = np.r_[dofs.ravel(), fdofs.ravel(), fdofs[inner].ravel()]
    vals = np.r_[v0, vp, vm]
    B = _scatter(rows, cols, vals, (dofmap.n_p, dofmap.n_u))
    B.eliminate_zeros()
    return B


def assemble_pressure_mass(mesh: Mesh) -> np.ndarray:
    """Diagonal of the piecewise-constant pressure mass matrix."""
    return mesh.cell_areas.copy()


def assemble_rhs(mesh: Mesh, dofmap: DofMap, params: DiscretizationParams, spec: ProblemSpec,
                 mu_cells=None):
    """Load vector of F_theta and the Dirichlet flux term of the continuity equation."""
    mu_cells = spec.mu_cells(mesh) if mu_cells is None else as_cell_mu(mu_cells, mesh)
    rhs_u = np.zeros(dofmap.n_u)
    rhs_p = np.zeros(dofmap.n_p)

    bary, wq = triangle_rule(4)
    tri = mesh.vertices[mesh.cells]
    xq = np.einsum("qa,cad->cqd", bary, tri)
    fq = np.asarray(spec.f(xq.reshape(-1, 2)), dtype=float).reshape(xq.shape)
    lam = np.broadcast_to(bary, (mesh.n_cells,) + bary.shape)
    vals = local_values(lam, xq, mesh.cell_centroids[:, None, :])
    loc = np.einsum("cqkd,cqd,q->ck", vals, fq, wq) * mesh.cell_areas[:, None]
    np.add.at(rhs_u, dofmap.cell_dofs(mesh.cells).ravel(), loc.ravel())

    s, ws = interval_rule(3)
    neu = np.flatnonzero(mesh.facet_markers == NEUMANN)
    if len(neu):
        if spec.s is None:
            raise ValueError("Neumann facets present but no traction s given")
        jump, _, dofs, x, _ = _facet_basis(mesh, neu, s)
        nrm = np.repeat(mesh.facet_normals[neu], len(s), axis=0)
        sq = np.asarray(spec.s(x.reshape(-1, 2), nrm), dtype=float).reshape(x.shape)
        loc = np.einsum("fkqd,fqd,q->fk", jump[:, :7], sq, ws) * mesh.facet_lengths[neu][:, None]
        np.add.at(rhs_u, dofs[:, :7].ravel(), loc.ravel())

    dirich = np.flatnonzero(mesh.facet_markers == DIRICHLET)
    if len(dirich):
        if spec.g is None:
            raise ValueError("Dirichlet facets present but no boundary data g given")
        jump, avg, dofs, x, _ = _facet_basis(mesh, dirich, s)
        gq = np.asarray(spec.g(x.reshape(-1, 2)), dtype=float).reshape(x.shape)
        L = mesh.facet_lengths[dirich]
        mu_b = mu_cells[mesh.facet_plus[dirich]]
        gbar = np.einsum("fqd,q->fd", gq, ws)
        sym = params.theta * np.einsum("fd,fkd->fk", gbar, avg[:, :7])
        pen = np.einsum("fqd,fkqd,q->fk", gq, jump[:, :7], ws)
        pen_w = penalty_weight(params.penalty, mu_b) * params.alpha
        loc = (2.0 * mu_b * L)[:, None] * sym + pen_w[:, None] * pen
        np.add.at(rhs_u, dofs[:, :7].ravel(), loc.ravel())
        flux = L * np.einsum("fd,fd->f", gbar, mesh.facet_normals[dirich])
        np.add.at(rhs_p, mesh.facet_plus[dirich], flux)
    return rhs_u, rhs_p


def assemble_system(mesh: Mesh, spec: ProblemSpec, params: DiscretizationParams) -> BlockSystem:
    dofmap = DofMap.from_mesh(mesh)
    mu_cells = spec.mu_cells(mesh)
    rhs_u, rhs_p = assemble_rhs(mesh, dofmap, params, spec, mu_cells)
    return BlockSystem(
        A=assemble_a(mesh, dofmap, params, mu_cells),
        B=assemble_b(mesh, dofmap),
        Mp=assemble_pressure_mass(mesh),
        AE=assemble_energy_gram(mesh, dofmap, params.alpha, mu_cells, params.penalty),
        rhs_u=rhs_u,
        rhs_p=rhs_p,
        params=params,
        mu_cells=mu_cells,
        dofmap=dofmap,
        mesh=mesh,
    )
