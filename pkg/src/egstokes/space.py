"""Enriched velocity space CG1 + DG1 and piecewise-constant pressures.

Velocity coefficient vectors use a blocked layout::

    [ x-components at vertices | y-components at vertices | c_T per cell ]

so a velocity restricted to a cell is ``sum_a u_a * hat_a + c_T * (x - x_T)``.
Pressure vectors hold one value per cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .mesh import DIRICHLET, INTERIOR, Mesh, barycentric
from .quadrature import interval_rule, triangle_rule


@dataclass(frozen=True)
class DofMap:
    n_vertices: int
    n_cells: int
    mean_zero_pressure: bool

    @classmethod
    def from_mesh(cls, mesh: Mesh) -> "DofMap":
        return cls(mesh.n_vertices, mesh.n_cells, not mesh.has_neumann)

    @property
    def n_u(self) -> int:
        return 2 * self.n_vertices + self.n_cells

    @property
    def n_p(self) -> int:
        return self.n_cells

    @property
    def n_cg(self) -> int:
        return 2 * self.n_vertices

    @property
    def enrichment_offset(self) -> int:
        return 2 * self.n_vertices

    def split(self, u: np.ndarray):
        """Views on the (x-block, y-block, enrichment) parts of ``u``."""
        nv = self.n_vertices
        return u[:nv], u[nv:2 * nv], u[2 * nv:]

    def cell_dofs(self, cells: np.ndarray, ids=None) -> np.ndarray:
        """Global velocity DOFs per cell in local order [x0 x1 x2 y0 y1 y2 c].

        ``cells`` holds vertex triples; ``ids`` the matching cell indices
        (defaults to ``arange(len(cells))``).
        """
        ids = np.arange(len(cells)) if ids is None else np.asarray(ids)
        return np.column_stack([cells, cells + self.n_vertices, self.enrichment_offset + ids])


@dataclass
class ProblemSpec:
    """Data of a Stokes problem.

    All callables are vectorized over an ``(n, 2)`` array of points.  The
    traction ``s`` also receives the outward unit normals.  ``exact_grad_u``
    returns ``(n, 2, 2)`` with ``[:, i, j] = d u_i / d x_j``.
    """

    mu: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]
    g: Optional[Callable[[np.ndarray], np.ndarray]] = None
    s: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    exact_u: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_grad_u: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_p: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"

    def mu_cells(self, mesh: Mesh) -> np.ndarray:
        mu = np.broadcast_to(np.asarray(self.mu(mesh.cell_centroids), dtype=float),
                             (mesh.n_cells,)).copy()
        if np.any(mu <= 0) or not np.all(np.isfinite(mu)):
            raise ValueError("viscosity must be positive and finite")
        return mu


def constant(value) -> Callable:
    value = np.asarray(value, dtype=float)

    def fn(x, *args):
        return np.broadcast_to(value, (len(x),) + value.shape).copy()

    return fn


def as_cell_mu(mu, mesh: Mesh) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim == 0:
        return np.full(mesh.n_cells, float(mu))
    if mu.shape != (mesh.n_cells,):
        raise ValueError("mu must be a scalar or one value per cell")
    return mu


def facet_mu(mesh: Mesh, mu_cells: np.ndarray) -> np.ndarray:
    """Viscosity on facets: harmonic mean across interior facets."""
    mp = mu_cells[mesh.facet_plus]
    out = mp.copy()
    inner = mesh.facet_minus >= 0
    mm = mu_cells[mesh.facet_minus[inner]]
    out[inner] = 2.0 * mp[inner] * mm / (mp[inner] + mm)
    return out


PENALTY_SCALES = ("2mu", "mu", "unit")


def penalty_weight(penalty: str, mu_f: np.ndarray) -> np.ndarray:
    """Facet factor in front of ``alpha / h_e`` in the jump penalty."""
    if penalty == "2mu":
        return 2.0 * mu_f
    if penalty == "mu":
        return np.asarray(mu_f, dtype=float)
    if penalty == "unit":
        return np.ones_like(mu_f, dtype=float)
    raise ValueError(f"penalty must be one of {PENALTY_SCALES}, got {penalty!r}")


def hat_gradients(mesh: Mesh) -> np.ndarray:
    """Constant gradients of the three vertex hats per cell, shape (C, 3, 2)."""
    p = mesh.vertices[mesh.cells]
    grads = np.empty((mesh.n_cells, 3, 2))
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        e = p[:, c] - p[:, b]
        # rotate the opposite edge inward and scale by 1/(2|T|)
        grads[:, a, 0] = -e[:, 1] / (2.0 * mesh.cell_areas)
        grads[:, a, 1] = e[:, 0] / (2.0 * mesh.cell_areas)
    return grads


def local_strains(mesh: Mesh):
    """Strain ``(C, 7, 2, 2)`` and divergence ``(C, 7)`` of each local basis function."""
    G = hat_gradients(mesh)
    C = mesh.n_cells
    eps = np.zeros((C, 7, 2, 2))
    div = np.zeros((C, 7))
    for a in range(3):
        gx, gy = G[:, a, 0], G[:, a, 1]
        eps[:, a, 0, 0] = gx
        eps[:, a, 0, 1] = eps[:, a, 1, 0] = 0.5 * gy
        div[:, a] = gx
        eps[:, 3 + a, 1, 1] = gy
        eps[:, 3 + a, 0, 1] = eps[:, 3 + a, 1, 0] = 0.5 * gx
        div[:, 3 + a] = gy
    eps[:, 6, 0, 0] = eps[:, 6, 1, 1] = 1.0
    div[:, 6] = 2.0
    return eps, div


def local_values(lam: np.ndarray, x: np.ndarray, centroid: np.ndarray) -> np.ndarray:
    """Values ``(..., 7, 2)`` of the local basis given barycentrics ``(..., 3)``."""
    shape = lam.shape[:-1]
    vals = np.zeros(shape + (7, 2))
    vals[..., 0:3, 0] = lam
    vals[..., 3:6, 1] = lam
    vals[..., 6, :] = x - centroid
    return vals


def cell_coefficients(u: np.ndarray, mesh: Mesh, dofmap: Optional[DofMap] = None) -> np.ndarray:
    dofmap = dofmap or DofMap.from_mesh(mesh)
    if len(u) != dofmap.n_u:
        raise ValueError(f"velocity vector has length {len(u)}, expected {dofmap.n_u}")
    return np.asarray(u)[dofmap.cell_dofs(mesh.cells)]


def eval_velocity(u: np.ndarray, mesh: Mesh, cell: int, point) -> np.ndarray:
    """Velocity at ``point`` inside ``cell``."""
    point = np.asarray(point, dtype=float)
    tri = mesh.vertices[mesh.cells[cell]]
    lam = barycentric(tri, point[None, :])[0]
    if lam.min() < -1e-12:
        raise ValueError(f"point {point} lies outside cell {cell}")
    coeffs = cell_coefficients(u, mesh)[cell]
    vals = local_values(lam, point, mesh.cell_centroids[cell])
    return coeffs @ vals


def eval_strain_and_div(u: np.ndarray, mesh: Mesh, cell=None):
    """Cellwise constant strain tensor and divergence of a discrete velocity."""
    eps, div = local_strains(mesh)
    coeffs = cell_coefficients(u, mesh)
    E = np.einsum("ck,ckij->cij", coeffs, eps)
    D = np.einsum("ck,ck->c", coeffs, div)
    if cell is None:
        return E, D
    return E[cell], D[cell]


def eval_gradient(u: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Cellwise constant gradient ``G[c, i, j] = d u_i / d x_j``."""
    coeffs = cell_coefficients(u, mesh)
    grads = hat_gradients(mesh)
    G = np.empty((mesh.n_cells, 2, 2))
    G[:, 0] = np.einsum("ca,cad->cd", coeffs[:, 0:3], grads)
    G[:, 1] = np.einsum("ca,cad->cd", coeffs[:, 3:6], grads)
    G[:, 0, 0] += coeffs[:, 6]
    G[:, 1, 1] += coeffs[:, 6]
    return G


def _facet_traces(mesh: Mesh, coeffs: np.ndarray, facets: np.ndarray, s: np.ndarray, side: str):
    """Trace of the discrete velocity on ``facets`` at edge parameters ``s``."""
    cells = mesh.facet_plus[facets] if side == "+" else mesh.facet_minus[facets]
    v = mesh.vertices[mesh.facet_vertices[facets]]
    x = v[:, None, 0, :] * (1 - s)[None, :, None] + v[:, None, 1, :] * s[None, :, None]
    tri = mesh.vertices[mesh.cells[cells]]
    lam = barycentric(tri[:, None], x)
    vals = local_values(lam, x, mesh.cell_centroids[cells][:, None, :])
    return np.einsum("fk,fqkd->fqd", coeffs[cells], vals), x


def energy_norm(u: np.ndarray, alpha: float, mu, mesh: Mesh, penalty: str = "mu") -> float:
    """Energy norm including jump penalties on interior and Dirichlet facets."""
    mu_c = as_cell_mu(mu, mesh)
    coeffs = cell_coefficients(u, mesh)
    E, _ = eval_strain_and_div(u, mesh)
    total = np.sum(2.0 * mu_c * mesh.cell_areas * np.einsum("cij,cij->c", E, E))

    s, w = interval_rule(2)
    pen = penalty_weight(penalty, facet_mu(mesh, mu_c)) * alpha  # (alpha/h_e)*|e| = alpha in 2D
    inner = np.flatnonzero(mesh.facet_markers == INTERIOR)
    dirich = np.flatnonzero(mesh.facet_markers == DIRICHLET)
    if len(inner):
        up, _ = _facet_traces(mesh, coeffs, inner, s, "+")
        um, _ = _facet_traces(mesh, coeffs, inner, s, "-")
        jump2 = np.einsum("fqd,fqd,q->f", up - um, up - um, w)
        total += np.sum(pen[inner] * jump2)
    if len(dirich):
        up, _ = _facet_traces(mesh, coeffs, dirich, s, "+")
        jump2 = np.einsum("fqd,fqd,q->f", up, up, w)
        total += np.sum(pen[dirich] * jump2)
    return float(np.sqrt(max(total, 0.0)))


class ErrorNorms(NamedTuple):
    energy: float
    pressure: float
    dg_h1: float


def errors_vs_exact(u_h: np.ndarray, p_h: np.ndarray, spec: ProblemSpec, alpha: float,
                    mesh: Mesh, mu_cells: Optional[np.ndarray] = None,
                    penalty: str = "mu") -> ErrorNorms:
    """Velocity and pressure errors against the exact fields of ``spec``.

    ``energy`` is the energy norm of the scheme, ``pressure`` the L2 error and
    ``dg_h1`` the viscosity-free broken norm
    ``sqrt(sum_T |grad e|^2 + sum_e alpha/h_e |[e]|^2)``.
    """
    if spec.exact_u is None or spec.exact_grad_u is None or spec.exact_p is None:
        raise ValueError("problem does not provide exact_u, exact_grad_u and exact_p")
    mu_c = spec.mu_cells(mesh) if mu_cells is None else mu_cells
    coeffs = cell_coefficients(u_h, mesh)
    E, _ = eval_strain_and_div(u_h, mesh)

    bary, wq = triangle_rule(4)
    tri = mesh.vertices[mesh.cells]
    xq = np.einsum("qa,cad->cqd", bary, tri)
    pts = xq.reshape(-1, 2)
    grad = spec.exact_grad_u(pts).reshape(mesh.n_cells, len(wq), 2, 2)
    eps_ex = 0.5 * (grad + np.swapaxes(grad, -1, -2))
    de = eps_ex - E[:, None]
    vol = np.einsum("cqij,cqij,q->c", de, de, wq) * mesh.cell_areas
    energy2 = np.sum(2.0 * mu_c * vol)
    G = eval_gradient(u_h, mesh)
    dg = grad - G[:, None]
    grad2 = np.sum(np.einsum("cqij,cqij,q->c", dg, dg, wq) * mesh.cell_areas)

    s, ws = interval_rule(3)
    pen = penalty_weight(penalty, facet_mu(mesh, mu_c)) * alpha
    inner = np.flatnonzero(mesh.facet_markers == INTERIOR)
    dirich = np.flatnonzero(mesh.facet_markers == DIRICHLET)
    jumps = np.zeros(mesh.n_facets)
    if len(inner):
        up, _ = _facet_traces(mesh, coeffs, inner, s, "+")
        um, _ = _facet_traces(mesh, coeffs, inner, s, "-")
        j = up - um
        jumps[inner] = np.einsum("fqd,fqd,q->f", j, j, ws)
    if len(dirich):
        up, x = _facet_traces(mesh, coeffs, dirich, s, "+")
        j = spec.exact_u(x.reshape(-1, 2)).reshape(up.shape) - up
        jumps[dirich] = np.einsum("fqd,fqd,q->f", j, j, ws)
    energy2 += np.sum(pen * jumps)
    grad2 += alpha * np.sum(jumps)

    pex = spec.exact_p(pts).reshape(mesh.n_cells, len(wq))
    dp = pex - np.asarray(p_h)[:, None]
    perr2 = np.sum(np.einsum("cq,cq,q->c", dp, dp, wq) * mesh.cell_areas)
    return ErrorNorms(float(np.sqrt(energy2)), float(np.sqrt(perr2)), float(np.sqrt(grad2)))


def interpolate_cg(fn: Callable, mesh: Mesh) -> np.ndarray:
    """CG1 nodal interpolant of a vector field; enrichment coefficients are zero."""
    vals = fn(mesh.vertices)
    return np.concatenate([vals[:, 0], vals[:, 1], np.zeros(mesh.n_cells)])
