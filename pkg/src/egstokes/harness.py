"""Experiment drivers: convergence studies, solver tables, channel runs, inf-sup.

Every driver takes an :class:`ExperimentConfig`, returns plain row objects
and, when ``config.out_dir`` is set, writes a CSV next to which the report
module places its figures.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import BlockSystem, DiscretizationParams, assemble_system
from .linsolve import KrylovConfig, SolverReport
from .mesh import BoundarySpec, Mesh, barycentric, generate_unit_square, import_mesh
from .precond import ALL_KINDS, PrecondKind, VelocityBlockSolver, solve_stokes
from .problems import EXAMPLES, boundary_for, builtin_problem
from .quadrature import interval_rule
from .space import (ProblemSpec, as_cell_mu, cell_coefficients, eval_velocity, errors_vs_exact,
                    local_values)

log = logging.getLogger(__name__)

FIXTURE_MESH = "obstacle.msh"


def fixture_mesh_path() -> Path:
    """Path of the packaged channel-with-obstacle mesh."""
    return Path(str(resources.files("egstokes") / "data" / FIXTURE_MESH))


class SolverFailure(RuntimeError):
    """A solve did not converge; ``rows`` holds what was completed before it."""

    def __init__(self, message: str, rows=None, report: Optional[SolverReport] = None):
        super().__init__(message)
        self.rows = rows or []
        self.report = report


@dataclass(frozen=True)
class ExperimentConfig:
    example: str = "ex1"
    levels: tuple = (2, 3, 4, 5, 6)
    mesh_path: Optional[str] = None
    theta: int = 0
    alpha: float = 1.0
    penalty: str = "mu"
    mu: tuple = (1.0,)
    mu_split: Optional[tuple] = None
    preconditioners: tuple = ALL_KINDS
    krylov: KrylovConfig = KrylovConfig()
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.example not in EXAMPLES + ("custom",):
            raise ValueError(f"unknown example {self.example!r}")
        if self.example in ("ex1", "ex2") and not self.levels:
            raise ValueError(f"{self.example} needs at least one mesh level")
        if any(int(L) < 0 for L in self.levels):
            raise ValueError("mesh levels must be non-negative")
        if any(not m > 0 for m in self.mu):
            raise ValueError("viscosity values must be positive")
        object.__setattr__(self, "preconditioners",
                           tuple(PrecondKind.parse(k) for k in self.preconditioners))

    @property
    def params(self) -> DiscretizationParams:
        return DiscretizationParams(self.theta, self.alpha, self.penalty)

    def channel_mesh(self) -> Mesh:
        path = self.mesh_path or fixture_mesh_path()
        return import_mesh(path, BoundarySpec.all_dirichlet())

    def output(self, name: str) -> Optional[Path]:
        if self.out_dir is None:
            return None
        out = Path(self.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return out / name


def parse_levels(text: str) -> tuple:
    """``"2..6"`` -> (2, 3, 4, 5, 6); ``"3,5"`` -> (3, 5)."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty level range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(t) for t in text.split(",") if t.strip())


def rate(e_coarse: float, e_fine: float) -> float:
    if e_coarse <= 0 or e_fine <= 0:
        return float("nan")
    return math.log2(e_coarse / e_fine)


def _sci(x: float) -> str:
    return f"{x:.5e}"


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceRow:
    level: int
    h: float
    velocity_dofs: int
    energy_error: float
    energy_rate: float
    pressure_dofs: int
    pressure_error: float
    pressure_rate: float
    dg_h1_error: float
    dg_h1_rate: float
    iterations: int

    CSV_HEADER = ("h", "level", "velocity_dofs", "energy_error", "energy_rate",
                  "pressure_dofs", "pressure_error", "pressure_rate",
                  "dg_h1_error", "dg_h1_rate", "iterations")

    def csv_fields(self) -> list:
        return [f"{self.h:.10g}", self.level, self.velocity_dofs, _sci(self.energy_error),
                f"{self.energy_rate:.4f}", self.pressure_dofs, _sci(self.pressure_error),
                f"{self.pressure_rate:.4f}", _sci(self.dg_h1_error), f"{self.dg_h1_rate:.4f}",
                self.iterations]


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_csv(path) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_convergence(config: ExperimentConfig, rows: List[ConvergenceRow]) -> Optional[Path]:
    path = config.output(f"convergence_{config.example}.csv")
    if path is not None:
        write_csv(path, ConvergenceRow.CSV_HEADER, [r.csv_fields() for r in rows])
    return path


def solve_problem(mesh: Mesh, spec: ProblemSpec, params: DiscretizationParams, kind="BL",
                  krylov: KrylovConfig = KrylovConfig()):
    """Assemble and solve one problem; returns ``(blocks, u, p, report)``."""
    blocks = assemble_system(mesh, spec, params)
    u, p, report = solve_stokes(blocks, kind, krylov)
    return blocks, u, p, report


def run_convergence(config: ExperimentConfig, kind="BL",
                    krylov: KrylovConfig = KrylovConfig(rel_tol=1e-10, max_iters=2000),
                    spec: Optional[ProblemSpec] = None,
                    bc: Optional[BoundarySpec] = None) -> List[ConvergenceRow]:
    """Manufactured-solution study on the uniform unit-square meshes.

    ``spec``/``bc`` override the built-in problem for ``example="custom"``.
    A solve that fails to converge writes the rows finished so far and raises
    :class:`SolverFailure`.
    """
    if spec is None:
        spec = builtin_problem(config.example, mu=config.mu[0], mu_split=config.mu_split)
    bc = bc or boundary_for(config.example)
    params = config.params
    rows: List[ConvergenceRow] = []
    for L in config.levels:
        mesh = generate_unit_square(L, bc)
        _, u, p, report = solve_problem(mesh, spec, params, kind, krylov)
        if not report.converged:
            _write_convergence(config, rows)
            raise SolverFailure(f"level {L}: {report.summary()}", rows, report)
        err = errors_vs_exact(u, p, spec, params.alpha, mesh, penalty=params.penalty)
        prev = rows[-1] if rows else None
        rows.append(ConvergenceRow(
            level=L, h=2.0 ** -L, velocity_dofs=len(u),
            energy_error=err.energy,
            energy_rate=rate(prev.energy_error, err.energy) if prev else 0.0,
            pressure_dofs=len(p), pressure_error=err.pressure,
            pressure_rate=rate(prev.pressure_error, err.pressure) if prev else 0.0,
            dg_h1_error=err.dg_h1,
            dg_h1_rate=rate(prev.dg_h1_error, err.dg_h1) if prev else 0.0,
            iterations=report.iterations))
        log.info("level %d: energy %.4e pressure %.4e (%d its)", L, err.energy,
                 err.pressure, report.iterations)
    _write_convergence(config, rows)
    return rows


# ---------------------------------------------------------------------------
# preconditioner tables
# ---------------------------------------------------------------------------

@dataclass
class SolverRow:
    case: str
    value: float
    preconditioner: str
    iterations: int
    converged: bool
    status: str
    seconds: float
    inner_mean: float

    CSV_HEADER = ("case", "value", "preconditioner", "iterations", "converged", "status",
                  "seconds", "inner_mean")

    def csv_fields(self) -> list:
        return [self.case, f"{self.value:.10g}", self.preconditioner, self.iterations,
                int(self.converged), self.status, f"{self.seconds:.3f}",
                f"{self.inner_mean:.2f}"]


def _study_cases(config: ExperimentConfig):
    """Yield ``(case, value, mesh, spec)`` for the rows of a solver table."""
    if config.example in ("ex1", "ex2"):
        for L in config.levels:
            mesh = generate_unit_square(L, boundary_for(config.example))
            yield "h", 2.0 ** -L, mesh, builtin_problem(config.example, mu=config.mu[0])
    elif config.example == "ex3":
        mesh = config.channel_mesh()
        for mu in config.mu:
            yield "mu", mu, mesh, builtin_problem("ex3", mu=mu)
    elif config.example == "ex4":
        split = config.mu_split or (1.0, 0.01, 0.5)
        yield "mu_split", split[1] / split[0], config.channel_mesh(), \
            builtin_problem("ex4", mu_split=split)
    else:
        raise ValueError("solver studies need a built-in example")


def run_solver_study(config: ExperimentConfig) -> List[SolverRow]:
    """Outer FGMRES counts for every (case, preconditioner) pair.

    A failing cell is recorded with its status and the study continues.
    """
    rows: List[SolverRow] = []
    kinds = config.preconditioners
    for case, value, mesh, spec in _study_cases(config):
        blocks = assemble_system(mesh, spec, config.params)
        shared = VelocityBlockSolver.build(blocks.A, blocks.dofmap.n_cg)
        for kind in kinds:
            t0 = time.perf_counter()
            try:
                _, _, rep = solve_stokes(blocks, kind, config.krylov, vsolve=shared)
                inner = float(np.mean(rep.inner_iterations)) if rep.inner_iterations else 0.0
                row = SolverRow(case, value, kind.value, rep.iterations, rep.converged,
                                rep.status, time.perf_counter() - t0, inner)
            except (FloatingPointError, np.linalg.LinAlgError, RuntimeError) as exc:
                log.warning("%s=%g %s failed: %s", case, value, kind.value, exc)
                row = SolverRow(case, value, kind.value, -1, False,
                                f"error: {type(exc).__name__}", time.perf_counter() - t0, 0.0)
            log.info("%s=%g %s: %d its (%s)", case, value, row.preconditioner,
                     row.iterations, row.status)
            rows.append(row)
    path = config.output(f"solvers_{config.example}.csv")
    if path is not None:
        write_csv(path, SolverRow.CSV_HEADER, [r.csv_fields() for r in rows])
    return rows


def iteration_table(rows: Sequence[SolverRow]) -> dict:
    """``{value: {preconditioner: iterations}}`` view of a solver study."""
    table: dict = {}
    for r in rows:
        table.setdefault(r.value, {})[r.preconditioner] = r.iterations
    return table


# ---------------------------------------------------------------------------
# channel flow
# ---------------------------------------------------------------------------

PROBES = np.array([[0.25, 0.5], [0.3, 0.3], [0.3, 0.7], [0.2, 0.8], [0.15, 0.2],
                   [0.35, 0.55], [0.4, 0.35], [0.1, 0.5]])


@dataclass
class ChannelResult:
    mesh: Mesh
    blocks: BlockSystem
    u: np.ndarray
    p: np.ndarray
    report: SolverReport
    inflow: float
    cut_fluxes: dict
    divergence_residual: float
    probe_speeds: np.ndarray = field(default=None)
    vtk_path: Optional[Path] = None

    @property
    def flux_imbalance(self) -> float:
        """Largest relative deviation of a cross-section flux from the inflow."""
        if not self.cut_fluxes:
            return 0.0
        return max(abs(q - self.inflow) for q in self.cut_fluxes.values()) / abs(self.inflow)

    @property
    def symmetry_defect(self) -> float:
        """Largest relative |u| mismatch between probes mirrored about x=0.5."""
        s = self.probe_speeds
        return float(np.max(np.abs(s[:, 0] - s[:, 1]) / np.maximum(s[:, 0], s[:, 1])))


def boundary_flux(spec: ProblemSpec, mesh: Mesh, x_value: float) -> float:
    """Exact-quadrature flux of the Dirichlet data through ``x = x_value`` (along +x)."""
    s, w = interval_rule(3)
    mids = mesh.facet_midpoints
    sel = np.flatnonzero((mesh.facet_minus < 0) & (np.abs(mids[:, 0] - x_value) <= 1e-12))
    v = mesh.vertices[mesh.facet_vertices[sel]]
    x = v[:, None, 0] * (1 - s)[None, :, None] + v[:, None, 1] * s[None, :, None]
    g = spec.g(x.reshape(-1, 2)).reshape(x.shape)
    return float(np.sum(mesh.facet_lengths[sel] * np.einsum("fq,q->f", g[..., 0], w)))


def cut_flux(u: np.ndarray, mesh: Mesh, x_cut: float) -> float:
    """Numerical flux of ``{u_h}`` across the facets separating centroids left/right of ``x_cut``.

    This is the flux the continuity equation balances cell by cell, so for a
    converged solve it equals the inflow up to the algebraic residual.
    """
    left = mesh.cell_centroids[:, 0] < x_cut
    inner = np.flatnonzero(mesh.facet_minus >= 0)
    plus, minus = mesh.facet_plus[inner], mesh.facet_minus[inner]
    cross = inner[left[plus] != left[minus]]
    if len(cross) == 0:
        return 0.0
    coeffs = cell_coefficients(u, mesh)
    s, w = interval_rule(2)
    v = mesh.vertices[mesh.facet_vertices[cross]]
    x = v[:, None, 0] * (1 - s)[None, :, None] + v[:, None, 1] * s[None, :, None]
    avg = 0.0
    for cells in (mesh.facet_plus[cross], mesh.facet_minus[cross]):
        lam = barycentric(mesh.vertices[mesh.cells[cells]][:, None], x)
        vals = local_values(lam, x, mesh.cell_centroids[cells][:, None, :])
        avg = avg + 0.5 * np.einsum("fk,fqkd->fqd", coeffs[cells], vals)
    n = mesh.facet_normals[cross].copy()
    # orient from the left part to the right part
    flip = ~left[mesh.facet_plus[cross]]
    n[flip] *= -1.0
    flux = np.einsum("fqd,fd,q->f", avg, n, w) * mesh.facet_lengths[cross]
    return float(flux.sum())


def probe_speeds(u: np.ndarray, mesh: Mesh, probes: np.ndarray = PROBES) -> np.ndarray:
    """|u_h| at each probe and at its mirror image about x=0.5, shape (P, 2)."""
    out = np.zeros((len(probes), 2))
    for j, pts in enumerate((probes, np.column_stack([1.0 - probes[:, 0], probes[:, 1]]))):
        cells = mesh.locate(pts)
        for i, (c, x) in enumerate(zip(cells, pts)):
            out[i, j] = np.linalg.norm(eval_velocity(u, mesh, int(c), x)) if c >= 0 else np.nan
    return out


def run_channel(config: ExperimentConfig, kind="BL",
                krylov: Optional[KrylovConfig] = None, vtk: bool = True) -> List[ChannelResult]:
    """Flow around the obstacle for each viscosity in ``config.mu``.

    With ``config.mu_split`` set the discontinuous two-layer viscosity is used
    instead and a single result is returned.
    """
    krylov = krylov or config.krylov
    mesh = config.channel_mesh()
    if config.mu_split is not None:
        cases = [("split", builtin_problem("ex4", mu_split=config.mu_split))]
    else:
        cases = [(f"mu{m:g}", builtin_problem("ex3", mu=m)) for m in config.mu]
    results = []
    for tag, spec in cases:
        blocks = assemble_system(mesh, spec, config.params)
        u, p, report = solve_stokes(blocks, kind, krylov)
        if not report.converged:
            log.warning("channel %s: %s", tag, report.summary())
        g_p = blocks.rhs_p - blocks.rhs_p.mean()
        res = np.linalg.norm(blocks.B @ u - g_p) / max(np.linalg.norm(g_p), 1e-300)
        inflow = boundary_flux(spec, mesh, 0.0)
        cuts = {xc: cut_flux(u, mesh, xc) for xc in (0.2, 0.35, 0.5, 0.65, 0.8)}
        result = ChannelResult(mesh=mesh, blocks=blocks, u=u, p=p, report=report,
                               inflow=inflow, cut_fluxes=cuts, divergence_residual=float(res),
                               probe_speeds=probe_speeds(u, mesh))
        path = config.output(f"channel_{tag}.vtk")
        if vtk and path is not None:
            write_vtk(mesh, u, p, path)
            result.vtk_path = path
        results.append(result)
        log.info("channel %s: %s", tag, report.summary())
    path = config.output("channel_" + "_".join(tag for tag, _ in cases) + ".csv")
    if path is not None:
        header = ("case", "iterations", "converged", "rel_residual", "divergence_residual",
                  "inflow", "flux_imbalance", "symmetry_defect")
        write_csv(path, header, [[tag, r.report.iterations, int(r.report.converged),
                                  _sci(r.report.rel_residual), _sci(r.divergence_residual),
                                  _sci(r.inflow), _sci(r.flux_imbalance),
                                  _sci(r.symmetry_defect)]
                                 for (tag, _), r in zip(cases, results)])
    return results


# ---------------------------------------------------------------------------
# inf-sup
# ---------------------------------------------------------------------------

class InfSupResult(NamedTuple):
    beta: float
    iterations: int
    residual: float
    converged: bool


class InfSupStagnation(RuntimeError):
    def __init__(self, result: InfSupResult):
        super().__init__(f"inverse iteration stalled after {result.iterations} steps, "
                         f"eigen-residual {result.residual:.3e}")
        self.result = result


def infsup_operators(mesh: Mesh, alpha: float, mu, penalty: str = "mu"):
    """``(S_apply, W, constrained)`` for ``S = B A_E^{-1} B^T`` and ``W = M_p / (2 mu)``."""
    from .assembly import assemble_b, assemble_energy_gram, assemble_pressure_mass
    from .space import DofMap

    dofmap = DofMap.from_mesh(mesh)
    mu_c = as_cell_mu(mu, mesh)
    AE = assemble_energy_gram(mesh, dofmap, alpha, mu_c, penalty)
    B = assemble_b(mesh, dofmap)
    lu = spla.splu(sp.csc_matrix(AE))
    BT = B.T.tocsr()

    def S_apply(q):
        return B @ lu.solve(BT @ q)

    W = assemble_pressure_mass(mesh) / (2.0 * mu_c)
    return S_apply, W, dofmap.mean_zero_pressure


def estimate_infsup(mesh: Mesh, alpha: float = 10.0, mu=1.0, penalty: str = "mu",
                    tol: float = 1e-10, max_iters: int = 500, block: int = 8, seed: int = 0,
                    strict: bool = True) -> InfSupResult:
    """Discrete inf-sup constant by block inverse iteration.

    Computes ``beta_h = sqrt(lambda_min)`` of ``S q = lambda W q``.  Each step
    solves ``S Y = W Q`` column by column with conjugate gradients
    preconditioned by ``W^{-1}``, then performs a Rayleigh-Ritz step in the
    W inner product.  The block speeds up convergence when the lower end of
    the spectrum is clustered.  Iterates stay W-orthogonal to constants when
    the pressure is only defined up to a constant.
    """
    S_apply, W, constrained = infsup_operators(mesh, alpha, mu, penalty)
    n = len(W)

    def project(q):
        if constrained:
            q = q - np.outer(np.ones(n), W @ q) / W.sum() if q.ndim == 2 else q - (W @ q) / W.sum()
        return q

    S_op = spla.LinearOperator((n, n), matvec=lambda q: project(S_apply(project(q))))
    M_op = spla.LinearOperator((n, n), matvec=lambda r: project(r / W))
    k = max(1, min(block, n - 1 if constrained else n))
    Q = project(np.random.default_rng(seed).standard_normal((n, k)))
    lam_old = np.inf
    lam, resid = np.inf, np.inf
    for it in range(1, max_iters + 1):
        Y = np.empty_like(Q)
        for j in range(k):
            y, info = spla.cg(S_op, project(W * Q[:, j]), M=M_op, rtol=1e-12, atol=0.0,
                              maxiter=10 * n)
            if info < 0:
                raise RuntimeError("CG breakdown in inf-sup inverse iteration")
            Y[:, j] = y
        Y = project(Y)
        SY = np.column_stack([S_op.matvec(Y[:, j]) for j in range(k)])
        Hs = Y.T @ SY
        Hw = Y.T @ (W[:, None] * Y)
        theta, C = sla.eigh(0.5 * (Hs + Hs.T), 0.5 * (Hw + Hw.T))
        Q = Y @ C
        SQ = SY @ C
        lam = float(theta[0])
        r = SQ[:, 0] - lam * W * Q[:, 0]
        resid = float(np.linalg.norm(r / np.sqrt(W)) / max(lam, 1e-300))
        if resid <= math.sqrt(tol) and abs(lam - lam_old) <= tol * lam:
            return InfSupResult(math.sqrt(max(lam, 0.0)), it, resid, True)
        lam_old = lam
    result = InfSupResult(math.sqrt(max(lam, 0.0)), max_iters, resid, False)
    if strict:
        raise InfSupStagnation(result)
    return result


def infsup_dense(mesh: Mesh, alpha: float = 10.0, mu=1.0, penalty: str = "mu") -> float:
    """Dense generalized eigensolve of the same problem (small meshes only)."""
    S_apply, W, constrained = infsup_operators(mesh, alpha, mu, penalty)
    n = len(W)
    S = np.column_stack([S_apply(e) for e in np.eye(n)])
    S = 0.5 * (S + S.T)
    Wm = np.diag(W)
    if constrained:
        # W-orthonormal basis of the complement of constants
        Q, _ = np.linalg.qr(np.column_stack([np.ones(n), np.eye(n)[:, :-1]]) * np.sqrt(W)[:, None])
        Z = Q[:, 1:] / np.sqrt(W)[:, None]
        S, Wm = Z.T @ S @ Z, Z.T @ Wm @ Z
    lam = sla.eigh(S, Wm, eigvals_only=True)
    return float(math.sqrt(max(lam[0], 0.0)))


@dataclass
class InfSupRow:
    level: int
    h: float
    beta: float
    iterations: int
    residual: float

    CSV_HEADER = ("h", "level", "beta", "iterations", "residual")

    def csv_fields(self) -> list:
        return [f"{self.h:.10g}", self.level, f"{self.beta:.10g}", self.iterations,
                _sci(self.residual)]


def run_infsup(config: ExperimentConfig, bc: Optional[BoundarySpec] = None) -> List[InfSupRow]:
    rows = []
    for L in config.levels:
        mesh = generate_unit_square(L, bc or BoundarySpec.all_dirichlet())
        res = estimate_infsup(mesh, config.alpha, config.mu[0], config.penalty)
        rows.append(InfSupRow(L, 2.0 ** -L, res.beta, res.iterations, res.residual))
        log.info("level %d: beta_h = %.6f (%d steps)", L, res.beta, res.iterations)
    path = config.output("infsup.csv")
    if path is not None:
        write_csv(path, InfSupRow.CSV_HEADER, [r.csv_fields() for r in rows])
    return rows


# ---------------------------------------------------------------------------
# VTK
# ---------------------------------------------------------------------------

def write_vtk(mesh: Mesh, u: np.ndarray, p: np.ndarray, path, title: str = "EG Stokes") -> None:
    """Legacy ASCII VTK 3.0 file with CG1 vertex velocity, centroid velocity and pressure."""
    nv, nc = mesh.n_vertices, mesh.n_cells
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    if len(u) != 2 * nv + nc or len(p) != nc:
        raise ValueError("solution vectors do not match the mesh")
    ucg = np.column_stack([u[:nv], u[nv:2 * nv]])
    # the enrichment vanishes at the centroid, so the CG part alone gives the centroid value
    ucell = np.einsum("cad->cd", ucg[mesh.cells]) / 3.0

    def fmt(x):
        return f"{x:.17g}"

    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title.replace("\n", " ")[:255] + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {nv} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{fmt(x)} {fmt(y)} 0\n")
        fh.write(f"CELLS {nc} {4 * nc}\n")
        for a, b, c in mesh.cells:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {nc}\n")
        fh.write("5\n" * nc)
        fh.write(f"POINT_DATA {nv}\nVECTORS velocity_cg double\n")
        for a, b in ucg:
            fh.write(f"{fmt(a)} {fmt(b)} 0\n")
        fh.write(f"CELL_DATA {nc}\nVECTORS velocity double\n")
        for a, b in ucell:
            fh.write(f"{fmt(a)} {fmt(b)} 0\n")
        fh.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        for v in p:
            fh.write(fmt(v) + "\n")


def read_vtk(path) -> dict:
    """Parse files written by :func:`write_vtk` (and similar legacy ASCII grids)."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    if not tokens[0].startswith("# vtk DataFile Version"):
        raise ValueError("not a legacy VTK file")
    words = " ".join(tokens[3:]).split()
    out = {"version": tokens[0].split()[-1], "title": tokens[1],
           "point_data": {}, "cell_data": {}}
    i = 0
    section = None
    while i < len(words):
        key = words[i]
        if key == "DATASET":
            out["dataset"] = words[i + 1]
            i += 2
        elif key == "POINTS":
            n = int(words[i + 1])
            out["points"] = np.array(words[i + 3:i + 3 + 3 * n], dtype=float).reshape(n, 3)
            i += 3 + 3 * n
        elif key == "CELLS":
            n, size = int(words[i + 1]), int(words[i + 2])
            raw = np.array(words[i + 3:i + 3 + size], dtype=np.int64).reshape(n, -1)
            out["cells"] = raw[:, 1:]
            i += 3 + size
        elif key == "CELL_TYPES":
            n = int(words[i + 1])
            out["cell_types"] = np.array(words[i + 2:i + 2 + n], dtype=int)
            i += 2 + n
        elif key in ("POINT_DATA", "CELL_DATA"):
            section = "point_data" if key == "POINT_DATA" else "cell_data"
            count = int(words[i + 1])
            i += 2
        elif key == "VECTORS":
            name = words[i + 1]
            out[section][name] = np.array(words[i + 3:i + 3 + 3 * count],
                                          dtype=float).reshape(count, 3)
            i += 3 + 3 * count
        elif key == "SCALARS":
            name = words[i + 1]
            i += 3
            if words[i].isdigit():
                i += 1
            if words[i] == "LOOKUP_TABLE":
                i += 2
            out[section][name] = np.array(words[i:i + count], dtype=float)
            i += count
        else:
            raise ValueError(f"unexpected VTK token {key!r}")
    return out
