"""Block preconditioners for the EG saddle-point system.

All six variants share one velocity-block solve: an inner FGMRES on ``A``
preconditioned by a multiplicative Jacobi / AMG / Jacobi cycle.  The "B"
variants drive the inner solve to 1e-12 (a stand-in for a direct solve), the
"M" variants to 1e-3.  The pressure block ``|T| / (2 mu_T)`` is diagonal and
inverted exactly.
"""
from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .amg import AmgHierarchy, amg_setup, amg_vcycle
from .assembly import BlockSystem
from .linsolve import KrylovConfig, SolverReport, fgmres, project_mean_zero

log = logging.getLogger(__name__)

EXACT_TOL = 1e-12
INEXACT_TOL = 1e-3


class PrecondKind(str, enum.Enum):
    BD = "BD"
    BL = "BL"
    BU = "BU"
    MD = "MD"
    ML = "ML"
    MU = "MU"

    @property
    def exact(self) -> bool:
        return self.value.startswith("B")

    @property
    def shape(self) -> str:
        return self.value[1]

    @classmethod
    def parse(cls, name) -> "PrecondKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).upper())
        except ValueError:
            raise ValueError(f"unknown preconditioner {name!r}; expected one of "
                             f"{', '.join(k.value for k in cls)}") from None


ALL_KINDS = tuple(PrecondKind)


class InnerSolveError(RuntimeError):
    def __init__(self, report: SolverReport):
        super().__init__(f"velocity block solve did not converge: {report.summary()}")
        self.report = report


@dataclass
class EGSmoother:
    """Setup data of the multiplicative EG velocity preconditioner."""

    A: sp.csr_matrix
    diag: np.ndarray
    amg: AmgHierarchy
    n_cg: int
    damping: float = 2.0 / 3.0

    @classmethod
    def build(cls, A, n_cg: int, damping: float = 2.0 / 3.0) -> "EGSmoother":
        A = sp.csr_matrix(A)
        sym = ((A + A.T) * 0.5).tocsr()
        cg_block = sym[:n_cg, :n_cg].tocsr()
        # x- and y-components are aggregated separately
        comps = np.repeat([0, 1], n_cg // 2)
        return cls(A=A, diag=A.diagonal(), amg=amg_setup(cg_block, components=comps),
                   n_cg=n_cg, damping=damping)

    def __call__(self, r_u: np.ndarray) -> np.ndarray:
        return eg_velocity_precond(self, r_u)


def eg_velocity_precond(smoother: EGSmoother, r_u: np.ndarray) -> np.ndarray:
    """Jacobi sweep, AMG V-cycle on the CG1 block, Jacobi sweep."""
    A, d, w, n = smoother.A, smoother.diag, smoother.damping, smoother.n_cg
    z = w * r_u / d
    res = r_u - A @ z
    z[:n] += amg_vcycle(smoother.amg, res[:n])
    z += w * (r_u - A @ z) / d
    return z


@dataclass
class VelocityBlockSolver:
    """Approximate inverse of the velocity block via preconditioned FGMRES."""

    matrix: sp.csr_matrix
    smoother: EGSmoother
    rel_tol: float = EXACT_TOL
    max_iters: int = 500
    reports: list = field(default_factory=list)
    strict: bool = False

    @classmethod
    def build(cls, matrix, n_cg: int, exact: bool = True, **kw) -> "VelocityBlockSolver":
        return cls(matrix=sp.csr_matrix(matrix), smoother=EGSmoother.build(matrix, n_cg),
                   rel_tol=EXACT_TOL if exact else INEXACT_TOL, **kw)

    def with_tolerance(self, rel_tol: float) -> "VelocityBlockSolver":
        return VelocityBlockSolver(self.matrix, self.smoother, rel_tol, self.max_iters,
                                   strict=self.strict)

    def solve(self, r_u: np.ndarray) -> np.ndarray:
        cfg = KrylovConfig(rel_tol=self.rel_tol, max_iters=self.max_iters, record_history=False)
        z, rep = fgmres(self.matrix, self.smoother, r_u, cfg, name="EG")
        self.reports.append(rep)
        if not rep.converged:
            log.warning("inner velocity solve: %s", rep.summary())
            if self.strict:
                raise InnerSolveError(rep)
        return z

    @property
    def iteration_counts(self) -> list:
        return [r.iterations for r in self.reports]


def apply_block_preconditioner(kind, blocks: BlockSystem, vsolve: VelocityBlockSolver,
                               r: np.ndarray) -> np.ndarray:
    """Apply one of the six block preconditioners to a residual ``(r_u, r_p)``."""
    kind = PrecondKind.parse(kind)
    n_u = blocks.n_u
    r_u, r_p = r[:n_u], r[n_u:]
    w = blocks.pressure_weights
    if kind.shape == "D":
        z_u = vsolve.solve(r_u)
        z_p = r_p / w
    elif kind.shape == "L":
        z_u = vsolve.solve(r_u)
        z_p = (r_p - blocks.B @ z_u) / w
    else:
        z_p = r_p / w
        z_u = vsolve.solve(r_u - blocks.B.T @ z_p)
    return np.concatenate([z_u, z_p])


class BlockPreconditioner:
    """Callable preconditioner for FGMRES on the full saddle-point system.

    ``velocity_block`` selects the matrix inverted in the (1,1) block:
    ``"A"`` (default) or ``"AE"`` for the energy Gram matrix.
    """

    def __init__(self, kind, blocks: BlockSystem, vsolve: VelocityBlockSolver = None,
                 velocity_block: str = "A"):
        self.kind = PrecondKind.parse(kind)
        self.blocks = blocks
        if vsolve is None:
            M = blocks.A if velocity_block == "A" else blocks.AE
            vsolve = VelocityBlockSolver.build(M, blocks.dofmap.n_cg, exact=self.kind.exact)
        else:
            vsolve = vsolve.with_tolerance(EXACT_TOL if self.kind.exact else INEXACT_TOL)
        self.vsolve = vsolve

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return apply_block_preconditioner(self.kind, self.blocks, self.vsolve, r)


def pressure_projector(blocks: BlockSystem):
    """Projection of the pressure part onto Mp-weighted mean zero, or ``None``."""
    if not blocks.dofmap.mean_zero_pressure:
        return None
    n_u, Mp = blocks.n_u, blocks.Mp

    def project(x):
        out = np.array(x, dtype=float)
        out[n_u:] = project_mean_zero(out[n_u:], Mp)
        return out

    return project


def compatible_rhs(blocks: BlockSystem) -> np.ndarray:
    """Right-hand side with the constant-pressure component of ``rhs_p`` removed.

    Without Neumann facets the columns of ``B`` sum to zero, so only ``rhs_p``
    orthogonal to the constant vector is attainable.
    """
    b = blocks.rhs
    if blocks.dofmap.mean_zero_pressure:
        b[blocks.n_u:] -= b[blocks.n_u:].mean()
    return b


def solve_stokes(blocks: BlockSystem, kind="BL", config: KrylovConfig = KrylovConfig(),
                 vsolve: VelocityBlockSolver = None, velocity_block: str = "A"):
    """Solve the saddle-point system with outer FGMRES.

    Returns ``(u, p, report)``; ``report.inner_iterations`` lists the inner
    velocity-solve counts of every preconditioner application.
    """
    t0 = time.perf_counter()
    prec = BlockPreconditioner(kind, blocks, vsolve, velocity_block)
    b = compatible_rhs(blocks)
    project = pressure_projector(blocks)
    x, report = fgmres(blocks.matvec, prec, b, config, project=project, name=prec.kind.value)
    report.inner_iterations = prec.vsolve.iteration_counts
    report.elapsed = time.perf_counter() - t0
    return x[:blocks.n_u], x[blocks.n_u:], report
