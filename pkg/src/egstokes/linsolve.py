"""Krylov and relaxation kernels.

Sparse storage is ``scipy.sparse.csr_matrix`` throughout; operators passed to
:func:`fgmres` may be sparse matrices, ``LinearOperator`` objects or plain
callables.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class KrylovConfig:
    rel_tol: float = 1e-6
    max_iters: int = 1000
    restart: Optional[int] = None
    record_history: bool = True

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.restart is not None and self.restart < 1:
            raise ValueError("restart must be >= 1")


@dataclass
class SolverReport:
    iterations: int = 0
    converged: bool = False
    status: str = "running"
    rel_residual: float = np.inf
    residual_history: list = field(default_factory=list)
    elapsed: float = 0.0
    preconditioner: str = "none"
    inner_iterations: list = field(default_factory=list)

    def summary(self) -> str:
        return (f"{self.preconditioner}: {self.status} after {self.iterations} its, "
                f"rel. residual {self.rel_residual:.3e}, {self.elapsed:.2f}s")


def as_callable(op) -> Callable[[np.ndarray], np.ndarray]:
    if op is None:
        return lambda v: v
    if callable(op) and not hasattr(op, "matvec") and not sp.issparse(op):
        return op
    if hasattr(op, "matvec") and not sp.issparse(op):
        return op.matvec
    return lambda v: op @ v


def fgmres(operator, preconditioner, rhs, config: KrylovConfig = KrylovConfig(), x0=None,
           project: Optional[Callable] = None, name: str = "none"):
    """Right-preconditioned flexible GMRES.

    ``preconditioner`` may change between iterations.  ``project`` (optional)
    is applied to every preconditioned direction and to the returned solution,
    which removes components along a known null space.

    Returns ``(x, SolverReport)``.  Breakdown of the Hessenberg least-squares
    problem stops the iteration with ``status='breakdown'``; a NaN residual
    raises ``FloatingPointError``.
    """
    t0 = time.perf_counter()
    A = as_callable(operator)
    M = as_callable(preconditioner)
    b = np.asarray(rhs, dtype=float)
    n = len(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    report = SolverReport(preconditioner=name)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        report.converged, report.status, report.rel_residual = True, "converged", 0.0
        report.residual_history = [0.0]
        return x, report

    r = b - A(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    report.residual_history.append(beta / bnorm)
    m = config.restart or config.max_iters
    total = 0
    while True:
        if not np.isfinite(beta):
            raise FloatingPointError("NaN or inf in FGMRES residual")
        if beta / bnorm <= config.rel_tol:
            report.converged, report.status = True, "converged"
            break
        if total >= config.max_iters:
            report.status = "max_iters"
            break
        steps = min(m, config.max_iters - total)
        cap = min(steps, 32)
        V = np.empty((cap + 1, n))
        Z = np.empty((cap, n))
        R = np.zeros((cap, cap))
        cs = np.zeros(cap)
        sn = np.zeros(cap)
        g = np.zeros(cap + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        breakdown = False
        while k < steps:
            if k == cap:
                cap = min(2 * cap, steps)
                V, Z, R, cs, sn, g = _grow(V, Z, R, cs, sn, g, cap)
            z = M(V[k])
            if project is not None:
                z = project(z)
            Z[k] = z
            w = A(z)
            # classical Gram-Schmidt with one reorthogonalization pass
            h = V[:k + 1] @ w
            w = w - h @ V[:k + 1]
            h2 = V[:k + 1] @ w
            w = w - h2 @ V[:k + 1]
            col = h + h2
            hk1 = np.linalg.norm(w)
            if not (np.all(np.isfinite(col)) and np.isfinite(hk1)):
                raise FloatingPointError("NaN or inf in FGMRES Hessenberg matrix")
            for i in range(k):
                col[i], col[i + 1] = cs[i] * col[i] + sn[i] * col[i + 1], -sn[i] * col[i] + cs[i] * col[i + 1]
            denom = np.hypot(col[k], hk1)
            if denom <= 1e-300 * max(1.0, np.abs(col).max()):
                breakdown = True
                break
            cs[k], sn[k] = col[k] / denom, hk1 / denom
            col[k] = denom
            R[:k + 1, k] = col
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            k += 1
            total += 1
            res = abs(g[k])
            if config.record_history:
                report.residual_history.append(res / bnorm)
            if res / bnorm <= config.rel_tol or hk1 <= 1e-14 * denom:
                break
            V[k] = w / hk1
        if k > 0:
            y = np.linalg.solve(np.triu(R[:k, :k]), g[:k])
            x = x + y @ Z[:k]
        r = b - A(x)
        beta = np.linalg.norm(r)
        if breakdown:
            report.status = "breakdown"
            break
    if project is not None:
        x = project(x)
        beta = np.linalg.norm(b - A(x))
    report.iterations = total
    report.rel_residual = beta / bnorm
    if beta / bnorm <= config.rel_tol:
        report.converged = True
        report.status = "converged"
    elif report.status == "running":
        report.status = "max_iters"
    report.elapsed = time.perf_counter() - t0
    log.debug(report.summary())
    return x, report


def _grow(V, Z, R, cs, sn, g, cap):
    k = len(Z)
    V2 = np.empty((cap + 1, V.shape[1]))
    V2[:k + 1] = V
    Z2 = np.empty((cap, Z.shape[1]))
    Z2[:k] = Z
    R2 = np.zeros((cap, cap))
    R2[:k, :k] = R
    out = [V2, Z2, R2]
    for a, extra in ((cs, 0), (sn, 0), (g, 1)):
        b = np.zeros(cap + extra)
        b[:len(a)] = a
        out.append(b)
    return out


def jacobi_smooth(matrix, rhs, x, sweeps: int = 1, damping: float = 2.0 / 3.0, diag=None):
    """Damped Jacobi sweeps ``x <- x + w D^{-1} (b - A x)``."""
    d = matrix.diagonal() if diag is None else diag
    if np.any(d == 0):
        raise ZeroDivisionError("Jacobi smoothing requires a nonzero diagonal")
    x = np.array(x, dtype=float)
    for _ in range(sweeps):
        x += damping * (rhs - matrix @ x) / d
    return x


def project_mean_zero(p: np.ndarray, Mp: np.ndarray) -> np.ndarray:
    """Remove the Mp-weighted mean so that ``sum_T p_T |T| = 0``."""
    p = np.asarray(p, dtype=float)
    return p - (Mp @ p) / Mp.sum()
