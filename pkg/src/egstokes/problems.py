"""Built-in Stokes problems on the unit square and the obstacle channel."""
from __future__ import annotations

import numpy as np

from .mesh import BoundarySpec
from .space import ProblemSpec, constant

EXAMPLES = ("ex1", "ex2", "ex3", "ex4")


def _trig_fields(mu0: float, scale: float = 1.0):
    pi = np.pi

    def u(x):
        X, Y = x[:, 0], x[:, 1]
        return scale * np.column_stack([np.sin(pi * X) * np.sin(pi * Y),
                                        np.cos(pi * X) * np.cos(pi * Y)])

    def grad_u(x):
        X, Y = x[:, 0], x[:, 1]
        sx, cx, sy, cy = np.sin(pi * X), np.cos(pi * X), np.sin(pi * Y), np.cos(pi * Y)
        g = np.empty((len(x), 2, 2))
        g[:, 0, 0] = pi * cx * sy
        g[:, 0, 1] = pi * sx * cy
        g[:, 1, 0] = -pi * sx * cy
        g[:, 1, 1] = -pi * cx * sy
        return scale * g

    def p(x):
        return np.sin(pi * x[:, 0]) * np.cos(pi * x[:, 1])

    def f(x):
        # -div(2 mu eps(u)) = -mu lap(u) for div-free u, and lap(u) = -2 pi^2 u
        X, Y = x[:, 0], x[:, 1]
        grad_p = np.column_stack([pi * np.cos(pi * X) * np.cos(pi * Y),
                                  -pi * np.sin(pi * X) * np.sin(pi * Y)])
        return 2.0 * pi ** 2 * mu0 * u(x) + grad_p

    def s(x, n):
        g = grad_u(x)
        sigma = mu0 * (g + np.swapaxes(g, 1, 2))
        sigma[:, 0, 0] -= p(x)
        sigma[:, 1, 1] -= p(x)
        return np.einsum("nij,nj->ni", sigma, n)

    return u, grad_u, p, f, s


def channel_inflow(x: np.ndarray) -> np.ndarray:
    """Parabolic profile on x=0 and x=1, no-slip elsewhere."""
    X, Y = x[:, 0], x[:, 1]
    on_ends = (np.abs(X) <= 1e-12) | (np.abs(X - 1.0) <= 1e-12)
    out = np.zeros((len(x), 2))
    out[:, 0] = np.where(on_ends, 4.0 * Y * (1.0 - Y), 0.0)
    return out


def split_viscosity(top: float = 1.0, bottom: float = 0.01, y_split: float = 0.5):
    def mu(x):
        return np.where(x[:, 1] > y_split, top, bottom)

    return mu


def builtin_problem(example: str, mu: float = 1.0, mu_split=None, scale: float = 1.0) -> ProblemSpec:
    """Problem data for ``ex1``..``ex4``.

    ``mu`` sets a constant viscosity (ex1-ex3).  ``mu_split`` is a
    ``(top, bottom, y)`` triple for ex4.  ``scale`` multiplies the exact
    velocity of ex1/ex2, which keeps the pressure fixed.
    """
    if example in ("ex1", "ex2"):
        u, grad_u, p, f, s = _trig_fields(mu, scale)
        return ProblemSpec(mu=constant(mu), f=f, g=u, s=s if example == "ex2" else None,
                           exact_u=u, exact_grad_u=grad_u, exact_p=p, name=example)
    if example == "ex3":
        return ProblemSpec(mu=constant(mu), f=constant([0.0, 0.0]), g=channel_inflow, name=example)
    if example == "ex4":
        top, bottom, y = mu_split if mu_split is not None else (1.0, 0.01, 0.5)
        return ProblemSpec(mu=split_viscosity(top, bottom, y), f=constant([0.0, 0.0]),
                           g=channel_inflow, name=example)
    raise ValueError(f"unknown example {example!r}; expected one of {EXAMPLES}")


def boundary_for(example: str) -> BoundarySpec:
    if example == "ex2":
        return BoundarySpec.dirichlet_on_x(0.0, 1.0)
    return BoundarySpec.all_dirichlet()


def linear_problem(mu: float = 1.0, neumann: bool = False) -> ProblemSpec:
    """Globally linear divergence-free velocity with constant pressure."""
    G = np.array([[0.3, -0.7], [0.4, -0.3]])
    c = np.array([0.2, -0.1])
    p0 = 0.0 if not neumann else 0.75

    def u(x):
        return x @ G.T + c

    def grad_u(x):
        return np.broadcast_to(G, (len(x), 2, 2)).copy()

    def p(x):
        return np.full(len(x), p0)

    def s(x, n):
        sigma = mu * (G + G.T) - p0 * np.eye(2)
        return n @ sigma.T

    return ProblemSpec(mu=constant(mu), f=constant([0.0, 0.0]), g=u, s=s if neumann else None,
                       exact_u=u, exact_grad_u=grad_u, exact_p=p, name="linear")
