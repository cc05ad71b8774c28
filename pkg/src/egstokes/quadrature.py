"""Quadrature rules on the reference triangle and the unit interval."""
import numpy as np


def triangle_rule(degree: int):
    """Barycentric points ``(n, 3)`` and weights summing to 1 (scale by area).

    Degree 1 is the centroid rule; degree 4 is the symmetric 6-point rule.
    """
    if degree <= 1:
        return np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])
    if degree == 2:
        a, b = 2 / 3, 1 / 6
        pts = np.array([[a, b, b], [b, a, b], [b, b, a]])
        return pts, np.full(3, 1 / 3)
    if degree <= 4:
        a1, w1 = 0.44594849091596488632, 0.22338158967801146570
        a2, w2 = 0.09157621350977074346, 0.10995174365532186764
        rows, wts = [], []
        for a, w in ((a1, w1), (a2, w2)):
            b = 1.0 - 2.0 * a
            rows += [[b, a, a], [a, b, a], [a, a, b]]
            wts += [w] * 3
        return np.array(rows), np.array(wts)
    raise ValueError(f"no triangle rule of degree {degree}")


def interval_rule(npoints: int):
    """Gauss-Legendre points on [0, 1] and weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (x + 1.0), 0.5 * w
