"""Central finite differences along the plane E.

Functions take points of E as length-3 arrays and differentiate along the
basis ``(u1, u2)``; results are returned in basis coordinates.  With
``richardson=True`` the step is halved once and the two estimates combined
to cancel the ``h^2`` term.
"""
import numpy as np

from .tripod import BASIS


def _rich(fn, h, richardson):
    if not richardson:
        return fn(h)
    coarse = fn(h)
    fine = fn(0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def gradient(f, x, h=1e-4, richardson=True):
    """FD gradient of a scalar ``f`` at ``x`` in E, as a 2-vector."""
    x = np.asarray(x, dtype=float)

    def est(s):
        return np.array([(f(x + s * u) - f(x - s * u)) / (2.0 * s) for u in BASIS.T])

    return _rich(est, h, richardson)


def hessian(f, x, h=1e-3, richardson=True):
    """FD Hessian of a scalar ``f`` at ``x`` in E, as a symmetric 2x2 matrix."""
    x = np.asarray(x, dtype=float)
    u1, u2 = BASIS.T

    def est(s):
        f0 = f(x)
        H = np.empty((2, 2))
        for k, u in enumerate((u1, u2)):
            H[k, k] = (f(x + s * u) - 2.0 * f0 + f(x - s * u)) / (s * s)
        H[0, 1] = H[1, 0] = (f(x + s * (u1 + u2)) - f(x + s * (u1 - u2))
                             - f(x - s * (u1 - u2)) + f(x - s * (u1 + u2))) / (4.0 * s * s)
        return H

    return _rich(est, h, richardson)


def jacobian(F, x, h=1e-4, richardson=True):
    """FD Jacobian of an R^3-valued ``F`` at ``x`` along E: a 3x2 matrix (columns d/du1, d/du2)."""
    x = np.asarray(x, dtype=float)

    def est(s):
        return np.column_stack([(np.asarray(F(x + s * u)) - np.asarray(F(x - s * u))) / (2.0 * s)
                                for u in BASIS.T])

    return _rich(est, h, richardson)


def derivative(g, h=1e-4, richardson=True):
    """First derivative at 0 of ``g: R -> R or R^m``."""
    def est(s):
        return (np.asarray(g(s)) - np.asarray(g(-s))) / (2.0 * s)

    return _rich(est, h, richardson)


def second_derivative(g, h=1e-3, richardson=True):
    """Second derivative at 0 of ``g: R -> R or R^m``."""
    def est(s):
        return (np.asarray(g(s)) - 2.0 * np.asarray(g(0.0)) + np.asarray(g(-s))) / (s * s)

    return _rich(est, h, richardson)
