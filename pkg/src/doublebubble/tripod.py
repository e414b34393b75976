"""The model tripod clusters on E = {x in R^3 : sum(x) = 0}.

A tripod with vertex ``x`` has cells ``x + Omega_i`` where
``Omega_i = int{z in E : max_j z_j = z_i}``.  This module provides the
interface areas, cell measures, the volume map ``V`` and its inverse, the
model profile ``I_m = P o V^{-1}`` together with its gradient ``x/sqrt 2``
and Hessian ``-L_A^{-1}``.

Vectors in E are carried as length-3 arrays (or :class:`PlanePoint`); the
fixed orthonormal basis ``u1 = (1,-1,0)/sqrt 2``, ``u2 = (1,1,-2)/sqrt 6``
gives 2x2 views of operators on E.
"""
import logging
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import ConditioningError, DomainError, SolverError
from .gauss1d import Phi_upper, phi, single_bubble_profile
from .quadrature import wedge_probability

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
SQRT6 = math.sqrt(6.0)
SQRT3_2 = math.sqrt(1.5)
BASIS = np.column_stack([
    np.array([1.0, -1.0, 0.0]) / SQRT2,
    np.array([1.0, 1.0, -2.0]) / SQRT6,
])  # 3x2, columns u1, u2
ONES = np.ones(3)

# Positively oriented pairs (1,2), (2,3), (3,1), zero-based.
PAIRS = ((0, 1), (1, 2), (2, 0))

DEFAULT_QUAD_TOL = 1e-12
DEFAULT_INVERT_TOL = 1e-10
INTERIOR_CUTOFF = 1e-6


@dataclass(frozen=True)
class PlanePoint:
    """A point of E, stored in R^3 coordinates."""

    coords3: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords3, dtype=float).reshape(3)
        if abs(c.sum()) > 1e-12 * max(1.0, np.abs(c).max()):
            raise DomainError(f"point {c} does not lie in E (coordinate sum {c.sum():.3e})")
        object.__setattr__(self, "coords3", c)

    @classmethod
    def from_coords2(cls, c2):
        return cls(BASIS @ np.asarray(c2, dtype=float).reshape(2))

    @property
    def coords2(self):
        return BASIS.T @ self.coords3

    def __array__(self, dtype=None, copy=None):
        return self.coords3.astype(dtype) if dtype is not None else self.coords3


def as_e_vector(x):
    """Return ``x`` as a length-3 array in E (validated)."""
    if isinstance(x, PlanePoint):
        return x.coords3
    return PlanePoint(x).coords3


@dataclass(frozen=True)
class EOperator:
    """A symmetric operator on E; ``m33`` annihilates (1,1,1)."""

    m33: np.ndarray

    @classmethod
    def from_m22(cls, m22):
        m22 = np.asarray(m22, dtype=float)
        return cls(BASIS @ m22 @ BASIS.T)

    @property
    def m22(self):
        return BASIS.T @ self.m33 @ BASIS

    def eigvalsh(self):
        return np.linalg.eigvalsh(0.5 * (self.m22 + self.m22.T))


# ---- simplex helpers ------------------------------------------------------------

def as_simplex(v, atol=1e-12):
    v = np.asarray(v, dtype=float).reshape(3)
    if np.any(v < -atol) or abs(v.sum() - 1.0) > atol:
        raise DomainError(f"{v} is not in the simplex")
    return np.clip(v, 0.0, 1.0)


def is_interior(v, cutoff=INTERIOR_CUTOFF):
    return bool(np.min(v) >= cutoff)


# ---- frames and areas -------------------------------------------------------------

def frame(i, j):
    """Unit normal ``n_ij = (e_j - e_i)/sqrt 2`` and direction ``t_ij`` of the interface.

    Indices are zero-based.  ``t_ij = (e_i + e_j - 2 e_k)/sqrt 6`` points
    along the half-line ``Sigma_ij`` away from the vertex.
    """
    if i == j or {i, j} - {0, 1, 2}:
        raise DomainError(f"invalid interface pair ({i}, {j})")
    k = 3 - i - j
    e = np.eye(3)
    n = (e[j] - e[i]) / SQRT2
    t = (e[i] + e[j] - 2.0 * e[k]) / SQRT6
    return n, t


FRAMES = tuple(frame(i, j) for i, j in PAIRS)
NORMALS = np.array([n for n, _ in FRAMES])  # rows n_12, n_23, n_31
TANGENTS = np.array([t for _, t in FRAMES])


def interface_area(x, pair):
    """Gaussian length of ``x + Sigma_ij``: ``phi(<x,n>) (1 - Phi(<x,t>))``."""
    x = as_e_vector(x)
    n, t = frame(*pair)
    return phi(x @ n) * Phi_upper(x @ t)


def interface_areas(x):
    """Areas ``(A_12, A_23, A_31)`` of the tripod with vertex ``x``."""
    x = as_e_vector(x)
    return phi(NORMALS @ x) * Phi_upper(TANGENTS @ x)


def laplacian(areas):
    """``L_A = sum A_ij (e_i - e_j)(e_i - e_j)^T`` with areas in PAIRS order."""
    L = np.zeros((3, 3))
    for a, (i, j) in zip(areas, PAIRS):
        d = np.zeros(3)
        d[i], d[j] = 1.0, -1.0
        L += a * np.outer(d, d)
    return L


def perimeter(x):
    return float(interface_areas(x).sum())


# ---- cell measures and the volume map -------------------------------------------

def _wedge_offsets(x, i):
    j, k = (i + 1) % 3, (i + 2) % 3
    return (x[i] - x[j]) / SQRT2, (x[i] - x[k]) / SQRT2


def cell_measure(x, i, tol=DEFAULT_QUAD_TOL):
    """Gaussian measure of the cell ``x + Omega_i`` (zero-based ``i``)."""
    if not 1e-12 <= tol <= 1e-6:
        raise DomainError("quadrature tolerance must lie in [1e-12, 1e-6]")
    x = as_e_vector(x)
    a, b = _wedge_offsets(x, i)
    return wedge_probability(a, b, tol)


def measure_bounds(x, i):
    """Lower (FKG product) and upper (half-plane) bounds for the cell measure.

    The cell lies in each of the half-planes ``{z_i > x_i}``,
    ``{<z, n_ij> < <x, n_ij>}``.  On E the coordinate ``z_i`` has variance
    2/3, so the first has measure ``1 - Phi(sqrt(3/2) x_i)``; the unscaled
    ``1 - Phi(x_i)`` is only an upper bound when ``x_i >= 0``.
    """
    x = as_e_vector(x)
    a, b = _wedge_offsets(x, i)
    lower = Phi_upper(a) * Phi_upper(b)
    upper = min(Phi_upper(SQRT3_2 * x[i]), Phi_upper(a), Phi_upper(b))
    return lower, upper


def volume_map_raw(x, tol=DEFAULT_QUAD_TOL):
    x = as_e_vector(x)
    return np.array([cell_measure(x, i, tol) for i in range(3)])


def volume_map(x, tol=DEFAULT_QUAD_TOL):
    """Cell measures ``V(x)``, renormalised to sum to one."""
    raw = volume_map_raw(x, tol)
    total = raw.sum()
    if abs(total - 1.0) > 3 * tol:
        log.warning("volume map renormalisation %.3e exceeds 3*tol at x=%s", total - 1.0, x)
    else:
        log.debug("volume map renormalisation %.3e", total - 1.0)
    return raw / total


def volume_jacobian(x):
    """``DV(x) = -L_A(x) / sqrt 2`` as an operator on E."""
    return EOperator(-laplacian(interface_areas(x)) / SQRT2)


def _solve_on_e(L, rhs):
    """Solve ``L y = rhs`` within E (L given as 3x3, rhs in R^3)."""
    L22 = BASIS.T @ L @ BASIS
    return BASIS @ np.linalg.solve(L22, BASIS.T @ rhs)


def invert_volume_map(v, tol=DEFAULT_INVERT_TOL, max_iter=100, x0=None, quad_tol=DEFAULT_QUAD_TOL):
    """Vertex ``x`` with ``V(x) = v`` by damped Newton, started at ``x0`` (default 0).

    ``tol`` bounds the max-norm residual that counts as converged; iteration
    continues past it while Newton steps still shrink, so the returned point
    is typically accurate to quadrature precision.
    """
    v = as_simplex(v)
    if v.min() < INTERIOR_CUTOFF:
        raise DomainError(f"inversion needs min(v) >= {INTERIOR_CUTOFF}, got {v.min():.3e}")
    if tol < 1e-10:
        raise DomainError("inversion tolerance must be at least 1e-10")
    x = np.zeros(3) if x0 is None else as_e_vector(x0).copy()
    r = volume_map(x, quad_tol) - v
    res = np.abs(r).max()
    for _ in range(max_iter):
        # DV dx = -r  <=>  L dx = sqrt2 r
        dx = _solve_on_e(laplacian(interface_areas(x)), SQRT2 * r)
        if res <= tol and np.abs(dx).max() <= 1e-13 * max(1.0, np.abs(x).max()):
            return x
        step = 1.0
        while True:
            x_new = x + step * dx
            r_new = volume_map(x_new, quad_tol) - v
            res_new = np.abs(r_new).max()
            if res_new < res:
                break
            step *= 0.5
            if step < 1e-12:
                break
        if res_new >= res:
            if res <= tol:
                return x
            raise SolverError(f"line search stalled at residual {res:.3e}", last_iterate=x, residual=res)
        x, r, res = x_new, r_new, res_new
    if res <= tol:
        return x
    raise SolverError(f"no convergence in {max_iter} iterations (residual {res:.3e})",
                      last_iterate=x, residual=res)


# ---- the model profile ------------------------------------------------------------

def model_profile(v, x0=None, tol=DEFAULT_INVERT_TOL):
    """Perimeter of the tripod with measures ``v``; ``I1(max v)`` on the boundary."""
    v = as_simplex(v)
    if not is_interior(v):
        return float(single_bubble_profile(v.max()))
    x = invert_volume_map(v, tol=tol, x0=x0)
    return perimeter(x)


def model_profile_gradient(v, x0=None):
    """``grad I_m(v) = V^{-1}(v)/sqrt 2`` as a covector on E."""
    x = invert_volume_map(v, x0=x0)
    return PlanePoint(x / SQRT2)


def model_profile_hessian(v, x0=None, max_cond=1e12):
    """``Hess I_m(v) = -L_A^{-1}`` on E, areas taken at ``V^{-1}(v)``."""
    x = invert_volume_map(v, x0=x0)
    return hessian_at(x, max_cond)


def hessian_at(x, max_cond=1e12):
    areas = interface_areas(x)
    L22 = BASIS.T @ laplacian(areas) @ BASIS
    if np.linalg.cond(L22) > max_cond:
        raise ConditioningError(f"L_A is near-singular on E (areas {areas})")
    return EOperator.from_m22(-np.linalg.inv(L22))


def trace_identity_residual(v, x0=None):
    """``| -tr[(Hess I_m)^{-1}] - 2 I_m |`` at ``v``."""
    x = invert_volume_map(v, x0=x0)
    H = hessian_at(x)
    lhs = -np.trace(np.linalg.inv(H.m22))
    return abs(lhs - 2.0 * perimeter(x))


def weighted_mean_curvature(x, pair):
    """Gaussian-weighted mean curvature ``-<x, n_ij>`` of the flat interface."""
    x = as_e_vector(x)
    n, _ = frame(*pair)
    return float(-(x @ n))


def lagrange_multiplier(x):
    """``lambda = x/sqrt 2`` so that ``H_ij = lambda_i - lambda_j``."""
    return as_e_vector(x) / SQRT2


def strongly_convex_lower_bound(K, v):
    """``sqrt(K) I_m(v)``: profile lower bound for a K-strongly log-concave measure."""
    if not K > 0:
        raise DomainError("K must be positive")
    return math.sqrt(K) * model_profile(v)


# ---- symmetry ---------------------------------------------------------------------

S3 = tuple(permutations(range(3)))


def permutation_matrix(perm):
    """Matrix sending e_i to e_perm[i]."""
    P = np.zeros((3, 3))
    for i, p in enumerate(perm):
        P[p, i] = 1.0
    return P
