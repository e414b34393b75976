"""Perimeter and interface statistics of general 3-clusters in the plane.

Covers grid-labelled clusters (``grid_perimeter``), interval clusters
(``OneDimCluster``) and analytic tripods, the matrices ``M``, ``N`` and
``L_A`` built from their interfaces, and the exact variations of a tripod
under translations.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import tripod
from .errors import ConditioningError, DomainError
from .gauss1d import Phi, Phi_inv, Phi_upper, phi
from .grid import axis_edges
from .kernels import SMOOTHING_SIGMA, label_gradients, perimeter_kernel
from .tripod import BASIS, FRAMES, NORMALS, PAIRS, SQRT2, as_e_vector, as_simplex

PAIR_NAMES = ("12", "23", "31")


@dataclass
class InterfaceStats:
    """Per-interface Gaussian lengths and average normals, in PAIRS order.

    ``avg_normals`` rows are in the ``(u1, u2)`` basis; ``M`` is 3x2 with
    columns in E, ``N`` is 2x2 and ``L_A`` is 3x3.
    """

    areas: np.ndarray
    avg_normals: np.ndarray
    raw_areas: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.areas = np.asarray(self.areas, dtype=float).reshape(3)
        self.avg_normals = np.asarray(self.avg_normals, dtype=float).reshape(3, 2)
        if np.any(self.areas < 0):
            raise DomainError("interface areas must be nonnegative")

    @property
    def perimeter(self):
        return float(self.areas.sum())

    @property
    def M(self):
        M = np.zeros((3, 2))
        for a, nbar, (i, j) in zip(self.areas, self.avg_normals, PAIRS):
            d = np.zeros(3)
            d[i], d[j] = 1.0, -1.0
            M += a * np.outer(d, nbar)
        return M

    @property
    def N(self):
        return np.einsum("k,ki,kj->ij", self.areas, self.avg_normals, self.avg_normals)

    @property
    def L_A(self):
        return tripod.laplacian(self.areas)

    def avg_normals3(self):
        """Average normals as vectors of E in R^3 coordinates."""
        return self.avg_normals @ BASIS.T


def _average(nsum, areas):
    out = np.zeros((3, 2))
    pos = areas > 0
    out[pos] = nsum[pos] / areas[pos, None]
    # Rounding can push a perfectly straight interface a hair past 1.
    norms = np.linalg.norm(out, axis=1)
    big = norms > 1.0
    out[big] /= norms[big, None]
    return out


# ---- grid clusters ----------------------------------------------------------------

def grid_perimeter(cluster, sigma=SMOOTHING_SIGMA):
    """Gaussian perimeter of a grid cluster and its interface statistics.

    Each pair of 4-adjacent pixels with different labels contributes the
    exact Gaussian length of their shared edge, divided by ``|n_x| + |n_y|``
    where ``n`` is the interface normal estimated from smoothed label
    gradients.  A staircase approximating a segment with normal ``n`` has
    length ``(|n_x| + |n_y|)`` times the segment, so this removes the
    anisotropy of raw edge counting.
    """
    lab = cluster.labels.astype(np.int64) - 1
    grad = label_gradients(lab, sigma)
    phi_edge = phi(axis_edges(cluster.extent, cluster.resolution))
    areas, nsum, raw = perimeter_kernel(lab, grad, phi_edge, cluster.axis_mass)
    stats = InterfaceStats(areas, _average(nsum, areas), raw_areas=raw)
    return stats.perimeter, stats


def analytic_tripod_stats(x):
    """Exact statistics of the tripod with vertex ``x`` (constant normals)."""
    areas = tripod.interface_areas(x)
    return InterfaceStats(areas, NORMALS @ BASIS)


# ---- matrix inequalities ------------------------------------------------------------

def cs_gap_matrix(stats):
    """``N - M^T L_A^{-1} M`` as a 2x2 matrix; needs two positive areas."""
    pos = stats.areas > 0
    if pos.sum() < 2:
        empty = [PAIR_NAMES[k] for k in range(3) if not pos[k]]
        raise ConditioningError(f"L_A is singular on E: interfaces {', '.join(empty)} are empty")
    L22 = BASIS.T @ stats.L_A @ BASIS
    M22 = BASIS.T @ stats.M
    return stats.N - M22.T @ np.linalg.solve(L22, M22)


def matrix_cs_gap(stats):
    """Smallest eigenvalue of ``N - M^T L_A^{-1} M``.

    With three interfaces in the plane the defect matrix has rank at most
    one (three weighted normals regressed on a two-dimensional ``Y``), so
    this is zero up to rounding for every cluster; see :func:`cs_defect`.
    """
    G = cs_gap_matrix(stats)
    return float(np.linalg.eigvalsh(0.5 * (G + G.T))[0])


def cs_defect(stats):
    """Largest eigenvalue of ``N - M^T L_A^{-1} M``.

    Zero exactly when ``n_ij = B (e_i - e_j)`` for a single linear ``B``,
    i.e. when the area-weighted average normals close up as for a tripod.
    """
    G = cs_gap_matrix(stats)
    return float(np.linalg.eigvalsh(0.5 * (G + G.T))[-1])


def dichotomy_rank(stats, tol=1e-8):
    """Numerical rank of ``M``: singular values above ``tol`` times the largest count."""
    s = np.linalg.svd(BASIS.T @ stats.M, compute_uv=False)
    if s[0] <= 1e-300:
        return 0
    return int(np.sum(s > tol * s[0]))


# ---- one-dimensional clusters -----------------------------------------------------

@dataclass(frozen=True)
class OneDimCluster:
    """Cells ``label_order[0..2]`` on ``(-inf, a)``, ``(a, b)``, ``(b, inf)`` along ``theta``."""

    thresholds: tuple
    label_order: tuple = (1, 2, 3)
    theta: tuple = (1.0, 0.0)

    def __post_init__(self):
        a, b = map(float, self.thresholds)
        if a > b:
            raise DomainError("thresholds must satisfy a <= b")
        if sorted(self.label_order) != [1, 2, 3]:
            raise DomainError("label_order must be a permutation of (1, 2, 3)")
        th = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "thresholds", (a, b))
        object.__setattr__(self, "label_order", tuple(int(k) for k in self.label_order))
        object.__setattr__(self, "theta", tuple(th / np.linalg.norm(th)))

    @property
    def measures(self):
        a, b = self.thresholds
        seg = (Phi(a), Phi(b) - Phi(a), Phi_upper(b))
        m = np.zeros(3)
        for lab, mass in zip(self.label_order, seg):
            m[lab - 1] = mass
        return m

    @property
    def perimeter(self):
        a, b = self.thresholds
        return float(phi(a) + phi(b))

    def stats(self):
        a, b = self.thresholds
        areas = np.zeros(3)
        nsum = np.zeros((3, 2))
        th = np.asarray(self.theta)
        lo, mid, hi = (k - 1 for k in self.label_order)
        for (p, q), length in (((lo, mid), phi(a)), ((mid, hi), phi(b))):
            k, sign = _pair_slot(p, q)
            areas[k] += length
            nsum[k] += sign * length * th  # normal points from p to q
        return InterfaceStats(areas, _average(nsum, areas))


def _pair_slot(p, q):
    for k, (i, j) in enumerate(PAIRS):
        if (p, q) == (i, j):
            return k, 1.0
        if (p, q) == (j, i):
            return k, -1.0
    raise DomainError(f"invalid pair ({p}, {q})")


def one_dim_competitor(v, order=(1, 2, 3), theta=(1.0, 0.0)):
    """Interval cluster with measures ``v`` and cells arranged in ``order``."""
    v = as_simplex(v)
    if v.min() <= 0.0:
        raise DomainError("one-dimensional competitor needs interior v")
    s1 = v[order[0] - 1]
    s2 = s1 + v[order[1] - 1]
    return OneDimCluster((Phi_inv(s1), Phi_inv(s2)), tuple(order), theta)


def best_one_dim_competitor(v):
    """Cheapest interval cluster over all six cell orders."""
    from itertools import permutations

    return min((one_dim_competitor(v, p) for p in permutations((1, 2, 3))), key=lambda c: c.perimeter)


# ---- translations of a tripod ---------------------------------------------------------

def translation_scan(x, w, ts):
    """Measures and perimeter of the translated tripods ``x + t w``."""
    x = as_e_vector(x)
    w = as_e_vector(w)
    if np.linalg.norm(w) > 5.0:
        raise DomainError("|w| must be at most 5")
    ts = np.asarray(ts, dtype=float)
    if np.any(np.abs(ts) > 1.0):
        raise DomainError("translation parameters must lie in [-1, 1]")
    return [(tripod.volume_map(x + t * w), tripod.perimeter(x + t * w)) for t in ts]


@dataclass(frozen=True)
class VariationReport:
    dV: np.ndarray
    dA: float
    d2V: np.ndarray
    d2A: float
    Q: float
    lam: np.ndarray

    def as_dict(self):
        return {"dV": self.dV.tolist(), "dA": self.dA, "d2V": self.d2V.tolist(),
                "d2A": self.d2A, "Q": self.Q, "lambda": self.lam.tolist()}


def index_form_translation(x, w):
    """First and second variations of volume and perimeter of a tripod moved along ``w``.

    Each interface ``x + Sigma_ij`` is flat with constant normal, so the
    variations are exact derivatives of ``t -> V(x + t w)`` and
    ``t -> P(x + t w)``.  ``Q = d2A - <lambda, d2V>`` reduces to
    ``-sum <w, n_ij>^2 A_ij``.
    """
    x = as_e_vector(x)
    w = as_e_vector(w)
    dV = np.zeros(3)
    d2V = np.zeros(3)
    dA = 0.0
    d2A = 0.0
    for (i, j), (n, t) in zip(PAIRS, FRAMES):
        xn, xt, wn, wt = x @ n, x @ t, w @ n, w @ t
        A = phi(xn) * Phi_upper(xt)
        corner = phi(xn) * phi(xt)
        dAij = -(xn * wn * A + wt * corner)  # d/dt A_ij
        d2Aij = (-wn * wn * A - xn * wn * dAij
                 + wt * corner * (xn * wn + xt * wt))
        # n_ij is the outward normal of cell i and inward of cell j
        dV[i] += wn * A
        dV[j] -= wn * A
        d2V[i] += wn * dAij
        d2V[j] -= wn * dAij
        dA += dAij
        d2A += d2Aij
    lam = x / SQRT2
    Q = d2A - lam @ d2V
    return VariationReport(dV, float(dA), d2V, float(d2A), float(Q), lam)


def index_form_closed(x, w):
    """``-sum <w, n_ij>^2 A_ij``."""
    x = as_e_vector(x)
    w = as_e_vector(w)
    return float(-np.sum((NORMALS @ w) ** 2 * tripod.interface_areas(x)))


def stability_bound(x, w):
    """``-(Mw)^T L_A^{-1} (Mw)`` for the tripod at ``x``; equals ``Q(w)`` for tripods."""
    stats = analytic_tripod_stats(x)
    y = stats.M @ (BASIS.T @ as_e_vector(w))
    L22 = BASIS.T @ stats.L_A @ BASIS
    y2 = BASIS.T @ y
    return float(-y2 @ np.linalg.solve(L22, y2))


def angle_between(u, v):
    """Unsigned angle in degrees between two plane vectors."""
    c = np.clip(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)), -1.0, 1.0)
    return math.degrees(math.acos(c))
