import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from doublebubble import fdcheck, tripod
from doublebubble.errors import DomainError
from doublebubble.gauss1d import Phi_upper, phi, single_bubble_profile
from doublebubble.tripod import BASIS, PAIRS

PHI0 = 1.0 / math.sqrt(2.0 * math.pi)

e_points = st.tuples(st.floats(-1, 1), st.floats(-1, 1)).map(lambda c: BASIS @ np.array(c))


def e_point(radius):
    return st.tuples(st.floats(0, radius), st.floats(0, 2 * math.pi)).map(
        lambda ra: BASIS @ np.array([ra[0] * math.cos(ra[1]), ra[0] * math.sin(ra[1])]))


interior_v = st.tuples(st.floats(0.02, 0.96), st.floats(0.02, 0.96)).filter(
    lambda t: t[0] + t[1] <= 0.98).map(lambda t: np.array([t[0], t[1], 1.0 - t[0] - t[1]]))


def mc_cell_measures(x, n, seed):
    rng = np.random.default_rng(seed)
    counts = np.zeros(3)
    done = 0
    while done < n:
        k = min(2_000_000, n - done)
        z = rng.standard_normal((k, 2)) @ BASIS.T
        counts += np.bincount(np.argmax(z - x, axis=1), minlength=3)
        done += k
    return counts / n


# ---- plane points and frames ----------------------------------------------------

def test_basis_orthonormal_in_E():
    assert np.allclose(BASIS.T @ BASIS, np.eye(2), atol=1e-15)
    assert np.allclose(BASIS.sum(axis=0), 0.0, atol=1e-15)


@given(e_points)
def test_plane_point_round_trip(x):
    p = tripod.PlanePoint(x)
    q = tripod.PlanePoint.from_coords2(p.coords2)
    assert np.allclose(q.coords3, p.coords3, atol=1e-12)
    assert abs(p.coords3.sum()) <= 1e-12


def test_plane_point_rejects_off_plane():
    with pytest.raises(DomainError):
        tripod.PlanePoint([1.0, 0.0, 0.0])


def test_frame_12():
    n, t = tripod.frame(0, 1)
    assert np.allclose(n, np.array([-1, 1, 0]) / math.sqrt(2), atol=1e-16)
    assert np.allclose(t, np.array([1, 1, -2]) / math.sqrt(6), atol=1e-16)


def test_frame_reversal():
    n, t = tripod.frame(0, 1)
    n2, t2 = tripod.frame(1, 0)
    assert np.allclose(n2, -n) and np.allclose(t2, t)


def test_frames_orthonormal_and_cyclic():
    for n, t in tripod.FRAMES:
        assert abs(np.linalg.norm(n) - 1) <= 1e-14 and abs(np.linalg.norm(t) - 1) <= 1e-14
        assert abs(n @ t) <= 1e-14
    assert np.abs(tripod.NORMALS.sum(0)).max() <= 1e-15
    assert np.abs(tripod.TANGENTS.sum(0)).max() <= 1e-13


def test_frame_rejects_equal_indices():
    with pytest.raises(DomainError):
        tripod.frame(1, 1)


# ---- areas -------------------------------------------------------------------------

def test_area_at_origin():
    for pair in PAIRS:
        assert tripod.interface_area(np.zeros(3), pair) == pytest.approx(0.19947114020071635, abs=1e-16)


def test_area_tail_monotone():
    _, t = tripod.frame(0, 1)
    vals = [tripod.interface_area(s * t, (0, 1)) for s in np.linspace(0, 8, 17)]
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-15


@given(st.floats(-5, 5))
def test_area_along_normal(s):
    n, _ = tripod.frame(0, 1)
    assert tripod.interface_area(s * n, (0, 1)) == pytest.approx(phi(s) / 2, rel=1e-14)


@given(e_point(6))
def test_areas_bounded(x):
    a = tripod.interface_areas(x)
    assert np.all(a >= 0) and np.all(a < PHI0)
    assert tripod.perimeter(x) == pytest.approx(a.sum(), rel=1e-15)


# ---- cell measures ---------------------------------------------------------------

def test_cell_measure_origin():
    for i in range(3):
        assert tripod.cell_measure(np.zeros(3), i) == pytest.approx(1 / 3, abs=1e-12)
    lo, hi = tripod.measure_bounds(np.zeros(3), 0)
    assert (lo, hi) == (pytest.approx(0.25, abs=1e-16), pytest.approx(0.5, abs=1e-16))


def test_cell_measure_far_shift_against_mc():
    # x1 - x2 = x1 - x3 = -6: the cell of label 1 covers almost everything
    x = np.array([-4.0, 2.0, 2.0])
    m = tripod.cell_measure(x, 0)
    n = 10_000_000
    ref = mc_cell_measures(x, n, seed=7)[0]
    sigma = math.sqrt(max(ref * (1 - ref), 1e-7) / n)
    assert abs(m - ref) <= 3 * sigma + 1e-7
    # the complement is the union of two half-planes of mass Phi(-6/sqrt 2) each
    half = 0.5 * math.erfc(3.0)
    assert half < 1 - m < 2 * half


@pytest.mark.parametrize("x2", [(0.0, 0.0), (0.3, -0.8), (-1.2, 0.4), (1.5, 1.5)])
def test_cell_measures_against_mc(x2):
    x = BASIS @ np.array(x2)
    n = 2_000_000
    ref = mc_cell_measures(x, n, seed=11)
    got = tripod.volume_map_raw(x)
    sigma = np.sqrt(ref * (1 - ref) / n)
    assert np.all(np.abs(got - ref) <= 4 * sigma)


def test_cell_measure_tolerance_range():
    with pytest.raises(DomainError):
        tripod.cell_measure(np.zeros(3), 0, tol=1e-3)


@given(e_point(5), st.integers(0, 2))
def test_measure_sandwich(x, i):
    lo, hi = tripod.measure_bounds(x, i)
    m = tripod.cell_measure(x, i)
    assert lo - 1e-12 <= m <= hi + 1e-12


def test_measure_sandwich_1000_points(rng):
    r = 5 * np.sqrt(rng.random(1000))
    a = 2 * math.pi * rng.random(1000)
    for rr, aa in zip(r, a):
        x = BASIS @ np.array([rr * math.cos(aa), rr * math.sin(aa)])
        for i in range(3):
            lo, hi = tripod.measure_bounds(x, i)
            assert lo - 1e-12 <= tripod.cell_measure(x, i) <= hi + 1e-12


def test_upper_bound_tail():
    # deep in cell 1's own direction its measure is small and the bound tracks the tail
    x = np.array([3.0, -1.5, -1.5])
    lo, hi = tripod.measure_bounds(x, 0)
    m = tripod.cell_measure(x, 0)
    assert hi == pytest.approx(Phi_upper(math.sqrt(1.5) * 3.0), rel=1e-14)
    assert lo <= m <= hi < 2e-4


# ---- volume map ---------------------------------------------------------------------

def test_volume_map_origin():
    assert np.allclose(tripod.volume_map(np.zeros(3)), 1 / 3, atol=1e-9)


@given(e_point(4))
def test_volume_map_sums_to_one(x):
    v = tripod.volume_map(x)
    assert abs(v.sum() - 1.0) <= 2e-16 * 3
    assert np.all(v > 0)


@given(e_point(4), st.sampled_from(list(permutations(range(3)))))
def test_volume_map_equivariance(x, perm):
    P = tripod.permutation_matrix(perm)
    assert np.allclose(tripod.volume_map(P @ x), P @ tripod.volume_map(x), atol=1e-10)
    assert np.allclose(tripod.interface_areas(P @ x).sum(), tripod.perimeter(x), atol=1e-14)


def test_volume_jacobian_origin():
    J = tripod.volume_jacobian(np.zeros(3)).m22
    assert np.allclose(J, -3 * PHI0 / (2 * math.sqrt(2)) * np.eye(2), atol=1e-14)
    assert J[0, 0] == pytest.approx(-0.42314, abs=1e-5)


@given(e_point(4))
def test_volume_jacobian_rows_sum_to_zero(x):
    J = tripod.volume_jacobian(x).m33
    assert np.abs(J.sum(axis=1)).max() <= 1e-15


def test_volume_jacobian_matches_fd(rng):
    for _ in range(100):
        r, a = 4 * math.sqrt(rng.random()), 2 * math.pi * rng.random()
        x = BASIS @ np.array([r * math.cos(a), r * math.sin(a)])
        fd = fdcheck.jacobian(tripod.volume_map, x)
        an = tripod.volume_jacobian(x).m33 @ BASIS
        assert np.abs(fd - an).max() <= 1e-6


# ---- inversion ----------------------------------------------------------------------

def test_invert_symmetric_point():
    assert np.abs(tripod.invert_volume_map(np.full(3, 1 / 3))).max() <= 1e-10


def test_invert_round_trip(rng):
    for _ in range(200):
        r, a = 4 * math.sqrt(rng.random()), 2 * math.pi * rng.random()
        x = BASIS @ np.array([r * math.cos(a), r * math.sin(a)])
        y = tripod.invert_volume_map(tripod.volume_map(x))
        assert np.abs(BASIS.T @ (y - x)).max() <= 1e-7


def test_invert_near_boundary():
    v = np.array([1e-5, 0.5, 0.5 - 1e-5])
    x = tripod.invert_volume_map(v)
    assert np.abs(tripod.volume_map(x) - v).max() <= 1e-10
    assert np.linalg.norm(x) > 2.0
    lo, hi = tripod.measure_bounds(x, 0)
    assert lo <= 1e-5 + 1e-10 and 1e-5 - 1e-10 <= hi


@pytest.mark.parametrize("v", [[0.5, 0.5, 0.0], [0.3, 0.3, 0.3], [1.2, -0.1, -0.1]])
def test_invert_rejects(v):
    with pytest.raises(DomainError):
        tripod.invert_volume_map(np.array(v))


def test_invert_rejects_tight_tolerance():
    with pytest.raises(DomainError):
        tripod.invert_volume_map(np.full(3, 1 / 3), tol=1e-12)


# ---- model profile ---------------------------------------------------------------

def test_model_profile_symmetric():
    assert tripod.model_profile(np.full(3, 1 / 3)) == pytest.approx(0.5984134206021490, abs=1e-8)
    assert tripod.model_profile(np.full(3, 1 / 3)) == pytest.approx(3 * PHI0 / 2, abs=1e-12)


def test_model_profile_boundary():
    assert tripod.model_profile(np.array([0.5, 0.5, 0.0])) == pytest.approx(0.39894228, abs=1e-8)


def test_model_profile_continuity_at_boundary():
    errs = []
    for eps in (1e-2, 1e-3, 1e-4):
        v = np.array([0.5 - eps, 0.5 - eps, 2 * eps])
        errs.append(abs(tripod.model_profile(v) - single_bubble_profile(0.5)))
    assert errs[0] > errs[1] > errs[2]


def test_boundary_agreement_along_rays(rng):
    for _ in range(10):
        b = rng.dirichlet(np.ones(2))
        k = int(rng.integers(3))
        vb = np.insert(b, k, 0.0)
        c = np.full(3, 1 / 3)
        errs = []
        for eps in (1e-1, 1e-2, 1e-3):
            v = vb + eps * (c - vb)
            errs.append(abs(tripod.model_profile(v) - single_bubble_profile(v.max())))
        assert errs[2] <= 1e-2
        assert errs[0] > errs[1] > errs[2]


@given(interior_v)
def test_gradient_formula_matches_fd(v):
    x = tripod.invert_volume_map(v)
    grad = tripod.model_profile_gradient(v)
    f = lambda u: tripod.model_profile(u, x0=x)  # noqa: E731
    fd = fdcheck.gradient(f, v, h=1e-4)
    assert np.abs(BASIS.T @ grad - fd).max() <= 1e-5


def test_gradient_symmetric_point_is_zero():
    assert np.abs(tripod.model_profile_gradient(np.full(3, 1 / 3))).max() <= 1e-10


def test_gradient_equivariance(rng):
    v = rng.dirichlet(np.ones(3) * 3)
    for perm in permutations(range(3)):
        P = tripod.permutation_matrix(perm)
        assert np.allclose(tripod.model_profile_gradient(P @ v), P @ tripod.model_profile_gradient(v),
                           atol=1e-9)


def test_hessian_symmetric_point():
    H = tripod.model_profile_hessian(np.full(3, 1 / 3)).m22
    assert np.allclose(H, -2 / (3 * PHI0) * np.eye(2), atol=1e-10)
    assert H[0, 0] == pytest.approx(-1.67109, abs=1e-5)


@given(interior_v)
def test_hessian_negative_definite_and_fd(v):
    x = tripod.invert_volume_map(v)
    H = tripod.hessian_at(x)
    assert np.all(H.eigvalsh() < 0)
    fd = fdcheck.hessian(lambda u: tripod.model_profile(u, x0=x), v, h=1e-3)
    assert np.abs(H.m22 - fd).max() <= 1e-4


def test_trace_identity_symmetric_point():
    assert tripod.trace_identity_residual(np.full(3, 1 / 3)) <= 1e-9
    assert 2 * tripod.model_profile(np.full(3, 1 / 3)) == pytest.approx(1.1968268412042981, abs=1e-12)


@given(interior_v)
def test_trace_identity(v):
    assert tripod.trace_identity_residual(v) <= 1e-7


def test_trace_identity_near_boundary():
    assert tripod.trace_identity_residual(np.array([0.01, 0.495, 0.495])) <= 1e-6


# ---- curvature, multipliers, scaling ---------------------------------------------------

def test_mean_curvature_origin():
    assert all(tripod.weighted_mean_curvature(np.zeros(3), p) == 0 for p in PAIRS)


@given(e_point(5))
def test_mean_curvature_identities(x):
    H = [tripod.weighted_mean_curvature(x, p) for p in PAIRS]
    lam = tripod.lagrange_multiplier(x)
    assert abs(sum(H)) <= 1e-14
    for h, (i, j) in zip(H, PAIRS):
        assert abs(h - (lam[i] - lam[j])) <= 1e-14


def test_strongly_convex_bound():
    v = np.full(3, 1 / 3)
    base = tripod.strongly_convex_lower_bound(1.0, v)
    assert base == pytest.approx(0.59841342, abs=1e-8)
    assert tripod.strongly_convex_lower_bound(4.0, v) == 2 * base
    assert tripod.strongly_convex_lower_bound(0.25, v) == 0.5 * base
    with pytest.raises(DomainError):
        tripod.strongly_convex_lower_bound(0.0, v)


def test_as_simplex_rejects():
    with pytest.raises(DomainError):
        tripod.as_simplex([0.5, 0.5, 0.1])
