"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL verdict with the measured value and
runtime; the lines are printed in the terminal summary (see conftest.py),
or directly when this file is run as a script.
"""
import math
import time

import numpy as np
import pytest

from doublebubble import fdcheck, geometry, grid, search, tripod
from doublebubble.gauss1d import single_bubble_ode_residual, single_bubble_profile
from doublebubble.tripod import BASIS
from doublebubble.verify import _curved_cluster, simplex_grid

VERDICTS = {}
SEED = 20240607


def record(n, title, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    VERDICTS[n] = f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}; {elapsed:.1f}s (< {budget:g}s)"
    return ok


def random_points(rng, n, radius):
    r = radius * np.sqrt(rng.random(n))
    a = 2 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(a), r * np.sin(a)]) @ BASIS.T


def test_01_symmetric_point_profile():
    t0 = time.perf_counter()
    val = tripod.model_profile(np.full(3, 1 / 3))
    err = abs(val - 3 / (2 * math.sqrt(2 * math.pi)))
    dt = time.perf_counter() - t0
    assert record(1, "symmetric-point profile", err <= 1e-8 and abs(val - 0.5984134206) <= 1e-8,
                  f"I_m = {val:.10f}, error {err:.1e} (tol 1e-8)", dt, 1)


def test_02_round_trip():
    rng = np.random.default_rng(SEED + 2)
    t0 = time.perf_counter()
    worst = 0.0
    for x in random_points(rng, 200, 4.0):
        worst = max(worst, np.linalg.norm(tripod.invert_volume_map(tripod.volume_map(x)) - x))
    dt = time.perf_counter() - t0
    assert record(2, "diffeomorphism round trip", worst <= 1e-7, f"max |x' - x| = {worst:.2e} (tol 1e-7), 200 pts",
                  dt, 30)


def test_03_jacobian_identity():
    rng = np.random.default_rng(SEED + 3)
    t0 = time.perf_counter()
    worst = 0.0
    for x in random_points(rng, 100, 4.0):
        fd = fdcheck.jacobian(tripod.volume_map, x)
        worst = max(worst, np.abs(tripod.volume_jacobian(x).m33 @ BASIS - fd).max())
    dt = time.perf_counter() - t0
    assert record(3, "Jacobian identity", worst <= 1e-6, f"max entry error {worst:.2e} (tol 1e-6), 100 pts", dt, 30)


@pytest.fixture(scope="module")
def interior_grid_results():
    pts = simplex_grid(14, 0.01)
    t0 = time.perf_counter()
    g_err = h_err = tr = 0.0
    for v in pts:
        x = tripod.invert_volume_map(v)
        f = lambda u: tripod.model_profile(u, x0=x)  # noqa: E731
        g_err = max(g_err, np.abs(BASIS.T @ (x / math.sqrt(2)) - fdcheck.gradient(f, v, h=1e-4)).max())
        H = tripod.hessian_at(x).m22
        h_err = max(h_err, np.abs(H - fdcheck.hessian(f, v, h=1e-3)).max())
        tr = max(tr, abs(-np.trace(np.linalg.inv(H)) - 2 * tripod.perimeter(x)))
    return len(pts), g_err, h_err, tr, time.perf_counter() - t0


def test_04_profile_derivatives(interior_grid_results):
    n, g_err, h_err, _, dt = interior_grid_results
    assert record(4, "gradient/Hessian identities", g_err <= 1e-5 and h_err <= 1e-4,
                  f"grad err {g_err:.2e} (tol 1e-5), Hess err {h_err:.2e} (tol 1e-4), {n} grid pts", dt, 300)


def test_05_trace_identity(interior_grid_results):
    n, _, _, tr, dt = interior_grid_results
    assert record(5, "trace identity", tr <= 1e-6, f"max residual {tr:.2e} (tol 1e-6), {n} grid pts", dt, 300)


def test_06_boundary_agreement():
    rng = np.random.default_rng(SEED + 6)
    t0 = time.perf_counter()
    worst, monotone = 0.0, True
    for _ in range(10):
        b = rng.uniform(0.05, 0.95)
        vb = np.insert(np.array([b, 1 - b]), int(rng.integers(3)), 0.0)
        errs = []
        for eps in (1e-1, 1e-2, 1e-3):
            v = vb + eps * (np.full(3, 1 / 3) - vb)
            errs.append(abs(tripod.model_profile(v) - single_bubble_profile(v.max())))
        worst = max(worst, errs[-1])
        monotone &= errs[0] > errs[1] > errs[2]
    dt = time.perf_counter() - t0
    assert record(6, "boundary agreement", worst <= 1e-2 and monotone,
                  f"max error at eps=1e-3 {worst:.2e} (tol 1e-2), decreasing: {monotone}, 10 rays", dt, 60)


def test_07_translation_variations():
    rng = np.random.default_rng(SEED + 7)
    t0 = time.perf_counter()
    e1 = eq = 0.0
    for x in random_points(rng, 50, 3.0):
        a = 2 * math.pi * rng.random()
        w = BASIS @ np.array([math.cos(a), math.sin(a)])
        s = geometry.analytic_tripod_stats(x)
        lam = tripod.lagrange_multiplier(x)
        dP = fdcheck.derivative(lambda t: tripod.perimeter(x + t * w), h=1e-3)
        e1 = max(e1, abs(dP - lam @ (s.M @ (BASIS.T @ w))))
        d2P = fdcheck.second_derivative(lambda t: tripod.perimeter(x + t * w), h=1e-2)
        d2V = fdcheck.second_derivative(lambda t: tripod.volume_map(x + t * w), h=1e-2)
        eq = max(eq, abs(d2P - lam @ d2V - geometry.index_form_closed(x, w)))
    dt = time.perf_counter() - t0
    assert record(7, "translation variations", e1 <= 1e-6 and eq <= 1e-5,
                  f"first variation err {e1:.2e} (tol 1e-6), Q err {eq:.2e} (tol 1e-5), 50 pairs", dt, 120)


def test_08_matrix_cauchy_schwarz():
    rng = np.random.default_rng(SEED + 8)
    t0 = time.perf_counter()
    analytic = [geometry.analytic_tripod_stats(x) for x in random_points(rng, 20, 3.0)]
    generated = list(analytic)
    for x in random_points(rng, 4, 1.5):
        generated.append(geometry.grid_perimeter(grid.make_tripod_grid(x, 6.0, 256))[1])
    generated.append(geometry.grid_perimeter(_curved_cluster(256))[1])
    for v in rng.dirichlet(np.ones(3) * 3, 5):
        generated.append(geometry.one_dim_competitor(v, theta=tuple(rng.normal(size=2))).stats())
        generated.append(geometry.grid_perimeter(grid.make_stripe_grid(
            *geometry.one_dim_competitor(v).thresholds, resolution=256))[1])
    worst = min(geometry.matrix_cs_gap(s) for s in generated)
    eqdev = max(abs(geometry.matrix_cs_gap(s)) for s in analytic)
    dt = time.perf_counter() - t0
    assert record(8, "matrix Cauchy-Schwarz", worst >= -1e-8 and eqdev <= 1e-10,
                  f"min eig {worst:.2e} over {len(generated)} stats (>= -1e-8), tripod equality {eqdev:.1e} "
                  f"(tol 1e-10)", dt, 60)


def test_09_dichotomy():
    rng = np.random.default_rng(SEED + 9)
    t0 = time.perf_counter()
    trip = [geometry.dichotomy_rank(geometry.analytic_tripod_stats(x)) for x in random_points(rng, 20, 3.0)]
    one = [geometry.dichotomy_rank(geometry.one_dim_competitor(v, theta=tuple(rng.normal(size=2))).stats())
           for v in rng.dirichlet(np.ones(3) * 2, 20)]
    dt = time.perf_counter() - t0
    assert record(9, "dichotomy", set(trip) == {2} and set(one) == {1},
                  f"tripod ranks {sorted(set(trip))}, one-dim ranks {sorted(set(one))}, 20 each", dt, 10)


SEARCH_VOLUMES = ((1 / 3, 1 / 3, 1 / 3), (0.5, 0.3, 0.2), (0.6, 0.25, 0.15))
SEARCH_SEEDS = (0, 1, 2)


def test_10_double_bubble_evidence():
    t0 = time.perf_counter()
    lines, ok = [], True
    for v in SEARCH_VOLUMES:
        v = np.array(v)
        Im = tripod.model_profile(v)
        comp = geometry.one_dim_competitor(v).perimeter
        ok &= comp >= 1.10 * Im
        lines.append(f"v={np.round(v, 3).tolist()} one-dim/I_m={comp / Im:.3f}")
        for seed in SEARCH_SEEDS:
            r = search.search(v, search.preset("accurate", seed=seed), "random")
            ang = np.asarray(r.tripleJunctionAngles, dtype=float)
            avm = np.asarray(r.areasVsModel, dtype=float)
            gap = r.gapToModel / Im
            good = (r.success and abs(gap) <= 0.05 and np.all(np.abs(ang - 120) <= 6)
                    and np.all(np.abs(avm) <= 0.05))
            ok &= bool(good)
            lines.append(f"  seed {seed}: gap {gap:+.4f}, angles {np.round(ang, 1).tolist()}, "
                         f"areas {np.round(avm, 3).tolist()}{'' if good else '  <-- FAIL'}")
    dt = time.perf_counter() - t0
    passed = record(10, "double-bubble evidence",
                    ok, "9 random-start searches at 512 (gap 5%, angles 6 deg, areas 5%), one-dim >= 1.10 I_m",
                    dt, 1800)
    VERDICTS[10] += "\n" + "\n".join("      " + ln for ln in lines)
    assert passed


def test_11_single_bubble_ode():
    t0 = time.perf_counter()
    worst = max(abs(single_bubble_ode_residual(v)) for v in np.arange(1, 98) / 98)
    dt = time.perf_counter() - t0
    assert record(11, "single-bubble ODE", worst <= 1e-5, f"max residual {worst:.2e} (tol 1e-5), 97 pts", dt, 1)


def test_12_caffarelli_scaling():
    t0 = time.perf_counter()
    ok, worst = True, 0.0
    for v in (np.full(3, 1 / 3), np.array([0.5, 0.3, 0.2]), np.array([0.6, 0.25, 0.15])):
        base = tripod.model_profile(v)
        for K in (0.25, 1.0, 4.0):
            b = tripod.strongly_convex_lower_bound(K, v)
            worst = max(worst, abs(b - math.sqrt(K) * base))
            ok &= b == math.sqrt(K) * base
    dt = time.perf_counter() - t0
    assert record(12, "strongly log-concave scaling", ok, f"max |bound - sqrt(K) I_m| = {worst:.1e} (exact)", dt, 1)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
