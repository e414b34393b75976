import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from doublebubble import gauss1d as g
from doublebubble.errors import DomainError

mpmath.mp.dps = 40


def mp_Phi(x):
    return float(mpmath.ncdf(x))


def test_phi_values():
    assert g.phi(0.0) == pytest.approx(0.3989422804014327, abs=1e-16)
    assert g.phi(1.0) == g.phi(-1.0)
    assert abs(g.phi(2.0) * math.sqrt(2 * math.pi) * math.exp(2.0) - 1.0) <= 1e-14


def test_phi_vectorised():
    xs = np.linspace(-3, 3, 7)
    assert np.allclose(g.phi(xs), [g.phi(float(x)) for x in xs], rtol=0, atol=1e-17)


def test_Phi_values():
    assert g.Phi(0.0) == 0.5
    assert abs(g.Phi(8.0) - 1.0) <= 1e-15


@pytest.mark.parametrize("x", [-30.0, -8.0, -3.5, -1.0, -1e-3, 0.0, 0.7, 2.0, 5.0, 8.0])
def test_Phi_matches_mpmath(x):
    assert abs(g.Phi(x) - mp_Phi(x)) <= 1e-15
    # tail accuracy is relative
    ref = float(1 - mpmath.ncdf(x))
    assert g.Phi_upper(x) == pytest.approx(ref, rel=1e-13, abs=1e-300)


@given(st.floats(-40, 40))
def test_Phi_reflection(x):
    assert abs(g.Phi(x) + g.Phi(-x) - 1.0) <= 1e-15


def test_Phi_strictly_increasing():
    xs = np.linspace(-7, 7, 2001)
    assert np.all(np.diff(g.Phi(xs)) > 0)


def test_Phi_inv_examples():
    assert g.Phi_inv(0.5) == 0.0
    assert abs(g.Phi_inv(g.Phi(1.0)) - 1.0) <= 1e-12


def test_Phi_inv_tail_against_bisection():
    p = 0.999999
    lo, hi = 0.0, 10.0
    for _ in range(200):  # bisection on 1 - Phi, which is exact in this tail
        mid = 0.5 * (lo + hi)
        if g.Phi_upper(mid) > 1 - p:
            lo = mid
        else:
            hi = mid
    z = g.Phi_inv(p)
    assert math.isfinite(z)
    assert abs(z - lo) <= 1e-9
    assert abs(g.Phi(z) - p) <= 1e-11


@given(st.floats(0.001, 0.999))
def test_Phi_inv_round_trip(p):
    assert abs(g.Phi(g.Phi_inv(p)) - p) <= 1e-13


@given(st.floats(1e-300, 0.5, exclude_min=False))
def test_Phi_inv_matches_mpmath(p):
    ref = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1)) if p > 1e-15 else None
    z = g.Phi_inv(p)
    if ref is not None:
        assert z == pytest.approx(ref, rel=1e-12, abs=1e-13)
    assert math.isfinite(z)


def test_Phi_inv_monotone():
    ps = np.linspace(1e-6, 1 - 1e-6, 5001)
    assert np.all(np.diff(g.Phi_inv(ps)) > 0)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_Phi_inv_rejects(p):
    with pytest.raises(DomainError):
        g.Phi_inv(p)


def test_single_bubble_profile_examples():
    assert g.single_bubble_profile(0.5) == pytest.approx(0.3989422804014327, abs=1e-16)
    assert g.single_bubble_profile(0.0) == 0.0
    assert g.single_bubble_profile(1.0) == 0.0


@given(st.floats(0.0, 1.0))
def test_single_bubble_profile_symmetric(v):
    assert abs(g.single_bubble_profile(v) - g.single_bubble_profile(1.0 - v)) <= 1e-15


def test_single_bubble_profile_concave():
    vs = np.linspace(0.0, 1.0, 1001)
    assert np.all(np.diff(g.single_bubble_profile(vs), 2) <= 1e-15)


@pytest.mark.parametrize("v", [-1e-9, 1.0 + 1e-9])
def test_single_bubble_profile_rejects(v):
    with pytest.raises(DomainError):
        g.single_bubble_profile(v)


@given(st.floats(0.02, 0.98))
def test_profile_derivative_is_minus_quantile(v):
    h = 1e-6
    d = (g.single_bubble_profile(v + h) - g.single_bubble_profile(v - h)) / (2 * h)
    assert abs(d + g.Phi_inv(v)) <= 1e-6


def test_ode_residual_examples():
    assert abs(g.single_bubble_ode_residual(0.5)) <= 1e-7
    assert abs(g.single_bubble_ode_residual(0.2)) <= 1e-5
    assert abs(g.single_bubble_ode_residual(0.8) - g.single_bubble_ode_residual(0.2)) <= 1e-8


def test_ode_residual_97_points():
    vs = np.arange(1, 98) / 98
    assert max(abs(g.single_bubble_ode_residual(v)) for v in vs) <= 1e-5


def test_ode_residual_cutoff():
    with pytest.raises(DomainError):
        g.single_bubble_ode_residual(g.ODE_CUTOFF / 2)


def test_fd_step():
    assert g.fd_step(0.5) == pytest.approx(5e-4)
    assert g.fd_step(1e-4) == 1e-5
