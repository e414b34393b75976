"""One-dimensional Gaussian primitives and the single-bubble profile.

``Phi`` is evaluated through the complementary error function
(``scipy.special.erfc``, the Cephes implementation, relative accuracy near
machine epsilon over the whole line).  The quantile ``Phi_inv`` starts from
Acklam's rational approximation (relative error < 1.2e-9) and is polished by
two Newton steps on ``Phi``, each of which squares the error.
"""
import math

import numpy as np
from scipy.special import erfc

from ._accel import njit
from .errors import DomainError

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Acklam's coefficients.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _scalar_out(x, out):
    return float(out) if np.ndim(x) == 0 else out


def phi(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return _scalar_out(x, INV_SQRT_2PI * np.exp(-0.5 * x * x))


def Phi(x):
    """Standard normal CDF, ``erfc(-x/sqrt 2)/2``."""
    x = np.asarray(x, dtype=float)
    return _scalar_out(x, 0.5 * erfc(-x / SQRT2))


def Phi_upper(x):
    """Upper tail ``1 - Phi(x)`` without cancellation for large ``x``."""
    x = np.asarray(x, dtype=float)
    return _scalar_out(x, 0.5 * erfc(x / SQRT2))


def _acklam(p):
    z = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)
    if lo.any():
        q = np.sqrt(-2.0 * np.log(p[lo]))
        z[lo] = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if hi.any():
        q = np.sqrt(-2.0 * np.log1p(-p[hi]))
        z[hi] = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                  / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if mid.any():
        q = p[mid] - 0.5
        r = q * q
        z[mid] = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
                  / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    return z


def Phi_inv(p):
    """Standard normal quantile for ``p`` in the open interval (0, 1).

    Raises DomainError for ``p`` outside (0, 1).
    """
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if not np.all((p_arr > 0.0) & (p_arr < 1.0)):
        raise DomainError("Phi_inv requires 0 < p < 1")
    z = _acklam(p_arr)
    upper = p_arr > 0.5
    q = 1.0 - p_arr  # exact for p > 0.5 (Sterbenz)
    for _ in range(2):
        # Residual taken on whichever tail is small, so the Newton step keeps
        # full relative precision deep in either tail.
        resid = np.where(upper, q - 0.5 * erfc(z / SQRT2), 0.5 * erfc(-z / SQRT2) - p_arr)
        z = z - resid / (INV_SQRT_2PI * np.exp(-0.5 * z * z))
    return _scalar_out(p, z if np.ndim(p) else z[0])


def single_bubble_profile(v):
    """Gaussian isoperimetric profile ``phi(Phi_inv(v))`` on [0, 1]; zero at the endpoints."""
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all((v_arr >= 0.0) & (v_arr <= 1.0)):
        raise DomainError("single_bubble_profile requires 0 <= v <= 1")
    out = np.zeros_like(v_arr)
    inner = (v_arr > 0.0) & (v_arr < 1.0)
    if inner.any():
        out[inner] = phi(Phi_inv(v_arr[inner]))
    return _scalar_out(v, out if np.ndim(v) else out[0])


def fd_step(v):
    """Finite-difference step used for profile derivatives at ``v``."""
    return max(1e-5, 1e-3 * min(v, 1.0 - v))


# min(v, 1-v) must exceed the largest stencil offset (one step h).
ODE_CUTOFF = 1e-4


def _second_difference(f, v, h):
    return (f(v + h) - 2.0 * f(v) + f(v - h)) / (h * h)


def single_bubble_second_derivative(v):
    """Richardson-extrapolated central second difference of the profile."""
    h = fd_step(v)
    coarse = _second_difference(single_bubble_profile, v, h)
    fine = _second_difference(single_bubble_profile, v, 0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def single_bubble_ode_residual(v):
    """``I''(v) I(v) + 1`` with ``I''`` from finite differences.

    The profile solves ``I'' = -1/I`` exactly, so the residual measures the
    finite-difference error only.  ``min(v, 1-v)`` must be at least
    ``ODE_CUTOFF``.
    """
    v = float(v)
    if not ODE_CUTOFF <= min(v, 1.0 - v):
        raise DomainError(f"v must satisfy min(v, 1-v) >= {ODE_CUTOFF} for the FD stencil")
    return single_bubble_second_derivative(v) * single_bubble_profile(v) + 1.0


# ---- scalar versions for compiled kernels -------------------------------------

@njit
def phi_s(x):
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


@njit
def Phi_s(x):
    return 0.5 * math.erfc(-x / SQRT2)


@njit
def Phi_upper_s(x):
    return 0.5 * math.erfc(x / SQRT2)
