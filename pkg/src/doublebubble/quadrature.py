"""Adaptive Gauss-Kronrod (G7/K15) quadrature of the tripod wedge probability.

A tripod cell ``x + Omega_i`` is the intersection of two half-planes whose
unit normals meet at 120 degrees.  Writing ``U = (Z_i - Z_j)/sqrt 2`` and
``W = (Z_i - Z_k)/sqrt 2`` (standard normals with correlation 1/2), the cell
measure is the orthant probability ``P(U > a, W > b)``, reduced to

    int_a^inf phi(u) Phi((u - 2 b) / sqrt 3) du

and integrated over ``[max(a, -CUTOFF), CUTOFF]``.
"""
import math

import numpy as np
from scipy.special import erfc

from ._accel import njit, pick
from .errors import NumericalError
from .gauss1d import Phi_s, phi_s

CUTOFF = 8.5
SQRT3 = math.sqrt(3.0)
MAX_INTERVALS = 2000

# QUADPACK qk15 nodes (descending, last is the centre) and weights.
XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

# Full 15-point node/weight layout for the vectorised fallback.
_NODES = np.concatenate([-XGK[:7], [0.0], XGK[6::-1]])
_WK = np.concatenate([WGK[:7], [WGK[7]], WGK[6::-1]])
_WG = np.zeros(15)
_WG[[1, 3, 5]] = WG[:3]
_WG[7] = WG[3]
_WG[[9, 11, 13]] = WG[2::-1]


@njit
def _integrand(u, b):
    return phi_s(u) * Phi_s((u - 2.0 * b) / SQRT3)


@njit
def _gk15(lo, hi, b):
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    fc = _integrand(centre, b)
    kron = WGK[7] * fc
    gauss = WG[3] * fc
    for j in range(7):
        dx = half * XGK[j]
        fsum = _integrand(centre - dx, b) + _integrand(centre + dx, b)
        kron += WGK[j] * fsum
        if j % 2 == 1:
            gauss += WG[j // 2] * fsum
    return kron * half, abs((kron - gauss) * half)


@njit
def _wedge_numba(a, b, tol):
    lo = max(a, -CUTOFF)
    if lo >= CUTOFF:
        return 0.0, 0.0, True
    stack_lo = np.empty(64)
    stack_hi = np.empty(64)
    stack_lo[0] = lo
    stack_hi[0] = CUTOFF
    top = 1
    total = 0.0
    err = 0.0
    width = CUTOFF - lo
    n_int = 0
    ok = True
    while top > 0:
        top -= 1
        x0 = stack_lo[top]
        x1 = stack_hi[top]
        val, e = _gk15(x0, x1, b)
        n_int += 1
        local_tol = tol * (x1 - x0) / width
        if e <= local_tol or top >= 62 or n_int >= MAX_INTERVALS:
            if e > local_tol and e > 1e-15:
                ok = False
            total += val
            err += e
        else:
            mid = 0.5 * (x0 + x1)
            stack_lo[top] = mid
            stack_hi[top] = x1
            stack_lo[top + 1] = x0
            stack_hi[top + 1] = mid
            top += 2
    return total, err, ok


def _wedge_numpy(a, b, tol):
    lo = max(a, -CUTOFF)
    if lo >= CUTOFF:
        return 0.0, 0.0, True
    width = CUTOFF - lo
    stack = [(lo, CUTOFF)]
    total = err = 0.0
    n_int = 0
    ok = True
    while stack:
        x0, x1 = stack.pop()
        half = 0.5 * (x1 - x0)
        u = 0.5 * (x0 + x1) + half * _NODES
        f = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi) * 0.5 * erfc((2.0 * b - u) / (SQRT3 * math.sqrt(2.0)))
        val = half * float(_WK @ f)
        e = abs(val - half * float(_WG @ f))
        n_int += 1
        local_tol = tol * (x1 - x0) / width
        if e <= local_tol or len(stack) >= 62 or n_int >= MAX_INTERVALS:
            if e > local_tol and e > 1e-15:
                ok = False
            total += val
            err += e
        else:
            mid = 0.5 * (x0 + x1)
            stack.append((mid, x1))
            stack.append((x0, mid))
    return total, err, ok


wedge_kernel = pick(_wedge_numba, _wedge_numpy)


def wedge_probability(a, b, tol=1e-12):
    """``P(U > a, W > b)`` for standard normals with correlation 1/2.

    Returns the value; raises NumericalError (with the achieved error
    estimate) when the adaptive subdivision cannot meet ``tol``.
    """
    val, err, ok = wedge_kernel(float(a), float(b), float(tol))
    if not ok:
        raise NumericalError(f"wedge quadrature did not converge (error estimate {err:.3e})", estimate=err)
    return min(max(val, 0.0), 1.0)
