"""Hot loops over grid clusters, each with a numba and a numpy implementation.

Both kernels work with the normal-corrected cut functional

    P = sum over label cuts e of  w(e) / (|n_x| + |n_y|),

where ``w(e)`` is the exact Gaussian length of the pixel edge and ``n`` the
unit normal estimated from the difference of the smoothed indicators of the
two labels.  ``perimeter_kernel`` evaluates it over the whole grid;
``anneal_sweep`` runs one Metropolis pass over boundary sites, updating the
smoothed gradients in a window around each proposal so that the energy
change is exact and local.

The module-level names dispatch on ``DOUBLEBUBBLE_BACKEND``; the
``*_numba`` / ``*_numpy`` variants stay importable for benchmarking.
Labels inside kernels are zero-based (0, 1, 2).
"""
import math

import numpy as np
from scipy.ndimage import convolve1d

from ._accel import njit, pick

# Oriented pair lookup: (a, b) -> index into PAIRS = ((0,1),(1,2),(2,0)) and
# the sign taking the a->b normal to the PAIRS orientation.
PAIR_INDEX = np.array([[-1, 0, 2], [0, -1, 1], [2, 1, -1]], dtype=np.int64)
PAIR_SIGN = np.array([[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]])

SMOOTHING_SIGMA = 1.5  # pixels
KERNEL_RADIUS = 5


def smoothing_kernels(sigma=SMOOTHING_SIGMA, radius=KERNEL_RADIUS):
    """Normalised Gaussian ``g`` and its derivative ``g'`` on ``-radius..radius`` (pixel units)."""
    u = np.arange(-radius, radius + 1, dtype=float)
    g = np.exp(-0.5 * (u / sigma) ** 2)
    g /= g.sum()
    return g, -u / sigma**2 * g


def label_gradients(lab, sigma=SMOOTHING_SIGMA, radius=KERNEL_RADIUS):
    """``(d/dx, d/dy)`` of each smoothed indicator; shape (3, 2, n, n), zero outside the grid."""
    g, dg = smoothing_kernels(sigma, radius)
    n = lab.shape[0]
    grad = np.empty((3, 2, n, n))
    for k in range(3):
        chi = (lab == k).astype(float)
        grad[k, 0] = convolve1d(convolve1d(chi, dg, axis=1, mode="constant"), g, axis=0, mode="constant")
        grad[k, 1] = convolve1d(convolve1d(chi, g, axis=1, mode="constant"), dg, axis=0, mode="constant")
    return grad


# ---- cut functional ---------------------------------------------------------------

@njit
def _cut(lab, grad, phi_edge, mass, r, c, axis):
    """Contribution of the edge right of (axis 0) or above (axis 1) pixel (r, c).

    Returns (pair index or -1, orientation sign, corrected length, raw length, nx, ny).
    """
    n = lab.shape[0]
    if axis == 0:
        if c + 1 >= n:
            return -1, 0.0, 0.0, 0.0, 0.0, 0.0
        r2, c2 = r, c + 1
        w0 = phi_edge[c + 1] * mass[r]
    else:
        if r + 1 >= n:
            return -1, 0.0, 0.0, 0.0, 0.0, 0.0
        r2, c2 = r + 1, c
        w0 = phi_edge[r + 1] * mass[c]
    a = lab[r, c]
    b = lab[r2, c2]
    if a == b:
        return -1, 0.0, 0.0, 0.0, 0.0, 0.0
    gx = grad[b, 0, r, c] + grad[b, 0, r2, c2] - grad[a, 0, r, c] - grad[a, 0, r2, c2]
    gy = grad[b, 1, r, c] + grad[b, 1, r2, c2] - grad[a, 1, r, c] - grad[a, 1, r2, c2]
    g = math.sqrt(gx * gx + gy * gy)
    if g > 0.0:
        nx = gx / g
        ny = gy / g
    elif axis == 0:
        nx, ny = 1.0, 0.0
    else:
        nx, ny = 0.0, 1.0
    return PAIR_INDEX[a, b], PAIR_SIGN[a, b], w0 / (abs(nx) + abs(ny)), w0, nx, ny


@njit
def perimeter_numba(lab, grad, phi_edge, mass):
    n = lab.shape[0]
    areas = np.zeros(3)
    nsum = np.zeros((3, 2))
    raw = np.zeros(3)
    for r in range(n):
        for c in range(n):
            a = lab[r, c]
            for axis in range(2):
                if axis == 0 and (c + 1 >= n or lab[r, c + 1] == a):
                    continue
                if axis == 1 and (r + 1 >= n or lab[r + 1, c] == a):
                    continue
                k, s, wlen, w0, nx, ny = _cut(lab, grad, phi_edge, mass, r, c, axis)
                if k < 0:
                    continue
                areas[k] += wlen
                raw[k] += w0
                nsum[k, 0] += s * nx * wlen
                nsum[k, 1] += s * ny * wlen
    return areas, nsum, raw


def _cut_contrib(a, b, gsum, w0, default):
    idx = np.arange(a.size)
    gx = gsum[b, 0, idx] - gsum[a, 0, idx]
    gy = gsum[b, 1, idx] - gsum[a, 1, idx]
    norm = np.sqrt(gx * gx + gy * gy)
    safe = norm > 0.0
    div = np.where(safe, norm, 1.0)
    nx = np.where(safe, gx / div, default[0])
    ny = np.where(safe, gy / div, default[1])
    wlen = w0 / (np.abs(nx) + np.abs(ny))
    k = PAIR_INDEX[a, b]
    s = PAIR_SIGN[a, b]
    areas = np.bincount(k, weights=wlen, minlength=3)
    raw = np.bincount(k, weights=w0, minlength=3)
    nsum = np.stack([np.bincount(k, weights=s * nx * wlen, minlength=3),
                     np.bincount(k, weights=s * ny * wlen, minlength=3)], axis=1)
    return areas, nsum, raw


def perimeter_numpy(lab, grad, phi_edge, mass):
    areas = np.zeros(3)
    nsum = np.zeros((3, 2))
    raw = np.zeros(3)
    rr, cc = np.nonzero(lab[:, :-1] != lab[:, 1:])
    if rr.size:
        gsum = grad[:, :, rr, cc] + grad[:, :, rr, cc + 1]
        out = _cut_contrib(lab[rr, cc], lab[rr, cc + 1], gsum, phi_edge[cc + 1] * mass[rr], (1.0, 0.0))
        areas, nsum, raw = areas + out[0], nsum + out[1], raw + out[2]
    rr, cc = np.nonzero(lab[:-1, :] != lab[1:, :])
    if rr.size:
        gsum = grad[:, :, rr, cc] + grad[:, :, rr + 1, cc]
        out = _cut_contrib(lab[rr, cc], lab[rr + 1, cc], gsum, phi_edge[rr + 1] * mass[cc], (0.0, 1.0))
        areas, nsum, raw = areas + out[0], nsum + out[1], raw + out[2]
    return areas, nsum, raw


perimeter_kernel = pick(perimeter_numba, perimeter_numpy)


# ---- annealing sweep ----------------------------------------------------------------

@njit
def _local_energy(lab, grad, phi_edge, mass, r0, r1, c0, c1):
    n = lab.shape[0]
    total = 0.0
    for r in range(r0, r1 + 1):
        for c in range(c0, c1 + 1):
            a = lab[r, c]
            if c + 1 < n and lab[r, c + 1] != a:
                total += _cut(lab, grad, phi_edge, mass, r, c, 0)[2]
            if r + 1 < n and lab[r + 1, c] != a:
                total += _cut(lab, grad, phi_edge, mass, r, c, 1)[2]
    return total


@njit
def _move(lab, grad, g, dg, r, c, a, b):
    """Relabel (r, c) from a to b and update both smoothed gradients."""
    n = lab.shape[0]
    rad = (g.shape[0] - 1) // 2
    lab[r, c] = b
    for i in range(-rad, rad + 1):
        rr = r + i
        if rr < 0 or rr >= n:
            continue
        for j in range(-rad, rad + 1):
            cc = c + j
            if cc < 0 or cc >= n:
                continue
            kx = g[i + rad] * dg[j + rad]
            ky = dg[i + rad] * g[j + rad]
            grad[a, 0, rr, cc] -= kx
            grad[a, 1, rr, cc] -= ky
            grad[b, 0, rr, cc] += kx
            grad[b, 1, rr, cc] += ky


@njit
def _candidate(lab, r, c, a, u):
    n = lab.shape[0]
    c0 = -1
    c1 = -1
    for q in range(4):
        if q == 0:
            rr, cc = r + 1, c
        elif q == 1:
            rr, cc = r - 1, c
        elif q == 2:
            rr, cc = r, c + 1
        else:
            rr, cc = r, c - 1
        if rr < 0 or rr >= n or cc < 0 or cc >= n:
            continue
        lq = lab[rr, cc]
        if lq != a:
            if c0 < 0:
                c0 = lq
            elif lq != c0:
                c1 = lq
    if c1 >= 0 and u < 0.5:
        return c1
    return c0


@njit
def anneal_sweep_numba(lab, grad, g, dg, rows, cols, u, phi_edge, mass, dens, target, meas, mu, temp):
    n = lab.shape[0]
    rad = (g.shape[0] - 1) // 2
    accepted = 0
    d_energy = 0.0
    for s in range(rows.shape[0]):
        r = rows[s]
        c = cols[s]
        a = lab[r, c]
        b = _candidate(lab, r, c, a, u[2 * s])
        if b < 0:
            continue
        r0 = max(r - rad - 1, 0)
        r1 = min(r + rad, n - 1)
        c0 = max(c - rad - 1, 0)
        c1 = min(c + rad, n - 1)
        before = _local_energy(lab, grad, phi_edge, mass, r0, r1, c0, c1)
        _move(lab, grad, g, dg, r, c, a, b)
        after = _local_energy(lab, grad, phi_edge, mass, r0, r1, c0, c1)
        wp = mass[r] * mass[c]
        dpen = mu * (abs(meas[a] - wp - target[a]) - abs(meas[a] - target[a])
                     + abs(meas[b] + wp - target[b]) - abs(meas[b] - target[b]))
        de = after - before + dpen
        ok = de <= 0.0
        if not ok and temp > 0.0:
            ok = u[2 * s + 1] < math.exp(-de / (temp * dens[r] * dens[c]))
        if ok:
            meas[a] -= wp
            meas[b] += wp
            accepted += 1
            d_energy += de
        else:
            _move(lab, grad, g, dg, r, c, b, a)
    return accepted, d_energy


def anneal_sweep_numpy(lab, grad, g, dg, rows, cols, u, phi_edge, mass, dens, target, meas, mu, temp):
    # Same update rule with the window work vectorised; proposals stay sequential.
    n = lab.shape[0]
    rad = (g.shape[0] - 1) // 2
    kx = np.outer(g, dg)
    ky = np.outer(dg, g)
    accepted = 0
    d_energy = 0.0

    def window_energy(r0, r1, c0, c1):
        e = 0.0
        cmax = min(c1, n - 2)  # edges (r, c)-(r, c+1)
        if cmax >= c0:
            rr, cc = np.nonzero(lab[r0:r1 + 1, c0:cmax + 1] != lab[r0:r1 + 1, c0 + 1:cmax + 2])
            if rr.size:
                rr, cc = rr + r0, cc + c0
                gsum = grad[:, :, rr, cc] + grad[:, :, rr, cc + 1]
                e += _cut_contrib(lab[rr, cc], lab[rr, cc + 1], gsum,
                                  phi_edge[cc + 1] * mass[rr], (1.0, 0.0))[0].sum()
        rmax = min(r1, n - 2)  # edges (r, c)-(r+1, c)
        if rmax >= r0:
            rr, cc = np.nonzero(lab[r0:rmax + 1, c0:c1 + 1] != lab[r0 + 1:rmax + 2, c0:c1 + 1])
            if rr.size:
                rr, cc = rr + r0, cc + c0
                gsum = grad[:, :, rr, cc] + grad[:, :, rr + 1, cc]
                e += _cut_contrib(lab[rr, cc], lab[rr + 1, cc], gsum,
                                  phi_edge[rr + 1] * mass[cc], (0.0, 1.0))[0].sum()
        return e

    def move(r, c, a, b):
        lab[r, c] = b
        i0, i1 = max(r - rad, 0), min(r + rad, n - 1)
        j0, j1 = max(c - rad, 0), min(c + rad, n - 1)
        win = (slice(i0 - r + rad, i1 - r + rad + 1), slice(j0 - c + rad, j1 - c + rad + 1))
        tgt = (slice(i0, i1 + 1), slice(j0, j1 + 1))
        grad[a, 0][tgt] -= kx[win]
        grad[a, 1][tgt] -= ky[win]
        grad[b, 0][tgt] += kx[win]
        grad[b, 1][tgt] += ky[win]

    for s in range(rows.shape[0]):
        r = int(rows[s])
        c = int(cols[s])
        a = int(lab[r, c])
        cands = []
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < n and 0 <= cc < n:
                lq = int(lab[rr, cc])
                if lq != a and lq not in cands:
                    cands.append(lq)
        if not cands:
            continue
        b = cands[1] if len(cands) > 1 and u[2 * s] < 0.5 else cands[0]
        r0, r1 = max(r - rad - 1, 0), min(r + rad, n - 1)
        c0, c1 = max(c - rad - 1, 0), min(c + rad, n - 1)
        before = window_energy(r0, r1, c0, c1)
        move(r, c, a, b)
        after = window_energy(r0, r1, c0, c1)
        wp = mass[r] * mass[c]
        dpen = mu * (abs(meas[a] - wp - target[a]) - abs(meas[a] - target[a])
                     + abs(meas[b] + wp - target[b]) - abs(meas[b] - target[b]))
        de = after - before + dpen
        ok = de <= 0.0
        if not ok and temp > 0.0:
            ok = u[2 * s + 1] < math.exp(-de / (temp * dens[r] * dens[c]))
        if ok:
            meas[a] -= wp
            meas[b] += wp
            accepted += 1
            d_energy += de
        else:
            move(r, c, b, a)
    return accepted, d_energy


anneal_sweep = pick(anneal_sweep_numba, anneal_sweep_numpy)


def boundary_sites(lab):
    """Row/column indices of pixels with a differently labelled 4-neighbour (raster order)."""
    m = np.zeros(lab.shape, dtype=bool)
    d = lab[1:, :] != lab[:-1, :]
    m[1:, :] |= d
    m[:-1, :] |= d
    d = lab[:, 1:] != lab[:, :-1]
    m[:, 1:] |= d
    m[:, :-1] |= d
    rows, cols = np.nonzero(m)
    return rows.astype(np.int64), cols.astype(np.int64)
