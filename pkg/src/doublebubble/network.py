"""Sharp-interface refinement of a three-cell partition with one junction.

A partition whose three interfaces leave a single junction ``J`` and run off
to infinity is described by three curves ``z(r) = J + r (cos t(r), sin t(r))``,
``t`` piecewise linear in ``r`` on ``[0, r_max]`` and constant beyond.  The
curves may bend; nothing forces them to be straight.

Both the Gaussian length and the cell measures reduce to one-dimensional
integrals along the curves.  For the measures this uses the radial field
``F(z) = (1 - exp(-|z|^2/2)) / (2 pi |z|^2) z`` whose divergence is the
standard Gaussian density: a sector-like cell between curves ``a`` and ``b``
(counter-clockwise) has measure

    I(a) - I(b) + (t_b(inf) - t_a(inf)) / (2 pi),   I(c) = int_c F . (dy, -dx),

where the last term is the flux through the arc at infinity.  The straight
tails beyond ``r_max`` are integrated in closed form.

This module extracts such a network from labels, minimizes the length at
fixed measures and rasterises the result.  It is used to settle the junction
position, along which the pixel energies are too flat to resolve.
"""
import math

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr

from .grid import axis_masses

TWO_PI = 2.0 * math.pi


class Network:
    def __init__(self, knots, samples=400):
        self.knots = np.asarray(knots, dtype=float)
        self.r = np.linspace(0.0, self.knots[-1], samples + 1)
        # hat functions: theta(r) = W @ theta_knots
        eye = np.eye(self.knots.size)
        self.W = np.stack([np.interp(self.r, self.knots, eye[k]) for k in range(self.knots.size)], axis=1)

    def split(self, params):
        J = params[:2]
        th = params[2:].reshape(3, self.knots.size)
        return J, th

    def curves(self, params):
        J, th = self.split(params)
        t = th @ self.W.T  # (3, samples + 1)
        return J, J[None, None, :] + self.r[None, :, None] * np.stack([np.cos(t), np.sin(t)], axis=-1), th[:, -1]

    def terms(self, params):
        """Per-curve Gaussian length and flux ``I``, each including the straight tail."""
        J, z, t_inf = self.curves(params)
        mid = 0.5 * (z[:, 1:] + z[:, :-1])
        dz = z[:, 1:] - z[:, :-1]
        r2 = (mid * mid).sum(-1)
        dens = np.exp(-0.5 * r2) / TWO_PI
        length = (dens * np.hypot(dz[..., 0], dz[..., 1])).sum(1)
        f = np.where(r2 > 1e-12, -np.expm1(-0.5 * r2) / (TWO_PI * np.maximum(r2, 1e-300)), 1.0 / (2 * TWO_PI))
        flux = (f * (mid[..., 0] * dz[..., 1] - mid[..., 1] * dz[..., 0])).sum(1)
        # tail z = J + s e for s > r_max: |z|^2 = (s + b)^2 + c^2
        e = np.stack([np.cos(t_inf), np.sin(t_inf)], axis=1)
        b = e @ J
        c = J[0] * e[:, 1] - J[1] * e[:, 0]
        R = self.knots[-1]
        length = length + np.exp(-0.5 * c * c) / math.sqrt(TWO_PI) * ndtr(-(R + b))
        flux = flux + np.arctan2(c, R + b) / TWO_PI
        return length, flux, t_inf

    def measures(self, params, cells):
        """Cell measures; ``cells[i]`` is the cell counter-clockwise after curve ``i``."""
        _, flux, t_inf = self.terms(params)
        out = np.zeros(3)
        for i in range(3):
            j = (i + 1) % 3
            out[cells[i]] = flux[i] - flux[j] + ((t_inf[j] - t_inf[i]) % TWO_PI) / TWO_PI
        return out

    def length(self, params):
        return float(self.terms(params)[0].sum())


def _circle_transitions(lab, R, centre, radius, n=2048):
    res = lab.shape[0]
    h = 2.0 * R / res
    ang = np.linspace(0.0, TWO_PI, n, endpoint=False)
    x = centre[0] + radius * np.cos(ang)
    y = centre[1] + radius * np.sin(ang)
    col = np.floor((x + R) / h).astype(int)
    row = np.floor((y + R) / h).astype(int)
    if col.min() < 0 or row.min() < 0 or col.max() >= res or row.max() >= res:
        return None
    s = lab[row, col]
    nxt = np.roll(s, -1)
    idx = np.nonzero(s != nxt)[0]
    out = {}
    for i in idx:
        key = (min(s[i], nxt[i]), max(s[i], nxt[i]))
        out.setdefault(key, []).append(ang[i] + math.pi / n)
    return s, out


def _circular_mean(a):
    return math.atan2(np.sin(a).mean(), np.cos(a).mean())


def extract(lab, R, knots):
    """Junction, knot angles and cell order from zero-based labels, or None."""
    res = lab.shape[0]
    h = 2.0 * R / res
    # junction: pixels whose 3x3 neighbourhood sees all three labels
    pad = np.pad(lab, 1, mode="edge")
    seen = np.zeros((3,) + lab.shape, dtype=bool)
    for dr in range(3):
        for dc in range(3):
            win = pad[dr:dr + res, dc:dc + res]
            for k in range(3):
                seen[k] |= win == k
    rows, cols = np.nonzero(seen.all(0))
    if rows.size == 0:
        return None
    xs = -R + (np.arange(res) + 0.5) * h
    J = np.array([np.median(xs[cols]), np.median(xs[rows])])
    pairs = [(0, 1), (1, 2), (0, 2)]
    th = np.full((3, knots.size), np.nan)
    for k, r in enumerate(knots):
        got = _circle_transitions(lab, R, J, max(r, 3.0 * h))
        if got is None:
            continue
        _, tr = got
        if set(tr) != set(pairs):
            continue
        for p, key in enumerate(pairs):
            th[p, k] = _circular_mean(np.asarray(tr[key]))
    for p in range(3):
        ok = np.isfinite(th[p])
        if not ok.any():
            return None
        # fill gaps from the nearest valid knot, then unwrap along r
        th[p] = np.interp(np.arange(knots.size), np.nonzero(ok)[0], th[p, ok])
        th[p] = np.unwrap(th[p])
    # counter-clockwise order of the curves at the innermost knot
    order = np.argsort(th[:, 0] % TWO_PI)
    th = th[order]
    curve_pairs = [pairs[i] for i in order]
    cells = []
    for i in range(3):
        shared = set(curve_pairs[i]) & set(curve_pairs[(i + 1) % 3])
        if len(shared) != 1:
            return None
        cells.append(shared.pop())
    return J, th, cells


def solve(net, q0, cells, v, tol=1e-9, maxiter=200):
    """SLSQP on the network length with the first two cell measures pinned."""
    v = np.asarray(v, dtype=float)
    cons = {"type": "eq", "fun": lambda q: net.measures(q, cells)[:2] - v[:2]}
    res = minimize(net.length, q0, method="SLSQP", constraints=[cons],
                   options={"maxiter": maxiter, "ftol": tol})
    return res.x, res


def refine(lab, v, R, knots=None, tol=1e-9, maxiter=200):
    """Minimise the network length at measures ``v`` starting from ``lab``.

    Returns ``(params, cells, net, info)`` or None when the labels do not
    show a single junction with three interfaces.
    """
    if knots is None:
        knots = np.linspace(0.0, 5.0, 11)
    knots = np.asarray(knots, dtype=float)
    ext = extract(lab, R, knots)
    if ext is None:
        return None
    J, th, cells = ext
    net = Network(knots)
    q, res = solve(net, np.concatenate([J, th.ravel()]), cells, v, tol, maxiter)
    info = {"success": bool(res.success), "iterations": int(res.nit), "length": net.length(q),
            "measureResidual": float(np.abs(net.measures(q, cells) - v).max())}
    return q, cells, net, info


def rasterise_matched(q, cells, net, v, R, res, rounds=8):
    """Rasterise, re-solving with nudged targets so the pixel measures approach ``v``.

    Moving the curves costs no perimeter, while every isolated flipped pixel
    adds a bump.  Nudging stalls on interfaces parallel to a grid axis, where
    the labels change a whole column at a time; the remainder is then moved
    as one contiguous step next to the curve (see :func:`_fill_step`).
    Returns the labels and their max measure deviation.
    """
    v = np.asarray(v, dtype=float)
    m = axis_masses(R, res)
    mass = np.outer(m, m)
    target = v.copy()
    best = None
    for k in range(rounds):
        if k:
            q, _ = solve(net, q, cells, target)
        lab = rasterise(q, cells, net.knots, R, res)
        err = np.array([mass[lab == c].sum() for c in range(3)]) - v
        if best is None or np.abs(err).max() < np.abs(best[2]).max():
            best = (q, lab, err)
        target = target - err
    q, lab, err = best
    if np.abs(err).max() > mass.max():
        lab, err = _fill_step(lab, err, q, cells, net.knots, R, mass)
    return lab, float(np.abs(err).max())


def _fill_step(lab, err, q, cells, knots, R, mass, passes=3):
    """Move the excess of one cell to another along their interface, nearest layer first.

    Candidates are the pixels of the donor touching the receiver; they are
    taken in order of distance from the curve (to a quarter pixel) and then
    of distance from the junction, so the moved pixels form a step.
    """
    res = lab.shape[0]
    h = 2.0 * R / res
    J, th = q[:2], q[2:].reshape(3, len(knots))
    xs = -R + (np.arange(res) + 0.5) * h
    err = err.copy()
    curve_of = {frozenset((cells[i - 1], cells[i])): i for i in range(3)}
    for _ in range(passes):
        a, b = int(np.argmax(err)), int(np.argmin(err))
        amount = min(err[a], -err[b])
        if amount <= 0.5 * mass.max():
            break
        isb = np.pad(lab == b, 1)
        touch = isb[:-2, 1:-1] | isb[2:, 1:-1] | isb[1:-1, :-2] | isb[1:-1, 2:]
        rows, cols = np.nonzero((lab == a) & touch)
        if rows.size == 0:
            break
        dx, dy = xs[cols] - J[0], xs[rows] - J[1]
        r = np.hypot(dx, dy)
        t = np.interp(r, knots, th[curve_of[frozenset((a, b))]])
        dist = np.abs(np.sin(np.arctan2(dy, dx) - t)) * r
        order = np.lexsort((r, np.round(4.0 * dist / h)))
        rows, cols = rows[order], cols[order]
        w = mass[rows, cols]
        n = int(np.searchsorted(np.cumsum(w) - 0.5 * w, amount))
        if n == 0:
            break
        lab = lab.copy()
        lab[rows[:n], cols[:n]] = b
        err[a] -= w[:n].sum()
        err[b] += w[:n].sum()
    return lab, err


def rasterise(q, cells, knots, R, res):
    """Zero-based labels of the network with parameters ``q`` on the pixel grid."""
    J, th = q[:2], q[2:].reshape(3, len(knots))
    h = 2.0 * R / res
    xs = -R + (np.arange(res) + 0.5) * h
    X, Y = np.meshgrid(xs, xs)  # rows are y
    dx, dy = X - J[0], Y - J[1]
    r = np.hypot(dx, dy)
    ang = np.arctan2(dy, dx)
    off = np.stack([(ang - np.interp(r, knots, th[i])) % TWO_PI for i in range(3)])
    # a pixel belongs to the sector after the curve it has passed most recently
    which = np.argmin(off, axis=0)
    return np.asarray(cells, dtype=np.int64)[which]
