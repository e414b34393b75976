"""Diffuse-interface relaxation of a three-phase cluster.

Annealing on a pixel lattice is good at finding the topology but poor at
moving a junction through a nearly flat angle landscape.  This module
relaxes a smooth version of the partition instead: three phase fields
``u = softmax(a)`` per pixel with the Gaussian-weighted Modica-Mortola energy

    sum_k  eps/2 * sum_edges rho |du_k|^2  +  sum_pixels mass * W(u_k) / eps,
    W(u) = u^2 (1 - u)^2,

and measure constraints ``sum mass * u_k = v_k`` enforced by an augmented
Lagrangian.  The result is used for geometry only (the perimeter is always
re-measured on the sharp labels), so the energy's calibration constant
does not matter.
"""
import numpy as np
from scipy.ndimage import zoom
from scipy.optimize import minimize

from .gauss1d import phi
from .grid import axis_edges, axis_masses

INITIAL_LOGIT = 4.0


class PhaseField:
    def __init__(self, R, res, width_px=1.5):
        self.R, self.res = R, res
        self.h = 2.0 * R / res
        m = axis_masses(R, res)
        self.mass = np.outer(m, m)
        c = -R + (np.arange(res) + 0.5) * self.h
        e = axis_edges(R, res)[1:-1]
        # density at the midpoints of interior horizontal / vertical pixel pairs
        self.rho_x = np.outer(phi(c), phi(e))
        self.rho_y = np.outer(phi(e), phi(c))
        self.eps = width_px * self.h

    def fields(self, a):
        a = a.reshape(3, self.res, self.res)
        ex = np.exp(a - a.max(0))
        return ex / ex.sum(0)

    def measures(self, a):
        return (self.mass * self.fields(a)).sum((1, 2))

    def lagrangian(self, a, v, lam, pen):
        """Augmented Lagrangian and its gradient in the logits."""
        u = self.fields(a)
        dx = u[:, :, 1:] - u[:, :, :-1]
        dy = u[:, 1:, :] - u[:, :-1, :]
        E = 0.5 * self.eps * ((self.rho_x * dx * dx).sum() + (self.rho_y * dy * dy).sum())
        E += (self.mass * (u * u * (1 - u) ** 2)).sum() / self.eps
        c = (self.mass * u).sum((1, 2)) - v
        L = E + lam @ c + 0.5 * pen * c @ c

        gu = np.zeros_like(u)
        fx = self.eps * self.rho_x * dx
        fy = self.eps * self.rho_y * dy
        gu[:, :, 1:] += fx
        gu[:, :, :-1] -= fx
        gu[:, 1:, :] += fy
        gu[:, :-1, :] -= fy
        gu += self.mass * (2 * u * (1 - u) * (1 - 2 * u)) / self.eps
        gu += self.mass * (lam + pen * c)[:, None, None]
        ga = u * (gu - (u * gu).sum(0))  # softmax chain rule
        return L, ga.ravel()


def relax(a0, v, pf, iterations=800, rounds=3, penalty=50.0):
    """Minimise from logits ``a0`` (shape (3, res, res)); returns the final logits."""
    a = np.asarray(a0, dtype=float).ravel().copy()
    v = np.asarray(v, dtype=float)
    lam = np.zeros(3)
    for _ in range(rounds):
        res = minimize(pf.lagrangian, a, args=(v, lam, penalty), jac=True, method="L-BFGS-B",
                       options={"maxiter": iterations, "maxcor": 20, "gtol": 1e-12, "ftol": 1e-15})
        a = res.x
        lam = lam + penalty * (pf.measures(a) - v)
        penalty *= 3.0
    return a.reshape(3, pf.res, pf.res)


def logits_from_labels(lab):
    return INITIAL_LOGIT * np.stack([(lab == k).astype(float) for k in range(3)])


def upsample(a, factor):
    """Bilinear upsampling of stacked logits on the pixel-centre lattice."""
    if factor == 1:
        return a
    return np.stack([zoom(a[k], factor, order=1, mode="nearest", grid_mode=True) for k in range(3)])


def threshold(a, v, R, tol=1e-4, max_iter=200):
    """Labels ``argmax(a + lam)`` with offsets ``lam`` tuned so cell measures match ``v``."""
    res = a.shape[1]
    m = axis_masses(R, res)
    w = np.outer(m, m).ravel()
    lam = np.zeros(3)
    step = np.ptp(a) / 8.0
    for _ in range(max_iter):
        lab = np.argmax(a + lam[:, None, None], axis=0)
        err = np.bincount(lab.ravel(), weights=w, minlength=3) - v
        if np.abs(err).max() < tol:
            break
        lam -= step * err
        lam -= lam.mean()
    return lab.astype(np.int64)
