"""Pixel-labelled 3-clusters on the window [-R, R]^2 of the plane E.

The plane is identified with E through the basis ``(u1, u2)`` of
:mod:`doublebubble.tripod`: pixel ``(r, c)`` has centre
``(x, y) = (-R + (c + 1/2) h, -R + (r + 1/2) h)`` in that basis, with
``h = 2R / resolution``.  Row 0 is the bottom row.  Labels are 1, 2, 3.
"""
import csv
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError
from .gauss1d import Phi, Phi_upper, phi
from .tripod import BASIS, as_e_vector

MAGIC = b"GBC1"
_HEADER = struct.Struct("<4sdI")


def axis_edges(R, resolution):
    return np.linspace(-R, R, resolution + 1)


def axis_masses(R, resolution):
    """Exact standard-normal mass of each pixel column (or row)."""
    e = axis_edges(R, resolution)
    # Differences taken on the tail nearer each edge to avoid cancellation.
    lower = np.where(e[1:] <= 0.0, Phi(e[1:]) - Phi(e[:-1]), 0.0)
    upper = np.where(e[1:] > 0.0, Phi_upper(e[:-1]) - Phi_upper(e[1:]), 0.0)
    return lower + upper


def window_mass(R):
    """Gaussian mass of the square ``[-R, R]^2``."""
    return (1.0 - 2.0 * Phi_upper(R)) ** 2


@dataclass
class GridCluster:
    extent: float
    resolution: int
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if self.labels.shape != (self.resolution, self.resolution):
            raise DomainError("label array shape does not match resolution")
        if self.labels.size and not np.isin(self.labels, (1, 2, 3)).all():
            raise DomainError("labels must be 1, 2 or 3")

    @property
    def h(self):
        return 2.0 * self.extent / self.resolution

    @cached_property
    def centres(self):
        return -self.extent + (np.arange(self.resolution) + 0.5) * self.h

    @cached_property
    def axis_mass(self):
        return axis_masses(self.extent, self.resolution)

    @cached_property
    def weights(self):
        """Per-pixel Gaussian mass, indexed ``[row, col]``."""
        return np.outer(self.axis_mass, self.axis_mass)

    def copy(self):
        return GridCluster(self.extent, self.resolution, self.labels.copy())

    # ---- serialisation -------------------------------------------------------

    def to_bytes(self):
        return _HEADER.pack(MAGIC, float(self.extent), int(self.resolution)) + self.labels.tobytes(order="C")

    @classmethod
    def from_bytes(cls, data):
        magic, R, res = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
        if body.size != res * res:
            raise ValueError(f"expected {res * res} label bytes, found {body.size}")
        return cls(R, res, body.reshape(res, res).copy())

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def write_csv(self, path, comments=()):
        """One row per pixel: centre coordinates and label; ``comments`` become ``#`` lines."""
        xs = self.centres
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["x", "y", "label"])
            for r in range(self.resolution):
                for c in range(self.resolution):
                    w.writerow([f"{xs[c]:.10g}", f"{xs[r]:.10g}", int(self.labels[r, c])])


def _check_window(R, resolution):
    if not 4.0 <= R <= 10.0:
        raise DomainError("extent R must lie in [4, 10]")
    if not 64 <= resolution <= 4096:
        raise DomainError("resolution must lie in [64, 4096]")


def pixel_coords3(R, resolution):
    """R^3 coordinates of every pixel centre, shape (res, res, 3)."""
    c = -R + (np.arange(resolution) + 0.5) * (2.0 * R / resolution)
    X, Y = np.meshgrid(c, c)  # X varies along columns
    return X[..., None] * BASIS[:, 0] + Y[..., None] * BASIS[:, 1]


def make_tripod_grid(x, R=6.0, resolution=512, check=True):
    """Rasterise the tripod with vertex ``x``: label = argmax_j (z - x)_j + 1."""
    if check:
        _check_window(R, resolution)
    x = as_e_vector(x)
    z = pixel_coords3(R, resolution) - x
    return GridCluster(R, resolution, (np.argmax(z, axis=-1) + 1).astype(np.uint8))


def make_halfplane_grid(R=6.0, resolution=512, normal=(1.0, 0.0), offset=0.0, labels=(1, 2), check=True):
    """Label ``labels[0]`` on ``{<z, normal> < offset}``, ``labels[1]`` elsewhere."""
    if check:
        _check_window(R, resolution)
    c = -R + (np.arange(resolution) + 0.5) * (2.0 * R / resolution)
    X, Y = np.meshgrid(c, c)
    nx, ny = np.asarray(normal, dtype=float) / np.linalg.norm(normal)
    lab = np.where(X * nx + Y * ny < offset, labels[0], labels[1])
    return GridCluster(R, resolution, lab.astype(np.uint8))


def make_stripe_grid(a, b, order=(1, 2, 3), theta=(1.0, 0.0), R=6.0, resolution=512, check=True):
    """Rasterise a one-dimensional cluster: cells on ``(-inf,a)``, ``(a,b)``, ``(b,inf)`` of ``<z, theta>``."""
    if check:
        _check_window(R, resolution)
    c = -R + (np.arange(resolution) + 0.5) * (2.0 * R / resolution)
    X, Y = np.meshgrid(c, c)
    tx, ty = np.asarray(theta, dtype=float) / np.linalg.norm(theta)
    s = X * tx + Y * ty
    lab = np.where(s < a, order[0], np.where(s < b, order[1], order[2]))
    return GridCluster(R, resolution, lab.astype(np.uint8))


def grid_measures(cluster):
    """Per-label Gaussian mass ``(m1, m2, m3)`` and the mass outside the window."""
    w = cluster.weights
    m = np.array([w[cluster.labels == k].sum() for k in (1, 2, 3)])
    return m, outside_mass(cluster.extent)


def outside_mass(R):
    """Gaussian mass of the complement of ``[-R, R]^2``: ``4 Q (1 - Q)``, ``Q = 1 - Phi(R)``."""
    q = Phi_upper(R)
    return 4.0 * q * (1.0 - q)
