"""Annealing search for Gaussian-perimeter-minimizing 3-clusters.

The state is a labelled pixel grid on ``[-R, R]^2``.  Only pixels with a
differently labelled 4-neighbour are proposal sites; a proposal relabels the
pixel to one of its neighbours' labels.  The energy is the grid perimeter
estimator of :mod:`geometry` (each cut edge weighted by the density and an
orientation factor from smoothed label gradients) plus
``mu * |measures - v|_1``, with ``mu`` growing while the temperature decays.

Model start: the tripod with measures ``v`` is rasterised at full resolution
and annealed at low temperature.

Random start: uniform random labels are annealed on a coarse lattice and
refined by pixel doubling up to ``relax_resolution``.  That settles the
topology but not the junction angles, whose energy landscape is flat next to
the lattice noise, so the partition is then relaxed as a diffuse interface
(:mod:`relax`), once at ``relax_resolution`` and once at twice that, and
thresholded at the final resolution with matched measures.  The diffuse
energy still leaves the junction slightly off (its core energy feels the
density gradient), so the thresholded partition is read off as a network of
three free curves and the exact Gaussian length is minimised at fixed
measures (:mod:`network`).  The network is rasterised with pixel measures
matched to ``v`` and that is the result; further pixel moves would only
trade estimator noise for bumps.  Without a usable network the thresholded
labels get a short low-temperature polish and a quench instead.
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import network, relax, tripod
from .errors import DomainError, SearchFailure
from .gauss1d import phi
from .geometry import grid_perimeter
from .grid import GridCluster, _check_window, axis_edges, grid_measures, make_tripod_grid
from .kernels import (PAIR_INDEX, anneal_sweep, boundary_sites, label_gradients, perimeter_kernel,
                      smoothing_kernels)
from .tripod import BASIS, as_simplex

log = logging.getLogger(__name__)

MIN_SEARCH_VOLUME = 0.02
INITS = ("model", "random")


@dataclass(frozen=True)
class SearchParams:
    R: float = 6.0
    resolution: int = 512
    seed: int = 0
    # model start: one annealing level at full resolution
    refine_temperature: float = 0.3
    cooling_rate: float = 0.85
    sweeps: int = 20  # per epoch
    epochs: int = 30
    measure_penalty: float = 2.0
    penalty_growth: float = 1.3
    max_penalty: float = 1e3
    measure_tolerance: float = 1e-3
    # random start: coarse levels, one (epochs, sweeps, penalty, growth) per doubling
    coarse_resolution: int = 32
    initial_temperature: float = 2.0
    coarse_cooling: float = 0.9
    coarse_schedule: tuple = ((40, 50, 1.0, 1.0), (30, 40, 2.0, 1.1), (20, 40, 2.0, 1.1))
    relax_width: float = 1.5  # interface width, pixels
    relax_iterations: int = 800
    relax_rounds: int = 3
    refine_iterations: int = 200  # second relaxation at twice relax_resolution
    refine_rounds: int = 2
    # sharp-interface network refinement; 0 knots disables it
    network_knots: int = 11
    network_radius: float = 5.0
    polish_temperature: float = 0.05
    polish_epochs: int = 10
    polish_sweeps: int = 10
    polish_growth: float = 1.2
    quench_sweeps: int = 100
    init: str = "both"

    @property
    def relax_resolution(self):
        return self.coarse_resolution * 2 ** (len(self.coarse_schedule) - 1)

    def validate(self):
        _check_window(self.R, self.resolution)
        for name in ("cooling_rate", "coarse_cooling"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise DomainError(f"{name} must lie in (0, 1)")
        if min(self.penalty_growth, self.polish_growth) < 1.0:
            raise DomainError("penalty growth factors must be at least 1")
        for name in ("initial_temperature", "refine_temperature", "polish_temperature", "sweeps",
                     "epochs", "measure_penalty", "max_penalty", "measure_tolerance", "relax_width",
                     "relax_iterations", "relax_rounds"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.network_knots == 1 or self.network_knots < 0 or not self.network_radius > 0:
            raise DomainError("network_knots must be 0 or at least 2, network_radius positive")
        if self.init not in INITS + ("both",):
            raise DomainError(f"init must be one of model, random, both (got {self.init!r})")
        if not self.coarse_schedule:
            raise DomainError("coarse_schedule must have at least one level")
        r = self.resolution // self.relax_resolution
        if self.resolution % self.relax_resolution or r & (r - 1):
            raise DomainError("resolution must be a power-of-two multiple of the relaxation resolution")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        return self


PRESETS = {
    "fast": SearchParams(resolution=256, sweeps=10, epochs=25),
    "accurate": SearchParams(resolution=512, sweeps=20, epochs=30),
}


def preset(name, **overrides):
    try:
        base = PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(base, **overrides).validate()


@dataclass
class FlatnessReport:
    angles: np.ndarray = None  # per cell, degrees
    flatness_residual: float = None  # grid units
    areas_vs_model: np.ndarray = None  # (A_grid - A^m) / A^m per pair
    junction: np.ndarray = None
    pair_residuals: np.ndarray = None
    degenerate: bool = False
    reason: str = ""


@dataclass
class SearchResult:
    cluster: GridCluster
    achievedPerimeter: float
    achievedMeasures: np.ndarray
    gapToModel: float
    tripleJunctionAngles: np.ndarray
    interfaceFlatnessResidual: float
    target: np.ndarray = None
    modelPerimeter: float = None
    areasVsModel: np.ndarray = None
    measureDrift: float = None
    init: str = ""
    success: bool = True
    diagnostics: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    def to_json_dict(self, params=None):
        def num(a):
            return None if a is None else np.asarray(a, dtype=float).tolist()

        out = {
            "achievedPerimeter": self.achievedPerimeter,
            "achievedMeasures": num(self.achievedMeasures),
            "gapToModel": self.gapToModel,
            "tripleJunctionAngles": num(self.tripleJunctionAngles),
            "interfaceFlatnessResidual": self.interfaceFlatnessResidual,
            "target": num(self.target),
            "modelPerimeter": self.modelPerimeter,
            "relativeGap": self.gapToModel / self.modelPerimeter,
            "areasVsModel": num(self.areasVsModel),
            "measureDrift": self.measureDrift,
            "init": self.init,
            "success": self.success,
            "diagnostics": self.diagnostics,
            "cluster": {"extent": self.cluster.extent, "resolution": self.cluster.resolution},
            "history": self.history,
        }
        if params is not None:
            out["params"] = asdict(params)
        return out

    def to_json(self, params=None, meta=None):
        doc = self.to_json_dict(params)
        if meta is not None:
            doc = {"meta": meta, **doc}
        return json.dumps(doc, indent=2, sort_keys=False, allow_nan=True)

    def raise_for_failure(self):
        if not self.success:
            raise SearchFailure(self.diagnostics.get("message", "search failed"), result=self)
        return self


# ---- annealing machinery --------------------------------------------------------------

class _Field:
    """Per-resolution constants for the annealing kernel."""

    def __init__(self, R, res):
        cl = GridCluster(R, res, np.ones((res, res), dtype=np.uint8))
        self.R, self.res, self.h = R, res, cl.h
        self.mass = cl.axis_mass
        self.phi_edge = phi(axis_edges(R, res))
        self.dens = phi(cl.centres)
        self.g, self.dg = smoothing_kernels()

    def measures(self, lab):
        return np.array([self.mass @ (lab == k) @ self.mass for k in range(3)])

    def objective(self, lab, target, mu, grad=None):
        if grad is None:
            grad = label_gradients(lab)
        per = float(perimeter_kernel(lab, grad, self.phi_edge, self.mass)[0].sum())
        return per + mu * float(np.abs(self.measures(lab) - target).sum()), per

    def sweep(self, lab, grad, rows, cols, u, target, meas, mu, T):
        return anneal_sweep(lab, grad, self.g, self.dg, rows, cols, u, self.phi_edge, self.mass,
                            self.dens, target, meas, mu, T * self.h)


def _run_level(lab, fld, target, rng, history, level, T, cooling, epochs, sweeps, mu, growth, mu_max):
    best = math.inf  # objectives at different resolutions are not comparable
    for epoch in range(epochs):
        # fresh gradients each epoch so incremental updates cannot drift
        grad = label_gradients(lab)
        meas = fld.measures(lab)
        accepted = 0
        for _ in range(sweeps):
            rows, cols = boundary_sites(lab)
            order = rng.permutation(rows.size)
            u = rng.random(2 * rows.size)
            acc, _ = fld.sweep(lab, grad, rows[order], cols[order], u, target, meas, mu, T)
            accepted += acc
        obj, per = fld.objective(lab, target, mu)
        best = min(best, obj)
        history.append({"level": level, "epoch": epoch, "temperature": T, "penalty": mu,
                        "accepted": int(accepted), "objective": obj, "perimeter": per,
                        "bestObjective": best})
        T *= cooling
        mu = min(mu * growth, mu_max)


def _quench(lab, fld, target, rng, mu, sweeps):
    grad = label_gradients(lab)
    meas = fld.measures(lab)
    total = 0
    for _ in range(sweeps):
        rows, cols = boundary_sites(lab)
        u = rng.random(2 * rows.size)
        acc, _ = fld.sweep(lab, grad, rows, cols, u, target, meas, mu, 0.0)
        total += acc
        if acc == 0:
            break
    return total


def _rng(seed, init):
    return np.random.default_rng([int(seed), INITS.index(init)])


def _relax_stage(lab, v, p, history):
    """Diffuse-interface relaxation of coarse labels, returning labels at full resolution."""
    res = p.relax_resolution
    a = relax.relax(relax.logits_from_labels(lab), v, relax.PhaseField(p.R, res, p.relax_width),
                    p.relax_iterations, p.relax_rounds)
    if p.refine_rounds > 0 and p.resolution >= 2 * res:
        res *= 2
        a = relax.relax(relax.upsample(a, 2), v, relax.PhaseField(p.R, res, p.relax_width),
                        p.refine_iterations, p.refine_rounds)
    lab = relax.threshold(relax.upsample(a, p.resolution // res), v, p.R)
    history.append({"level": p.resolution, "epoch": "relax", "relaxResolution": res})
    if p.network_knots >= 2:
        return _network_stage(lab, v, p, history)
    return lab, False


def _network_stage(lab, v, p, history):
    knots = np.linspace(0.0, p.network_radius, p.network_knots)
    out = network.refine(lab, v, p.R, knots)
    entry = {"level": p.resolution, "epoch": "network"}
    if out is None:
        history.append({**entry, "applied": False, "reason": "no single junction"})
        return lab, False
    q, cells, net, info = out
    # keep the diffuse result if the solver did not land on the measures
    applied = info["measureResidual"] <= p.measure_tolerance
    if applied:
        lab, dev = network.rasterise_matched(q, cells, net, v, p.R, p.resolution)
        info["pixelMeasureResidual"] = dev
    history.append({**entry, "applied": applied, "junction": q[:2].tolist(), **info})
    return lab, applied


def anneal(v, p, init):
    """Run one search schedule; returns the zero-based label array and its history."""
    v = as_simplex(v)
    rng = _rng(p.seed, init)
    history = []
    if init == "model":
        x = tripod.invert_volume_map(v)
        lab = make_tripod_grid(x, p.R, p.resolution, check=False).labels.astype(np.int64) - 1
        fld = _Field(p.R, p.resolution)
        _run_level(lab, fld, v, rng, history, p.resolution, p.refine_temperature, p.cooling_rate,
                   p.epochs, p.sweeps, p.measure_penalty, p.penalty_growth, p.max_penalty)
    else:
        res = p.coarse_resolution
        lab = rng.integers(0, 3, size=(res, res)).astype(np.int64)
        for li, (epochs, sweeps, mu, growth) in enumerate(p.coarse_schedule):
            if li > 0:
                lab = np.repeat(np.repeat(lab, 2, axis=0), 2, axis=1)
                res *= 2
            T = p.initial_temperature if li == 0 else p.refine_temperature
            _run_level(lab, _Field(p.R, res), v, rng, history, res, T, p.coarse_cooling,
                       epochs, sweeps, mu, growth, p.max_penalty)
        lab, sharp = _relax_stage(lab, v, p, history)
        fld = _Field(p.R, p.resolution)
        if sharp:
            # measures already match to about a pixel; any single-pixel move from here
            # only trades estimator noise for bumps
            obj, per = fld.objective(lab, v, p.max_penalty)
            history.append({"level": p.resolution, "epoch": "final", "penalty": p.max_penalty,
                            "objective": obj, "perimeter": per, "bestObjective": obj})
            return lab, history
        # a short polish at moderate penalty first: quenching straight at max_penalty
        # would buy measure with isolated pixels
        _run_level(lab, fld, v, rng, history, p.resolution, p.polish_temperature, p.cooling_rate,
                   p.polish_epochs, p.polish_sweeps, p.measure_penalty, p.polish_growth, p.max_penalty)
    mu = p.max_penalty
    flips = _quench(lab, fld, v, rng, mu, p.quench_sweeps)
    obj, per = fld.objective(lab, v, mu)
    best = min(obj, history[-1]["bestObjective"])
    history.append({"level": p.resolution, "epoch": "quench", "temperature": 0.0, "penalty": mu,
                    "accepted": int(flips), "objective": obj, "perimeter": per, "bestObjective": best})
    return lab, history


def search(v, p, init=None):
    """Anneal from one initial condition (``init`` defaults to ``p.init`` unless that is 'both')."""
    v = as_simplex(v)
    if v.min() < MIN_SEARCH_VOLUME:
        raise DomainError(f"search needs min(v) >= {MIN_SEARCH_VOLUME}, got {v.min():.4g}")
    p.validate()
    init = init or (p.init if p.init != "both" else "random")
    if init not in INITS:
        raise DomainError(f"init must be 'model' or 'random', got {init!r}")
    lab, history = anneal(v, p, init)
    cluster = GridCluster(p.R, p.resolution, (lab + 1).astype(np.uint8))
    return evaluate(cluster, v, p, init, history)


def search_both(v, p):
    """Model-start and random-start runs, keyed by init."""
    return {init: search(v, p, init) for init in INITS}


def evaluate(cluster, v, p, init="", history=None):
    v = as_simplex(v)
    perimeter, stats = grid_perimeter(cluster)
    measures, outside = grid_measures(cluster)
    model = tripod.model_profile(v)
    drift = float(np.abs(measures - v).max())
    report = flatness_report(cluster, stats=stats)
    ok = drift <= 5.0 * p.measure_tolerance
    diagnostics = {"outsideMass": outside, "driftLimit": 5.0 * p.measure_tolerance,
                   "topology": "degenerate" if report.degenerate else "triple-junction"}
    if report.degenerate:
        diagnostics["topologyReason"] = report.reason
    if not ok:
        diagnostics["message"] = (f"measure drift {drift:.3e} exceeds 5 x measure tolerance "
                                  f"{p.measure_tolerance:.1e}")
        log.warning(diagnostics["message"])
    return SearchResult(
        cluster=cluster,
        achievedPerimeter=perimeter,
        achievedMeasures=measures,
        gapToModel=perimeter - model,
        tripleJunctionAngles=report.angles,
        interfaceFlatnessResidual=report.flatness_residual,
        target=v,
        modelPerimeter=model,
        areasVsModel=report.areas_vs_model,
        measureDrift=drift,
        init=init,
        success=ok,
        diagnostics=diagnostics,
        history=history or [],
    )


# ---- flatness / junction analysis ---------------------------------------------------------

def _cut_points(cluster):
    """Midpoints, Gaussian edge weights and pair indices of all label cuts."""
    lab = cluster.labels.astype(np.int64) - 1
    xs = cluster.centres
    edges = -cluster.extent + np.arange(cluster.resolution + 1) * cluster.h
    m = cluster.axis_mass
    pts, wts, ks = [], [], []
    rr, cc = np.nonzero(lab[:, :-1] != lab[:, 1:])
    pts.append(np.column_stack([edges[cc + 1], xs[rr]]))
    wts.append(phi(edges[cc + 1]) * m[rr])
    ks.append(PAIR_INDEX[lab[rr, cc], lab[rr, cc + 1]])
    rr, cc = np.nonzero(lab[:-1, :] != lab[1:, :])
    pts.append(np.column_stack([xs[cc], edges[rr + 1]]))
    wts.append(phi(edges[rr + 1]) * m[cc])
    ks.append(PAIR_INDEX[lab[rr, cc], lab[rr + 1, cc]])
    return np.concatenate(pts), np.concatenate(wts), np.concatenate(ks)


def _fit_line(p, w):
    c = (w[:, None] * p).sum(0) / w.sum()
    d = p - c
    cov = (w[:, None, None] * d[:, :, None] * d[:, None, :]).sum(0) / w.sum()
    evals, evecs = np.linalg.eigh(cov)
    direction = evecs[:, 1]
    normal = evecs[:, 0]
    rms = math.sqrt(max(evals[0], 0.0))
    return c, direction, normal, rms


# cell k lies between the rays of the two pairs that contain it
_CELL_PAIRS = {0: (0, 2), 1: (0, 1), 2: (1, 2)}


def flatness_report(cluster, stats=None):
    """Fit a line to each interface; junction angles, flatness and area comparison.

    Cut points are weighted by their Gaussian edge length so that debris far
    out in the tails does not move the fit.  Angles are the opening angles of
    the three cells at the junction, in cell order.
    """
    pts, wts, ks = _cut_points(cluster)
    present = [k for k in range(3) if wts[ks == k].sum() > 0]
    if len(present) < 3:
        missing = [("12", "23", "31")[k] for k in range(3) if k not in present]
        return FlatnessReport(degenerate=True, reason=f"missing interfaces: {', '.join(missing)}")
    fits = [_fit_line(pts[ks == k], wts[ks == k]) for k in range(3)]
    # junction: least-squares intersection of the three lines
    A = sum(np.outer(n, n) for _, _, n, _ in fits)
    b = sum(np.outer(n, n) @ c for c, _, n, _ in fits)
    try:
        junction = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return FlatnessReport(degenerate=True, reason="fitted interface lines are parallel")
    rays = []
    for c, d, _, _ in fits:
        rays.append(d if d @ (c - junction) >= 0 else -d)
    heading = np.array([math.atan2(r[1], r[0]) for r in rays])
    angles = np.zeros(3)
    for cell, (k1, k2) in _CELL_PAIRS.items():
        other = 3 - k1 - k2
        a = (heading[k2] - heading[k1]) % (2 * math.pi)
        o = (heading[other] - heading[k1]) % (2 * math.pi)
        # the cell's sector is the arc from k1 to k2 that avoids the third ray
        angles[cell] = math.degrees(a if o > a else 2 * math.pi - a)
    pair_rms = np.array([f[3] for f in fits]) / cluster.h
    if stats is None:
        _, stats = grid_perimeter(cluster)
    measures, _ = grid_measures(cluster)
    vol = measures / measures.sum()
    if vol.min() >= tripod.INTERIOR_CUTOFF:
        model_areas = tripod.interface_areas(tripod.invert_volume_map(vol))
        areas_vs_model = (stats.areas - model_areas) / model_areas
    else:
        areas_vs_model = np.full(3, np.nan)
    return FlatnessReport(angles=angles, flatness_residual=float(pair_rms.max()),
                          areas_vs_model=areas_vs_model, junction=junction, pair_residuals=pair_rms)


def junction_in_basis(report):
    """Junction point of a report as a vector of E (R^3 coordinates)."""
    return BASIS @ report.junction
