"""Command-line interface: ``doublebubble <command> [flags]``.

Exit codes: 0 success, 2 domain error, 3 numerical failure (including a
search whose measures drifted), 4 verification failure.
"""
import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, geometry, search, tripod, verify
from .errors import DomainError, NumericalError, SearchFailure
from .gauss1d import single_bubble_profile
from .tripod import BASIS

log = logging.getLogger("doublebubble")

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_VERIFY = 0, 2, 3, 4

PROFILE_HEADER = ["v1", "v2", "v3", "x_u1", "x_u2", "I_m", "grad_u1", "grad_u2",
                  "hess_11", "hess_12", "hess_22", "trace_residual"]
EDGES_HEADER = ["v1", "v2", "v3", "I_m"]


def _meta(args):
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "log_level")}
    return {"tool": "doublebubble", "version": __version__, "command": args.command,
            "config": config, "seed": getattr(args, "seed", None)}


def _comments(args):
    meta = _meta(args)
    return [f"doublebubble {meta['version']}", f"command: {meta['command']}",
            f"config: {json.dumps(meta['config'], sort_keys=True)}", f"seed: {meta['seed']}"]


def _write_csv(path, args, header, rows):
    with open(path, "w", newline="") as fh:
        for line in _comments(args):
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in row])


def _dump(doc, path=None):
    text = json.dumps(doc, indent=2)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _volume(args):
    v1, v2 = float(args.v1), float(args.v2)
    v = np.array([v1, v2, 1.0 - v1 - v2])
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise DomainError(f"(v1, v2, 1 - v1 - v2) = {v.tolist()} is not in the simplex")
    return v


# ---- commands -------------------------------------------------------------------------

def profile_points(n):
    """Centroids of the ``n^2`` sub-triangles of the simplex with ``min v >= 1/(2n)``, sorted."""
    pts = set()
    for i in range(n):
        for j in range(n - i):
            k = n - 1 - i - j
            pts.add((3 * i + 1, 3 * j + 1, 3 * k + 1))  # upward, in units of 1/(3n)
            if k >= 1:
                pts.add((3 * i + 2, 3 * j + 2, 3 * (k - 1) + 2))  # downward
    out = [np.array(p, dtype=float) / (3 * n) for p in sorted(pts)]
    return [v for v in out if 2 * n * v.min() >= 1.0 - 1e-12]


def cmd_profile(args):
    n = args.grid
    if not 5 <= n <= 200:
        raise DomainError("--grid must lie in [5, 200]")
    if args.edges:
        rows = []
        for e in range(3):
            for t in np.linspace(0.0, 1.0, 2 * n + 1):
                v = np.zeros(3)
                v[e], v[(e + 1) % 3] = 1.0 - t, t
                rows.append([*v.tolist(), float(single_bubble_profile(v.max()))])
        _write_csv(args.out, args, EDGES_HEADER, rows)
        return EXIT_OK
    rows = []
    for v in profile_points(n):
        x = tripod.invert_volume_map(v)
        areas = tripod.interface_areas(x)
        H = tripod.hessian_at(x).m22
        grad = BASIS.T @ (x / math.sqrt(2.0))
        trace_res = abs(-np.trace(np.linalg.inv(H)) - 2.0 * areas.sum())
        xu = BASIS.T @ x
        rows.append([*v.tolist(), xu[0], xu[1], float(areas.sum()), grad[0], grad[1],
                     H[0, 0], H[0, 1], H[1, 1], float(trace_res)])
    _write_csv(args.out, args, PROFILE_HEADER, rows)
    return EXIT_OK


def cmd_invert(args):
    v = _volume(args)
    x = tripod.invert_volume_map(v, tol=args.tol)
    _dump({"meta": _meta(args), "v": v.tolist(), "x": x.tolist(), "x_u": (BASIS.T @ x).tolist(),
           "residual": float(np.abs(tripod.volume_map(x) - v).max()),
           "I_m": tripod.perimeter(x), "areas": tripod.interface_areas(x).tolist()})
    return EXIT_OK


def cmd_verify(args):
    rep = verify.run_suite(args.level, seed=args.seed)
    doc = {"meta": _meta(args), **rep.to_dict()}
    _dump(doc, args.out)
    for c in rep.checks:
        log.debug("%s %s residual=%.3e tol=%.1e", "ok  " if c.passed else "FAIL", c.name, c.residual, c.tolerance)
    print(f"{doc['passed']}/{doc['total']} checks passed")
    for name in doc["failed"]:
        print(f"FAILED {name}")
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_variation(args):
    x = BASIS @ np.array([float(args.x_u1), float(args.x_u2)])
    w = BASIS @ np.array([float(args.w_u1), float(args.w_u2)])
    r = geometry.index_form_translation(x, w)
    _dump({"meta": _meta(args), "x": x.tolist(), "w": w.tolist(), **r.as_dict(),
           "Q_closed_form": geometry.index_form_closed(x, w),
           "stability_bound": geometry.stability_bound(x, w)})
    return EXIT_OK


def cmd_search(args):
    v = _volume(args)
    params = search.preset(args.preset, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inits = search.INITS if args.init == "both" else (args.init,)
    meta = _meta(args)
    status = EXIT_OK
    summary = {"meta": meta, "runs": {}}
    for init in inits:
        res = search.search(v, params, init)
        (out / f"search_{init}.json").write_text(res.to_json(params, meta) + "\n")
        res.cluster.save(out / f"cluster_{init}.gbc")
        res.cluster.write_csv(out / f"cluster_{init}.csv", _comments(args))
        summary["runs"][init] = {"achievedPerimeter": res.achievedPerimeter, "gapToModel": res.gapToModel,
                                 "relativeGap": res.gapToModel / res.modelPerimeter,
                                 "tripleJunctionAngles": None if res.tripleJunctionAngles is None
                                 else np.asarray(res.tripleJunctionAngles).tolist(),
                                 "success": res.success}
        if not res.success:
            _dump({"meta": meta, "init": init, **res.diagnostics}, out / f"diagnostics_{init}.json")
            status = EXIT_NUMERICAL
    _dump(summary, out / "summary.json")
    _dump(summary["runs"])
    return status


def cmd_bound(args):
    v = _volume(args)
    K = float(args.k)
    _dump({"meta": _meta(args), "K": K, "v": v.tolist(), "I_m": tripod.model_profile(v),
           "bound": tripod.strongly_convex_lower_bound(K, v)})
    return EXIT_OK


# ---- parser -------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="doublebubble", description="Gaussian double-bubble model tools.")
    p.add_argument("--version", action="version", version=f"doublebubble {__version__}")
    p.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("profile", help="tabulate I_m, its gradient and Hessian on the simplex")
    s.add_argument("--grid", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--edges", action="store_true", help="boundary values on the simplex edges instead")
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("invert", help="tripod vertex with prescribed cell measures")
    s.add_argument("--v1", required=True)
    s.add_argument("--v2", required=True)
    s.add_argument("--tol", type=float, default=tripod.DEFAULT_INVERT_TOL)
    s.set_defaults(func=cmd_invert)

    s = sub.add_parser("verify", help="run the identity suites")
    s.add_argument("--level", choices=verify.LEVELS, default="fast")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("variation", help="variations of a tripod under a translation")
    for name in ("--x-u1", "--x-u2", "--w-u1", "--w-u2"):
        s.add_argument(name, required=True)
    s.set_defaults(func=cmd_variation)

    s = sub.add_parser("search", help="annealing search for a minimizing cluster")
    s.add_argument("--v1", required=True)
    s.add_argument("--v2", required=True)
    s.add_argument("--preset", choices=sorted(search.PRESETS), default="fast")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--init", choices=("both",) + search.INITS, default="both")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("bound", help="sqrt(K) I_m(v) lower bound")
    s.add_argument("--k", required=True)
    s.add_argument("--v1", required=True)
    s.add_argument("--v2", required=True)
    s.set_defaults(func=cmd_bound)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NumericalError, SearchFailure, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
