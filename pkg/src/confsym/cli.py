"""Command-line entry point: ``confsym {build,dim4,spec-invert,curvature-probe}``.

Exit codes: 0 when every certified check passes, 1 when one fails,
2 for invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from ._validation import InputError
from .certificate import dumps
from .geometry import MetricData, curvature_jet, sample_points
from .odespace import DiagonalOperatorPath, InnerSpace
from .pipeline import BuildConfig, build_ecs_bundle, dim4_demo, parse_signs
from .septuple import xrs_to_septuple
from .specsolve import cubic_roots, invert_spec

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# flag name -> BuildConfig field
_BUILD_FLAGS = {"j": "j", "p": "p", "k": "k", "l": "l", "signs": "signs", "theta": "theta",
                "eta": "eta", "grid_n": "grid_n", "seed": "seed"}


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InputError("config file must hold a JSON object")
    return data


def _build_config(args):
    data = _load_config(args.config)
    for flag, name in _BUILD_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            data[name] = val
    if isinstance(data.get("signs"), str):
        data["signs"] = parse_signs(data["signs"])
    return BuildConfig.from_dict(data)


def _write_csv(path, state):
    sep = state.get("septuple")
    if sep is None:
        return
    md = state.get("metric") or MetricData.from_path(state["path"], state["inner"])
    t = sep.alpha.nodes
    X = np.zeros((t.size, md.n))
    X[:, 0] = t
    ric = curvature_jet(md, X).ricci
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "alpha", "beta", "gamma", "f", "ricci_tt", "ricci_off_tt_max"])
        off = np.abs(ric.copy())
        off[:, 0, 0] = 0
        for i in range(t.size):
            w.writerow([repr(float(v)) for v in (t[i], sep.alpha.samples[i], sep.beta.samples[i],
                                                  sep.gamma.samples[i], sep.f.samples[i], ric[i, 0, 0],
                                                  off[i].max())])


def cmd_build(args):
    cfg = _build_config(args)
    cert, state = build_ecs_bundle(cfg, return_state=True)
    _emit(cert.to_json(), args.out)
    if args.csv:
        _write_csv(args.csv, state)
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_dim4(args):
    rho = args.rho
    cert = dim4_demo(rho, args.r, args.p, n=args.grid_n, seed=args.seed)
    _emit(cert.to_json(), args.out)
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_spec_invert(args):
    cs = cubic_roots(args.k, args.l)
    res = invert_spec(cs.roots, args.p, args.eta, n=args.grid_n)
    sep = xrs_to_septuple(res.xrs)
    summary = {
        "target": cs.roots.as_array().tolist(),
        "x0": res.x0, "eta": res.eta, "r": res.xrs.r, "s": res.xrs.s,
        "iterations": res.iterations, "log_spec_residual": res.residual,
        "f_min": sep.f.min(), "f_max": sep.f.max(),
        "riccati_residuals": list(sep.riccati_residuals()),
    }
    sys.stdout.write(dumps(summary))
    return EXIT_OK


def cmd_curvature_probe(args):
    cfg = _build_config(args)
    cs = cubic_roots(cfg.k, cfg.l)
    sep = xrs_to_septuple(invert_spec(cs.roots, cfg.p, cfg.eta, n=cfg.grid_n).xrs)
    path = DiagonalOperatorPath.from_blocks(sep, cfg.j)
    md = MetricData.from_path(path, InnerSpace.from_blocks(cfg.signs))
    X = sample_points(md, np.random.default_rng(cfg.seed), args.points)
    J = curvature_jet(md, X)
    ft = np.asarray(md.f(X[:, 0]))
    off = J.ricci.copy()
    off[:, 0, 0] = 0
    summary = {
        "n": md.n, "points": args.points,
        "max_nabla_weyl": float(np.max(np.abs(J.nabla_weyl))),
        "max_weyl": float(np.max(np.abs(J.weyl))),
        "max_riemann": float(np.max(np.abs(J.riemann))),
        "max_ricci_off_tt": float(np.max(np.abs(off))),
        "ricci_tt": J.ricci[:, 0, 0].tolist(),
        "f": ft.tolist(),
    }
    sys.stdout.write(dumps(summary))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="confsym", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def build_flags(sp):
        sp.add_argument("--config", help="JSON file with BuildConfig fields; flags override it")
        sp.add_argument("--j", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--k", type=int)
        sp.add_argument("--l", type=int)
        sp.add_argument("--signs", help='sign triples, e.g. "+++,+--"')
        sp.add_argument("--theta", type=float)
        sp.add_argument("--eta", type=float)
        sp.add_argument("--grid-n", dest="grid_n", type=int)
        sp.add_argument("--seed", type=int)

    b = sub.add_parser("build", help="run the construction and emit a certificate")
    build_flags(b)
    b.add_argument("--out", help="certificate path (default stdout)")
    b.add_argument("--csv", help="also dump sampled alpha, beta, gamma, f and Ricci")
    b.set_defaults(func=cmd_build)

    d = sub.add_parser("dim4", help="dimension-four determinant obstruction")
    d.add_argument("--rho", default="2+cos", help='"2+cos" or coefficients "c0,a1,b1,..."')
    d.add_argument("--r", type=float, default=1.0)
    d.add_argument("--p", type=float, default=1.0)
    d.add_argument("--grid-n", dest="grid_n", type=int, default=256)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_dim4)

    s = sub.add_parser("spec-invert", help="invert the spectrum of the (k, l) cubic")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--p", type=float, default=1.0)
    s.add_argument("--eta", type=float, default=0.3)
    s.add_argument("--grid-n", dest="grid_n", type=int, default=256)
    s.set_defaults(func=cmd_spec_invert)

    c = sub.add_parser("curvature-probe", help="curvature summary at random points")
    build_flags(c)
    c.add_argument("--points", type=int, default=10)
    c.set_defaults(func=cmd_curvature_probe)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
