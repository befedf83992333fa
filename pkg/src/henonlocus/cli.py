"""Command-line surface.

Subcommands: certify | trace | leaf | code | periodic | handle | monodromy |
sweep | zeros.  Exit codes: 0 success, 1 usage or convergence error, 2 a
structural model check failed (e.g. a handle refusing to connect).
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import serialize
from .config import RunConfig, load_config
from .dynamics import Params, Point
from .errors import HenonLocusError, ModelCheckFailure
from .region import certify_chain, region_constants, sweep


def _complex(s: str) -> complex:
    return complex(s.replace(" ", "").replace("i", "j"))


def build_parser():
    top = argparse.ArgumentParser(
        prog="henonlocus",
        description="critical-locus numerics for complex quadratic Henon maps")
    top.add_argument("--config", help="key = value config file")
    sub = top.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--c", type=_complex, help="parameter c")
        sp.add_argument("--a", type=_complex, help="parameter a")
        sp.add_argument("--out", help="output path (JSON; CSV twin when apt)")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("certify", help="interval-certify the region inequalities")
    common(sp)

    sp = sub.add_parser("sweep", help="certify a parameter grid, one JSON line per cell")
    common(sp)
    sp.add_argument("--c-values", nargs="+", type=_complex, required=True)
    sp.add_argument("--a-values", nargs="+", type=_complex, required=True)

    sp = sub.add_parser("zeros", help="argument-principle zero count on a line")
    common(sp)
    sp.add_argument("--y0", type=_complex, help="fix y = y0, count in x")
    sp.add_argument("--x0", type=_complex, help="fix x = x0, count in y")
    sp.add_argument("--radius", type=float, help="contour radius (default delta)")

    sp = sub.add_parser("trace", help="trace a strip component of the locus")
    common(sp)
    sp.add_argument("--component", choices=("cv", "ch"), default="cv")
    sp.add_argument("--n-radii", type=int)
    sp.add_argument("--n-phases", type=int)

    sp = sub.add_parser("leaf", help="trace one foliation leaf")
    common(sp)
    sp.add_argument("--seed-x", type=_complex, required=True)
    sp.add_argument("--seed-y", type=_complex, required=True)
    sp.add_argument("--sign", choices=("plus", "minus"), default="plus")
    sp.add_argument("--target", type=_complex, required=True,
                    help="graph parameter to trace to")
    sp.add_argument("--samples", type=int, default=16)

    sp = sub.add_parser("code", help="itinerary of a point")
    common(sp)
    sp.add_argument("--x", type=_complex, required=True)
    sp.add_argument("--y", type=_complex, required=True)
    sp.add_argument("--fwd", type=int, default=4)
    sp.add_argument("--bwd", type=int, default=4)

    sp = sub.add_parser("periodic", help="periodic orbits from binary words")
    common(sp)
    sp.add_argument("--word", help="binary word, e.g. 0110")
    sp.add_argument("--period", type=int, help="solve all words of this period")

    sp = sub.add_parser("handle", help="trace the locus component of a coded region")
    common(sp)
    sp.add_argument("--code", default="lam=e|om=e",
                    help="region code, e.g. 'lam=01|om=1' (e for empty)")
    sp.add_argument("--resolution", type=int)

    sp = sub.add_parser("monodromy", help="word permutation induced by a parameter loop")
    common(sp)
    sp.add_argument("--loop", choices=("a", "c"), required=True)
    sp.add_argument("--steps", type=int, default=128)
    sp.add_argument("--p", type=int, default=4, dest="period")
    return top


def _config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for key in ("c", "a", "threads", "seed", "out"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def _emit(cfg, args, text, t0, csv_text=None):
    if cfg.out:
        serialize.write_with_manifest(cfg.out, text, cfg,
                                      " ".join(sys.argv[1:]), t0)
        if csv_text is not None:
            with open(cfg.out + ".csv", "w") as fh:
                fh.write(csv_text)
    else:
        sys.stdout.write(text)


def _run(args) -> int:
    t0 = time.time()
    cfg = _config_from_args(args)
    p = Params(cfg.c, cfg.a)

    if args.command == "certify":
        rep = certify_chain(p, cfg.gamma1, cfg.gamma2, cfg.beta)
        _emit(cfg, args, serialize.dumps(serialize.cert_report_obj(rep)), t0)
        return 0 if rep.all_certified else 2

    if args.command == "sweep":
        cells = [(c, a) for c in args.c_values for a in args.a_values]
        reps = sweep(cells, cfg.gamma1, cfg.gamma2, cfg.beta, threads=cfg.threads)
        text = "".join(serialize.dumps(serialize.cert_report_obj(r)).replace("\n ", " ")
                       .replace("\n}", "}").replace("{ ", "{") for r in reps)
        _emit(cfg, args, text, t0)
        return 0

    rc = region_constants(p, cfg.gamma1, cfg.gamma2, cfg.beta)

    if args.command == "zeros":
        from .locus import zero_count_on_disk
        radius = args.radius if args.radius else rc.delta
        if args.x0 is not None:
            n = zero_count_on_disk(p, rc, args.x0, radius, axis="y",
                                   accept_tol=cfg.newton_tol)
            line, value = "x0", args.x0
        else:
            if args.y0 is None:
                raise HenonLocusError("zeros needs --y0 or --x0")
            n = zero_count_on_disk(p, rc, args.y0, radius, axis="x",
                                   accept_tol=cfg.newton_tol)
            line, value = "y0", args.y0
        _emit(cfg, args, serialize.dumps(
            {line: serialize.cpair(value), "radius": serialize.fnum(radius),
             "count": n}), t0)
        return 0

    if args.command == "trace":
        from .locus import annulus_grid, smoothness_transversality_report, trace_ch, trace_cv
        grid = annulus_grid(rc, args.n_radii or cfg.grid_radii,
                            args.n_phases or cfg.grid_phases)
        cloud = (trace_cv if args.component == "cv" else trace_ch)(
            p, rc, grid, tol=cfg.newton_tol)
        rep = smoothness_transversality_report(
            cloud, cfg.newton_tol * 100, cfg.smooth_tol, cfg.transversality_tol)
        obj = serialize.cloud_obj(p, cloud)
        obj["report"] = {k: serialize.fnum(v) if isinstance(v, float) else v
                         for k, v in rep.__dict__.items()}
        _emit(cfg, args, serialize.dumps(obj), t0, serialize.cloud_csv(cloud))
        return 0 if rep.passed else 2

    if args.command == "leaf":
        from .leaves import trace_leaf
        grid = np.linspace(complex(args.seed_y if args.sign == "plus" else args.seed_x),
                           complex(args.target), args.samples)[1:]
        leaf = trace_leaf(p, rc, Point(args.seed_x, args.seed_y), args.sign, grid,
                          tol=cfg.grad_tol * 100,
                          max_step=cfg.leaf_step_frac * rc.delta)
        obj = {"sign": leaf.sign, "orientation": leaf.orientation,
               "points": [[serialize.cpair(x), serialize.cpair(y)]
                          for x, y in leaf.points],
               "max_drift": serialize.fnum(leaf.drift.max()),
               "slope_bound": serialize.fnum(leaf.slope_bound)}
        _emit(cfg, args, serialize.dumps(obj), t0)
        return 0

    if args.command == "code":
        from .coding import itinerary
        code = itinerary(p, rc, Point(args.x, args.y), args.fwd, args.bwd)
        _emit(cfg, args, str(code) + "\n", t0)
        return 0

    if args.command == "periodic":
        from .coding import periodic_point
        if args.word:
            orbits = [periodic_point(p, rc, tuple(int(ch) for ch in args.word),
                                     tol=cfg.newton_tol)]
        elif args.period:
            import itertools
            orbits = [periodic_point(p, rc, w, tol=cfg.newton_tol)
                      for w in itertools.product((0, 1), repeat=args.period)]
        else:
            raise HenonLocusError("periodic needs --word or --period")
        _emit(cfg, args, serialize.orbit_csv(orbits), t0)
        return 0

    if args.command == "handle":
        from .coding import SymbolCode
        from .locus import trace_handle
        code = SymbolCode.parse(args.code)
        h = trace_handle(p, rc, code, resolution=args.resolution or cfg.ring_resolution,
                         tol=cfg.newton_tol)
        bad = sum(not q.passes_geometric(smooth_tol=cfg.smooth_tol,
                                         trans_tol=cfg.transversality_tol)
                  for q in h.points.points)
        obj = {"code": str(code), "connected": h.connected,
               "boundary_circles": h.boundary_circles,
               "samples": len(h.points.points), "failing_samples": bad}
        _emit(cfg, args, serialize.dumps(obj), t0)
        return 0 if h.connected and bad == 0 else 2

    if args.command == "monodromy":
        from .monodromy import loop_around_a0, loop_around_mandelbrot
        fn = loop_around_a0 if args.loop == "a" else loop_around_mandelbrot
        auto = fn(p, steps=args.steps, period=args.period)
        _emit(cfg, args, serialize.dumps(serialize.automorphism_obj(auto)), t0)
        return 0

    raise HenonLocusError(f"unknown command {args.command}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ModelCheckFailure as e:
        print(f"model-check failure: {e}", file=sys.stderr)
        return 2
    except HenonLocusError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
