"""Command line: run/resume campaigns, fit results, print analysis constants and surface scaling."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import campaign
from .campaign import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _progress(rec: dict) -> None:
    print(f"{rec['mode']} k={rec['k']} p={rec['p']:.4g} q={rec['q']:.4g} chunk={rec['chunk']} "
          f"failures={rec['failures']}/{rec['trials']}", file=sys.stderr)


def cmd_run(args) -> int:
    overrides = {"threads": args.threads, "seed": args.seed}
    cfg = campaign.load_config(args.config, overrides)
    store = campaign.run_campaign(cfg, args.out, None if args.quiet else _progress)
    print(f"{len(store.cells)} cells written to {Path(args.out) / campaign.CSV_NAME}")
    return EXIT_OK


def cmd_resume(args) -> int:
    store = campaign.resume_campaign(args.out, args.threads, None if args.quiet else _progress)
    print(f"{len(store.cells)} cells written to {Path(args.out) / campaign.CSV_NAME}")
    return EXIT_OK


def cmd_fit(args) -> int:
    from .fitting import fit_campaign

    samples = campaign.read_csv(Path(args.inp) / campaign.CSV_NAME)
    result = fit_campaign(samples, f_max=args.f_max)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fields = ["k", "exponent", "exponent_stderr", "p_c", "p_c_stderr", "f_min", "f_max", "n_used"]
    with (out / "fit.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for f in result.per_k:
            d = asdict(f)
            w.writerow([d[x] if isinstance(d[x], int) else campaign.fmt(d[x]) for x in fields])
    summary = {"beta": asdict(result.beta), "f_min": result.f_min, "per_k": [asdict(f) for f in result.per_k]}
    (out / "fit.json").write_text(json.dumps(summary, indent=1) + "\n")
    if not args.no_tsv:
        rows = [f"{campaign.fmt(math.log(f.k))}\t{campaign.fmt(math.log(f.exponent))}" for f in result.per_k]
        (out / "fit.tsv").write_text("# log k\tlog E_k\n" + "\n".join(rows) + "\n")
    b = result.beta
    print(f"slope {b.slope:.4f} +- {b.slope_stderr:.4f}, intercept {b.intercept:.4f} +- {b.intercept_stderr:.4f}")
    return EXIT_OK


def cmd_analysis(args) -> int:
    from . import analysis as an

    region = an.threshold_region(m_max=args.m_max)
    w = csv.writer(sys.stdout, lineterminator="\n")
    if args.what == "constants":
        w.writerow(["name", "value"])
        h1, h2 = an.h1_rate(), an.h2_rate()
        rows = [
            ("h1_rate", h1),
            ("h2_rate", h2),
            ("p_c_1d", 1 / h1),
            ("p_c_2d", 1 / h2),
            ("ankle_p", region.ankle),
            ("toe_q", region.toe),
            ("p_c_p_eq_2q", an.threshold_along_ray(region, 0.5)),
            ("saturation_2d", an.SATURATION_2D),
            ("saturation_3d", an.SATURATION_3D),
            ("p2q_exponent_coefficient", an.p2q_exponent_coefficient()),
        ]
        for name, value in rows:
            w.writerow([name, campaign.fmt(value)])
        return EXIT_OK
    w.writerow(["n_hat", "q", "p_boundary"])
    qs = np.geomspace(region.toe * 1e-4, region.toe, args.points)
    for c in region.curves:
        pb = c.p_boundary(qs)
        for q, p in zip(qs, pb):
            if math.isfinite(p):
                w.writerow([campaign.fmt(c.n_hat), campaign.fmt(q), campaign.fmt(p)])
    for q, p in zip(qs, region.p_boundary(qs)):
        w.writerow(["envelope", campaign.fmt(q), campaign.fmt(p)])
    return EXIT_OK


def cmd_surface(args) -> int:
    from . import surface_scaling as ss

    params = ss.SurfaceParams(args.L, args.N, symmetrized=args.symmetrized, area_fraction=args.fraction)
    r_max = args.r_max if args.r_max is not None else 3 * args.L
    c_rec = ss.perimeter_profile(r_max, params)
    c_closed = ss.perimeter_closed_form(np.arange(r_max + 1), params)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["r", "c_recursion", "c_closed"])
    for r in range(r_max + 1):
        w.writerow([r, campaign.fmt(c_rec[r]), campaign.fmt(c_closed[r])])
    mult = ss.threshold_multiplier(params)
    print(f"# minimal_loop_length,{campaign.fmt(ss.minimal_loop_length(params))}")
    print(f"# minimal_loop_asymptote,{campaign.fmt(ss.minimal_loop_asymptote(params))}")
    print(f"# threshold_multiplier,{campaign.fmt(mult.product)}")
    print(f"# threshold_multiplier_approx,{campaign.fmt(mult.approximation)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toric-memory", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a Monte Carlo campaign")
    p.add_argument("--config", required=True, help="INI file with a [campaign] section")
    p.add_argument("--out", required=True, help="output directory (resumable)")
    p.add_argument("--threads", type=int, help="worker processes")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="finish an interrupted campaign")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("fit", help="fit per-k exponents and the slope of log E_k vs log k")
    p.add_argument("--in", dest="inp", required=True, help="campaign output directory")
    p.add_argument("--out", required=True)
    p.add_argument("--f-max", type=float, default=0.05)
    p.add_argument("--no-tsv", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("analysis", help="threshold constants or qp-plane curves as CSV")
    p.add_argument("what", choices=["constants", "curves"])
    p.add_argument("--m-max", type=int, default=16)
    p.add_argument("--points", type=int, default=40)
    p.set_defaults(func=cmd_analysis)

    p = sub.add_parser("surface", help="perimeter growth and threshold cost on high-genus surfaces")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--symmetrized", action="store_true")
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--r-max", type=int)
    p.set_defaults(func=cmd_surface)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
