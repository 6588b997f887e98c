"""Certified half-widths of one surface, each confirmed by the eigensolver.

    python3 scripts/width_sweep.py paraboloid --points 5
    python3 scripts/width_sweep.py catenoid --widths 0.1,0.2,0.3,0.5 --strategy none
"""

import argparse
import math

from qlayer.certify import SearchBounds, max_certified_width
from qlayer.eigensolve import GridSpec, solve_layer
from qlayer.layer import LayerConfig, build_layer_metric, validate_width
from qlayer.surfaces import make_surface


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("surface", help="registry name, e.g. paraboloid, catenoid, gaussian_bump")
    p.add_argument("--widths", help="comma-separated half-widths; default is an even grid")
    p.add_argument("--points", type=int, default=5, help="grid size in (0, 0.95 / B_inf]")
    p.add_argument("--strategy", default="auto")
    p.add_argument("--max-radius", type=float, default=4096.0)
    p.add_argument("--n-s", type=int, default=400)
    p.add_argument("--n-t", type=int, default=24)
    p.add_argument("--no-solve", action="store_true", help="skip the eigensolver check")
    args = p.parse_args(argv)

    surface = make_surface({"name": args.surface})
    B = validate_width(surface, 1.0).B_inf
    if args.widths:
        widths = [float(x) for x in args.widths.split(",")]
    else:
        top = 0.95 / B if B > 0 else 1.0
        widths = [top * k / args.points for k in range(1, args.points + 1)]
    table = max_certified_width(surface, widths, args.strategy,
                                SearchBounds(R_max=args.max_radius))
    print(f"{surface.label}: B_inf = {B:.6g}, strategy {table.strategy}")
    print(f"{'a':>9} {'verdict':>10} {'R':>8} {'R_out':>9} {'Q':>12} {'lambda_min':>12} "
          f"{'sigma_ess':>12} {'gap':>10}")
    for c in table.rows:
        lam = gap = math.nan
        if c.certified and not args.no_solve:
            length = max(100.0, c.R_out)
            res = solve_layer(build_layer_metric(LayerConfig(surface, c.a)), 0,
                              GridSpec(args.n_s, args.n_t, length))
            lam, gap = res.lambda_min, res.gap
        R = c.R if c.R is not None else math.nan
        R_out = c.R_out if c.R_out is not None else math.nan
        print(f"{c.a:9.4f} {c.verdict:>10} {R:8.4g} {R_out:9.4g} {c.Q:12.5g} {lam:12.6g} "
              f"{c.sigma_ess:12.6g} {gap:10.3g}")
    for a in table.skipped:
        print(f"{a:9.4f} {'skipped':>10}  (a * B_inf >= 1)")
    print(f"largest certified a: {table.largest_certified}; behaviour: {table.behavior}")


if __name__ == "__main__":
    main()
