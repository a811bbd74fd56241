#!/usr/bin/env python3
"""Quadrature convergence sweeps: flat squares, torus, cyclide, sphere area.

Writes one CSV per sweep (plus a slope summary) into --out-dir.  The full
ladders take a while; --quick trims every ladder to its first three rungs
for a fast sanity pass.
"""
import argparse
import os
import sys

from nfrbf.cli import (
    DEFAULT_FLAT_LADDER, DEFAULT_SPHERE_LEVELS, DEFAULT_SURFACE_LADDER,
)
from nfrbf.geometry.domains import DomainSpec
from nfrbf.harness import quad_convergence


SWEEPS = [
    ("square_random", DomainSpec(variant="unit_square", kind="repulsion"),
     "chebyshev_product", [2, 3, 4], DEFAULT_FLAT_LADDER, 3),
    ("square_regular", DomainSpec(variant="unit_square", kind="regular"),
     "chebyshev_product", [2, 3, 4], DEFAULT_FLAT_LADDER, 1),
    ("torus", DomainSpec(variant="torus"),
     "torus_sin", [2, 3, 4], DEFAULT_SURFACE_LADDER, 1),
    ("cyclide", DomainSpec(variant="cyclide"),
     "torus_sin", [2, 3], DEFAULT_SURFACE_LADDER, 1),
    ("sphere_area", DomainSpec(variant="sphere"),
     "const_one", [2, 3], DEFAULT_SPHERE_LEVELS, 1),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="out/quad_convergence")
    ap.add_argument("--quick", action="store_true", help="first 3 rungs only")
    ap.add_argument("--only", default=None,
                    help="comma-separated sweep names (default: all)")
    args = ap.parse_args(argv)

    os.makedirs(args.out_dir, exist_ok=True)
    wanted = set(args.only.split(",")) if args.only else None
    for name, dom, fn, degs, ladder, n_seeds in SWEEPS:
        if wanted is not None and name not in wanted:
            continue
        res = ladder[:3] if args.quick else ladder
        if len(res) < 4:
            res = ladder[:4]
        print(f"[{name}] fn={fn} deg={degs} res={res}", flush=True)
        report = quad_convergence(dom, fn, degs, res, n_seeds=n_seeds)
        report.write_csv(os.path.join(args.out_dir, f"{name}.csv"))
        report.write_slopes_csv(os.path.join(args.out_dir, f"{name}_slopes.csv"))
        for deg in degs:
            print(f"  degree {deg}: slope {report.slope(deg):.3f}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
