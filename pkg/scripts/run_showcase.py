#!/usr/bin/env python3
"""Run the long-horizon pattern scenarios and drop VTK frames + summaries.

Default is the full trio of labyrinth runs plus the traveling spot; pass
scenario names to pick.  The cortex scenario needs --mesh.  --smoke cuts
every horizon for a quick look.
"""
import argparse
import os
import sys

from nfrbf.harness import showcase

DEFAULT = ["labyrinth:0.0", "labyrinth:0.4", "labyrinth:0.8", "spot"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenarios", nargs="*", default=DEFAULT,
                    help="labyrinth:<gamma>, spot, cortex")
    ap.add_argument("--out-dir", default="out/showcase")
    ap.add_argument("--cache-dir", default="out/cache",
                    help="geodesic tables are reused between runs")
    ap.add_argument("--mesh", default=None, help="OFF file for cortex")
    ap.add_argument("--smoke", action="store_true")
    ap.add_argument("--frames", type=int, default=20)
    args = ap.parse_args(argv)

    status = 0
    for scenario in args.scenarios:
        sub = os.path.join(args.out_dir, scenario.replace(":", "_"))
        print(f"[{scenario}] -> {sub}", flush=True)
        result = showcase(scenario, sub, smoke=args.smoke, mesh_path=args.mesh,
                          n_frames=args.frames, cache_dir=args.cache_dir)
        print(f"  frames={len(result.frames)} u in [{result.u_min:.3g}, "
              f"{result.u_max:.3g}] aborted={result.aborted}", flush=True)
        if result.displacement is not None:
            print(f"  centroid displacement {result.displacement:.4f}", flush=True)
        if result.aborted:
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
