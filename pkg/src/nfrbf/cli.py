"""Command-line entry points.

Heavy imports happen inside the handlers so that --help stays instant and
the NFRBF_THREADS variable can take effect before numpy loads its BLAS.
Exit codes: 0 success, 1 numerical/runtime failure, 2 usage or
configuration error.
"""

import argparse
import logging
import math
import os
import sys
from types import SimpleNamespace

log = logging.getLogger("nfrbf.cli")

DEFAULT_FLAT_LADDER = [500, 1000, 2000, 4000, 8000]
DEFAULT_SURFACE_LADDER = [1024, 2048, 4096, 8192]
DEFAULT_SPHERE_LEVELS = [3, 4, 5, 6]
DEFAULT_NF_FLAT_LADDER = [500, 1000, 2000, 4000]
DEFAULT_NF_TORUS_LADDER = [1024, 1448, 2048, 2896, 4096]


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nfrbf",
        description="RBF quadrature on flat regions and closed surfaces, "
                    "with a neural-field simulator on top.",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        q = sub.add_parser(name, help=help_)
        return q

    q = add("nodes", "generate a node set and write it as CSV")
    q.add_argument("--domain", default="unit-square")
    q.add_argument("--kind", default="repulsion", choices=["regular", "repulsion"])
    q.add_argument("--n", type=int, default=2000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--cluster-boundary", action="store_true")
    q.add_argument("--out", required=True)

    q = add("mesh", "generate a triangulation and write it as OFF")
    q.add_argument("--domain", default="unit-square")
    q.add_argument("--kind", default="repulsion", choices=["regular", "repulsion"])
    q.add_argument("--n", type=int, default=2000,
                   help="node count (icosahedral level for sphere topologies)")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)

    q = add("weights", "build a quadrature rule and write it as CSV")
    q.add_argument("--domain", default="unit-square")
    q.add_argument("--kind", default="repulsion", choices=["regular", "repulsion"])
    q.add_argument("--n", type=int, default=2000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--phs", type=int, default=3, help="polyharmonic exponent")
    q.add_argument("--deg", type=int, default=2)
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--out", required=True)
    q.add_argument("--diagnostics", default=None,
                   help="write per-element surface diagnostics CSV here")

    q = add("quad", "integrate a built-in test function once")
    q.add_argument("--domain", required=True)
    q.add_argument("--fn", required=True)
    q.add_argument("--n", type=int, default=2000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--kind", default="repulsion", choices=["regular", "repulsion"])
    q.add_argument("--phs", type=int, default=3)
    q.add_argument("--deg", type=int, default=2)
    q.add_argument("--k", type=int, default=None)

    q = add("error-map", "spatial error map of wrap-metric Gaussians")
    q.add_argument("--kind", default="repulsion", choices=["regular", "repulsion"])
    q.add_argument("--n", type=int, default=2000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--sigma", type=float, default=0.1)
    q.add_argument("--grid", type=int, default=100)
    q.add_argument("--phs", type=int, default=3)
    q.add_argument("--deg", type=int, default=2)
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--out", required=True)

    q = add("converge-quad", "quadrature convergence sweep")
    q.add_argument("--domain", required=True)
    q.add_argument("--fn", required=True)
    q.add_argument("--deg", type=_int_list, default=[2, 3, 4])
    q.add_argument("--res", type=_int_list, default=None)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--seeds", type=int, default=3, help="random-mesh seeds (median)")
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--out", required=True)
    q.add_argument("--slopes-out", default=None)

    q = add("converge-nf", "neural-field manufactured-solution sweep")
    q.add_argument("--domain", required=True, help="square-2pi or torus")
    q.add_argument("--deg", type=_int_list, default=[2, 3, 4])
    q.add_argument("--res", type=_int_list, default=None)
    q.add_argument("--dt", type=float, default=1e-3)
    q.add_argument("--t-end", type=float, default=0.1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--seeds", type=int, default=3)
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--kernel-width", type=float, default=None)
    q.add_argument("--out", required=True)
    q.add_argument("--slopes-out", default=None)

    q = add("simulate", "run a showcase scenario from a config file")
    q.add_argument("--config", required=True)
    q.add_argument("--smoke", action="store_true", help="short horizon override")

    q = add("info", "print version, defaults, and built-in names")
    return p


def _log_config(args):
    shown = {k: v for k, v in vars(args).items() if k not in ("func", "verbose") and v is not None}
    log.info("resolved configuration: %s",
             " ".join(f"{k}={v}" for k, v in sorted(shown.items())))


def _stencil(args, deg):
    if getattr(args, "k", None) is not None:
        return args.k
    from .harness import default_stencil_size
    return default_stencil_size(deg)


def _build_any_rule(domain, args, deg):
    from .harness import _build_rule
    return _build_rule(domain, args.n, args.seed, deg, _stencil(args, deg), args.phs)


def cmd_nodes(args):
    from .geometry.domains import domain_from_string
    from .geometry.meshio import write_nodes_csv

    dom = domain_from_string(args.domain)
    if dom.is_flat:
        dom = type(dom)(variant=dom.variant, kind=args.kind,
                        cluster_boundary=args.cluster_boundary)
        nodes, _ = dom.build_flat(args.n, args.seed)
    else:
        nodes = dom.build_surface(args.n).nodes
    write_nodes_csv(nodes, args.out)
    log.info("wrote %d nodes to %s", len(nodes), args.out)


def cmd_mesh(args):
    import numpy as np
    from .geometry.domains import domain_from_string
    from .geometry.meshio import write_off

    dom = domain_from_string(args.domain)
    if dom.is_flat:
        dom = type(dom)(variant=dom.variant, kind=args.kind)
        nodes, mesh = dom.build_flat(args.n, args.seed)
        pts3 = np.column_stack([nodes.points, np.zeros(len(nodes.points))])
        shim = SimpleNamespace(nodes=SimpleNamespace(points=pts3), triangles=mesh.triangles)
        write_off(shim, args.out)
        count = mesh.n_elements
    else:
        mesh = dom.build_surface(args.n)
        write_off(mesh, args.out)
        count = mesh.n_elements
    log.info("wrote mesh with %d triangles to %s", count, args.out)


def cmd_weights(args):
    from .geometry.domains import domain_from_string
    from .quad_flat import write_rule_csv

    dom = domain_from_string(args.domain)
    if dom.is_flat:
        dom = type(dom)(variant=dom.variant, kind=args.kind)
    _, rule = _build_any_rule(dom, args, args.deg)
    write_rule_csv(rule, args.out)
    if args.diagnostics is not None:
        if not hasattr(rule, "write_diagnostics_csv"):
            log.warning("flat rules have no per-element diagnostics; skipping")
        else:
            rule.write_diagnostics_csv(args.diagnostics)
    log.info("wrote %d weights (sum %.17g) to %s",
             len(rule.weights), float(rule.weights.sum()), args.out)


def cmd_quad(args):
    from .geometry.domains import domain_from_string
    from .harness import get_test_function, reference_value
    from .quad_flat import apply_rule

    dom = domain_from_string(args.domain)
    if dom.is_flat:
        dom = type(dom)(variant=dom.variant, kind=args.kind)
    tf = get_test_function(args.fn)
    pts, rule = _build_any_rule(dom, args, args.deg)
    value = apply_rule(rule, tf.fn(pts))
    exact = reference_value(tf, dom)
    denom = abs(exact) if exact != 0.0 else 1.0
    print(f"integral  {value:.17g}")
    print(f"reference {exact:.17g}")
    print(f"rel_error {abs(value - exact) / denom:.17g}")


def cmd_error_map(args):
    from .geometry.domains import DomainSpec
    from .harness import error_map, flat_geometry
    from .interpolate import PhsSpec, PolySpec
    from .quad_flat import flat_rule

    dom = DomainSpec(variant="square_2pi", kind=args.kind)
    nodes, mesh = flat_geometry(dom, args.n, args.seed)
    rule = flat_rule(mesh, k=_stencil(args, args.deg), phs=PhsSpec(args.phs),
                     poly=PolySpec(args.deg))
    emap = error_map(nodes.points, rule, sigma=args.sigma, grid_size=args.grid)
    emap.write_csv(args.out)
    log.info("error map: max|E|=%.3e mean=%.3e both_signs=%s -> %s",
             emap.max_abs, emap.mean, emap.has_both_signs, args.out)


def _default_ladder(dom, nf=False):
    if dom.is_flat:
        return DEFAULT_NF_FLAT_LADDER if nf else DEFAULT_FLAT_LADDER
    if dom.variant == "torus" and nf:
        return DEFAULT_NF_TORUS_LADDER
    if dom.variant in ("sphere", "deformed_sphere", "bumpy_sphere"):
        return DEFAULT_SPHERE_LEVELS
    return DEFAULT_SURFACE_LADDER


def cmd_converge_quad(args):
    from .geometry.domains import domain_from_string
    from .harness import quad_convergence

    dom = domain_from_string(args.domain)
    res = args.res or _default_ladder(dom)
    report = quad_convergence(dom, args.fn, args.deg, res, seed=args.seed,
                              n_seeds=args.seeds, k=args.k)
    report.write_csv(args.out)
    if args.slopes_out:
        report.write_slopes_csv(args.slopes_out)
    for deg in args.deg:
        log.info("degree %d slope %.3f", deg, report.slope(deg))


def cmd_converge_nf(args):
    from .geometry.domains import domain_from_string
    from .harness import NF_KERNEL_WIDTH, nf_convergence

    dom = domain_from_string(args.domain)
    res = args.res or _default_ladder(dom, nf=True)
    width = args.kernel_width if args.kernel_width is not None else NF_KERNEL_WIDTH
    report = nf_convergence(dom, args.deg, res, dt=args.dt, t_end=args.t_end,
                            seed=args.seed, n_seeds=args.seeds, k=args.k,
                            kernel_width=width)
    report.write_csv(args.out)
    if args.slopes_out:
        report.write_slopes_csv(args.slopes_out)
    for deg in args.deg:
        log.info("degree %d slope %.3f", deg, report.slope(deg))


def cmd_simulate(args):
    from .config import read_config
    from .harness import showcase

    cfg = read_config(args.config)
    log.info("simulation config: %s", cfg.describe())
    result = showcase(
        cfg.scenario, cfg.out_dir, overrides=cfg.overrides,
        smoke=cfg.smoke or args.smoke, mesh_path=cfg.mesh_path,
        n_frames=cfg.n_frames, cache_dir=cfg.cache_dir,
    )
    log.info("%d frames, summary %s, aborted=%s, u in [%.4g, %.4g]",
             len(result.frames), result.summary_path, result.aborted,
             result.u_min, result.u_max)
    if result.aborted:
        return 1


def cmd_info(args):
    from . import __version__
    from .harness import NF_KERNEL_WIDTH, TEST_FUNCTIONS
    from .geometry.domains import FLAT_VARIANTS, SURFACE_VARIANTS

    print(f"nfrbf {__version__}")
    print(f"default phs exponent 3, stencils k=21 (deg<=3) / k=32 (deg 4)")
    print(f"manufactured kernel width default {NF_KERNEL_WIDTH:.17g}")
    print("domains: " + ", ".join(FLAT_VARIANTS + SURFACE_VARIANTS))
    print("test functions: " + ", ".join(sorted(TEST_FUNCTIONS)))
    print("thread count: set NFRBF_THREADS before launch")


_HANDLERS = {
    "nodes": cmd_nodes,
    "mesh": cmd_mesh,
    "weights": cmd_weights,
    "quad": cmd_quad,
    "error-map": cmd_error_map,
    "converge-quad": cmd_converge_quad,
    "converge-nf": cmd_converge_nf,
    "simulate": cmd_simulate,
    "info": cmd_info,
}


def main(argv=None) -> int:
    threads = os.environ.get("NFRBF_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    _log_config(args)

    from .errors import ConfigError, NfrbfError

    try:
        status = _HANDLERS[args.command](args)
        return int(status or 0)
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    except NfrbfError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
