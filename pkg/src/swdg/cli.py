"""Command line interface.

    swdg run <config> [--override key=value ...]
    swdg mesh build <out> --domain X0 X1 Y0 Y1 --nx N --ny N [--split two|four]
                    [--levels L] [--boundary side=tag ...]
    swdg mesh check <mesh-file>
    swdg exact <scenario> <t> <out.csv> [--override key=value ...]

Exit codes: 0 success, 2 configuration or input error, 3 solver abort.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import ConfigError, parse_config
from .driver import EXIT_CONFIG, EXIT_OK, run
from .mesh import (SIDES, TAG_CODES, MeshError, build_uniform_mesh, cfl_radius, load_mesh,
                   save_mesh)
from .output import write_csv
from .scenarios import SCENARIOS

log = logging.getLogger("swdg")


def _cmd_run(args) -> int:
    cfg = parse_config(args.config, args.override)
    log.info("running %s (%s form, %s limiter) into %s", cfg.scenario, cfg.form,
             cfg.limiter, cfg.output)
    return run(cfg)


def _cmd_mesh_build(args) -> int:
    boundary = {}
    for item in args.boundary or ():
        side, _, tag = item.partition("=")
        if side not in SIDES or not tag:
            raise ConfigError(f"--boundary {item!r}: expected side=tag with side in {SIDES}")
        boundary[side] = tag
    mesh = build_uniform_mesh(tuple(args.domain), nx=args.nx, ny=args.ny, split=args.split,
                              levels=args.levels, boundary=boundary or None)
    save_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_cells} cells, {mesh.n_vertices} vertices")
    return EXIT_OK


def _cmd_mesh_check(args) -> int:
    mesh = load_mesh(args.path)
    r = cfl_radius(mesh)
    tags = {name: int((mesh.edge_tag == code).sum()) for name, code in TAG_CODES.items()}
    interior = int((mesh.edge_cells[:, 1] >= 0).sum())
    print(f"cells {mesh.n_cells}  vertices {mesh.n_vertices}  edges {mesh.n_edges}")
    print(f"interior edges {interior}  " + "  ".join(f"{k} {v}" for k, v in tags.items()))
    print(f"area min {mesh.area.min():.6g} max {mesh.area.max():.6g}  "
          f"inradius min {r.min():.6g} max {r.max():.6g}")
    return EXIT_OK


def _cmd_exact(args) -> int:
    cfg = parse_config(overrides=[f"scenario={args.scenario}", *args.override])
    spec = cfg.build_scenario()
    if not spec.has_exact:
        raise ConfigError(f"scenario {spec.name} has no exact solution")
    mesh = load_mesh(cfg.mesh_file) if cfg.mesh_file else spec.build_mesh(**cfg.mesh)
    x, y = mesh.node_coords.reshape(-1, 2).T
    h, u, v = (np.broadcast_to(np.asarray(a, dtype=float), x.shape)
               for a in spec.exact(x, y, args.t))
    b = spec.bathymetry(x, y) * np.ones_like(x)
    nc = mesh.n_cells
    write_csv(args.out, ("cell", "node", "x", "y", "b", "h", "hu", "hv", "u", "v"),
              [np.repeat(np.arange(nc), 3), np.tile(np.arange(3), nc), x, y, b,
               h, h * u, h * v, u, v], int_columns=("cell", "node"))
    print(f"wrote {args.out}: exact {spec.name} at t={args.t!r} on {nc} cells")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swdg", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario from a config file or manifest")
    r.add_argument("config")
    r.add_argument("--override", "-o", action="append", default=[], metavar="KEY=VALUE")
    r.set_defaults(func=_cmd_run)

    m = sub.add_parser("mesh", help="build or check mesh files")
    msub = m.add_subparsers(dest="mesh_command", required=True)
    mb = msub.add_parser("build")
    mb.add_argument("out")
    mb.add_argument("--domain", nargs=4, type=float, required=True,
                    metavar=("X0", "X1", "Y0", "Y1"))
    mb.add_argument("--nx", type=int, default=1)
    mb.add_argument("--ny", type=int, default=1)
    mb.add_argument("--split", choices=("two", "four"), default="two")
    mb.add_argument("--levels", type=int, default=0)
    mb.add_argument("--boundary", action="append", metavar="SIDE=TAG",
                    help="tag is wall, transparent, inflow or periodic")
    mb.set_defaults(func=_cmd_mesh_build)
    mc = msub.add_parser("check")
    mc.add_argument("path")
    mc.set_defaults(func=_cmd_mesh_check)

    e = sub.add_parser("exact", help="dump the exact solution at time t")
    e.add_argument("scenario", choices=sorted(SCENARIOS))
    e.add_argument("t", type=float)
    e.add_argument("out")
    e.add_argument("--override", "-o", action="append", default=[], metavar="KEY=VALUE")
    e.set_defaults(func=_cmd_exact)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MeshError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
