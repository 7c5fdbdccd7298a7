"""Command line interface: ``autogap <command> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import constructions as cons
from .calabi import CapSpec, ConsistencyError, SupportError, calabi, calabi_sphere_autonomous, r_ab_autonomous
from .dynamics import WindingError, rotation_number, winding_number
from .flows import PointMap, iterate
from .output import emit, render, summary_table, tree_json
from .reeb import ReebError, reeb_tree
from .scenarios import FORMATS, ConfigError, ScenarioConfig, run_scenario
from .surface import AnnulusChart, DomainError, ScalarField

BUILTIN_FIELDS = ("height", "compact-height", "plateau", "lamination")


def _grid(text: str) -> tuple[int, int]:
    parts = text.lower().replace(",", "x").split("x")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 512 or 512x256, got {text!r}")
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 3:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")
    return dims


def load_field(spec: str, grid, amplitude: float = 1.0) -> ScalarField:
    """A builtin field by name, or a serialized field from a file."""
    if spec == "height":
        f = cons.height_field(grid)
    elif spec == "compact-height":
        f = cons.compact_height_field(grid)
    elif spec == "plateau":
        f = cons.plateau_field(grid)
    elif spec == "lamination":
        f = cons.lamination_field(grid)
    else:
        path = Path(spec)
        if not path.exists():
            raise FileNotFoundError(f"no builtin field or file named {spec!r}; builtins: {', '.join(BUILTIN_FIELDS)}")
        f = ScalarField.load(path)
    return f * amplitude if amplitude != 1.0 else f


def _print_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def cmd_reeb(args) -> int:
    field = load_field(args.field, args.grid, args.amplitude)
    tree = reeb_tree(field)
    text = tree.to_dot() if args.format == "dot" else tree_json(tree)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_percentile(args) -> int:
    field = load_field(args.field, args.grid, args.amplitude)
    tree = reeb_tree(field)
    rows = []
    for h in args.h:
        res = tree.percentile(h)
        rows.append({"h": h, "value": res.value,
                     "point": None if res.point is None else res.point.to_dict(),
                     "gap": None if res.gap is None else res.gap.to_dict()})
    _print_json(rows)
    return 0


def cmd_calabi(args) -> int:
    field = load_field(args.field, args.grid, args.amplitude)
    caps = CapSpec.for_percentile(args.h) if args.h is not None else CapSpec(args.a, args.b)
    r = r_ab_autonomous(field, caps)
    _print_json({
        "calabi": calabi(field),
        "calabi_sphere": calabi_sphere_autonomous(field, caps),
        "sphere_area": caps.sphere_area(field.chart.total_area),
        "r_ab": r.to_dict(),
    })
    return 0


def _scenario_map(name: str, scenario: str, T: int, tau: int):
    if scenario == "annulus":
        phi, psi, g = cons.annulus_maps(T, tau)
    else:
        phi, psi, g = cons.surface_maps()
    maps = {"phi": phi, "psi": psi, "g": g, "g2": iterate(g, 2)}
    return maps[name]


def cmd_rotation(args) -> int:
    f = _scenario_map(args.map, args.scenario, args.T, args.tau)
    rho = rotation_number(f, (args.theta, args.s), args.n)
    _print_json({"map": args.map, "scenario": args.scenario, "point": [args.theta, args.s],
                 "iterates": args.n, "rotation_number": rho})
    return 0


def cmd_winding(args) -> int:
    chart = AnnulusChart.wide()
    center = (args.center_theta, args.center_s)
    if args.map == "g2":
        f = _scenario_map("g2", "surface", 0, 0)
    elif args.map == "rotation":
        c, s = math.cos(args.angle), math.sin(args.angle)
        x0, y0 = center

        def rot(theta, s_):
            dx, dy = theta - x0, s_ - y0
            return x0 + c * dx - s * dy, y0 + s * dx + c * dy

        f = PointMap(chart, rot, "rigid_rotation")
    else:
        f = PointMap(chart, lambda theta, s_: (theta + args.shift, s_ + 0.0), "translation")
    radius = args.radius if args.radius is not None else cons.radius_for_angle()
    w = winding_number(f, center, radius, args.samples)
    _print_json({"map": args.map, "center": list(center), "radius": radius, "samples": args.samples,
                 "winding": w})
    return 0


def cmd_scenario(args) -> int:
    base = ScenarioConfig.from_file(args.config).to_dict() if args.config else {}
    base["scenario"] = args.name
    for key in ("T", "tau", "grid", "tol", "out", "format", "seed"):
        v = getattr(args, key)
        if v is not None:
            base[key] = v
    config = ScenarioConfig.from_dict(base).validate()
    result = run_scenario(config)
    if config.out:
        paths = emit(result, config.format, config.out)
        sys.stdout.write(summary_table(result.certificates))
        for p in paths:
            sys.stdout.write(f"wrote {p}\n")
    else:
        sys.stderr.write(summary_table(result.certificates))
        files = render(result, config.format)
        for name, text in sorted(files.items()):
            if len(files) > 1:
                sys.stdout.write(f"# --- {name}\n")
            sys.stdout.write(text)
    return 0 if result.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="autogap", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def field_args(sp):
        sp.add_argument("--field", default="height",
                        help=f"builtin ({', '.join(BUILTIN_FIELDS)}) or path to a saved field")
        sp.add_argument("--grid", type=_grid, default=(512, 512), help="n_theta x n_s, e.g. 512 or 512x256")
        sp.add_argument("--amplitude", type=float, default=1.0, help="multiply the field by this factor")

    sp = sub.add_parser("reeb", help="measured Reeb tree of a field (JSON or DOT)")
    field_args(sp)
    sp.add_argument("--format", choices=("json", "dot"), default="json")
    sp.add_argument("--out", help="write to this file instead of stdout")
    sp.set_defaults(func=cmd_reeb)

    sp = sub.add_parser("percentile", help="h-percentiles of a field's Reeb tree")
    field_args(sp)
    sp.add_argument("--h", type=float, nargs="+", required=True)
    sp.set_defaults(func=cmd_percentile)

    sp = sub.add_parser("calabi", help="Calabi value, sphere Calabi value and r_{a,b} of a field")
    field_args(sp)
    sp.add_argument("--a", type=float, default=1.0, help="bottom cap area")
    sp.add_argument("--b", type=float, default=1.0, help="top cap area")
    sp.add_argument("--h", type=float, help="shortcut for caps (1, 2h)")
    sp.set_defaults(func=cmd_calabi)

    sp = sub.add_parser("rotation", help="rotation number of a scenario map at a point")
    sp.add_argument("--scenario", choices=("annulus", "surface"), default="annulus")
    sp.add_argument("--map", choices=("phi", "psi", "g", "g2"), default="g")
    sp.add_argument("--T", type=int, default=3)
    sp.add_argument("--tau", type=int, default=5)
    sp.add_argument("--theta", type=float, default=math.pi)
    sp.add_argument("--s", type=float, default=0.5)
    sp.add_argument("--n", type=int, default=100, help="number of iterates")
    sp.set_defaults(func=cmd_rotation)

    sp = sub.add_parser("winding", help="winding number of p -> f(p) - p on a circle")
    sp.add_argument("--map", choices=("g2", "rotation", "translation"), default="g2")
    sp.add_argument("--center-theta", type=float, default=0.0)
    sp.add_argument("--center-s", type=float, default=0.0)
    sp.add_argument("--radius", type=float, help="default: the radius where the twist angle is 0.2")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--angle", type=float, default=0.2, help="angle of the rigid rotation")
    sp.add_argument("--shift", type=float, default=0.5, help="theta shift of the translation")
    sp.set_defaults(func=cmd_winding)

    sp = sub.add_parser("scenario", help="run all certificates of a scenario")
    sp.add_argument("name", choices=("annulus", "surface"))
    sp.add_argument("--config", help="JSON file with scenario settings")
    sp.add_argument("--T", type=int)
    sp.add_argument("--tau", type=int)
    sp.add_argument("--grid", type=_grid)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--out", help="directory for output files")
    sp.add_argument("--format", choices=FORMATS)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_scenario)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (DomainError, ReebError, SupportError, ConsistencyError, WindingError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
