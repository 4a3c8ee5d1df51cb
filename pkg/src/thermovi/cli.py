"""Command line entry point: ``thermovi run|converge|stability|mesh-info``.

Exit codes: 0 success, 2 configuration or argument error, 3 step failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .driver import convergence_study, run, stability_study
from .errors import InvalidArgument, ScenarioError, ThermoVIError, UnsupportedEstimate
from .mesh import LABELS, read_mesh
from .scenario import load_scenario, shipped_config

EXIT_OK, EXIT_PARSE, EXIT_STEP = 0, 2, 3
SCHEMES = ("f10", "f01", "euler-a", "euler-b")


def _config_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    try:
        return shipped_config(name)
    except InvalidArgument:
        raise ScenarioError(f"no such config file or shipped scenario: {name}") from None


def _factors(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("factors must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermovi", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="scenario .ini file, or a shipped name (convergence_1d, beam_3d)")
    common.add_argument("--out-dir", default="out", help="output directory (default: %(default)s)")
    common.add_argument("--integrator", choices=SCHEMES, help="override the scenario's integrator")

    p = sub.add_parser("run", parents=[common], help="simulate a scenario, write diagnostics.csv and snapshots")
    p.add_argument("--snapshot-every", type=int, help="write a VTK snapshot every N steps (0 disables)")

    p = sub.add_parser("converge", parents=[common], help="refinement sweep against the harmonic reference")
    p.add_argument("--levels", type=int, default=5)

    p = sub.add_parser("stability", parents=[common], help="energy growth at multiples of the Courant step")
    p.add_argument("--factors", type=_factors, default=[0.9, 1.5])
    p.add_argument("--steps", type=int, default=1000)

    p = sub.add_parser("mesh-info", help="summarise a mesh file")
    p.add_argument("path")
    return ap


def _mesh_info(path) -> str:
    mesh = read_mesh(path)
    lines = [
        f"dimension {mesh.dim}",
        f"nodes {mesh.n_nodes}",
        f"elements {mesh.n_elements}",
        f"boundary facets {len(mesh.facets)}",
        f"volume {mesh.total_volume:.17g}",
        f"min inscribed diameter {float(mesh.inscribed_diameters.min()):.6g}",
    ]
    for lab in LABELS:
        lines.append(f"label {lab}: {len(mesh.facets_with_label(lab))} facets")
    return "\n".join(lines)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_PARSE

    try:
        if args.verb == "mesh-info":
            print(_mesh_info(args.path))
            return EXIT_OK
        sc = load_scenario(_config_path(args.config))
        out = Path(args.out_dir)
        if args.verb == "run":
            if args.snapshot_every is not None and args.snapshot_every < 0:
                raise ScenarioError("--snapshot-every must be non-negative")
            res = run(sc, out, snapshot_every=args.snapshot_every, integrator=args.integrator)
            if res.status:
                f = res.failure
                print(f"step {f.step} failed: {f.cause_kind}: {f.cause}", file=sys.stderr)
                return EXIT_STEP
            last = res.records[-1]
            print(f"t={last.t:.6g} energy={last.energy:.10g} entropy={last.entropy:.13g}")
            print(f"wrote {out / 'diagnostics.csv'}")
            return EXIT_OK
        if args.verb == "converge":
            table = convergence_study(sc, args.levels, integrator=args.integrator)
            text = table.format()
            out.mkdir(parents=True, exist_ok=True)
            (out / "convergence.csv").write_text(text + "\n")
            print(text)
            return EXIT_OK
        if args.verb == "stability":
            if args.integrator:
                sc = replace(sc, integrator=args.integrator)
            rows = stability_study(sc, args.factors, steps=args.steps)
            lines = ["factor,dt,steps,max_energy_ratio,blew_up"]
            lines += [f"{r.factor:g},{r.dt:.6g},{r.steps},{r.max_energy_ratio:.6g},{int(r.blew_up)}" for r in rows]
            out.mkdir(parents=True, exist_ok=True)
            (out / "stability.csv").write_text("\n".join(lines) + "\n")
            print("\n".join(lines))
            return EXIT_OK
    except ScenarioError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InvalidArgument, UnsupportedEstimate, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ThermoVIError as exc:
        print(f"failed: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_STEP
    return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
