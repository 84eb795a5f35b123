"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import DISTANCE_MODES
from .errors import ConfigError, NumericalError
from .presets import list_presets
from .scenario import (
    diagnose,
    load_scenario,
    parse_scenario,
    run_scenario,
    sweep,
    write_diagnostics_csv,
    write_layouts,
)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qfuca", description="Multidimensional OAM link simulator for QF-UCA arrays.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (
        ("layout", "write logical/physical element layouts"),
        ("diagnose", "report circulant, symmetrization and block residuals"),
        ("run", "run the full chain and write all CSV artifacts"),
        ("sweep", "spectrum efficiency over a preset/distance/SNR grid"),
    ):
        p = sub.add_parser(name, help=text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="YAML scenario file")
        src.add_argument("--preset", help="shipped preset id (defaults for everything else)")
        p.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="noise/symbol seed (overrides run.seed)")
        p.add_argument("--distance-mode", choices=DISTANCE_MODES, help="overrides run.distance_mode")
    sub.add_parser("presets", help="list shipped presets")
    return ap


def _scenario(args):
    sc = load_scenario(args.config) if args.config else parse_scenario({"preset": args.preset})
    changes = {}
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.distance_mode is not None:
        changes["distance_mode"] = args.distance_mode
    return replace(sc, **changes)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "presets":
            print("Layouts are reconstructions with 25 physical elements and R_E = 4 m.")
            for p in list_presets():
                radii = ", ".join(f"{r:g}" for r in p["radii_m"])
                print(
                    f"{p['name']:8s} K={p['counts']} R=({radii}) m  "
                    f"logical={p['logical']} physical={p['physical']}  {p['description']}"
                )
            return 0
        sc = _scenario(args)
        if args.command == "layout":
            for side, s in write_layouts(sc, sc.out_dir).items():
                print(f"{side}: {s.streams} logical, {s.physical} physical, radius {s.radius:g} m")
        elif args.command == "diagnose":
            diag = diagnose(sc)
            sc.out_dir.mkdir(parents=True, exist_ok=True)
            write_diagnostics_csv(diag, sc.out_dir / "diagnostics.csv")
            for k, v in diag.items():
                print(f"{k}: {v}")
        elif args.command == "run":
            for name, path in run_scenario(sc).items():
                print(f"{name}: {path}")
        elif args.command == "sweep":
            print(sweep(sc))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
