"""Command-line entry points: batch runs, the block-grid sweep, and trajectory
certification."""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    ExperimentConfig,
    check_sweep_monotonicity,
    certify_trajectory,
    load_config,
    run_experiment,
    sweep_table1,
    table1_manifest,
)
from .vobject import TrayGeometry, build_offset_object
from . import harness


def _load_or_default(path: str | None) -> ExperimentConfig:
    return load_config(path) if path else ExperimentConfig()


def cmd_run(args) -> int:
    config = _load_or_default(args.config)
    if args.mode:
        config.mode = args.mode
    if args.seed is not None:
        config.seed = args.seed
    if args.duration is not None:
        config.duration = args.duration
    if args.out:
        config.out_dir = args.out
    result = run_experiment(config)
    json.dump(result.summary, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def cmd_sweep(args) -> int:
    if args.preset != "table1":
        print(f"unknown sweep preset {args.preset!r}", file=sys.stderr)
        return 2
    config = _load_or_default(args.config)
    cells = sweep_table1(config)
    violations = check_sweep_monotonicity(cells)
    out = {
        "cells": {f"offset={o},mu={m},h={h}": {"s_max": s, "b_max": b}
                  for (o, m, h), (s, b) in sorted(cells.items())},
        "monotonicity_violations": violations,
    }
    json.dump(out, sys.stdout, indent=2)
    print()
    return 0 if not violations else 1


def cmd_certify(args) -> int:
    if args.manifest:
        with open(args.manifest) as fh:
            doc = json.load(fh)
        cfg = harness.config_from_dict({"manifest": doc.get("manifest", doc),
                                        "offset_object": doc.get("offset_object", "derive"),
                                        "tray": doc.get("tray", {"radius": 0.2})})
        manifest = cfg.manifest
        offset_obj = cfg.offset_override or build_offset_object(manifest, cfg.tray)
    else:
        manifest = table1_manifest()
        offset_obj = build_offset_object(manifest, TrayGeometry())
    report = certify_trajectory(args.trajectory, manifest, offset_obj)
    json.dump(report, sys.stdout, indent=2)
    print()
    return 0 if report["stable"] else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="trayport",
                                 description="multi-object tray transport controller suite")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one F/FSC experiment")
    p_run.add_argument("--config", default=None)
    p_run.add_argument("--mode", choices=("F", "FSC"), default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--duration", type=float, default=None)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid sweep with monotonicity check")
    p_sweep.add_argument("--preset", default="table1")
    p_sweep.add_argument("--config", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_cert = sub.add_parser("certify", help="audit a recorded trajectory against a manifest")
    p_cert.add_argument("--trajectory", required=True)
    p_cert.add_argument("--manifest", default=None)
    p_cert.set_defaults(func=cmd_certify)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
