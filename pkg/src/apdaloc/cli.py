"""Command-line entry point: ``apdaloc simulate | track | bench | config``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import ExperimentConfig, dump_yaml, parse_variant
from .filter import VARIANTS
from .harness import _fmt, export, git_describe, run_experiment, run_seeds, track_scans
from .simulator import read_scan_file, simulate, write_scan_file

log = logging.getLogger("apdaloc")


def _add_common(p: argparse.ArgumentParser, algorithm_many: bool) -> None:
    p.add_argument("--config", type=Path, help="YAML config file (a run manifest also works)")
    if algorithm_many:
        p.add_argument(
            "--algorithm", action="append", choices=sorted(VARIANTS), help="variant to run; repeatable (default: all)"
        )
    else:
        p.add_argument("--algorithm", choices=sorted(VARIANTS), help="variant to run (default: AL5)")
    p.add_argument("--runs", type=int, help="number of Monte-Carlo runs")
    p.add_argument("--seed", type=int, help="master seed (non-negative integer)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--workers", type=int, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apdaloc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate scans and ground truth")
    _add_common(p, algorithm_many=False)

    p = sub.add_parser("track", help="run the filter on a scan file")
    _add_common(p, algorithm_many=False)
    p.add_argument("--scans", type=Path, required=True, help="scan file written by 'simulate'")

    p = sub.add_parser("bench", help="Monte-Carlo study over the selected variants")
    _add_common(p, algorithm_many=True)

    p = sub.add_parser("config", help="print the resolved configuration as YAML")
    _add_common(p, algorithm_many=True)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    for key, attr in (("runs", "runs"), ("seed", "seed"), ("workers", "workers")):
        value = getattr(args, key, None)
        if value is not None:
            changes[attr] = value
    if getattr(args, "out", None) is not None:
        changes["output"] = str(args.out)
    algo = getattr(args, "algorithm", None)
    if algo:
        names = algo if isinstance(algo, list) else [algo]
        changes["variants"] = tuple(parse_variant(a) for a in dict.fromkeys(names))
    return cfg.replace(**changes) if changes else cfg


def _single_variant(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.algorithm:
        return cfg
    labels = [v.label for v in cfg.variants]
    return cfg.replace(variants=(cfg.variants[labels.index("AL5")] if "AL5" in labels else cfg.variants[0],))


def _manifest(cfg: ExperimentConfig, extra: dict | None = None) -> str:
    data = {
        "config": cfg.to_dict(),
        "build": {"package": __version__, "git": git_describe(), "kernel_backend": kernels.BACKEND},
    }
    if extra:
        data.update(extra)
    return dump_yaml(data)


def cmd_simulate(cfg: ExperimentConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    sc = cfg.scenario
    for run in range(cfg.runs):
        scen_seed, _ = run_seeds(cfg.seed, run)
        real = simulate(sc, np.random.default_rng(scen_seed))
        stem = f"run{run:04d}"
        write_scan_file(out / f"{stem}_scans.jsonl", sc.anchor_list, sc.dt, real.scans)
        with (out / f"{stem}_truth.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "t", "x", "y", "vx", "vy"])
            for n, row in enumerate(real.truth):
                w.writerow([n, _fmt(sc.time(n))] + [_fmt(v) for v in row])
    (out / "manifest.yaml").write_text(_manifest(cfg))
    log.info("wrote %d realization(s) to %s", cfg.runs, out)
    return 0


def cmd_track(cfg: ExperimentConfig, scans_path: Path) -> int:
    anchors, dt, steps = read_scan_file(scans_path)
    sc = cfg.scenario
    positions = tuple(tuple(float(c) for c in a.position) for a in anchors)
    if positions != tuple(tuple(a) for a in sc.anchors) or dt != sc.dt:
        log.info("using anchors and dt from %s", scans_path)
        cfg = cfg.replace(scenario=dataclasses.replace(sc, anchors=positions, dt=dt))
    variant = cfg.variants[0]
    _, filt_seed = run_seeds(cfg.seed, 0)
    states, us, qs, lost = track_scans(steps, cfg, variant, np.random.default_rng(filt_seed))
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    j = len(anchors)
    lost_set = set(lost)
    with (out / f"track_{variant.label}.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["n", "t", "est_x", "est_y", "est_vx", "est_vy"]
            + [f"u_{a.id}" for a in anchors]
            + [f"q_{a.id}" for a in anchors]
            + ["lost"]
        )
        for i, step in enumerate(steps):
            n = step[0].time_index if step else i + 1
            w.writerow(
                [n, _fmt(round(n * dt, 9))]
                + [_fmt(v) for v in states[i]]
                + [_fmt(v) for v in us[i, :j]]
                + [_fmt(v) for v in qs[i, :j]]
                + [int(n in lost_set)]
            )
    (out / "manifest.yaml").write_text(_manifest(cfg, {"scans": str(scans_path)}))
    log.info("tracked %d steps; %d lost step(s)", len(steps), len(lost))
    return 0


def cmd_bench(cfg: ExperimentConfig) -> int:
    results = run_experiment(cfg)
    for path in export(results, cfg, cfg.output):
        log.info("wrote %s", path)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (OSError, ValueError, TypeError) as err:
        print(f"apdaloc: invalid configuration: {err}", file=sys.stderr)
        return 2
    if args.command == "config":
        sys.stdout.write(cfg.to_yaml())
        return 0
    if args.command == "simulate":
        return cmd_simulate(cfg)
    if args.command == "track":
        return cmd_track(_single_variant(cfg, args), args.scans)
    return cmd_bench(cfg)


if __name__ == "__main__":
    sys.exit(main())
