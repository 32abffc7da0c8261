"""Command line interface: run, metrics, sweep, oracle-check.

Exit code 0 only when the run's hard invariants held (per-round game value
bound, protocol order) and, for oracle-check, when every battery agreed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .domain import Transcript
from .harness import (
    compute_metrics,
    load_config,
    oracle_check,
    resolve_config,
    run_experiment,
    sweep,
)
from .kernels import BACKEND


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="run configuration JSON")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="seed offset applied to both streams")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="omnical")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment and persist its files")
    _add_common(p_run)

    p_metrics = sub.add_parser("metrics", help="compute the metrics table for a finished run")
    _add_common(p_metrics)
    p_metrics.add_argument("--workers", type=int, default=1)

    p_sweep = sub.add_parser("sweep", help="trend table over horizons and seeds")
    _add_common(p_sweep)
    p_sweep.add_argument("--horizons", required=True, help="comma separated, ascending")
    p_sweep.add_argument("--seed-count", type=int, default=3)

    p_oracle = sub.add_parser("oracle-check", help="brute-force agreement battery")
    p_oracle.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)

    if args.command == "oracle-check":
        mism = oracle_check(seed=args.seed)
        for name, count in mism.items():
            print(f"oracle-check {name}: {count} mismatches")
        return 0 if not any(mism.values()) else 1

    raw = load_config(args.config)
    offset = args.seed if args.seed is not None else 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.command == "run":
        cfg = resolve_config(raw, seed_offset=offset)
        try:
            result = run_experiment(cfg)
        except Exception as exc:
            print(f"run failed: {exc}", file=sys.stderr)
            return 1
        result.write(out)
        values = [d["game_value"] for d in result.diagnostics]
        worst = max(values) if values else 0.0
        print(
            f"run ok: T={cfg.horizon} events={len(result.registry)} "
            f"max_game_value={worst:.3e} bound={cfg.spacing / 2:.3e} backend={BACKEND}"
        )
        return 0

    if args.command == "metrics":
        cfg = resolve_config(raw, seed_offset=offset)
        transcript = Transcript.read(out / "transcript.jsonl")
        table = compute_metrics(transcript, cfg, workers=args.workers)
        table.write(out / "metrics.csv")
        print(f"metrics ok: {len(table.rows)} rows -> {out / 'metrics.csv'}")
        return 0

    if args.command == "sweep":
        horizons = [int(h) for h in args.horizons.split(",")]
        table = sweep(raw, horizons, args.seed_count)
        table.write(out / "sweep.csv")
        print(f"sweep ok: {len(table.rows)} rows -> {out / 'sweep.csv'}")
        return 0

    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
