#!/usr/bin/env python3
"""Run the bundled demo benchmark config and print the headline numbers."""

from __future__ import annotations

import argparse
from pathlib import Path

from tixbench.harness import load_config, run_and_report

REPO = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(REPO / "configs" / "demo.yaml"))
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    config = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    bench, paths = run_and_report(config, jobs=args.jobs)

    print(f"records: {len(bench.records)}   config digest: {bench.meta['config_digest']}")
    print("\noverall normalized MAE (mean over datasets):")
    for row in sorted(
        (a for a in bench.aggregates if a["level"] == "overall"), key=lambda a: a["mae"]
    ):
        print(f"  {row['imputer_id']:<18} {row['mae']:.4f}")
    if bench.ranks:
        print("\naverage ranks (lower is better):")
        for name, rank in sorted(bench.ranks.items(), key=lambda kv: kv[1]):
            print(f"  {name:<18} {rank:.3f}")
    print(f"\nreport: {paths['markdown']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
