#!/usr/bin/env python3
"""Drive every named experiment once with default windows into one directory."""
import argparse
import sys
from pathlib import Path

from pinninglab.experiments import EXPERIMENTS, run
from pinninglab.records import ExperimentConfig

QUICK_OVERRIDES = {
    "hier-certify": {"zeta_override": 0.08, "gamma_override": 0.5,
                     "epsilon_override": 0.09, "n_override": 16,
                     "samples": 20_000, "disorder_samples": 2_000},
    "clt-check": {"w_samples": 2_000},
    "quenched-scan": {"samples": 16},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs", help="output directory")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    out = Path(args.out)
    for name in sorted(EXPERIMENTS):
        cfg = ExperimentConfig.from_dict({
            "experiment": name, "seed": args.seed,
            **QUICK_OVERRIDES.get(name, {}),
        })
        rec = run(cfg, out / name)
        flags = " ".join(f"{k}={v}" for k, v in rec.flags.items()) or "-"
        print(f"{name:<22s} {rec.wall_time_s:7.1f}s  {flags}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
