"""HNDAF provision time versus leaf storage capacity and beta."""

import argparse
import csv
import sys

from hndaf.scenario import ScenarioConfig, sweep

MB = 1_000_000


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--n-total", type=int, default=30)
    ap.add_argument("--capacities-mb", default="100,200,300,400")
    ap.add_argument("--betas", default="0.1,0.5,0.9")
    ap.add_argument("--cadence", choices=("global", "per_nf"), default="global")
    ap.add_argument("--out", default="fig5b.csv")
    args = ap.parse_args(argv)

    caps = [int(v) for v in args.capacities_mb.split(",")]
    betas = [float(v) for v in args.betas.split(",")]
    base = ScenarioConfig(n_total=args.n_total, cadence=args.cadence)
    configs = [base.with_(beta=b, leaf_capacity_bytes=c * MB) for b in betas for c in caps]
    _, summary = sweep(configs, args.reps, jobs=args.jobs)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["beta", "capacity_mb", "mean_provision_time_s"])
        for cfg, mean, _ in summary:
            w.writerow([cfg.beta, cfg.leaf_capacity_bytes // MB, f"{mean:.6f}"])
            print(f"beta={cfg.beta:.1f} capacity={cfg.leaf_capacity_bytes // MB}MB mean={mean:.3f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
