"""Provision time versus N_T and alpha for HNDAF, CONV and MULTI."""

import argparse
import csv
import sys

from hndaf.scenario import ScenarioConfig, sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--n-total", default="10,20,30")
    ap.add_argument("--alphas", default="0.1,0.3,0.5,0.7,0.9")
    ap.add_argument("--out", default="fig5a.csv")
    args = ap.parse_args(argv)

    n_values = [int(v) for v in args.n_total.split(",")]
    alphas = [float(v) for v in args.alphas.split(",")]
    configs = [
        ScenarioConfig(framework=fw, n_total=n, alpha=a)
        for fw in ("HNDAF", "CONV", "MULTI")
        for a in alphas
        for n in n_values
    ]
    _, summary = sweep(configs, args.reps, jobs=args.jobs)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["framework", "alpha", "N_T", "mean_provision_time_s"])
        for cfg, mean, _ in summary:
            w.writerow([cfg.framework, cfg.alpha, cfg.n_total, f"{mean:.6f}"])

    table = {(c.framework, c.alpha, c.n_total): m for c, m, _ in summary}
    lo, hi = min(n_values), max(n_values)
    for fw in ("HNDAF", "CONV", "MULTI"):
        for a in alphas:
            ratio = table[fw, a, hi] / table[fw, a, lo]
            print(f"{fw:5s} alpha={a:.1f} R(N_T={hi}/{lo})={ratio:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
