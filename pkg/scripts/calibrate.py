"""Scan the periodic model update interval and report the N_T=30/N_T=10
growth ratio of each framework, to pick a default that lands in the target
windows (CONV 5.0-9.0, MULTI 4.7-8.7, HNDAF 2.5-4.7)."""

import argparse
import math
import sys

from hndaf.scenario import ScenarioConfig, sweep

WINDOWS = {"CONV": (5.0, 9.0), "MULTI": (4.7, 8.7), "HNDAF": (2.5, 4.7)}


def ratios(period, reps, jobs):
    out = {}
    for fw in WINDOWS:
        base = ScenarioConfig(framework=fw, model_update_period_s=period)
        _, s = sweep([base.with_(n_total=10), base.with_(n_total=30)], reps, jobs=jobs)
        out[fw] = s[1][1] / s[0][1]
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--periods", default="inf,60,64,66,68,72")
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)
    for text in args.periods.split(","):
        period = math.inf if text == "inf" else float(text)
        r = ratios(period, args.reps, args.jobs)
        inside = all(lo <= r[fw] <= hi for fw, (lo, hi) in WINDOWS.items())
        ordered = r["HNDAF"] < r["MULTI"] <= r["CONV"]
        cells = " ".join(f"{fw}={v:.2f}" for fw, v in r.items())
        print(f"period={text:>5s} {cells} in_windows={inside} ordered={ordered}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
