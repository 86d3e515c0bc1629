"""Test-split errors of the D5 and D3 throughput predictors over many seeds."""

import argparse
import sys

import numpy as np

from hndaf.predictor import feature_study


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--ridge-lambda", type=float, default=1e-6)
    args = ap.parse_args(argv)

    rows = feature_study(args.n, range(args.seeds), args.ridge_lambda)
    for fs in ("D5", "D3"):
        sel = [r for r in rows if r["feature_set"] == fs]
        mse, mae, rmse = (np.mean([r[k] for r in sel]) for k in ("mse", "mae", "rmse"))
        print(f"{fs}: mse={mse:.3f} mae={mae:.3f} rmse={rmse:.3f} over {len(sel)} seeds")
    return 0


if __name__ == "__main__":
    sys.exit(main())
