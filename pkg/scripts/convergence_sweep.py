"""Relative error of the exact partial-sum covariance against the limit along a ladder of N.

    python scripts/convergence_sweep.py --preset farima-sine --N 64 256 1024 4096
"""

import argparse

from mfinvariance.analysis import invariance_report
from mfinvariance.config import PRESETS, ScenarioConfig, load_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", choices=PRESETS, default="fwn-sine")
    ap.add_argument("--N", type=int, nargs="+", default=[64, 256, 1024, 4096])
    ap.add_argument("--times", type=float, nargs="+", default=[0.25, 0.5, 0.75, 1.0])
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    cfg = ScenarioConfig.build(load_preset(args.preset))
    rep = invariance_report(cfg.model, cfg.profile, args.N, args.times, threads=args.threads)
    print(f"{'N':>6} {'max abs err':>12} {'max rel err':>12}")
    for N, a, r in rep.tables["invariance"]:
        print(f"{N:>6} {a:12.4e} {r:12.4e}")
    if "invariance_rel_err_vs_N" in rep.slopes:
        print(f"log-log slope of the relative error: {rep.slopes['invariance_rel_err_vs_N']:.3f}")


if __name__ == "__main__":
    main()
