"""Bias and spread of the Hölder estimator on exact fBm, then on a preset.

Each seed gives one estimate from ``--replicates`` paths; the spread across
seeds shows how much of the tolerance is Monte Carlo noise.

    python scripts/holder_calibration.py --H 0.6 0.75 0.9 --seeds 5
"""

import argparse

import numpy as np

from mfinvariance.analysis import fbm_increment_cov, holder_estimate
from mfinvariance.config import PRESETS, ScenarioConfig, load_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--H", type=float, nargs="+", default=[0.6, 0.75, 0.9])
    ap.add_argument("--preset", choices=PRESETS, default="farima-sine")
    ap.add_argument("--t0", type=float, nargs="+", default=[0.5, 1.0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--replicates", type=int, default=1000)
    ap.add_argument("--window", type=float, default=0.1)
    ap.add_argument("--cells", type=int, default=64)
    args = ap.parse_args()
    dt = args.window / args.cells
    for H in args.H:
        cov = fbm_increment_cov(H, args.cells, dt)
        est = [holder_estimate(None, 1.0, args.window, args.replicates, s, cells=args.cells,
                               increment_cov=cov)[0] for s in range(args.seeds)]
        print(f"fBm H={H:.3f}: mean {np.mean(est):.4f} sd {np.std(est):.4f}")
    cfg = ScenarioConfig.build(load_preset(args.preset))
    for t0 in args.t0:
        est = [holder_estimate(cfg.profile, t0, args.window, args.replicates, s, cfg.asympt, args.cells)[0]
               for s in range(args.seeds)]
        print(f"{args.preset} t0={t0:g} h={float(cfg.profile(t0)):.4f}: "
              f"mean {np.mean(est):.4f} sd {np.std(est):.4f}")


if __name__ == "__main__":
    main()
