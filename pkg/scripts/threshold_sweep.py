#!/usr/bin/env python3
"""Parameter search over the priority-branch thresholds.

Sweeps the error-level threshold (alpha) and the unknown-size threshold
(beta) of the prioritized policy over value grids and writes one summary
CSV per parameter.
"""

import argparse

from trimapper.core import SimulationConfig
from trimapper.harness import sweep, write_sweep
from trimapper.predictors import GeodesicPredictor
from trimapper.training import generate_synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--alphas", default="0,0.05,0.1,0.2,0.4")
    ap.add_argument("--betas", default="0,1,2,4,8")
    ap.add_argument("--beta-sweep-alpha", type=float, default=0.3,
                    help="error-level threshold held fixed while beta is swept "
                         "(large enough that the priority branch is live)")
    ap.add_argument("--out", default="runs/sweeps")
    args = ap.parse_args()

    samples = generate_synthetic(args.seed, args.n, args.size)
    predictor = GeodesicPredictor()
    for param, grid, cfg in (
        ("alpha_threshold", args.alphas, SimulationConfig()),
        ("beta_threshold", args.betas, SimulationConfig(alpha_threshold=args.beta_sweep_alpha)),
    ):
        values = [float(v) for v in grid.split(",") if v.strip()]
        runs = sweep(param, values, samples, lambda s: predictor, cfg, working_size=args.size)
        path = write_sweep(param, runs, args.out)
        print(f"{param}:")
        for value, run_ in runs:
            from trimapper.harness import run_means

            means = run_means(run_)
            print(f"  {value:>6g}: best_mse {means['best_mse']:.3f} final_mse {means['final_mse']:.3f}")
        print(f"  -> {path}")


if __name__ == "__main__":
    main()
