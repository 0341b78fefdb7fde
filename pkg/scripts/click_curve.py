#!/usr/bin/env python3
"""Per-click error curve of the geodesic predictor on the synthetic corpus.

Generates the pinned corpus, runs the iterative click evaluation, prints
the mean alpha-MSE after each click, and writes the harness CSVs.
"""

import argparse
import time

from trimapper.core import SimulationConfig
from trimapper.harness import curve_report, evaluate, write_run
from trimapper.predictors import GeodesicPredictor
from trimapper.simulation import Policy
from trimapper.training import generate_synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--policy", choices=[p.value for p in Policy], default="cups")
    ap.add_argument("--out", default="runs/click_curve")
    args = ap.parse_args()

    samples = generate_synthetic(args.seed, args.n, args.size)
    predictor = GeodesicPredictor()
    cfg = SimulationConfig()
    t0 = time.perf_counter()
    run = evaluate(
        samples, lambda s: predictor, Policy(args.policy), cfg,
        working_size=args.size, dataset_id=f"synthetic-{args.seed}", predictor_id="geodesic",
    )
    print(f"evaluated {len(run.images)} images in {time.perf_counter() - t0:.1f}s")
    print(f"{'click':>5} {'mse':>10} {'sad':>10} {'pixel_err':>10}")
    for row in curve_report(run):
        print(f"{row['click']:>5} {row['mse']:>10.3f} {row['sad']:>10.5f} {row['pixel_err']:>10.4f}")
    write_run(run, args.out)
    print(f"wrote {args.out}/curve.csv")


if __name__ == "__main__":
    main()
