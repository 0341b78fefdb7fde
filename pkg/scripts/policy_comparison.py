#!/usr/bin/env python3
"""Train the small predictor under each click policy and compare matting MSE.

Desk-scale version of the training-strategy ablation: the two-class
simulation (foreground and unknown merged), the plain argmax policy, and
the unknown-prioritized policy are each used for training AND for the
10-click evaluation of their own model on a held-out split.
"""

import argparse
import time

from trimapper.core import SimulationConfig
from trimapper.harness import evaluate, run_means
from trimapper.predictors import MlpPredictor, save_mlp_params
from trimapper.simulation import Policy
from trimapper.training import TrainConfig, generate_synthetic, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--batch-size", type=int, default=8)
    ap.add_argument("--lr", type=float, default=2e-3)
    ap.add_argument("--holdout", type=int, default=40)
    ap.add_argument("--save-checkpoints", default=None, help="directory for per-policy checkpoints")
    args = ap.parse_args()

    samples = generate_synthetic(args.seed, args.n, args.size)
    train_split = samples[: len(samples) - args.holdout]
    eval_split = samples[len(samples) - args.holdout :]
    sim = SimulationConfig()
    cfg = TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr,
        max_inner_iterations=3, rng_seed=args.seed,
    )

    print(f"{'policy':>10} {'train_s':>8} {'best_mse':>9} {'final_mse':>10} {'best_pix':>9}")
    for policy in (Policy.TWOCLASS, Policy.ITTS, Policy.CUPS):
        t0 = time.perf_counter()
        result = train(train_split, cfg, sim, policy=policy)
        elapsed = time.perf_counter() - t0
        predictor = MlpPredictor(result.params)
        run = evaluate(eval_split, lambda s: predictor, policy, sim, working_size=args.size)
        means = run_means(run)
        print(f"{policy.value:>10} {elapsed:>8.0f} {means['best_mse']:>9.3f} "
              f"{means['final_mse']:>10.3f} {means['best_pixel_err']:>9.4f}")
        if args.save_checkpoints:
            from pathlib import Path

            out = Path(args.save_checkpoints)
            out.mkdir(parents=True, exist_ok=True)
            save_mlp_params(out / f"{policy.value}.ckpt", result.params)


if __name__ == "__main__":
    main()
