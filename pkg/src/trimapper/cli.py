"""Command-line entry point: gen / train / eval / sweep / predict / serve.

Every flag can also be set through an environment variable named
``TRIMAPPER_<FLAG>`` (dashes as underscores), e.g. ``TRIMAPPER_SEED=7``.
Commands are deterministic under a fixed ``--seed`` and exit nonzero with a
one-line reason on invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import Click, LabelClass, SimulationConfig, alpha_to_png_bytes, image_from_png_bytes, trimap_from_png_bytes, trimap_to_png_bytes
from .harness import evaluate, sweep, write_run, write_sweep
from .matting import estimate_alpha
from .predictors import make_predictor, mlp_init_params, predict_trimap, save_mlp_params
from .simulation import Policy
from .training import (
    TrainConfig,
    generate_synthetic,
    load_corpus,
    save_corpus,
    train,
    write_train_log,
)


def _env(name: str, default):
    return os.environ.get(f"TRIMAPPER_{name.upper().replace('-', '_')}", default)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=float(_env("alpha", 0.1)),
                   help="error-level threshold of the unknown-priority branch")
    p.add_argument("--beta", type=float, default=float(_env("beta", 2.0)),
                   help="unknown error-size threshold (pixels)")
    p.add_argument("--gamma", type=float, default=float(_env("gamma", 2.0)),
                   help="focal exponent of the training loss")
    p.add_argument("--max-clicks", type=int, default=int(_env("max-clicks", 10)))
    p.add_argument("--click-radius", type=int, default=int(_env("click-radius", 5)))


def _sim_cfg(args) -> SimulationConfig:
    return SimulationConfig(
        alpha_threshold=args.alpha,
        beta_threshold=args.beta,
        gamma=args.gamma,
        max_clicks=args.max_clicks,
        click_radius=args.click_radius,
    )


def _predictor_factory(spec: str):
    if spec == "oracle":
        return lambda sample: make_predictor("oracle", gt_trimap=sample.gt_trimap)
    predictor = make_predictor(spec)
    return lambda sample: predictor


def cmd_gen(args) -> int:
    samples = generate_synthetic(args.seed, args.n, args.size)
    manifest = save_corpus(samples, args.out)
    print(f"wrote {manifest['count']} samples to {args.out} (hash {manifest['corpus_hash'][:12]})")
    return 0


def cmd_train(args) -> int:
    samples = load_corpus(args.corpus)
    holdout = int(round(len(samples) * args.holdout_fraction))
    train_samples = samples[: len(samples) - holdout]
    eval_samples = samples[len(samples) - holdout :]
    if not train_samples:
        raise ValueError("corpus has no training samples after the holdout split")
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        max_inner_iterations=args.inner,
        rng_seed=args.seed,
    )
    result = train(
        train_samples,
        cfg,
        _sim_cfg(args),
        policy=Policy(args.policy),
        eval_samples=eval_samples or None,
    )
    save_mlp_params(args.out, result.params)
    if args.log:
        write_train_log(args.log, result.log_rows)
    last = result.log_rows[-1] if result.log_rows else {"mean_loss": float("nan")}
    print(f"wrote checkpoint {args.out} ({cfg.epochs} epochs, final loss {last['mean_loss']:.5f})")
    return 0


def cmd_eval(args) -> int:
    samples = load_corpus(args.corpus)
    run = evaluate(
        samples,
        _predictor_factory(args.predictor),
        Policy(args.policy),
        _sim_cfg(args),
        working_size=args.resolution or samples[0].image.shape[0],
        dataset_id=str(args.corpus),
        predictor_id=args.predictor,
    )
    write_run(run, args.out)
    from .harness import run_means

    means = run_means(run)
    print(f"wrote evaluation run to {args.out} ({len(run.images)} images)")
    print(
        "best-over-clicks means: mse %.4f sad %.5f mad %.5f pixel_err %.5f"
        % (means["best_mse"], means["best_sad"], means["best_mad"], means["best_pixel_err"])
    )
    return 0


def cmd_sweep(args) -> int:
    samples = load_corpus(args.corpus)
    param = {"alpha": "alpha_threshold", "beta": "beta_threshold"}[args.param]
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if len(values) < 1:
        raise ValueError("sweep needs at least one value")
    runs = sweep(
        param,
        values,
        samples,
        _predictor_factory(args.predictor),
        _sim_cfg(args),
        working_size=args.resolution or samples[0].image.shape[0],
        dataset_id=str(args.corpus),
        predictor_id=args.predictor,
    )
    path = write_sweep(param, runs, args.out)
    for value, run in runs:
        write_run(run, Path(args.out) / f"{args.param}_{value:g}")
    print(f"wrote sweep table {path}")
    return 0


def _load_clicks(path) -> list[Click]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError("clicks file must hold a JSON array of {x, y, label}")
    return [Click.from_json(obj, ordinal=i) for i, obj in enumerate(data)]


def cmd_predict(args) -> int:
    image = image_from_png_bytes(Path(args.image).read_bytes())
    clicks = _load_clicks(args.clicks) if args.clicks else []
    gt_trimap = None
    if args.gt_trimap:
        gt_trimap = trimap_from_png_bytes(Path(args.gt_trimap).read_bytes())
    predictor = make_predictor(args.predictor, gt_trimap=gt_trimap)
    working = args.resolution or 448
    result = predict_trimap(predictor, image, clicks, working, args.click_radius)
    alpha = estimate_alpha(image, result.trimap)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trimap.png").write_bytes(trimap_to_png_bytes(result.trimap))
    (out / "alpha.png").write_bytes(alpha_to_png_bytes(alpha))
    print(f"wrote {out / 'trimap.png'} and {out / 'alpha.png'}")
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    cfg = ServiceConfig(
        predictor=args.predictor,
        working_size=args.resolution or 448,
        session_ttl_seconds=args.ttl,
        max_megapixels=args.max_megapixels,
        sim=_sim_cfg(args),
        persist_dir=args.persist_dir,
    )
    serve(cfg, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trimapper", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p.add_argument("--n", type=int, default=int(_env("n", 200)))
    p.add_argument("--size", type=int, default=int(_env("size", 64)))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the mlp predictor on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", default=None, help="training-log CSV path")
    p.add_argument("--epochs", type=int, default=int(_env("epochs", 25)))
    p.add_argument("--batch-size", type=int, default=int(_env("batch-size", 32)))
    p.add_argument("--lr", type=float, default=float(_env("lr", 5e-4)))
    p.add_argument("--inner", type=int, default=int(_env("inner", 3)),
                   help="max gradient-free click-injection iterations per sample")
    p.add_argument("--holdout-fraction", type=float, default=float(_env("holdout-fraction", 0.2)))
    p.add_argument("--policy", choices=[pol.value for pol in Policy],
                   default=str(_env("policy", "cups")))
    p.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    _add_sim_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the iterative click evaluation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--predictor", default=str(_env("predictor", "geodesic")),
                   help="geodesic | mlp:<checkpoint> | oracle")
    p.add_argument("--policy", choices=[pol.value for pol in Policy],
                   default=str(_env("policy", "cups")))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p.add_argument("--resolution", type=int, default=None,
                   help="working resolution (default: corpus native size)")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="threshold parameter search")
    p.add_argument("--corpus", required=True)
    p.add_argument("--param", choices=["alpha", "beta"], required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--predictor", default=str(_env("predictor", "geodesic")))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p.add_argument("--resolution", type=int, default=None)
    _add_sim_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("predict", help="single-image prediction from a clicks file")
    p.add_argument("--image", required=True)
    p.add_argument("--clicks", default=None, help='JSON array of {"x", "y", "label"}')
    p.add_argument("--predictor", default=str(_env("predictor", "geodesic")))
    p.add_argument("--gt-trimap", default=None, help="required for the oracle predictor")
    p.add_argument("--out", default=".")
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--click-radius", type=int, default=int(_env("click-radius", 5)))
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--host", default=str(_env("host", "127.0.0.1")))
    p.add_argument("--port", type=int, default=int(_env("port", 8000)))
    p.add_argument("--predictor", default=str(_env("predictor", "geodesic")))
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--ttl", type=float, default=float(_env("ttl", 3600.0)))
    p.add_argument("--max-megapixels", type=float, default=float(_env("max-megapixels", 16.0)))
    p.add_argument("--persist-dir", default=_env("persist-dir", None),
                   help="directory for crash-recovery session storage")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
