"""Batch evaluation: iterative click protocol, curves, summaries, sweeps.

Per image the protocol starts from zero clicks and alternates simulate /
predict / estimate-alpha / measure for up to ``max_clicks`` rounds,
stopping early once the simulator sees no remaining error.  The reported
summary is the per-image minimum over clicks of each error metric (the
result a user keeps when they stop clicking), aggregated by mean.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import SimulationConfig
from .matting import MetricReport, compute_metrics, estimate_alpha
from .predictors import Predictor, predict_trimap
from .simulation import Policy, simulate_step_with_record, write_trajectory
from .training import SyntheticSample, corpus_hash

log = logging.getLogger(__name__)

PredictorFactory = Callable[[SyntheticSample], Predictor]


@dataclass(frozen=True)
class ImageEval:
    image_id: str
    series: list[MetricReport]  # metric after click 1, 2, ...
    records: list[dict]         # trajectory log entries, one per click
    converged: bool
    clicks_used: int
    final: MetricReport         # value held for curve positions past the series
    best: MetricReport          # per-metric minimum over the series


@dataclass(frozen=True)
class EvalRun:
    dataset_id: str
    predictor_id: str
    policy: Policy
    sim_cfg: SimulationConfig
    working_size: int
    corpus_hash: str
    images: list[ImageEval]


def _metric_min(reports: list[MetricReport]) -> MetricReport:
    return MetricReport(
        mse=min(r.mse for r in reports),
        sad=min(r.sad for r in reports),
        mad=min(r.mad for r in reports),
        pixel_err=min(r.pixel_err for r in reports),
    )


def _evaluate_image(
    sample: SyntheticSample,
    predictor: Predictor,
    policy: Policy,
    sim_cfg: SimulationConfig,
    working_size: int,
) -> tuple[list[MetricReport], list[dict], bool, int, MetricReport]:
    image, gt_alpha, gt_trimap = sample.image, sample.gt_alpha, sample.gt_trimap
    result = predict_trimap(predictor, image, [], working_size, sim_cfg.click_radius, None)
    pred = result.trimap
    previous = result.trimap_working
    zero_click = compute_metrics(estimate_alpha(image, pred), gt_alpha, pred, gt_trimap)
    clicks = []
    series: list[MetricReport] = []
    records: list[dict] = []
    converged = False
    for _ in range(sim_cfg.max_clicks):
        decision, record = simulate_step_with_record(
            pred, gt_trimap, sim_cfg, policy, ordinal=len(clicks)
        )
        if decision.converged:
            converged = True
            break
        clicks.append(decision.click)
        records.append(record)
        result = predict_trimap(
            predictor, image, clicks, working_size, sim_cfg.click_radius, previous
        )
        pred = result.trimap
        previous = result.trimap_working
        series.append(compute_metrics(estimate_alpha(image, pred), gt_alpha, pred, gt_trimap))
    final = series[-1] if series else zero_click
    return series, records, converged, len(clicks), final


def evaluate(
    samples: list[SyntheticSample],
    predictor_for: PredictorFactory,
    policy: Policy,
    sim_cfg: SimulationConfig,
    working_size: int,
    dataset_id: str = "dataset",
    predictor_id: str = "predictor",
) -> EvalRun:
    images = []
    for i, sample in enumerate(samples):
        image_id = f"{i:05d}"
        try:
            series, records, converged, clicks_used, final = _evaluate_image(
                sample, predictor_for(sample), policy, sim_cfg, working_size
            )
        except ValueError as exc:
            log.warning("skipping image %s: %s", image_id, exc)
            continue
        best = _metric_min(series) if series else final
        images.append(
            ImageEval(
                image_id=image_id,
                series=series,
                records=records,
                converged=converged,
                clicks_used=clicks_used,
                final=final,
                best=best,
            )
        )
    return EvalRun(
        dataset_id=dataset_id,
        predictor_id=predictor_id,
        policy=policy,
        sim_cfg=sim_cfg,
        working_size=working_size,
        corpus_hash=corpus_hash(samples),
        images=images,
    )


_CURVE_FIELDS = ("mse", "sad", "mad", "pixel_err")


def curve_report(run: EvalRun) -> list[dict]:
    """Mean metric after each click count; images that converged earlier
    contribute their final value to the remaining positions."""
    rows = []
    for n in range(1, run.sim_cfg.max_clicks + 1):
        row = {"click": n}
        for field in _CURVE_FIELDS:
            values = []
            for img in run.images:
                report = img.series[n - 1] if n <= len(img.series) else img.final
                values.append(getattr(report, field))
            row[field] = float(np.mean(values)) if values else float("nan")
        rows.append(row)
    return rows


def summary_rows(run: EvalRun) -> list[dict]:
    rows = []
    for img in run.images:
        rows.append(
            {
                "image_id": img.image_id,
                "clicks_used": img.clicks_used,
                "converged": int(img.converged),
                "best_mse": img.best.mse,
                "best_sad": img.best.sad,
                "best_mad": img.best.mad,
                "best_pixel_err": img.best.pixel_err,
            }
        )
    if rows:
        mean_row = {"image_id": "mean", "clicks_used": float(np.mean([r["clicks_used"] for r in rows]))}
        mean_row["converged"] = float(np.mean([r["converged"] for r in rows]))
        for key in ("best_mse", "best_sad", "best_mad", "best_pixel_err"):
            mean_row[key] = float(np.mean([r[key] for r in rows]))
        rows.append(mean_row)
    return rows


def run_means(run: EvalRun) -> dict:
    """Dataset-mean best-over-clicks metrics plus the final-click mean."""
    out = {}
    if not run.images:
        return {k: float("nan") for k in ("best_mse", "best_sad", "best_mad", "best_pixel_err", "final_mse")}
    for field in _CURVE_FIELDS:
        out[f"best_{field}"] = float(np.mean([getattr(img.best, field) for img in run.images]))
    out["final_mse"] = curve_report(run)[-1]["mse"]
    return out


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(row[c]) for c in columns) + "\n")


def series_rows(run: EvalRun) -> list[dict]:
    """One row per image per click with the raw metric values."""
    rows = []
    for img in run.images:
        for n, report in enumerate(img.series, start=1):
            rows.append(
                {
                    "image_id": img.image_id,
                    "click_count": n,
                    "mse": report.mse,
                    "sad": report.sad,
                    "mad": report.mad,
                    "pixel_err": report.pixel_err,
                }
            )
    return rows


def write_run(run: EvalRun, out_dir) -> None:
    """Write curve.csv, summary.csv, series.csv, trajectories, and the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "curve.csv", ["click", *(_CURVE_FIELDS)], curve_report(run))
    _write_csv(
        out / "summary.csv",
        ["image_id", "clicks_used", "converged", "best_mse", "best_sad", "best_mad", "best_pixel_err"],
        summary_rows(run),
    )
    _write_csv(
        out / "series.csv",
        ["image_id", "click_count", "mse", "sad", "mad", "pixel_err"],
        series_rows(run),
    )
    traj_dir = out / "trajectories"
    traj_dir.mkdir(exist_ok=True)
    for img in run.images:
        write_trajectory(traj_dir / f"{img.image_id}.jsonl", img.records)
    manifest = {
        "dataset_id": run.dataset_id,
        "predictor_id": run.predictor_id,
        "policy": run.policy.value,
        "working_size": run.working_size,
        "corpus_hash": run.corpus_hash,
        "n_images": len(run.images),
        "sim_cfg": dataclasses.asdict(run.sim_cfg),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


SWEEP_PARAMS = ("alpha_threshold", "beta_threshold")


def sweep(
    param: str,
    values: list[float],
    samples: list[SyntheticSample],
    predictor_for: PredictorFactory,
    sim_cfg: SimulationConfig,
    working_size: int,
    dataset_id: str = "dataset",
    predictor_id: str = "predictor",
) -> list[tuple[float, EvalRun]]:
    """Evaluate once per threshold value (policy fixed to the prioritized one)."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}, expected one of {SWEEP_PARAMS}")
    runs = []
    for value in values:
        cfg = dataclasses.replace(sim_cfg, **{param: value})
        runs.append(
            (
                float(value),
                evaluate(
                    samples, predictor_for, Policy.CUPS, cfg, working_size, dataset_id, predictor_id
                ),
            )
        )
    return runs


def write_sweep(param: str, runs: list[tuple[float, EvalRun]], out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for value, run in runs:
        row = {"value": value}
        row.update(run_means(run))
        rows.append(row)
    path = out / f"sweep_{param}.csv"
    _write_csv(
        path,
        ["value", "best_mse", "best_sad", "best_mad", "best_pixel_err", "final_mse"],
        rows,
    )
    return path
