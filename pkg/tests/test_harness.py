import dataclasses
import filecmp
from pathlib import Path

import numpy as np
import pytest

from trimapper.core import SimulationConfig
from trimapper.harness import (
    curve_report,
    evaluate,
    run_means,
    summary_rows,
    sweep,
    write_run,
    write_sweep,
)
from trimapper.predictors import GeodesicPredictor, make_predictor
from trimapper.simulation import Policy
from trimapper.training import SyntheticSample, generate_synthetic


def oracle_factory(sample):
    return make_predictor("oracle", gt_trimap=sample.gt_trimap)


def geodesic_factory(sample, predictor=GeodesicPredictor()):
    return predictor


def test_evaluate_oracle_strictly_improves(small_corpus, sim_cfg):
    run = evaluate(small_corpus[:3], oracle_factory, Policy.CUPS, sim_cfg, working_size=64)
    for img in run.images:
        errs = [m.pixel_err for m in img.series]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert img.clicks_used == len(img.series)
        assert len(img.records) == len(img.series)


def test_evaluate_best_bounds_series(small_corpus, sim_cfg):
    run = evaluate(small_corpus[:3], geodesic_factory, Policy.CUPS, sim_cfg, working_size=64)
    for img in run.images:
        for m in img.series:
            assert img.best.mse <= m.mse
            assert img.best.sad <= m.sad
            assert img.best.mad <= m.mad
            assert img.best.pixel_err <= m.pixel_err
        assert img.final == img.series[-1]


def test_evaluate_max_clicks_one_degenerate(small_corpus):
    cfg = SimulationConfig(max_clicks=1)
    run = evaluate(small_corpus[:2], geodesic_factory, Policy.CUPS, cfg, working_size=64)
    for img in run.images:
        assert len(img.series) <= 1
        if img.series:
            assert img.best == img.series[0] == img.final


def test_evaluate_skips_bad_samples(small_corpus, sim_cfg, caplog):
    bad = SyntheticSample(
        image=small_corpus[0].image,
        gt_alpha=np.zeros_like(small_corpus[0].gt_alpha),
        gt_trimap=np.ones_like(small_corpus[0].gt_trimap),  # all background
    )
    run = evaluate(
        [small_corpus[0], bad], geodesic_factory, Policy.CUPS, sim_cfg, working_size=64
    )
    assert len(run.images) == 1


def test_curve_single_image_equals_series(small_corpus, sim_cfg):
    run = evaluate(small_corpus[:1], geodesic_factory, Policy.CUPS, sim_cfg, working_size=64)
    rows = curve_report(run)
    img = run.images[0]
    assert len(rows) == sim_cfg.max_clicks
    for n, row in enumerate(rows, start=1):
        want = img.series[n - 1] if n <= len(img.series) else img.final
        assert row["mse"] == want.mse


def test_curve_oracle_weakly_decreasing(small_corpus, sim_cfg):
    run = evaluate(small_corpus[:3], oracle_factory, Policy.CUPS, sim_cfg, working_size=64)
    rows = curve_report(run)
    errs = [r["pixel_err"] for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
    means = run_means(run)
    assert rows[-1]["mse"] >= means["best_mse"] - 1e-12


def test_summary_rows_have_mean(small_corpus, sim_cfg):
    run = evaluate(small_corpus[:3], geodesic_factory, Policy.CUPS, sim_cfg, working_size=64)
    rows = summary_rows(run)
    assert rows[-1]["image_id"] == "mean"
    assert len(rows) == len(run.images) + 1


def _dirs_equal(a: Path, b: Path) -> bool:
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    if files_a != files_b:
        return False
    return all(filecmp.cmp(a / f, b / f, shallow=False) for f in files_a)


def test_run_outputs_deterministic(tmp_path, small_corpus, sim_cfg):
    for name in ("one", "two"):
        run = evaluate(small_corpus[:3], geodesic_factory, Policy.CUPS, sim_cfg, working_size=64)
        write_run(run, tmp_path / name)
    assert _dirs_equal(tmp_path / "one", tmp_path / "two")
    assert (tmp_path / "one" / "curve.csv").exists()
    assert (tmp_path / "one" / "summary.csv").exists()
    assert (tmp_path / "one" / "manifest.json").exists()
    assert list((tmp_path / "one" / "trajectories").glob("*.jsonl"))


def test_sweep_single_value_matches_evaluate(tmp_path, small_corpus, sim_cfg):
    runs = sweep(
        "alpha_threshold", [0.1], small_corpus[:2], geodesic_factory, sim_cfg, working_size=64
    )
    direct = evaluate(small_corpus[:2], geodesic_factory, Policy.CUPS, sim_cfg, working_size=64)
    assert len(runs) == 1
    value, run = runs[0]
    assert value == 0.1
    assert curve_report(run) == curve_report(direct)
    path = write_sweep("alpha_threshold", runs, tmp_path)
    lines = path.read_text().splitlines()
    assert lines[0] == "value,best_mse,best_sad,best_mad,best_pixel_err,final_mse"
    assert len(lines) == 2


def test_sweep_alpha_zero_equals_itts(tmp_path, small_corpus, sim_cfg):
    samples = small_corpus[:3]
    runs = sweep("alpha_threshold", [0.0], samples, geodesic_factory, sim_cfg, working_size=64)
    itts_run = evaluate(samples, geodesic_factory, Policy.ITTS, sim_cfg, working_size=64)
    _, alpha_zero_run = runs[0]
    write_run(alpha_zero_run, tmp_path / "alpha0")
    write_run(itts_run, tmp_path / "itts")
    for name in ("curve.csv", "summary.csv", "series.csv"):
        assert filecmp.cmp(tmp_path / "alpha0" / name, tmp_path / "itts" / name, shallow=False)


def test_sweep_rejects_unknown_param(small_corpus, sim_cfg):
    with pytest.raises(ValueError):
        sweep("gamma", [1.0], small_corpus[:1], geodesic_factory, sim_cfg, working_size=64)
