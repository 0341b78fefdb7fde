"""Click simulation: the error model and the next-click policies.

Given a predicted and a ground-truth trimap, the simulator measures the
per-class error with false-negative masks and their distance-transform
maxima, then picks the class and position of the next corrective click.

Three policies are provided:

* ``itts``     - next class is the plain argmax of the per-class error sizes.
* ``cups``     - like ``itts``, but while the overall error level is below
  ``alpha_threshold`` and the unknown-class error still exceeds
  ``beta_threshold``, the unknown class is clicked first (unknown-region
  recall matters more to downstream matting than its precision).
* ``twoclass`` - ablation: foreground and unknown are merged into a single
  positive class and the simulator behaves like a binary one; clicks carry
  only foreground/background labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .core import Click, LabelClass, SimulationConfig, as_trimap, check_same_shape, trimap_to_mask
from .rasterops import argmax_pixel, distance_transform, mask_and, mask_not, mask_or, max_of


class Policy(str, Enum):
    CUPS = "cups"
    ITTS = "itts"
    TWOCLASS = "twoclass"


@dataclass(frozen=True)
class ErrorReport:
    """Per-class error measurements of a predicted trimap.

    ``fn_masks[c]`` is true where ground truth labels ``c`` but the
    prediction does not; ``d[c]`` is the distance-transform maximum of that
    mask (the radius of the biggest error blob), ``d_t`` the same measure of
    the ground-truth target (foreground-or-unknown) region, and ``e_level``
    the ratio ``d_max / d_t``.
    """

    fn_masks: Mapping[LabelClass, np.ndarray]
    d: Mapping[LabelClass, float]
    d_max: float
    d_t: float
    e_level: float


@dataclass(frozen=True)
class PolicyDecision:
    """Either the next click or the signal that no error remains."""

    click: Click | None

    @property
    def converged(self) -> bool:
        return self.click is None


CONVERGED = PolicyDecision(click=None)


def false_negative_masks(pred: np.ndarray, gt: np.ndarray) -> dict[LabelClass, np.ndarray]:
    """fn[c] = (NOT pred_c) AND gt_c for each class c."""
    p = as_trimap(pred)
    g = as_trimap(gt)
    check_same_shape(p, g, "predicted and ground-truth trimaps")
    return {
        c: mask_and(mask_not(trimap_to_mask(p, c)), trimap_to_mask(g, c)) for c in LabelClass
    }


def target_size(gt: np.ndarray) -> float:
    """Distance-transform maximum of the foreground-or-unknown region."""
    g = as_trimap(gt)
    target = mask_or(
        trimap_to_mask(g, LabelClass.FOREGROUND), trimap_to_mask(g, LabelClass.UNKNOWN)
    )
    if not target.any():
        raise ValueError("empty target: ground truth has no foreground or unknown pixels")
    return max_of(distance_transform(target))


def compute_error_report(pred: np.ndarray, gt: np.ndarray) -> ErrorReport:
    fn = false_negative_masks(pred, gt)
    d = {c: max_of(distance_transform(fn[c])) for c in LabelClass}
    d_max = max(d.values())
    d_t = target_size(gt)
    return ErrorReport(fn_masks=fn, d=d, d_max=d_max, d_t=d_t, e_level=d_max / d_t)


def _argmax_class(d: Mapping[LabelClass, float]) -> LabelClass:
    best = LabelClass.FOREGROUND
    for c in LabelClass:
        if d[c] > d[best]:
            best = c
    return best


def itts_next_class(report: ErrorReport) -> LabelClass:
    """Class with the largest error size; ties go to the fixed class order."""
    if report.d_max <= 0.0:
        raise ValueError("policy called on a converged report (all error sizes are zero)")
    return _argmax_class(report.d)


def cups_next_class(report: ErrorReport, cfg: SimulationConfig) -> LabelClass:
    """Unknown-prioritized class choice.

    Returns UNKNOWN iff ``e_level < alpha_threshold`` and
    ``d[UNKNOWN] > beta_threshold`` (both strict); otherwise falls back to
    the argmax choice.  At the exact boundaries the argmax branch wins.
    """
    if report.d_max <= 0.0:
        raise ValueError("policy called on a converged report (all error sizes are zero)")
    if report.e_level < cfg.alpha_threshold and report.d[LabelClass.UNKNOWN] > cfg.beta_threshold:
        return LabelClass.UNKNOWN
    return _argmax_class(report.d)


def sample_click(
    report: ErrorReport,
    label: LabelClass,
    ordinal: int,
    rng: np.random.Generator | None = None,
) -> Click:
    """Place a click inside the false-negative region of ``label``.

    Deterministic mode (default) clicks the region's distance-transform
    argmax, i.e. the center of the biggest error blob.  With ``rng`` the
    position is instead drawn uniformly from the region (training-time
    diversity switch).
    """
    mask = report.fn_masks[label]
    if not mask.any():
        raise ValueError(f"cannot sample a click: false-negative mask for {label.name} is empty")
    if rng is None:
        x, y = argmax_pixel(distance_transform(mask))
    else:
        ys, xs = np.nonzero(mask)
        i = int(rng.integers(len(xs)))
        x, y = int(xs[i]), int(ys[i])
    return Click(x=x, y=y, label=label, ordinal=ordinal)


def _merged_positive(trimap: np.ndarray) -> np.ndarray:
    return mask_or(
        trimap_to_mask(trimap, LabelClass.FOREGROUND),
        trimap_to_mask(trimap, LabelClass.UNKNOWN),
    )


def _twoclass_step(
    pred: np.ndarray, gt: np.ndarray, ordinal: int, rng: np.random.Generator | None
) -> tuple[PolicyDecision, dict | None]:
    p = as_trimap(pred)
    g = as_trimap(gt)
    check_same_shape(p, g, "predicted and ground-truth trimaps")
    fn_pos = mask_and(mask_not(_merged_positive(p)), _merged_positive(g))
    fn_bg = mask_and(
        mask_not(trimap_to_mask(p, LabelClass.BACKGROUND)),
        trimap_to_mask(g, LabelClass.BACKGROUND),
    )
    d_pos = max_of(distance_transform(fn_pos))
    d_bg = max_of(distance_transform(fn_bg))
    if d_pos <= 0.0 and d_bg <= 0.0:
        return CONVERGED, None
    # Merged positive clicks carry the FOREGROUND label; ties prefer it.
    if d_pos >= d_bg:
        label, mask = LabelClass.FOREGROUND, fn_pos
    else:
        label, mask = LabelClass.BACKGROUND, fn_bg
    if rng is None:
        x, y = argmax_pixel(distance_transform(mask))
    else:
        ys, xs = np.nonzero(mask)
        i = int(rng.integers(len(xs)))
        x, y = int(xs[i]), int(ys[i])
    click = Click(x=x, y=y, label=label, ordinal=ordinal)
    d_t = target_size(g)
    record = _record(Policy.TWOCLASS, click, d_pos, d_bg, 0.0, d_t, max(d_pos, d_bg) / d_t)
    return PolicyDecision(click=click), record


def _record(
    policy: Policy, click: Click, d_f: float, d_b: float, d_u: float, d_t: float, e_level: float
) -> dict:
    return {
        "ordinal": click.ordinal,
        "policy": policy.value,
        "class": click.label.letter,
        "x": click.x,
        "y": click.y,
        "d_F": d_f,
        "d_B": d_b,
        "d_U": d_u,
        "d_t": d_t,
        "e_level": e_level,
    }


def simulate_step_with_record(
    pred: np.ndarray,
    gt: np.ndarray,
    cfg: SimulationConfig,
    policy: Policy,
    ordinal: int,
    rng: np.random.Generator | None = None,
) -> tuple[PolicyDecision, dict | None]:
    """One simulator step plus its trajectory-log record (None when converged).

    For the twoclass policy the d_F/d_B columns hold the merged-positive and
    background error sizes and d_U is reported as 0.
    """
    if policy is Policy.TWOCLASS:
        return _twoclass_step(pred, gt, ordinal, rng)
    report = compute_error_report(pred, gt)
    if report.d_max <= 0.0:
        return CONVERGED, None
    if policy is Policy.CUPS:
        label = cups_next_class(report, cfg)
    else:
        label = itts_next_class(report)
    click = sample_click(report, label, ordinal, rng)
    record = _record(
        policy,
        click,
        report.d[LabelClass.FOREGROUND],
        report.d[LabelClass.BACKGROUND],
        report.d[LabelClass.UNKNOWN],
        report.d_t,
        report.e_level,
    )
    return PolicyDecision(click=click), record


def simulate_step(
    pred: np.ndarray,
    gt: np.ndarray,
    cfg: SimulationConfig,
    policy: Policy,
    ordinal: int,
    rng: np.random.Generator | None = None,
) -> PolicyDecision:
    """Produce the next simulated click, or CONVERGED when no error remains.

    Convergence means every false-negative mask the chosen policy looks at
    is empty (the two merged-class masks for ``twoclass``, all three class
    masks otherwise).
    """
    decision, _ = simulate_step_with_record(pred, gt, cfg, policy, ordinal, rng)
    return decision


def write_trajectory(path, records: list[dict]) -> None:
    """Write one JSON object per simulator step, one line each."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_trajectory(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
