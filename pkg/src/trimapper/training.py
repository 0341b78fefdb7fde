"""Iterative training of the trainable predictor, plus synthetic data.

The training loop mirrors the interactive protocol: every sample starts
from one seed click, a few simulated corrective clicks are injected between
gradient-free predictions, and only the final prediction receives a loss.
The loss is a normalized focal loss, which keeps gradient magnitudes alive
as predictions become mostly correct.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    Click,
    LabelClass,
    SimulationConfig,
    alpha_from_png_bytes,
    alpha_to_png_bytes,
    as_alpha,
    as_image,
    as_trimap,
    encode_clicks,
    image_from_png_bytes,
    image_to_png_bytes,
    trimap_from_png_bytes,
    trimap_to_mask,
    trimap_to_png_bytes,
)
from .matting import composite, compute_metrics, estimate_alpha
from .predictors import (
    MlpPredictor,
    logits_to_trimap,
    mlp_backward,
    mlp_features,
    mlp_forward,
    mlp_init_params,
)
from .rasterops import argmax_pixel, dilate, distance_transform
from .simulation import Policy, simulate_step

log = logging.getLogger(__name__)

NFL_FALLBACK_EPS = 1e-12


@dataclass(frozen=True)
class SyntheticSample:
    """One generated matting sample.

    The trimap's unknown region covers every pixel with fractional alpha;
    foreground pixels have alpha exactly 1 and background pixels exactly 0.
    """

    image: np.ndarray
    gt_alpha: np.ndarray
    gt_trimap: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 25
    batch_size: int = 32
    learning_rate: float = 5e-4
    lr_decay_factor: float = 0.1
    lr_decay_at: float = 0.8  # fraction of epochs after which the rate decays
    max_inner_iterations: int = 3
    rng_seed: int = 0
    random_click_placement: bool = False

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_inner_iterations < 0:
            raise ValueError(f"max_inner_iterations must be >= 0, got {self.max_inner_iterations}")


def normalized_focal_loss(
    logits: np.ndarray, gt: np.ndarray, gamma: float
) -> tuple[float, np.ndarray, bool]:
    """Focal loss normalized by the summed focal weights.

    ``loss = sum((1-p)^gamma * -log p) / sum((1-p)^gamma)`` where ``p`` is
    the softmax confidence of the true class at each pixel.  Returns
    ``(loss, dloss/dlogits, used_fallback)``.  The gradient differentiates
    through the normalizer as well.  When the normalizer underflows (all
    pixels essentially correct, the 0/0 limit) the loss falls back to plain
    mean cross-entropy and the flag is set.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    z = np.asarray(logits, dtype=np.float64)
    t = as_trimap(gt)
    if z.shape[:2] != t.shape or z.shape[-1] != 3:
        raise ValueError(f"logits shape {z.shape} does not match trimap shape {t.shape}")
    flat = z.reshape(-1, 3)
    y = t.reshape(-1).astype(np.int64)
    n = flat.shape[0]
    shifted = flat - flat.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1))
    logp_all = shifted - logsumexp[:, None]
    p_all = np.exp(logp_all)
    rows = np.arange(n)
    p = p_all[rows, y]
    logp = logp_all[rows, y]
    onehot = np.zeros_like(flat)
    onehot[rows, y] = 1.0

    u = 1.0 - p
    w = u**gamma
    norm = float(w.sum())
    if norm < NFL_FALLBACK_EPS:
        loss = float(np.mean(-logp))
        dz = (p_all - onehot) / n
        return loss, dz.reshape(z.shape), True

    numer = float((-w * logp).sum())
    loss = numer / norm
    if gamma == 0.0:
        dn_dp = -1.0 / p
        dw_dp = np.zeros_like(p)
    else:
        upow = np.where(u > 0.0, u ** (gamma - 1.0), 0.0)
        dn_dp = gamma * upow * logp - np.where(u > 0.0, w / p, 0.0)
        dw_dp = -gamma * upow
    dl_dp = (dn_dp * norm - numer * dw_dp) / (norm * norm)
    dz = dl_dp[:, None] * p[:, None] * (onehot - p_all)
    return loss, dz.reshape(z.shape), False


class Adam:
    """Adaptive-moment gradient descent with bias correction."""

    def __init__(self, lr: float = 5e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        self.t += 1
        out = {}
        for key, value in params.items():
            g = grads[key]
            m = self._m.get(key)
            v = self._v.get(key)
            if m is None:
                m = np.zeros_like(value)
                v = np.zeros_like(value)
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            self._m[key] = m
            self._v[key] = v
            m_hat = m / (1.0 - self.beta1**self.t)
            v_hat = v / (1.0 - self.beta2**self.t)
            out[key] = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return out


# --- synthetic data ---------------------------------------------------------


def _texture(rng: np.random.Generator, size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size] / size
    m = np.zeros((size, size))
    for _ in range(3):
        fx, fy = rng.uniform(-4.0, 4.0, 2)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        m += rng.uniform(0.1, 0.4) * np.sin(2.0 * np.pi * (fx * xx + fy * yy) + phase)
    return np.clip(0.5 + m, 0.0, 1.0)


def _two_tone_layer(rng: np.random.Generator, size: int, lo: float, hi: float) -> np.ndarray:
    tone_a = rng.uniform(lo, hi, 3)
    tone_b = rng.uniform(lo, hi, 3)
    mix = _texture(rng, size)[..., None]
    return tone_a[None, None, :] * mix + tone_b[None, None, :] * (1.0 - mix)


def _blob_shape(rng: np.random.Generator, size: int) -> np.ndarray:
    # Blob radii span small specks to object-filling shapes so the target
    # size (and with it the reachable error levels) covers a wide range.
    yy, xx = np.mgrid[0:size, 0:size]
    field = np.zeros((size, size))
    n_blobs = int(rng.integers(1, 4))
    sigma_hi = 0.30 if n_blobs == 1 else 0.18
    for _ in range(n_blobs):
        center = rng.uniform(0.3 * size, 0.7 * size, 2)
        for _ in range(int(rng.integers(2, 5))):
            bump = np.clip(center + rng.normal(0.0, 0.06 * size, 2), 0.1 * size, 0.9 * size)
            amp = rng.uniform(0.6, 1.0)
            sigma = rng.uniform(0.07 * size, sigma_hi * size)
            field += amp * np.exp(-((xx - bump[0]) ** 2 + (yy - bump[1]) ** 2) / (2.0 * sigma**2))
    return field >= 0.55


def _signed_distance(shape: np.ndarray) -> np.ndarray:
    # Positive inside the shape, negative outside; no border interaction.
    from .rasterops import _squared_distance_to_sites  # site-based core, exact

    inside = np.sqrt(_squared_distance_to_sites(~shape))
    outside = np.sqrt(_squared_distance_to_sites(shape))
    return np.where(shape, inside, -outside)


def _make_sample(rng: np.random.Generator, size: int) -> SyntheticSample:
    shape = _blob_shape(rng, size)
    while not shape.any() or shape.all():
        shape = _blob_shape(rng, size)
    sd = _signed_distance(shape)
    band = rng.uniform(2.0, 6.0)
    steep = 2.0 * np.log(199.0) / band  # alpha crosses 0.005/0.995 at -/+ band/2
    alpha = 1.0 / (1.0 + np.exp(-steep * sd))
    alpha[alpha >= 0.995] = 1.0
    alpha[alpha <= 0.005] = 0.0

    fg = alpha >= 0.995
    bg = alpha <= 0.005
    unknown = dilate(~(fg | bg), 2.0)
    trimap = np.full(alpha.shape, np.uint8(LabelClass.UNKNOWN))
    trimap[fg & ~unknown] = np.uint8(LabelClass.FOREGROUND)
    trimap[bg & ~unknown] = np.uint8(LabelClass.BACKGROUND)

    fg_layer = _two_tone_layer(rng, size, 0.5, 1.0)
    bg_layer = _two_tone_layer(rng, size, 0.0, 0.5)
    image = composite(as_image(fg_layer), as_image(bg_layer), as_alpha(alpha))
    return SyntheticSample(image=image, gt_alpha=as_alpha(alpha), gt_trimap=as_trimap(trimap))


def generate_synthetic(seed: int, n: int, size: int) -> list[SyntheticSample]:
    """Deterministic synthetic matting corpus: smooth blobs over textured
    two-tone backgrounds with a sigmoid alpha band along each blob boundary.
    """
    if size < 32:
        raise ValueError(f"size must be >= 32, got {size}")
    rng = np.random.default_rng(seed)
    return [_make_sample(rng, size) for _ in range(n)]


def _quantized(sample: SyntheticSample) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    img = np.rint(sample.image * 255.0).astype(np.uint8)
    alpha = np.rint(sample.gt_alpha * 255.0).astype(np.uint8)
    return img, alpha, sample.gt_trimap


def corpus_hash(samples: list[SyntheticSample]) -> str:
    """Stable identity of a corpus, invariant to disk round-trips (arrays are
    hashed at PNG precision, i.e. 8 bits per channel)."""
    h = hashlib.sha256()
    h.update(struct.pack("<I", len(samples)))
    for s in samples:
        img, alpha, trimap = _quantized(s)
        h.update(struct.pack("<II", *img.shape[:2]))
        h.update(img.tobytes())
        h.update(alpha.tobytes())
        h.update(trimap.tobytes())
    return h.hexdigest()


def save_corpus(samples: list[SyntheticSample], out_dir) -> dict:
    out = Path(out_dir)
    for sub in ("images", "alphas", "trimaps"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    ids = [f"{i:05d}" for i in range(len(samples))]
    for sid, s in zip(ids, samples):
        (out / "images" / f"{sid}.png").write_bytes(image_to_png_bytes(s.image))
        (out / "alphas" / f"{sid}.png").write_bytes(alpha_to_png_bytes(s.gt_alpha))
        (out / "trimaps" / f"{sid}.png").write_bytes(trimap_to_png_bytes(s.gt_trimap))
    manifest = {
        "format": 1,
        "count": len(samples),
        "ids": ids,
        "corpus_hash": corpus_hash(samples),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def load_corpus(corpus_dir) -> list[SyntheticSample]:
    root = Path(corpus_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise ValueError(f"no corpus manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    samples = []
    for sid in manifest["ids"]:
        samples.append(
            SyntheticSample(
                image=image_from_png_bytes((root / "images" / f"{sid}.png").read_bytes()),
                gt_alpha=alpha_from_png_bytes((root / "alphas" / f"{sid}.png").read_bytes()),
                gt_trimap=trimap_from_png_bytes((root / "trimaps" / f"{sid}.png").read_bytes()),
            )
        )
    return samples


# --- iterative training loop ------------------------------------------------


def initial_click(gt_trimap: np.ndarray) -> Click | None:
    """Seed click at the center of the ground-truth foreground (unknown when
    there is no foreground; None when the sample is all background)."""
    for label in (LabelClass.FOREGROUND, LabelClass.UNKNOWN):
        mask = trimap_to_mask(gt_trimap, label)
        if mask.any():
            x, y = argmax_pixel(distance_transform(mask))
            return Click(x=x, y=y, label=label, ordinal=0)
    return None


def _sample_loss(
    sample: SyntheticSample,
    params: dict[str, np.ndarray],
    cfg: TrainConfig,
    sim_cfg: SimulationConfig,
    policy: Policy,
    rng: np.random.Generator,
) -> tuple[float, dict[str, np.ndarray], int] | None:
    seed_click = initial_click(sample.gt_trimap)
    if seed_click is None:
        log.warning("skipping all-background sample")
        return None
    h, w = sample.gt_trimap.shape
    clicks = [seed_click]
    click_rng = rng if cfg.random_click_placement else None
    inner = int(rng.integers(0, cfg.max_inner_iterations + 1))
    for _ in range(inner):
        feats = mlp_features(sample.image, encode_clicks(clicks, w, h, sim_cfg.click_radius))
        z, _ = mlp_forward(params, feats)
        pred = logits_to_trimap(z.reshape(h, w, 3))
        decision = simulate_step(
            pred, sample.gt_trimap, sim_cfg, policy, ordinal=len(clicks), rng=click_rng
        )
        if decision.converged:
            break
        clicks.append(decision.click)
    feats = mlp_features(sample.image, encode_clicks(clicks, w, h, sim_cfg.click_radius))
    z, cache = mlp_forward(params, feats)
    loss, dz, _ = normalized_focal_loss(z.reshape(h, w, 3), sample.gt_trimap, sim_cfg.gamma)
    grads = mlp_backward(params, cache, dz.reshape(-1, 3))
    return loss, grads, len(clicks)


def iterative_train_step(
    batch: list[SyntheticSample],
    params: dict[str, np.ndarray],
    optimizer: Adam,
    cfg: TrainConfig,
    sim_cfg: SimulationConfig,
    policy: Policy,
    rng: np.random.Generator,
) -> tuple[dict[str, np.ndarray], dict]:
    """One optimizer update from one batch.

    Per sample: a foreground seed click, then up to ``max_inner_iterations``
    gradient-free prediction/click-injection rounds, then one final
    prediction whose loss drives the single parameter update.
    """
    total = {k: np.zeros_like(v) for k, v in params.items()}
    losses = []
    clicks_used = []
    for sample in batch:
        result = _sample_loss(sample, params, cfg, sim_cfg, policy, rng)
        if result is None:
            continue
        loss, grads, n_clicks = result
        losses.append(loss)
        clicks_used.append(n_clicks)
        for k in total:
            total[k] += grads[k]
    metrics = {
        "loss": float(np.mean(losses)) if losses else 0.0,
        "samples": len(losses),
        "skipped": len(batch) - len(losses),
        "mean_clicks": float(np.mean(clicks_used)) if clicks_used else 0.0,
    }
    if losses:
        mean_grads = {k: v / len(losses) for k, v in total.items()}
        params = optimizer.step(params, mean_grads)
    return params, metrics


def quick_eval(
    params: dict[str, np.ndarray],
    samples: list[SyntheticSample],
    sim_cfg: SimulationConfig,
    policy: Policy,
) -> dict:
    """Interactive evaluation at corpus resolution: clicks up to the budget,
    then the final-state alpha MSE / trimap pixel error / clicks used."""
    from .harness import evaluate  # local import: harness depends on this module

    predictor = MlpPredictor(params)
    run = evaluate(
        samples,
        lambda sample: predictor,
        policy,
        sim_cfg,
        working_size=samples[0].image.shape[0] if samples else 0,
        dataset_id="train-eval",
        predictor_id="mlp",
    )
    finals = [img.final for img in run.images]
    return {
        "eval_mse_alpha": float(np.mean([m.mse for m in finals])) if finals else float("nan"),
        "eval_pixel_err": float(np.mean([m.pixel_err for m in finals])) if finals else float("nan"),
        "clicks_to_converge": (
            float(np.mean([img.clicks_used for img in run.images])) if run.images else float("nan")
        ),
    }


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    log_rows: list[dict]


def train(
    train_samples: list[SyntheticSample],
    cfg: TrainConfig,
    sim_cfg: SimulationConfig,
    policy: Policy = Policy.CUPS,
    eval_samples: list[SyntheticSample] | None = None,
    init_params: dict[str, np.ndarray] | None = None,
) -> TrainResult:
    """Full training run; returns final parameters and one log row per epoch."""
    rng = np.random.default_rng(cfg.rng_seed)
    params = init_params if init_params is not None else mlp_init_params(rng)
    optimizer = Adam(lr=cfg.learning_rate)
    decay_epoch = int(np.ceil(cfg.epochs * cfg.lr_decay_at))
    rows = []
    for epoch in range(cfg.epochs):
        if cfg.epochs > 1 and epoch == decay_epoch:
            optimizer.lr = cfg.learning_rate * cfg.lr_decay_factor
        order = rng.permutation(len(train_samples))
        epoch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_samples[i] for i in order[start : start + cfg.batch_size]]
            params, metrics = iterative_train_step(
                batch, params, optimizer, cfg, sim_cfg, policy, rng
            )
            if metrics["samples"]:
                epoch_losses.extend([metrics["loss"]] * metrics["samples"])
        row = {"epoch": epoch, "mean_loss": float(np.mean(epoch_losses)) if epoch_losses else 0.0}
        if eval_samples:
            row.update(quick_eval(params, eval_samples, sim_cfg, policy))
        else:
            row.update(
                {
                    "eval_mse_alpha": float("nan"),
                    "eval_pixel_err": float("nan"),
                    "clicks_to_converge": float("nan"),
                }
            )
        rows.append(row)
        log.info(
            "epoch %d: loss=%.5f eval_mse=%.4f",
            epoch,
            row["mean_loss"],
            row["eval_mse_alpha"],
        )
    return TrainResult(params=params, log_rows=rows)


TRAIN_LOG_COLUMNS = ["epoch", "mean_loss", "eval_mse_alpha", "eval_pixel_err", "clicks_to_converge"]


def write_train_log(path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(TRAIN_LOG_COLUMNS) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    str(row["epoch"]) if col == "epoch" else f"{row[col]:.9g}"
                    for col in TRAIN_LOG_COLUMNS
                )
                + "\n"
            )
