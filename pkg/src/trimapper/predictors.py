"""Pluggable trimap predictors and the native/working-resolution pipeline.

A predictor maps an image plus per-class click masks (and optionally its
own previous output) to per-pixel class logits.  Three implementations:

* ``GeodesicPredictor`` - non-learned: each class scores by negated
  geodesic distance from its click disks, so the trimap is a nearest-seed
  partition that respects image edges.  Lets the full interactive loop run
  without any training.
* ``MlpPredictor``     - small trainable per-pixel perceptron over color,
  position, geodesic-distance and click-disk features.
* ``OraclePredictor``  - upper bound for harness sanity checks: it knows
  the ground truth and corrects every clicked disk perfectly.

Predictions happen at a square working resolution (default 448); the
pipeline downscales the image bilinearly, maps clicks into working
coordinates, and upscales the hard trimap back to native size with
nearest-neighbor sampling.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Mapping, Protocol

import numpy as np
from PIL import Image as PilImage

from .core import (
    Click,
    LabelClass,
    as_image,
    as_trimap,
    check_same_shape,
    encode_clicks,
)
from .rasterops import geodesic_distance

PARAM_FILE_VERSION = 1
MLP_FEATURE_DIM = 11
MLP_HIDDEN = (32, 32)
_GEO_TAU = 10.0  # pixels; softness of the geodesic logits


@dataclass(frozen=True)
class PredictorInput:
    """Inputs for one prediction at the working resolution."""

    image: np.ndarray
    click_masks: Mapping[LabelClass, np.ndarray]
    previous: np.ndarray | None = None

    def __post_init__(self) -> None:
        img = as_image(self.image)
        for c in LabelClass:
            check_same_shape(img, self.click_masks[c], "image and click masks")
        if self.previous is not None:
            check_same_shape(img, self.previous, "image and previous trimap")


class Predictor(Protocol):
    name: str
    uses_previous: bool

    def predict(self, inp: PredictorInput) -> np.ndarray: ...


def logits_to_trimap(logits: np.ndarray) -> np.ndarray:
    """Per-pixel argmax with the fixed class tie order (F before B before U)."""
    z = np.asarray(logits)
    if z.ndim != 3 or z.shape[2] != 3:
        raise ValueError(f"logits must have shape (H, W, 3), got {z.shape}")
    if not np.isfinite(z).all():
        raise ValueError("logits contain non-finite values")
    return as_trimap(np.argmax(z, axis=2).astype(np.uint8))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _diagonal(shape: tuple[int, ...]) -> float:
    return float(np.hypot(shape[1], shape[0]))


class GeodesicPredictor:
    name = "geodesic"
    uses_previous = False

    def __init__(self, lam: float = 4.0, tau: float = _GEO_TAU):
        self.lam = float(lam)
        self.tau = float(tau)

    def predict(self, inp: PredictorInput) -> np.ndarray:
        img = inp.image
        h, w = img.shape[:2]
        floor = -_diagonal(img.shape) / self.tau
        logits = np.full((h, w, 3), floor)
        any_clicks = False
        for c in LabelClass:
            mask = inp.click_masks[c]
            if mask.any():
                any_clicks = True
                logits[..., int(c)] = -geodesic_distance(img, mask, self.lam) / self.tau
        if not any_clicks:
            # Empty canvas: defined default is an all-background trimap.
            logits[..., int(LabelClass.BACKGROUND)] = 0.0
        logits.flags.writeable = False
        return logits


# --- trainable per-pixel perceptron ----------------------------------------


def mlp_features(
    image: np.ndarray, click_masks: Mapping[LabelClass, np.ndarray], lam: float = 4.0
) -> np.ndarray:
    """Per-pixel feature rows: RGB, normalized x/y, per-class diagonal-
    normalized geodesic click distance (1.0 when the class has no clicks),
    and per-class click-disk indicators.  Shape (H*W, 11).
    """
    img = as_image(image)
    h, w = img.shape[:2]
    diag = _diagonal(img.shape)
    feats = np.empty((h, w, MLP_FEATURE_DIM))
    feats[..., 0:3] = img
    feats[..., 3] = (np.arange(w) / max(w - 1, 1))[None, :]
    feats[..., 4] = (np.arange(h) / max(h - 1, 1))[:, None]
    for i, c in enumerate(LabelClass):
        mask = click_masks[c]
        if mask.any():
            feats[..., 5 + i] = geodesic_distance(img, mask, lam) / diag
        else:
            feats[..., 5 + i] = 1.0
        feats[..., 8 + i] = mask
    return feats.reshape(-1, MLP_FEATURE_DIM)


def mlp_init_params(rng: np.random.Generator) -> dict[str, np.ndarray]:
    dims = (MLP_FEATURE_DIM, *MLP_HIDDEN, 3)
    params: dict[str, np.ndarray] = {}
    for i in range(len(dims) - 1):
        fan_in = dims[i]
        params[f"w{i + 1}"] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(dims[i], dims[i + 1]))
        params[f"b{i + 1}"] = np.zeros(dims[i + 1])
    return params


def mlp_forward(params: Mapping[str, np.ndarray], feats: np.ndarray):
    """Forward pass; returns (logits (N, 3), cache for backprop)."""
    h1 = np.maximum(feats @ params["w1"] + params["b1"], 0.0)
    h2 = np.maximum(h1 @ params["w2"] + params["b2"], 0.0)
    z = h2 @ params["w3"] + params["b3"]
    return z, (feats, h1, h2)


def mlp_backward(params: Mapping[str, np.ndarray], cache, dz: np.ndarray) -> dict[str, np.ndarray]:
    feats, h1, h2 = cache
    grads = {"w3": h2.T @ dz, "b3": dz.sum(axis=0)}
    dh2 = (dz @ params["w3"].T) * (h2 > 0.0)
    grads["w2"] = h1.T @ dh2
    grads["b2"] = dh2.sum(axis=0)
    dh1 = (dh2 @ params["w2"].T) * (h1 > 0.0)
    grads["w1"] = feats.T @ dh1
    grads["b1"] = dh1.sum(axis=0)
    return grads


_PARAM_ORDER = ("w1", "b1", "w2", "b2", "w3", "b3")


def params_to_vector(params: Mapping[str, np.ndarray]) -> np.ndarray:
    return np.concatenate([np.asarray(params[k], dtype=np.float64).ravel() for k in _PARAM_ORDER])


def vector_to_params(vec: np.ndarray) -> dict[str, np.ndarray]:
    dims = (MLP_FEATURE_DIM, *MLP_HIDDEN, 3)
    params: dict[str, np.ndarray] = {}
    pos = 0
    for i in range(len(dims) - 1):
        n = dims[i] * dims[i + 1]
        params[f"w{i + 1}"] = vec[pos : pos + n].reshape(dims[i], dims[i + 1]).copy()
        pos += n
        params[f"b{i + 1}"] = vec[pos : pos + dims[i + 1]].copy()
        pos += dims[i + 1]
    if pos != vec.size:
        raise ValueError(f"parameter vector has {vec.size} entries, expected {pos}")
    return params


def save_mlp_params(path, params: Mapping[str, np.ndarray]) -> None:
    """Checkpoint byte layout (all little-endian):

    ``uint32 version | uint32 feature_dim | uint32 n_hidden |
    uint32 hidden[0..n) | uint32 out_dim`` followed by the parameters as a
    flat float32 array in the order w1, b1, w2, b2, w3, b3 (weight matrices
    row-major, shape in_dim x out_dim).
    """
    header = struct.pack(
        f"<III{len(MLP_HIDDEN)}II",
        PARAM_FILE_VERSION,
        MLP_FEATURE_DIM,
        len(MLP_HIDDEN),
        *MLP_HIDDEN,
        3,
    )
    body = params_to_vector(params).astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header + body)


def load_mlp_params(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        data = fh.read()
    version, feature_dim, n_hidden = struct.unpack_from("<III", data, 0)
    if version != PARAM_FILE_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    hidden = struct.unpack_from(f"<{n_hidden}I", data, 12)
    (out_dim,) = struct.unpack_from("<I", data, 12 + 4 * n_hidden)
    if feature_dim != MLP_FEATURE_DIM or hidden != MLP_HIDDEN or out_dim != 3:
        raise ValueError(
            f"checkpoint architecture {feature_dim}/{hidden}/{out_dim} does not match "
            f"{MLP_FEATURE_DIM}/{MLP_HIDDEN}/3"
        )
    vec = np.frombuffer(data[16 + 4 * n_hidden :], dtype="<f4").astype(np.float64)
    return vector_to_params(vec)


class MlpPredictor:
    uses_previous = False

    def __init__(self, params: Mapping[str, np.ndarray], lam: float = 4.0, name: str = "mlp"):
        for key, value in params.items():
            if not np.isfinite(value).all():
                raise ValueError(f"non-finite values in parameter {key!r}")
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        self.lam = float(lam)
        self.name = name

    def predict(self, inp: PredictorInput) -> np.ndarray:
        h, w = inp.image.shape[:2]
        feats = mlp_features(inp.image, inp.click_masks, self.lam)
        z, _ = mlp_forward(self.params, feats)
        logits = z.reshape(h, w, 3)
        logits.flags.writeable = False
        return logits


class OraclePredictor:
    """Knows the ground truth; each click disk is corrected to the true class.

    Pixels of a click disk whose ground-truth class differs from the click's
    are left alone, so a step never damages correct pixels.  Outside the
    clicked disks the previous prediction (or an all-background default)
    passes through unchanged.
    """

    name = "oracle"
    uses_previous = True

    def __init__(self, gt_trimap: np.ndarray):
        self.gt = as_trimap(gt_trimap)

    def predict(self, inp: PredictorInput) -> np.ndarray:
        check_same_shape(inp.image, self.gt, "image and oracle ground truth")
        if inp.previous is not None:
            out = np.array(inp.previous, dtype=np.uint8)
        else:
            out = np.full(self.gt.shape, np.uint8(LabelClass.BACKGROUND))
        for c in LabelClass:
            stamp = inp.click_masks[c] & (self.gt == np.uint8(c))
            out[stamp] = np.uint8(c)
        logits = np.where(
            out[..., None] == np.arange(3, dtype=np.uint8)[None, None, :], 1.0, -1.0
        )
        logits.flags.writeable = False
        return logits


# --- native <-> working resolution pipeline ---------------------------------


@dataclass(frozen=True)
class PredictionResult:
    trimap: np.ndarray          # native resolution
    trimap_working: np.ndarray  # working resolution (input for the next step)
    logits: np.ndarray          # working resolution


def resize_image_bilinear(image: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Resize an image to (width, height) with bilinear interpolation."""
    img = as_image(image)
    w, h = size
    if img.shape[1] == w and img.shape[0] == h:
        return img
    out = np.empty((h, w, 3))
    for c in range(3):
        chan = PilImage.fromarray(img[..., c].astype(np.float32), mode="F")
        out[..., c] = np.asarray(chan.resize((w, h), PilImage.BILINEAR), dtype=np.float64)
    return as_image(np.clip(out, 0.0, 1.0))


def resize_trimap_nearest(trimap: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    t = as_trimap(trimap)
    w, h = size
    if t.shape[1] == w and t.shape[0] == h:
        return t
    img = PilImage.fromarray(t, mode="L")
    return as_trimap(np.asarray(img.resize((w, h), PilImage.NEAREST), dtype=np.uint8))


def scale_clicks(
    clicks: list[Click], native: tuple[int, int], working: tuple[int, int]
) -> list[Click]:
    """Map native-coordinate clicks to working coordinates (floor scaling)."""
    nw, nh = native
    ww, wh = working
    out = []
    for c in clicks:
        x = min(ww - 1, int(c.x * ww / nw))
        y = min(wh - 1, int(c.y * wh / nh))
        out.append(Click(x=x, y=y, label=c.label, ordinal=c.ordinal))
    return out


def predict_trimap(
    predictor: Predictor,
    image: np.ndarray,
    clicks: list[Click],
    working_size: int = 448,
    click_radius: int = 5,
    previous_working: np.ndarray | None = None,
) -> PredictionResult:
    """Run one prediction at the working resolution and lift it back.

    Clicks are given in native coordinates; ``click_radius`` applies at the
    working resolution.
    """
    img = as_image(image)
    nh, nw = img.shape[:2]
    ww = wh = int(working_size)
    for c in clicks:
        if not (0 <= c.x < nw and 0 <= c.y < nh):
            raise ValueError(f"click at ({c.x}, {c.y}) is outside the {nw}x{nh} image")
    work_img = resize_image_bilinear(img, (ww, wh))
    work_clicks = scale_clicks(clicks, (nw, nh), (ww, wh))
    masks = encode_clicks(work_clicks, ww, wh, click_radius)
    logits = predictor.predict(
        PredictorInput(image=work_img, click_masks=masks, previous=previous_working)
    )
    trimap_working = logits_to_trimap(logits)
    trimap_native = resize_trimap_nearest(trimap_working, (nw, nh))
    return PredictionResult(trimap=trimap_native, trimap_working=trimap_working, logits=logits)


def make_predictor(spec: str, gt_trimap: np.ndarray | None = None) -> Predictor:
    """Build a predictor from a CLI-style id: geodesic | mlp:<checkpoint> | oracle."""
    if spec == "geodesic":
        return GeodesicPredictor()
    if spec == "oracle":
        if gt_trimap is None:
            raise ValueError("oracle predictor needs a ground-truth trimap")
        return OraclePredictor(gt_trimap)
    if spec.startswith("mlp:"):
        return MlpPredictor(load_mlp_params(spec[len("mlp:") :]), name=spec)
    raise ValueError(f"unknown predictor {spec!r} (expected geodesic, mlp:<path>, or oracle)")
