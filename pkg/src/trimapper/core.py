"""Shared raster and interaction data model.

Rasters are numpy arrays in row-major order with (0, 0) at the top-left and
pixel centers at integer coordinates.  ``x`` indexes columns, ``y`` indexes
rows, so arrays are indexed ``arr[y, x]``.

Array conventions used throughout the package:

====================  =======================================================
kind                  dtype / shape
====================  =======================================================
Image                 float64 ``(H, W, 3)``, channel values in [0, 1]
Trimap                uint8   ``(H, W)``, values are ``LabelClass`` codes
BinaryMask            bool    ``(H, W)``
DistanceMap           float64 ``(H, W)``, non-negative, units of pixels
AlphaMatte            float64 ``(H, W)``, values in [0, 1]
====================  =======================================================

All arrays handed out by this package are frozen (``writeable=False``) so
they can be shared between threads without defensive copies.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from PIL import Image as PilImage


class LabelClass(IntEnum):
    """The three trimap classes.

    The enum order (FOREGROUND < BACKGROUND < UNKNOWN) is the fixed
    tie-breaking order for every argmax in the package: when scores are
    equal, the earlier class wins.
    """

    FOREGROUND = 0
    BACKGROUND = 1
    UNKNOWN = 2

    @property
    def letter(self) -> str:
        return _CLASS_LETTERS[self]

    @classmethod
    def from_letter(cls, letter: str) -> "LabelClass":
        try:
            return _LETTER_CLASSES[letter.upper()]
        except KeyError:
            raise ValueError(f"unknown label letter {letter!r}, expected one of F, B, U") from None


_CLASS_LETTERS = {LabelClass.FOREGROUND: "F", LabelClass.BACKGROUND: "B", LabelClass.UNKNOWN: "U"}
_LETTER_CLASSES = {v: k for k, v in _CLASS_LETTERS.items()}

# 8-bit PNG encoding of a trimap: the de-facto matting dataset convention.
TRIMAP_PNG_VALUES = {
    LabelClass.BACKGROUND: 0,
    LabelClass.UNKNOWN: 128,
    LabelClass.FOREGROUND: 255,
}
_PNG_VALUE_TO_CLASS = {v: k for k, v in TRIMAP_PNG_VALUES.items()}


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def as_mask(arr: np.ndarray) -> np.ndarray:
    a = np.asarray(arr)
    if a.ndim != 2:
        raise ValueError(f"binary mask must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"raster must be at least 1x1, got shape {a.shape}")
    return _frozen(a.astype(bool, copy=not isinstance(arr, np.ndarray) or a.dtype != bool))


def as_trimap(arr: np.ndarray) -> np.ndarray:
    a = np.asarray(arr)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"trimap must be a 2-D raster, got shape {a.shape}")
    a = a.astype(np.uint8, copy=a.dtype != np.uint8)
    if a.max(initial=0) > int(LabelClass.UNKNOWN):
        bad = int(a.max())
        raise ValueError(f"trimap contains value {bad}, valid codes are 0..2")
    return _frozen(a)


def as_image(arr: np.ndarray) -> np.ndarray:
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 3 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"image must have shape (H, W, 3), got {a.shape}")
    if a.min(initial=0.0) < 0.0 or a.max(initial=0.0) > 1.0:
        raise ValueError("image channel values must lie in [0, 1]")
    return _frozen(a)


def as_alpha(arr: np.ndarray) -> np.ndarray:
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"alpha matte must be a 2-D raster, got shape {a.shape}")
    if a.min(initial=0.0) < 0.0 or a.max(initial=0.0) > 1.0:
        raise ValueError("alpha values must lie in [0, 1]")
    return _frozen(a)


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "rasters") -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ValueError(f"{what} have mismatched dimensions: {a.shape[:2]} vs {b.shape[:2]}")


@dataclass(frozen=True, order=True)
class Click:
    """One user (or simulated) interaction: a labeled pixel position.

    ``ordinal`` is the 0-based position of the click in its session; within
    one session ordinals are unique and contiguous.
    """

    x: int
    y: int
    label: LabelClass
    ordinal: int

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "label": self.label.letter, "ordinal": self.ordinal}

    @classmethod
    def from_json(cls, obj: dict, ordinal: int | None = None) -> "Click":
        return cls(
            x=int(obj["x"]),
            y=int(obj["y"]),
            label=LabelClass.from_letter(str(obj["label"])),
            ordinal=int(obj["ordinal"]) if ordinal is None else ordinal,
        )


@dataclass(frozen=True)
class SimulationConfig:
    """Thresholds and budgets for click simulation and evaluation.

    ``alpha_threshold`` is the error-level bound below which the
    unknown-priority branch of the click policy may fire; ``beta_threshold``
    (pixels) is the unknown-error size above which it keeps its priority.
    """

    alpha_threshold: float = 0.1
    beta_threshold: float = 2.0
    gamma: float = 2.0
    max_clicks: int = 10
    click_radius: int = 5

    def __post_init__(self) -> None:
        # The closed endpoints are legal so threshold sweeps can disable the
        # priority branch outright (alpha_threshold=0 makes it unreachable).
        if not (0.0 <= self.alpha_threshold <= 1.0):
            raise ValueError(f"alpha_threshold must lie in [0, 1], got {self.alpha_threshold}")
        if self.beta_threshold < 0:
            raise ValueError(f"beta_threshold must be >= 0, got {self.beta_threshold}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.max_clicks < 1:
            raise ValueError(f"max_clicks must be >= 1, got {self.max_clicks}")
        if self.click_radius < 1:
            raise ValueError(f"click_radius must be >= 1, got {self.click_radius}")


def trimap_to_mask(trimap: np.ndarray, label: LabelClass) -> np.ndarray:
    """Binary mask of the pixels carrying ``label``.

    The three masks over all labels partition the raster.
    """
    t = as_trimap(trimap)
    return _frozen(t == np.uint8(label))


def trimap_masks(trimap: np.ndarray) -> dict[LabelClass, np.ndarray]:
    return {c: trimap_to_mask(trimap, c) for c in LabelClass}


def masks_to_trimap(masks: dict[LabelClass, np.ndarray]) -> np.ndarray:
    """Inverse of ``trimap_masks`` for masks forming a partition."""
    f = as_mask(masks[LabelClass.FOREGROUND])
    b = as_mask(masks[LabelClass.BACKGROUND])
    u = as_mask(masks[LabelClass.UNKNOWN])
    check_same_shape(f, b)
    check_same_shape(f, u)
    counts = f.astype(np.uint8) + b.astype(np.uint8) + u.astype(np.uint8)
    if not np.all(counts == 1):
        raise ValueError("masks do not partition the raster (some pixel has 0 or >1 labels)")
    t = np.full(f.shape, np.uint8(LabelClass.UNKNOWN))
    t[f] = np.uint8(LabelClass.FOREGROUND)
    t[b] = np.uint8(LabelClass.BACKGROUND)
    return _frozen(t)


def encode_clicks(
    clicks: list[Click], width: int, height: int, radius: float
) -> dict[LabelClass, np.ndarray]:
    """Rasterize clicks as one binary disk mask per class.

    Each class mask is the union of Euclidean disks (``dist <= radius``)
    centered on that class's clicks; masks of different classes may overlap.
    The result does not depend on click order.
    """
    masks = {c: np.zeros((height, width), dtype=bool) for c in LabelClass}
    if clicks:
        yy, xx = np.mgrid[0:height, 0:width]
        r2 = float(radius) * float(radius)
        for click in clicks:
            if not (0 <= click.x < width and 0 <= click.y < height):
                raise ValueError(
                    f"click at ({click.x}, {click.y}) is outside the {width}x{height} raster"
                )
            d2 = (xx - click.x) ** 2 + (yy - click.y) ** 2
            masks[click.label] |= d2 <= r2
    return {c: _frozen(m) for c, m in masks.items()}


# --- PNG / wire encodings -------------------------------------------------


def trimap_to_png_bytes(trimap: np.ndarray) -> bytes:
    t = as_trimap(trimap)
    lut = np.zeros(3, dtype=np.uint8)
    for c, v in TRIMAP_PNG_VALUES.items():
        lut[int(c)] = v
    buf = io.BytesIO()
    PilImage.fromarray(lut[t], mode="L").save(buf, format="PNG")
    return buf.getvalue()


def trimap_from_png_bytes(data: bytes) -> np.ndarray:
    img = PilImage.open(io.BytesIO(data)).convert("L")
    gray = np.asarray(img, dtype=np.uint8)
    # Decode by nearest of {0, 128, 255} so palette round-off survives.
    t = np.full(gray.shape, np.uint8(LabelClass.UNKNOWN))
    t[gray < 64] = np.uint8(LabelClass.BACKGROUND)
    t[gray >= 192] = np.uint8(LabelClass.FOREGROUND)
    return as_trimap(t)


def alpha_to_png_bytes(alpha: np.ndarray) -> bytes:
    a = as_alpha(alpha)
    buf = io.BytesIO()
    PilImage.fromarray(np.rint(a * 255.0).astype(np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def alpha_from_png_bytes(data: bytes) -> np.ndarray:
    img = PilImage.open(io.BytesIO(data)).convert("L")
    return as_alpha(np.asarray(img, dtype=np.float64) / 255.0)


def image_to_png_bytes(image: np.ndarray) -> bytes:
    img = as_image(image)
    buf = io.BytesIO()
    PilImage.fromarray(np.rint(img * 255.0).astype(np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def image_from_png_bytes(data: bytes) -> np.ndarray:
    img = PilImage.open(io.BytesIO(data)).convert("RGB")
    return as_image(np.asarray(img, dtype=np.float64) / 255.0)


def trimap_to_rle(trimap: np.ndarray) -> dict:
    """Compact row-major run-length encoding for UI overlays.

    Returns ``{"width", "height", "values", "lengths"}`` where ``values``
    holds LabelClass codes and ``lengths`` the run lengths; runs cover the
    flattened raster exactly.
    """
    t = as_trimap(trimap)
    flat = t.ravel()
    boundaries = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [flat.size]))
    return {
        "width": int(t.shape[1]),
        "height": int(t.shape[0]),
        "values": [int(v) for v in flat[starts]],
        "lengths": [int(e - s) for s, e in zip(starts, ends)],
    }


def trimap_from_rle(obj: dict) -> np.ndarray:
    values = np.asarray(obj["values"], dtype=np.uint8)
    lengths = np.asarray(obj["lengths"], dtype=np.int64)
    flat = np.repeat(values, lengths)
    if flat.size != int(obj["width"]) * int(obj["height"]):
        raise ValueError("run-length data does not cover the raster")
    return as_trimap(flat.reshape(int(obj["height"]), int(obj["width"])))
