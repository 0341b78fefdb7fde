import numpy as np
import pytest

from oracles import recover_alpha_least_squares
from trimapper.core import LabelClass
from trimapper.matting import MetricReport, composite, compute_metrics, estimate_alpha

F, B, U = LabelClass.FOREGROUND, LabelClass.BACKGROUND, LabelClass.UNKNOWN


def test_composite_identities():
    rng = np.random.default_rng(0)
    f = rng.random((6, 7, 3))
    b = rng.random((6, 7, 3))
    assert (composite(f, b, np.ones((6, 7))) == f).all()
    assert (composite(f, b, np.zeros((6, 7))) == b).all()
    mid = composite(np.ones((2, 2, 3)), np.zeros((2, 2, 3)), np.full((2, 2), 0.5))
    assert np.allclose(mid, 0.5)


def test_composite_dimension_mismatch():
    with pytest.raises(ValueError):
        composite(np.zeros((2, 2, 3)), np.zeros((3, 2, 3)), np.zeros((2, 2)))


def test_composite_round_trip_recovers_alpha():
    rng = np.random.default_rng(1)
    f = rng.uniform(0.6, 1.0, (10, 10, 3))
    b = rng.uniform(0.0, 0.4, (10, 10, 3))
    alpha = rng.random((10, 10))
    rec = recover_alpha_least_squares(composite(f, b, alpha), f, b)
    assert np.abs(rec - alpha).max() < 1e-6


def test_estimate_alpha_binary_trimap():
    rng = np.random.default_rng(2)
    img = rng.random((8, 8, 3))
    t = np.full((8, 8), B, dtype=np.uint8)
    t[2:5, 2:5] = F
    a = estimate_alpha(img, t)
    assert (a == (t == np.uint8(F)).astype(float)).all()


def test_estimate_alpha_all_background_is_zero():
    img = np.random.default_rng(3).random((6, 6, 3))
    assert (estimate_alpha(img, np.full((6, 6), B, dtype=np.uint8)) == 0).all()
    # no foreground at all: unknown stays zero as well
    t = np.full((6, 6), B, dtype=np.uint8)
    t[2:4, 2:4] = U
    assert (estimate_alpha(img, t) == 0).all()


def test_estimate_alpha_band_monotone_with_midline_half():
    img = np.full((9, 12, 3), 0.5)
    t = np.full((9, 12), B, dtype=np.uint8)
    t[:, :5] = F
    t[:, 5:7] = U  # geometric midline at x = 5.5
    a = estimate_alpha(img, t)
    assert (a[:, :5] == 1).all() and (a[:, 7:] == 0).all()
    band = a[:, 4:8]
    assert (np.diff(band, axis=1) <= 1e-12).all()  # decreasing left to right
    crossings = []
    for row in a:
        x = np.where(row >= 0.5)[0].max()
        crossings.append(x + 0.5)  # 0.5 crossing lies right of the last >=0.5 col
    assert all(abs(c - 5.5) <= 1.0 for c in crossings)


def test_estimate_alpha_exact_on_known_regions():
    rng = np.random.default_rng(4)
    img = rng.random((16, 16, 3))
    t = np.full((16, 16), B, dtype=np.uint8)
    t[3:13, 3:13] = U
    t[6:10, 6:10] = F
    a = estimate_alpha(img, t)
    assert (a[t == np.uint8(F)] == 1.0).all()
    assert (a[t == np.uint8(B)] == 0.0).all()
    assert ((a[t == np.uint8(U)] >= 0) & (a[t == np.uint8(U)] <= 1)).all()


def test_estimate_alpha_unknown_island_unreachable_from_background():
    img = np.full((8, 8, 3), 0.2)
    t = np.full((8, 8), F, dtype=np.uint8)
    t[3:5, 3:5] = U  # surrounded by foreground only
    a = estimate_alpha(img, t)
    assert (a[t == np.uint8(U)] == 1.0).all()
    t2 = np.full((8, 8), B, dtype=np.uint8)
    t2[0, 0] = F  # foreground exists, but unknown island touches only background
    t2[3:5, 3:5] = U
    a2 = estimate_alpha(img, t2)
    assert (a2[t2 == np.uint8(U)] == 0.0).all()


def test_compute_metrics_hand_example():
    pred = np.array([[1.0, 1.0], [0.0, 0.0]])
    gt = np.array([[1.0, 0.0], [0.0, 0.0]])
    m = compute_metrics(pred, gt)
    assert m.mad == 0.25
    assert m.mse == 250.0
    assert m.sad == 0.001
    assert m.pixel_err is None


def test_compute_metrics_symmetry_and_zero():
    rng = np.random.default_rng(5)
    a = rng.random((7, 7))
    b = rng.random((7, 7))
    m1 = compute_metrics(a, b)
    m2 = compute_metrics(b, a)
    assert (m1.mse, m1.sad, m1.mad) == (m2.mse, m2.sad, m2.mad)
    z = compute_metrics(a, a, np.zeros((7, 7), np.uint8), np.zeros((7, 7), np.uint8))
    assert z == MetricReport(mse=0.0, sad=0.0, mad=0.0, pixel_err=0.0)


def test_compute_metrics_pixel_err():
    a = np.zeros((2, 2))
    pt = np.array([[0, 1], [2, 1]], dtype=np.uint8)
    gt = np.array([[0, 1], [1, 1]], dtype=np.uint8)
    assert compute_metrics(a, a, pt, gt).pixel_err == 0.25


def test_compute_metrics_dimension_mismatch():
    with pytest.raises(ValueError):
        compute_metrics(np.zeros((2, 2)), np.zeros((3, 2)))


def test_better_trimaps_give_better_mattes(small_corpus):
    for s in small_corpus[:3]:
        good = estimate_alpha(s.image, s.gt_trimap)
        all_unknown = np.full(s.gt_trimap.shape, np.uint8(U))
        bad = estimate_alpha(s.image, all_unknown)
        assert compute_metrics(good, s.gt_alpha).mse <= compute_metrics(bad, s.gt_alpha).mse
