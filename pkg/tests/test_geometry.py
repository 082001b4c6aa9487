import numpy as np
import pytest

from protoseg.errors import DimensionError
from protoseg.geometry import (
    AnchorConfig,
    center_to_corner,
    corner_to_center,
    decode_boxes,
    encode_boxes,
    generate_anchors,
    iou,
    pairwise_iou,
)


def test_default_grid_sizes_at_550():
    cfg = AnchorConfig(input_size=550)
    assert list(cfg.grid_sizes()) == [69, 35, 18, 9, 5]
    assert cfg.num_anchors() == 19248


def test_anchor_count_matches_grid_enumeration():
    cfg = AnchorConfig(input_size=550)
    expected = sum(g * g * len(cfg.aspect_ratios) * len(cfg.scales) for g in cfg.grid_sizes())
    anchors = generate_anchors(cfg)
    assert anchors.centers.shape == (expected, 4)


def test_anchor_centers_sit_on_half_stride_grid():
    cfg = AnchorConfig(input_size=128)
    anchors = generate_anchors(cfg)
    # first level, first cell: center at half a stride in both axes
    assert anchors.centers[0, 0] == pytest.approx(0.5 * cfg.strides[0])
    assert anchors.centers[0, 1] == pytest.approx(0.5 * cfg.strides[0])
    # aspect ratio 1 makes the first anchor square at the base size
    assert anchors.centers[0, 2] == pytest.approx(cfg.base_sizes[0])
    assert anchors.centers[0, 3] == pytest.approx(cfg.base_sizes[0])


def test_anchor_aspect_ratios_preserve_area():
    cfg = AnchorConfig(input_size=128)
    anchors = generate_anchors(cfg)
    w = anchors.centers[:, 2]
    h = anchors.centers[:, 3]
    per_cell = len(cfg.aspect_ratios)
    areas = (w * h)[:per_cell]
    assert np.allclose(areas, areas[0], rtol=1e-12)
    ratios = (w / h)[:per_cell]
    assert sorted(np.round(ratios, 6).tolist()) == [0.5, 1.0, 2.0]


def test_anchors_are_not_clipped():
    cfg = AnchorConfig(input_size=128)
    corners = generate_anchors(cfg).as_corners()
    # large anchors near the border extend past the image on purpose
    assert corners.min() < 0.0
    assert corners.max() > cfg.input_size


def test_scale_multiplier_enlarges_sides():
    base = generate_anchors(AnchorConfig(input_size=128))
    wide = generate_anchors(AnchorConfig(input_size=128, scale_multiplier=4.0 / 3.0))
    assert np.allclose(wide.centers[:, 2:], base.centers[:, 2:] * (4.0 / 3.0), rtol=1e-12)
    assert np.allclose(wide.centers[:, :2], base.centers[:, :2], rtol=0, atol=0)


def test_anchor_config_validation():
    with pytest.raises(ValueError):
        AnchorConfig(input_size=0)
    with pytest.raises(DimensionError):
        AnchorConfig(input_size=550, strides=(8, 16), base_sizes=(24, 48, 96))
    with pytest.raises(ValueError):
        AnchorConfig(input_size=550, variances=(0.1,))
    with pytest.raises(ValueError):
        AnchorConfig(input_size=550, aspect_ratios=(1.0, -2.0))


def test_corner_center_roundtrip():
    rng = np.random.default_rng(21)
    corners = rng.uniform(0, 100, size=(500, 4))
    corners[:, 2:] = corners[:, :2] + rng.uniform(0.1, 50, size=(500, 2))
    back = center_to_corner(corner_to_center(corners))
    assert np.max(np.abs(back - corners)) < 1e-12


def test_iou_hand_values():
    a = np.array([0.0, 0.0, 10.0, 10.0])
    assert iou(a, a) == pytest.approx(1.0)
    assert iou(a, np.array([10.0, 10.0, 20.0, 20.0])) == 0.0
    assert iou(a, np.array([5.0, 0.0, 15.0, 10.0])) == pytest.approx(50.0 / 150.0)


def test_pairwise_iou_matches_scalar():
    rng = np.random.default_rng(2)
    boxes_a = rng.uniform(0, 60, size=(24, 4))
    boxes_a[:, 2:] = boxes_a[:, :2] + rng.uniform(1, 30, size=(24, 2))
    boxes_b = rng.uniform(0, 60, size=(17, 4))
    boxes_b[:, 2:] = boxes_b[:, :2] + rng.uniform(1, 30, size=(17, 2))
    mat = pairwise_iou(boxes_a, boxes_b)
    assert mat.shape == (24, 17)
    for i in range(24):
        for j in range(17):
            assert mat[i, j] == pytest.approx(iou(boxes_a[i], boxes_b[j]), abs=1e-12)


def test_decode_identity_regressor_recovers_anchor():
    anchors = generate_anchors(AnchorConfig(input_size=550))
    zeros = np.zeros((anchors.centers.shape[0], 4))
    decoded = decode_boxes(zeros, anchors, clamp=False)
    assert np.max(np.abs(decoded - anchors.as_corners())) < 1e-9


def test_encode_decode_roundtrip():
    cfg = AnchorConfig(input_size=550)
    anchors = generate_anchors(cfg)
    rng = np.random.default_rng(33)
    n = anchors.centers.shape[0]
    boxes = rng.uniform(0, 500, size=(n, 4))
    boxes[:, 2:] = boxes[:, :2] + rng.uniform(2, 50, size=(n, 2))
    codes = encode_boxes(boxes, anchors)
    back = decode_boxes(codes, anchors, clamp=False)
    assert np.max(np.abs(back - boxes)) < 1e-9


def test_decode_clamps_to_image():
    cfg = AnchorConfig(input_size=550)
    anchors = generate_anchors(cfg)
    regressors = np.zeros((anchors.centers.shape[0], 4))
    decoded = decode_boxes(regressors, anchors, clamp=True)
    assert decoded.min() >= 0.0
    assert decoded.max() <= cfg.input_size


def test_decode_rejects_huge_size_logits():
    anchors = generate_anchors(AnchorConfig(input_size=550))
    regressors = np.zeros((anchors.centers.shape[0], 4))
    regressors[7, 2] = 300.0  # times variance 0.2 still exceeds the exp guard
    with pytest.raises(ValueError) as err:
        decode_boxes(regressors, anchors)
    assert "7" in str(err.value)


def test_encode_rejects_degenerate_boxes():
    anchors = generate_anchors(AnchorConfig(input_size=550))
    boxes = np.tile(np.array([10.0, 10.0, 20.0, 20.0]), (anchors.centers.shape[0], 1))
    boxes[0] = [30.0, 30.0, 30.0, 40.0]  # zero width
    with pytest.raises(ValueError):
        encode_boxes(boxes, anchors)


def test_regressor_row_count_must_match_anchors():
    anchors = generate_anchors(AnchorConfig(input_size=550))
    with pytest.raises(DimensionError):
        decode_boxes(np.zeros((5, 4)), anchors)
