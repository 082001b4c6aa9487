import math

import numpy as np
import pytest

from protoseg.evaluation import (
    DEFAULT_THRESHOLDS,
    ApReport,
    evaluate_ap,
    interpolated_ap,
)
from protoseg.errors import FormatError
from protoseg.maskops import rle_encode


def det(image_id, category, score, bbox, mask=None, final=None):
    rec = {
        "image_id": image_id,
        "category": category,
        "score": score,
        "final_score": score if final is None else final,
        "bbox": list(bbox),
    }
    if mask is not None:
        rec["mask"] = rle_encode(mask)
    return rec


def gt_data(anns):
    return {
        "images": [{"id": i} for i in sorted({a["image_id"] for a in anns})],
        "annotations": anns,
        "categories": [{"id": c} for c in sorted({a["category_id"] for a in anns})],
    }


def ann(image_id, category, bbox, mask=None, ann_id=None):
    rec = {
        "id": ann_id if ann_id is not None else 0,
        "image_id": image_id,
        "category_id": category,
        "bbox": list(bbox),
        "area": bbox[2] * bbox[3],
    }
    if mask is not None:
        rec["segmentation"] = rle_encode(mask)
    return rec


def test_default_thresholds():
    assert list(DEFAULT_THRESHOLDS) == pytest.approx(
        [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]
    )


def test_interpolated_ap_degenerate():
    assert interpolated_ap([], 0) == 0.0
    assert interpolated_ap([], 5) == 0.0
    assert interpolated_ap([True], 0) == 0.0


def test_interpolated_ap_single_perfect():
    assert interpolated_ap([True], 1) == pytest.approx(1.0)


def test_interpolated_ap_miss_then_hit():
    # FP first: best precision at every positive recall is 0.5
    assert interpolated_ap([False, True], 1) == pytest.approx(0.5)


def test_hand_pr_case():
    gts = gt_data([ann("i", 1, [0.0, 0.0, 10.0, 10.0])])
    dets = [
        det("i", 1, 0.9, [0.0, 0.0, 10.0, 6.0]),  # iou 0.60
        det("i", 1, 0.8, [0.0, 0.0, 10.0, 9.5]),  # iou 0.95
    ]
    report = evaluate_ap(dets, gts, iou_kind="box")
    assert report.ap50 == pytest.approx(1.0, abs=1e-9)
    assert report.ap75 == pytest.approx(0.5, abs=1e-9)
    assert report.ap == pytest.approx(0.65, abs=1e-9)
    assert report.num_gts == 1
    assert report.num_dets == 2


def test_perfect_detections_score_one():
    anns, dets = [], []
    for i, cls in enumerate([1, 2, 2]):
        bbox = [10.0 * i, 0.0, 8.0, 8.0]
        anns.append(ann("a", cls, bbox, ann_id=i))
        dets.append(det("a", cls, 0.9 - 0.1 * i, bbox))
    report = evaluate_ap(dets, gt_data(anns), iou_kind="box")
    assert report.ap == pytest.approx(1.0)
    assert report.ap50 == pytest.approx(1.0)
    assert report.ap75 == pytest.approx(1.0)
    assert report.per_class == {1: pytest.approx(1.0), 2: pytest.approx(1.0)}


def test_duplicate_detection_is_false_positive():
    bbox = [0.0, 0.0, 10.0, 10.0]
    gts = gt_data([ann("i", 1, bbox)])
    dets = [det("i", 1, 0.9, bbox), det("i", 1, 0.8, bbox)]
    report = evaluate_ap(dets, gts, iou_kind="box")
    # the duplicate caps precision at 0.5 beyond recall 1.0. AP stays 1.0
    # because precision 1.0 is already achieved at every recall point.
    assert report.ap == pytest.approx(1.0)
    gts2 = gt_data([ann("i", 1, bbox, ann_id=1), ann("i", 1, [40.0, 40.0, 10.0, 10.0], ann_id=2)])
    report2 = evaluate_ap(dets, gts2, iou_kind="box")
    # second gt never found: recall stops at 0.5, so 51 of 101 points score
    assert report2.ap == pytest.approx(51.0 / 101.0)


def test_class_without_gt_is_omitted():
    bbox = [0.0, 0.0, 10.0, 10.0]
    gts = gt_data([ann("i", 1, bbox)])
    dets = [det("i", 1, 0.9, bbox), det("i", 7, 0.99, bbox)]
    report = evaluate_ap(dets, gts, iou_kind="box")
    assert set(report.per_class) == {1}
    assert report.ap == pytest.approx(1.0)


def test_missed_class_scores_zero():
    gts = gt_data([ann("i", 1, [0.0, 0.0, 10.0, 10.0], ann_id=1), ann("i", 2, [20.0, 0.0, 10.0, 10.0], ann_id=2)])
    dets = [det("i", 1, 0.9, [0.0, 0.0, 10.0, 10.0])]
    report = evaluate_ap(dets, gts, iou_kind="box")
    assert report.per_class[1] == pytest.approx(1.0)
    assert report.per_class[2] == 0.0
    assert report.ap == pytest.approx(0.5)


def test_per_image_cap():
    bbox = [0.0, 0.0, 10.0, 10.0]
    gts = gt_data([ann("i", 1, bbox)])
    dets = [det("i", 1, 0.9, [50.0, 50.0, 5.0, 5.0]), det("i", 1, 0.5, bbox)]
    capped = evaluate_ap(dets, gts, iou_kind="box", max_dets=1)
    assert capped.num_dets == 1
    assert capped.ap == 0.0  # only the stray high-scored det survives the cap
    full = evaluate_ap(dets, gts, iou_kind="box", max_dets=100)
    assert full.ap > 0.0


def test_mask_iou_kind():
    canvas = np.zeros((12, 12), dtype=bool)
    gt_mask = canvas.copy()
    gt_mask[0:10, 0:10] = True
    det_mask = canvas.copy()
    det_mask[0:6, 0:10] = True  # iou 0.6
    gts = gt_data([ann("i", 1, [0.0, 0.0, 10.0, 10.0], mask=gt_mask)])
    dets = [det("i", 1, 0.9, [0.0, 0.0, 10.0, 6.0], mask=det_mask)]
    report = evaluate_ap(dets, gts, iou_kind="mask")
    assert report.ap50 == pytest.approx(1.0)
    assert report.ap75 == 0.0


def test_score_key_switch():
    bbox = [0.0, 0.0, 10.0, 10.0]
    near = [0.0, 0.0, 10.0, 9.5]
    off = [0.0, 0.0, 10.0, 6.0]
    gts = gt_data([ann("i", 1, bbox)])
    dets = [
        det("i", 1, 0.9, off, final=0.54),
        det("i", 1, 0.7, near, final=0.63),
    ]
    by_conf = evaluate_ap(dets, gts, iou_kind="box", score_key="score")
    by_final = evaluate_ap(dets, gts, iou_kind="box", score_key="final_score")
    assert by_conf.ap75 == pytest.approx(0.5)
    assert by_final.ap75 == pytest.approx(1.0)


def test_rank_ties_resolve_by_input_order():
    bbox = [0.0, 0.0, 10.0, 10.0]
    gts = gt_data([ann("i", 1, bbox)])
    dets = [det("i", 1, 0.5, bbox), det("i", 1, 0.5, [50.0, 50.0, 5.0, 5.0])]
    report = evaluate_ap(dets, gts, iou_kind="box")
    assert report.ap == pytest.approx(1.0)
    report_rev = evaluate_ap(dets[::-1], gts, iou_kind="box")
    # stray first now: every precision point halves
    assert report_rev.ap == pytest.approx(0.5)


def test_monotone_transform_invariance_smoke():
    rng = np.random.default_rng(73)
    bbox_list = [[10.0 * i, 0.0, 9.0, 9.0] for i in range(6)]
    gts = gt_data([ann("i", 1 + (i % 2), b, ann_id=i) for i, b in enumerate(bbox_list)])
    dets = []
    scores = rng.uniform(0.1, 0.9, size=6)
    for i, b in enumerate(bbox_list):
        shrunk = [b[0], b[1], b[2], b[3] - i]  # varying iou per det
        dets.append(det("i", 1 + (i % 2), float(scores[i]), shrunk))
    base = evaluate_ap(dets, gts, iou_kind="box").ap
    for a, b in [(2.0, 0.0), (0.5, 0.1), (10.0, -0.5)]:
        moved = [dict(d, final_score=a * d["final_score"] + b) for d in dets]
        assert evaluate_ap(moved, gts, iou_kind="box").ap == base


def test_area_breakdown():
    small_box = [0.0, 0.0, 10.0, 10.0]  # area 100 < 32^2
    gts = gt_data([ann("i", 1, small_box)])
    dets = [det("i", 1, 0.9, small_box)]
    report = evaluate_ap(dets, gts, iou_kind="box", with_area_breakdown=True)
    assert report.ap_by_area["small"] == pytest.approx(1.0)
    assert math.isnan(report.ap_by_area["medium"])
    assert math.isnan(report.ap_by_area["large"])


def test_bad_gt_rejected():
    with pytest.raises(FormatError):
        evaluate_ap([], {"images": []}, iou_kind="box")


def test_bad_iou_kind_rejected():
    with pytest.raises(ValueError):
        evaluate_ap([], gt_data([ann("i", 1, [0, 0, 1, 1])]), iou_kind="giou")


def test_report_as_dict_roundtrips_keys():
    report = ApReport(
        ap=0.5,
        ap50=0.6,
        ap75=0.4,
        per_class={1: 0.5},
        per_threshold={0.5: 0.6},
        num_gts=3,
        num_dets=4,
    )
    d = report.as_dict()
    assert d["per_class"] == {"1": 0.5}
    assert d["per_threshold"] == {"0.50": 0.6}
