import numpy as np
import pytest

from lemur.metrics import (
    Detection,
    EmptyBatch,
    GroundTruth,
    MaskPair,
    NoGroundTruth,
    NoValidClass,
    accuracy,
    box_iou,
    map_at_50,
    mean_iou,
)

from _factories import random_detection_instance, random_mask_pairs
from _oracles import box_iou_arith, map_at_50_enumerated, mean_iou_confusion


# -- accuracy -------------------------------------------------------------


def test_accuracy_identity():
    assert accuracy([3, 1, 2], [3, 1, 2]) == 1.0


def test_accuracy_half():
    assert accuracy([0, 1, 0, 1], [0, 1, 1, 0]) == 0.5


def test_accuracy_empty_batch():
    with pytest.raises(EmptyBatch):
        accuracy([], [])


def test_accuracy_length_mismatch():
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])


# -- mean IoU -------------------------------------------------------------


def test_mean_iou_identity():
    grid = [[0, 1], [1, 0]]
    assert mean_iou([MaskPair(grid, grid, 2)]) == 1.0


def test_mean_iou_hand_counted():
    # class 0: inter 2, union 4 -> 0.5; class 1: inter 0, union 2 -> 0.0
    pair = MaskPair([[0, 0], [0, 0]], [[0, 0], [1, 1]], 2)
    assert mean_iou([pair]) == pytest.approx(0.25, abs=1e-15)


def test_mean_iou_disjoint():
    pair = MaskPair([[1, 1], [1, 1]], [[0, 0], [0, 0]], 2)
    assert mean_iou([pair]) == 0.0


def test_mean_iou_empty_input():
    with pytest.raises(NoValidClass):
        mean_iou([])


def test_mean_iou_mixed_num_classes_rejected():
    a = MaskPair([[0]], [[0]], 2)
    b = MaskPair([[0]], [[0]], 3)
    with pytest.raises(ValueError):
        mean_iou([a, b])


def test_mask_ids_must_be_in_range():
    with pytest.raises(ValueError):
        MaskPair([[5]], [[0]], 2)


def test_mean_iou_batching_invariance():
    rng = np.random.default_rng(11)
    for _ in range(20):
        pairs, _ = random_mask_pairs(rng)
        whole = mean_iou(pairs)
        if len(pairs) > 1:
            # accumulation must make any split reorder-safe
            split = mean_iou(pairs[:1] + pairs[1:])
            reordered = mean_iou(list(reversed(pairs)))
            assert whole == pytest.approx(split, abs=1e-15)
            assert whole == pytest.approx(reordered, abs=1e-15)


def test_mean_iou_matches_confusion_oracle():
    rng = np.random.default_rng(23)
    for _ in range(100):
        pairs, raw = random_mask_pairs(rng)
        assert mean_iou(pairs) == pytest.approx(mean_iou_confusion(raw), abs=1e-12)


# -- box IoU --------------------------------------------------------------


def test_box_iou_identity():
    assert box_iou((0, 0, 2, 2), (0, 0, 2, 2)) == 1.0


def test_box_iou_disjoint():
    assert box_iou((0, 0, 1, 1), (2, 2, 3, 3)) == 0.0


def test_box_iou_one_seventh():
    assert box_iou((0, 0, 2, 2), (1, 1, 3, 3)) == pytest.approx(1 / 7, abs=1e-15)


def test_box_iou_symmetry_and_oracle():
    rng = np.random.default_rng(5)
    from _factories import random_box

    for _ in range(200):
        a, b = random_box(rng), random_box(rng)
        got = box_iou(a, b)
        assert got == box_iou(b, a)
        assert 0.0 <= got <= 1.0
        assert got == pytest.approx(box_iou_arith(a, b), abs=1e-12)


# -- mAP@0.5 --------------------------------------------------------------


def test_map_perfect_match():
    gt = GroundTruth(0, (0, 0, 2, 2))
    det = Detection(0, 0.9, (0, 0, 2, 2))
    assert map_at_50([det], [gt]) == 1.0


def test_map_below_threshold():
    gt = GroundTruth(0, (0, 0, 10, 1))
    det = Detection(0, 0.9, (0, 0, 4, 1))  # IoU 0.4
    assert map_at_50([det], [gt]) == 0.0


def test_map_ranked_fp_then_tp():
    # high-confidence miss then perfect match: PR points (0, 0), (1, 0.5)
    gt = GroundTruth(0, (0, 0, 2, 2))
    miss = Detection(0, 0.9, (10, 10, 12, 12))
    hit = Detection(0, 0.3, (0, 0, 2, 2))
    assert map_at_50([miss, hit], [gt]) == pytest.approx(0.5, abs=1e-15)


def test_map_requires_ground_truth():
    with pytest.raises(NoGroundTruth):
        map_at_50([Detection(0, 0.5, (0, 0, 1, 1))], [])


def test_map_class_without_detections_scores_zero():
    gts = [GroundTruth(0, (0, 0, 2, 2)), GroundTruth(1, (5, 5, 7, 7))]
    det = Detection(0, 0.9, (0, 0, 2, 2))
    assert map_at_50([det], gts) == pytest.approx(0.5, abs=1e-15)


def test_map_detection_classes_without_gt_are_ignored():
    gts = [GroundTruth(0, (0, 0, 2, 2))]
    dets = [Detection(0, 0.9, (0, 0, 2, 2)), Detection(7, 0.99, (0, 0, 2, 2))]
    assert map_at_50(dets, gts) == 1.0


def test_map_permutation_invariance_with_distinct_confidences():
    det_objs, gt_objs, _, _ = random_detection_instance(np.random.default_rng(17))
    dets = [
        Detection(d.class_id, round(0.99 - 0.07 * i, 4), d.box)
        for i, d in enumerate(det_objs)
    ]
    if not dets:
        dets = [Detection(0, 0.5, (0, 0, 1, 1))]
    baseline = map_at_50(dets, gt_objs)
    assert map_at_50(list(reversed(dets)), gt_objs) == pytest.approx(baseline, abs=1e-15)


def test_map_matches_enumeration_oracle():
    rng = np.random.default_rng(41)
    for _ in range(150):
        det_objs, gt_objs, raw_dets, raw_gts = random_detection_instance(rng)
        got = map_at_50(det_objs, gt_objs)
        want = map_at_50_enumerated(raw_dets, raw_gts)
        assert got == pytest.approx(want, abs=1e-12)
        assert 0.0 <= got <= 1.0


def test_detection_validation():
    with pytest.raises(ValueError):
        Detection(0, 1.5, (0, 0, 1, 1))
    with pytest.raises(ValueError):
        Detection(0, 0.5, (1, 0, 0, 1))
    with pytest.raises(ValueError):
        GroundTruth(0, (0, 0, 0, 1))
