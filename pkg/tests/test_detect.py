import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liftguard.detect import (
    ClassLabel,
    Detection,
    FileDetector,
    average_precision,
    evaluate_detections,
    iou,
    load_detections,
    match_detections,
    mean_ap,
    precision_recall,
    save_detections,
)
from liftguard.errors import MissingFrame, NoClasses, ZeroGroundTruth


def det(bbox, label=ClassLabel.HUMAN, conf=1.0):
    return Detection(tuple(float(x) for x in bbox), label, conf)


class TestIou:
    def test_identical_boxes(self):
        assert iou((0, 0, 2, 2), (0, 0, 2, 2)) == 1.0

    def test_disjoint_boxes(self):
        assert iou((0, 0, 1, 1), (5, 5, 6, 6)) == 0.0

    def test_partial_overlap_by_hand(self):
        # Areas 4 and 4, intersection 1 -> 1 / 7.
        assert iou((0, 0, 2, 2), (1, 1, 3, 3)) == pytest.approx(1 / 7)

    def test_symmetric(self):
        a, b = (0, 0, 3, 2), (1, 1, 4, 5)
        assert iou(a, b) == iou(b, a)


class TestMatchDetections:
    def test_exact_match(self):
        gt = [det((10, 10, 20, 20))]
        m = match_detections([det((10, 10, 20, 20), conf=0.9)], gt, 0.5)
        assert m.flags[ClassLabel.HUMAN] == [(0.9, True)]
        assert m.fn[ClassLabel.HUMAN] == 0

    def test_duplicate_detections_one_tp(self):
        gt = [det((10, 10, 20, 20))]
        dets = [det((10, 10, 20, 20), conf=0.8), det((11, 11, 21, 21), conf=0.9)]
        m = match_detections(dets, gt, 0.5)
        flags = m.flags[ClassLabel.HUMAN]
        assert flags[0] == (0.9, True)  # higher confidence matched first
        assert flags[1] == (0.8, False)

    def test_class_mismatch_is_fp_and_fn(self):
        gt = [det((10, 10, 20, 20), ClassLabel.MIC)]
        m = match_detections([det((10, 10, 20, 20), ClassLabel.HUMAN, 0.9)], gt, 0.5)
        assert m.flags[ClassLabel.HUMAN] == [(0.9, False)]
        assert m.fn[ClassLabel.MIC] == 1


class TestPrecisionRecall:
    def test_direct_substitution(self):
        gt = [det((0, 0, 10, 10)), det((20, 20, 30, 30)), det((40, 40, 50, 50)),
              det((60, 60, 70, 70))]
        dets = [det((0, 0, 10, 10), conf=0.9), det((20, 20, 30, 30), conf=0.8),
                det((40, 40, 50, 50), conf=0.7), det((100, 100, 110, 110), conf=0.6)]
        m = match_detections(dets, gt, 0.5)
        p, r = precision_recall(m)[ClassLabel.HUMAN]
        assert (p, r) == (0.75, 0.75)

    def test_empty_convention(self):
        m = match_detections([], [], 0.5)
        assert precision_recall(m) == {}

    def test_perfect(self):
        gt = [det((0, 0, 10, 10))]
        m = match_detections([det((0, 0, 10, 10), conf=0.9)], gt, 0.5)
        assert precision_recall(m)[ClassLabel.HUMAN] == (1.0, 1.0)

    @given(st.lists(st.booleans(), max_size=20), st.integers(0, 20))
    def test_outputs_in_unit_interval(self, flags, extra_fn):
        from liftguard.detect import MatchResult

        m = MatchResult(
            {ClassLabel.HUMAN: [(0.5, f) for f in flags]},
            {ClassLabel.HUMAN: extra_fn},
            {ClassLabel.HUMAN: sum(flags) + extra_fn},
        )
        p, r = precision_recall(m)[ClassLabel.HUMAN]
        assert 0 <= p <= 1 and 0 <= r <= 1


class TestAveragePrecision:
    def test_single_tp(self):
        assert average_precision([True], 1) == 1.0

    def test_tp_then_fp(self):
        assert average_precision([True, False], 1) == 1.0

    def test_fp_then_tp(self):
        assert average_precision([False, True], 1) == 0.5

    def test_trailing_fps_do_not_change_ap(self):
        base = average_precision([True, False], 1)
        assert average_precision([True, False, False, False], 1) == base

    def test_zero_ground_truth_raises(self):
        with pytest.raises(ZeroGroundTruth):
            average_precision([True], 0)

    def test_hand_traced_envelope(self):
        # [TP, FP, TP], 2 GTs: recalls 0.5, 0.5, 1.0; precisions 1, 0.5, 2/3.
        # Envelope: 1 at r<=0.5, 2/3 at r=1.0 -> AP = 0.5*1 + 0.5*(2/3).
        assert average_precision([True, False, True], 2) == pytest.approx(0.5 + 1 / 3)


class TestMeanAp:
    def test_reported_per_class_values(self):
        # Per-class AP50 of the reference detector: mean matches its "all" row.
        aps = {"hook": 0.97, "mic": 0.70, "mic_frame": 0.93, "human": 0.81}
        assert mean_ap(aps) == pytest.approx(0.8525)
        assert mean_ap(aps) == pytest.approx(0.85, abs=0.005)

    def test_single_class(self):
        assert mean_ap({"mic": 0.6}) == 0.6

    def test_equal_values(self):
        assert mean_ap({"a": 0.5, "b": 0.5, "c": 0.5, "d": 0.5}) == 0.5

    def test_no_classes(self):
        with pytest.raises(NoClasses):
            mean_ap({})


class TestEvaluateDetections:
    def test_ground_truth_against_itself_is_perfect(self):
        gt = [
            [det((0, 0, 10, 10), ClassLabel.MIC), det((20, 0, 30, 10), ClassLabel.HUMAN)],
            [det((5, 5, 15, 15), ClassLabel.HOOK)],
        ]
        report = evaluate_detections([(g, g) for g in gt])
        for row in report["classes"].values():
            assert row["precision"] == 1.0
            assert row["recall"] == 1.0
            assert row["ap50"] == 1.0
            assert row["ap50_95"] == 1.0

    def test_empty_detections(self):
        gt = [det((0, 0, 10, 10))]
        report = evaluate_detections([([], gt)])
        row = report["classes"]["human"]
        assert row["precision"] == 0.0 and row["recall"] == 0.0 and row["ap50"] == 0.0


class TestFileDetector:
    def test_pass_through(self, tmp_path):
        dets = [det((0, 0, 5, 5), ClassLabel.MIC, 0.7),
                det((10, 10, 15, 15), ClassLabel.HUMAN, 0.5)]
        path = tmp_path / "frame.json"
        save_detections(dets, path)
        stub = FileDetector({1.5: path})
        assert stub.detect(None, 1.5) == dets

    def test_empty_frame(self, tmp_path):
        path = tmp_path / "frame.json"
        save_detections([], path)
        assert FileDetector({0.0: path}).detect(None, 0.0) == []

    def test_missing_frame(self):
        with pytest.raises(MissingFrame):
            FileDetector({}).detect(None, 2.0)

    def test_file_round_trip(self, tmp_path):
        dets = [det((1, 2, 3, 4), ClassLabel.MIC_FRAME, 0.25)]
        save_detections(dets, tmp_path / "d.json")
        assert load_detections(tmp_path / "d.json") == dets
