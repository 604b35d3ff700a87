import numpy as np
import pytest

from tmecg import dataset as ds
from tmecg import metrics


class TestConfusion:
    def test_diagonal_on_perfect_predictions(self):
        cm = metrics.confusion([0, 1, 2, 1], [0, 1, 2, 1])
        assert np.array_equal(cm, np.diag([1, 2, 1]))

    def test_manual_tally(self):
        true = [0, 0, 1, 2, 2, 2]
        pred = [0, 1, 1, 2, 0, 2]
        cm = metrics.confusion(true, pred)
        want = np.zeros((3, 3), dtype=np.int64)
        for t, p in zip(true, pred):
            want[t, p] += 1
        assert np.array_equal(cm, want)
        assert cm.sum() == len(true)

    def test_random_tally_matches_loop(self):
        rng = np.random.default_rng(4)
        true = rng.integers(0, 5, size=300)
        pred = rng.integers(0, 5, size=300)
        cm = metrics.confusion(true, pred, n_classes=5)
        for i in range(5):
            for j in range(5):
                assert cm[i, j] == np.sum((true == i) & (pred == j))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            metrics.confusion([0, 1], [0])

    def test_out_of_range_labels(self):
        with pytest.raises(ValueError):
            metrics.confusion([0, 3], [0, 1])
        with pytest.raises(ValueError):
            metrics.confusion([0, -1], [0, 1])


class TestReport:
    def test_hand_arithmetic(self):
        # one-vs-rest for class 1: TP 9, FP 1, FN 1, TN 89
        cm = np.array([[85, 1, 0],
                       [1, 9, 0],
                       [0, 0, 4]], dtype=np.int64)
        rep = metrics.report(cm)
        assert rep.precision[1] == pytest.approx(0.9)
        assert rep.recall[1] == pytest.approx(0.9)
        assert rep.accuracy == pytest.approx(98 / 100)
        assert rep.support == [86, 10, 4]

    def test_perfect_matrix(self):
        rep = metrics.report(np.diag([5, 7, 2]))
        assert rep.precision == [1.0, 1.0, 1.0]
        assert rep.recall == [1.0, 1.0, 1.0]
        assert rep.accuracy == 1.0

    def test_undefined_metrics_flagged(self):
        # class 2 never occurs and is never predicted
        cm = np.array([[3, 0, 0], [1, 2, 0], [0, 0, 0]], dtype=np.int64)
        rep = metrics.report(cm)
        assert rep.precision[2] == 0.0 and not rep.precision_defined[2]
        assert rep.recall[2] == 0.0 and not rep.recall_defined[2]
        assert rep.precision_defined[0] and rep.recall_defined[0]

    def test_scale_invariance(self):
        cm = np.array([[8, 2], [1, 9]], dtype=np.int64)
        a, b = metrics.report(cm), metrics.report(10 * cm)
        assert a.precision == b.precision
        assert a.recall == b.recall
        assert a.accuracy == pytest.approx(b.accuracy)

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError):
            metrics.report(np.zeros((3, 3), dtype=np.int64))


class TestFormatting:
    def cm(self):
        return metrics.report(np.array([[4, 1], [0, 5]], dtype=np.int64))

    def test_format_report(self):
        text = metrics.format_report(self.cm(), "demo", ["neg", "pos"])
        assert "demo" in text and "accuracy 0.9000" in text
        assert "neg" in text and "pos" in text

    def test_undefined_shows_na(self):
        rep = metrics.report(
            np.array([[3, 0, 0], [1, 2, 0], [0, 0, 0]], dtype=np.int64))
        assert "n/a" in metrics.format_report(rep, "t")

    def test_csv_layout(self):
        rep = self.cm()
        text = metrics.report_to_csv([rep], rep)
        lines = text.strip().split("\n")
        assert lines[0] == "fold,class,precision,recall,accuracy,support"
        assert len(lines) == 1 + 2 * 2  # one fold + pooled, 2 classes each
        assert lines[1].startswith("0,0,1.000000,0.800000,0.900000,5")
        assert lines[3].startswith("pooled,0,")


class TestCrossValidate:
    def small_setup(self):
        beats = ds.synth_dataset(9, 0.02, seed=3, n_subjects=9)
        plan = ds.make_folds(sorted({b.subject_id for b in beats}),
                             k=3, seed=0)
        return beats, plan

    def test_fold_reports_and_pooling(self):
        beats, plan = self.small_setup()
        folds, pooled = metrics.cross_validate(
            beats, plan, clauses=20, T=10, s=2.0, n_states=8,
            epochs=3, q=3, seed=1)
        assert len(folds) == 3
        # each subject held out exactly once: pooled support covers all
        assert pooled.confusion.sum() == len(beats)
        assert sum(f.confusion.sum() for f in folds) == len(beats)
        # sanity: pooled matrix is the sum of the fold matrices
        assert np.array_equal(pooled.confusion,
                              sum(f.confusion for f in folds))

    def test_learns_separable_classes(self):
        beats, plan = self.small_setup()
        _, pooled = metrics.cross_validate(
            beats, plan, clauses=100, T=50, s=1.5, n_states=128,
            epochs=10, q=3, seed=0)
        assert pooled.accuracy > 0.8

    def test_missing_subject_rejected(self):
        beats, plan = self.small_setup()
        plan.folds[0] = plan.folds[0][1:]  # drop a subject from the plan
        with pytest.raises(ValueError):
            metrics.cross_validate(beats, plan, clauses=4, T=2, s=2.0,
                                   n_states=8, epochs=1)

    def test_log_callback_sees_every_epoch(self):
        beats, plan = self.small_setup()
        seen = []
        metrics.cross_validate(
            beats, plan, clauses=4, T=2, s=2.0, n_states=8, epochs=2,
            seed=0, log=lambda fi, e, acc, dt: seen.append((fi, e)))
        assert seen == [(f, e) for f in range(3) for e in range(2)]
