import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import levenshtein_memo
from semiseg.core import Segmentation, labels_to_segments
from semiseg.metrics import (
    EvalReport,
    classification_accuracy,
    classify_segments,
    edit_score,
    evaluate,
    frame_accuracy,
    levenshtein,
)


def seg_from_labels(labels, durs=None):
    durs = durs or [1] * len(labels)
    starts = np.concatenate(([0], np.cumsum(durs)[:-1])).tolist()
    return Segmentation.from_tuples(zip(labels, starts, durs))


A, B, C = 0, 1, 2


def test_edit_identical():
    assert edit_score(seg_from_labels([A, B, C]), seg_from_labels([A, B, C], [3, 1, 2])) == 100.0


def test_edit_deletion():
    assert edit_score(seg_from_labels([A, B, C]), seg_from_labels([A, C])) == pytest.approx(66.6667, abs=1e-3)


def test_edit_disjoint():
    assert edit_score(seg_from_labels([A]), seg_from_labels([B])) == 0.0


def test_edit_collapses_repeated_labels():
    # an unmerged prediction is scored on its run-length-collapsed label order
    pred = Segmentation.from_tuples([(A, 0, 1), (A, 1, 1), (B, 2, 1)])
    assert edit_score(seg_from_labels([A, B]), pred) == 100.0


def test_levenshtein_basics():
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein([], [1, 2]) == 2
    assert levenshtein([1, 2], [1, 2]) == 0


strict_labels = st.lists(st.integers(0, 3), min_size=1, max_size=9).map(
    lambda ls: [l for i, l in enumerate(ls) if i == 0 or l != ls[i - 1]]
)


@given(strict_labels, strict_labels)
def test_edit_symmetric(a, b):
    assert edit_score(seg_from_labels(a), seg_from_labels(b)) == edit_score(
        seg_from_labels(b), seg_from_labels(a)
    )


@given(strict_labels, strict_labels, st.integers(0, 10_000))
def test_edit_ignores_durations(a, b, seed):
    rng = np.random.default_rng(seed)
    base = edit_score(seg_from_labels(a), seg_from_labels(b))
    da = rng.integers(1, 6, len(a)).tolist()
    db = rng.integers(1, 6, len(b)).tolist()
    assert edit_score(seg_from_labels(a, da), seg_from_labels(b, db)) == base


@given(strict_labels, strict_labels)
def test_edit_matches_memoized_levenshtein(a, b):
    lev = levenshtein_memo(a, b)
    assert edit_score(seg_from_labels(a), seg_from_labels(b)) == (1 - lev / max(len(a), len(b))) * 100


@given(strict_labels, strict_labels)
def test_edit_range(a, b):
    assert 0.0 <= edit_score(seg_from_labels(a), seg_from_labels(b)) <= 100.0


@pytest.mark.parametrize(
    "gt, pred, expected",
    [([0, 1, 1], [0, 1, 1], 1.0), ([0, 0, 1, 1], [0, 1, 1, 1], 0.75), ([0, 0], [1, 1], 0.0)],
)
def test_frame_accuracy_examples(gt, pred, expected):
    assert frame_accuracy(gt, pred) == expected


def test_frame_accuracy_errors():
    with pytest.raises(ValueError):
        frame_accuracy([0, 1], [0])
    with pytest.raises(ValueError):
        frame_accuracy([], [])


@given(st.lists(st.integers(0, 3), min_size=1, max_size=30), st.permutations(range(4)))
def test_frame_accuracy_properties(y, perm):
    y = np.array(y)
    assert frame_accuracy(y, y) == 1.0
    rng = np.random.default_rng(len(y))
    z = rng.integers(0, 4, len(y))
    p = np.array(perm)
    assert frame_accuracy(p[y], p[z]) == frame_accuracy(y, z)


def test_classification_one_hot():
    gt = Segmentation.from_tuples([(0, 0, 2), (2, 2, 3), (1, 5, 1)])
    S = np.eye(3)[[0, 0, 2, 2, 2, 1]]
    assert classification_accuracy(S, gt) == 1.0


def test_classification_mean_example():
    gt = Segmentation.from_tuples([(0, 0, 2), (1, 2, 2)])
    S = np.array([[1, 0], [1, 0], [1, 0], [0, 3]], float)
    assert classify_segments(S, gt) == [0, 1]
    assert classification_accuracy(S, gt) == 1.0


def test_classification_ties_go_to_lowest_class():
    gt = Segmentation.from_tuples([(0, 0, 2), (1, 2, 2), (0, 4, 1), (2, 5, 3)])
    S = np.zeros((8, 3))
    assert classification_accuracy(S, gt) == 0.5


def test_classification_dimension_mismatch():
    with pytest.raises(ValueError):
        classification_accuracy(np.zeros((3, 2)), Segmentation.from_tuples([(0, 0, 4)]))


def test_evaluate_and_format():
    gt = labels_to_segments([0, 0, 1, 1, 2])
    pred = labels_to_segments([0, 0, 2, 2, 2])
    rep = evaluate(gt, pred, scores=np.eye(3)[[0, 0, 1, 1, 2]])
    assert rep.edit_score == pytest.approx(200 / 3)
    assert rep.frame_accuracy == pytest.approx(0.6)
    assert rep.format() == "Edit: 66.67 Acc: 60.00 Cls: 100.00"
    assert EvalReport(100.0, 1.0).format() == "Edit: 100.00 Acc: 100.00"


def test_evaluate_ignore_label():
    gt = labels_to_segments([0, 0, 1, 1, 2, 2])
    pred = labels_to_segments([0, 0, 0, 0, 2, 2])
    rep = evaluate(gt, pred, ignore_label=0)
    # label orders without background: [1, 2] vs [2]
    assert rep.edit_score == 50.0
    # frames whose truth is background are skipped
    assert rep.frame_accuracy == 0.5
