import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semiseg.core import (
    FORBIDDEN,
    ScoreTable,
    Segment,
    Segmentation,
    SegmentationError,
    TransitionModel,
    check_labels,
    check_scores,
    is_forbidden,
    labels_to_segments,
    segments_to_labels,
)


@pytest.mark.parametrize(
    "y, segs",
    [
        ([0, 0, 1, 1, 1], [(0, 0, 2), (1, 2, 3)]),
        ([2], [(2, 0, 1)]),
        ([0, 1, 0], [(0, 0, 1), (1, 1, 1), (0, 2, 1)]),
    ],
)
def test_labels_to_segments_examples(y, segs):
    assert labels_to_segments(y).to_tuples() == segs


@pytest.mark.parametrize(
    "segs, y",
    [
        ([(0, 0, 2), (1, 2, 3)], [0, 0, 1, 1, 1]),
        ([(2, 0, 1)], [2]),
        ([(1, 0, 3)], [1, 1, 1]),
    ],
)
def test_segments_to_labels_examples(segs, y):
    assert segments_to_labels(Segmentation.from_tuples(segs)).tolist() == y


label_seqs = st.lists(st.integers(0, 4), min_size=1, max_size=40)


@given(label_seqs)
def test_labels_roundtrip(y):
    assert segments_to_labels(labels_to_segments(y)).tolist() == y


@st.composite
def strict_segmentations(draw):
    n = draw(st.integers(1, 8))
    labels = [draw(st.integers(0, 3))]
    for _ in range(n - 1):
        labels.append(draw(st.integers(0, 3).filter(lambda c, p=labels[-1]: c != p)))
    durs = draw(st.lists(st.integers(1, 6), min_size=n, max_size=n))
    starts = np.concatenate(([0], np.cumsum(durs)[:-1])).tolist()
    return Segmentation.from_tuples(zip(labels, starts, durs))


@given(strict_segmentations())
def test_segments_roundtrip(seg):
    assert seg.is_strict()
    assert labels_to_segments(segments_to_labels(seg)) == seg


@given(strict_segmentations())
def test_segmentation_invariants(seg):
    assert sum(seg.durations) == seg.total_frames
    assert seg.segments[0].start == 0
    for a, b in zip(seg.segments, seg.segments[1:]):
        assert b.start == a.end


def test_segmentation_rejects_gap_overlap_and_bad_duration():
    with pytest.raises(SegmentationError, match="gap or overlap"):
        Segmentation.from_tuples([(0, 0, 2), (1, 3, 2)])
    with pytest.raises(SegmentationError, match="gap or overlap"):
        Segmentation.from_tuples([(0, 0, 2), (1, 1, 2)])
    with pytest.raises(SegmentationError, match="non-positive"):
        Segmentation.from_tuples([(0, 0, 0)])
    with pytest.raises(SegmentationError, match="sum to"):
        Segmentation(((0, 0, 2),), 3)
    with pytest.raises(SegmentationError):
        Segmentation((), 0)


def test_non_strict_segmentation_is_representable():
    seg = Segmentation.from_tuples([(1, 0, 2), (1, 2, 2)])
    assert not seg.is_strict()
    assert seg.labels == [1, 1]


def test_from_boundaries_and_segment_end():
    seg = Segmentation.from_boundaries([0, 2, 1], [0, 3, 4], 9)
    assert seg.to_tuples() == [(0, 0, 3), (2, 3, 1), (1, 4, 5)]
    assert seg.segments[1].end == 4
    assert isinstance(seg.segments[0], Segment)


def test_check_scores():
    S = check_scores([[0.5, 0.5]])
    assert S.shape == (1, 2)
    with pytest.raises(ValueError, match="2 classes"):
        check_scores([[1.0], [2.0]])
    with pytest.raises(ValueError, match="non-finite"):
        check_scores([[1.0, np.nan]])
    with pytest.raises(ValueError, match="non-finite"):
        check_scores([[1.0, np.inf]])
    with pytest.raises(ValueError, match="2-D"):
        check_scores([1.0, 2.0])
    with pytest.raises(ValueError, match="expected 3"):
        check_scores(np.zeros((2, 2)), num_classes=3)


def test_check_labels():
    assert check_labels([0, 1, 2], 3).dtype == np.int64
    with pytest.raises(SegmentationError):
        check_labels([0, 3], 3)
    with pytest.raises(SegmentationError):
        check_labels([-1])
    with pytest.raises(SegmentationError):
        check_labels([0.5])


def test_transition_model_is_immutable_copy():
    A = np.zeros((2, 2))
    m = TransitionModel(A, np.zeros(2))
    A[0, 1] = 5.0
    assert m.log_transition[0, 1] == 0.0
    with pytest.raises(ValueError):
        m.log_transition[0, 0] = 1.0


def test_transition_model_validation():
    with pytest.raises(ValueError, match="square"):
        TransitionModel(np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(ValueError, match="prior shape"):
        TransitionModel(np.zeros((2, 2)), np.zeros(3))
    with pytest.raises(ValueError):
        TransitionModel(np.full((2, 2), np.nan), np.zeros(2))
    with pytest.raises(ValueError):
        TransitionModel(np.full((2, 2), np.inf), np.zeros(2))


def test_uniform_model_forbids_self_transitions():
    m = TransitionModel.uniform(3)
    assert is_forbidden(np.diag(m.log_transition)).all()
    assert m.log_transition[0, 1] == 0.0
    assert FORBIDDEN == -np.inf


def test_score_table_boundary_flags():
    values = np.zeros((1, 2, 2))
    prev = np.full((1, 2, 2), ScoreTable.STAY)
    prev[0, 0] = ScoreTable.START
    table = ScoreTable(values, prev)
    assert table.boundary(0, 0, 1)
    assert not table.boundary(0, 1, 1)
    assert not table.values.flags.writeable
