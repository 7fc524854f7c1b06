import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from estdetect.emotion import EmotionState as E, EmotionTrack, RevisedTrack
from estdetect.est import (
    EST_DIM,
    EST_FEATURE_NAMES,
    count_transitions,
    emotion_distribution,
    est_feature,
    mean_est,
    pooled_est,
    top_transitions,
    transition_index,
)
from oracles import est_runlength

A, B = E.ANGRY, E.HAPPY


def _at(vec, src, dst):
    return vec.values[transition_index(src, dst)]


def test_est_sad_sad_fear():
    v = est_feature([E.SAD, E.SAD, E.FEAR])
    assert _at(v, E.SAD, E.SAD) == 0.5 and _at(v, E.SAD, E.FEAR) == 0.5
    assert v.values.sum() == 1.0 and not v.degenerate


def test_est_single_self_count_per_run():
    v = est_feature([A, B, B, B, A])
    for src, dst in [(A, B), (B, B), (B, A)]:
        assert _at(v, src, dst) == pytest.approx(1 / 3, abs=1e-15)
    assert np.count_nonzero(v.values) == 3
    assert v.transitions.total == 3


def test_est_single_frame_is_degenerate():
    v = est_feature([E.HAPPY])
    assert v.degenerate and not v.values.any() and v.values.shape == (49,)


@pytest.mark.parametrize("state", list(E))
@pytest.mark.parametrize("n", [2, 3, 10])
def test_est_constant_track(state, n):
    v = est_feature([state] * n)
    assert _at(v, state, state) == 1.0 and v.values.sum() == 1.0


def test_first_pair_rule_on_alternating_start():
    # pair 1 differs (counted), run B,B at k=2 counted once
    v = est_feature([A, B, B])
    assert v.transitions.total == 2


def test_row_major_layout():
    assert transition_index(E.SAD, E.FEAR) == 7 * 4 + 2
    assert EST_FEATURE_NAMES[transition_index(E.SAD, E.FEAR)] == "Sad->Fear"
    v = est_feature([E.SAD, E.FEAR])
    assert v.matrix[E.SAD, E.FEAR] == 1.0


def test_exhaustive_three_state_oracle():
    checked = 0
    for n in range(1, 8):
        for seq in itertools.product((E.FEAR, E.SAD, E.NEUTRAL), repeat=n):
            expected, total = est_runlength([int(s) for s in seq])
            got = est_feature(list(seq))
            assert got.transitions.total == total
            assert got.values.tolist() == expected
            checked += 1
    assert checked == 3279


@given(st.lists(st.integers(0, 6), min_size=2, max_size=200))
def test_est_is_probability_vector(seq):
    v = est_feature(seq)
    assert not v.degenerate
    assert v.values.shape == (EST_DIM,)
    assert (v.values >= 0).all() and abs(v.values.sum() - 1) <= 1e-9
    assert v.transitions.total <= len(seq)


def test_est_ignores_track_metadata():
    seq = [0, 0, 4, 2, 2, 6]
    a = est_feature(RevisedTrack("clip-a", seq)).values
    b = est_feature(EmotionTrack("other", "audio", seq, rate=99.0)).values
    assert np.array_equal(a, b)


def test_emotion_distribution_examples():
    d = emotion_distribution([E.SAD, E.SAD, E.NEUTRAL, E.NEUTRAL])
    assert d[E.SAD] == 0.5 and d[E.NEUTRAL] == 0.5 and d.sum() == 1.0
    assert emotion_distribution([E.FEAR])[E.FEAR] == 1.0
    assert np.allclose(emotion_distribution(list(E)), 1 / 7)


@given(st.lists(st.integers(0, 6), min_size=1, max_size=50),
       st.lists(st.integers(0, 6), min_size=1, max_size=50))
def test_distribution_of_concatenation_is_length_weighted(a, b):
    whole = emotion_distribution(a + b)
    parts = (len(a) * emotion_distribution(a) + len(b) * emotion_distribution(b)) / (len(a) + len(b))
    assert np.allclose(whole, parts, atol=1e-12)


def test_top_transitions_examples():
    vec = np.zeros(49)
    vec[transition_index(E.SAD, E.FEAR)] = 0.43
    vec[transition_index(E.NEUTRAL, E.SAD)] = 0.18
    assert top_transitions(vec, 1) == [(E.SAD, E.FEAR, 0.43)]

    zero = est_feature([E.HAPPY])
    tops = top_transitions(zero, 5)
    assert [(int(a), int(b)) for a, b, _ in tops] == [(0, 0), (0, 1), (0, 2), (0, 3), (0, 4)]
    assert all(v == 0.0 for *_, v in tops)

    tied = np.zeros(49)
    tied[3] = tied[10] = 0.5
    assert [transition_index(a, b) for a, b, _ in top_transitions(tied, 2)] == [3, 10]


def test_mean_and_pooled_aggregation():
    v1 = est_feature([A, B])          # one A->B
    v2 = est_feature([B, B, B, A])    # B->B, B->A
    assert np.allclose(mean_est([v1, v2]), (v1.values + v2.values) / 2)
    pooled = pooled_est([v1, v2])
    assert pooled[transition_index(A, B)] == pytest.approx(1 / 3)
    assert pooled[transition_index(B, B)] == pytest.approx(1 / 3)


def test_transition_matrix_invariants():
    tm = count_transitions([0, 1, 1, 2, 2, 2, 0])
    assert tm.counts.sum() == tm.total == 5  # 0-1, 1-1, 1-2, 2-2, 2-0
