import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from estdetect.emotion import (
    EmotionState as E,
    EmotionTrack,
    expand_audio,
    parse_state,
    revise,
    revise_clip,
)
from estdetect.errors import UnknownEmotionLabel
from oracles import revise_majority

states = st.integers(0, 6)


def test_canonical_order():
    assert [s.label for s in E] == ["Angry", "Disgust", "Fear", "Happy", "Sad", "Surprise", "Neutral"]
    assert [int(s) for s in E] == list(range(7))


@pytest.mark.parametrize("text, expected", [("sad", E.SAD), ("NEUTRAL", E.NEUTRAL), ("Angry", E.ANGRY),
                                            (" fear ", E.FEAR)])
def test_parse_state(text, expected):
    assert parse_state(text) is expected


@pytest.mark.parametrize("text", ["bored", "anger", "", "sadness", "7"])
def test_parse_state_rejects(text):
    with pytest.raises(UnknownEmotionLabel):
        parse_state(text)


def test_expand_audio_examples():
    assert list(expand_audio(EmotionTrack.audio("c", [E.SAD]))) == [E.SAD] * 15
    assert list(expand_audio(EmotionTrack.audio("c", [E.SAD, E.FEAR]), 2)) == [E.SAD, E.SAD, E.FEAR, E.FEAR]
    assert list(expand_audio(EmotionTrack.audio("c", [E.HAPPY]), 1)) == [E.HAPPY]


def test_expand_audio_rejects_visual_track():
    with pytest.raises(ValueError):
        expand_audio(EmotionTrack.visual("c", [E.SAD]))


@given(st.lists(states, min_size=1, max_size=30), st.integers(1, 20))
def test_expand_then_floor_division_recovers(seq, factor):
    out = expand_audio(seq, factor)
    assert out.size == factor * len(seq)
    assert [out[j] for j in range(0, out.size, factor)] == seq
    assert all(out[j] == seq[j // factor] for j in range(out.size))


def _revise(v, a):
    return list(revise(EmotionTrack.visual("c", v), a).states)


def test_revise_examples():
    A, S, F, H = E.ANGRY, E.SAD, E.FEAR, E.HAPPY
    assert _revise([A, A, A], [A, A, A]) == [A, A, A]
    assert _revise([A, S, F], [S, F, F]) == [S, F, F]
    assert _revise([A, S], [H, H]) == [A, S]


def test_revise_pads_short_audio_with_last_state():
    v = [E.ANGRY, E.SAD, E.SAD, E.FEAR]
    # audio covers only position 1; positions 2,3 are padded with SAD
    assert _revise(v, [E.SAD]) == [E.SAD, E.SAD, E.SAD, E.FEAR]


def test_revise_without_audio_is_visual():
    v = [E.ANGRY, E.SAD, E.FEAR]
    assert _revise(v, []) == v
    assert list(revise_clip(EmotionTrack.visual("c", v), None).states) == v


def test_revise_single_frame():
    assert _revise([E.HAPPY], [E.SAD]) == [E.HAPPY]


def test_revise_matches_majority_on_all_triples():
    for cur, nxt, aud in itertools.product(range(7), repeat=3):
        assert _revise([cur, nxt], [aud]) == revise_majority([cur, nxt], [aud])


@given(st.lists(states, min_size=1, max_size=60))
def test_revise_identity_when_tracks_agree(v):
    assert _revise(v, v) == v


@settings(max_examples=200)
@given(st.lists(states, min_size=2, max_size=60), st.lists(states, min_size=0, max_size=60), st.data())
def test_revise_locality(v, a, data):
    """Changing e_v[j] or e_ax[j] only affects outputs j-1 and j."""
    base = _revise(v, a)
    assert len(base) == len(v)
    j = data.draw(st.integers(0, len(v) - 1))
    v2 = list(v)
    v2[j] = (v2[j] + data.draw(st.integers(1, 6))) % 7
    changed = [i for i, (x, y) in enumerate(zip(base, _revise(v2, a))) if x != y]
    assert set(changed) <= {j - 1, j}
    if len(a) > j + 1:  # position j is backed by real audio, not padding
        a2 = list(a)
        a2[j] = (a2[j] + 1) % 7
        changed = [i for i, (x, y) in enumerate(zip(base, _revise(v, a2))) if x != y]
        assert set(changed) <= {j}


def test_track_types_are_immutable():
    t = EmotionTrack.visual("c", [0, 1])
    with pytest.raises(ValueError):
        t.states[0] = 3
    assert t.rate == 30.0
    assert EmotionTrack.audio("c", [0]).rate == 2.0
