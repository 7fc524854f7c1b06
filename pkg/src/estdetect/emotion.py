"""Seven-state emotion domain, track types and the audio/visual voting rule.

Visual tracks carry one state per video frame (30 fps); audio tracks carry
one state per 0.5 s segment.  Before voting, each audio state is repeated
``factor`` times (15 by default) so that it lines up with the frames it
covers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import UnknownEmotionLabel

N_STATES = 7
VISUAL_RATE = 30.0
AUDIO_RATE = 2.0
AUDIO_EXPANSION = 15


class EmotionState(enum.IntEnum):
    """Canonical emotion states. The integer value is the matrix index."""

    ANGRY = 0
    DISGUST = 1
    FEAR = 2
    HAPPY = 3
    SAD = 4
    SURPRISE = 5
    NEUTRAL = 6

    @property
    def label(self) -> str:
        return self.name.capitalize()

    def __str__(self) -> str:
        return self.label


STATE_NAMES: tuple[str, ...] = tuple(s.label for s in EmotionState)
_BY_NAME = {s.name.lower(): s for s in EmotionState}


class Modality(str, enum.Enum):
    VISUAL = "visual"
    AUDIO = "audio"


def parse_state(label: str) -> EmotionState:
    """Return the state whose canonical name matches ``label`` ignoring case.

    >>> parse_state("NEUTRAL")
    <EmotionState.NEUTRAL: 6>
    """
    try:
        return _BY_NAME[label.strip().lower()]
    except (KeyError, AttributeError):
        raise UnknownEmotionLabel(f"unknown emotion label {label!r}") from None


def as_codes(states: Iterable) -> np.ndarray:
    """Coerce states or label strings to a read-only int8 index array."""
    if isinstance(states, np.ndarray) and states.dtype.kind in "iu":
        codes = states.astype(np.int8, copy=True)
    else:
        codes = np.fromiter(
            (parse_state(s) if isinstance(s, str) else int(s) for s in states),
            dtype=np.int8,
        )
    if codes.ndim != 1:
        raise ValueError("state sequences must be one-dimensional")
    if codes.size and (codes.min() < 0 or codes.max() >= N_STATES):
        raise UnknownEmotionLabel("state index outside 0..6")
    codes.setflags(write=False)
    return codes


def to_states(codes: Iterable[int]) -> list[EmotionState]:
    return [EmotionState(int(c)) for c in codes]


@dataclass(frozen=True)
class EmotionTrack:
    """Per-frame (visual) or per-segment (audio) emotion labels of one clip."""

    clip_id: str
    modality: Modality
    states: np.ndarray
    rate: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        object.__setattr__(self, "states", as_codes(self.states))
        if self.rate is None:
            rate = VISUAL_RATE if self.modality is Modality.VISUAL else AUDIO_RATE
            object.__setattr__(self, "rate", rate)

    def __len__(self) -> int:
        return int(self.states.size)

    @classmethod
    def visual(cls, clip_id: str, states: Iterable) -> "EmotionTrack":
        return cls(clip_id, Modality.VISUAL, states)

    @classmethod
    def audio(cls, clip_id: str, states: Iterable) -> "EmotionTrack":
        return cls(clip_id, Modality.AUDIO, states)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmotionTrack):
            return NotImplemented
        return (
            self.clip_id == other.clip_id
            and self.modality == other.modality
            and self.rate == other.rate
            and np.array_equal(self.states, other.states)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class RevisedTrack:
    """Output of :func:`revise`; same length as the visual track."""

    clip_id: str
    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", as_codes(self.states))

    def __len__(self) -> int:
        return int(self.states.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RevisedTrack):
            return NotImplemented
        return self.clip_id == other.clip_id and np.array_equal(self.states, other.states)

    __hash__ = None  # type: ignore[assignment]


def expand_audio(audio: EmotionTrack | Sequence, factor: int = AUDIO_EXPANSION) -> np.ndarray:
    """Repeat every audio segment state ``factor`` times (blockwise)."""
    if isinstance(audio, EmotionTrack):
        if audio.modality is not Modality.AUDIO:
            raise ValueError("expand_audio expects an audio track")
        codes = audio.states
    else:
        codes = as_codes(audio)
    if int(factor) != factor or factor < 1:
        raise ValueError("factor must be a positive integer")
    out = np.repeat(codes, int(factor))
    out.setflags(write=False)
    return out


def revise(visual: EmotionTrack, expanded_audio: Sequence | np.ndarray | None) -> RevisedTrack:
    """Vote between consecutive visual frames and the aligned audio state.

    For every frame except the last, the next visual state wins when the
    audio agrees with it, otherwise the current visual state is kept.  The
    last frame copies the visual state.  Audio that is too short is padded
    with its final state; missing audio leaves the visual track unchanged.
    """
    if visual.modality is not Modality.VISUAL:
        raise ValueError("revise expects a visual track")
    ev = visual.states
    n = ev.size
    if n == 0:
        raise ValueError("visual track is empty")
    ax = np.empty(0, dtype=np.int8) if expanded_audio is None else as_codes(expanded_audio)
    if ax.size == 0:
        return RevisedTrack(visual.clip_id, ev)
    need = n - 1
    if ax.size < need:
        ax = np.concatenate([ax, np.full(need - ax.size, ax[-1], dtype=np.int8)])
    ax = ax[:need]

    out = ev.copy()
    nxt = ev[1:]
    out[:-1] = np.where(nxt == ax, nxt, ev[:-1])
    return RevisedTrack(visual.clip_id, out)


def revise_clip(visual: EmotionTrack, audio: EmotionTrack | None,
                factor: int = AUDIO_EXPANSION) -> RevisedTrack:
    """Expand ``audio`` (if any) and revise ``visual`` with it."""
    expanded = None if audio is None or len(audio) == 0 else expand_audio(audio, factor)
    return revise(visual, expanded)
