"""Emotion state transformation (EST) features and emotion-distribution analytics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .emotion import N_STATES, STATE_NAMES, EmotionState, EmotionTrack, RevisedTrack, as_codes

EST_DIM = N_STATES * N_STATES


def _codes_of(track) -> np.ndarray:
    if isinstance(track, (RevisedTrack, EmotionTrack)):
        return track.states
    return as_codes(track)


def transition_index(src: int, dst: int) -> int:
    """Feature index of the ``src -> dst`` transition (row-major, source-major)."""
    return int(src) * N_STATES + int(dst)


def transition_name(index: int) -> str:
    src, dst = divmod(int(index), N_STATES)
    return f"{STATE_NAMES[src]}->{STATE_NAMES[dst]}"


EST_FEATURE_NAMES: tuple[str, ...] = tuple(transition_name(i) for i in range(EST_DIM))


@dataclass(frozen=True)
class TransitionMatrix:
    counts: np.ndarray  # (7, 7) int64, rows = source state
    total: int

    def __post_init__(self):
        if self.counts.shape != (N_STATES, N_STATES):
            raise ValueError("transition counts must be 7x7")
        if int(self.counts.sum()) != self.total:
            raise ValueError("transition total does not match cell sum")


@dataclass(frozen=True)
class ESTVector:
    values: np.ndarray  # (49,) float64
    degenerate: bool
    transitions: TransitionMatrix | None = None

    @property
    def matrix(self) -> np.ndarray:
        return self.values.reshape(N_STATES, N_STATES)

    def __len__(self) -> int:
        return EST_DIM


def count_transitions(track) -> TransitionMatrix:
    """Count transitions between adjacent revised states.

    A pair ``(e[k], e[k+1])`` is counted when the states differ, when it is
    the first pair of the track, or when it opens a run of repeated states.
    Every run of length >= 2 therefore contributes a single self-transition.
    """
    e = _codes_of(track).astype(np.int64)
    counts = np.zeros((N_STATES, N_STATES), dtype=np.int64)
    if e.size < 2:
        return TransitionMatrix(counts, 0)
    cur, nxt = e[:-1], e[1:]
    keep = cur != nxt
    keep[0] = True
    # same-state pair at k>=1 counts only when the run starts at k
    keep[1:] |= (cur[1:] == nxt[1:]) & (cur[1:] != e[:-2])
    np.add.at(counts, (cur[keep], nxt[keep]), 1)
    return TransitionMatrix(counts, int(keep.sum()))


def est_feature(revised) -> ESTVector:
    """49-dim normalised transition frequencies of a revised track.

    Single-state tracks have no transitions and return a zero vector flagged
    ``degenerate``.
    """
    tm = count_transitions(revised)
    if tm.total == 0:
        return ESTVector(np.zeros(EST_DIM), True, tm)
    values = tm.counts.reshape(-1).astype(np.float64) / tm.total
    return ESTVector(values, False, tm)


def emotion_distribution(track) -> np.ndarray:
    """Fraction of positions holding each of the seven states."""
    e = _codes_of(track)
    if e.size == 0:
        raise ValueError("emotion_distribution of an empty track")
    return np.bincount(e, minlength=N_STATES) / e.size


def top_transitions(est: ESTVector | np.ndarray, count: int) -> list[tuple[EmotionState, EmotionState, float]]:
    """Largest ``count`` EST entries, descending, ties by ascending feature index."""
    values = np.asarray(est.values if isinstance(est, ESTVector) else est, dtype=np.float64)
    if values.shape != (EST_DIM,):
        raise ValueError("expected a 49-dimensional EST vector")
    order = np.argsort(-values, kind="stable")[: int(count)]
    return [
        (EmotionState(int(i) // N_STATES), EmotionState(int(i) % N_STATES), float(values[i]))
        for i in order
    ]


def mean_est(vectors: Sequence[ESTVector]) -> np.ndarray:
    """Per-clip average of EST vectors (degenerate clips count as zeros)."""
    if not vectors:
        raise ValueError("no EST vectors to average")
    return np.mean([v.values for v in vectors], axis=0)


def pooled_est(vectors: Iterable[ESTVector]) -> np.ndarray:
    """EST of the summed transition counts of all clips."""
    counts = np.zeros((N_STATES, N_STATES), dtype=np.int64)
    for v in vectors:
        if v.transitions is None:
            raise ValueError("pooled aggregation needs transition counts")
        counts += v.transitions.counts
    total = counts.sum()
    if total == 0:
        return np.zeros(EST_DIM)
    return counts.reshape(-1) / total
