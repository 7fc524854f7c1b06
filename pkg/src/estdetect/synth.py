"""Seeded synthetic corpora from class-conditional emotion Markov chains.

The default chains pin the observed top-5 transition rates of each class
and share the rest of each row's mass evenly over its other cells.
They are an inspiration for realistic structure, not a fitted model.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, CorpusManifest, ManifestRow, write_corpus
from .emotion import AUDIO_EXPANSION, N_STATES, EmotionState, EmotionTrack, parse_state
from .errors import InvalidChain
from .fusion import FeatureBlock

S = EmotionState
DECEPTIVE_TOP5 = (
    (S.SAD, S.FEAR, 0.43),
    (S.NEUTRAL, S.SAD, 0.18),
    (S.HAPPY, S.NEUTRAL, 0.10),
    (S.FEAR, S.ANGRY, 0.08),
    (S.NEUTRAL, S.NEUTRAL, 0.05),
)
TRUTHFUL_TOP5 = (
    (S.FEAR, S.ANGRY, 0.36),
    (S.NEUTRAL, S.NEUTRAL, 0.15),
    (S.NEUTRAL, S.HAPPY, 0.13),
    (S.FEAR, S.NEUTRAL, 0.09),
    (S.SAD, S.ANGRY, 0.08),
)
DEFAULT_IDENTITIES = 58


def chain_from_top_transitions(entries) -> np.ndarray:
    """Row-stochastic 7x7 matrix with the given ``(from, to, mass)`` cells pinned.

    Each row's leftover mass ``1 - sum(pinned)`` is shared evenly by its free
    cells, then the row is renormalised.  Rows with no pinned cell are uniform.
    """
    P = np.full((N_STATES, N_STATES), np.nan)
    for src, dst, mass in entries:
        src = parse_state(src) if isinstance(src, str) else int(src)
        dst = parse_state(dst) if isinstance(dst, str) else int(dst)
        P[src, dst] = float(mass)
    for r in range(N_STATES):
        free = np.isnan(P[r])
        if free.any():
            P[r, free] = max(0.0, 1.0 - np.nansum(P[r])) / free.sum()
        if P[r].sum() <= 0:
            P[r] = 1.0
    return P / P.sum(axis=1, keepdims=True)


def check_chain(P, name: str = "chain") -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    if P.shape != (N_STATES, N_STATES):
        raise InvalidChain(f"{name} must be 7x7, got {P.shape}")
    if (P < 0).any() or not np.allclose(P.sum(axis=1), 1.0, rtol=0, atol=1e-9):
        raise InvalidChain(f"{name} rows must be non-negative and sum to 1 (within 1e-9)")
    return P


def check_distribution(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (N_STATES,) or (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
        raise InvalidChain(f"{name} must be a 7-vector of probabilities summing to 1")
    return p


def stationary_distribution(P) -> np.ndarray:
    """Left Perron vector of ``P`` (solve ``pi (P - I) = 0``, ``sum(pi) = 1``)."""
    P = np.asarray(P, dtype=np.float64)
    A = np.vstack([(P - np.eye(P.shape[0])).T, np.ones(P.shape[0])])
    b = np.zeros(P.shape[0] + 1)
    b[-1] = 1.0
    pi = np.linalg.lstsq(A, b, rcond=None)[0]
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def expected_est(P, initial=None) -> np.ndarray:
    """Long-track limit of the EST vector of a stationary chain.

    Boundaries ``i -> j`` (``i != j``) occur at rate ``pi_i P_ij``; a run of
    ``i`` of length >= 2 starts at rate ``pi_i (1 - P_ii) P_ii``.
    """
    P = check_chain(P)
    pi = stationary_distribution(P) if initial is None else np.asarray(initial, dtype=np.float64)
    M = pi[:, None] * P
    d = np.diag(P)
    M[np.diag_indices(N_STATES)] = pi * (1.0 - d) * d
    return (M / M.sum()).reshape(-1)


@dataclass(frozen=True)
class SynthConfig:
    n_clips_per_class: int = 100
    frames_min: int = 150
    frames_max: int = 1500
    deceptive_chain: np.ndarray = field(default_factory=lambda: chain_from_top_transitions(DECEPTIVE_TOP5))
    truthful_chain: np.ndarray = field(default_factory=lambda: chain_from_top_transitions(TRUTHFUL_TOP5))
    # None: start each clip from the stationary distribution of its class chain
    initial_distributions: tuple | None = None
    separation: float = 1.0
    audio_noise: float = 0.1
    n_identities: int = DEFAULT_IDENTITIES
    audio_factor: int = AUDIO_EXPANSION
    # (name, dimension) auxiliary blocks of Gaussian noise; a fraction of the
    # columns is shifted by ``aux_shift`` standard deviations for deceptive clips
    aux_blocks: tuple[tuple[str, int], ...] = ()
    aux_informative: float = 0.1
    aux_shift: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.n_clips_per_class < 1:
            raise ValueError("n_clips_per_class must be positive")
        if not 1 <= self.frames_min <= self.frames_max:
            raise ValueError("need 1 <= frames_min <= frames_max")
        check_chain(self.deceptive_chain, "deceptive_chain")
        check_chain(self.truthful_chain, "truthful_chain")
        if self.initial_distributions is not None:
            if len(self.initial_distributions) != 2:
                raise InvalidChain("initial_distributions needs a deceptive and a truthful vector")
            for p, n in zip(self.initial_distributions, ("deceptive", "truthful")):
                check_distribution(p, f"{n} initial distribution")
        if not 0.0 <= self.separation <= 1.0:
            raise ValueError("separation must lie in [0, 1]")
        if not 0.0 <= self.audio_noise <= 1.0:
            raise ValueError("audio_noise must lie in [0, 1]")
        if self.n_identities < 1 or self.audio_factor < 1:
            raise ValueError("n_identities and audio_factor must be positive")

    def class_chains(self) -> dict[int, np.ndarray]:
        """Chains after blending toward their mean by ``1 - separation``."""
        D = check_chain(self.deceptive_chain, "deceptive_chain")
        T = check_chain(self.truthful_chain, "truthful_chain")
        mid = (D + T) / 2.0
        s = self.separation
        return {1: mid + s * (D - mid), 0: mid + s * (T - mid)}

    def class_initials(self) -> dict[int, np.ndarray]:
        chains = self.class_chains()
        if self.initial_distributions is None:
            return {c: stationary_distribution(P) for c, P in chains.items()}
        d, t = (np.asarray(p, dtype=np.float64) for p in self.initial_distributions)
        mid = (d + t) / 2.0
        s = self.separation
        return {1: mid + s * (d - mid), 0: mid + s * (t - mid)}


def sample_chain(P: np.ndarray, initial: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    cum = [list(np.cumsum(row)) for row in P]
    cum0 = list(np.cumsum(initial))
    u = rng.random(n).tolist()
    out = np.empty(n, dtype=np.int8)
    s = min(bisect.bisect_right(cum0, u[0]), N_STATES - 1)
    out[0] = s
    for k in range(1, n):
        s = min(bisect.bisect_right(cum[s], u[k]), N_STATES - 1)
        out[k] = s
    return out


def audio_from_visual(visual: np.ndarray, factor: int, noise: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Majority state of each ``factor``-frame window, then random corruption.

    Window ties go to the lowest state index; a corrupted segment takes a
    uniformly chosen different state.
    """
    m = -(-visual.size // factor)
    segs = np.empty(m, dtype=np.int8)
    for j in range(m):
        segs[j] = np.argmax(np.bincount(visual[j * factor:(j + 1) * factor], minlength=N_STATES))
    flip = rng.random(m) < noise
    shift = rng.integers(1, N_STATES, size=m)
    segs[flip] = (segs[flip] + shift[flip]) % N_STATES
    return segs


def clip_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def generate_corpus(config: SynthConfig = SynthConfig()) -> Corpus:
    """Build a synthetic corpus in memory; deterministic in ``config.seed``."""
    config.validate()
    chains, initials = config.class_chains(), config.class_initials()
    rows, visual, audio = [], {}, {}
    n = config.n_clips_per_class
    index = 0
    for label, prefix in ((1, "deceptive"), (0, "truthful")):
        for j in range(n):
            clip_id = f"{prefix}_{j:04d}"
            rng = clip_rng(config.seed, index)
            index += 1
            n_frames = int(rng.integers(config.frames_min, config.frames_max + 1))
            v = sample_chain(chains[label], initials[label], n_frames, rng)
            a = audio_from_visual(v, config.audio_factor, config.audio_noise, rng)
            identity = f"id_{j % config.n_identities:03d}"
            rows.append(ManifestRow(clip_id, label, identity, f"synthetic/{clip_id}.mp4", n_frames))
            visual[clip_id] = EmotionTrack.visual(clip_id, v)
            audio[clip_id] = EmotionTrack.audio(clip_id, a)
    manifest = CorpusManifest(tuple(rows))
    blocks = {}
    labels = manifest.labels
    for b, (name, dim) in enumerate(config.aux_blocks):
        rng = clip_rng(config.seed, 2**32 + b)  # disjoint from clip indices
        M = rng.standard_normal((len(manifest), int(dim)))
        k = int(round(config.aux_informative * dim))
        if k:
            cols = np.sort(rng.choice(int(dim), size=k, replace=False))
            M[np.ix_(labels == 1, cols)] += config.aux_shift
        blocks[name] = FeatureBlock(name, tuple(manifest.clip_ids), M)
    return Corpus(manifest, visual, audio, blocks)


def synth_corpus(config: SynthConfig, out_dir) -> dict[str, Path]:
    """Generate a corpus and write its CSV files into ``out_dir``."""
    return write_corpus(generate_corpus(config), out_dir)
