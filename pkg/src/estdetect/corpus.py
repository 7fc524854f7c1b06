"""Corpus files on disk and the class-level aggregate report.

File layouts (UTF-8, LF, header row, rows sorted by clip id)::

    manifest.csv        clip_id,label,identity,source_video,n_frames
    visual_states.csv   clip_id,frame_index,state
    audio_states.csv    clip_id,segment_index,state
    <block>.csv         clip_id,<name>_0,...,<name>_{d-1}
    fused.csv           clip_id,label,f_0,...,f_{D-1}

Floats are written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .emotion import (
    AUDIO_EXPANSION,
    STATE_NAMES,
    EmotionTrack,
    Modality,
    RevisedTrack,
    parse_state,
    revise_clip,
)
from .errors import LengthMismatch, MissingClip, ParseError, UnknownEmotionLabel
from .est import EST_DIM, EST_FEATURE_NAMES, emotion_distribution, est_feature, mean_est, pooled_est
from .fusion import FeatureBlock, FeatureRecord

LABELS = {"truthful": 0, "deceptive": 1}
LABEL_NAMES = {v: k for k, v in LABELS.items()}
MANIFEST_HEADER = ["clip_id", "label", "identity", "source_video", "n_frames"]
INDEX_COLUMN = {Modality.VISUAL: "frame_index", Modality.AUDIO: "segment_index"}


# ---------------------------------------------------------------- manifest


@dataclass(frozen=True)
class ManifestRow:
    clip_id: str
    label: int
    identity: str
    source_video: str
    n_frames: int

    @property
    def label_name(self) -> str:
        return LABEL_NAMES[self.label]


@dataclass(frozen=True)
class CorpusManifest:
    rows: tuple[ManifestRow, ...]

    def __post_init__(self):
        rows = tuple(sorted(self.rows, key=lambda r: r.clip_id))
        seen = set()
        for r in rows:
            if r.clip_id in seen:
                raise ValueError(f"duplicate clip id {r.clip_id!r} in manifest")
            seen.add(r.clip_id)
            if r.n_frames < 1:
                raise ValueError(f"clip {r.clip_id!r}: n_frames must be >= 1")
            if r.label not in (0, 1):
                raise ValueError(f"clip {r.clip_id!r}: label must be 0 or 1")
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def clip_ids(self) -> list[str]:
        return [r.clip_id for r in self.rows]

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.rows], dtype=np.int64)

    @property
    def identities(self) -> list[str]:
        return [r.identity for r in self.rows]

    def __getitem__(self, clip_id: str) -> ManifestRow:
        for r in self.rows:
            if r.clip_id == clip_id:
                return r
        raise MissingClip(f"clip {clip_id!r} is not in the manifest")


# --------------------------------------------------------------- csv helpers


def _open_csv(path):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(path, None, f"cannot open: {exc.strerror}") from None
    return fh


def _read_rows(path, expected_header: Sequence[str] | None = None):
    """Yield ``(line_number, row)``; validates the header when given."""
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file (missing header)") from None
        except csv.Error as exc:
            raise ParseError(path, 1, str(exc)) from None
        if expected_header is not None and [h.strip() for h in header] != list(expected_header):
            raise ParseError(path, 1, f"expected header {','.join(expected_header)}")
        yield 1, header
        try:
            for row in reader:
                if not row:
                    continue
                yield reader.line_num, row
        except csv.Error as exc:
            raise ParseError(path, reader.line_num, str(exc)) from None


def _to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary sibling file and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class StagedOutputs:
    """Collect several output files and write them only when all succeeded.

    >>> with StagedOutputs() as out:          # doctest: +SKIP
    ...     out.add("a.csv", text_a)
    ...     out.add("b.csv", text_b)
    """

    def __init__(self):
        self._files: dict[Path, str] = {}
        self.written: list[Path] = []

    def add(self, path, text: str) -> Path:
        path = Path(path)
        self._files[path] = text
        return path

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            for path, text in self._files.items():
                atomic_write_text(path, text)
                self.written.append(path)
        return False


# --------------------------------------------------------------- readers


def read_manifest(path) -> CorpusManifest:
    rows = []
    for line, row in _read_rows(path, MANIFEST_HEADER):
        if line == 1:
            continue
        if len(row) != 5:
            raise ParseError(path, line, f"expected 5 fields, got {len(row)}")
        clip_id, label, identity, source, n_frames = (c.strip() for c in row)
        if label not in LABELS:
            raise ParseError(path, line, f"label must be deceptive or truthful, got {label!r}")
        try:
            n = int(n_frames)
        except ValueError:
            raise ParseError(path, line, f"n_frames is not an integer: {n_frames!r}") from None
        if n < 1:
            raise ParseError(path, line, "n_frames must be >= 1")
        if not clip_id:
            raise ParseError(path, line, "empty clip_id")
        rows.append(ManifestRow(clip_id, LABELS[label], identity, source, n))
    ids = [r.clip_id for r in rows]
    if len(set(ids)) != len(ids):
        dup = next(c for c in ids if ids.count(c) > 1)
        raise ParseError(path, None, f"duplicate clip_id {dup!r}")
    return CorpusManifest(tuple(rows))


def manifest_csv(manifest: CorpusManifest) -> str:
    return _to_csv(MANIFEST_HEADER, (
        (r.clip_id, r.label_name, r.identity, r.source_video, r.n_frames) for r in manifest.rows
    ))


def read_states(path, modality: Modality | str) -> dict[str, EmotionTrack]:
    """Parse a visual or audio state file into tracks keyed by clip id."""
    modality = Modality(modality)
    header = ["clip_id", INDEX_COLUMN[modality], "state"]
    raw: dict[str, dict[int, int]] = defaultdict(dict)
    for line, row in _read_rows(path, header):
        if line == 1:
            continue
        if len(row) != 3:
            raise ParseError(path, line, f"expected 3 fields, got {len(row)}")
        clip_id, idx, state = (c.strip() for c in row)
        try:
            i = int(idx)
        except ValueError:
            raise ParseError(path, line, f"{header[1]} is not an integer: {idx!r}") from None
        try:
            code = int(parse_state(state))
        except UnknownEmotionLabel:
            raise ParseError(path, line, f"unknown emotion state {state!r}") from None
        if i < 0:
            raise ParseError(path, line, f"negative {header[1]}")
        if i in raw[clip_id]:
            raise ParseError(path, line, f"duplicate {header[1]} {i} for clip {clip_id!r}")
        raw[clip_id][i] = code
    tracks = {}
    for clip_id, by_index in raw.items():
        n = len(by_index)
        if max(by_index) != n - 1:
            raise ParseError(path, None, f"clip {clip_id!r}: {header[1]} is not dense 0..{n - 1}")
        tracks[clip_id] = EmotionTrack(clip_id, modality, [by_index[i] for i in range(n)])
    return tracks


def states_csv(tracks: Mapping[str, EmotionTrack], modality: Modality | str) -> str:
    modality = Modality(modality)
    header = ["clip_id", INDEX_COLUMN[modality], "state"]

    def rows():
        for clip_id in sorted(tracks):
            for i, code in enumerate(tracks[clip_id].states):
                yield clip_id, i, STATE_NAMES[code]

    return _to_csv(header, rows())


def read_block(path, name: str | None = None) -> FeatureBlock:
    """Read an auxiliary block; its name is taken from the column prefix if not given."""
    rows: dict[str, list[float]] = {}
    width = None
    for line, row in _read_rows(path):
        if line == 1:
            if not row or row[0].strip() != "clip_id" or len(row) < 2:
                raise ParseError(path, 1, "header must be clip_id,<name>_0,...")
            cols = [c.strip() for c in row[1:]]
            prefix = cols[0].rsplit("_", 1)[0]
            if name is None:
                name = prefix
            expected = [f"{prefix}_{j}" for j in range(len(cols))]
            if cols != expected:
                raise ParseError(path, 1, f"feature columns must be {prefix}_0..{prefix}_{len(cols) - 1}")
            width = len(cols)
            continue
        if len(row) != width + 1:
            raise ParseError(path, line, f"expected {width + 1} fields, got {len(row)}")
        clip_id = row[0].strip()
        if clip_id in rows:
            raise ParseError(path, line, f"duplicate clip_id {clip_id!r}")
        try:
            values = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise ParseError(path, line, str(exc)) from None
        if not np.all(np.isfinite(values)):
            raise ParseError(path, line, "non-finite feature value")
        rows[clip_id] = values
    if not rows:
        raise ParseError(path, None, "block has no rows")
    return FeatureBlock.from_rows(name, rows)


def block_csv(block: FeatureBlock) -> str:
    order = np.argsort(np.array(block.clip_ids, dtype=object), kind="stable")
    return _to_csv(["clip_id", *block.feature_names()], (
        (block.clip_ids[i], *map(_fmt, block.matrix[i])) for i in order
    ))


def fused_csv(records: Sequence[FeatureRecord]) -> str:
    dim = records[0].dimension if records else 0
    return _to_csv(["clip_id", "label", *(f"f_{j}" for j in range(dim))], (
        (r.clip_id, LABEL_NAMES[r.label], *map(_fmt, r.features))
        for r in sorted(records, key=lambda r: r.clip_id)
    ))


def read_fused(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Return ``(clip_ids, labels, X)`` from a fused-features file."""
    ids, labels, rows = [], [], []
    width = None
    for line, row in _read_rows(path):
        if line == 1:
            if row[:2] != ["clip_id", "label"]:
                raise ParseError(path, 1, "header must start with clip_id,label")
            width = len(row)
            continue
        if len(row) != width:
            raise ParseError(path, line, f"expected {width} fields, got {len(row)}")
        if row[1] not in LABELS:
            raise ParseError(path, line, f"bad label {row[1]!r}")
        try:
            rows.append([float(v) for v in row[2:]])
        except ValueError as exc:
            raise ParseError(path, line, str(exc)) from None
        ids.append(row[0])
        labels.append(LABELS[row[1]])
    return ids, np.array(labels, dtype=np.int64), np.array(rows, dtype=np.float64).reshape(len(ids), -1)


# ------------------------------------------------------------------ corpus


@dataclass
class Corpus:
    manifest: CorpusManifest
    visual: dict[str, EmotionTrack]
    audio: dict[str, EmotionTrack] = field(default_factory=dict)
    blocks: dict[str, FeatureBlock] = field(default_factory=dict)

    def revised(self, factor: int = AUDIO_EXPANSION) -> dict[str, RevisedTrack]:
        return {
            cid: revise_clip(self.visual[cid], self.audio.get(cid), factor)
            for cid in self.manifest.clip_ids
        }

    def est_block(self, factor: int = AUDIO_EXPANSION) -> FeatureBlock:
        revised = self.revised(factor)
        ids = self.manifest.clip_ids
        return FeatureBlock("est", tuple(ids), np.array([est_feature(revised[c]).values for c in ids]))

    def validate(self) -> None:
        for row in self.manifest.rows:
            track = self.visual.get(row.clip_id)
            if track is None:
                raise MissingClip(f"no visual track for clip {row.clip_id!r}")
            if len(track) != row.n_frames:
                raise LengthMismatch(
                    f"clip {row.clip_id!r}: visual track has {len(track)} frames, manifest says {row.n_frames}")
        known = set(self.manifest.clip_ids)
        for source, ids in (("visual", self.visual), ("audio", self.audio)):
            extra = sorted(set(ids) - known)
            if extra:
                raise MissingClip(f"{source} file has clip {extra[0]!r} that is not in the manifest")
        for block in self.blocks.values():
            have = set(block.clip_ids)
            for cid in self.manifest.clip_ids:
                if cid not in have:
                    raise MissingClip(f"block {block.name!r} has no row for clip {cid!r}")


def load_corpus(manifest_path, visual_path, audio_path=None,
                aux_paths: Mapping[str, str | os.PathLike] | None = None) -> Corpus:
    """Load and cross-validate a corpus; audio and auxiliary blocks are optional."""
    manifest = read_manifest(manifest_path)
    visual = read_states(visual_path, Modality.VISUAL)
    audio = read_states(audio_path, Modality.AUDIO) if audio_path else {}
    blocks = {name: read_block(p, name) for name, p in (aux_paths or {}).items()}
    corpus = Corpus(manifest, visual, audio, blocks)
    corpus.validate()
    return corpus


def corpus_files(corpus: Corpus, out_dir) -> dict[str, str]:
    """Serialised text of every corpus file, keyed by path."""
    out_dir = Path(out_dir)
    files = {
        str(out_dir / "manifest.csv"): manifest_csv(corpus.manifest),
        str(out_dir / "visual_states.csv"): states_csv(corpus.visual, Modality.VISUAL),
        str(out_dir / "audio_states.csv"): states_csv(corpus.audio, Modality.AUDIO),
    }
    for name, block in corpus.blocks.items():
        files[str(out_dir / f"{name}.csv")] = block_csv(block)
    return files


def write_corpus(corpus: Corpus, out_dir) -> dict[str, Path]:
    with StagedOutputs() as out:
        for path, text in corpus_files(corpus, out_dir).items():
            out.add(path, text)
    return {p.stem: p for p in out.written}


# ---------------------------------------------------------------- analytics

REPORT_HEADER = ["label", "source", "statistic", "aggregation", "key", "value", "n_clips"]
REPORT_SOURCES = ("revised", "visual")


def aggregate_report(corpus: Corpus, factor: int = AUDIO_EXPANSION,
                     sources: Sequence[str] = REPORT_SOURCES) -> list[tuple]:
    """Per-class emotion distribution and EST, labelled by aggregation method.

    ``clip_mean`` averages per-clip vectors; ``pooled`` pools frames (for the
    distribution) or transition counts (for EST) across the class.  Source
    ``revised`` uses the voted tracks, ``visual`` the raw visual tracks.
    """
    tracks = {}
    for source in sources:
        if source == "revised":
            tracks[source] = corpus.revised(factor)
        elif source == "visual":
            tracks[source] = corpus.visual
        else:
            raise ValueError(f"unknown report source {source!r}")
    rows = []
    for label in (1, 0):
        ids = [r.clip_id for r in corpus.manifest.rows if r.label == label]
        if not ids:
            continue
        name = LABEL_NAMES[label]
        for source in sources:
            seqs = [tracks[source][c] for c in ids]
            dists = np.array([emotion_distribution(t) for t in seqs])
            lengths = np.array([len(t) for t in seqs], dtype=np.float64)
            ests = [est_feature(t) for t in seqs]
            blocks = [
                ("distribution", "clip_mean", STATE_NAMES, dists.mean(axis=0)),
                ("distribution", "pooled", STATE_NAMES, lengths @ dists / lengths.sum()),
                ("est", "clip_mean", EST_FEATURE_NAMES, mean_est(ests)),
                ("est", "pooled", EST_FEATURE_NAMES, pooled_est(ests)),
            ]
            for stat, agg, keys, values in blocks:
                for key, v in zip(keys, values):
                    rows.append((name, source, stat, agg, key, float(v), len(ids)))
    return rows


def aggregate_report_csv(rows: Sequence[tuple]) -> str:
    return _to_csv(REPORT_HEADER, ((*r[:5], _fmt(r[5]), r[6]) for r in rows))


def report_vector(rows: Sequence[tuple], label: str, statistic: str, aggregation: str,
                  source: str = "revised") -> np.ndarray:
    vals = [r[5] for r in rows if r[:4] == (label, source, statistic, aggregation)]
    expected = EST_DIM if statistic == "est" else len(STATE_NAMES)
    if len(vals) != expected:
        raise KeyError(f"no {source}/{statistic}/{aggregation} rows for {label!r}")
    return np.array(vals)
