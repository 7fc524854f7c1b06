"""Feature-block fusion and filter feature selection."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateLabels, DimensionMismatch, MissingClip

DEFAULT_SELECT_RATIO = 0.1


@dataclass(frozen=True)
class FeatureBlock:
    """A named clips x dimension matrix (e.g. ``est``, ``me``, ``is13``)."""

    name: str
    clip_ids: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        ids = tuple(self.clip_ids)
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DimensionMismatch(f"block {self.name!r}: matrix must be 2-D")
        if matrix.shape[0] != len(ids):
            raise DimensionMismatch(
                f"block {self.name!r}: {matrix.shape[0]} rows for {len(ids)} clip ids")
        if matrix.shape[1] < 1:
            raise DimensionMismatch(f"block {self.name!r}: dimension must be positive")
        if len(set(ids)) != len(ids):
            raise ValueError(f"block {self.name!r}: duplicate clip ids")
        object.__setattr__(self, "clip_ids", ids)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[1])

    @classmethod
    def from_rows(cls, name: str, rows: dict[str, Sequence[float]]) -> "FeatureBlock":
        ids = sorted(rows)
        widths = {len(rows[c]) for c in ids}
        if len(widths) > 1:
            raise DimensionMismatch(f"block {name!r}: ragged rows (widths {sorted(widths)})")
        return cls(name, tuple(ids), np.array([rows[c] for c in ids], dtype=np.float64))

    def row(self, clip_id: str) -> np.ndarray:
        try:
            return self.matrix[self.clip_ids.index(clip_id)]
        except ValueError:
            raise MissingClip(f"block {self.name!r} has no row for clip {clip_id!r}") from None

    def feature_names(self) -> list[str]:
        return [f"{self.name}_{j}" for j in range(self.dimension)]


@dataclass(frozen=True)
class FeatureRecord:
    clip_id: str
    label: int  # 1 = deceptive, 0 = truthful
    identity: str
    features: np.ndarray
    layout: tuple[tuple[str, int], ...] = ()

    @property
    def dimension(self) -> int:
        return int(self.features.size)


def fuse(blocks: Sequence[FeatureBlock], manifest) -> list[FeatureRecord]:
    """Concatenate blocks per manifest clip, in the given block order.

    ``manifest`` is a :class:`~estdetect.corpus.CorpusManifest` (anything with
    ``rows`` carrying ``clip_id``, ``label`` and ``identity``).
    Records come back sorted by clip id.
    """
    if not blocks:
        raise ValueError("fuse needs at least one feature block")
    layout = tuple((b.name, b.dimension) for b in blocks)
    positions = [{c: i for i, c in enumerate(b.clip_ids)} for b in blocks]
    records = []
    for row in sorted(manifest.rows, key=lambda r: r.clip_id):
        parts = []
        for block, pos in zip(blocks, positions):
            if row.clip_id not in pos:
                raise MissingClip(f"block {block.name!r} has no row for clip {row.clip_id!r}")
            parts.append(block.matrix[pos[row.clip_id]])
        features = np.concatenate(parts)
        features.setflags(write=False)
        records.append(FeatureRecord(row.clip_id, int(row.label), row.identity, features, layout))
    return records


def stack(records: Sequence[FeatureRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Records to ``(X, y)`` arrays."""
    if not records:
        raise ValueError("no records")
    dims = {r.dimension for r in records}
    if len(dims) != 1:
        raise DimensionMismatch(f"records have mixed dimensions {sorted(dims)}")
    X = np.vstack([r.features for r in records])
    y = np.array([r.label for r in records], dtype=np.int64)
    return X, y


def _check_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.size < 2 or np.all(y == y[0]):
        raise DegenerateLabels("feature scoring needs both labels present")
    return y


def pearson_matrix_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """|Pearson r| of every column of ``X`` with ``y``; constant columns score 0."""
    y = _check_labels(y)
    X = np.asarray(X, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    sxx = np.sqrt(np.einsum("ij,ij->j", Xc, Xc))
    syy = np.sqrt(yc @ yc)
    cov = yc @ Xc
    # relative threshold: columns constant up to rounding error count as constant
    scale = np.abs(X).max(axis=0) * np.sqrt(X.shape[0])
    constant = sxx <= 1e-12 * np.maximum(scale, np.finfo(float).tiny)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(cov) / (sxx * syy)
    r[constant] = 0.0
    return np.clip(r, 0.0, 1.0)


def anova_matrix_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Two-group one-way ANOVA F statistic per column; constant columns score 0."""
    y = _check_labels(y)
    X = np.asarray(X, dtype=np.float64)
    g1 = y == y.max()
    n, n1 = y.size, int(g1.sum())
    n0 = n - n1
    mean = X.mean(axis=0)
    m1, m0 = X[g1].mean(axis=0), X[~g1].mean(axis=0)
    between = n1 * (m1 - mean) ** 2 + n0 * (m0 - mean) ** 2
    within = ((X[g1] - m1) ** 2).sum(axis=0) + ((X[~g1] - m0) ** 2).sum(axis=0)
    f = np.zeros(X.shape[1])
    ok = within > 0
    f[ok] = (between[ok] / 1.0) / (within[ok] / max(n - 2, 1))
    # perfectly separating, non-constant columns
    f[(~ok) & (between > 0)] = np.inf
    return f


SCORERS = {"pearson": pearson_matrix_scores, "anova": anova_matrix_scores}


def pearson_scores(records: Sequence[FeatureRecord]) -> np.ndarray:
    X, y = stack(records)
    return pearson_matrix_scores(X, y)


def default_k(dimension: int, ratio: float = DEFAULT_SELECT_RATIO) -> int:
    """``round(dimension * ratio)`` with halves rounded up, at least 1."""
    return max(1, min(int(dimension), int(np.floor(dimension * ratio + 0.5))))


@dataclass(frozen=True)
class SelectionMask:
    kept_indices: np.ndarray  # descending score, ties by ascending index
    scores: np.ndarray

    @property
    def k(self) -> int:
        return int(self.kept_indices.size)

    @property
    def columns(self) -> np.ndarray:
        """Kept indices in ascending order; the order used when applying the mask."""
        return np.sort(self.kept_indices)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X)[..., self.columns]

    def digest(self) -> str:
        return hashlib.sha256(self.columns.astype("<i8").tobytes()).hexdigest()[:16]

    def to_json(self) -> str:
        doc = {
            "dimension": int(self.scores.size),
            "k": self.k,
            "kept_indices": [int(i) for i in self.kept_indices],
            "scores": [float(s) for s in self.scores],
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SelectionMask":
        doc = json.loads(text)
        return cls(np.array(doc["kept_indices"], dtype=np.int64),
                   np.array(doc["scores"], dtype=np.float64))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def select_top_k(scores, k: int | None = None, ratio: float = DEFAULT_SELECT_RATIO) -> SelectionMask:
    """Keep the ``k`` best-scoring features (default ``round(dimension * ratio)``)."""
    scores = np.asarray(scores, dtype=np.float64)
    d = scores.size
    if k is None:
        k = default_k(d, ratio)
    if not 1 <= k <= d:
        raise ValueError(f"k={k} outside 1..{d}")
    # nan scores sort last
    key = np.where(np.isnan(scores), -np.inf, scores)
    order = np.lexsort((np.arange(d), -key))
    return SelectionMask(order[:k].astype(np.int64), scores)


def mask_blocks(blocks: Sequence[FeatureBlock], mask: SelectionMask) -> list[FeatureBlock]:
    """Restrict each block to the fused-space columns that ``mask`` keeps.

    Blocks left with no kept column are dropped.
    """
    out, offset = [], 0
    cols = mask.columns
    for b in blocks:
        local = cols[(cols >= offset) & (cols < offset + b.dimension)] - offset
        if local.size:
            out.append(FeatureBlock(b.name, b.clip_ids, b.matrix[:, local]))
        offset += b.dimension
    return out


class Standardizer:
    """Per-feature z-scoring; zero-variance columns are only centred."""

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)
