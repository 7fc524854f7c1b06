"""K-fold cross-validation and the repeated-trials reporting protocol.

Fold plans are drawn with numpy's PCG64 generator seeded directly with the
fold seed, so assignments are reproducible across platforms.  Trial ``i``
of :func:`run_trials` uses fold seed ``base_seed + i``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import SingleClassTest, TooFewSamples
from .fusion import SCORERS, FeatureRecord, SelectionMask, Standardizer, select_top_k, stack
from .learners import SHORT_NAMES, LearnerSpec, decision_score, train

STRATEGIES = ("stratified", "shuffled", "identity_grouped")
METRICS = ("accuracy", "roc_auc")
REPORT_FORMAT_VERSION = 1


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(*parts: int) -> int:
    """Stable 63-bit seed from a tuple of non-negative integers."""
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1] & 0x7FFFFFFF) << 32)


# ------------------------------------------------------------------ folds


@dataclass(frozen=True)
class FoldPlan:
    K: int
    assignments: np.ndarray  # fold index per clip, aligned with clip_ids
    seed: int
    strategy: str
    clip_ids: tuple[str, ...] = ()

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.K)


def make_folds(clip_ids: Sequence[str], labels: Sequence[int], identities: Sequence[str] | None,
               K: int = 10, seed: int = 0, strategy: str = "stratified") -> FoldPlan:
    """Partition clips into ``K`` folds.

    ``stratified`` shuffles each class and deals the concatenated classes
    round-robin, ``shuffled`` deals one global permutation, and
    ``identity_grouped`` shuffles identities and places each group (largest
    first) into the currently smallest fold.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown fold strategy {strategy!r}")
    clip_ids = tuple(clip_ids)
    labels = np.asarray(labels)
    n = len(clip_ids)
    if labels.size != n:
        raise ValueError("labels and clip_ids differ in length")
    K = int(K)
    if K < 1:
        raise ValueError("K must be positive")
    rng = rng_for(seed)
    assign = np.empty(n, dtype=np.int64)

    if strategy == "identity_grouped":
        if identities is None or len(identities) != n:
            raise ValueError("identity_grouped folds need one identity per clip")
        groups: dict[str, list[int]] = {}
        for i, ident in enumerate(identities):
            groups.setdefault(ident, []).append(i)
        if K > len(groups):
            raise TooFewSamples(f"K={K} exceeds the number of identities ({len(groups)})")
        names = sorted(groups)
        names = [names[i] for i in rng.permutation(len(names))]
        names.sort(key=lambda g: -len(groups[g]))  # stable: shuffled order among equal sizes
        sizes = np.zeros(K, dtype=np.int64)
        for g in names:
            f = int(np.argmin(sizes))
            assign[groups[g]] = f
            sizes[f] += len(groups[g])
    else:
        if K > n:
            raise TooFewSamples(f"K={K} exceeds the number of clips ({n})")
        if strategy == "shuffled":
            order = rng.permutation(n)
        else:
            order = np.concatenate([
                np.flatnonzero(labels == c)[rng.permutation(int((labels == c).sum()))]
                for c in np.unique(labels)
            ])
        assign[order] = np.arange(n) % K
    assign.setflags(write=False)
    return FoldPlan(K, assign, int(seed), strategy, clip_ids)


# ---------------------------------------------------------------- metrics


def roc_auc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative (ties 1/2)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassTest("ROC-AUC needs both classes in the test labels")
    ranks = rankdata(scores, method="average")
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def confusion_matrix(y_true, y_pred) -> np.ndarray:
    """``[[TN, FP], [FN, TP]]`` (rows = actual, columns = predicted)."""
    y_true = np.asarray(y_true).astype(np.int64)
    y_pred = np.asarray(y_pred).astype(np.int64)
    cm = np.zeros((2, 2), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


@dataclass(frozen=True)
class FoldMetrics:
    fold: int
    accuracy: float
    roc_auc: float | None  # None when the test fold holds a single class
    confusion: tuple[tuple[int, int], tuple[int, int]]
    selection_digest: str | None = None

    @property
    def tn(self) -> int:
        return self.confusion[0][0]

    @property
    def fp(self) -> int:
        return self.confusion[0][1]

    @property
    def fn(self) -> int:
        return self.confusion[1][0]

    @property
    def tp(self) -> int:
        return self.confusion[1][1]

    @property
    def n_test(self) -> int:
        return self.tn + self.fp + self.fn + self.tp


# --------------------------------------------------------------- protocol


@dataclass(frozen=True)
class PipelineConfig:
    """Per-fold preprocessing: filter selection then z-scoring.

    ``select_k`` wins over ``select_ratio``; both ``None`` disables selection.
    """

    select_k: int | None = None
    select_ratio: float | None = 0.1
    select_method: str = "pearson"
    select_global: bool = False
    standardize: bool = True

    def __post_init__(self):
        if self.select_method not in SCORERS:
            raise ValueError(f"unknown selection method {self.select_method!r}")

    @property
    def selects(self) -> bool:
        return self.select_k is not None or self.select_ratio is not None

    def fit_mask(self, X: np.ndarray, y: np.ndarray) -> SelectionMask:
        scores = SCORERS[self.select_method](X, y)
        if self.select_k is not None:
            return select_top_k(scores, min(int(self.select_k), scores.size))
        return select_top_k(scores, ratio=self.select_ratio)


class EvaluationError(RuntimeError):
    def __init__(self, classifier: str, trial: int | None, fold: int, cause: Exception):
        self.classifier, self.trial, self.fold, self.cause = classifier, trial, fold, cause
        where = f"fold {fold}" if trial is None else f"trial {trial}, fold {fold}"
        super().__init__(f"{classifier} failed on {where}: {cause}")


def _as_arrays(records):
    if isinstance(records, tuple) and len(records) == 2:
        return np.asarray(records[0], dtype=np.float64), np.asarray(records[1]).astype(np.int64)
    return stack(records)


def cross_validate(spec: LearnerSpec, records: Sequence[FeatureRecord] | tuple, plan: FoldPlan,
                   config: PipelineConfig = PipelineConfig(), trial: int = 0) -> list[FoldMetrics]:
    """Fit the preprocessing and model on each training split, then score the held-out fold.

    ``records`` may also be an ``(X, y)`` pair.  The model seed for fold
    ``f`` is derived from ``(spec.seed, trial, f)``.
    """
    X, y = _as_arrays(records)
    if plan.assignments.size != y.size:
        raise ValueError("fold plan does not cover the records")
    global_mask = config.fit_mask(X, y) if config.selects and config.select_global else None
    out = []
    for f in range(plan.K):
        tr, te = plan.train_indices(f), plan.test_indices(f)
        try:
            Xtr, Xte = X[tr], X[te]
            mask = None
            if config.selects:
                mask = global_mask if global_mask is not None else config.fit_mask(Xtr, y[tr])
                Xtr, Xte = mask.apply(Xtr), mask.apply(Xte)
            if config.standardize:
                sc = Standardizer().fit(Xtr)
                Xtr, Xte = sc.transform(Xtr), sc.transform(Xte)
            model = train(spec.with_seed(derive_seed(spec.seed, trial, f)), Xtr, y[tr])
            scores = np.asarray(decision_score(model, Xte), dtype=np.float64)
        except Exception as exc:  # noqa: BLE001 - rewrapped with classifier/fold context
            raise EvaluationError(spec.kind, trial, f, exc) from exc
        pred = (scores > model.threshold).astype(np.int64)
        cm = confusion_matrix(y[te], pred)
        try:
            auc = roc_auc(scores, y[te])
        except SingleClassTest:
            auc = None
        acc = (cm[0, 0] + cm[1, 1]) / cm.sum()
        out.append(FoldMetrics(f, float(acc), auc, tuple(map(tuple, cm.tolist())),
                               mask.digest() if mask is not None else None))
    return out


@dataclass
class TrialResult:
    trial: int
    fold_seed: int
    folds: list[FoldMetrics]

    def mean(self, metric: str) -> float | None:
        vals = [getattr(f, metric) for f in self.folds if getattr(f, metric) is not None]
        return float(np.mean(vals)) if vals else None


@dataclass
class ClassifierResult:
    spec: LearnerSpec
    trials: list[TrialResult] = field(default_factory=list)
    top_n: int = 10

    def trial_means(self, metric: str) -> list[float | None]:
        return [t.mean(metric) for t in self.trials]

    def best(self, metric: str) -> tuple[int, float] | None:
        """``(trial, value)`` of the best trial mean; earliest trial wins ties."""
        vals = self.trial_means(metric)
        ok = [(v, -i) for i, v in enumerate(vals) if v is not None]
        if not ok:
            return None
        v, neg_i = max(ok)
        return -neg_i, v

    def top_mean(self, metric: str) -> float | None:
        vals = sorted((v for v in self.trial_means(metric) if v is not None), reverse=True)
        return float(np.mean(vals[: self.top_n])) if vals else None

    def summary(self) -> dict:
        out = {}
        for m in METRICS:
            best = self.best(m)
            out[m] = {
                "best": None if best is None else best[1],
                "best_trial": None if best is None else best[0],
                f"top{self.top_n}_mean": self.top_mean(m),
                "mean": _mean_or_none(self.trial_means(m)),
            }
        return out


def _mean_or_none(vals):
    vals = [v for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


@dataclass
class EvalReport:
    results: dict[str, ClassifierResult]
    K: int
    n_trials: int
    base_seed: int
    strategy: str
    pipeline: PipelineConfig
    config: dict = field(default_factory=dict)

    def config_hash(self) -> str:
        return config_hash(self.config) if self.config else config_hash(self._protocol())

    def _protocol(self) -> dict:
        return {
            "K": self.K, "n_trials": self.n_trials, "base_seed": self.base_seed,
            "strategy": self.strategy, "pipeline": asdict(self.pipeline),
        }

    def to_dict(self) -> dict:
        classifiers = {}
        for name, res in self.results.items():
            classifiers[name] = {
                "spec": {"kind": res.spec.kind, "seed": res.spec.seed, **res.spec.hyperparameters},
                "summary": res.summary(),
                "trials": [
                    {
                        "trial": t.trial,
                        "fold_seed": t.fold_seed,
                        "mean_accuracy": t.mean("accuracy"),
                        "mean_roc_auc": t.mean("roc_auc"),
                        "folds": [
                            {
                                "fold": f.fold, "accuracy": f.accuracy, "roc_auc": f.roc_auc,
                                "confusion": [list(r) for r in f.confusion],
                                "selection_digest": f.selection_digest,
                            }
                            for f in t.folds
                        ],
                    }
                    for t in res.trials
                ],
            }
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "protocol": {
                **self._protocol(),
                "trial_fold_seed": "base_seed + trial",
                "top_n_rule": "per metric independently over trial means",
                "confusion_layout": "[[TN, FP], [FN, TP]]",
            },
            "config": self.config,
            "config_hash": self.config_hash(),
            "classifiers": classifiers,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["classifier", "trial", "fold", "accuracy", "auc", "tp", "fp", "fn", "tn"])
        for name, res in self.results.items():
            for t in res.trials:
                for f in t.folds:
                    w.writerow([name, t.trial, f.fold, repr(f.accuracy),
                                "" if f.roc_auc is None else repr(f.roc_auc),
                                f.tp, f.fp, f.fn, f.tn])
        return buf.getvalue()

    def confusion_csv(self) -> str:
        """Summed confusion matrix of each classifier's best-accuracy trial."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["classifier", "trial", "actual", "predicted", "count"])
        for name, res in self.results.items():
            best = res.best("accuracy")
            if best is None:
                continue
            cm = np.zeros((2, 2), dtype=np.int64)
            for f in res.trials[best[0]].folds:
                cm += np.array(f.confusion)
            names = ("truthful", "deceptive")
            for a in (1, 0):
                for p in (1, 0):
                    w.writerow([name, best[0], names[a], names[p], int(cm[a, p])])
        return buf.getvalue()

    def summary_table(self) -> str:
        top = f"top{next(iter(self.results.values())).top_n}" if self.results else "top10"
        lines = [f"{'classifier':<10} {'AUC best':>9} {'AUC ' + top:>11} {'ACC best':>9} {'ACC ' + top:>11}"]
        for name, res in self.results.items():
            s = res.summary()
            cells = [s["roc_auc"]["best"], s["roc_auc"][f"{top}_mean"],
                     s["accuracy"]["best"], s["accuracy"][f"{top}_mean"]]
            fmt = [("   n/a" if c is None else f"{c:.4f}") for c in cells]
            label = SHORT_NAMES.get(res.spec.kind, name)
            lines.append(f"{label:<10} {fmt[0]:>9} {fmt[1]:>11} {fmt[2]:>9} {fmt[3]:>11}")
        return "\n".join(lines)


def config_hash(config: dict) -> str:
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def run_trials(specs: LearnerSpec | Sequence[LearnerSpec], records, K: int = 10,
               n_trials: int = 100, base_seed: int = 0, strategy: str = "stratified",
               config: PipelineConfig = PipelineConfig(), identities: Sequence[str] | None = None,
               top_n: int = 10, echo: dict | None = None) -> EvalReport:
    """Repeat K-fold cross-validation ``n_trials`` times for each classifier.

    The same fold plan of trial ``i`` (seed ``base_seed + i``) is shared by
    every classifier.  Best trial and the mean of the ``top_n`` best trials
    are computed per metric independently.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    if isinstance(specs, LearnerSpec):
        specs = [specs]
    X, y = _as_arrays(records)
    if identities is None and not isinstance(records, tuple):
        identities = [r.identity for r in records]
    clip_ids = [r.clip_id for r in records] if not isinstance(records, tuple) else [str(i) for i in range(y.size)]

    results: dict[str, ClassifierResult] = {}
    for spec in specs:
        name = spec.kind if spec.kind not in results else f"{spec.kind}#{len(results)}"
        results[name] = ClassifierResult(spec, top_n=top_n)
    for i in range(n_trials):
        seed = int(base_seed) + i
        plan = make_folds(clip_ids, y, identities, K, seed, strategy)
        for res in results.values():
            folds = cross_validate(res.spec, (X, y), plan, config, trial=i)
            res.trials.append(TrialResult(i, seed, folds))
    return EvalReport(results, int(K), int(n_trials), int(base_seed), strategy, config, dict(echo or {}))
