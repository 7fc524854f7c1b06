"""Emotion state transformation (EST) features and deception-classifier evaluation."""

from .emotion import (
    AUDIO_EXPANSION,
    EmotionState,
    EmotionTrack,
    Modality,
    RevisedTrack,
    expand_audio,
    parse_state,
    revise,
    revise_clip,
)
from .errors import (
    DegenerateLabels,
    DimensionMismatch,
    EstDetectError,
    InvalidChain,
    LengthMismatch,
    MissingClip,
    ParseError,
    SingleClassTest,
    SingleClassTraining,
    TooFewSamples,
    UnknownEmotionLabel,
)
from .est import ESTVector, TransitionMatrix, emotion_distribution, est_feature, top_transitions
from .evaluation import (
    EvalReport,
    FoldPlan,
    PipelineConfig,
    cross_validate,
    make_folds,
    roc_auc,
    run_trials,
)
from .fusion import (
    FeatureBlock,
    FeatureRecord,
    SelectionMask,
    fuse,
    pearson_scores,
    select_top_k,
)
from .corpus import Corpus, CorpusManifest, aggregate_report, load_corpus, write_corpus
from .learners import LearnerSpec, TrainedModel, decision_score, predict, train
from .synth import SynthConfig, generate_corpus, synth_corpus

__version__ = "0.1.0"
