"""Cross-collection topic models (C-LDA / C-HDP)."""

from ._xtopics import (
    ChdpConfig,
    ChdpState,
    CheckpointInfo,
    CldaConfig,
    CldaState,
    CooccurrenceIndex,
    Corpus,
    DataError,
    Document,
    NumericalError,
    PerplexityReport,
    SynthSpec,
    TopicModelSnapshot,
    TraceRow,
    TrainResult,
    UsageError,
    Vocabulary,
    coherence,
    distinguishability,
    generate,
    holdout_split,
    left_to_right_perplexity,
    load_chdp_checkpoint,
    load_clda_checkpoint,
    load_corpus,
    mutual_coherence,
    read_checkpoint_info,
    save_checkpoint,
    scenario_preset,
    train_chdp,
    train_clda,
)

__all__ = [
    "ChdpConfig",
    "ChdpState",
    "CheckpointInfo",
    "CldaConfig",
    "CldaState",
    "CooccurrenceIndex",
    "Corpus",
    "DataError",
    "Document",
    "NumericalError",
    "PerplexityReport",
    "SynthSpec",
    "TopicModelSnapshot",
    "TraceRow",
    "TrainResult",
    "UsageError",
    "Vocabulary",
    "coherence",
    "distinguishability",
    "generate",
    "holdout_split",
    "left_to_right_perplexity",
    "load_chdp_checkpoint",
    "load_clda_checkpoint",
    "load_corpus",
    "mutual_coherence",
    "read_checkpoint_info",
    "save_checkpoint",
    "scenario_preset",
    "train_chdp",
    "train_clda",
]

__version__ = "0.1.0"
