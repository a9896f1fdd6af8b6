"""Integer scoring systems learned by exact buffered-AUC optimization."""

from .dataset import (
    BinarizationSpec,
    BinaryDataset,
    ColumnRule,
    PairDiffSet,
    RawTable,
    SplitPair,
    binarize,
    infer_spec,
    load_csv,
    pair_differences,
    split,
    subsample,
)
from .metrics import (
    ScoreSample,
    WeightedSamples,
    auc,
    bauc,
    bpoe_at_zero,
    logistic_loss,
    negative_log_likelihood,
)

__all__ = [
    "BinarizationSpec",
    "BinaryDataset",
    "ColumnRule",
    "PairDiffSet",
    "RawTable",
    "SplitPair",
    "ScoreSample",
    "WeightedSamples",
    "auc",
    "bauc",
    "binarize",
    "bpoe_at_zero",
    "infer_spec",
    "load_csv",
    "logistic_loss",
    "negative_log_likelihood",
    "pair_differences",
    "split",
    "subsample",
]

__version__ = "0.1.0"
