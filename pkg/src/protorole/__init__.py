"""Semantic proto-role labeling with a BiLSTM pair-state encoder.

A predicate-argument pair is represented by concatenating the encoder's
hidden states at the two head tokens; per-property decoders score
proto-role attributes from that pair state.  Training, multi-task
regimes, evaluation, and learning-curve ablations are all driven from a
from-scratch reverse-mode autodiff core.
"""

__version__ = "0.1.0"

from .data import (
    EmbeddingTable,
    Instance,
    PropertyCatalog,
    SentencePair,
    load_dataset,
    load_embeddings,
    sample_fraction,
)
from .errors import ProtoRoleError
from .estimator import ProtoRoleLabeler
from .evaluation import (
    BinaryCounts,
    MetricsReport,
    aggregate,
    contingency_delta,
    disagreement_sample,
    f1,
    pearson,
)
from .model import ModelConfig, SprlModel, build_model
from .training import (
    TaskSpec,
    TrainConfig,
    ablation_run,
    load_checkpoint,
    mixing_weight,
    pretrain_then_finetune,
    save_checkpoint,
    train,
)

__all__ = [
    "__version__",
    "EmbeddingTable",
    "Instance",
    "PropertyCatalog",
    "SentencePair",
    "load_dataset",
    "load_embeddings",
    "sample_fraction",
    "ProtoRoleError",
    "ProtoRoleLabeler",
    "BinaryCounts",
    "MetricsReport",
    "aggregate",
    "contingency_delta",
    "disagreement_sample",
    "f1",
    "pearson",
    "ModelConfig",
    "SprlModel",
    "build_model",
    "TaskSpec",
    "TrainConfig",
    "ablation_run",
    "load_checkpoint",
    "mixing_weight",
    "pretrain_then_finetune",
    "save_checkpoint",
    "train",
]
