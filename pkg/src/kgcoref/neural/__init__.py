"""Neural scorer: configuration, parameters, and the knowledge-aware model."""
from .config import FFN_HIDDEN_LAYERS, LENGTH_BUCKET_EDGES, N_LENGTH_BUCKETS, ModelConfig, Variant, length_bucket
from .gradcheck import GradCheckReport, check_gradients, kink_margin
from .model import (
    GoldCoverageError,
    InstanceFeatures,
    ScoredCandidate,
    SpanContext,
    encode_document,
    knowledge_attend,
    knowledge_concat,
    knowledge_embed,
    loss,
    loss_from_features,
    pair_contexts,
    prepare_instance,
    score_instance,
    score_pair,
    scores_from_features,
    select,
    span_repr,
)
from .params import (
    CHECKPOINT_SUFFIX,
    CheckpointError,
    ModelParameters,
    OOV_ID,
    OOV_TOKEN,
    build_vocab,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "FFN_HIDDEN_LAYERS",
    "GradCheckReport",
    "LENGTH_BUCKET_EDGES",
    "N_LENGTH_BUCKETS",
    "check_gradients",
    "kink_margin",
    "ModelConfig",
    "Variant",
    "length_bucket",
    "GoldCoverageError",
    "InstanceFeatures",
    "ScoredCandidate",
    "SpanContext",
    "encode_document",
    "knowledge_attend",
    "knowledge_concat",
    "knowledge_embed",
    "loss",
    "loss_from_features",
    "pair_contexts",
    "prepare_instance",
    "score_instance",
    "score_pair",
    "scores_from_features",
    "select",
    "span_repr",
    "CHECKPOINT_SUFFIX",
    "CheckpointError",
    "ModelParameters",
    "OOV_ID",
    "OOV_TOKEN",
    "build_vocab",
    "load_checkpoint",
    "save_checkpoint",
]
