"""Model hyperparameters, architecture variants, and the span-length bucket table."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from enum import Enum

# every feed-forward scorer uses exactly two rectified hidden layers
FFN_HIDDEN_LAYERS = 2

# inclusive width ranges mapped to learned length embeddings
LENGTH_BUCKET_EDGES = (1, 2, 3, 4, 5, 8, 16, 32, 64)
N_LENGTH_BUCKETS = len(LENGTH_BUCKET_EDGES)


def length_bucket(width: int) -> int:
    """Bucket index for a span width: {1}, {2}, {3}, {4}, 5-7, 8-15, 16-31, 32-63, 64+."""
    if width < 1:
        raise ValueError(f"span width must be positive, got {width}")
    idx = 0
    for i, lo in enumerate(LENGTH_BUCKET_EDGES):
        if width >= lo:
            idx = i
    return idx


class Variant(Enum):
    """Architecture variants used for the knowledge ablation comparisons."""

    COMPLETE = "complete"
    WITHOUT_KG = "without_kg"
    WITHOUT_ATTENTION = "without_attention"


@dataclass(frozen=True)
class ModelConfig:
    """Dimensions and regularization knobs for the scorer.

    lstm_hidden, ffn_hidden, and dropout follow the reference setup; embed_dim
    and length_bucket_dim default to small desk-scale values since embeddings
    are trained from scratch here.
    """

    embed_dim: int = 50
    lstm_hidden: int = 200
    ffn_hidden: int = 150
    length_bucket_dim: int = 20
    dropout: float = 0.2
    max_knowledge: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("embed_dim", "lstm_hidden", "ffn_hidden", "length_bucket_dim", "max_knowledge"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    @property
    def span_repr_dim(self) -> int:
        """dim(e): both LSTM boundary states, the attended head vector, a length embedding."""
        return 4 * self.lstm_hidden + self.embed_dim + self.length_bucket_dim

    def knowledge_dim(self, variant: Variant) -> int:
        """Width of the knowledge block o appended to span representations."""
        if variant is Variant.WITHOUT_KG:
            return 0
        if variant is Variant.WITHOUT_ATTENTION:
            return self.max_knowledge * self.embed_dim
        return self.embed_dim

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)
