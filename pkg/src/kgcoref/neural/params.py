"""Parameter container: seeded initialization, flat views, and checkpoint files.

All trainable arrays live in one ordered dict. The flat view concatenates them
in declaration order, excluding the reserved out-of-vocabulary embedding row,
which is pinned at zero. Checkpoints store a JSON header line (config, variant,
vocabulary, array shapes, format version) followed by the raw arrays as
little-endian 32-bit floats in header order.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..corpus import Document
from ..kg import KnowledgeGraph
from .config import ModelConfig, N_LENGTH_BUCKETS, Variant

log = logging.getLogger(__name__)

OOV_TOKEN = "<unk>"
OOV_ID = 0

CHECKPOINT_FORMAT = "kwc"
CHECKPOINT_VERSION = 1
CHECKPOINT_SUFFIX = ".kwc"

_STORAGE_DTYPE = np.dtype("<f4")


class CheckpointError(ValueError):
    """A checkpoint file is missing, truncated, or from an unknown format."""


def build_vocab(
    documents: Iterable[Document],
    graph: KnowledgeGraph | None = None,
    extra_tokens: Iterable[str] = (),
) -> list[str]:
    """Sorted lowercase vocabulary over corpus tokens and triplet tail words.

    Index 0 is the reserved out-of-vocabulary entry whose embedding stays zero.
    """
    words: set[str] = set()
    for doc in documents:
        for tok in doc.all_tokens():
            words.add(tok.lower())
    if graph is not None:
        for triplet in graph.triplets:
            for tok in triplet.tail:
                words.add(tok.lower())
    for tok in extra_tokens:
        words.add(tok.lower())
    words.discard(OOV_TOKEN)
    return [OOV_TOKEN] + sorted(words)


def _ffn_specs(prefix: str, in_dim: int, hidden: int) -> list[tuple[str, tuple[int, ...], str]]:
    return [
        (f"{prefix}_w1", (in_dim, hidden), "uniform"),
        (f"{prefix}_b1", (hidden,), "zeros"),
        (f"{prefix}_w2", (hidden, hidden), "uniform"),
        (f"{prefix}_b2", (hidden,), "zeros"),
        (f"{prefix}_w3", (hidden, 1), "uniform"),
        (f"{prefix}_b3", (1,), "zeros"),
    ]


def _array_specs(config: ModelConfig, variant: Variant, vocab_size: int) -> list[tuple[str, tuple[int, ...], str]]:
    de = config.embed_dim
    h = config.lstm_hidden
    e_dim = config.span_repr_dim
    o_dim = config.knowledge_dim(variant)
    specs: list[tuple[str, tuple[int, ...], str]] = [
        ("word_embeddings", (vocab_size, de), "embedding"),
        ("lstm_fwd_wx", (de, 4 * h), "uniform"),
        ("lstm_fwd_wh", (h, 4 * h), "uniform"),
        ("lstm_fwd_b", (4 * h,), "lstm_bias"),
        ("lstm_bwd_wx", (de, 4 * h), "uniform"),
        ("lstm_bwd_wh", (h, 4 * h), "uniform"),
        ("lstm_bwd_b", (4 * h,), "lstm_bias"),
        ("length_buckets", (N_LENGTH_BUCKETS, config.length_bucket_dim), "embedding"),
    ]
    specs += _ffn_specs("nn_alpha", 2 * h, config.ffn_hidden)
    if variant is Variant.COMPLETE:
        specs += _ffn_specs("nn_beta", 2 * e_dim + de, config.ffn_hidden)
    specs += _ffn_specs("nn_m", e_dim + o_dim, config.ffn_hidden)
    specs += _ffn_specs("nn_c", 3 * (e_dim + o_dim), config.ffn_hidden)
    return specs


class ModelParameters:
    """All trainable arrays plus the vocabulary and variant they were built for."""

    __slots__ = ("config", "variant", "vocab", "arrays", "metadata", "_word_ids", "_flat_slices")

    def __init__(
        self,
        config: ModelConfig,
        variant: Variant,
        vocab: Sequence[str],
        arrays: dict[str, np.ndarray],
        metadata: dict | None = None,
    ) -> None:
        if not vocab or vocab[0] != OOV_TOKEN:
            raise ValueError(f"vocab must start with the reserved {OOV_TOKEN!r} entry")
        self.config = config
        self.variant = variant
        self.vocab = list(vocab)
        self.arrays = arrays
        self.metadata = dict(metadata or {})
        self._word_ids = {w: i for i, w in enumerate(self.vocab)}
        expected = _array_specs(config, variant, len(self.vocab))
        if [name for name, _, _ in expected] != list(arrays):
            raise ValueError("parameter arrays do not match the expected layout")
        for name, shape, _ in expected:
            if arrays[name].shape != shape:
                raise ValueError(f"array {name} has shape {arrays[name].shape}, expected {shape}")
        slices: dict[str, tuple[int, int]] = {}
        at = 0
        for name in arrays:
            size = self._trainable_size(name)
            slices[name] = (at, at + size)
            at += size
        self._flat_slices = slices

    @classmethod
    def initialize(
        cls,
        config: ModelConfig,
        vocab: Sequence[str],
        variant: Variant = Variant.COMPLETE,
        metadata: dict | None = None,
    ) -> "ModelParameters":
        """Seeded init: uniform weights scaled by fan-in, zero biases, forget bias 1."""
        rng = np.random.default_rng(config.seed)
        arrays: dict[str, np.ndarray] = {}
        for name, shape, kind in _array_specs(config, variant, len(vocab)):
            if kind == "zeros":
                arr = np.zeros(shape)
            elif kind == "lstm_bias":
                arr = np.zeros(shape)
                h = shape[0] // 4
                arr[h : 2 * h] = 1.0
            else:
                fan_in = shape[1] if kind == "embedding" else shape[0]
                bound = 1.0 / np.sqrt(fan_in)
                arr = rng.uniform(-bound, bound, size=shape)
                if name == "word_embeddings":
                    arr[OOV_ID] = 0.0
            arrays[name] = arr
        return cls(config, variant, vocab, arrays, metadata)

    def _trainable_size(self, name: str) -> int:
        arr = self.arrays[name]
        if name == "word_embeddings":
            return (arr.shape[0] - 1) * arr.shape[1]
        return arr.size

    @property
    def n_params(self) -> int:
        return sum(self._trainable_size(name) for name in self.arrays)

    def flat(self) -> np.ndarray:
        """Copy of all trainable values in declaration order (OOV row excluded)."""
        parts = []
        for name, arr in self.arrays.items():
            parts.append(arr[1:].ravel() if name == "word_embeddings" else arr.ravel())
        return np.concatenate(parts)

    def set_flat(self, values: np.ndarray) -> None:
        if values.shape != (self.n_params,):
            raise ValueError(f"flat vector has shape {values.shape}, expected ({self.n_params},)")
        for name, arr in self.arrays.items():
            lo, hi = self._flat_slices[name]
            chunk = values[lo:hi]
            if name == "word_embeddings":
                arr[1:] = chunk.reshape(arr.shape[0] - 1, arr.shape[1])
            else:
                arr[...] = chunk.reshape(arr.shape)

    def flatten_grads(self, grads: dict[str, np.ndarray | None]) -> np.ndarray:
        parts = []
        for name, arr in self.arrays.items():
            g = grads.get(name)
            if g is None:
                g = np.zeros_like(arr)
            parts.append(g[1:].ravel() if name == "word_embeddings" else g.ravel())
        return np.concatenate(parts)

    def block_of_flat_index(self, index: int) -> str:
        for name, (lo, hi) in self._flat_slices.items():
            if lo <= index < hi:
                return name
        raise IndexError(f"flat index {index} out of range")

    def token_id(self, token: str) -> int:
        return self._word_ids.get(token.lower(), OOV_ID)

    def token_ids(self, tokens: Iterable[str]) -> np.ndarray:
        return np.array([self.token_id(t) for t in tokens], dtype=np.intp)

    def copy(self) -> "ModelParameters":
        return ModelParameters(
            self.config,
            self.variant,
            self.vocab,
            {name: arr.copy() for name, arr in self.arrays.items()},
            dict(self.metadata),
        )

    def quantize_to_storage(self) -> None:
        """Snap values to checkpoint precision so saving is an exact round trip."""
        for arr in self.arrays.values():
            arr[...] = arr.astype(_STORAGE_DTYPE).astype(np.float64)


def save_checkpoint(params: ModelParameters, path: str | Path) -> None:
    """Write a checkpoint: one JSON header line, then float32 arrays in order."""
    path = Path(path)
    header = {
        "format": CHECKPOINT_FORMAT,
        "format_version": CHECKPOINT_VERSION,
        "config": params.config.to_dict(),
        "variant": params.variant.value,
        "vocab": params.vocab,
        "arrays": [{"name": name, "shape": list(arr.shape)} for name, arr in params.arrays.items()],
        "metadata": params.metadata,
    }
    with path.open("wb") as handle:
        handle.write(json.dumps(header).encode("utf-8") + b"\n")
        for arr in params.arrays.values():
            handle.write(np.ascontiguousarray(arr, dtype=_STORAGE_DTYPE).tobytes())


def load_checkpoint(path: str | Path) -> ModelParameters:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint {path} does not exist")
    with path.open("rb") as handle:
        header_line = handle.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: unreadable checkpoint header") from exc
        if header.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
        if header.get("format_version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"{path}: unsupported format version {header.get('format_version')}")
        config = ModelConfig.from_dict(header["config"])
        variant = Variant(header["variant"])
        vocab = header["vocab"]
        arrays: dict[str, np.ndarray] = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            n_bytes = int(np.prod(shape)) * _STORAGE_DTYPE.itemsize
            raw = handle.read(n_bytes)
            if len(raw) != n_bytes:
                raise CheckpointError(f"{path}: truncated array {spec['name']}")
            arrays[spec["name"]] = np.frombuffer(raw, dtype=_STORAGE_DTYPE).reshape(shape).astype(np.float64)
        if handle.read(1):
            raise CheckpointError(f"{path}: trailing bytes after declared arrays")
    try:
        return ModelParameters(config, variant, vocab, arrays, header.get("metadata"))
    except ValueError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
