"""Training loop: per-instance Adam updates over the marginal log-likelihood loss.

Instances are (document, pronoun) pairs; each visit computes the loss and its
exact gradients, clips the global gradient norm, and applies one bias-corrected
Adam step. Epoch order is a seeded shuffle. Pronouns with no gold antecedents,
or whose golds fall outside the enumerated candidate set, are skipped with a
logged warning. With a dev corpus the best-scoring epoch's parameters are kept;
otherwise the final epoch wins. Returned parameters are snapped to checkpoint
storage precision so that saving and reloading changes nothing.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import DEFAULT_MAX_SPAN_WIDTH, Document, PronounInstance, enumerate_candidates
from .kg import KnowledgeGraph
from .neural import (
    InstanceFeatures,
    ModelConfig,
    ModelParameters,
    Variant,
    build_vocab,
    loss_from_features,
    prepare_instance,
)

log = logging.getLogger(__name__)


class TrainingSetupError(ValueError):
    """The training corpus yields no usable instances."""


class AdamStepError(ValueError):
    """A gradient was non-finite; the message names the parameter block."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    max_epochs: int = 100
    grad_clip: float = 5.0
    shuffle_seed: int = 0
    select_on_dev: bool = True
    dev_threshold: float = 1e-2
    early_stop_dev_f1: float | None = None
    max_span_width: int = DEFAULT_MAX_SPAN_WIDTH

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("adam betas must lie in [0, 1)")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class TrainState:
    """Adam accumulators over the flat parameter view."""

    params: ModelParameters
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def fresh(cls, params: ModelParameters) -> "TrainState":
        n = params.n_params
        return cls(params=params, m=np.zeros(n), v=np.zeros(n))


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_loss: float
    dev_f1: float
    wall_seconds: float
    skipped: int


def adam_step(state: TrainState, grad: np.ndarray, cfg: TrainConfig) -> TrainState:
    """One bias-corrected Adam update applied through the flat parameter view."""
    if grad.shape != state.m.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match {state.m.shape}")
    if not np.all(np.isfinite(grad)):
        bad = int(np.flatnonzero(~np.isfinite(grad))[0])
        raise AdamStepError(
            f"non-finite gradient in block {state.params.block_of_flat_index(bad)!r}"
        )
    state.step += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    state.m = b1 * state.m + (1.0 - b1) * grad
    state.v = b2 * state.v + (1.0 - b2) * grad * grad
    m_hat = state.m / (1.0 - b1 ** state.step)
    v_hat = state.v / (1.0 - b2 ** state.step)
    flat = state.params.flat()
    flat -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)
    state.params.set_flat(flat)
    return state


def clip_gradient(grad: np.ndarray, max_norm: float) -> np.ndarray:
    if max_norm <= 0:
        return grad
    norm = float(np.linalg.norm(grad))
    if norm > max_norm:
        return grad * (max_norm / norm)
    return grad


def collect_instances(
    params: ModelParameters,
    corpus: Iterable[Document],
    graph: KnowledgeGraph | None,
    max_span_width: int = DEFAULT_MAX_SPAN_WIDTH,
) -> tuple[list[tuple[Document, PronounInstance, InstanceFeatures]], int]:
    """Featurize trainable pronoun instances; returns (instances, skipped count)."""
    instances = []
    skipped = 0
    for doc in corpus:
        for pronoun in doc.pronouns:
            if not pronoun.gold_antecedents:
                log.warning("doc %s: pronoun at token %d has no gold antecedents, skipping",
                            doc.doc_id, pronoun.pronoun_span.start)
                skipped += 1
                continue
            candidates = enumerate_candidates(doc, pronoun, max_width=max_span_width)
            if not candidates:
                log.warning("doc %s: pronoun at token %d has no candidates, skipping",
                            doc.doc_id, pronoun.pronoun_span.start)
                skipped += 1
                continue
            feats = prepare_instance(params, doc, pronoun, candidates, graph)
            if feats.missing_gold:
                log.warning("doc %s: gold antecedents %s not in candidate set, skipping",
                            doc.doc_id, [s.pair() for s in feats.missing_gold])
                skipped += 1
                continue
            instances.append((doc, pronoun, feats))
    return instances, skipped


def train(
    corpus_train: Sequence[Document],
    corpus_dev: Sequence[Document] | None = None,
    graph: KnowledgeGraph | None = None,
    model_cfg: ModelConfig | None = None,
    train_cfg: TrainConfig | None = None,
    variant: Variant = Variant.COMPLETE,
    vocab: Sequence[str] | None = None,
    metadata: dict | None = None,
) -> tuple[ModelParameters, list[EpochStats]]:
    """Train a scorer from scratch; returns (parameters, per-epoch statistics)."""
    from .evaluation import evaluate  # deferred to avoid an import cycle

    model_cfg = model_cfg or ModelConfig()
    train_cfg = train_cfg or TrainConfig()
    if vocab is None:
        vocab = build_vocab(corpus_train, graph)
    params = ModelParameters.initialize(model_cfg, vocab, variant, metadata)
    params.metadata.setdefault("threshold", train_cfg.dev_threshold)

    instances, skipped = collect_instances(params, corpus_train, graph, train_cfg.max_span_width)
    if not instances:
        raise TrainingSetupError("no trainable pronoun instances in the corpus")
    log.info("training on %d instances (%d skipped), variant=%s, %d parameters",
             len(instances), skipped, variant.value, params.n_params)

    state = TrainState.fresh(params)
    shuffle_rng = np.random.default_rng(train_cfg.shuffle_seed)
    dropout_rng = np.random.default_rng(model_cfg.seed + 1)
    stats: list[EpochStats] = []
    best: tuple[float, ModelParameters] | None = None
    for epoch in range(1, train_cfg.max_epochs + 1):
        started = time.perf_counter()
        order = shuffle_rng.permutation(len(instances))
        total = 0.0
        for idx in order:
            _, _, feats = instances[idx]
            value, grad = loss_from_features(params, model_cfg, feats,
                                             train_mode=True, rng=dropout_rng)
            grad = clip_gradient(grad, train_cfg.grad_clip)
            adam_step(state, grad, train_cfg)
            total += value
        mean_loss = total / len(instances)
        dev_f1 = math.nan
        if corpus_dev is not None:
            dev_f1 = evaluate(params, corpus_dev, graph,
                              threshold=train_cfg.dev_threshold,
                              max_span_width=train_cfg.max_span_width).overall.f1
            if train_cfg.select_on_dev and (best is None or dev_f1 > best[0]):
                best = (dev_f1, params.copy())
        stats.append(EpochStats(epoch, mean_loss, dev_f1, time.perf_counter() - started, skipped))
        log.info("epoch %d: mean_loss=%.4f dev_f1=%s", epoch, mean_loss,
                 "n/a" if math.isnan(dev_f1) else f"{dev_f1:.4f}")
        if (train_cfg.early_stop_dev_f1 is not None and not math.isnan(dev_f1)
                and dev_f1 >= train_cfg.early_stop_dev_f1):
            log.info("dev F1 %.4f reached early-stop target %.4f at epoch %d",
                     dev_f1, train_cfg.early_stop_dev_f1, epoch)
            break

    final = best[1] if (best is not None and train_cfg.select_on_dev) else params
    final.quantize_to_storage()
    return final, stats


def write_training_log(stats: Sequence[EpochStats], path: str | Path) -> None:
    """CSV log: epoch, mean_loss, dev_f1, wall_seconds."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["epoch", "mean_loss", "dev_f1", "wall_seconds"])
        for row in stats:
            dev = "" if math.isnan(row.dev_f1) else f"{row.dev_f1:.6f}"
            writer.writerow([row.epoch, f"{row.mean_loss:.6f}", dev, f"{row.wall_seconds:.3f}"])
