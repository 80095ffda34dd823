"""Shared fixtures: tiny model configs, hand-built documents, synthetic bundles."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from kgcoref.corpus import Document, PronounInstance, Span, classify_pronoun
from kgcoref.kg import KnowledgeGraph, KnowledgeTriplet, KnowledgeSource
from kgcoref.neural import ModelConfig, ModelParameters, Variant, build_vocab
from kgcoref.synth import bundle_graph, write_domain

DATA_DIR = Path(__file__).parent / "data"


def make_pronoun(doc_tokens_flat: list[str], position: int,
                 golds: list[tuple[int, int]]) -> PronounInstance:
    """Pronoun instance at a flat token position with inclusive gold pairs."""
    ptype = classify_pronoun(doc_tokens_flat[position])
    return PronounInstance(
        pronoun_span=Span(position, position),
        pronoun_type=ptype,
        gold_antecedents=frozenset(Span(a, b) for a, b in golds),
    )


def two_sentence_doc() -> Document:
    """'the engineer fixed the pump . it hummed' with gold = the pump."""
    sents = [["the", "engineer", "fixed", "the", "pump", "."], ["it", "hummed", "."]]
    flat = [t for s in sents for t in s]
    pron = make_pronoun(flat, 6, [(3, 4)])
    return Document("doc-two", sents, [pron], gold_mentions=[Span(0, 1), Span(3, 4)])


def toy_graph() -> KnowledgeGraph:
    return KnowledgeGraph([
        KnowledgeTriplet(("pump",), "IsA", ("machine",), 3.0, KnowledgeSource.OMCS),
        KnowledgeTriplet(("pump",), "plurality", ("singular",), 1.0, KnowledgeSource.PLURALITY),
        KnowledgeTriplet(("engineer",), "AG", ("neutral",), 1.0, KnowledgeSource.AG),
        KnowledgeTriplet(("it",), "plurality", ("singular",), 1.0, KnowledgeSource.PLURALITY),
    ])


@pytest.fixture(scope="session")
def tiny_config() -> ModelConfig:
    return ModelConfig(embed_dim=5, lstm_hidden=4, ffn_hidden=4,
                       length_bucket_dim=3, dropout=0.0, max_knowledge=3, seed=0)


@pytest.fixture()
def doc() -> Document:
    return two_sentence_doc()


@pytest.fixture()
def graph() -> KnowledgeGraph:
    return toy_graph()


@pytest.fixture(scope="session")
def tiny_params(tiny_config) -> ModelParameters:
    docs = [two_sentence_doc()]
    vocab = build_vocab(docs, toy_graph())
    return ModelParameters.initialize(tiny_config, vocab, Variant.COMPLETE)


def params_for(config: ModelConfig, variant: Variant,
               docs: list[Document] | None = None,
               graph: KnowledgeGraph | None = None,
               seed_shift: int = 0) -> ModelParameters:
    docs = docs if docs is not None else [two_sentence_doc()]
    graph = graph if graph is not None else toy_graph()
    vocab = build_vocab(docs, graph)
    if seed_shift:
        config = ModelConfig(**{**config.to_dict(), "seed": config.seed + seed_shift})
    return ModelParameters.initialize(config, vocab, variant)


@pytest.fixture(scope="session")
def small_bundle(tmp_path_factory) -> dict:
    """A small written domain: corpora on disk plus the merged knowledge graph."""
    root = tmp_path_factory.mktemp("bundle") / "mini"
    paths = write_domain(root, "mini", {"train": 12, "dev": 6, "test": 6},
                         seed=5, knowledge_dependence=0.5,
                         n_entities=30, vocab_size=60, n_distractors=1)
    graph = bundle_graph(root)
    return {"dir": root, "paths": paths, "graph": graph}


def perturb(params: ModelParameters, scale: float = 0.05, seed: int = 0) -> None:
    """Add seeded noise to every trainable value; keeps tests off init symmetry."""
    rng = np.random.default_rng(seed)
    flat = params.flat()
    params.set_flat(flat + rng.normal(0.0, scale, size=flat.shape))
