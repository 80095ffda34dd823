"""Deterministic synthetic corpora and knowledge files.

Documents are assembled from function-word templates around pseudoword
entities. Each domain owns a disjoint content vocabulary (its nouns, verbs,
categories, and distractor words are prefixed with the domain tag) while
determiners, template scaffolding, and pronouns are shared across domains.

In a knowledge-dependent document two candidate noun phrases occupy textually
symmetric slots of the same sentence and only a knowledge triplet separates
them: plurality agreement, animacy-gender agreement, or compatibility with a
predicate mined from dependency counts. The triplet-compatible candidate is
the gold antecedent, and which slot it occupies is an independent coin flip,
so surface position carries no signal. The remaining documents contain a
single candidate phrase (occasionally mentioned twice, giving two gold
antecedents) and need no knowledge to resolve.

The entity inventory is a pure function of (domain_tag, n_entities,
vocab_size) and ignores the document seed, so all splits of one domain share
one knowledge graph. Entities are partitioned into train/dev/test pools;
held-out entities never occur in training text, which makes their word
embeddings useless at evaluation time and forces resolution through the
knowledge path.
"""
from __future__ import annotations

import json
import re
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Document, PronounInstance, PronounType, Span, classify_pronoun, document_to_record
from .kg import (
    DEFAULT_MIN_CONFIDENCE,
    AnimacyGender,
    KnowledgeGraph,
    Plurality,
    extract_sp,
    gen_linguistic_triplets,
    load_dep_edges,
    load_markups,
    load_triplets,
    merge_graphs,
    pronoun_table_graph,
)

SPLITS = ("train", "dev", "test")

# two-candidate frames: identical context around both slots except order
TWO_NP_FRAMES = (
    "{A} and {B} arrived at the hall .",
    "{A} and {B} stood near the door .",
    "{A} and {B} waited by the gate .",
    "people saw {A} and {B} at the market .",
    "{A} and {B} appeared in the garden .",
    "the visitors found {A} and {B} inside .",
)

SINGLE_NP_FRAMES = (
    "{A} arrived at the hall early .",
    "{A} stood near the old door .",
    "{A} waited by the gate patiently .",
    "people saw {A} at the market .",
    "{A} appeared in the garden quietly .",
    "the visitors found {A} inside .",
)

FILLER_SENTENCES = (
    "time passed quietly .",
    "the morning went by .",
    "nothing else happened then .",
    "a light rain fell .",
)

PRONOUN_FRAMES = {
    "personal_subject": (
        "{P} looked happy today .",
        "{P} seemed calm then .",
        "{P} stayed outside for hours .",
        "{P} remained near the window .",
        "{P} appeared tired after the trip .",
    ),
    "personal_object": (
        "everyone praised {P} after dinner .",
        "the crowd watched {P} quietly .",
        "someone greeted {P} at noon .",
        "nobody noticed {P} before dusk .",
        "the guests admired {P} openly .",
    ),
    "possessive_det": (
        "{P} garden looked lovely .",
        "{P} voice sounded clear .",
        "{P} house stood nearby .",
        "{P} arrival surprised everyone .",
        "{P} shadow crossed the yard .",
    ),
    "possessive_standalone": (
        "the garden was {P} .",
        "the prize became {P} .",
        "the final choice remained {P} .",
        "the decision was {P} .",
        "the last word stayed {P} .",
    ),
    "demonstrative": (
        "{P} surprised everyone greatly .",
        "{P} pleased the visitors .",
        "{P} seemed unusual somehow .",
        "{P} caused much debate .",
        "{P} delighted the whole town .",
    ),
    # predicate-compatibility frames carry the gold entity's cue verb
    "sp_subject": (
        "{P} {V} near the river .",
        "{P} {V} during the night .",
        "{P} {V} without warning .",
        "{P} {V} again yesterday .",
        "{P} {V} before sunrise .",
    ),
    "sp_object": (
        "the keeper {V} {P} at dawn .",
        "the farmer {V} {P} twice .",
        "a stranger {V} {P} there .",
        "the owner {V} {P} gladly .",
        "the guard {V} {P} softly .",
    ),
}


@dataclass(frozen=True)
class PronounPlan:
    """How documents for one pronoun word are built."""

    frame_kinds: tuple[str, ...]         # non-predicate frame groups
    sp_kind: str | None                  # predicate frame group, if usable
    mechanisms: tuple[str, ...]          # ag | pl | pl_inv | sp
    plurality: Plurality                 # required gold plurality
    ag: AnimacyGender                    # required gold animacy-gender


_S = Plurality.SINGULAR
_P = Plurality.PLURAL
_ANY = AnimacyGender.UNKNOWN

# word order inside each type drives round-robin balance over words
PRONOUN_PLANS: dict[str, PronounPlan] = {
    "she": PronounPlan(("personal_subject",), None, ("ag",), _S, AnimacyGender.FEMALE),
    "her": PronounPlan(("personal_object",), None, ("ag",), _S, AnimacyGender.FEMALE),
    "he": PronounPlan(("personal_subject",), None, ("ag",), _S, AnimacyGender.MALE),
    "him": PronounPlan(("personal_object",), None, ("ag",), _S, AnimacyGender.MALE),
    "them": PronounPlan(("personal_object",), "sp_object", ("pl", "sp"), _P, _ANY),
    "they": PronounPlan(("personal_subject",), "sp_subject", ("pl", "sp"), _P, _ANY),
    "it": PronounPlan(("personal_subject",), None, ("ag",), _S, AnimacyGender.INANIMATE),
    "his": PronounPlan(("possessive_det", "possessive_standalone"), None, ("ag",), _S, AnimacyGender.MALE),
    "hers": PronounPlan(("possessive_standalone",), None, ("ag",), _S, AnimacyGender.FEMALE),
    "its": PronounPlan(("possessive_det",), None, ("ag",), _S, AnimacyGender.INANIMATE),
    "their": PronounPlan(("possessive_det",), None, ("pl",), _P, _ANY),
    "theirs": PronounPlan(("possessive_standalone",), None, ("pl",), _P, _ANY),
    "this": PronounPlan(("demonstrative",), "sp_subject", ("pl_inv", "sp"), _S, _ANY),
    "that": PronounPlan(("demonstrative",), "sp_subject", ("pl_inv", "sp"), _S, _ANY),
    "these": PronounPlan(("demonstrative",), "sp_subject", ("pl", "sp"), _P, _ANY),
    "those": PronounPlan(("demonstrative",), "sp_subject", ("pl", "sp"), _P, _ANY),
}

_TYPE_ORDER = (PronounType.THIRD_PERSONAL, PronounType.POSSESSIVE, PronounType.DEMONSTRATIVE)
_TYPE_WORDS = {
    PronounType.THIRD_PERSONAL: ("she", "her", "he", "him", "them", "they", "it"),
    PronounType.POSSESSIVE: ("his", "hers", "its", "their", "theirs"),
    PronounType.DEMONSTRATIVE: ("this", "that", "these", "those"),
}

_ATTRIBUTE_CYCLE = (
    (Plurality.SINGULAR, AnimacyGender.MALE),
    (Plurality.SINGULAR, AnimacyGender.FEMALE),
    (Plurality.SINGULAR, AnimacyGender.INANIMATE),
    (Plurality.PLURAL, AnimacyGender.MALE),
    (Plurality.PLURAL, AnimacyGender.FEMALE),
    (Plurality.PLURAL, AnimacyGender.INANIMATE),
)
# one full attribute cycle per row; 3 train : 1 dev : 1 test
_SPLIT_PATTERN = ("train", "train", "train", "dev", "test")

_N_CATEGORIES = 4
_N_DISTRACTOR_WORDS = 8

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


def _n_verbs(n_entities: int) -> int:
    # cap arguments per verb so mined P(argument | verb) clears the 0.1 cut
    return max(8, -(-n_entities // 6))


def required_vocab(n_entities: int) -> int:
    return n_entities + _n_verbs(n_entities) + _N_CATEGORIES + _N_DISTRACTOR_WORDS


def template_count(pronoun_type: PronounType) -> int:
    """Distinct (first-sentence, pronoun-sentence) template pairs for a type."""
    kinds: set[str] = set()
    for word in _TYPE_WORDS[pronoun_type]:
        plan = PRONOUN_PLANS[word]
        kinds.update(plan.frame_kinds)
        if plan.sp_kind:
            kinds.add(plan.sp_kind)
    second = sum(len(PRONOUN_FRAMES[k]) for k in kinds)
    return (len(TWO_NP_FRAMES) + len(SINGLE_NP_FRAMES)) * second


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic corpus split."""

    n_docs: int
    vocab_size: int = 72
    n_entities: int = 48
    seed: int = 0
    knowledge_dependence: float = 1.0
    domain_tag: str = "news"
    split: str = "train"
    n_distractors: int = 0

    def __post_init__(self) -> None:
        if self.n_docs < 1:
            raise ValueError(f"n_docs must be >= 1, got {self.n_docs}")
        if not 0.0 <= self.knowledge_dependence <= 1.0:
            raise ValueError(f"knowledge_dependence must lie in [0, 1], got {self.knowledge_dependence}")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.n_entities < 30 or self.n_entities % 6:
            raise ValueError("n_entities must be a multiple of 6 and >= 30 so every "
                             "split pool covers all plurality/animacy-gender classes")
        if self.vocab_size < required_vocab(self.n_entities):
            raise ValueError(f"vocab_size must be >= {required_vocab(self.n_entities)} "
                             f"for {self.n_entities} entities, got {self.vocab_size}")
        if self.n_distractors < 0:
            raise ValueError("n_distractors must be >= 0")
        if not re.fullmatch(r"[a-z][a-z0-9]*", self.domain_tag):
            raise ValueError(f"domain_tag must be lowercase alphanumeric, got {self.domain_tag!r}")

    def to_dict(self) -> dict:
        return {
            "n_docs": self.n_docs,
            "vocab_size": self.vocab_size,
            "n_entities": self.n_entities,
            "seed": self.seed,
            "knowledge_dependence": self.knowledge_dependence,
            "domain_tag": self.domain_tag,
            "split": self.split,
            "n_distractors": self.n_distractors,
        }


@dataclass(frozen=True)
class SynthEntity:
    noun: str
    plurality: Plurality
    ag: AnimacyGender
    cue_verb: str
    category: str
    split: str

    @property
    def surface(self) -> tuple[str, str]:
        return ("the", self.noun)


@dataclass(frozen=True)
class DomainInventory:
    domain_tag: str
    entities: tuple[SynthEntity, ...]
    verbs: tuple[str, ...]
    categories: tuple[str, ...]
    distractor_words: tuple[str, ...]

    def pool(self, split: str) -> tuple[SynthEntity, ...]:
        if split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
        return tuple(e for e in self.entities if e.split == split)


def _pseudowords(rng: np.random.Generator, count: int, prefix: str) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < count:
        syllables = int(rng.integers(2, 4))
        stem = "".join(
            _CONSONANTS[int(rng.integers(len(_CONSONANTS)))] + _VOWELS[int(rng.integers(len(_VOWELS)))]
            for _ in range(syllables)
        )
        if stem in seen:
            continue
        seen.add(stem)
        words.append(f"{prefix}_{stem}")
    return words


def build_inventory(domain_tag: str, n_entities: int = 48, vocab_size: int = 72) -> DomainInventory:
    """Entity inventory shared by every split and seed of one domain."""
    if vocab_size < required_vocab(n_entities):
        raise ValueError(f"vocab_size must be >= {required_vocab(n_entities)}")
    rng = np.random.default_rng(zlib.crc32(f"{domain_tag}/{n_entities}/{vocab_size}".encode()))
    n_verbs = _n_verbs(n_entities)
    words = _pseudowords(rng, vocab_size, domain_tag)
    nouns = words[:n_entities]
    verbs = tuple(words[n_entities:n_entities + n_verbs])
    categories = tuple(words[n_entities + n_verbs:n_entities + n_verbs + _N_CATEGORIES])
    distractors = tuple(
        words[n_entities + n_verbs + _N_CATEGORIES:n_entities + n_verbs + _N_CATEGORIES + _N_DISTRACTOR_WORDS]
    )
    entities = []
    for i in range(n_entities):
        plurality, ag = _ATTRIBUTE_CYCLE[i % 6]
        # pseudowords end in a vowel, so the plural suffix cannot collide
        noun = nouns[i] + ("s" if plurality is Plurality.PLURAL else "")
        entities.append(SynthEntity(
            noun=noun,
            plurality=plurality,
            ag=ag,
            cue_verb=verbs[(i % 6 + i // 6) % n_verbs],
            category=categories[i % _N_CATEGORIES],
            split=_SPLIT_PATTERN[(i // 6) % len(_SPLIT_PATTERN)],
        ))
    return DomainInventory(domain_tag, tuple(entities), verbs, categories, distractors)


def _instantiate(frame: str, slots: dict[str, Sequence[str]]) -> tuple[list[str], dict[str, tuple[int, int]]]:
    """Expand placeholders; returns tokens and inclusive slot positions."""
    tokens: list[str] = []
    positions: dict[str, tuple[int, int]] = {}
    for word in frame.split():
        if word in slots:
            sub = list(slots[word])
            positions[word] = (len(tokens), len(tokens) + len(sub) - 1)
            tokens.extend(sub)
        else:
            tokens.append(word)
    return tokens, positions


def _pick(rng: np.random.Generator, items: Sequence):
    if not items:
        raise RuntimeError("entity pool cannot satisfy a document plan; "
                           "n_entities is too small for this split")
    return items[int(rng.integers(len(items)))]


def _compatible(entity: SynthEntity, plurality: Plurality, ag: AnimacyGender) -> bool:
    if plurality is not Plurality.UNKNOWN and entity.plurality is not plurality:
        return False
    if ag is not AnimacyGender.UNKNOWN and entity.ag is not ag:
        return False
    return True


def _pick_pair(rng: np.random.Generator, pool: Sequence[SynthEntity], plan: PronounPlan,
               mechanism: str) -> tuple[SynthEntity, SynthEntity]:
    """Gold and confounder entities; exactly one is triplet-compatible."""
    if mechanism == "ag":
        gold = _pick(rng, [e for e in pool if _compatible(e, plan.plurality, plan.ag)])
        partner = _pick(rng, [e for e in pool
                              if e.plurality is plan.plurality and e.ag is not plan.ag])
    elif mechanism == "pl":
        gold = _pick(rng, [e for e in pool if e.plurality is Plurality.PLURAL])
        partner = _pick(rng, [e for e in pool if e.plurality is Plurality.SINGULAR])
    elif mechanism == "pl_inv":
        gold = _pick(rng, [e for e in pool if e.plurality is Plurality.SINGULAR])
        partner = _pick(rng, [e for e in pool if e.plurality is Plurality.PLURAL])
    elif mechanism == "sp":
        same = [e for e in pool if e.plurality is plan.plurality]
        gold = _pick(rng, same)
        partner = _pick(rng, [e for e in same if e.cue_verb != gold.cue_verb])
    else:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    return gold, partner


def _pronoun_sentence(rng: np.random.Generator, plan: PronounPlan, word: str,
                      mechanism: str | None, verb: str) -> tuple[list[str], int]:
    """Build the pronoun-bearing sentence; returns tokens and the pronoun offset."""
    if mechanism == "sp":
        kind = plan.sp_kind
    else:
        kinds = plan.frame_kinds + ((plan.sp_kind,) if plan.sp_kind else ())
        kind = kinds[int(rng.integers(len(kinds)))]
    frame = _pick(rng, PRONOUN_FRAMES[kind])
    tokens, positions = _instantiate(frame, {"{P}": [word], "{V}": [verb]})
    return tokens, positions["{P}"][0]


def _assemble(doc_id: str, sentences: list[list[str]], pronoun_sent: int, pronoun_tok: int,
              antecedents: list[Span], mentions: list[Span]) -> Document:
    offsets = [0]
    for sent in sentences:
        offsets.append(offsets[-1] + len(sent))
    pos = offsets[pronoun_sent] + pronoun_tok
    pronoun = PronounInstance(Span(pos, pos), classify_pronoun(sentences[pronoun_sent][pronoun_tok]),
                              frozenset(antecedents))
    return Document(doc_id, sentences, [pronoun], sorted(set(mentions)))


def _kd_document(rng: np.random.Generator, pool: Sequence[SynthEntity], word: str,
                 doc_id: str) -> Document:
    plan = PRONOUN_PLANS[word]
    mechanism = plan.mechanisms[int(rng.integers(len(plan.mechanisms)))]
    gold, partner = _pick_pair(rng, pool, plan, mechanism)
    gold_first = bool(rng.integers(2))
    first, second = (gold, partner) if gold_first else (partner, gold)
    frame = _pick(rng, TWO_NP_FRAMES)
    s1, positions = _instantiate(frame, {"{A}": first.surface, "{B}": second.surface})
    gold_pos = positions["{A}" if gold_first else "{B}"]
    other_pos = positions["{B}" if gold_first else "{A}"]
    s2, pron_tok = _pronoun_sentence(rng, plan, word, mechanism, gold.cue_verb)

    sentences: list[list[str]] = []
    if rng.random() < 0.2:
        sentences.append(list(_pick(rng, FILLER_SENTENCES).split()))
    s1_at = len(sentences)
    sentences.append(s1)
    if rng.random() < 0.2:
        sentences.append(list(_pick(rng, FILLER_SENTENCES).split()))
    sentences.append(s2)

    base = sum(len(s) for s in sentences[:s1_at])
    gold_span = Span(base + gold_pos[0], base + gold_pos[1])
    other_span = Span(base + other_pos[0], base + other_pos[1])
    return _assemble(doc_id, sentences, len(sentences) - 1, pron_tok,
                     [gold_span], [gold_span, other_span])


def _plain_document(rng: np.random.Generator, pool: Sequence[SynthEntity], word: str,
                    doc_id: str) -> Document:
    plan = PRONOUN_PLANS[word]
    entity = _pick(rng, [e for e in pool if _compatible(e, plan.plurality, plan.ag)])
    repeated = rng.random() < 0.3
    mechanism = None
    if plan.sp_kind and rng.random() < 0.5:
        mechanism = "sp"  # frame carries the entity's own verb, still single-candidate
    s2, pron_tok = _pronoun_sentence(rng, plan, word, mechanism, entity.cue_verb)

    mentions: list[Span] = []
    sentences: list[list[str]] = []
    if repeated:
        # two mentions fill the window, so no room for filler sentences
        picks = rng.choice(len(SINGLE_NP_FRAMES), size=2, replace=False)
        for k in picks:
            base = sum(len(s) for s in sentences)
            tokens, positions = _instantiate(SINGLE_NP_FRAMES[int(k)], {"{A}": entity.surface})
            a0, a1 = positions["{A}"]
            mentions.append(Span(base + a0, base + a1))
            sentences.append(tokens)
    else:
        if rng.random() < 0.2:
            sentences.append(list(_pick(rng, FILLER_SENTENCES).split()))
        base = sum(len(s) for s in sentences)
        tokens, positions = _instantiate(_pick(rng, SINGLE_NP_FRAMES), {"{A}": entity.surface})
        a0, a1 = positions["{A}"]
        mentions.append(Span(base + a0, base + a1))
        sentences.append(tokens)
        if rng.random() < 0.2:
            sentences.append(list(_pick(rng, FILLER_SENTENCES).split()))
    sentences.append(s2)
    return _assemble(doc_id, sentences, len(sentences) - 1, pron_tok, mentions, mentions)


def generate_documents(spec: SynthSpec) -> list[Document]:
    """Documents only; generate() adds the knowledge files."""
    inventory = build_inventory(spec.domain_tag, spec.n_entities, spec.vocab_size)
    pool = inventory.pool(spec.split)
    rng = np.random.default_rng(spec.seed)
    kd_flags = np.zeros(spec.n_docs, dtype=bool)
    kd_flags[:int(round(spec.knowledge_dependence * spec.n_docs))] = True
    rng.shuffle(kd_flags)
    counters = {t: 0 for t in _TYPE_ORDER}
    docs: list[Document] = []
    for i in range(spec.n_docs):
        ptype = _TYPE_ORDER[i % len(_TYPE_ORDER)]
        words = _TYPE_WORDS[ptype]
        word = words[counters[ptype] % len(words)]
        counters[ptype] += 1
        doc_id = f"{spec.domain_tag}-{spec.split}-{i:04d}"
        if kd_flags[i]:
            docs.append(_kd_document(rng, pool, word, doc_id))
        else:
            docs.append(_plain_document(rng, pool, word, doc_id))
    return docs


def _knowledge_files(inventory: DomainInventory, n_distractors: int) -> tuple[str, str, str]:
    """OMCS-style triplet TSV, markup TSV, dependency-edge TSV for a domain."""
    rng = np.random.default_rng(
        zlib.crc32(f"{inventory.domain_tag}/knowledge/{n_distractors}".encode())
    )
    triplet_rows: list[str] = []
    markup_rows: list[str] = []
    edge_rows: list[str] = []
    for i, e in enumerate(inventory.entities):
        head = " ".join(e.surface)
        rows = [f"{head}\tIsA\t{e.category}\t3.0\tomcs"]
        count = n_distractors + (int(rng.integers(0, 4)) if n_distractors else 0)
        # distinct tails: graph merging deduplicates, which must not eat the quota
        count = min(count, len(inventory.distractor_words))
        for j in rng.permutation(len(inventory.distractor_words))[:count]:
            tail = inventory.distractor_words[int(j)]
            rows.append(f"{head}\tRelatedTo\t{tail}\t3.0\tomcs")
        order = rng.permutation(len(rows))  # informative triplet position varies per entity
        triplet_rows.extend(rows[int(j)] for j in order)
        if i % 4 == 0:
            triplet_rows.append(f"{head}\tIsA\t{inventory.categories[(i + 1) % _N_CATEGORIES]}\t1.5\tomcs")
        if i % 7 == 0:
            triplet_rows.append(f"{head}\tRelatedTo\t{inventory.distractor_words[0]}\t2.0\tomcs")

        markup_rows.append(f"{head}\t{e.plurality.value}\t{e.ag.value}")

        for relation in ("nsubj", "dobj"):
            if i % 5 == 0:
                edge_rows.append(f"{e.cue_verb}\t{head}\t{relation}\t30")
                edge_rows.append(f"{e.cue_verb}\t{head}\t{relation}\t20")
            else:
                edge_rows.append(f"{e.cue_verb}\t{head}\t{relation}\t50")
    noise_args = ("the hall", "the door", "the gate", "the market", "the garden",
                  "the river", "the window", "the yard", "the town", "the keeper")
    for verb in inventory.verbs:
        for relation in ("nsubj", "dobj"):
            for arg in noise_args:
                edge_rows.append(f"{verb}\t{arg}\t{relation}\t3")
    return ("\n".join(triplet_rows) + "\n", "\n".join(markup_rows) + "\n",
            "\n".join(edge_rows) + "\n")


@dataclass(frozen=True)
class SynthBundle:
    spec: SynthSpec
    corpus_jsonl: str
    triplets_tsv: str
    markups_tsv: str
    dep_edges_tsv: str


def generate(spec: SynthSpec) -> SynthBundle:
    """Corpus JSONL plus the domain's triplet, markup, and dependency TSVs.

    Byte-identical for equal specs. The knowledge files depend only on the
    domain inventory and n_distractors, never on seed or split.
    """
    docs = generate_documents(spec)
    corpus = "".join(json.dumps(document_to_record(d), sort_keys=True) + "\n" for d in docs)
    inventory = build_inventory(spec.domain_tag, spec.n_entities, spec.vocab_size)
    triplets, markups, edges = _knowledge_files(inventory, spec.n_distractors)
    return SynthBundle(spec, corpus, triplets, markups, edges)


def write_bundle(spec: SynthSpec, out_dir: str | Path) -> dict[str, Path]:
    """Write {split}.jsonl plus the domain knowledge files into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = generate(spec)
    paths = {
        "corpus": out / f"{spec.split}.jsonl",
        "triplets": out / "triplets.tsv",
        "markups": out / "markups.tsv",
        "dep_edges": out / "dep_edges.tsv",
    }
    paths["corpus"].write_text(bundle.corpus_jsonl, encoding="utf-8")
    paths["triplets"].write_text(bundle.triplets_tsv, encoding="utf-8")
    paths["markups"].write_text(bundle.markups_tsv, encoding="utf-8")
    paths["dep_edges"].write_text(bundle.dep_edges_tsv, encoding="utf-8")
    return paths


def write_domain(
    out_dir: str | Path,
    domain_tag: str,
    n_docs: dict[str, int],
    seed: int = 0,
    knowledge_dependence: float = 1.0,
    n_entities: int = 48,
    vocab_size: int = 72,
    n_distractors: int = 0,
) -> dict[str, Path]:
    """Write corpora for several splits of one domain plus its knowledge files.

    Split seeds are offset from the base seed so the splits differ textually;
    entity pools already differ by construction.
    """
    paths: dict[str, Path] = {}
    for offset, split in enumerate(SPLITS):
        if n_docs.get(split, 0) <= 0:
            continue
        spec = SynthSpec(
            n_docs=n_docs[split], vocab_size=vocab_size, n_entities=n_entities,
            seed=seed + offset, knowledge_dependence=knowledge_dependence,
            domain_tag=domain_tag, split=split, n_distractors=n_distractors,
        )
        written = write_bundle(spec, out_dir)
        paths[split] = written["corpus"]
        paths.update({k: v for k, v in written.items() if k != "corpus"})
    if not paths:
        raise ValueError("no split has a positive document count")
    return paths


def bundle_graph(directory: str | Path) -> KnowledgeGraph:
    """Merged knowledge graph of a written bundle directory.

    Applies the standard pipeline: confidence-filtered triplet loading,
    markup-derived linguistic triplets, mined selectional preferences, and the
    closed pronoun attribute table.
    """
    d = Path(directory)
    omcs = load_triplets(d / "triplets.tsv", min_confidence=DEFAULT_MIN_CONFIDENCE)
    ling = KnowledgeGraph(gen_linguistic_triplets(load_markups(d / "markups.tsv")))
    sp = KnowledgeGraph(extract_sp(load_dep_edges(d / "dep_edges.tsv")))
    return merge_graphs([omcs, ling, sp, pronoun_table_graph()])
