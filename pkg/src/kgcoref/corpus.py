"""Tokenized documents, pronoun typing, and antecedent-candidate enumeration.

Documents are plain token sequences partitioned into sentences. All spans are
inclusive token-index ranges at document level and never cross a sentence
boundary. Candidate antecedents for a pronoun are drawn from the pronoun's
sentence plus at most the two preceding sentences, restricted to tokens
strictly before the pronoun.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

DEFAULT_MAX_SPAN_WIDTH = 10
# how many sentences before the pronoun's own sentence stay in scope
CANDIDATE_WINDOW_SENTENCES = 2

THIRD_PERSONAL_PRONOUNS = frozenset({"she", "her", "he", "him", "them", "they", "it"})
POSSESSIVE_PRONOUNS = frozenset({"his", "hers", "its", "their", "theirs"})
DEMONSTRATIVE_PRONOUNS = frozenset({"this", "that", "these", "those"})


class PronounType(Enum):
    THIRD_PERSONAL = "third_personal"
    POSSESSIVE = "possessive"
    DEMONSTRATIVE = "demonstrative"
    NOT_A_PRONOUN = "not_a_pronoun"


def classify_pronoun(token_text: str) -> PronounType:
    """Case-insensitive membership test against the three closed pronoun lists."""
    word = token_text.lower()
    if word in THIRD_PERSONAL_PRONOUNS:
        return PronounType.THIRD_PERSONAL
    if word in POSSESSIVE_PRONOUNS:
        return PronounType.POSSESSIVE
    if word in DEMONSTRATIVE_PRONOUNS:
        return PronounType.DEMONSTRATIVE
    return PronounType.NOT_A_PRONOUN


class CorpusParseError(ValueError):
    """A corpus file line could not be parsed; the message names the line number."""


class CorpusValidationError(ValueError):
    """A structurally parseable document violated an invariant; names the doc_id."""


class PronounLookupError(LookupError):
    """The pronoun instance does not belong to the given document."""


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive [start, end] token range, document-level indices."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"bad span [{self.start}, {self.end}]")

    @property
    def width(self) -> int:
        return self.end - self.start + 1

    def pair(self) -> list[int]:
        return [self.start, self.end]


@dataclass(frozen=True)
class Token:
    text: str
    sentence_index: int
    token_index: int


@dataclass(frozen=True)
class PronounInstance:
    """A pronoun occurrence together with its gold antecedent spans (may be empty)."""

    pronoun_span: Span
    pronoun_type: PronounType
    gold_antecedents: frozenset[Span]

    def sorted_gold(self) -> list[Span]:
        return sorted(self.gold_antecedents)


class Document:
    """A tokenized document with sentence boundaries and pronoun annotations."""

    __slots__ = ("doc_id", "sentences", "pronouns", "gold_mentions", "_offsets", "_n_tokens")

    def __init__(
        self,
        doc_id: str,
        sentences: Iterable[Iterable[str]],
        pronouns: Iterable[PronounInstance] = (),
        gold_mentions: Iterable[Span] | None = None,
        validate: bool = True,
    ) -> None:
        self.doc_id = doc_id
        self.sentences: tuple[tuple[str, ...], ...] = tuple(tuple(s) for s in sentences)
        self.pronouns: tuple[PronounInstance, ...] = tuple(pronouns)
        self.gold_mentions: tuple[Span, ...] | None = (
            None if gold_mentions is None else tuple(gold_mentions)
        )
        offsets = [0]
        for sent in self.sentences:
            offsets.append(offsets[-1] + len(sent))
        self._offsets: tuple[int, ...] = tuple(offsets)
        self._n_tokens: int = offsets[-1]
        if validate:
            self.validate()

    @property
    def n_tokens(self) -> int:
        return self._n_tokens

    def sentence_bounds(self, sentence_index: int) -> tuple[int, int]:
        """Return the [start, limit) document-level token range of a sentence."""
        return self._offsets[sentence_index], self._offsets[sentence_index + 1]

    def sentence_index_of(self, token_index: int) -> int:
        if not 0 <= token_index < self._n_tokens:
            raise IndexError(f"token index {token_index} out of range in {self.doc_id}")
        # sentences are short; linear scan is fine
        for si in range(len(self.sentences)):
            if token_index < self._offsets[si + 1]:
                return si
        raise AssertionError("unreachable")

    def token_text(self, token_index: int) -> str:
        si = self.sentence_index_of(token_index)
        return self.sentences[si][token_index - self._offsets[si]]

    def span_tokens(self, span: Span) -> list[str]:
        return [self.token_text(i) for i in range(span.start, span.end + 1)]

    def tokens(self) -> Iterator[Token]:
        idx = 0
        for si, sent in enumerate(self.sentences):
            for text in sent:
                yield Token(text, si, idx)
                idx += 1

    def all_tokens(self) -> list[str]:
        return [t for sent in self.sentences for t in sent]

    def _check_span(self, span: Span, label: str) -> None:
        if span.end >= self._n_tokens:
            raise CorpusValidationError(
                f"doc {self.doc_id}: {label} {span.pair()} exceeds document length {self._n_tokens}"
            )
        if self.sentence_index_of(span.start) != self.sentence_index_of(span.end):
            raise CorpusValidationError(
                f"doc {self.doc_id}: {label} {span.pair()} crosses a sentence boundary"
            )

    def validate(self) -> None:
        if not isinstance(self.doc_id, str) or not self.doc_id:
            raise CorpusValidationError(f"doc {self.doc_id!r}: doc_id must be a non-empty string")
        if not self.sentences:
            raise CorpusValidationError(f"doc {self.doc_id}: no sentences")
        for si, sent in enumerate(self.sentences):
            if not sent:
                raise CorpusValidationError(f"doc {self.doc_id}: sentence {si} is empty")
            for tok in sent:
                if not isinstance(tok, str) or not tok:
                    raise CorpusValidationError(
                        f"doc {self.doc_id}: sentence {si} holds a non-string or empty token"
                    )
        for pron in self.pronouns:
            span = pron.pronoun_span
            if span.width != 1:
                raise CorpusValidationError(
                    f"doc {self.doc_id}: pronoun span {span.pair()} must cover exactly one token"
                )
            self._check_span(span, "pronoun span")
            observed = classify_pronoun(self.token_text(span.start))
            if observed is PronounType.NOT_A_PRONOUN:
                raise CorpusValidationError(
                    f"doc {self.doc_id}: token {self.token_text(span.start)!r} at {span.start} "
                    f"is not in any pronoun list"
                )
            if observed is not pron.pronoun_type:
                raise CorpusValidationError(
                    f"doc {self.doc_id}: pronoun at {span.start} typed {pron.pronoun_type.value}, "
                    f"expected {observed.value}"
                )
            first, limit = candidate_window(self, pron)
            for gold in pron.gold_antecedents:
                self._check_span(gold, "gold antecedent")
                if gold.start < first or gold.end >= limit:
                    raise CorpusValidationError(
                        f"doc {self.doc_id}: gold antecedent {gold.pair()} lies outside the "
                        f"candidate window of the pronoun at token {span.start}"
                    )
        if self.gold_mentions is not None:
            for mention in self.gold_mentions:
                self._check_span(mention, "gold mention")


def candidate_window(doc: Document, pronoun: PronounInstance) -> tuple[int, int]:
    """Token range [first, limit) eligible to contain antecedents of the pronoun.

    Covers the pronoun's sentence plus at most CANDIDATE_WINDOW_SENTENCES
    preceding ones; the limit excludes the pronoun token itself.
    """
    p = pronoun.pronoun_span.start
    si = doc.sentence_index_of(p)
    first, _ = doc.sentence_bounds(max(0, si - CANDIDATE_WINDOW_SENTENCES))
    return first, p


def enumerate_candidates(
    doc: Document,
    pronoun: PronounInstance,
    max_width: int = DEFAULT_MAX_SPAN_WIDTH,
    gold_mode: bool = False,
) -> list[Span]:
    """List candidate antecedent spans for a pronoun, in (start, end) order.

    In gold_mode the document's gold mention list is used instead of exhaustive
    span enumeration, filtered to the same candidate window.
    """
    if pronoun not in doc.pronouns:
        raise PronounLookupError(f"pronoun at {pronoun.pronoun_span.pair()} not in doc {doc.doc_id}")
    if max_width < 1:
        raise ValueError("max_width must be at least 1")
    first, limit = candidate_window(doc, pronoun)
    if gold_mode:
        if doc.gold_mentions is None:
            raise ValueError(f"doc {doc.doc_id}: gold_mode requested but gold_mentions is absent")
        keep = {m for m in doc.gold_mentions if m.start >= first and m.end < limit}
        return sorted(keep)
    out: list[Span] = []
    p_sent = doc.sentence_index_of(pronoun.pronoun_span.start)
    for si in range(max(0, p_sent - CANDIDATE_WINDOW_SENTENCES), p_sent + 1):
        s0, s1 = doc.sentence_bounds(si)
        for start in range(s0, min(s1, limit)):
            hi = min(start + max_width, s1, limit)
            for end in range(start, hi):
                out.append(Span(start, end))
    return out


def _document_from_record(record: dict) -> Document:
    doc_id = record["doc_id"]
    sentences = record["sentences"]
    if not isinstance(sentences, list) or not all(isinstance(s, list) for s in sentences):
        raise CorpusParseError("'sentences' must be a list of token lists")
    offsets = [0]
    for sent in sentences:
        offsets.append(offsets[-1] + len(sent))

    def build_span(pair: object, label: str) -> Span:
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair)):
            raise CorpusParseError(f"{label} must be a [start, end] integer pair")
        try:
            return Span(pair[0], pair[1])
        except ValueError as exc:
            raise CorpusValidationError(f"doc {doc_id}: {exc}") from exc

    pronouns = []
    for prec in record.get("pronouns", []):
        sent_idx = prec["sent"]
        tok_idx = prec["tok"]
        if not (isinstance(sent_idx, int) and 0 <= sent_idx < len(sentences)):
            raise CorpusValidationError(f"doc {doc_id}: pronoun sentence index {sent_idx} out of range")
        if not (isinstance(tok_idx, int) and 0 <= tok_idx < len(sentences[sent_idx])):
            raise CorpusValidationError(
                f"doc {doc_id}: pronoun token index {tok_idx} out of range in sentence {sent_idx}"
            )
        doc_tok = offsets[sent_idx] + tok_idx
        ptype = classify_pronoun(sentences[sent_idx][tok_idx])
        if ptype is PronounType.NOT_A_PRONOUN:
            raise CorpusValidationError(
                f"doc {doc_id}: token {sentences[sent_idx][tok_idx]!r} is not in any pronoun list"
            )
        golds = frozenset(build_span(g, "antecedent") for g in prec.get("antecedents", []))
        pronouns.append(PronounInstance(Span(doc_tok, doc_tok), ptype, golds))

    gold_mentions = None
    if "gold_mentions" in record and record["gold_mentions"] is not None:
        gold_mentions = [build_span(m, "gold mention") for m in record["gold_mentions"]]
    return Document(doc_id, sentences, pronouns, gold_mentions)


def load_corpus(path: str | Path, format: str = "jsonl") -> list[Document]:
    """Load a corpus file; one JSON document record per line.

    Unparseable lines raise CorpusParseError naming the line number; documents
    violating span or pronoun invariants raise CorpusValidationError naming the
    doc_id. Document order follows file order and doc_ids must be unique.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format {format!r}")
    path = Path(path)
    docs: list[Document] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise CorpusParseError(f"{path}: line {lineno}: record is not a JSON object")
            try:
                doc = _document_from_record(record)
            except CorpusValidationError:
                raise
            except CorpusParseError as exc:
                raise CorpusParseError(f"{path}: line {lineno}: {exc}") from exc
            except (KeyError, TypeError) as exc:
                raise CorpusParseError(f"{path}: line {lineno}: malformed record ({exc})") from exc
            if doc.doc_id in seen:
                raise CorpusValidationError(f"doc {doc.doc_id}: duplicate doc_id")
            seen.add(doc.doc_id)
            docs.append(doc)
    return docs


def document_to_record(doc: Document) -> dict:
    """Inverse of the JSONL record layout used by load_corpus."""
    pronouns = []
    for pron in doc.pronouns:
        si = doc.sentence_index_of(pron.pronoun_span.start)
        s0, _ = doc.sentence_bounds(si)
        pronouns.append(
            {
                "sent": si,
                "tok": pron.pronoun_span.start - s0,
                "antecedents": [g.pair() for g in pron.sorted_gold()],
            }
        )
    record: dict = {
        "doc_id": doc.doc_id,
        "sentences": [list(s) for s in doc.sentences],
        "pronouns": pronouns,
    }
    if doc.gold_mentions is not None:
        record["gold_mentions"] = [m.pair() for m in sorted(set(doc.gold_mentions))]
    return record


def corpus_statistics(docs: Iterable[Document]) -> dict:
    """Counts used as a loader sanity check: pronouns per type, mean gold-set size."""
    per_type = {t: 0 for t in PronounType if t is not PronounType.NOT_A_PRONOUN}
    n_docs = 0
    gold_total = 0
    n_pronouns = 0
    for doc in docs:
        n_docs += 1
        for pron in doc.pronouns:
            per_type[pron.pronoun_type] += 1
            n_pronouns += 1
            gold_total += len(pron.gold_antecedents)
    return {
        "documents": n_docs,
        "pronouns": n_pronouns,
        "per_type": {t.value: c for t, c in per_type.items()},
        "mean_gold_size": (gold_total / n_pronouns) if n_pronouns else 0.0,
    }
