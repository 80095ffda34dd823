"""Knowledge triplets: loading, merging, retrieval, and triplet mining.

A triplet is (head phrase, relation, tail phrase) with a confidence score and a
source tag. Retrieval matches a span's surface text against triplet heads by
exact string match after whitespace and case normalization. Two miners build
triplets from raw inputs: selectional-preference extraction over dependency
edges, and plurality/animacy-gender markup conversion.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

DEFAULT_MIN_CONFIDENCE = 2.0
DEFAULT_SP_PROB_THRESHOLD = 0.1
DEFAULT_SP_COUNT_THRESHOLD = 10

PLURALITY_RELATION = "plurality"
AG_RELATION = "AG"


class KnowledgeSource(Enum):
    OMCS = "omcs"
    MEDICAL = "medical"
    PLURALITY = "plurality"
    AG = "ag"
    SP_NSUBJ = "sp_nsubj"
    SP_DOBJ = "sp_dobj"
    OTHER = "other"


class Plurality(Enum):
    SINGULAR = "singular"
    PLURAL = "plural"
    UNKNOWN = "unknown"


class AnimacyGender(Enum):
    MALE = "male"
    FEMALE = "female"
    NEUTRAL = "neutral"
    INANIMATE = "inanimate"
    UNKNOWN = "unknown"


class TripletParseError(ValueError):
    """A triplet, markup, or dependency-edge row could not be parsed."""


def normalize_phrase(tokens: Sequence[str] | str) -> str:
    """Lowercase and collapse whitespace so surface variants match."""
    if isinstance(tokens, str):
        tokens = tokens.split()
    return " ".join(t.lower() for t in " ".join(tokens).split())


def _phrase_tuple(value: Sequence[str] | str, what: str) -> tuple[str, ...]:
    parts = tuple(value.split()) if isinstance(value, str) else tuple(value)
    if not parts or any(not p for p in parts):
        raise ValueError(f"{what} phrase must hold at least one non-empty token")
    return parts


@dataclass(frozen=True)
class KnowledgeTriplet:
    head: tuple[str, ...]
    relation: str
    tail: tuple[str, ...]
    confidence: float = 1.0
    source: KnowledgeSource = KnowledgeSource.OTHER

    def __post_init__(self) -> None:
        object.__setattr__(self, "head", _phrase_tuple(self.head, "head"))
        object.__setattr__(self, "tail", _phrase_tuple(self.tail, "tail"))
        if not self.relation:
            raise ValueError("relation must be non-empty")
        conf = float(self.confidence)
        if not conf == conf or conf in (float("inf"), float("-inf")):
            raise ValueError("confidence must be finite")
        object.__setattr__(self, "confidence", conf)

    def dedup_key(self) -> tuple:
        return (self.head, self.relation, self.tail, self.source)


@dataclass(frozen=True)
class DepEdge:
    """One aggregated dependency observation: predicate governs argument via relation."""

    predicate: str
    argument: str
    relation: str
    count: int = 1

    def __post_init__(self) -> None:
        if self.relation not in ("nsubj", "dobj"):
            raise ValueError(f"unsupported dependency relation {self.relation!r}")
        if not self.predicate or not self.argument:
            raise ValueError("predicate and argument must be non-empty")
        if self.count < 1:
            raise ValueError("count must be positive")


@dataclass(frozen=True)
class Markup:
    phrase: tuple[str, ...]
    plurality: Plurality
    ag: AnimacyGender


class KnowledgeGraph:
    """An immutable triplet collection indexed by normalized head phrase."""

    __slots__ = ("triplets", "_index")

    def __init__(self, triplets: Iterable[KnowledgeTriplet] = ()) -> None:
        self.triplets: tuple[KnowledgeTriplet, ...] = tuple(triplets)
        index: dict[str, list[int]] = {}
        for i, trip in enumerate(self.triplets):
            index.setdefault(normalize_phrase(trip.head), []).append(i)
        self._index = index

    def __len__(self) -> int:
        return len(self.triplets)

    def retrieve(self, span_text: Sequence[str] | str) -> list[KnowledgeTriplet]:
        """All triplets whose head matches the span text exactly, insertion order."""
        key = normalize_phrase(span_text)
        return [self.triplets[i] for i in self._index.get(key, ())]

    def heads(self) -> list[str]:
        return list(self._index.keys())

    def without_sources(self, drop: Iterable[KnowledgeSource]) -> "KnowledgeGraph":
        dropped = set(drop)
        kept = [t for t in self.triplets if t.source not in dropped]
        if dropped and not kept and self.triplets:
            log.warning("all %d triplets removed by source filter %s", len(self.triplets),
                        sorted(s.value for s in dropped))
        return KnowledgeGraph(kept)

    def sources(self) -> set[KnowledgeSource]:
        return {t.source for t in self.triplets}


_RELATION_SOURCES = {
    "plurality": KnowledgeSource.PLURALITY,
    "ag": KnowledgeSource.AG,
    "nsubj": KnowledgeSource.SP_NSUBJ,
    "dobj": KnowledgeSource.SP_DOBJ,
}

_SOURCE_NAMES = {s.value: s for s in KnowledgeSource}


def _infer_source(relation: str) -> KnowledgeSource:
    return _RELATION_SOURCES.get(relation.lower(), KnowledgeSource.OTHER)


def load_triplets(
    path: str | Path,
    min_confidence: float = 0.0,
    source: KnowledgeSource | None = None,
) -> KnowledgeGraph:
    """Load a triplet TSV: head, relation, tail, optional confidence, optional source.

    Rows with confidence <= min_confidence are dropped. When source is None it
    is taken from the optional fifth column, else inferred from the relation
    name, falling back to OTHER.
    """
    path = Path(path)
    kept: list[KnowledgeTriplet] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 3 or len(fields) > 5:
                raise TripletParseError(f"{path}: row {lineno}: expected 3 to 5 fields, got {len(fields)}")
            head, relation, tail = fields[0], fields[1], fields[2]
            confidence = 1.0
            if len(fields) >= 4 and fields[3] != "":
                try:
                    confidence = float(fields[3])
                except ValueError as exc:
                    raise TripletParseError(f"{path}: row {lineno}: bad confidence {fields[3]!r}") from exc
            row_source = source
            if len(fields) == 5 and fields[4] != "":
                name = fields[4].strip().lower()
                if name not in _SOURCE_NAMES:
                    raise TripletParseError(f"{path}: row {lineno}: unknown source {fields[4]!r}")
                row_source = _SOURCE_NAMES[name]
            if row_source is None:
                row_source = _infer_source(relation)
            try:
                triplet = KnowledgeTriplet(head, relation, tail, confidence, row_source)
            except ValueError as exc:
                raise TripletParseError(f"{path}: row {lineno}: {exc}") from exc
            if triplet.confidence > min_confidence:
                kept.append(triplet)
    return KnowledgeGraph(kept)


def save_triplets(graph: KnowledgeGraph | Iterable[KnowledgeTriplet], path: str | Path,
                  with_source: bool = True) -> None:
    triplets = graph.triplets if isinstance(graph, KnowledgeGraph) else tuple(graph)
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for t in triplets:
            fields = [" ".join(t.head), t.relation, " ".join(t.tail), repr(t.confidence)]
            if with_source:
                fields.append(t.source.value)
            handle.write("\t".join(fields) + "\n")


def merge_graphs(graphs: Iterable[KnowledgeGraph]) -> KnowledgeGraph:
    """Concatenate graphs, deduplicating on (head, relation, tail, source).

    The first occurrence keeps its position; confidence becomes the maximum
    seen for the key. Merging is associative and idempotent.
    """
    merged: list[KnowledgeTriplet] = []
    by_key: dict[tuple, int] = {}
    for graph in graphs:
        for t in graph.triplets:
            key = t.dedup_key()
            at = by_key.get(key)
            if at is None:
                by_key[key] = len(merged)
                merged.append(t)
            elif t.confidence > merged[at].confidence:
                merged[at] = KnowledgeTriplet(t.head, t.relation, t.tail, t.confidence, t.source)
    return KnowledgeGraph(merged)


def load_dep_edges(path: str | Path) -> list[DepEdge]:
    """Load a dependency-edge TSV: predicate, argument, relation, optional count."""
    path = Path(path)
    edges: list[DepEdge] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) not in (3, 4):
                raise TripletParseError(f"{path}: row {lineno}: expected 3 or 4 fields, got {len(fields)}")
            count = 1
            if len(fields) == 4 and fields[3] != "":
                try:
                    count = int(fields[3])
                except ValueError as exc:
                    raise TripletParseError(f"{path}: row {lineno}: bad count {fields[3]!r}") from exc
            try:
                edges.append(DepEdge(fields[0], fields[1], fields[2], count))
            except ValueError as exc:
                raise TripletParseError(f"{path}: row {lineno}: {exc}") from exc
    return edges


def extract_sp(
    edges: Iterable[DepEdge],
    prob_threshold: float = DEFAULT_SP_PROB_THRESHOLD,
    count_threshold: int = DEFAULT_SP_COUNT_THRESHOLD,
) -> list[KnowledgeTriplet]:
    """Mine selectional-preference triplets from aggregated dependency edges.

    For each relation r and predicate p, the conditional probability of an
    argument a is count(p, a) / count(p). A triplet (argument, r, predicate) is
    emitted when both the probability exceeds prob_threshold and the raw count
    exceeds count_threshold, strictly. Output is sorted and independent of the
    input stream order and of how counts are split across duplicate edges.
    """
    pair_counts: Counter[tuple[str, str, str]] = Counter()
    pred_counts: Counter[tuple[str, str]] = Counter()
    for edge in edges:
        pred = normalize_phrase(edge.predicate)
        arg = normalize_phrase(edge.argument)
        pair_counts[(edge.relation, pred, arg)] += edge.count
        pred_counts[(edge.relation, pred)] += edge.count
    out: list[KnowledgeTriplet] = []
    for (relation, pred, arg), count in pair_counts.items():
        prob = count / pred_counts[(relation, pred)]
        if prob > prob_threshold and count > count_threshold:
            source = KnowledgeSource.SP_NSUBJ if relation == "nsubj" else KnowledgeSource.SP_DOBJ
            out.append(KnowledgeTriplet(arg, relation, pred, 1.0, source))
    out.sort(key=lambda t: (t.relation, t.head, t.tail))
    return out


def load_markups(path: str | Path) -> list[Markup]:
    """Load a markup TSV: phrase, plurality, animacy-gender."""
    path = Path(path)
    rows: list[Markup] = []
    plu = {p.value: p for p in Plurality}
    ags = {a.value: a for a in AnimacyGender}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise TripletParseError(f"{path}: row {lineno}: expected 3 fields, got {len(fields)}")
            phrase, p_name, a_name = fields
            if p_name.lower() not in plu:
                raise TripletParseError(f"{path}: row {lineno}: unknown plurality {p_name!r}")
            if a_name.lower() not in ags:
                raise TripletParseError(f"{path}: row {lineno}: unknown animacy-gender {a_name!r}")
            try:
                rows.append(Markup(_phrase_tuple(phrase, "markup"), plu[p_name.lower()], ags[a_name.lower()]))
            except ValueError as exc:
                raise TripletParseError(f"{path}: row {lineno}: {exc}") from exc
    return rows


def gen_linguistic_triplets(markups: Iterable[Markup]) -> list[KnowledgeTriplet]:
    """Convert plurality/animacy-gender markups into triplets, skipping unknowns."""
    out: list[KnowledgeTriplet] = []
    for m in markups:
        if m.plurality is not Plurality.UNKNOWN:
            out.append(KnowledgeTriplet(m.phrase, PLURALITY_RELATION, (m.plurality.value,),
                                        1.0, KnowledgeSource.PLURALITY))
        if m.ag is not AnimacyGender.UNKNOWN:
            out.append(KnowledgeTriplet(m.phrase, AG_RELATION, (m.ag.value,),
                                        1.0, KnowledgeSource.AG))
    return out


# Closed pronoun attribute table; the AG column is unknown where a pronoun does
# not commit to an animacy or gender reading.
PRONOUN_ATTRIBUTES: dict[str, tuple[Plurality, AnimacyGender]] = {
    "she": (Plurality.SINGULAR, AnimacyGender.FEMALE),
    "her": (Plurality.SINGULAR, AnimacyGender.FEMALE),
    "hers": (Plurality.SINGULAR, AnimacyGender.FEMALE),
    "he": (Plurality.SINGULAR, AnimacyGender.MALE),
    "him": (Plurality.SINGULAR, AnimacyGender.MALE),
    "his": (Plurality.SINGULAR, AnimacyGender.MALE),
    "it": (Plurality.SINGULAR, AnimacyGender.INANIMATE),
    "its": (Plurality.SINGULAR, AnimacyGender.INANIMATE),
    "they": (Plurality.PLURAL, AnimacyGender.UNKNOWN),
    "them": (Plurality.PLURAL, AnimacyGender.UNKNOWN),
    "their": (Plurality.PLURAL, AnimacyGender.UNKNOWN),
    "theirs": (Plurality.PLURAL, AnimacyGender.UNKNOWN),
    "this": (Plurality.SINGULAR, AnimacyGender.UNKNOWN),
    "that": (Plurality.SINGULAR, AnimacyGender.UNKNOWN),
    "these": (Plurality.PLURAL, AnimacyGender.UNKNOWN),
    "those": (Plurality.PLURAL, AnimacyGender.UNKNOWN),
}


def pronoun_linguistic_triplets() -> list[KnowledgeTriplet]:
    """Static plurality/animacy-gender triplets for the closed pronoun lists."""
    markups = [Markup((word,), plurality, ag)
               for word, (plurality, ag) in sorted(PRONOUN_ATTRIBUTES.items())]
    return gen_linguistic_triplets(markups)


def pronoun_table_graph() -> KnowledgeGraph:
    return KnowledgeGraph(pronoun_linguistic_triplets())
