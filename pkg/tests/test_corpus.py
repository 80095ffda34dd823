"""Document model, candidate enumeration against a brute-force oracle, JSONL IO."""
from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from kgcoref.corpus import (
    CANDIDATE_WINDOW_SENTENCES,
    CorpusParseError,
    CorpusValidationError,
    Document,
    PronounInstance,
    PronounLookupError,
    PronounType,
    Span,
    candidate_window,
    classify_pronoun,
    corpus_statistics,
    document_to_record,
    enumerate_candidates,
    load_corpus,
)

from conftest import DATA_DIR, make_pronoun, two_sentence_doc

ALL_PRONOUNS = {
    PronounType.THIRD_PERSONAL: ["she", "her", "he", "him", "them", "they", "it"],
    PronounType.POSSESSIVE: ["his", "hers", "its", "their", "theirs"],
    PronounType.DEMONSTRATIVE: ["this", "that", "these", "those"],
}


class TestSpan:
    def test_width_is_inclusive(self):
        assert Span(3, 3).width == 1
        assert Span(2, 5).width == 4

    def test_pair(self):
        assert Span(1, 4).pair() == [1, 4]

    @pytest.mark.parametrize("start,end", [(-1, 0), (3, 2), (-2, -1)])
    def test_rejects_bad_ranges(self, start, end):
        with pytest.raises(ValueError):
            Span(start, end)

    def test_ordering_is_lexicographic(self):
        assert sorted([Span(2, 2), Span(0, 3), Span(0, 1)]) == [Span(0, 1), Span(0, 3), Span(2, 2)]


class TestClassifyPronoun:
    @pytest.mark.parametrize("ptype,words", list(ALL_PRONOUNS.items()))
    def test_closed_lists(self, ptype, words):
        for word in words:
            assert classify_pronoun(word) is ptype
            assert classify_pronoun(word.upper()) is ptype

    @pytest.mark.parametrize("word", ["cat", "the", "i", "you", "we", "me", "itself", ""])
    def test_everything_else(self, word):
        assert classify_pronoun(word) is PronounType.NOT_A_PRONOUN

    def test_lists_cover_sixteen_words(self):
        words = {w for ws in ALL_PRONOUNS.values() for w in ws}
        assert len(words) == 16


class TestDocument:
    def test_token_accounting(self, doc):
        assert doc.n_tokens == 9
        assert doc.sentence_bounds(0) == (0, 6)
        assert doc.sentence_bounds(1) == (6, 9)
        assert doc.sentence_index_of(5) == 0
        assert doc.sentence_index_of(6) == 1
        assert doc.token_text(6) == "it"
        assert doc.span_tokens(Span(3, 4)) == ["the", "pump"]
        assert doc.all_tokens()[0] == "the"

    def test_tokens_iterator_matches_flat_view(self, doc):
        toks = list(doc.tokens())
        assert [t.text for t in toks] == doc.all_tokens()
        assert [t.token_index for t in toks] == list(range(doc.n_tokens))
        assert toks[6].sentence_index == 1

    def test_sentence_index_out_of_range(self, doc):
        with pytest.raises(IndexError):
            doc.sentence_index_of(9)

    def test_rejects_empty_document(self):
        with pytest.raises(CorpusValidationError):
            Document("d", [])

    def test_rejects_empty_token(self):
        with pytest.raises(CorpusValidationError):
            Document("d", [["the", ""]])

    def test_rejects_empty_doc_id(self):
        with pytest.raises(CorpusValidationError):
            Document("", [["it", "ran"]])

    def test_rejects_wide_pronoun_span(self):
        pron = PronounInstance(Span(0, 1), PronounType.THIRD_PERSONAL, frozenset())
        with pytest.raises(CorpusValidationError, match="exactly one token"):
            Document("d", [["it", "ran"]], [pron])

    def test_rejects_pronoun_type_mismatch(self):
        pron = PronounInstance(Span(2, 2), PronounType.POSSESSIVE, frozenset())
        with pytest.raises(CorpusValidationError, match="typed possessive"):
            Document("d", [["the", "cat", "it"]], [pron])

    def test_rejects_gold_at_or_after_pronoun(self):
        sents = [["the", "cat", "saw", "it", "run"]]
        pron = make_pronoun([t for s in sents for t in s], 3, [(4, 4)])
        with pytest.raises(CorpusValidationError, match="candidate window"):
            Document("d", sents, [pron])

    def test_rejects_gold_crossing_sentences(self):
        sents = [["the", "cat", "sat"], ["it", "ran"]]
        pron = PronounInstance(Span(3, 3), PronounType.THIRD_PERSONAL,
                               frozenset([Span(2, 3)]))
        with pytest.raises(CorpusValidationError, match="crosses a sentence boundary"):
            Document("d", sents, [pron])

    def test_rejects_out_of_range_gold_mention(self):
        with pytest.raises(CorpusValidationError, match="gold mention"):
            Document("d", [["it", "ran"]], gold_mentions=[Span(0, 5)])


def oracle_candidates(doc: Document, pronoun: PronounInstance, max_width: int) -> list[Span]:
    """Filter every conceivable span by the documented membership rules."""
    first, limit = candidate_window(doc, pronoun)
    out = []
    for start in range(first, limit):
        for end in range(start, limit):
            if end - start + 1 > max_width:
                continue
            if doc.sentence_index_of(start) != doc.sentence_index_of(end):
                continue
            out.append(Span(start, end))
    return out


def synthetic_docs() -> st.SearchStrategy[Document]:
    word = st.sampled_from(["cat", "dog", "saw", "ran", "the", "a", "house", "it"])
    sentence = st.lists(word, min_size=1, max_size=6)
    return st.lists(sentence, min_size=1, max_size=5).map(
        lambda sents: Document("hyp", sents, validate=False)
    )


class TestEnumerateCandidates:
    def test_window_spans_three_sentences(self):
        sents = [["a"], ["b"], ["c"], ["it", "ran"]]
        flat = [t for s in sents for t in s]
        pron = make_pronoun(flat, 3, [(1, 1)])
        doc = Document("d", sents, [pron])
        first, limit = candidate_window(doc, pron)
        assert (first, limit) == (3 - CANDIDATE_WINDOW_SENTENCES, 3)
        assert enumerate_candidates(doc, pron) == [Span(1, 1), Span(2, 2)]

    def test_limit_excludes_pronoun_and_its_right(self):
        doc = two_sentence_doc()
        cands = enumerate_candidates(doc, doc.pronouns[0])
        assert all(c.end < 6 for c in cands)
        assert Span(3, 4) in cands

    def test_matches_oracle_on_fixture(self, doc):
        pron = doc.pronouns[0]
        for width in (1, 2, 10):
            assert enumerate_candidates(doc, pron, max_width=width) == \
                oracle_candidates(doc, pron, width)

    @settings(max_examples=60, deadline=None)
    @given(doc=synthetic_docs(), width=st.integers(min_value=1, max_value=12),
           pos=st.integers(min_value=0, max_value=30))
    def test_matches_oracle_everywhere(self, doc, width, pos):
        if doc.n_tokens < 2:
            return
        position = 1 + pos % (doc.n_tokens - 1)
        sents = [list(s) for s in doc.sentences]
        si = doc.sentence_index_of(position)
        s0, _ = doc.sentence_bounds(si)
        sents[si][position - s0] = "it"
        pron = PronounInstance(Span(position, position), PronounType.THIRD_PERSONAL, frozenset())
        patched = Document("hyp", sents, [pron])
        got = enumerate_candidates(patched, pron, max_width=width)
        assert got == oracle_candidates(patched, pron, width)
        assert len(set(got)) == len(got)

    def test_gold_mode_uses_mention_list(self, doc):
        pron = doc.pronouns[0]
        assert enumerate_candidates(doc, pron, gold_mode=True) == [Span(0, 1), Span(3, 4)]

    def test_gold_mode_filters_to_window(self):
        sents = [["a"], ["b"], ["c"], ["it", "ran"]]
        flat = [t for s in sents for t in s]
        pron = make_pronoun(flat, 3, [(1, 1)])
        doc = Document("d", sents, [pron], gold_mentions=[Span(0, 0), Span(1, 1), Span(4, 4)])
        assert enumerate_candidates(doc, pron, gold_mode=True) == [Span(1, 1)]

    def test_gold_mode_requires_mentions(self):
        sents = [["the", "cat", "sat"], ["it", "ran"]]
        flat = [t for s in sents for t in s]
        pron = make_pronoun(flat, 3, [(0, 1)])
        doc = Document("d", sents, [pron])
        with pytest.raises(ValueError, match="gold_mentions"):
            enumerate_candidates(doc, pron, gold_mode=True)

    def test_unknown_pronoun_rejected(self, doc):
        stranger = PronounInstance(Span(0, 0), PronounType.THIRD_PERSONAL, frozenset())
        with pytest.raises(PronounLookupError):
            enumerate_candidates(doc, stranger)

    def test_bad_width_rejected(self, doc):
        with pytest.raises(ValueError):
            enumerate_candidates(doc, doc.pronouns[0], max_width=0)


class TestCorpusIO:
    def test_record_round_trip(self, tmp_path, doc):
        record = document_to_record(doc)
        path = tmp_path / "roundtrip.jsonl"
        path.write_text(json.dumps(record) + "\n", encoding="utf-8")
        loaded = load_corpus(path)
        assert len(loaded) == 1
        again = loaded[0]
        assert again.doc_id == doc.doc_id
        assert again.sentences == doc.sentences
        assert again.pronouns == doc.pronouns
        assert again.gold_mentions == doc.gold_mentions
        assert document_to_record(again) == record

    def test_record_layout(self, doc):
        record = document_to_record(doc)
        assert record["pronouns"] == [{"sent": 1, "tok": 0, "antecedents": [[3, 4]]}]
        assert record["gold_mentions"] == [[0, 1], [3, 4]]

    def test_blank_lines_are_skipped(self, tmp_path, doc):
        path = tmp_path / "gaps.jsonl"
        body = json.dumps(document_to_record(doc))
        path.write_text("\n" + body + "\n\n", encoding="utf-8")
        assert len(load_corpus(path)) == 1

    def test_parse_error_names_line(self, tmp_path, doc):
        path = tmp_path / "broken.jsonl"
        body = json.dumps(document_to_record(doc))
        path.write_text(body + "\n{oops\n", encoding="utf-8")
        with pytest.raises(CorpusParseError, match="line 2"):
            load_corpus(path)

    def test_unsupported_format_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            load_corpus(tmp_path / "x.conll", format="conll")

    def test_statistics(self, doc):
        stats = corpus_statistics([doc])
        assert stats["documents"] == 1
        assert stats["pronouns"] == 1
        assert stats["per_type"]["third_personal"] == 1


def _manifest_rows(loader_kind: str) -> list[tuple[str, str]]:
    rows = []
    for line in (DATA_DIR / "malformed" / "MANIFEST.tsv").read_text().splitlines():
        fname, loader, err = line.split("\t")
        if loader == loader_kind:
            rows.append((fname, err))
    return rows


@pytest.mark.parametrize("fname,err", _manifest_rows("corpus"))
def test_malformed_corpus_fixture_rejected(fname, err):
    expected = {"CorpusParseError": CorpusParseError,
                "CorpusValidationError": CorpusValidationError}[err]
    with pytest.raises(expected):
        load_corpus(DATA_DIR / "malformed" / fname)
