"""Synthetic corpus generator: determinism, coverage, and the design invariants
that make knowledge the only resolution signal in knowledge-dependent documents.
"""
from __future__ import annotations

import pytest

from kgcoref.corpus import PronounType, corpus_statistics, load_corpus
from kgcoref.kg import (
    AnimacyGender,
    KnowledgeSource,
    PRONOUN_ATTRIBUTES,
    Plurality,
    load_dep_edges,
    load_markups,
    load_triplets,
)
from kgcoref.synth import (
    SPLITS,
    SynthSpec,
    build_inventory,
    bundle_graph,
    generate,
    generate_documents,
    required_vocab,
    template_count,
    write_bundle,
    write_domain,
)

TAG = "probe"
N_ENTITIES = 30
VOCAB = 60


def spec_with(**overrides) -> SynthSpec:
    base = dict(n_docs=24, vocab_size=VOCAB, n_entities=N_ENTITIES, seed=3,
                knowledge_dependence=1.0, domain_tag=TAG, split="train", n_distractors=0)
    base.update(overrides)
    return SynthSpec(**base)


class TestSpecValidation:
    @pytest.mark.parametrize("overrides", [
        {"n_docs": 0},
        {"knowledge_dependence": -0.1},
        {"knowledge_dependence": 1.5},
        {"split": "validation"},
        {"n_entities": 24},          # under the floor
        {"n_entities": 32},          # not a multiple of six
        {"vocab_size": 10},
        {"n_distractors": -1},
        {"domain_tag": "News"},
        {"domain_tag": "2abc"},
    ])
    def test_rejected(self, overrides):
        with pytest.raises(ValueError):
            spec_with(**overrides)

    def test_dict_round_trip(self):
        spec = spec_with(n_distractors=2)
        assert SynthSpec(**spec.to_dict()) == spec

    def test_required_vocab(self):
        # entities + verbs + categories + distractor words
        assert required_vocab(30) == 30 + 8 + 4 + 8
        assert required_vocab(60) == 60 + 10 + 4 + 8

    def test_template_variety_per_type(self):
        for ptype in (PronounType.THIRD_PERSONAL, PronounType.POSSESSIVE,
                      PronounType.DEMONSTRATIVE):
            assert template_count(ptype) >= 20


class TestInventory:
    def test_deterministic_and_seed_free(self):
        a = build_inventory(TAG, N_ENTITIES, VOCAB)
        b = build_inventory(TAG, N_ENTITIES, VOCAB)
        assert a == b

    def test_domains_share_no_content_words(self):
        a = build_inventory("alpha", N_ENTITIES, VOCAB)
        b = build_inventory("beta", N_ENTITIES, VOCAB)
        words_a = {e.noun for e in a.entities} | set(a.verbs) | set(a.categories) | set(a.distractor_words)
        words_b = {e.noun for e in b.entities} | set(b.verbs) | set(b.categories) | set(b.distractor_words)
        assert words_a.isdisjoint(words_b)

    def test_words_carry_domain_prefix(self):
        inv = build_inventory(TAG, N_ENTITIES, VOCAB)
        for e in inv.entities:
            assert e.noun.startswith(f"{TAG}_")
        for w in inv.verbs + inv.categories + inv.distractor_words:
            assert w.startswith(f"{TAG}_")

    def test_split_pools_partition_entities(self):
        inv = build_inventory(TAG, N_ENTITIES, VOCAB)
        pools = {s: inv.pool(s) for s in SPLITS}
        assert sum(len(p) for p in pools.values()) == N_ENTITIES
        nouns = [e.noun for s in SPLITS for e in pools[s]]
        assert len(set(nouns)) == N_ENTITIES
        with pytest.raises(ValueError):
            inv.pool("all")

    def test_every_pool_covers_all_attribute_classes(self):
        inv = build_inventory(TAG, N_ENTITIES, VOCAB)
        for split in SPLITS:
            classes = {(e.plurality, e.ag) for e in inv.pool(split)}
            assert len(classes) == 6

    def test_plural_suffix_never_collides(self):
        inv = build_inventory(TAG, N_ENTITIES, VOCAB)
        for e in inv.entities:
            if e.plurality is Plurality.PLURAL:
                assert e.noun.endswith("s")
            else:
                assert e.noun[-1] in "aeiou"


class TestGeneration:
    def test_byte_identical_for_same_spec(self):
        a = generate(spec_with())
        b = generate(spec_with())
        assert a.corpus_jsonl == b.corpus_jsonl
        assert a.triplets_tsv == b.triplets_tsv
        assert a.markups_tsv == b.markups_tsv
        assert a.dep_edges_tsv == b.dep_edges_tsv

    def test_seed_changes_text_not_knowledge(self):
        a = generate(spec_with(seed=1))
        b = generate(spec_with(seed=2, split="test"))
        assert a.corpus_jsonl != b.corpus_jsonl
        assert a.triplets_tsv == b.triplets_tsv
        assert a.dep_edges_tsv == b.dep_edges_tsv

    def test_docs_validate_and_have_gold(self, tmp_path):
        paths = write_bundle(spec_with(), tmp_path)
        docs = load_corpus(paths["corpus"])  # validation runs on load
        assert len(docs) == 24
        for doc in docs:
            assert len(doc.pronouns) == 1
            assert doc.pronouns[0].gold_antecedents
            assert doc.gold_mentions

    def test_doc_ids_unique_and_prefixed(self):
        docs = generate_documents(spec_with())
        ids = [d.doc_id for d in docs]
        assert len(set(ids)) == len(ids)
        assert all(i.startswith(f"{TAG}-train-") for i in ids)

    def test_pronoun_types_balanced(self):
        docs = generate_documents(spec_with(n_docs=24))
        stats = corpus_statistics(docs)
        assert stats["per_type"] == {"third_personal": 8, "possessive": 8, "demonstrative": 8}

    def test_kd_fraction_is_exact(self):
        for kd, expected in ((1.0, 20), (0.5, 10), (0.0, 0)):
            docs = generate_documents(spec_with(n_docs=20, knowledge_dependence=kd))
            # the coordination frame marks a two-candidate document
            two_np = sum("and" in d.all_tokens() for d in docs)
            assert two_np == expected

    def test_plain_docs_sometimes_repeat_the_gold(self):
        docs = generate_documents(spec_with(n_docs=45, knowledge_dependence=0.0, seed=11))
        stats = corpus_statistics(docs)
        assert stats["mean_gold_size"] > 1.0
        assert any(len(d.pronouns[0].gold_antecedents) == 2 for d in docs)

    def test_kd_docs_have_one_gold_two_mentions(self):
        docs = generate_documents(spec_with(n_docs=15, knowledge_dependence=1.0))
        for d in docs:
            assert len(d.pronouns[0].gold_antecedents) == 1
            assert len(d.gold_mentions) == 2

    def test_train_text_never_leaks_heldout_nouns(self):
        inv = build_inventory(TAG, N_ENTITIES, VOCAB)
        held_out = {e.noun for s in ("dev", "test") for e in inv.pool(s)}
        docs = generate_documents(spec_with(n_docs=40))
        train_tokens = {t for d in docs for t in d.all_tokens()}
        assert train_tokens.isdisjoint(held_out)


class TestDesignInvariant:
    """In a two-candidate document the gold is knowledge-compatible with the
    pronoun and the confounder differs in plurality, animacy-gender, or cue verb."""

    def test_gold_is_attribute_compatible(self):
        inv = build_inventory(TAG, N_ENTITIES, VOCAB)
        by_noun = {e.noun: e for e in inv.entities}
        docs = generate_documents(spec_with(n_docs=60, knowledge_dependence=1.0, seed=8))
        for doc in docs:
            pron = doc.pronouns[0]
            word = doc.token_text(pron.pronoun_span.start)
            want_pl, want_ag = PRONOUN_ATTRIBUTES[word]
            (gold,) = pron.gold_antecedents
            gold_entity = by_noun[doc.span_tokens(gold)[-1]]
            confounder_span = next(m for m in doc.gold_mentions if m != gold)
            confounder = by_noun[doc.span_tokens(confounder_span)[-1]]

            assert gold_entity.plurality is want_pl
            if want_ag is not AnimacyGender.UNKNOWN:
                assert gold_entity.ag is want_ag
            assert (confounder.plurality is not gold_entity.plurality
                    or confounder.ag is not gold_entity.ag
                    or confounder.cue_verb != gold_entity.cue_verb)

    def test_slot_order_is_balanced(self):
        docs = generate_documents(spec_with(n_docs=120, knowledge_dependence=1.0, seed=2))
        gold_first = 0
        for doc in docs:
            (gold,) = doc.pronouns[0].gold_antecedents
            other = next(m for m in doc.gold_mentions if m != gold)
            gold_first += gold.start < other.start
        # a coin flip decides the slot; both orders must occur in quantity
        assert 30 <= gold_first <= 90


class TestKnowledgeFiles:
    def test_raw_files_parse(self, tmp_path):
        paths = write_bundle(spec_with(n_distractors=2), tmp_path)
        assert load_triplets(paths["triplets"])
        assert load_markups(paths["markups"])
        assert load_dep_edges(paths["dep_edges"])

    def test_low_confidence_junk_rows_exist_and_get_filtered(self, tmp_path):
        paths = write_bundle(spec_with(), tmp_path)
        raw = load_triplets(paths["triplets"])
        confidences = {t.confidence for t in raw.triplets}
        assert {1.5, 2.0, 3.0} <= confidences
        graph = bundle_graph(tmp_path)
        assert all(t.confidence > 2.0 for t in graph.triplets
                   if t.source is KnowledgeSource.OMCS)

    def test_entity_heads_carry_all_knowledge_kinds(self, tmp_path):
        write_bundle(spec_with(n_distractors=4), tmp_path)
        graph = bundle_graph(tmp_path)
        inv = build_inventory(TAG, N_ENTITIES, VOCAB)
        for e in inv.entities[:8]:
            got = graph.retrieve(e.surface)
            by_rel = {}
            for t in got:
                by_rel.setdefault(t.relation, []).append(t)
            assert [tuple(t.tail) for t in by_rel["IsA"]] == [(e.category,)]
            assert len(by_rel["RelatedTo"]) >= 4
            assert [tuple(t.tail) for t in by_rel["plurality"]] == [(e.plurality.value,)]
            assert [tuple(t.tail) for t in by_rel["AG"]] == [(e.ag.value,)]
            assert [tuple(t.tail) for t in by_rel["nsubj"]] == [(e.cue_verb,)]
            assert [tuple(t.tail) for t in by_rel["dobj"]] == [(e.cue_verb,)]

    def test_no_distractors_by_default(self, tmp_path):
        write_bundle(spec_with(), tmp_path)
        graph = bundle_graph(tmp_path)
        assert not [t for t in graph.triplets if t.relation == "RelatedTo"]

    def test_sp_noise_arguments_rejected_by_count(self, tmp_path):
        paths = write_bundle(spec_with(), tmp_path)
        graph = bundle_graph(tmp_path)
        edges = load_dep_edges(paths["dep_edges"])
        assert any(e.count == 3 for e in edges)  # noise rows are in the raw file
        assert not graph.retrieve("the hall")    # but never survive mining

    def test_pronoun_attribute_table_is_merged_in(self, tmp_path):
        write_bundle(spec_with(), tmp_path)
        graph = bundle_graph(tmp_path)
        assert graph.retrieve("they")
        assert graph.retrieve("it")


class TestWriteDomain:
    def test_writes_requested_splits_only(self, tmp_path):
        paths = write_domain(tmp_path, TAG, {"train": 4, "test": 3}, seed=1,
                             n_entities=N_ENTITIES, vocab_size=VOCAB)
        assert (tmp_path / "train.jsonl").exists()
        assert (tmp_path / "test.jsonl").exists()
        assert not (tmp_path / "dev.jsonl").exists()
        assert len(load_corpus(paths["train"])) == 4
        assert len(load_corpus(paths["test"])) == 3

    def test_split_seeds_differ(self, tmp_path):
        write_domain(tmp_path, TAG, {"train": 6, "dev": 6}, seed=0,
                     n_entities=N_ENTITIES, vocab_size=VOCAB)
        train = (tmp_path / "train.jsonl").read_text()
        dev = (tmp_path / "dev.jsonl").read_text()
        assert train != dev

    def test_rejects_empty_request(self, tmp_path):
        with pytest.raises(ValueError, match="positive document count"):
            write_domain(tmp_path, TAG, {"train": 0}, n_entities=N_ENTITIES,
                         vocab_size=VOCAB)

    def test_splits_share_knowledge_files(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        write_bundle(spec_with(split="train", seed=4), a)
        write_bundle(spec_with(split="test", seed=77), b)
        assert (a / "triplets.tsv").read_text() == (b / "triplets.tsv").read_text()
        assert (a / "markups.tsv").read_text() == (b / "markups.tsv").read_text()
        assert (a / "dep_edges.tsv").read_text() == (b / "dep_edges.tsv").read_text()
