"""Optimizer correctness against a closed-form reference, loop determinism,
instance collection, and the checkpoint-exact parameter snapping."""
from __future__ import annotations

import math

import numpy as np
import pytest

from kgcoref.corpus import Document, PronounInstance, Span, load_corpus
from kgcoref.neural import ModelConfig, Variant, load_checkpoint, save_checkpoint
from kgcoref.train import (
    AdamStepError,
    EpochStats,
    TrainConfig,
    TrainState,
    TrainingSetupError,
    adam_step,
    clip_gradient,
    collect_instances,
    train,
    write_training_log,
)

from conftest import make_pronoun, params_for, two_sentence_doc


def ref_adam(x0, grads, cfg):
    """Independent Adam recurrence over a flat vector."""
    x = x0.copy()
    m = np.zeros_like(x0)
    v = np.zeros_like(x0)
    for t, g in enumerate(grads, start=1):
        m = cfg.adam_beta1 * m + (1 - cfg.adam_beta1) * g
        v = cfg.adam_beta2 * v + (1 - cfg.adam_beta2) * g * g
        m_hat = m / (1 - cfg.adam_beta1 ** t)
        v_hat = v / (1 - cfg.adam_beta2 ** t)
        x = x - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)
    return x


class TestAdamStep:
    def fresh(self, tiny_config):
        params = params_for(tiny_config, Variant.COMPLETE)
        return TrainState.fresh(params)

    def test_matches_reference_over_several_steps(self, tiny_config):
        state = self.fresh(tiny_config)
        cfg = TrainConfig(learning_rate=0.01)
        x0 = state.params.flat()
        rng = np.random.default_rng(0)
        grads = [rng.normal(size=x0.shape) for _ in range(5)]
        for g in grads:
            adam_step(state, g, cfg)
        np.testing.assert_allclose(state.params.flat(), ref_adam(x0, grads, cfg),
                                   rtol=0, atol=1e-15)
        assert state.step == 5

    def test_first_step_moves_at_most_lr(self, tiny_config):
        state = self.fresh(tiny_config)
        cfg = TrainConfig(learning_rate=0.25)
        before = state.params.flat()
        grad = np.random.default_rng(1).normal(size=before.shape)
        adam_step(state, grad, cfg)
        delta = state.params.flat() - before
        # first bias-corrected step is -lr * g / (|g| + eps): length <= lr, opposite sign
        assert np.all(np.abs(delta) <= cfg.learning_rate + 1e-12)
        moved = np.abs(grad) > 1e-12
        assert np.all(np.sign(delta[moved]) == -np.sign(grad[moved]))

    def test_zero_gradient_is_a_fixed_point(self, tiny_config):
        state = self.fresh(tiny_config)
        before = state.params.flat()
        adam_step(state, np.zeros_like(before), TrainConfig())
        np.testing.assert_array_equal(state.params.flat(), before)

    def test_nonfinite_gradient_names_block(self, tiny_config):
        state = self.fresh(tiny_config)
        grad = np.zeros(state.params.n_params)
        grad[0] = np.nan
        first_block = next(iter(state.params.arrays))
        with pytest.raises(AdamStepError, match=first_block):
            adam_step(state, grad, TrainConfig())

    def test_shape_mismatch_rejected(self, tiny_config):
        state = self.fresh(tiny_config)
        with pytest.raises(ValueError, match="shape"):
            adam_step(state, np.zeros(3), TrainConfig())


class TestClipGradient:
    def test_long_gradient_scaled_to_max_norm(self):
        g = np.array([3.0, 4.0])
        clipped = clip_gradient(g, 1.0)
        assert np.linalg.norm(clipped) == pytest.approx(1.0)
        np.testing.assert_allclose(clipped, g / 5.0)

    def test_short_gradient_untouched(self):
        g = np.array([0.3, 0.4])
        assert clip_gradient(g, 1.0) is g

    def test_nonpositive_max_disables_clipping(self):
        g = np.array([30.0, 40.0])
        assert clip_gradient(g, 0.0) is g
        assert clip_gradient(g, -1.0) is g


class TestTrainConfig:
    @pytest.mark.parametrize("overrides", [
        {"learning_rate": 0.0},
        {"adam_beta1": 1.0},
        {"adam_beta2": -0.1},
        {"max_epochs": 0},
    ])
    def test_validation(self, overrides):
        with pytest.raises(ValueError):
            TrainConfig(**overrides)

    def test_dict_round_trip(self):
        cfg = TrainConfig(learning_rate=0.02, max_epochs=7, early_stop_dev_f1=0.9)
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg
        with pytest.raises(ValueError, match="unknown"):
            TrainConfig.from_dict({"momentum": 0.9})


class TestCollectInstances:
    def test_skips_pronouns_without_gold(self, tiny_config, graph):
        doc = two_sentence_doc()
        bare = PronounInstance(doc.pronouns[0].pronoun_span,
                               doc.pronouns[0].pronoun_type, frozenset())
        stripped = Document("d", doc.sentences, [bare], doc.gold_mentions)
        p = params_for(tiny_config, Variant.COMPLETE)
        instances, skipped = collect_instances(p, [stripped], graph)
        assert instances == []
        assert skipped == 1

    def test_skips_gold_wider_than_span_limit(self, tiny_config, graph):
        doc = two_sentence_doc()  # gold span has width 2
        p = params_for(tiny_config, Variant.COMPLETE)
        instances, skipped = collect_instances(p, [doc], graph, max_span_width=1)
        assert instances == []
        assert skipped == 1

    def test_collects_usable_instances(self, tiny_config, graph):
        doc = two_sentence_doc()
        p = params_for(tiny_config, Variant.COMPLETE)
        instances, skipped = collect_instances(p, [doc], graph)
        assert skipped == 0
        assert len(instances) == 1
        got_doc, got_pron, feats = instances[0]
        assert got_doc is doc
        assert feats.gold_idx is not None


def small_corpus(bundle) -> tuple[list[Document], list[Document]]:
    train_docs = load_corpus(bundle["paths"]["train"])
    dev_docs = load_corpus(bundle["paths"]["dev"])
    return train_docs, dev_docs


TINY_TRAIN = ModelConfig(embed_dim=6, lstm_hidden=5, ffn_hidden=6,
                         length_bucket_dim=3, dropout=0.1, max_knowledge=4, seed=2)


class TestTrainLoop:
    def test_loss_decreases_and_stats_are_complete(self, small_bundle):
        train_docs, dev_docs = small_corpus(small_bundle)
        params, stats = train(train_docs, dev_docs, small_bundle["graph"],
                              model_cfg=TINY_TRAIN,
                              train_cfg=TrainConfig(max_epochs=6, learning_rate=5e-3))
        assert len(stats) == 6
        assert stats[-1].mean_loss < stats[0].mean_loss
        assert all(isinstance(s, EpochStats) for s in stats)
        assert all(not math.isnan(s.dev_f1) for s in stats)
        assert params.metadata["threshold"] == TrainConfig().dev_threshold

    def test_same_seed_is_bit_identical(self, small_bundle):
        train_docs, dev_docs = small_corpus(small_bundle)
        cfg = TrainConfig(max_epochs=3)
        a, _ = train(train_docs, dev_docs, small_bundle["graph"],
                     model_cfg=TINY_TRAIN, train_cfg=cfg)
        b, _ = train(train_docs, dev_docs, small_bundle["graph"],
                     model_cfg=TINY_TRAIN, train_cfg=cfg)
        assert list(a.arrays) == list(b.arrays)
        for name in a.arrays:
            np.testing.assert_array_equal(a.arrays[name], b.arrays[name])

    def test_shuffle_seed_changes_the_path(self, small_bundle):
        train_docs, _ = small_corpus(small_bundle)
        a, _ = train(train_docs, None, small_bundle["graph"], model_cfg=TINY_TRAIN,
                     train_cfg=TrainConfig(max_epochs=2, shuffle_seed=0))
        b, _ = train(train_docs, None, small_bundle["graph"], model_cfg=TINY_TRAIN,
                     train_cfg=TrainConfig(max_epochs=2, shuffle_seed=1))
        assert any(not np.array_equal(a.arrays[n], b.arrays[n]) for n in a.arrays)

    def test_early_stop_on_dev_target(self, small_bundle):
        train_docs, dev_docs = small_corpus(small_bundle)
        _, stats = train(train_docs, dev_docs, small_bundle["graph"],
                         model_cfg=TINY_TRAIN,
                         train_cfg=TrainConfig(max_epochs=50, early_stop_dev_f1=0.0))
        assert len(stats) == 1

    def test_returned_parameters_survive_checkpoint_exactly(self, small_bundle, tmp_path):
        train_docs, _ = small_corpus(small_bundle)
        params, _ = train(train_docs, None, small_bundle["graph"], model_cfg=TINY_TRAIN,
                          train_cfg=TrainConfig(max_epochs=2))
        path = tmp_path / "m.ckpt"
        save_checkpoint(params, path)
        again = load_checkpoint(path)
        for name in params.arrays:
            np.testing.assert_array_equal(again.arrays[name], params.arrays[name])

    def test_no_usable_instances_raises(self, tiny_config, graph):
        doc = two_sentence_doc()
        bare = PronounInstance(doc.pronouns[0].pronoun_span,
                               doc.pronouns[0].pronoun_type, frozenset())
        stripped = Document("d", doc.sentences, [bare], doc.gold_mentions)
        with pytest.raises(TrainingSetupError):
            train([stripped], None, graph, model_cfg=tiny_config,
                  train_cfg=TrainConfig(max_epochs=1))

    def test_metadata_passthrough_and_variant(self, small_bundle):
        train_docs, _ = small_corpus(small_bundle)
        params, _ = train(train_docs, None, small_bundle["graph"], model_cfg=TINY_TRAIN,
                          train_cfg=TrainConfig(max_epochs=1, dev_threshold=0.05),
                          variant=Variant.WITHOUT_KG, metadata={"run": "t7"})
        assert params.variant is Variant.WITHOUT_KG
        assert params.metadata["run"] == "t7"
        assert params.metadata["threshold"] == 0.05


class TestTrainingLog:
    def test_csv_layout(self, tmp_path):
        stats = [
            EpochStats(1, 2.5, 0.25, 1.25, 0),
            EpochStats(2, 1.5, float("nan"), 1.0, 1),
        ]
        path = tmp_path / "log.csv"
        write_training_log(stats, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,mean_loss,dev_f1,wall_seconds"
        assert lines[1] == "1,2.500000,0.250000,1.250"
        assert lines[2] == "2,1.500000,,1.000"
