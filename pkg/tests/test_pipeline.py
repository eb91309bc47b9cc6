"""Joint training, prediction, triple assembly, and checkpoint round trips."""

import numpy as np
import pytest

from gradcheck import assert_grads_match
from lexfusion.config import TrainConfig
from lexfusion.corpus import Instance, Link, Mention, Triple
from lexfusion.encoder import write_embeddings
from lexfusion.evaluation import evaluate
from lexfusion.numerics import Tape, Tensor
from lexfusion.pipeline import (Model, TrainingError, assemble_triples,
                                init_model, instance_losses, joint_loss,
                                load_model, predict_corpus, predict_instance,
                                save_model, train)
from lexfusion.synthetic import make_borrow_corpus


def tiny_config(**overrides):
    base = dict(d_emb=12, d_h=12, epochs=2, lr=0.003, dropout=0.0, seed=3,
                tag_dim=6)
    base.update(overrides)
    return TrainConfig(**base)


def tiny_corpus(n_para=4, n_seeds=2, seed=0):
    instances, _ = make_borrow_corpus(n_seeds, n_para, seed=seed)
    return instances


class TestJointLoss:
    def test_weighted_sum(self):
        tape = Tape()
        a = Tensor(0.5)
        b = Tensor(0.25)
        assert joint_loss(a, b, 1.0, tape).item() == 0.75
        assert joint_loss(a, b, 2.0, tape).item() == 1.0

    def test_zero_coref_passes_mention_through(self):
        tape = Tape()
        out = joint_loss(Tensor(0.7), Tensor(0.0), 3.0, tape)
        np.testing.assert_allclose(out.item(), 0.7)

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValueError, match="alpha"):
            joint_loss(Tensor(1.0), Tensor(1.0), 0.0, Tape())

    def test_gradient_through_shared_encoder(self):
        corpus = tiny_corpus(2)
        cfg = tiny_config(d_emb=6, d_h=6, tag_dim=4)
        model = init_model(corpus, None, cfg)
        inst = corpus[0]
        leaves = [model.params["encoder.char_emb"], model.params["crf.t"],
                  model.params["coref.u1"], model.params["coref.tag_emb"]]

        def forward(tape):
            l_mention, l_pair = instance_losses(model, inst, tape)
            return joint_loss(l_mention, l_pair, 1.5, tape)

        tape = Tape()
        tape.backward(forward(tape))
        assert_grads_match(lambda: forward(Tape()).item(), leaves, rtol=1e-4)

    def test_joint_gradient_is_sum_of_task_gradients(self):
        corpus = tiny_corpus(2)
        cfg = tiny_config(d_emb=6, d_h=6, tag_dim=4)
        model = init_model(corpus, None, cfg)
        inst = corpus[0]
        emb = model.params["encoder.char_emb"]
        alpha = 2.0

        tape = Tape()
        l_mention, _ = instance_losses(model, inst, tape)
        tape.backward(l_mention)
        g_mention = emb.grad.copy()
        emb.grad = None

        tape = Tape()
        _, l_pair = instance_losses(model, inst, tape)
        tape.backward(l_pair)
        g_pair = emb.grad.copy()
        emb.grad = None

        tape = Tape()
        lm, lp = instance_losses(model, inst, tape)
        tape.backward(joint_loss(lm, lp, alpha, tape))
        np.testing.assert_allclose(emb.grad, g_mention + alpha * g_pair,
                                   atol=1e-10)
        emb.grad = None


class TestTrain:
    def test_smoke_one_epoch(self):
        corpus = tiny_corpus(5, n_seeds=3)
        model, history = train(corpus, None, tiny_config(epochs=1))
        assert len(history) == 1
        assert np.isfinite(history[0]["train_loss"])

    def test_loss_strictly_decreases_early(self):
        corpus = tiny_corpus(4, n_seeds=2)
        _, history = train(corpus, None, tiny_config(epochs=10))
        losses = [h["train_loss"] for h in history]
        assert all(b < a for a, b in zip(losses, losses[1:])), losses

    def test_same_seed_identical_checkpoints(self, tmp_path):
        corpus = tiny_corpus(3)
        cfg = tiny_config(epochs=2, dropout=0.2)
        for name in ("a", "b"):
            model, _ = train(corpus, None, cfg)
            save_model(model, tmp_path / name)
        assert ((tmp_path / "a" / "params.bin").read_bytes()
                == (tmp_path / "b" / "params.bin").read_bytes())

    def test_empty_corpus_rejected(self):
        with pytest.raises(TrainingError, match="empty"):
            train([], None, tiny_config())

    def test_non_finite_input_aborts_with_instance_id(self):
        corpus = tiny_corpus(2)
        emb = {inst.id: np.zeros((len(inst.text), 8)) for inst in corpus}
        emb[corpus[1].id][0, 0] = np.inf
        cfg = tiny_config(encoder_mode="external", embeddings_path="unused",
                          dropout=0.2)
        with pytest.raises(TrainingError, match=corpus[1].id):
            train(corpus, None, cfg, embeddings=emb)

    def test_dev_metrics_and_early_stop(self):
        corpus = tiny_corpus(4, n_seeds=2)
        cfg = tiny_config(epochs=50, lr=0.01, early_stop_f=1.0)
        model, history = train(corpus, None, cfg, dev=corpus)
        assert history[-1]["dev_triple_f"] == 1.0
        assert len(history) < 50
        report = evaluate(predict_corpus(model, corpus), corpus)
        assert report.triple.f1 == 1.0

    def test_pipeline_mode_smoke(self):
        corpus = tiny_corpus(3)
        model, history = train(corpus, None,
                               tiny_config(epochs=2, pipeline_mode=True))
        assert np.isfinite(history[-1]["train_loss"])

    def test_transition_mask_mode_smoke(self):
        corpus = tiny_corpus(3)
        model, _ = train(corpus, None, tiny_config(epochs=1,
                                                   transition_mask=True))
        pred = predict_instance(model, corpus[0].text, corpus[0].id)
        assert pred.id == corpus[0].id


def mention(start, end, kind):
    return Mention(start, end, kind)


class TestAssembleTriples:
    def probs(self, n, entries):
        p = np.zeros((n, n))
        for (i, j), v in entries.items():
            p[i, j] = p[j, i] = v
        return p

    def test_crossed_preferences_resolve_one_one(self):
        mentions = [mention(0, 1, "F"), mention(3, 4, "S"), mention(6, 7, "S")]
        p = self.probs(8, {(0, 3): 0.9, (0, 4): 0.9, (0, 6): 0.2, (0, 7): 0.2,
                           (1, 3): 0.1, (1, 4): 0.1, (1, 6): 0.8, (1, 7): 0.8})
        (triple,) = assemble_triples(mentions, p)
        assert triple == Triple((0, 1), (3, 4), (6, 7))

    def test_same_word_preferred_without_backup_yields_nothing(self):
        mentions = [mention(0, 1, "F"), mention(3, 4, "S"), mention(6, 7, "S")]
        p = self.probs(8, {(0, 3): 0.9, (0, 4): 0.9, (1, 3): 0.8, (1, 4): 0.8,
                           (0, 6): 0.1, (0, 7): 0.1, (1, 6): 0.2, (1, 7): 0.2})
        assert assemble_triples(mentions, p) == []

    def test_all_below_threshold_yields_nothing(self):
        mentions = [mention(0, 1, "F"), mention(3, 4, "S"), mention(6, 7, "S")]
        p = self.probs(8, {(0, 3): 0.4, (1, 6): 0.45})
        assert assemble_triples(mentions, p) == []

    def test_second_choice_used_when_first_taken(self):
        mentions = [mention(0, 1, "F"), mention(3, 4, "S"), mention(6, 7, "S")]
        p = self.probs(8, {(0, 3): 0.95, (0, 4): 0.95, (0, 6): 0.6, (0, 7): 0.6,
                           (1, 3): 0.9, (1, 4): 0.9, (1, 6): 0.7, (1, 7): 0.7})
        (triple,) = assemble_triples(mentions, p)
        assert triple == Triple((0, 1), (3, 4), (6, 7))

    def test_identical_separation_words_rejected(self):
        text = "ab cd cd"
        mentions = [mention(0, 1, "F"), mention(3, 4, "S"), mention(6, 7, "S")]
        p = self.probs(8, {(0, 3): 0.9, (0, 4): 0.9, (1, 6): 0.9, (1, 7): 0.9})
        assert assemble_triples(mentions, p, text=text) == []
        assert len(assemble_triples(mentions, p)) == 1

    def test_emitted_triples_satisfy_invariants(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = 12
            mentions = [mention(0, 1, "F"), mention(3, 4, "S"),
                        mention(6, 6, "S"), mention(8, 10, "S")]
            p = rng.random((n, n))
            p = (p + p.T) / 2.0
            for t in assemble_triples(mentions, p, threshold=0.5):
                assert t.fusion == (0, 1)
                assert t.sep1 != t.sep2
                assert {t.sep1, t.sep2} <= {(3, 4), (6, 6), (8, 10)}


class TestPredict:
    def test_no_fusion_mentions_no_triples(self):
        corpus = tiny_corpus(2)
        model = init_model(corpus, None, tiny_config())
        model.params["crf.b"].data[:] = np.array([10.0, 0, 0, 0, 0])
        pred = predict_instance(model, corpus[0].text, corpus[0].id)
        assert pred.mentions == [] and pred.triples == []

    def test_prediction_deterministic_despite_dropout_config(self):
        corpus = tiny_corpus(2)
        model, _ = train(corpus, None, tiny_config(epochs=1, dropout=0.4))
        a = predict_instance(model, corpus[0].text, corpus[0].id)
        b = predict_instance(model, corpus[0].text, corpus[0].id)
        assert a == b


class TestSaveLoad:
    def test_round_trip_preserves_predictions(self, tmp_path, mini_lexicon):
        corpus = tiny_corpus(3)
        cfg = tiny_config(epochs=1, sememe_mode="word", gat_heads=2,
                          gat_head_dim=4, sememe_dim=8, offset_dim=4)
        model, _ = train(corpus, mini_lexicon, cfg)
        save_model(model, tmp_path / "m")
        again = load_model(tmp_path / "m")
        assert again.config == model.config
        assert again.vocab == model.vocab
        for name, p in model.params.items():
            np.testing.assert_array_equal(again.params[name].data, p.data)
        for inst in corpus:
            assert (predict_instance(again, inst.text, inst.id)
                    == predict_instance(model, inst.text, inst.id))

    def test_external_mode_round_trip(self, tmp_path):
        corpus = tiny_corpus(2)
        rng = np.random.default_rng(5)
        emb = {inst.id: rng.normal(size=(len(inst.text), 8)).astype(np.float32)
               .astype(np.float64) for inst in corpus}
        emb_path = tmp_path / "vectors.bin"
        write_embeddings(emb_path, emb)
        cfg = tiny_config(encoder_mode="external",
                          embeddings_path=str(emb_path), epochs=1)
        model, _ = train(corpus, None, cfg)
        save_model(model, tmp_path / "m")
        again = load_model(tmp_path / "m")
        for inst in corpus:
            assert (predict_instance(again, inst.text, inst.id)
                    == predict_instance(model, inst.text, inst.id))
