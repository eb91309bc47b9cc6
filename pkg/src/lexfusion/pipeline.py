"""End-to-end model: joint training, prediction, and checkpoint directories.

A model bundles the encoder (toy trainable or precomputed vectors,
optionally sememe-enhanced), the tagging CRF, and the pair scorer.
Training runs per-instance Adam steps on the joint loss; prediction runs
Viterbi tagging, pair scoring with the predicted tags, and triple
assembly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from lexfusion.biaffine import (build_pair_labels, fuse, init_coref_params,
                                pair_loss, pair_probabilities, pair_scores)
from lexfusion.config import TrainConfig, config_from_dict, save_config
from lexfusion.corpus import Instance, Mention, Triple
from lexfusion.crf import (apply_transition_mask, decode_mentions, emissions,
                           encode_tags, init_crf_params, mention_loss, viterbi)
from lexfusion.encoder import (EncoderError, build_vocab, encode_toy,
                               init_toy_params, read_embeddings)
from lexfusion.evaluation import Prediction, evaluate
from lexfusion.numerics import (AdamState, NumericsError, Tape, Tensor,
                                adam_step, load_checkpoint, save_checkpoint,
                                zero_grads)
from lexfusion.sememe_encoder import enhance, init_sememe_params
from lexfusion.sememes import SememeLexicon, lexicon_from_dict


class TrainingError(RuntimeError):
    """Unusable training inputs or a diverged run."""


@dataclass
class Model:
    config: TrainConfig
    params: dict[str, Tensor]
    vocab: dict[str, int] = field(default_factory=dict)
    lexicon: SememeLexicon | None = None
    embeddings: dict[str, np.ndarray] | None = None
    base_width: int = 0


def _external_width(embeddings: dict[str, np.ndarray]) -> int:
    for arr in embeddings.values():
        return arr.shape[1]
    raise TrainingError("external embedding file holds no paragraphs")


def init_model(corpus: list[Instance], lexicon: SememeLexicon | None,
               config: TrainConfig,
               embeddings: dict[str, np.ndarray] | None = None) -> Model:
    config.validate()
    if config.sememe_mode != "off" and lexicon is None:
        raise TrainingError(f"sememe_mode {config.sememe_mode!r} needs a lexicon")
    rng = np.random.default_rng(config.seed)
    params: dict[str, Tensor] = {}
    vocab: dict[str, int] = {}
    if config.encoder_mode == "toy":
        vocab = build_vocab(inst.text for inst in corpus)
        base_width = config.d_h
        params.update(init_toy_params(len(vocab), d_emb=config.d_emb,
                                      d_h=base_width, max_len=config.max_len,
                                      rng=rng))
    else:
        if embeddings is None:
            raise TrainingError("external encoder mode needs loaded embeddings")
        base_width = _external_width(embeddings)
    if config.sememe_mode != "off":
        params.update(init_sememe_params(
            len(lexicon.sememes), d_h=base_width, heads=config.gat_heads,
            head_dim=config.gat_head_dim, sememe_dim=config.sememe_dim,
            offset_dim=config.offset_dim, rng=rng))
    enc_width = base_width * (2 if config.sememe_mode != "off"
                              and config.sememe_concat else 1)
    params.update(init_crf_params(enc_width, rng=rng))
    params.update(init_coref_params(enc_width + config.tag_dim,
                                    tag_dim=config.tag_dim, rng=rng))
    return Model(config=config, params=params, vocab=vocab, lexicon=lexicon,
                 embeddings=embeddings, base_width=base_width)


def encode_instance(model: Model, text: str, pid: str, tape: Tape) -> Tensor:
    cfg = model.config
    if cfg.encoder_mode == "toy":
        h = encode_toy(text, model.vocab, model.params, tape)
    else:
        if model.embeddings is None or pid not in model.embeddings:
            raise EncoderError(f"no precomputed embeddings for id {pid!r}")
        arr = model.embeddings[pid]
        if arr.shape[0] != len(text):
            raise EncoderError(
                f"embeddings for {pid!r} cover {arr.shape[0]} characters, "
                f"text has {len(text)}")
        h = Tensor(arr)
    if cfg.sememe_mode != "off":
        h = enhance(text, h, model.lexicon, model.params, tape,
                    mode=cfg.sememe_mode,
                    pseudo_graph=cfg.graph_mode == "pseudo",
                    concat_base=cfg.sememe_concat,
                    max_word_len=cfg.max_word_len)
    return tape.dropout(h, cfg.dropout)


def joint_loss(l_mention: Tensor, l_coref: Tensor, alpha: float,
               tape: Tape) -> Tensor:
    """L = L_mention + alpha * L_coref."""
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return tape.add(l_mention, tape.scale(l_coref, alpha))


def _transitions(model: Model, tape: Tape) -> Tensor:
    t = model.params["crf.t"]
    return apply_transition_mask(t, tape) if model.config.transition_mask else t


def instance_losses(model: Model, inst: Instance, tape: Tape):
    """(mention loss, pair loss) for one gold-labeled instance."""
    cfg = model.config
    h = encode_instance(model, inst.text, inst.id, tape)
    scores = emissions(h, model.params, tape)
    trans = _transitions(model, tape)
    gold_tags = encode_tags([(m.span(), m.type) for m in inst.mentions],
                            len(inst.text))
    l_mention = mention_loss(scores, trans, gold_tags, tape)
    tags = (viterbi(scores, trans) if cfg.predicted_tags_in_training
            else gold_tags)
    z = fuse(h, tags, model.params, tape)
    l_pair = pair_loss(pair_scores(z, model.params, tape),
                       build_pair_labels(inst), tape,
                       positive_weight=cfg.positive_weight,
                       literal=cfg.coref_literal)
    return l_mention, l_pair


def _step(model: Model, loss: Tensor, tape: Tape, state: AdamState,
          subset=None) -> None:
    tape.backward(loss)
    params = {name: p for name, p in model.params.items()
              if subset is None or subset(name)}
    grads = {name: p.grad for name, p in params.items() if p.grad is not None}
    adam_step(params, grads, state, lr=model.config.lr)
    zero_grads(model.params)


def train(corpus: list[Instance], lexicon: SememeLexicon | None,
          config: TrainConfig, dev: list[Instance] | None = None,
          embeddings: dict[str, np.ndarray] | None = None,
          log=None):
    """Fit a model; returns (model, per-epoch metric dicts)."""
    if not corpus:
        raise TrainingError("training corpus is empty")
    if config.encoder_mode == "external" and embeddings is None:
        embeddings = read_embeddings(config.embeddings_path)
    model = init_model(corpus, lexicon, config, embeddings=embeddings)
    state = AdamState()
    master = np.random.default_rng(config.seed)
    history = []
    for epoch in range(1, config.epochs + 1):
        order = master.permutation(len(corpus))
        total = 0.0
        for idx in order:
            inst = corpus[int(idx)]
            tape = Tape(train=True,
                        rng=np.random.default_rng(int(master.integers(2**63))))
            try:
                if config.pipeline_mode:
                    l_mention, _ = instance_losses(model, inst, tape)
                    total += l_mention.item()
                    _step(model, l_mention, tape, state,
                          subset=lambda n: not n.startswith("coref."))
                    tape = Tape(train=True, rng=np.random.default_rng(
                        int(master.integers(2**63))))
                    _, l_pair = instance_losses(model, inst, tape)
                    total += config.alpha * l_pair.item()
                    _step(model, tape.scale(l_pair, config.alpha), tape, state,
                          subset=lambda n: n.startswith("coref."))
                else:
                    l_mention, l_pair = instance_losses(model, inst, tape)
                    loss = joint_loss(l_mention, l_pair, config.alpha, tape)
                    total += loss.item()
                    _step(model, loss, tape, state)
            except NumericsError as exc:
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, instance {inst.id!r}: "
                    f"{exc}")
        entry = {"epoch": epoch, "train_loss": total / len(corpus)}
        if dev:
            report = evaluate(predict_corpus(model, dev), dev)
            entry["dev_triple_f"] = report.triple.f1
        history.append(entry)
        if log is not None:
            log(entry)
        if (config.early_stop_f is not None and dev
                and entry.get("dev_triple_f", 0.0) >= config.early_stop_f):
            break
    return model, history


def assemble_triples(mentions, pair_probs: np.ndarray, threshold: float = 0.5,
                     text: str | None = None) -> list[Triple]:
    """One triple per fusion mention whose two characters each claim a
    distinct separation mention with confidence above the threshold.

    A character scores a candidate mention by the mean positive
    probability over the mention's characters, averaged over both pair
    orders.  Assignment is greedy by score (ties: lower character index,
    then lower mention index).
    """
    seps = [m for m in mentions if m.type == "S"]
    triples = []
    for fusion in mentions:
        if fusion.type != "F" or fusion.length() != 2:
            continue
        chars = (fusion.start, fusion.start + 1)
        scored = []
        for ci, c in enumerate(chars):
            for si, sep in enumerate(seps):
                cols = range(sep.start, sep.end + 1)
                score = float(np.mean([(pair_probs[c, j] + pair_probs[j, c]) / 2.0
                                       for j in cols]))
                scored.append((score, ci, si))
        scored.sort(key=lambda s: (-s[0], s[1], s[2]))
        assigned: dict[int, int] = {}
        used = set()
        for score, ci, si in scored:
            if score <= threshold or ci in assigned or si in used:
                continue
            assigned[ci] = si
            used.add(si)
        if len(assigned) < 2:
            continue
        sep1, sep2 = seps[assigned[0]], seps[assigned[1]]
        if text is not None and (text[sep1.start:sep1.end + 1]
                                 == text[sep2.start:sep2.end + 1]):
            continue
        triples.append(Triple(fusion.span(), sep1.span(), sep2.span()))
    return triples


def predict_instance(model: Model, text: str, pid: str) -> Prediction:
    tape = Tape(train=False)
    h = encode_instance(model, text, pid, tape)
    scores = emissions(h, model.params, tape)
    trans = _transitions(model, tape)
    tags = viterbi(scores, trans)
    mentions = [Mention(start, end, kind)
                for (start, end), kind in decode_mentions(tags)]
    z = fuse(h, tags, model.params, tape)
    probs = pair_probabilities(pair_scores(z, model.params, tape))
    triples = assemble_triples(mentions, probs,
                               threshold=model.config.threshold, text=text)
    return Prediction(id=pid, mentions=mentions, triples=triples)


def predict_corpus(model: Model, instances: list[Instance]) -> list[Prediction]:
    return [predict_instance(model, inst.text, inst.id) for inst in instances]


# -- checkpoint directories -------------------------------------------------------


def save_model(model: Model, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    save_checkpoint(os.path.join(out_dir, "params.bin"), model.params)
    save_config(model.config, os.path.join(out_dir, "config.json"))
    with open(os.path.join(out_dir, "vocab.json"), "w", encoding="utf-8") as f:
        json.dump(model.vocab, f, ensure_ascii=False, sort_keys=True)
    meta = {"base_width": model.base_width}
    with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f)
    if model.lexicon is not None:
        with open(os.path.join(out_dir, "lexicon.json"), "w",
                  encoding="utf-8") as f:
            json.dump(model.lexicon.to_dict(), f, ensure_ascii=False)


def load_model(out_dir) -> Model:
    with open(os.path.join(out_dir, "config.json"), encoding="utf-8") as f:
        config = config_from_dict(json.load(f))
    params = load_checkpoint(os.path.join(out_dir, "params.bin"))
    with open(os.path.join(out_dir, "vocab.json"), encoding="utf-8") as f:
        vocab = json.load(f)
    with open(os.path.join(out_dir, "meta.json"), encoding="utf-8") as f:
        base_width = json.load(f)["base_width"]
    lexicon = None
    lex_path = os.path.join(out_dir, "lexicon.json")
    if os.path.exists(lex_path):
        with open(lex_path, encoding="utf-8") as f:
            lexicon = lexicon_from_dict(json.load(f))
    embeddings = None
    if config.encoder_mode == "external":
        embeddings = read_embeddings(config.embeddings_path)
    return Model(config=config, params=params, vocab=vocab, lexicon=lexicon,
                 embeddings=embeddings, base_width=base_width)
