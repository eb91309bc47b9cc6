"""Command-line entry points.

Subcommands: ``train`` fits a model and writes a model directory;
``predict`` labels paragraphs with a trained model; ``eval`` scores a
prediction file against gold and writes a JSON report; ``build-corpus``
turns seed triples plus raw paragraphs into a pseudo-labeled corpus.
"""

from __future__ import annotations

import argparse
import json
import sys

from lexfusion.config import ConfigError, TrainConfig, load_config
from lexfusion.corpus import (CorpusError, Instance, build_pseudo_corpus,
                              parse_corpus, parse_raw_paragraphs, parse_seeds,
                              serialize_corpus, validate_lexical_fusion)
from lexfusion.encoder import EncoderError
from lexfusion.evaluation import (breakdown, evaluate, fusion_vocabulary,
                                  parse_predictions, serialize_predictions)
from lexfusion.numerics import NumericsError
from lexfusion.pipeline import (TrainingError, load_model, predict_corpus,
                                save_model, train)
from lexfusion.sememes import load_lexicon


def _read_paragraphs(path) -> list[Instance]:
    """Corpus JSONL, or plain "id<TAB>text" lines, as unlabeled instances."""
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                first = line.lstrip()[0]
                break
        else:
            return []
    if first == "{":
        return parse_corpus(path)
    return [Instance(pid, text, [], [])
            for pid, text in parse_raw_paragraphs(path)]


def cmd_train(args) -> int:
    corpus = parse_corpus(args.corpus)
    dev = parse_corpus(args.dev) if args.dev else None
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    config = load_config(args.config) if args.config else TrainConfig()

    def log(entry: dict) -> None:
        line = f"epoch {entry['epoch']}: loss {entry['train_loss']:.4f}"
        if "dev_triple_f" in entry:
            line += f", dev triple F {entry['dev_triple_f']:.4f}"
        print(line, file=sys.stderr)

    model, history = train(corpus, lexicon, config, dev=dev, log=log)
    save_model(model, args.out)
    with open(f"{args.out}/history.json", "w", encoding="utf-8") as f:
        json.dump(history, f, indent=2)
    print(f"saved model to {args.out} after {len(history)} epochs",
          file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    instances = _read_paragraphs(args.input)
    predictions = predict_corpus(model, instances)
    serialize_predictions(predictions, args.out)
    n_triples = sum(len(p.triples) for p in predictions)
    print(f"wrote {len(predictions)} predictions ({n_triples} triples) "
          f"to {args.out}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    predictions = parse_predictions(args.pred)
    gold = parse_corpus(args.gold)
    report = evaluate(predictions, gold)
    obj = report.to_dict()
    if args.train_vocab:
        vocab = fusion_vocabulary(parse_corpus(args.train_vocab))
        obj["breakdown"] = breakdown(predictions, gold, vocab)
    with open(args.report, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, ensure_ascii=False)
    t = report.triple
    print(f"triple P {t.precision:.4f} R {t.recall:.4f} F {t.f1:.4f}")
    return 0


def cmd_build_corpus(args) -> int:
    seeds = parse_seeds(args.seeds)
    paragraphs = parse_raw_paragraphs(args.raw)
    instances = build_pseudo_corpus(seeds, paragraphs)
    if args.lexicon:
        lexicon = load_lexicon(args.lexicon)
        kept = []
        for inst in instances:
            violations = [v for t in inst.triples()
                          for v in validate_lexical_fusion(t, inst, lexicon)]
            if violations:
                print(f"dropping {inst.id}: {'; '.join(violations)}",
                      file=sys.stderr)
            else:
                kept.append(inst)
        instances = kept
    serialize_corpus(instances, args.out)
    print(f"built {len(instances)} instances from {len(paragraphs)} "
          f"paragraphs and {len(seeds)} seeds", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexfusion",
        description="Chinese lexical fusion recognition")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a labeled corpus")
    p.add_argument("--corpus", required=True, help="training corpus JSONL")
    p.add_argument("--dev", help="development corpus JSONL")
    p.add_argument("--lexicon", help="sememe lexicon JSON")
    p.add_argument("--config", help="training configuration JSON")
    p.add_argument("--out", required=True, help="model output directory")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="label paragraphs with a trained model")
    p.add_argument("--model", required=True, help="model directory")
    p.add_argument("--input", required=True,
                   help="corpus JSONL or id<TAB>text lines")
    p.add_argument("--out", required=True, help="prediction JSONL output")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--pred", required=True, help="prediction JSONL")
    p.add_argument("--gold", required=True, help="gold corpus JSONL")
    p.add_argument("--train-vocab", dest="train_vocab",
                   help="training corpus JSONL defining the IV fusion "
                        "vocabulary; enables breakdown tables")
    p.add_argument("--report", required=True, help="JSON report output")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("build-corpus",
                       help="build a pseudo-labeled corpus from seeds")
    p.add_argument("--seeds", required=True,
                   help="tab-separated seed triples, one per line")
    p.add_argument("--raw", required=True, help="id<TAB>text paragraphs")
    p.add_argument("--lexicon",
                   help="sememe lexicon JSON; drops instances whose triples "
                        "violate the validity rules")
    p.add_argument("--out", required=True, help="corpus JSONL output")
    p.set_defaults(fn=cmd_build_corpus)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CorpusError, ConfigError, TrainingError, EncoderError,
            NumericsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
