"""Train on a generated pseudo-corpus until it is memorized.

Sanity experiment for the full pipeline: build a corpus through the
distant-supervision path, train the toy-encoder model with training-set
evaluation each epoch, and report when triple F crosses the target.

    python3 scripts/overfit_check.py --paragraphs 60 --target 0.95
"""

import argparse
import sys
import time

from lexfusion.config import TrainConfig
from lexfusion.evaluation import evaluate
from lexfusion.pipeline import predict_corpus, train
from lexfusion.synthetic import make_borrow_corpus


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed-triples", type=int, default=20)
    parser.add_argument("--paragraphs", type=int, default=60)
    parser.add_argument("--epochs", type=int, default=200)
    parser.add_argument("--lr", type=float, default=0.01)
    parser.add_argument("--d-h", type=int, default=32)
    parser.add_argument("--target", type=float, default=0.95)
    args = parser.parse_args(argv)

    corpus, seeds = make_borrow_corpus(args.seed_triples, args.paragraphs,
                                       seed=5)
    print(f"{len(corpus)} instances from {len(seeds)} seed triples")
    config = TrainConfig(d_emb=args.d_h, d_h=args.d_h, epochs=args.epochs,
                         lr=args.lr, dropout=0.0, seed=1,
                         early_stop_f=args.target)
    start = time.monotonic()
    model, history = train(
        corpus, None, config, dev=corpus,
        log=lambda e: print(f"epoch {e['epoch']}: loss {e['train_loss']:.4f}"
                            f", train triple F {e['dev_triple_f']:.3f}"))
    report = evaluate(predict_corpus(model, corpus), corpus)
    print(f"\nfinal train triple F {report.triple.f1:.3f} after "
          f"{len(history)} epochs ({time.monotonic() - start:.0f}s)")
    return 0 if report.triple.f1 >= args.target else 1


if __name__ == "__main__":
    sys.exit(main())
