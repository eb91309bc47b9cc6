"""End-to-end command-line runs on temporary files."""

import dataclasses
import json

import pytest

from lexfusion.cli import main
from lexfusion.config import TrainConfig, save_config
from lexfusion.corpus import parse_corpus, serialize_corpus
from lexfusion.evaluation import parse_predictions
from lexfusion.synthetic import make_borrow_corpus

TINY = TrainConfig(d_emb=12, d_h=12, epochs=2, dropout=0.0, tag_dim=6,
                   lr=0.003, seed=3)


@pytest.fixture
def workdir(tmp_path):
    corpus, _ = make_borrow_corpus(3, 8, seed=0)
    corpus_path = tmp_path / "corpus.jsonl"
    serialize_corpus(corpus, corpus_path)
    config_path = tmp_path / "config.json"
    save_config(TINY, config_path)
    return tmp_path, corpus, corpus_path, config_path


class TestBuildCorpus:
    def seeds(self, tmp_path, rows):
        path = tmp_path / "seeds.tsv"
        path.write_text("".join(f"{a}\t{b}\t{c}\n" for a, b, c in rows),
                        encoding="utf-8")
        return path

    def raw(self, tmp_path, rows):
        path = tmp_path / "raw.tsv"
        path.write_text("".join(f"{i}\t{t}\n" for i, t in rows),
                        encoding="utf-8")
        return path

    def test_builds_matching_paragraphs(self, tmp_path):
        seeds = self.seeds(tmp_path, [("停车", "停放", "车辆"),
                                      ("降息", "下调", "利率")])
        raw = self.raw(tmp_path, [
            ("p1", "小区停车难，停放车辆的地方太少。"),
            ("p2", "央行下调利率，降息十分明显。"),
            ("p3", "下调利率的传闻没有下文。"),  # two of three words
        ])
        out = tmp_path / "built.jsonl"
        assert main(["build-corpus", "--seeds", str(seeds), "--raw", str(raw),
                     "--out", str(out)]) == 0
        built = parse_corpus(out)
        assert [inst.id for inst in built] == ["p1", "p2"]
        assert all(len(inst.triples()) == 1 for inst in built)

    def test_lexicon_filter_drops_invalid(self, tmp_path, mini_lexicon_path,
                                          capsys):
        seeds = self.seeds(tmp_path, [("北大", "北京", "大学"),
                                      ("降息", "下调", "利率")])
        raw = self.raw(tmp_path, [
            ("p1", "他考上北京大学，北大是他的梦想。"),
            ("p2", "央行下调利率，降息十分明显。"),
        ])
        out = tmp_path / "built.jsonl"
        assert main(["build-corpus", "--seeds", str(seeds), "--raw", str(raw),
                     "--lexicon", str(mini_lexicon_path),
                     "--out", str(out)]) == 0
        assert [inst.id for inst in parse_corpus(out)] == ["p2"]
        assert "independence" in capsys.readouterr().err


class TestTrainPredictEval:
    def test_full_chain(self, workdir, capsys):
        tmp_path, corpus, corpus_path, config_path = workdir
        model_dir = tmp_path / "model"
        assert main(["train", "--corpus", str(corpus_path),
                     "--config", str(config_path),
                     "--out", str(model_dir)]) == 0
        for name in ("params.bin", "config.json", "vocab.json", "meta.json",
                     "history.json"):
            assert (model_dir / name).exists()
        history = json.loads((model_dir / "history.json").read_text())
        assert len(history) == TINY.epochs
        assert "epoch 2" in capsys.readouterr().err

        pred_path = tmp_path / "pred.jsonl"
        assert main(["predict", "--model", str(model_dir),
                     "--input", str(corpus_path),
                     "--out", str(pred_path)]) == 0
        predictions = parse_predictions(pred_path)
        assert [p.id for p in predictions] == [inst.id for inst in corpus]

        report_path = tmp_path / "report.json"
        assert main(["eval", "--pred", str(pred_path),
                     "--gold", str(corpus_path),
                     "--train-vocab", str(corpus_path),
                     "--report", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert set(report) == {"mention", "fine_grained", "triple",
                               "breakdown"}
        assert 0.0 <= report["triple"]["f1"] <= 1.0
        assert set(report["breakdown"]) == {"vocab_pair", "link_type",
                                            "order", "distance"}
        assert "triple P" in capsys.readouterr().out

    def test_eval_without_vocab_omits_breakdown(self, workdir):
        tmp_path, corpus, corpus_path, config_path = workdir
        pred_path = tmp_path / "pred.jsonl"
        pred_path.write_text(
            "".join(json.dumps({"id": inst.id, "mentions": [], "triples": []})
                    + "\n" for inst in corpus), encoding="utf-8")
        report_path = tmp_path / "report.json"
        assert main(["eval", "--pred", str(pred_path),
                     "--gold", str(corpus_path),
                     "--report", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert "breakdown" not in report
        assert report["triple"]["f1"] == 0.0

    def test_predict_accepts_raw_paragraphs(self, workdir):
        tmp_path, corpus, corpus_path, config_path = workdir
        model_dir = tmp_path / "model"
        main(["train", "--corpus", str(corpus_path),
              "--config", str(config_path), "--out", str(model_dir)])
        raw_path = tmp_path / "raw_input.tsv"
        raw_path.write_text(f"r1\t{corpus[0].text}\n", encoding="utf-8")
        pred_path = tmp_path / "raw_pred.jsonl"
        assert main(["predict", "--model", str(model_dir),
                     "--input", str(raw_path),
                     "--out", str(pred_path)]) == 0
        assert [p.id for p in parse_predictions(pred_path)] == ["r1"]

    def test_dev_logging(self, workdir, capsys):
        tmp_path, corpus, corpus_path, config_path = workdir
        save_config(dataclasses.replace(TINY, epochs=1), config_path)
        model_dir = tmp_path / "model_dev"
        assert main(["train", "--corpus", str(corpus_path),
                     "--dev", str(corpus_path),
                     "--config", str(config_path),
                     "--out", str(model_dir)]) == 0
        assert "dev triple F" in capsys.readouterr().err
        history = json.loads((model_dir / "history.json").read_text())
        assert "dev_triple_f" in history[0]


class TestErrors:
    def test_missing_file_is_reported(self, tmp_path, capsys):
        assert main(["eval", "--pred", str(tmp_path / "nope.jsonl"),
                     "--gold", str(tmp_path / "nope.jsonl"),
                     "--report", str(tmp_path / "r.json")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_config_is_reported(self, tmp_path, capsys):
        corpus, _ = make_borrow_corpus(1, 1, seed=0)
        corpus_path = tmp_path / "c.jsonl"
        serialize_corpus(corpus, corpus_path)
        config_path = tmp_path / "bad.json"
        config_path.write_text('{"alpha": -1.0}', encoding="utf-8")
        assert main(["train", "--corpus", str(corpus_path),
                     "--config", str(config_path),
                     "--out", str(tmp_path / "m")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_subcommand_exits(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])
