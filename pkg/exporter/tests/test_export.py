"""Exporter behavior against a tiny from-scratch encoder (no downloads)."""

import json
import warnings

import numpy as np
import pytest
import torch
from transformers import (
    AutoModel,
    AutoTokenizer,
    BertConfig,
    BertForSequenceClassification,
    BertModel,
    BertTokenizer,
)

from encexport.cli import main
from encexport.export import (
    ExportSpec,
    export_embeddings,
    export_predictions,
    read_corpus,
)

VOCAB = [
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "[MASK]",
    "alpha",
    "beta",
    "gamma",
    "delta",
    "common",
    "zeta",
]

HIDDEN = 16
MODEL_LIMIT = 32


def _tiny_config(**overrides):
    fields = dict(
        vocab_size=len(VOCAB),
        hidden_size=HIDDEN,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=MODEL_LIMIT,
    )
    fields.update(overrides)
    return BertConfig(**fields)


def _save_tokenizer(root):
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n")
    BertTokenizer(str(vocab_file)).save_pretrained(root)


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory):
    torch.manual_seed(0)
    root = tmp_path_factory.mktemp("tiny-encoder")
    BertModel(_tiny_config()).save_pretrained(root)
    _save_tokenizer(root)
    return str(root)


@pytest.fixture(scope="session")
def binary_clf_dir(tmp_path_factory):
    torch.manual_seed(1)
    root = tmp_path_factory.mktemp("tiny-binary-clf")
    BertForSequenceClassification(_tiny_config(num_labels=2)).save_pretrained(root)
    _save_tokenizer(root)
    return str(root)


@pytest.fixture(scope="session")
def multiway_clf_dir(tmp_path_factory):
    torch.manual_seed(2)
    root = tmp_path_factory.mktemp("tiny-multiway-clf")
    BertForSequenceClassification(_tiny_config(num_labels=6)).save_pretrained(root)
    _save_tokenizer(root)
    return str(root)


def _write_corpus(rows, path):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def _smoke_rows(n=10):
    words = ["alpha", "beta", "gamma", "delta", "common", "zeta"]
    return [
        {"id": f"s{k}", "text": " ".join(words[k % len(words) :] + words[: k % 3])}
        for k in range(n)
    ]


@pytest.fixture()
def smoke_corpus(tmp_path):
    path = tmp_path / "smoke.jsonl"
    _write_corpus(_smoke_rows(), path)
    return path


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


class TestExportSpec:
    def test_defaults(self):
        spec = ExportSpec(model="m")
        assert spec.pooling == "mean"
        assert spec.max_length == 512

    def test_validation(self):
        with pytest.raises(ValueError, match="pooling"):
            ExportSpec(model="m", pooling="max")
        with pytest.raises(ValueError, match="output"):
            ExportSpec(model="m", output="logits")
        with pytest.raises(ValueError, match="batch_size"):
            ExportSpec(model="m", batch_size=0)
        with pytest.raises(ValueError, match="max_length"):
            ExportSpec(model="m", max_length=0)


class TestReadCorpus:
    def test_coerces_integer_ids(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_corpus([{"id": 7, "text": "alpha"}], path)
        assert read_corpus(path) == [("7", "alpha")]

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_corpus([{"id": "a", "text": "x"}, {"id": "a", "text": "y"}], path)
        with pytest.raises(ValueError, match="duplicate"):
            read_corpus(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a", "text": "x"}\n{broken\n')
        with pytest.raises(ValueError, match="line 2"):
            read_corpus(path)


class TestEmbeddings:
    def test_header_and_shapes(self, encoder_dir, tmp_path):
        corpus = tmp_path / "c.jsonl"
        _write_corpus(
            [
                {"id": "a", "text": "alpha beta common"},
                {"id": "b", "text": "gamma"},
                {"id": "c", "text": "delta delta zeta"},
            ],
            corpus,
        )
        out = tmp_path / "emb.jsonl"
        export_embeddings(corpus, ExportSpec(model=encoder_dir, max_length=16), out)
        lines = _read_lines(out)
        assert len(lines) == 4
        assert lines[0]["_meta"] == {
            "model": encoder_dir,
            "pooling": "mean",
            "dim": HIDDEN,
        }
        assert [row["id"] for row in lines[1:]] == ["a", "b", "c"]
        assert all(len(row["vector"]) == HIDDEN for row in lines[1:])

    def test_reruns_are_byte_identical(self, encoder_dir, smoke_corpus, tmp_path):
        spec = ExportSpec(model=encoder_dir, max_length=16, batch_size=3)
        first, second = tmp_path / "e1.jsonl", tmp_path / "e2.jsonl"
        export_embeddings(smoke_corpus, spec, first)
        export_embeddings(smoke_corpus, spec, second)
        assert first.read_bytes() == second.read_bytes()

    def test_empty_text_is_embedded(self, encoder_dir, tmp_path):
        corpus = tmp_path / "c.jsonl"
        _write_corpus([{"id": "empty", "text": ""}], corpus)
        out = tmp_path / "emb.jsonl"
        export_embeddings(corpus, ExportSpec(model=encoder_dir, max_length=16), out)
        row = _read_lines(out)[1]
        assert row["id"] == "empty"
        assert np.isfinite(row["vector"]).all()

    def test_overlong_text_warns_and_truncates(self, encoder_dir, tmp_path):
        corpus = tmp_path / "c.jsonl"
        _write_corpus([{"id": "long", "text": "alpha " * 50}], corpus)
        out = tmp_path / "emb.jsonl"
        with pytest.warns(UserWarning, match="truncated"):
            export_embeddings(corpus, ExportSpec(model=encoder_dir, max_length=8), out)
        assert len(_read_lines(out)) == 2

    def test_short_text_does_not_warn(self, encoder_dir, tmp_path):
        corpus = tmp_path / "c.jsonl"
        _write_corpus([{"id": "a", "text": "alpha beta"}], corpus)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            export_embeddings(
                corpus, ExportSpec(model=encoder_dir, max_length=16), tmp_path / "o"
            )

    def test_mean_pooling_matches_manual_average(self, encoder_dir, tmp_path):
        text = "alpha beta gamma common"
        corpus = tmp_path / "c.jsonl"
        _write_corpus([{"id": "a", "text": text}], corpus)
        out = tmp_path / "emb.jsonl"
        export_embeddings(
            corpus,
            ExportSpec(model=encoder_dir, max_length=16, batch_size=1),
            out,
        )
        exported = np.array(_read_lines(out)[1]["vector"])

        tokenizer = AutoTokenizer.from_pretrained(encoder_dir)
        model = AutoModel.from_pretrained(encoder_dir)
        model.eval()
        encoded = tokenizer(
            [text], padding=True, truncation=True, max_length=16, return_tensors="pt"
        )
        with torch.no_grad():
            hidden = model(**encoded).last_hidden_state
        mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
        manual = ((hidden * mask).sum(dim=1) / mask.sum(dim=1))[0].numpy()
        np.testing.assert_allclose(exported, manual, rtol=0, atol=1e-8)

    def test_cls_pooling_differs_from_mean(self, encoder_dir, tmp_path):
        corpus = tmp_path / "c.jsonl"
        _write_corpus([{"id": "a", "text": "alpha beta gamma"}], corpus)
        out_mean, out_cls = tmp_path / "m.jsonl", tmp_path / "k.jsonl"
        export_embeddings(
            corpus, ExportSpec(model=encoder_dir, max_length=16), out_mean
        )
        export_embeddings(
            corpus,
            ExportSpec(model=encoder_dir, max_length=16, pooling="cls"),
            out_cls,
        )
        assert _read_lines(out_cls)[0]["_meta"]["pooling"] == "cls"
        mean_vec = np.array(_read_lines(out_mean)[1]["vector"])
        cls_vec = np.array(_read_lines(out_cls)[1]["vector"])
        assert not np.allclose(mean_vec, cls_vec)

    def test_max_length_above_model_limit(self, encoder_dir, smoke_corpus, tmp_path):
        spec = ExportSpec(model=encoder_dir, max_length=MODEL_LIMIT * 2)
        with pytest.raises(ValueError, match="model limit"):
            export_embeddings(smoke_corpus, spec, tmp_path / "o")


class TestPredictions:
    def test_binary_rows_sum_to_one(self, binary_clf_dir, smoke_corpus, tmp_path):
        out = tmp_path / "p.jsonl"
        export_predictions(smoke_corpus, binary_clf_dir, out, max_length=16)
        rows = _read_lines(out)
        assert len(rows) == 10
        for row in rows:
            assert len(row["probs"]) == 2
            assert abs(sum(row["probs"]) - 1.0) <= 1e-6
            assert all(p >= 0 for p in row["probs"])

    def test_multiway_rows_have_six_classes(
        self, multiway_clf_dir, smoke_corpus, tmp_path
    ):
        out = tmp_path / "p.jsonl"
        export_predictions(smoke_corpus, multiway_clf_dir, out, max_length=16)
        assert all(len(row["probs"]) == 6 for row in _read_lines(out))

    def test_class_count_mismatch(self, binary_clf_dir, smoke_corpus, tmp_path):
        with pytest.raises(ValueError, match="class-count mismatch"):
            export_predictions(
                smoke_corpus, binary_clf_dir, tmp_path / "p", n_classes=6, max_length=16
            )

    def test_reruns_are_byte_identical(self, binary_clf_dir, smoke_corpus, tmp_path):
        first, second = tmp_path / "p1.jsonl", tmp_path / "p2.jsonl"
        export_predictions(smoke_corpus, binary_clf_dir, first, max_length=16)
        export_predictions(smoke_corpus, binary_clf_dir, second, max_length=16)
        assert first.read_bytes() == second.read_bytes()


class TestCli:
    def test_embeddings_command(self, encoder_dir, smoke_corpus, tmp_path):
        out = tmp_path / "emb.jsonl"
        code = main(
            [
                "embeddings",
                "--input",
                str(smoke_corpus),
                "--output",
                str(out),
                "--model",
                encoder_dir,
                "--max-length",
                "16",
            ]
        )
        assert code == 0
        assert len(_read_lines(out)) == 11

    def test_predictions_command_with_class_check(
        self, multiway_clf_dir, smoke_corpus, tmp_path
    ):
        out = tmp_path / "p.jsonl"
        code = main(
            [
                "predictions",
                "--input",
                str(smoke_corpus),
                "--output",
                str(out),
                "--model",
                multiway_clf_dir,
                "--classes",
                "6",
                "--max-length",
                "16",
            ]
        )
        assert code == 0

    def test_class_mismatch_exits_nonzero(
        self, binary_clf_dir, smoke_corpus, tmp_path, capsys
    ):
        code = main(
            [
                "predictions",
                "--input",
                str(smoke_corpus),
                "--output",
                str(tmp_path / "p"),
                "--model",
                binary_clf_dir,
                "--classes",
                "6",
                "--max-length",
                "16",
            ]
        )
        assert code != 0
        assert "class-count mismatch" in capsys.readouterr().err

    def test_missing_model_exits_nonzero(self, smoke_corpus, tmp_path):
        code = main(
            [
                "embeddings",
                "--input",
                str(smoke_corpus),
                "--output",
                str(tmp_path / "o"),
                "--model",
                str(tmp_path / "no-such-model"),
            ]
        )
        assert code != 0


class TestConsumerInterchange:
    """Exports must load cleanly through the detection toolkit's readers."""

    def test_embeddings_ingest(self, encoder_dir, smoke_corpus, tmp_path):
        features = pytest.importorskip("mgtkit.features")
        corpus_mod = pytest.importorskip("mgtkit.corpus")

        out = tmp_path / "emb.jsonl"
        export_embeddings(
            smoke_corpus, ExportSpec(model=encoder_dir, max_length=16), out
        )
        embeddings = features.load_embeddings(out)
        assert embeddings.dim == HIDDEN
        assert len(embeddings.vectors) == 10

        docs = tuple(
            corpus_mod.Document(id=row["id"], text=row["text"])
            for row in _smoke_rows()
        )
        corpus = corpus_mod.Corpus(
            documents=docs, scheme=corpus_mod.LabelScheme.BOUNDARY
        )
        matrix = features.featurize(corpus, embeddings)
        assert matrix.values.shape == (10, HIDDEN)

    def test_predictions_ingest(self, binary_clf_dir, smoke_corpus, tmp_path):
        ensemble = pytest.importorskip("mgtkit.ensemble")

        out = tmp_path / "p.jsonl"
        export_predictions(smoke_corpus, binary_clf_dir, out, max_length=16)
        loaded = ensemble.load_prediction_set(out, "encoder", "probs")
        assert len(loaded.values) == 10
        for probs in loaded.values.values():
            assert abs(sum(probs) - 1.0) <= 1e-6
