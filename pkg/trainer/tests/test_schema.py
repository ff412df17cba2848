import json

import numpy as np
import pytest

from reftrainer.errors import SchemaError
from reftrainer.schema import IGNORE_INDEX, Example, read_stream, read_streams
from toyutil import dictionary_stub, emit_bt, make_engine, tokenize_pairs

from reftrainer.toylang import make_pairs


def record(**overrides) -> dict:
    base = {
        "objective": "dae",
        "input_tokens": [5, 70, 71],
        "target": [70, 71, 72],
        "source_language": "toya",
        "target_language": "toya",
        "doc_id": "d0",
        "epoch": 1,
    }
    base.update(overrides)
    return base


class TestParse:
    def test_full_record(self):
        ex = Example.parse(record())
        assert ex.objective == "dae"
        assert ex.input_tokens == [5, 70, 71]
        assert ex.target == [70, 71, 72]
        assert ex.source_language == ex.target_language == "toya"
        assert ex.doc_id == "d0"
        assert ex.epoch == 1
        assert not ex.is_aligned

    def test_optional_fields_default(self):
        rec = record()
        del rec["doc_id"], rec["epoch"]
        ex = Example.parse(rec)
        assert ex.doc_id == ""
        assert ex.epoch == 0

    def test_aligned_allows_ignore_index(self):
        ex = Example.parse(
            record(objective="mlm", input_tokens=[70, 1, 72],
                   target=[IGNORE_INDEX, 71, IGNORE_INDEX])
        )
        assert ex.is_aligned
        assert ex.target[0] == IGNORE_INDEX

    @pytest.mark.parametrize(
        "bad",
        [
            [1, 2],
            record(objective="translate"),
            record(objective=None),
            {"objective": "dae"},
            record(source_language=""),
            record(target_language=7),
            record(input_tokens="abc"),
            record(input_tokens=[1.5, 2]),
            record(input_tokens=[True, 2]),
            record(input_tokens=[-3]),
            record(target=[70, -1]),
            record(objective="mlm", input_tokens=[1, 2], target=[IGNORE_INDEX]),
            record(objective="mlm", target=[1, 2, -99]),
            record(objective="dae", target=[IGNORE_INDEX, 70, 71]),
            record(doc_id=4),
            record(epoch="two"),
            record(epoch=True),
        ],
        ids=[
            "not-an-object",
            "unknown-objective",
            "null-objective",
            "missing-tokens",
            "empty-language",
            "non-string-language",
            "string-tokens",
            "float-token",
            "bool-token",
            "negative-input-id",
            "negative-target-id",
            "aligned-length-mismatch",
            "aligned-bad-negative",
            "ignore-in-seq2seq-target",
            "non-string-doc-id",
            "non-int-epoch",
            "bool-epoch",
        ],
    )
    def test_rejected(self, bad):
        with pytest.raises(SchemaError):
            Example.parse(bad)

    def test_where_appears_in_message(self):
        with pytest.raises(SchemaError) as err:
            Example.parse(record(objective="nope"), where="stream.jsonl:7")
        assert "stream.jsonl:7" in str(err.value)


class TestEngineEmitted:
    """Records the engine writes parse cleanly and keep their content."""

    def test_noise_and_bt_records(self, forge_vocab):
        pairs = make_pairs(12, seed=9)
        docs_a, docs_b = tokenize_pairs(forge_vocab, pairs)
        engine = make_engine(forge_vocab, docs_a, docs_b)
        rng = np.random.default_rng(0)
        emitted = [engine.mlm(docs_a[0], rng), engine.dae(docs_a[1], 0, rng)]
        emitted.extend(emit_bt(docs_a, docs_b, dictionary_stub(forge_vocab), forge_vocab))
        for source in emitted:
            ex = Example.parse(source.to_json())
            assert ex.objective == source.objective
            assert ex.input_tokens == list(source.input_tokens)
            assert ex.target == list(source.target)
            assert ex.source_language == source.source_language
            assert ex.target_language == source.target_language
            assert ex.doc_id == source.doc_id


class TestStreams:
    def test_read_stream(self, tmp_path):
        path = tmp_path / "s.jsonl"
        rows = [record(doc_id=f"d{i}") for i in range(3)]
        path.write_text(
            "\n".join([json.dumps(rows[0]), "", json.dumps(rows[1]), json.dumps(rows[2]), ""])
            + "\n",
            encoding="utf-8",
        )
        examples = read_stream(path)
        assert [ex.doc_id for ex in examples] == ["d0", "d1", "d2"]

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "s.jsonl"
        path.write_text(json.dumps(record()) + "\n{oops\n", encoding="utf-8")
        with pytest.raises(SchemaError) as err:
            read_stream(path)
        assert f"{path}:2" in str(err.value)

    def test_bad_record_names_line(self, tmp_path):
        path = tmp_path / "s.jsonl"
        path.write_text(json.dumps(record(objective="zap")) + "\n", encoding="utf-8")
        with pytest.raises(SchemaError) as err:
            read_stream(path)
        assert f"{path}:1" in str(err.value)

    def test_read_streams_concatenates(self, tmp_path):
        one = tmp_path / "one.jsonl"
        two = tmp_path / "two.jsonl"
        one.write_text(json.dumps(record(doc_id="x")) + "\n", encoding="utf-8")
        two.write_text(json.dumps(record(doc_id="y")) + "\n", encoding="utf-8")
        assert [ex.doc_id for ex in read_streams([one, two])] == ["x", "y"]
