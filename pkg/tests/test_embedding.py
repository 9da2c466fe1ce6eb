import sys
import textwrap

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synqa.datamodel import ColumnType, from_records, join_context, ContextJoin
from synqa.embedding import (
    DIM,
    EmbeddingMatrix,
    EncoderError,
    EncoderSpec,
    embed,
    format_value,
    serialize_dataset,
    serialize_record,
)


def test_flat_record_string():
    assert serialize_record(["1", "x"]) == "1;x"


def test_missing_is_empty_token():
    ds = from_records({"a": [None], "b": ["x"]}, kinds={"a": "numeric", "b": "categorical"})
    assert serialize_dataset(ds) == [";x"]


def test_sequence_concatenates_steps():
    assert serialize_record([["1", "2"], ["3", "4"]]) == "1;2;3;4"
    ds = from_records({"sid": ["u", "u"], "a": [1, 3], "b": [2, 4]}, sequence_key="sid")
    assert serialize_dataset(ds) == ["1;2;3;4"]


def test_truncation():
    assert serialize_record(["abc", "def"], truncation_limit=5) == "abc;d"


def test_context_leads_once():
    tgt = from_records({"uid": [1, 1], "v": [5, 6]}, sequence_key="uid")
    ctx = from_records({"id": [1], "seg": ["A"]}, kinds={"seg": "categorical"})
    joined = join_context(tgt, ctx, ContextJoin("id", "uid"))
    assert serialize_dataset(joined) == ["A;5;6"]


def test_value_formatting():
    assert format_value(3.0, ColumnType.NUMERIC) == "3"
    assert format_value(0.1, ColumnType.NUMERIC) == "0.1"
    assert format_value(1609459200000.0, ColumnType.DATETIME) == "2021-01-01"
    assert format_value("a\nb", ColumnType.TEXT) == "a b"


def test_deterministic_and_unit_norm():
    m = embed(["hello;1", "hello;1", "other;2"])
    assert np.array_equal(m.data[0], m.data[1])
    np.testing.assert_allclose(np.linalg.norm(m.data, axis=1), 1.0, atol=1e-9)
    assert m.data.shape == (3, DIM)


def _trigram_set(s):
    p = "\x02" + s + "\x03"
    return {p[i : i + 3] for i in range(len(p) - 2)}


def test_distinct_strings_are_not_collinear():
    # the two strings share no padded trigram, so only hash collisions could align them
    assert not (_trigram_set("aaa") & _trigram_set("zzz"))
    m = embed(["aaa", "zzz"])
    assert float(m.data[0] @ m.data[1]) < 0.99


def test_empty_string_is_flagged():
    m = embed(["", "x"])
    assert m.flagged_rows == [0]
    assert m.data[0].tolist() == [1.0] + [0.0] * (DIM - 1)


def test_matrix_validation():
    with pytest.raises(EncoderError):
        EmbeddingMatrix(np.zeros((2, 3)), "trn")
    with pytest.raises(EncoderError):
        EmbeddingMatrix(np.full((1, DIM), np.nan), "trn")


def test_spec_parsing():
    assert EncoderSpec.parse("hashing") == EncoderSpec()
    spec = EncoderSpec.parse("external:python enc.py")
    assert spec.command == "python enc.py" and str(spec) == "external:python enc.py"
    with pytest.raises(EncoderError):
        EncoderSpec.parse("bert")


def _script(tmp_path, body):
    p = tmp_path / "enc.py"
    p.write_text(textwrap.dedent(body))
    return EncoderSpec("external", f"{sys.executable} {p}")


def test_external_encoder(tmp_path):
    spec = _script(
        tmp_path,
        f"""
        import sys
        for line in sys.stdin:
            v = [0.0] * {DIM}
            v[len(line.rstrip(chr(10))) % {DIM}] = 2.0
            print(" ".join(map(str, v)))
        """,
    )
    m = embed(["ab", "abc"], spec)
    assert m.data[0, 2] == 1.0 and m.data[1, 3] == 1.0


def test_external_wrong_dimension(tmp_path):
    spec = _script(tmp_path, "import sys\nfor _ in sys.stdin: print('1 2 3')\n")
    with pytest.raises(EncoderError, match="expected 384"):
        embed(["a"], spec)


def test_external_failure(tmp_path):
    spec = _script(tmp_path, "import sys\nsys.exit(3)\n")
    with pytest.raises(EncoderError, match="exited with 3"):
        embed(["a"], spec)


@given(st.lists(st.text(min_size=1, max_size=30), min_size=1, max_size=10))
def test_nonempty_strings_have_unit_norm(strings):
    m = embed(strings)
    np.testing.assert_allclose(np.linalg.norm(m.data, axis=1), 1.0, atol=1e-9)
    assert np.array_equal(m.data, embed(list(strings)).data)
