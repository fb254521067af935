import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from speechdisturb.corpus import Group, Participant, Response, TranscriptCorpus
from speechdisturb.embeddings import (
    EmbeddingTable,
    VectorFileError,
    cosine,
    coverage,
    load_vectors,
    lookup,
    weighted_centroid,
)

from helpers import tok


def test_load_with_header():
    table = load_vectors("2 2\na 1 0\nb 0 1\n")
    assert table.dim == 2
    assert set(table.words()) == {"a", "b"}
    np.testing.assert_array_equal(lookup(table, "b"), [0.0, 1.0])


def test_load_without_header_infers_dim():
    table = load_vectors("a 1 2 3 \nb 4 5 6 \n")
    assert table.dim == 3 and len(table) == 2


def test_empty_stream_is_error():
    with pytest.raises(VectorFileError):
        load_vectors("")


def test_arity_mismatch_names_line():
    with pytest.raises(VectorFileError, match="line 3"):
        load_vectors("2 2\na 1 0\nc 1 2 3\n")


def test_non_numeric_component():
    with pytest.raises(VectorFileError, match="non-numeric"):
        load_vectors("a 1 x\n")


def test_duplicates_keep_first():
    table = load_vectors("a 1 0\na 0 1\n")
    np.testing.assert_array_equal(table.get("a"), [1.0, 0.0])
    assert len(table) == 1


def test_vocab_restriction():
    table = load_vectors("a 1 0\nb 0 1\n", vocab={"b"})
    assert table.words() == ["b"]


def test_lookup_exact_only():
    table = load_vectors("kinor 1 0\n")
    assert lookup(table, "zzz") is None
    assert lookup(table, "hakinor") is None
    assert lookup(table, "kinor") is not None


def test_table_is_read_only():
    table = load_vectors("a 1 0\n")
    with pytest.raises(ValueError):
        table.matrix[0, 0] = 5.0


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=6))
def test_load_returns_exact_values(values):
    text = "w " + " ".join(repr(v) for v in values) + "\n"
    assert load_vectors(text).get("w").tolist() == values


def test_cosine_examples():
    assert cosine([3.0, 4.0], [3.0, 4.0]) == pytest.approx(1.0)
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([1, 1], [1, 0]) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    with pytest.raises(ValueError):
        cosine([0, 0], [1, 0])


vec = arrays(np.float64, 5, elements=st.floats(-100, 100, allow_nan=False))


@given(vec, vec, st.floats(0.01, 100))
def test_cosine_properties(a, b, alpha):
    assume(np.linalg.norm(a) > 1e-3 and np.linalg.norm(b) > 1e-3)
    c = cosine(a, b)
    assert abs(c) <= 1 + 1e-9
    assert c == pytest.approx(cosine(b, a), abs=1e-12)
    assert cosine(alpha * a, b) == pytest.approx(c, abs=1e-9)


def _corpus(forms):
    r = Response("p", "q1", (tuple(tok(i, f) for i, f in enumerate(forms, start=1)),))
    return TranscriptCorpus((Participant("p", Group.CONTROL, (r,)),))


def test_coverage():
    assert coverage(load_vectors("a 1\nb 1\n"), _corpus(["a", "b", "a"])) == 1.0
    assert coverage(load_vectors("a 1\n"), _corpus(["a", "b", "b"])) == 0.5
    assert coverage(load_vectors("a 1\n"), TranscriptCorpus()) == 1.0


def test_weighted_centroid_examples():
    np.testing.assert_allclose(weighted_centroid([([2.0, 5.0], 0.3)]), [2.0, 5.0])
    np.testing.assert_allclose(weighted_centroid([([1, 0], 1.0), ([0, 1], 2.0)]), [1 / 3, 2 / 3])
    np.testing.assert_allclose(weighted_centroid([([1.5, -2.0], 1.0)] * 4), [1.5, -2.0])
    with pytest.raises(ValueError):
        weighted_centroid([])
    with pytest.raises(ValueError):
        weighted_centroid([([1, 0], 0.0)])


@given(
    st.lists(st.tuples(vec, st.floats(0.0, 10.0)), min_size=1, max_size=6),
    st.floats(0.01, 100),
)
def test_weighted_centroid_scale_invariant(items, scale):
    assume(sum(w for _, w in items) > 1e-3)
    np.testing.assert_allclose(
        weighted_centroid([(v, w * scale) for v, w in items]), weighted_centroid(items), rtol=1e-9, atol=1e-9
    )


def test_from_dict_round_trip():
    table = EmbeddingTable.from_dict({"x": [1.0, 2.0]})
    assert table.dim == 2 and "x" in table and "y" not in table


def test_load_vectors_accepts_path(tmp_path):
    path = tmp_path / "v.vec"
    path.write_text("2 2\na 1 0\nb 0 1\n", encoding="utf-8")
    table = load_vectors(path)
    assert table.words() == ["a", "b"] and table.dim == 2
