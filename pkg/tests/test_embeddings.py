import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from uml_lab.embeddings import format_embeddings, read_embeddings, write_embeddings
from uml_lab.errors import InvalidInput


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)),
              elements=st.floats(-1e300, 1e300, allow_nan=False)), st.booleans())
def test_roundtrip_is_exact(tmp_path_factory, E, with_labels):
    labels = np.arange(E.shape[0]) % 3 if with_labels else None
    path = write_embeddings(tmp_path_factory.mktemp("e") / "e.txt", E, labels)
    back, lab = read_embeddings(path)
    assert np.array_equal(back, E)
    assert (lab is None) == (labels is None)
    if labels is not None:
        assert lab.tolist() == labels.tolist()


def test_text_layout():
    text = format_embeddings([[0.5, -1.0]], [2])
    assert text == "uml-emb v1 1 2 1\n0.5 -1.0 2\n"


@pytest.mark.parametrize("content", [
    "",
    "uml-emb v2 1 1 0\n1.0\n",
    "uml-emb v1 2 1 0\n1.0\n",
    "uml-emb v1 1 2 0\n1.0\n",
    "uml-emb v1 1 1 1\n1.0 x\n",
    "uml-emb v1 1 1 0\nabc\n",
])
def test_malformed_files_rejected(tmp_path, content):
    p = tmp_path / "bad.txt"
    p.write_text(content)
    with pytest.raises(InvalidInput):
        read_embeddings(p)


def test_missing_file(tmp_path):
    with pytest.raises(InvalidInput):
        read_embeddings(tmp_path / "nope.txt")


def test_label_count_mismatch():
    with pytest.raises(InvalidInput):
        format_embeddings(np.zeros((3, 2)), [0, 1])
