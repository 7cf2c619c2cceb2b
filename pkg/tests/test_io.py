import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from greedyls.io import format_matrix, parse_matrix, read_vector, write_matrix


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_round_trip_exact(A):
    assert np.array_equal(parse_matrix(format_matrix(A)), A)


@pytest.mark.parametrize("text", ["", "2\n1 2\n", "2 2\n1 2\n", "1 2\n1 2 3\n", "1 1\nnan\n"])
def test_malformed(text):
    with pytest.raises(ValueError):
        parse_matrix(text)


def test_vector_files(tmp_path):
    f = tmp_path / "v.txt"
    write_matrix(f, np.array([1.0, 2.0, 3.0]))
    assert f.read_text().splitlines()[0] == "3 1"
    assert np.array_equal(read_vector(f), [1.0, 2.0, 3.0])
    f.write_text("1 3\n1 2 3\n")
    assert np.array_equal(read_vector(f), [1.0, 2.0, 3.0])
    write_matrix(f, np.eye(2))
    with pytest.raises(ValueError):
        read_vector(f)
