import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sensorsel import InvalidMatrix, ParseError
from sensorsel.io import format_csv, format_dmat, load_matrix, parse_csv, parse_dmat, save_matrix


def test_csv_identity():
    np.testing.assert_array_equal(parse_csv("1,0\n0,1\n"), np.eye(2))


def test_csv_comments_and_blank_lines():
    a = parse_csv("# header\n1, 2\n\n# mid\n3,4\n")
    np.testing.assert_array_equal(a, [[1, 2], [3, 4]])


def test_csv_ragged_reports_line():
    with pytest.raises(ParseError) as exc:
        parse_csv("1,2\n3\n")
    assert exc.value.line == 2


def test_csv_bad_token_reports_line():
    with pytest.raises(ParseError) as exc:
        parse_csv("# c\n1,x\n")
    assert exc.value.line == 2


def test_csv_nonfinite():
    with pytest.raises(InvalidMatrix):
        parse_csv("1,nan\n")


def test_csv_empty():
    with pytest.raises(ParseError):
        parse_csv("# nothing\n")


def test_dmat_ex_a_output():
    data = b"DMAT\x01" + struct.pack("<II", 1, 2) + struct.pack("<2d", 2.0, 0.0)
    np.testing.assert_array_equal(parse_dmat(data), [[2.0, 0.0]])
    assert format_dmat(np.array([[2.0, 0.0]])) == data


@pytest.mark.parametrize(
    "data,offset",
    [
        (b"DMA", 3),
        (b"XMAT\x01" + struct.pack("<II", 1, 1) + b"\0" * 8, 0),
        (b"DMAT\x02" + struct.pack("<II", 1, 1) + b"\0" * 8, 4),
        (b"DMAT\x01" + struct.pack("<II", 2, 2) + b"\0" * 8, 13),
    ],
)
def test_dmat_malformed(data, offset):
    with pytest.raises(ParseError) as exc:
        parse_dmat(data)
    assert exc.value.offset == offset


def test_dmat_nonfinite():
    data = format_dmat(np.array([[1.0]]))[:-8] + struct.pack("<d", np.inf)
    with pytest.raises(InvalidMatrix):
        parse_dmat(data)


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.data())
def test_round_trip_bit_identical(rows, cols, data):
    a = data.draw(arrays(np.float64, (rows, cols), elements=finite))
    np.testing.assert_array_equal(parse_dmat(format_dmat(a)), a)
    np.testing.assert_array_equal(parse_csv(format_csv(a)), a)


@pytest.mark.parametrize("name", ["m.csv", "m.dmat"])
def test_save_load_files(tmp_path, name):
    a = np.random.default_rng(0).standard_normal((3, 4))
    path = tmp_path / name
    save_matrix(path, a)
    assert load_matrix(path).tobytes() == a.tobytes()


def test_explicit_format_overrides_suffix(tmp_path):
    path = tmp_path / "m.txt"
    save_matrix(path, np.eye(2), format="dmat")
    np.testing.assert_array_equal(load_matrix(path, format="dmat"), np.eye(2))
    with pytest.raises(ValueError):
        load_matrix(path, format="xml")
