import struct

import numpy as np
import pytest

from polyfock import symbols as lib
from polyfock.errors import DomainError
from polyfock.io import (
    MAGIC,
    operator_from_bytes,
    operator_from_csv,
    operator_to_bytes,
    operator_to_csv,
    read_operator,
    write_operator,
)
from polyfock.operators import toeplitz_matrix


@pytest.fixture
def op(small):
    return toeplitz_matrix(lib.angular(), small, order=2)


def test_binary_round_trip_is_bit_exact(op, tmp_path):
    data = operator_to_bytes(op)
    assert data[:4] == MAGIC
    back = operator_from_bytes(data)
    assert back.entries.tobytes() == op.entries.astype("<c16").tobytes()
    assert (back.spec, back.rows, back.cols, back.label) == (op.spec, op.rows, op.cols, op.label)
    path = tmp_path / "t.pfok"
    write_operator(path, op)
    assert read_operator(path).entries.tobytes() == back.entries.tobytes()
    assert operator_to_bytes(back) == data


def test_csv_round_trip_is_exact(op):
    text = operator_to_csv(op)
    lines = text.splitlines()
    assert lines[0].startswith("# {") and lines[1] == "row,col,re,im"
    assert len(lines) == 2 + op.entries.size
    back = operator_from_csv(text)
    assert np.array_equal(back.entries, op.entries)
    assert back.rows == op.rows and back.label == op.label


def test_binary_errors(op):
    data = operator_to_bytes(op)
    with pytest.raises(DomainError, match="not a PFOK"):
        operator_from_bytes(b"XXXX" + data[4:])
    with pytest.raises(DomainError, match="not a PFOK"):
        operator_from_bytes(data[:6])
    with pytest.raises(DomainError, match="version"):
        operator_from_bytes(data[:4] + struct.pack("<I", 9) + data[8:])
    with pytest.raises(DomainError, match="payload"):
        operator_from_bytes(data[:-16])
    hlen = struct.unpack("<I", data[8:12])[0]
    with pytest.raises(DomainError, match="header"):
        operator_from_bytes(data[:12] + b"\xff" * hlen + data[12 + hlen:])


def test_csv_needs_header():
    with pytest.raises(DomainError):
        operator_from_csv("row,col,re,im\n0,0,1,0\n")
