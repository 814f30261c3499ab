"""Operator serialization: the ``PFOK`` binary container and a CSV form.

Binary layout (all integers little-endian)::

    b"PFOK" | u32 version | u32 header length | JSON header | entries

The header carries the truncation spec, row/column subspaces, label, dtype
and shape.  Entries are row-major little-endian ``(re, im)`` float pairs of
the dtype named in the header (``<c16`` when written here), so a round trip
is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .basis import Subspace, TruncationSpec
from .errors import DomainError
from .operators import OperatorMatrix

MAGIC = b"PFOK"
VERSION = 1
DTYPE = "<c16"


def _header(op: OperatorMatrix) -> dict:
    return {
        "spec": op.spec.to_dict(),
        "rows": op.rows.to_dict(),
        "cols": op.cols.to_dict(),
        "label": op.label,
        "dtype": DTYPE,
        "shape": list(op.shape),
    }


def _from_header(head: dict, entries: np.ndarray) -> OperatorMatrix:
    return OperatorMatrix(TruncationSpec.from_dict(head["spec"]), Subspace.from_dict(head["rows"]),
                          Subspace.from_dict(head["cols"]), entries, head.get("label", ""))


def operator_to_bytes(op: OperatorMatrix) -> bytes:
    head = json.dumps(_header(op), sort_keys=True).encode("utf-8")
    body = np.ascontiguousarray(op.entries, dtype=DTYPE).tobytes(order="C")
    return MAGIC + struct.pack("<II", VERSION, len(head)) + head + body


def operator_from_bytes(data: bytes) -> OperatorMatrix:
    if len(data) < 12 or data[:4] != MAGIC:
        raise DomainError("not a PFOK container")
    version, hlen = struct.unpack("<II", data[4:12])
    if version != VERSION:
        raise DomainError(f"unsupported PFOK version {version}")
    try:
        head = json.loads(data[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DomainError("corrupt PFOK header") from exc
    dtype = np.dtype(head.get("dtype", DTYPE))
    shape = tuple(head["shape"])
    body = data[12 + hlen:]
    if len(body) != dtype.itemsize * int(np.prod(shape)):
        raise DomainError("PFOK payload length does not match its header")
    entries = np.frombuffer(body, dtype=dtype).reshape(shape)
    return _from_header(head, entries)


def write_operator(path: str | Path, op: OperatorMatrix) -> None:
    Path(path).write_bytes(operator_to_bytes(op))


def read_operator(path: str | Path) -> OperatorMatrix:
    return operator_from_bytes(Path(path).read_bytes())


def operator_to_csv(op: OperatorMatrix) -> str:
    """``# {header json}`` line, then ``row,col,re,im`` with 17 significant digits."""
    out = io.StringIO()
    out.write("# " + json.dumps(_header(op), sort_keys=True) + "\n")
    out.write("row,col,re,im\n")
    for (r, c), v in np.ndenumerate(op.entries):
        out.write(f"{r},{c},{v.real:.17g},{v.imag:.17g}\n")
    return out.getvalue()


def operator_from_csv(text: str) -> OperatorMatrix:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise DomainError("operator CSV must start with a '# {header}' line")
    head = json.loads(lines[0][2:])
    entries = np.zeros(tuple(head["shape"]), dtype=complex)
    for row in csv.DictReader(lines[1:]):
        entries[int(row["row"]), int(row["col"])] = complex(float(row["re"]), float(row["im"]))
    return _from_header(head, entries)
