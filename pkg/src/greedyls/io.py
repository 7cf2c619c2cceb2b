"""Plain-text matrix files and JSON helpers.

A matrix file holds ``rows cols`` on its first line followed by ``rows``
lines of ``cols`` space-separated decimal floats. Vectors use the same format
with either dimension equal to one.
"""
import json

import numpy as np


def parse_matrix(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError("first line must be 'rows cols', got %r" % lines[0])
    rows, cols = int(header[0]), int(header[1])
    if rows < 0 or cols < 0:
        raise ValueError("negative dimension in header")
    body = lines[1:]
    if len(body) != rows:
        raise ValueError("expected %d data rows, found %d" % (rows, len(body)))
    out = np.empty((rows, cols))
    for r, ln in enumerate(body):
        vals = ln.split()
        if len(vals) != cols:
            raise ValueError("row %d has %d entries, expected %d" % (r + 1, len(vals), cols))
        out[r] = [float(v) for v in vals]
    if not np.all(np.isfinite(out)):
        raise ValueError("matrix contains non-finite entries")
    return out


def format_matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    lines = ["%d %d" % A.shape]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in A)
    return "\n".join(lines) + "\n"


def read_matrix(path):
    with open(path) as fh:
        return parse_matrix(fh.read())


def write_matrix(path, A):
    with open(path, "w") as fh:
        fh.write(format_matrix(A))


def read_vector(path):
    A = read_matrix(path)
    if A.shape[0] != 1 and A.shape[1] != 1:
        raise ValueError("expected a vector file, got shape %r" % (A.shape,))
    return A.ravel()


def dump_json(obj, fh=None):
    text = json.dumps(obj, indent=2, sort_keys=False)
    if fh is not None:
        fh.write(text + "\n")
    return text
