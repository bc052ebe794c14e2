"""Readers and writers for graphs, matrices, column blocks, and vectors.

Formats:

* Edge list: one arc per line, ``src<TAB>dst<TAB>weight`` with 0-based ids.
  The weight is optional (default 1.0) and ``#`` starts a comment.
* Matrix Market: coordinate format, 1-based indices, converted on read.
* Column blocks: CSV (row-major, 17 significant digits) or a raw stream of
  little-endian float64 values preceded by an 8-byte header (two little-endian
  uint32 words: row count, column count).
* Vectors: plain text, one value per line.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import InputError
from .sparse import Digraph, SparseMatrix

_FMT = "%.17g"


def read_edge_list(path) -> Digraph:
    src: list[int] = []
    dst: list[int] = []
    wgt: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise InputError(f"{path}:{lineno}: expected 'src dst [weight]'")
            try:
                s, t = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
            src.append(s)
            dst.append(t)
            wgt.append(w)
    if not src:
        raise InputError(f"{path}: no arcs found")
    n = max(max(src), max(dst)) + 1
    return Digraph(n, np.array(src), np.array(dst), np.array(wgt))


def write_edge_list(g: Digraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s, t, w in zip(g.src, g.dst, g.weight):
            fh.write(f"{s}\t{t}\t{_FMT % w}\n")


def read_matrix_market(path) -> SparseMatrix:
    """Matrix Market coordinate reader (real/integer/pattern, general/symmetric)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("%%MatrixMarket"):
            raise InputError(f"{path}: missing MatrixMarket header")
        tokens = header.lower().split()
        if len(tokens) < 5 or tokens[1] != "matrix" or tokens[2] != "coordinate":
            raise InputError(f"{path}: only coordinate matrices are supported")
        value_type, symmetry = tokens[3], tokens[4]
        if value_type not in ("real", "integer", "pattern"):
            raise InputError(f"{path}: unsupported value type {value_type!r}")
        if symmetry not in ("general", "symmetric"):
            raise InputError(f"{path}: unsupported symmetry {symmetry!r}")
        line = fh.readline()
        while line and line.lstrip().startswith("%"):
            line = fh.readline()
        try:
            n_rows, n_cols, nnz = (int(v) for v in line.split())
        except ValueError as exc:
            raise InputError(f"{path}: bad size line") from exc
        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        for _ in range(nnz):
            parts = fh.readline().split()
            if len(parts) < 2:
                raise InputError(f"{path}: truncated entry list")
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
            v = float(parts[2]) if value_type != "pattern" else 1.0
            rows.append(i)
            cols.append(j)
            vals.append(v)
            if symmetry == "symmetric" and i != j:
                rows.append(j)
                cols.append(i)
                vals.append(v)
    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def write_matrix_market(m: SparseMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{m.n_rows} {m.n_cols} {m.nnz}\n")
        for r, c, v in zip(m.entry_rows, m.col_indices, m.values):
            fh.write(f"{r + 1} {c + 1} {_FMT % v}\n")


def read_matrix_auto(path) -> SparseMatrix:
    """Detect Matrix Market by header; otherwise read whitespace triplets.

    Triplet files are 0-based ``row col value`` lines; dimensions are inferred
    from the largest index, so every trailing row/column must be touched.
    """
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith("%%MatrixMarket"):
        return read_matrix_market(path)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected 'row col value'")
            try:
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                vals.append(float(parts[2]))
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no entries found")
    n = max(max(rows), max(cols)) + 1
    return SparseMatrix.from_coo(n, n, rows, cols, vals)


def graph_from_matrix(m: SparseMatrix) -> Digraph:
    if m.n_rows != m.n_cols:
        raise InputError("adjacency matrix must be square")
    return Digraph(m.n_rows, m.entry_rows.copy(), m.col_indices.copy(),
                   m.values.copy())


def load_graph(path) -> Digraph:
    """Edge list or Matrix Market adjacency, detected by header."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith("%%MatrixMarket"):
        return graph_from_matrix(read_matrix_market(path))
    return read_edge_list(path)


def write_columns_csv(block: np.ndarray, path) -> None:
    block = np.atleast_2d(np.asarray(block, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        for row in block:
            fh.write(",".join(_FMT % v for v in row))
            fh.write("\n")


def read_columns_csv(path) -> np.ndarray:
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty column block")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InputError(f"{path}: ragged rows in column block")
    return np.array(rows)


_RAW_HEADER = struct.Struct("<II")


def write_columns_raw(block: np.ndarray, path) -> None:
    block = np.ascontiguousarray(np.atleast_2d(block), dtype=np.float64)
    n, k = block.shape
    with open(path, "wb") as fh:
        fh.write(_RAW_HEADER.pack(n, k))
        fh.write(block.astype("<f8").tobytes(order="C"))


def read_columns_raw(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_RAW_HEADER.size)
        if len(head) != _RAW_HEADER.size:
            raise InputError(f"{path}: truncated header")
        n, k = _RAW_HEADER.unpack(head)
        payload = fh.read()
    expected = n * k * 8
    if len(payload) != expected:
        raise InputError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype="<f8").reshape(n, k).astype(np.float64)


def write_vector(x: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in np.asarray(x, dtype=np.float64):
            fh.write(_FMT % v)
            fh.write("\n")


def read_vector(path) -> np.ndarray:
    vals: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                vals.append(float(line))
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    if not vals:
        raise InputError(f"{path}: empty vector file")
    return np.array(vals)
