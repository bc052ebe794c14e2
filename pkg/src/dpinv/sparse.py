"""Compressed sparse row matrices, digraphs, and the operations built on them.

Storage is row-compressed only; products with the transpose iterate the same
structure with scattered writes instead of materializing a second matrix.
Matrices and graphs are treated as immutable after construction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InputError


class MvCounter:
    """Counts matrix-vector products. Incremented once per product."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def add(self, k: int = 1) -> None:
        self.count += k

    def __repr__(self) -> str:  # pragma: no cover
        return f"MvCounter(count={self.count})"


@dataclass
class SparseMatrix:
    """CSR matrix with float64 values and int64 indices.

    Within each row the column indices are strictly increasing; duplicate
    coordinates must be merged before construction (``from_coo`` does this).
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    _entry_rows: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.row_offsets = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if self.row_offsets.shape != (self.n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows + 1")
        if self.row_offsets[0] != 0 or self.row_offsets[-1] != self.col_indices.shape[0]:
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(self.row_offsets) < 0):
            raise ValueError("row_offsets must be nondecreasing")
        if self.col_indices.shape != self.values.shape:
            raise ValueError("col_indices and values must have equal length")
        if self.col_indices.size:
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing columns within each row also rules out duplicates
            gaps = np.diff(self.col_indices)
            same_row = np.ones(gaps.shape[0], dtype=bool)
            starts = self.row_offsets[1:-1]
            starts = starts[(starts > 0) & (starts < self.col_indices.size)]
            same_row[starts - 1] = False
            if np.any(gaps[same_row] <= 0):
                raise ValueError("columns within a row must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("matrix values must be finite")

    @property
    def nnz(self) -> int:
        return int(self.col_indices.shape[0])

    @property
    def entry_rows(self) -> np.ndarray:
        """Row index of each stored entry (lazy, used by the numpy backend)."""
        if self._entry_rows is None:
            counts = np.diff(self.row_offsets)
            self._entry_rows = np.repeat(
                np.arange(self.n_rows, dtype=np.int64), counts)
        return self._entry_rows

    @classmethod
    def from_coo(cls, n_rows: int, n_cols: int, rows, cols, vals) -> "SparseMatrix":
        """Build from coordinate triplets, merging duplicates by summation."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("rows, cols, vals must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise ValueError("column index out of range")
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            keep = np.ones(rows.shape[0], dtype=bool)
            keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            group = np.cumsum(keep) - 1
            merged = np.bincount(group, weights=vals)
            rows, cols = rows[keep], cols[keep]
            vals = merged
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_rows), out=offsets[1:])
        return cls(n_rows, n_cols, offsets, cols, vals)

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    @classmethod
    def from_dense(cls, a: np.ndarray, drop_tol: float = 0.0) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.float64)
        rows, cols = np.nonzero(np.abs(a) > drop_tol)
        return cls.from_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        out[self.entry_rows, self.col_indices] = self.values
        return out

    def diagonal(self) -> np.ndarray:
        if self.n_rows != self.n_cols:
            raise ValueError("diagonal requires a square matrix")
        out = np.zeros(self.n_rows)
        on_diag = self.entry_rows == self.col_indices
        out[self.col_indices[on_diag]] = self.values[on_diag]
        return out


def _as_vector(x, n: int) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError(f"expected a vector of length {n}, got shape {x.shape}")
    return x


def matvec(m: SparseMatrix, x, counter: MvCounter | None = None) -> np.ndarray:
    """y = M x. Increments `counter` by one when supplied."""
    x = _as_vector(x, m.n_cols)
    out = np.empty(m.n_rows)
    if _kernels.USE_NUMBA:
        _kernels.csr_matvec_numba(m.row_offsets, m.col_indices, m.values, x, out)
    else:
        _kernels.csr_matvec_numpy(m.row_offsets, m.col_indices, m.values,
                                  m.entry_rows, x, out)
    if counter is not None:
        counter.add()
    return out


def matvec_transpose(m: SparseMatrix, x, counter: MvCounter | None = None) -> np.ndarray:
    """y = Mᵀ x without forming the transpose. Increments `counter` by one."""
    x = _as_vector(x, m.n_rows)
    out = np.empty(m.n_cols)
    if _kernels.USE_NUMBA:
        _kernels.csr_matvec_t_numba(m.row_offsets, m.col_indices, m.values, x, out)
    else:
        _kernels.csr_matvec_t_numpy(m.row_offsets, m.col_indices, m.values,
                                    m.entry_rows, x, out)
    if counter is not None:
        counter.add()
    return out


def scale_rows_cols(m: SparseMatrix, left, right) -> SparseMatrix:
    """Diag(left) · M · Diag(right) as a new matrix with the same pattern."""
    left = _as_vector(left, m.n_rows)
    right = _as_vector(right, m.n_cols)
    if np.any(left <= 0) or np.any(right <= 0):
        raise ValueError("scale vectors must be strictly positive")
    vals = m.values * left[m.entry_rows] * right[m.col_indices]
    return SparseMatrix(m.n_rows, m.n_cols, m.row_offsets.copy(),
                        m.col_indices.copy(), vals)


def row_sums(m: SparseMatrix) -> np.ndarray:
    if m.nnz == 0:
        return np.zeros(m.n_rows)
    return np.bincount(m.entry_rows, weights=m.values, minlength=m.n_rows)


def col_sums(m: SparseMatrix) -> np.ndarray:
    if m.nnz == 0:
        return np.zeros(m.n_cols)
    return np.bincount(m.col_indices, weights=m.values, minlength=m.n_cols)


def permute_symmetric(m: SparseMatrix, perm: np.ndarray) -> SparseMatrix:
    """M[perm][:, perm] for a square matrix."""
    if m.n_rows != m.n_cols:
        raise ValueError("symmetric permutation requires a square matrix")
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.shape[0])
    return SparseMatrix.from_coo(m.n_rows, m.n_cols,
                                 inv[m.entry_rows], inv[m.col_indices], m.values)


@dataclass
class Digraph:
    """Weighted directed graph as parallel arc arrays (weights > 0)."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    evaporating_node: int | None = None

    def __post_init__(self) -> None:
        self.src = np.ascontiguousarray(self.src, dtype=np.int64)
        self.dst = np.ascontiguousarray(self.dst, dtype=np.int64)
        self.weight = np.ascontiguousarray(self.weight, dtype=np.float64)
        if not (self.src.shape == self.dst.shape == self.weight.shape):
            raise InputError("arc arrays must have equal length")
        if self.n <= 0:
            raise InputError("graph must have at least one node")
        if self.src.size:
            lo = min(self.src.min(), self.dst.min())
            hi = max(self.src.max(), self.dst.max())
            if lo < 0 or hi >= self.n:
                raise InputError("arc endpoint out of range")
        if np.any(~np.isfinite(self.weight)) or np.any(self.weight <= 0):
            raise InputError("arc weights must be finite and strictly positive")

    @property
    def arc_count(self) -> int:
        return int(self.src.shape[0])

    def adjacency(self) -> SparseMatrix:
        """Weighted adjacency matrix; duplicate arcs merge by weight sum."""
        return SparseMatrix.from_coo(self.n, self.n, self.src, self.dst, self.weight)


def _reach_all(n: int, offsets: np.ndarray, targets: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for p in range(offsets[u], offsets[u + 1]):
            v = targets[p]
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


def strong_connectivity_certificate(g: Digraph) -> tuple[int, int] | None:
    """None when strongly connected, else a pair (i, j) with no i -> j path."""
    a = g.adjacency()
    fwd = _reach_all(g.n, a.row_offsets, a.col_indices, 0)
    if not fwd.all():
        return (0, int(np.nonzero(~fwd)[0][0]))
    rev_offsets = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(a.col_indices, minlength=g.n), out=rev_offsets[1:])
    order = np.argsort(a.col_indices, kind="stable")
    rev_targets = a.entry_rows[order]
    bwd = _reach_all(g.n, rev_offsets, rev_targets, 0)
    if not bwd.all():
        return (int(np.nonzero(~bwd)[0][0]), 0)
    return None


def is_strongly_connected(g: Digraph) -> bool:
    return strong_connectivity_certificate(g) is None


def build_transition(g: Digraph) -> tuple[SparseMatrix, np.ndarray]:
    """Row-stochastic transition matrix P = D⁻¹A and the out-degree vector d."""
    a = g.adjacency()
    d = row_sums(a)
    dead = np.nonzero(d <= 0)[0]
    if dead.size:
        raise InputError(f"node {int(dead[0])} has zero out-degree")
    vals = a.values / d[a.entry_rows]
    p = SparseMatrix(g.n, g.n, a.row_offsets, a.col_indices, vals)
    return p, d
