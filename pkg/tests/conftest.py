import numpy as np
import pytest

from dpinv.sparse import Digraph, SparseMatrix, build_transition


@pytest.fixture
def cycle3():
    """Directed 3-cycle 0 -> 1 -> 2 -> 0, all weights 1."""
    return Digraph(3, np.array([0, 1, 2]), np.array([1, 2, 0]), np.ones(3))


@pytest.fixture
def cycle3_p(cycle3):
    p, _ = build_transition(cycle3)
    return p


@pytest.fixture
def selfloop2():
    """Two nodes: 0 loops on itself or moves to 1; 1 always returns to 0."""
    return Digraph(2, np.array([0, 0, 1]), np.array([0, 1, 0]), np.ones(3))


@pytest.fixture
def selfloop2_p(selfloop2):
    p, _ = build_transition(selfloop2)
    return p


def lazy_cycle(n: int) -> SparseMatrix:
    """P = I/2 + C/2 for the directed n-cycle; aperiodic, slow mixing."""
    rows = np.concatenate([np.arange(n), np.arange(n)])
    cols = np.concatenate([np.arange(n), (np.arange(n) + 1) % n])
    vals = np.concatenate([np.full(n, 0.5), np.full(n, 0.5)])
    return SparseMatrix.from_coo(n, n, rows, cols, vals)


def directed_cycle(n: int) -> SparseMatrix:
    """Pure rotation: period n."""
    return SparseMatrix.from_coo(n, n, np.arange(n), (np.arange(n) + 1) % n,
                                 np.ones(n))
