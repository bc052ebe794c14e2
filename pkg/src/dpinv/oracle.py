"""Independent verification oracles.

Everything here double-checks the iterative solvers through a different
route: dense factorizations, brute-force walk simulation, and hand-rolled
eigenvalue iterations. None of it shares code with the certified solve
paths, so agreement is meaningful evidence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dense import lu_solve
from .errors import NumericalError
from .sparse import SparseMatrix

_ORACLE_MAX_N = 500
_SEED_STREAM_MC = 2


def _to_dense(p) -> np.ndarray:
    if isinstance(p, SparseMatrix):
        return p.to_dense()
    return np.asarray(p, dtype=np.float64)


def stationary_direct(p) -> np.ndarray:
    """Stationary distribution by one dense linear solve.

    Fixes the last coordinate to 1, solves the first n-1 balance equations,
    and normalizes. Only for small chains.
    """
    pd = _to_dense(p)
    n = pd.shape[0]
    if n > _ORACLE_MAX_N:
        raise ValueError(f"direct oracle is limited to n <= {_ORACLE_MAX_N}")
    if n == 1:
        return np.ones(1)
    a = np.eye(n - 1) - pd[:n - 1, :n - 1]
    y = np.linalg.solve(a.T, pd[n - 1, :n - 1])
    full = np.concatenate([y, [1.0]])
    return full / full.sum()


@dataclass
class PenroseReport:
    aba: float
    bab: float
    ab_symmetry: float
    ba_symmetry: float

    @property
    def max_residual(self) -> float:
        return max(self.aba, self.bab, self.ab_symmetry, self.ba_symmetry)

    def ok(self, tol: float) -> bool:
        return self.max_residual <= tol


def _rel(num: float, den: float) -> float:
    return num / max(den, 1e-300)


def penrose_check(a: np.ndarray, b: np.ndarray) -> PenroseReport:
    """The four pseudo-inverse conditions as relative Frobenius residuals."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = a @ b
    ba = b @ a
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    return PenroseReport(
        _rel(float(np.linalg.norm(ab @ a - a)), na),
        _rel(float(np.linalg.norm(ba @ b - b)), nb),
        _rel(float(np.linalg.norm(ab.T - ab)), float(np.linalg.norm(ab))),
        _rel(float(np.linalg.norm(ba.T - ba)), float(np.linalg.norm(ba))),
    )


def hitting_times_direct(p, k: int) -> np.ndarray:
    """Expected steps to reach k from every node, by one dense solve."""
    pd = _to_dense(p)
    n = pd.shape[0]
    if n > _ORACLE_MAX_N:
        raise ValueError(f"direct oracle is limited to n <= {_ORACLE_MAX_N}")
    keep = [j for j in range(n) if j != k]
    sub = np.eye(n - 1) - pd[np.ix_(keep, keep)]
    h_sub = np.linalg.solve(sub, np.ones(n - 1))
    h = np.zeros(n)
    h[keep] = h_sub
    return h


@dataclass
class MCResult:
    h_est: float
    h_se: float
    c_est: float
    c_se: float
    visits_est: np.ndarray
    visits_se: np.ndarray
    trials: int


def monte_carlo_walk(p, i: int, k: int, trials: int = 100_000,
                     seed: int = 0, batch: int = 10_000) -> MCResult:
    """Estimate hitting time, commute time, and visit counts by simulation.

    Walks i -> k (counting steps and per-node occupancies before absorption)
    then k -> i for the round trip. Runs in batches; a batch that exhausts
    its random budget is retried whole with a doubled budget so partial
    trials never leak into the moments.
    """
    pd = _to_dense(p)
    n = pd.shape[0]
    if not (0 <= i < n and 0 <= k < n) or i == k:
        raise ValueError("need distinct node indices inside the chain")
    if trials < 1000:
        raise ValueError("fewer than 1000 trials gives meaningless error bars")
    cum = np.cumsum(pd, axis=1)
    rng = np.random.default_rng(np.random.SeedSequence([seed, _SEED_STREAM_MC]))
    kernel = _kernels.mc_walk_numba if _kernels.USE_NUMBA else _kernels.mc_walk_numpy
    h_tot = np.zeros(2)
    c_tot = np.zeros(2)
    vs_tot = np.zeros(n)
    vq_tot = np.zeros(n)
    done = 0
    while done < trials:
        t = min(batch, trials - done)
        budget = t * 512
        while True:
            randoms = rng.random(budget)
            h_m = np.zeros(2)
            c_m = np.zeros(2)
            vs = np.zeros(n)
            vq = np.zeros(n)
            res = kernel(cum, i, k, t, randoms, h_m, c_m, vs, vq)
            if res != -1:
                break
            budget *= 2
            if budget > 2 ** 26:
                raise NumericalError(
                    "walk simulation exhausted its step budget; the chain "
                    "mixes too slowly for a Monte Carlo check")
        h_tot += h_m
        c_tot += c_m
        vs_tot += vs
        vq_tot += vq
        done += t

    def _mean_se(total, totalsq, count):
        mean = total / count
        var = np.maximum(totalsq / count - mean * mean, 0.0) * count / (count - 1)
        return mean, np.sqrt(var / count)

    h_est, h_se = _mean_se(h_tot[0], h_tot[1], trials)
    c_est, c_se = _mean_se(c_tot[0], c_tot[1], trials)
    v_est, v_se = _mean_se(vs_tot, vq_tot, trials)
    return MCResult(float(h_est), float(h_se), float(c_est), float(c_se),
                    v_est, v_se, trials)


def symmetric_part_extremes(a: np.ndarray, tol: float = 1e-8,
                            max_sweeps: int = 50) -> tuple[float, float]:
    """(smallest eigenvalue of (A + Aᵀ)/2, spectral norm of A).

    The eigenvalue comes from cyclic Jacobi sweeps; the norm from power
    iteration on AᵀA. Both are written out longhand on purpose.
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    s = (a + a.T) / 2.0
    fro = np.linalg.norm(s)
    if n == 1:
        lam_min = float(s[0, 0])
    else:
        s = s.copy()
        converged = False
        # measured directly; ||S||^2 - sum(diag^2) cancels catastrophically
        for _ in range(max_sweeps):
            off = float(np.linalg.norm(s - np.diag(np.diag(s))))
            if off <= tol * max(fro, 1e-300):
                converged = True
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    spq = s[p, q]
                    if abs(spq) <= 1e-18 * (abs(s[p, p]) + abs(s[q, q]) + 1e-300):
                        s[p, q] = 0.0
                        s[q, p] = 0.0
                        continue
                    theta = (s[q, q] - s[p, p]) / (2.0 * spq)
                    if abs(theta) > 1e150:  # theta**2 would overflow
                        t = 1.0 / (2.0 * theta)
                    elif theta == 0.0:
                        t = 1.0
                    else:
                        t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    c = 1.0 / np.sqrt(t * t + 1.0)
                    snn = t * c
                    rp = s[p, :].copy()
                    rq = s[q, :].copy()
                    s[p, :] = c * rp - snn * rq
                    s[q, :] = snn * rp + c * rq
                    cp = s[:, p].copy()
                    cq = s[:, q].copy()
                    s[:, p] = c * cp - snn * cq
                    s[:, q] = snn * cp + c * cq
                    s[p, q] = 0.0
                    s[q, p] = 0.0
        if not converged:
            off = float(np.linalg.norm(s - np.diag(np.diag(s))))
            if off > tol * max(fro, 1e-300):
                raise NumericalError("Jacobi sweeps did not reduce the "
                                     "off-diagonal mass; matrix is pathological")
        lam_min = float(np.diag(s).min())
    ata = a.T @ a
    x = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(10_000):
        y = ata @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return lam_min, 0.0
        x_new = y / ny
        lam_new = float(x_new @ (ata @ x_new))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            lam = lam_new
            break
        lam = lam_new
        x = x_new
    return lam_min, float(np.sqrt(max(lam, 0.0)))


def dense_pinv_reference(a: np.ndarray, u: np.ndarray,
                         v: np.ndarray | None = None,
                         self_check_tol: float = 1e-10) -> np.ndarray:
    """Dense pseudo-inverse of a nullity-one matrix via a rank-one shift.

    Computes (I - u uᵀ/uᵀu) (A + u vᵀ)⁻¹ (I - v vᵀ/vᵀv) with a dense LU and
    refuses to return anything that does not satisfy the four pseudo-inverse
    conditions to ``self_check_tol``.
    """
    a = np.asarray(a, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    v = u if v is None else np.asarray(v, dtype=np.float64)
    n = a.shape[0]
    c = a + np.outer(u, v)
    cinv = lu_solve(c, np.eye(n))
    pu = np.eye(n) - np.outer(u, u) / float(u @ u)
    pv = np.eye(n) - np.outer(v, v) / float(v @ v)
    b = pu @ cinv @ pv
    rep = penrose_check(a, b)
    if not rep.ok(self_check_tol):
        raise NumericalError(
            f"dense reference pseudo-inverse failed its own check "
            f"(worst residual {rep.max_residual:.3e}); null vectors are "
            "probably wrong for this matrix")
    return b
