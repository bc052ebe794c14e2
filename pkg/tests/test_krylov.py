"""Tests for the Krylov machinery: operators, Arnoldi, restarted GMRES."""

import numpy as np
import pytest

from dpinv.errors import GmresNonConvergenceError
from dpinv.krylov import (
    GmresConfig,
    LinearOperator,
    RankOneShiftedOperator,
    arnoldi,
    gmres_restarted,
    richardson_step,
)
from dpinv.sparse import MvCounter, SparseMatrix


def random_spd_operator(n, seed, counter=None):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n))
    a = m @ m.T + n * np.eye(n)
    return LinearOperator.from_dense(a, counter), a


class TestLinearOperator:
    def test_from_dense_apply(self):
        a = np.array([[2.0, 1.0], [0.0, 3.0]])
        op = LinearOperator.from_dense(a)
        np.testing.assert_allclose(op.apply(np.array([1.0, 1.0])), [3.0, 3.0])
        assert op.counter.count == 1

    def test_from_sparse_and_transpose(self):
        m = SparseMatrix.from_coo(3, 3, [0, 1, 2], [1, 2, 0], [1.0, 2.0, 3.0])
        x = np.array([1.0, 10.0, 100.0])
        op = LinearOperator.from_sparse(m)
        opt = LinearOperator.from_sparse(m, transpose=True)
        np.testing.assert_allclose(op.apply(x), [10.0, 200.0, 3.0])
        np.testing.assert_allclose(opt.apply(x), [300.0, 1.0, 20.0])

    def test_shape_check(self):
        op = LinearOperator.from_dense(np.eye(2))
        with pytest.raises(ValueError):
            op.apply(np.ones(3))

    def test_shared_counter(self):
        counter = MvCounter()
        op1, _ = random_spd_operator(4, 0, counter)
        op2, _ = random_spd_operator(4, 1, counter)
        op1.apply(np.ones(4))
        op2.apply(np.ones(4))
        assert counter.count == 2

    def test_rank_one_shift(self):
        m = SparseMatrix.identity(3)
        u = np.array([1.0, 0.0, 0.0])
        v = np.array([0.0, 1.0, 0.0])
        op = RankOneShiftedOperator(m, u, v, alpha=2.0)
        x = np.array([1.0, 5.0, 2.0])
        # I x + 2 * u * (v . x) = x + 10 e0
        np.testing.assert_allclose(op.apply(x), [11.0, 5.0, 2.0])
        assert op.counter.count == 1


class TestArnoldi:
    def test_relation_holds(self):
        op, a = random_spd_operator(20, 7)
        v1 = np.random.default_rng(8).normal(size=20)
        v1 /= np.linalg.norm(v1)
        V, H, breakdown = arnoldi(op, v1, 8)
        assert breakdown is None
        assert V.shape == (20, 9) and H.shape == (9, 8)
        np.testing.assert_allclose(a @ V[:, :8], V @ H, atol=1e-10)
        np.testing.assert_allclose(V.T @ V, np.eye(9), atol=1e-12)

    def test_breakdown_on_identity(self):
        op = LinearOperator.from_dense(np.eye(5))
        v1 = np.zeros(5)
        v1[0] = 1.0
        V, H, breakdown = arnoldi(op, v1, 4)
        # Krylov space of the identity closes after one step
        assert breakdown == 1
        assert V.shape == (5, 1) and H.shape == (2, 1)
        assert abs(H[0, 0] - 1.0) < 1e-14 and abs(H[1, 0]) < 1e-14

    def test_breakdown_on_invariant_subspace(self):
        a = np.diag([1.0, 2.0, 3.0, 4.0])
        op = LinearOperator.from_dense(a)
        v1 = np.array([1.0, 1.0, 0.0, 0.0])
        v1 /= np.linalg.norm(v1)
        V, H, breakdown = arnoldi(op, v1, 4)
        # the span of e0,e1 is invariant, so the basis closes after 2 steps
        assert breakdown == 2
        assert V.shape == (4, 2)

    def test_mv_count_one_per_step(self):
        op, _ = random_spd_operator(15, 9)
        v1 = np.ones(15) / np.sqrt(15.0)
        arnoldi(op, v1, 6)
        assert op.counter.count == 6


class TestGmres:
    def test_solves_spd_system(self):
        op, a = random_spd_operator(30, 12)
        b = np.random.default_rng(13).normal(size=30)
        x, rep = gmres_restarted(op, b, cfg=GmresConfig(restart=10, tol=1e-11))
        assert np.linalg.norm(b - a @ x) < 1e-11
        assert rep.final_residual < 1e-11

    def test_mv_count_inner_plus_one(self):
        # with x0=0 the only products are one per inner step plus the final
        # acceptance check of the true residual
        op, a = random_spd_operator(25, 14)
        b = np.random.default_rng(15).normal(size=25)
        x, rep = gmres_restarted(op, b, cfg=GmresConfig(restart=7, tol=1e-10))
        assert rep.mv_count == rep.inner_iterations_total + 1

    def test_history_starts_at_rhs_norm(self):
        op, _ = random_spd_operator(10, 16)
        b = np.random.default_rng(17).normal(size=10)
        _, rep = gmres_restarted(op, b, cfg=GmresConfig(restart=5, tol=1e-10))
        assert abs(rep.residual_history[0] - np.linalg.norm(b)) < 1e-14
        assert rep.residual_history[-1] < 1e-10
        # one history entry per completed cycle after the initial norm
        assert len(rep.residual_history) == rep.outer_iterations + 1

    def test_nonincreasing_within_tolerance(self):
        op, _ = random_spd_operator(40, 18)
        b = np.random.default_rng(19).normal(size=40)
        _, rep = gmres_restarted(op, b, cfg=GmresConfig(restart=4, tol=1e-10))
        h = rep.residual_history
        # restarted GMRES never increases the residual between cycles
        assert np.all(h[1:] <= h[:-1] * (1 + 1e-12))

    def test_zero_rhs_trivial(self):
        op, _ = random_spd_operator(8, 20)
        x, rep = gmres_restarted(op, np.zeros(8), cfg=GmresConfig(tol=1e-12))
        np.testing.assert_allclose(x, 0.0)
        assert rep.mv_count == 0 and rep.outer_iterations == 0

    def test_warm_start(self):
        op, a = random_spd_operator(12, 21)
        b = np.random.default_rng(22).normal(size=12)
        x_exact = np.linalg.solve(a, b)
        x, rep = gmres_restarted(op, b, x0=x_exact, cfg=GmresConfig(tol=1e-9))
        np.testing.assert_allclose(x, x_exact, atol=1e-12)
        assert rep.outer_iterations == 0 and rep.mv_count == 1

    def test_nonconvergence_carries_report(self):
        # an orthogonal rotation-heavy matrix with restart=1 stalls: each
        # 1-dimensional Krylov correction is orthogonal to the residual
        n = 6
        perm = np.roll(np.eye(n), 1, axis=0)
        op = LinearOperator.from_dense(perm)
        b = np.zeros(n)
        b[0] = 1.0
        b[1] = -1.0
        with pytest.raises(GmresNonConvergenceError) as exc:
            gmres_restarted(op, b, cfg=GmresConfig(restart=1, tol=1e-12, max_outer=20))
        rep = exc.value.report
        assert rep.outer_iterations == 20
        assert rep.residual_history[-1] > 1e-12

    def test_restart_one_still_converges_on_spd(self):
        op, a = random_spd_operator(10, 23)
        b = np.random.default_rng(24).normal(size=10)
        x, _ = gmres_restarted(op, b, cfg=GmresConfig(restart=1, tol=1e-9, max_outer=100000))
        assert np.linalg.norm(b - a @ x) < 1e-9

    def test_rank_one_shifted_solve(self):
        # the operator used for the pseudo-inverse columns: sparse + alpha u u^T
        rng = np.random.default_rng(25)
        n = 15
        dense = rng.normal(size=(n, n)) * (rng.random(size=(n, n)) < 0.4)
        a = dense + n * np.eye(n)
        m = SparseMatrix.from_dense(a)
        u = rng.normal(size=n)
        op = RankOneShiftedOperator(m, u, u, alpha=1.5)
        b = rng.normal(size=n)
        x, _ = gmres_restarted(op, b, cfg=GmresConfig(restart=20, tol=1e-12))
        full = a + 1.5 * np.outer(u, u)
        np.testing.assert_allclose(full @ x, b, atol=1e-10)


class TestRichardson:
    def test_reduces_residual_on_spd(self):
        op, a = random_spd_operator(10, 26)
        r0 = np.random.default_rng(27).normal(size=10)
        r1, alpha = richardson_step(op, r0)
        assert alpha > 0
        assert np.linalg.norm(r1) < np.linalg.norm(r0)
        np.testing.assert_allclose(r1, r0 - alpha * (a @ r0), atol=1e-12)
