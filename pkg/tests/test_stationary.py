"""Tests for the blocked subspace iteration for stationary distributions."""

import numpy as np
import pytest

from dpinv.errors import NumericalError
from dpinv.graphgen import random_graph
from dpinv.oracle import stationary_direct
from dpinv.sparse import SparseMatrix, build_transition
from dpinv.stationary import SubspaceConfig, stationary_distribution, stationary_residual

from conftest import directed_cycle, lazy_cycle


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SubspaceConfig(ell=1)
        with pytest.raises(ValueError):
            SubspaceConfig(tol=0.0)
        with pytest.raises(ValueError):
            SubspaceConfig(max_iterations=0)


class TestExactCases:
    def test_cycle3_uniform(self, cycle3_p):
        res = stationary_distribution(cycle3_p, SubspaceConfig(ell=4, tol=1e-12))
        np.testing.assert_allclose(res.pi, np.full(3, 1.0 / 3.0), atol=1e-12)
        assert res.residual <= 1e-12
        assert abs(res.pi.sum() - 1.0) < 1e-14

    def test_selfloop2_two_thirds(self, selfloop2_p):
        res = stationary_distribution(selfloop2_p, SubspaceConfig(ell=2, tol=1e-12))
        np.testing.assert_allclose(res.pi, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)

    def test_selfloop2_uniform_candidate_residual(self, selfloop2_p):
        # P^T [1/2, 1/2] - [1/2, 1/2] = [1/4, -1/4], norm = 1/(2 sqrt 2)
        r = stationary_residual(selfloop2_p, np.array([0.5, 0.5]))
        assert abs(r - 1.0 / (2.0 * np.sqrt(2.0))) < 1e-14

    def test_single_state(self):
        p = SparseMatrix.identity(1)
        res = stationary_distribution(p)
        assert res.pi[0] == 1.0 and res.mv_count == 0


class TestValidation:
    def test_rejects_nonstochastic(self):
        m = SparseMatrix.from_coo(2, 2, [0, 0, 1], [0, 1, 0], [0.5, 0.6, 1.0])
        with pytest.raises(ValueError, match="sums to"):
            stationary_distribution(m)

    def test_rejects_negative(self):
        m = SparseMatrix.from_coo(2, 2, [0, 0, 1], [0, 1, 0], [1.5, -0.5, 1.0])
        with pytest.raises(ValueError, match="nonnegative"):
            stationary_distribution(m)

    def test_rejects_nonsquare(self):
        m = SparseMatrix.from_coo(2, 3, [0, 1], [0, 1], [1.0, 1.0])
        with pytest.raises(ValueError, match="square"):
            stationary_distribution(m)


class TestAccounting:
    def test_mv_count_is_iterations_times_block(self):
        # each round applies P^T to ell block columns plus one residual check
        for seed in (0, 1, 2):
            g = random_graph(40, seed=seed)
            p, _ = build_transition(g)
            cfg = SubspaceConfig(ell=6, tol=1e-10, seed=seed)
            res = stationary_distribution(p, cfg)
            assert res.mv_count == res.iterations * (6 + 1)

    def test_history_length_matches_iterations(self):
        g = random_graph(30, seed=5)
        p, _ = build_transition(g)
        res = stationary_distribution(p, SubspaceConfig(ell=5, tol=1e-10))
        assert len(res.residual_history) == res.iterations
        assert res.residual_history[-1] == res.residual


class TestAgainstOracle:
    @pytest.mark.parametrize("n,seed", [(10, 0), (25, 1), (60, 2), (120, 3)])
    def test_matches_dense_solve(self, n, seed):
        g = random_graph(n, extra=n // 2, seed=seed)
        p, _ = build_transition(g)
        res = stationary_distribution(p, SubspaceConfig(tol=1e-11, seed=seed))
        ref = stationary_direct(p)
        assert np.max(np.abs(res.pi - ref)) < 1e-9
        assert res.pi.min() > 0

    def test_seed_invariance_within_tolerance(self):
        g = random_graph(50, extra=20, seed=9)
        p, _ = build_transition(g)
        tol = 1e-10
        results = [
            stationary_distribution(p, SubspaceConfig(ell=8, tol=tol, seed=s)).pi
            for s in (0, 1, 2)
        ]
        for other in results[1:]:
            assert np.max(np.abs(results[0] - other)) < 10 * tol


class TestPeriodicChains:
    def test_block_width_at_period_fails(self, cycle3_p):
        # a 3-cycle has period 3; a width-2 block cannot isolate the
        # stationary direction and the iteration must report failure
        cfg = SubspaceConfig(ell=2, tol=1e-9, max_iterations=300, seed=0)
        with pytest.raises(NumericalError, match="did not converge in 300 rounds"):
            stationary_distribution(cycle3_p, cfg)

    def test_block_width_above_period_succeeds(self, cycle3_p):
        cfg = SubspaceConfig(ell=4, tol=1e-9, max_iterations=300, seed=0)
        res = stationary_distribution(cycle3_p, cfg)
        np.testing.assert_allclose(res.pi, np.full(3, 1.0 / 3.0), atol=1e-12)
        # ell clamps to n=3, making the projected step exact in one round
        assert res.iterations == 1
        assert res.mv_count == 4

    def test_convergence_rate_lazy_cycle(self):
        # lazy cycle on 24 states: eigenvalues (1 + e^{2 pi i k/24})/2 with
        # magnitude cos(pi k / 24), each k >= 1 appearing twice. Ranked by
        # magnitude the 6th is cos(3 pi / 24), so a width-5 block must shrink
        # the residual per round at least as fast as 0.8 * log|lambda_6|
        n, ell = 24, 5
        p = lazy_cycle(n)
        res = stationary_distribution(p, SubspaceConfig(ell=ell, tol=1e-10, seed=0))
        hist = res.residual_history
        assert len(hist) > 10
        slope = np.polyfit(np.arange(len(hist) - 2), np.log(hist[2:]), 1)[0]
        lam = np.cos(3.0 * np.pi / n)
        assert slope <= 0.8 * np.log(lam)

    def test_directed_cycle_large_block(self):
        p = directed_cycle(8)
        res = stationary_distribution(p, SubspaceConfig(ell=10, tol=1e-12, seed=0))
        np.testing.assert_allclose(res.pi, np.full(8, 0.125), atol=1e-12)
