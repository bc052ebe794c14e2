"""Parity between the compiled kernels and their pure numpy twins.

The matvec kernels accumulate in the same order on both backends, so their
outputs are compared bitwise, and full solver runs under either backend must
produce byte-identical files. The Monte Carlo kernels consume the random
stream in different orders (per-trial vs lockstep), so those are compared
exactly only on a deterministic chain and statistically elsewhere.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from dpinv import _kernels
from dpinv.cli import main
from dpinv.sparse import SparseMatrix, matvec, matvec_transpose


def random_csr(n_rows, n_cols, density, seed):
    rng = np.random.default_rng(seed)
    mask = rng.random((n_rows, n_cols)) < density
    a = np.where(mask, rng.normal(size=(n_rows, n_cols)), 0.0)
    return SparseMatrix.from_dense(a), a


def run_cli_subprocess(argv, backend=None):
    """Run the CLI in a fresh interpreter so DPINV_BACKEND is re-read."""
    env = os.environ.copy()
    env.pop("DPINV_BACKEND", None)
    if backend is not None:
        env["DPINV_BACKEND"] = backend
    code = "import sys; from dpinv.cli import main; sys.exit(main(sys.argv[1:]))"
    return subprocess.run([sys.executable, "-c", code, *argv],
                          capture_output=True, text=True, env=env)


class TestKernelAgreement:
    @pytest.mark.parametrize("n_rows,n_cols,density",
                             [(7, 7, 0.4), (40, 40, 0.1), (13, 29, 0.3)])
    def test_matvec_bitwise_equal(self, n_rows, n_cols, density):
        m, a = random_csr(n_rows, n_cols, density, seed=n_rows)
        x = np.random.default_rng(1).normal(size=n_cols)
        out_nb = np.empty(n_rows)
        out_np = np.empty(n_rows)
        _kernels.csr_matvec_numba(m.row_offsets, m.col_indices, m.values, x, out_nb)
        _kernels.csr_matvec_numpy(m.row_offsets, m.col_indices, m.values,
                                  m.entry_rows, x, out_np)
        assert np.array_equal(out_nb, out_np)
        assert np.allclose(out_np, a @ x, atol=1e-12)

    @pytest.mark.parametrize("n_rows,n_cols,density",
                             [(7, 7, 0.4), (40, 40, 0.1), (13, 29, 0.3)])
    def test_matvec_transpose_bitwise_equal(self, n_rows, n_cols, density):
        m, a = random_csr(n_rows, n_cols, density, seed=n_rows + 100)
        x = np.random.default_rng(2).normal(size=n_rows)
        out_nb = np.empty(n_cols)
        out_np = np.empty(n_cols)
        _kernels.csr_matvec_t_numba(m.row_offsets, m.col_indices, m.values, x, out_nb)
        _kernels.csr_matvec_t_numpy(m.row_offsets, m.col_indices, m.values,
                                    m.entry_rows, x, out_np)
        assert np.array_equal(out_nb, out_np)
        assert np.allclose(out_np, a.T @ x, atol=1e-12)

    def test_empty_rows_and_columns(self):
        # rows 1 and 3 empty, column 0 never referenced
        m = SparseMatrix.from_coo(4, 3, [0, 2], [1, 2], [5.0, -3.0])
        x = np.array([1.0, 2.0, 3.0])
        out_nb = np.empty(4)
        out_np = np.empty(4)
        _kernels.csr_matvec_numba(m.row_offsets, m.col_indices, m.values, x, out_nb)
        _kernels.csr_matvec_numpy(m.row_offsets, m.col_indices, m.values,
                                  m.entry_rows, x, out_np)
        assert np.array_equal(out_nb, out_np)
        assert np.array_equal(out_np, [10.0, 0.0, -9.0, 0.0])
        y = np.array([1.0, 1.0, 1.0, 1.0])
        t_nb = np.empty(3)
        t_np = np.empty(3)
        _kernels.csr_matvec_t_numba(m.row_offsets, m.col_indices, m.values, y, t_nb)
        _kernels.csr_matvec_t_numpy(m.row_offsets, m.col_indices, m.values,
                                    m.entry_rows, y, t_np)
        assert np.array_equal(t_nb, t_np)
        assert np.array_equal(t_np, [0.0, 5.0, -3.0])

    def test_dispatch_matches_both_kernels(self):
        m, a = random_csr(15, 15, 0.3, seed=7)
        x = np.random.default_rng(3).normal(size=15)
        want = np.empty(15)
        _kernels.csr_matvec_numpy(m.row_offsets, m.col_indices, m.values,
                                  m.entry_rows, x, want)
        assert np.array_equal(matvec(m, x), want)
        want_t = np.empty(15)
        _kernels.csr_matvec_t_numpy(m.row_offsets, m.col_indices, m.values,
                                    m.entry_rows, x, want_t)
        assert np.array_equal(matvec_transpose(m, x), want_t)


class TestBackendSelection:
    def test_active_backend_consistent(self):
        name = _kernels.active_backend()
        assert name in ("numba", "numpy")
        assert (name == "numba") == _kernels.USE_NUMBA

    def test_env_flag_selects_numpy(self):
        out = subprocess.run(
            [sys.executable, "-c",
             "from dpinv._kernels import active_backend; print(active_backend())"],
            capture_output=True, text=True,
            env={**os.environ, "DPINV_BACKEND": "numpy"})
        assert out.returncode == 0
        assert out.stdout.strip() == "numpy"

    def test_default_prefers_compiled(self):
        env = os.environ.copy()
        env.pop("DPINV_BACKEND", None)
        out = subprocess.run(
            [sys.executable, "-c",
             "from dpinv import _kernels as k; "
             "print(k.active_backend(), k._HAVE_NUMBA)"],
            capture_output=True, text=True, env=env)
        assert out.returncode == 0
        name, have = out.stdout.split()
        assert name == ("numba" if have == "True" else "numpy")

    def test_missing_numba_warns_and_falls_back(self, tmp_path):
        # a stub package that fails to import stands in for a broken install
        (tmp_path / "numba.py").write_text("raise ImportError('stubbed out')\n")
        env = os.environ.copy()
        env["DPINV_BACKEND"] = "numba"
        env["PYTHONPATH"] = str(tmp_path) + os.pathsep + env.get("PYTHONPATH", "")
        out = subprocess.run(
            [sys.executable, "-c",
             "from dpinv._kernels import active_backend; print(active_backend())"],
            capture_output=True, text=True, env=env)
        assert out.returncode == 0
        assert out.stdout.strip() == "numpy"
        assert "falling back to numpy" in out.stderr


class TestEndToEndParity:
    """Same command, both backends, byte-identical results."""

    @pytest.fixture()
    def graph_file(self, tmp_path):
        path = tmp_path / "g.tsv"
        assert main(["gen", "--n", "40", "--extra", "20", "--seed", "11",
                     "--out", str(path)]) == 0
        return path

    def test_stationary_stdout_identical(self, graph_file):
        argv = ["stationary", str(graph_file), "--tol", "1e-11", "--seed", "0"]
        a = run_cli_subprocess(argv, backend="numpy")
        b = run_cli_subprocess(argv, backend=None)
        assert a.returncode == 0 and b.returncode == 0
        assert a.stdout == b.stdout

    def test_pinv_raw_blocks_identical(self, graph_file, tmp_path):
        out_np = tmp_path / "np.blk"
        out_default = tmp_path / "default.blk"
        base = ["pinv", str(graph_file), "--cols", "0,7,19", "--kind", "d",
                "--tol", "1e-11", "--format", "raw"]
        a = run_cli_subprocess(base + ["--out", str(out_np)], backend="numpy")
        b = run_cli_subprocess(base + ["--out", str(out_default)], backend=None)
        assert a.returncode == 0 and b.returncode == 0
        assert out_np.read_bytes() == out_default.read_bytes()

    def test_pinv_csv_identical(self, graph_file, tmp_path):
        out_np = tmp_path / "np.csv"
        out_default = tmp_path / "default.csv"
        base = ["pinv", str(graph_file), "--cols", "2,5", "--tol", "1e-11"]
        a = run_cli_subprocess(base + ["--out", str(out_np)], backend="numpy")
        b = run_cli_subprocess(base + ["--out", str(out_default)], backend=None)
        assert a.returncode == 0 and b.returncode == 0
        assert out_np.read_text() == out_default.read_text()


class TestMonteCarloKernels:
    def cycle3_cum(self):
        p = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        return np.cumsum(p, axis=1)

    @pytest.mark.parametrize("kernel", [_kernels.mc_walk_numba,
                                        _kernels.mc_walk_numpy])
    def test_deterministic_chain_exact_moments(self, kernel):
        # on the directed 3-cycle every 0 -> 1 walk is 1 step, return is 2
        cum = self.cycle3_cum()
        trials = 50
        randoms = np.random.default_rng(0).random(3 * trials)
        h_m = np.zeros(2)
        c_m = np.zeros(2)
        vs = np.zeros(3)
        vq = np.zeros(3)
        res = kernel(cum, 0, 1, trials, randoms, h_m, c_m, vs, vq)
        assert res == 3 * trials  # one random per step, three steps per trial
        assert np.array_equal(h_m, [trials, trials])
        assert np.array_equal(c_m, [3.0 * trials, 9.0 * trials])
        assert np.array_equal(vs, [trials, 0.0, 0.0])
        assert np.array_equal(vq, [trials, 0.0, 0.0])

    @pytest.mark.parametrize("kernel", [_kernels.mc_walk_numba,
                                        _kernels.mc_walk_numpy])
    def test_budget_exhaustion_returns_sentinel(self, kernel):
        cum = self.cycle3_cum()
        out = kernel(cum, 0, 1, 1, np.random.default_rng(1).random(2),
                     np.zeros(2), np.zeros(2), np.zeros(3), np.zeros(3))
        assert out == -1

    @pytest.mark.parametrize("kernel", [_kernels.mc_walk_numba,
                                        _kernels.mc_walk_numpy])
    def test_estimates_match_exact_values(self, kernel):
        # two states: 0 -> {0, 1} each 1/2, 1 -> 0; h(0,1) = 2, c(0,1) = 3
        p = np.array([[0.5, 0.5], [1.0, 0.0]])
        cum = np.cumsum(p, axis=1)
        trials = 20_000
        randoms = np.random.default_rng(5).random(trials * 64)
        h_m = np.zeros(2)
        c_m = np.zeros(2)
        vs = np.zeros(2)
        vq = np.zeros(2)
        res = kernel(cum, 0, 1, trials, randoms, h_m, c_m, vs, vq)
        assert res > 0

        def mean_se(total, totalsq):
            mean = total / trials
            var = max(totalsq / trials - mean * mean, 0.0)
            return mean, np.sqrt(var / trials)

        h_est, h_se = mean_se(h_m[0], h_m[1])
        c_est, c_se = mean_se(c_m[0], c_m[1])
        v_est, v_se = mean_se(vs[0], vq[0])
        assert abs(h_est - 2.0) <= 4.0 * h_se
        assert abs(c_est - 3.0) <= 4.0 * c_se
        assert abs(v_est - 2.0) <= 4.0 * v_se
        assert vs[1] == 0.0  # the target is never occupied before absorption

    def test_backends_share_the_estimand(self):
        # different stream order, same distribution: estimates agree within
        # joint error bars on a chain with real randomness
        p = np.array([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.5, 0.5, 0.0]])
        cum = np.cumsum(p, axis=1)
        trials = 20_000
        results = []
        for kernel, seed in ((_kernels.mc_walk_numba, 3),
                             (_kernels.mc_walk_numpy, 4)):
            randoms = np.random.default_rng(seed).random(trials * 128)
            h_m = np.zeros(2)
            c_m = np.zeros(2)
            vs = np.zeros(3)
            vq = np.zeros(3)
            assert kernel(cum, 0, 2, trials, randoms, h_m, c_m, vs, vq) > 0
            mean = h_m[0] / trials
            var = max(h_m[1] / trials - mean * mean, 0.0)
            results.append((mean, np.sqrt(var / trials)))
        (m1, s1), (m2, s2) = results
        assert abs(m1 - m2) <= 4.0 * np.hypot(s1, s2)
