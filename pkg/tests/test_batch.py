"""Tests for the pair aggregation, gradient/HVP oracles, CG, and the solver."""

import numpy as np
import pytest

from aucmax.batch import (
    BatchConfig,
    PairAggregates,
    conjugate_gradient,
    grad_fast,
    hvp_fast,
    pairwise_objective,
    train_batch,
)
from aucmax.embedding import EmbeddedDataset
from aucmax.errors import ConfigError
from aucmax.metrics import auc


# ---------------------------------------------------------------------------
# Brute-force oracles: literal enumeration of every positive/negative pair.
# The active-pair predicate matches the implementation bit for bit
# (s_j > s_i - 1.0 evaluated in that float order).
# ---------------------------------------------------------------------------


def active_pairs(s, y):
    out = []
    for i in np.flatnonzero(y == 1):
        t = s[i] - 1.0
        for j in np.flatnonzero(y == -1):
            if s[j] > t:
                out.append((i, j))
    return out


def brute_grad(w, X, y, C):
    s = X @ w
    g = w.copy()
    for i, j in active_pairs(s, y):
        d = 1.0 - s[i] + s[j]
        g += 2.0 * C * d * (X[j] - X[i])
    return g


def brute_hvp(w, v, X, y, C):
    s = X @ w
    out = v.copy()
    for i, j in active_pairs(s, y):
        diff = X[i] - X[j]
        out += 2.0 * C * float(diff @ v) * diff
    return out


def brute_objective(w, X, y, C):
    s = X @ w
    total = sum((1.0 - s[i] + s[j]) ** 2 for i, j in active_pairs(s, y))
    return 0.5 * float(w @ w) + C * total


def random_instance(rng, n_max=60, r_max=8, spread=1.0):
    n = int(rng.integers(4, n_max + 1))
    r = int(rng.integers(1, r_max + 1))
    X = rng.standard_normal((n, r)) * spread
    y = np.where(rng.random(n) < rng.uniform(0.2, 0.8), 1, -1)
    y[0], y[1] = 1, -1
    return EmbeddedDataset(X, y)


class TestPairAggregates:
    def test_counts_match_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            data = random_instance(rng)
            w = rng.standard_normal(data.r) * rng.uniform(0.1, 2.0)
            s = data.features @ w
            agg = PairAggregates(s, data.pos_idx, data.neg_idx)
            pairs = active_pairs(s, data.y)
            assert agg.active_pairs == len(pairs)
            # both sides must see the identical pair set
            assert int(agg.c_pos.sum()) == int(agg.c_neg.sum())
            for local_i, i in enumerate(data.pos_idx):
                assert agg.c_pos[local_i] == sum(1 for a, _ in pairs if a == i)

    def test_counts_consistent_with_ties_at_boundary(self):
        # scores engineered so several margins sit exactly at the threshold
        s = np.array([1.0, 0.5, 0.0, 0.0, -0.5, 1.5])
        y = np.array([1, 1, 1, -1, -1, -1])
        pos = np.flatnonzero(y == 1)
        neg = np.flatnonzero(y == -1)
        agg = PairAggregates(s, pos, neg)
        pairs = active_pairs(s, y)
        assert agg.active_pairs == len(pairs)
        assert int(agg.c_pos.sum()) == int(agg.c_neg.sum()) == len(pairs)

    def test_loss_matches_brute(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            data = random_instance(rng)
            w = rng.standard_normal(data.r)
            expected = brute_objective(w, data.features, data.y, C=1.0) - 0.5 * float(w @ w)
            agg = PairAggregates(data.features @ w, data.pos_idx, data.neg_idx)
            np.testing.assert_allclose(agg.loss(2), expected, rtol=1e-9, atol=1e-12)


class TestGradFast:
    def test_single_pair_by_hand(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        data = EmbeddedDataset(X, np.array([1, -1]))
        g = grad_fast(np.zeros(2), data, C=1.0)
        np.testing.assert_allclose(g, [-2.0, 2.0], rtol=1e-15)

    def test_no_active_pairs_returns_w(self):
        X = np.array([[2.0], [-2.0], [3.0], [-1.5]])
        data = EmbeddedDataset(X, np.array([1, -1, 1, -1]))
        w = np.array([1.0])  # every margin is at least 3
        np.testing.assert_array_equal(grad_fast(w, data, C=5.0), w)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            data = random_instance(rng)
            w = rng.standard_normal(data.r) * rng.uniform(0.05, 2.0)
            C = float(rng.uniform(0.05, 4.0))
            expected = brute_grad(w, data.features, data.y, C)
            got = grad_fast(w, data, C)
            np.testing.assert_allclose(got, expected, rtol=1e-10, atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            data = random_instance(rng, n_max=40, r_max=6)
            w = rng.standard_normal(data.r) * 0.5
            C = float(rng.uniform(0.1, 2.0))
            g = grad_fast(w, data, C)
            h = 1e-6
            fd = np.empty_like(g)
            for k in range(data.r):
                e = np.zeros(data.r)
                e[k] = h
                fd[k] = (
                    pairwise_objective(w + e, data, C) - pairwise_objective(w - e, data, C)
                ) / (2 * h)
            scale = max(1.0, float(np.linalg.norm(g)))
            np.testing.assert_allclose(g, fd, rtol=0, atol=1e-5 * scale)


class TestHvpFast:
    def _agg(self, w, data):
        return PairAggregates(data.features @ w, data.pos_idx, data.neg_idx)

    def test_identity_when_no_active_pairs(self):
        X = np.array([[2.0], [-2.0]])
        data = EmbeddedDataset(X, np.array([1, -1]))
        w = np.array([1.0])
        v = np.array([3.7])
        np.testing.assert_array_equal(hvp_fast(self._agg(w, data), v, data, C=2.0), v)

    def test_single_active_pair_rank_one(self):
        X = np.array([[0.5, 0.0], [0.0, 0.5]])
        data = EmbeddedDataset(X, np.array([1, -1]))
        w = np.zeros(2)
        diff = X[0] - X[1]
        v = diff.copy()
        expected = v + 2.0 * float(diff @ diff) * diff
        np.testing.assert_allclose(
            hvp_fast(self._agg(w, data), v, data, C=1.0), expected, rtol=1e-14
        )

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            data = random_instance(rng)
            w = rng.standard_normal(data.r) * rng.uniform(0.05, 2.0)
            v = rng.standard_normal(data.r)
            C = float(rng.uniform(0.05, 4.0))
            expected = brute_hvp(w, v, data.features, data.y, C)
            got = hvp_fast(self._agg(w, data), v, data, C)
            np.testing.assert_allclose(got, expected, rtol=1e-8, atol=1e-12)

    def test_quadratic_form_at_least_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            data = random_instance(rng)
            w = rng.standard_normal(data.r)
            v = rng.standard_normal(data.r)
            C = float(rng.uniform(0.05, 4.0))
            Hv = hvp_fast(self._agg(w, data), v, data, C)
            assert float(v @ Hv) >= float(v @ v) - 1e-10

    def test_symmetry(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            data = random_instance(rng)
            w = rng.standard_normal(data.r)
            agg = self._agg(w, data)
            u = rng.standard_normal(data.r)
            v = rng.standard_normal(data.r)
            C = 1.3
            lhs = float(u @ hvp_fast(agg, v, data, C))
            rhs = float(v @ hvp_fast(agg, u, data, C))
            np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


class TestConjugateGradient:
    def test_identity_solved_in_one_iteration(self):
        g = np.array([1.0, -2.0, 0.5])
        s, history = conjugate_gradient(lambda v: v, g, cg_tol=1e-10, cg_max=50)
        np.testing.assert_allclose(s, -g, rtol=1e-14)
        assert len(history) == 2

    def test_diagonal_two_by_two(self):
        H = np.diag([2.0, 5.0])
        g = np.array([4.0, -10.0])
        s, history = conjugate_gradient(lambda v: H @ v, g, cg_tol=1e-12, cg_max=10)
        np.testing.assert_allclose(s, [-2.0, 2.0], rtol=1e-12)
        assert len(history) <= 3

    def test_residual_history_on_these_instances(self):
        # identity and well-conditioned diagonal systems keep the residual
        # monotone; that is what the histories below certify
        g = np.array([3.0, 1.0, -2.0, 0.25])
        _, hist_id = conjugate_gradient(lambda v: v, g, 1e-12, 20)
        assert all(b <= a + 1e-12 for a, b in zip(hist_id, hist_id[1:]))
        H = np.diag([1.0, 1.5])
        _, hist_diag = conjugate_gradient(lambda v: H @ v, np.array([1.0, 2.0]), 1e-12, 20)
        assert all(b <= a + 1e-12 for a, b in zip(hist_diag, hist_diag[1:]))

    def test_zero_gradient(self):
        s, history = conjugate_gradient(lambda v: v, np.zeros(3), 1e-10, 10)
        np.testing.assert_array_equal(s, np.zeros(3))
        assert history == [0.0]

    def test_respects_iteration_cap(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((30, 30))
        H = A @ A.T + np.eye(30)
        g = rng.standard_normal(30)
        _, history = conjugate_gradient(lambda v: H @ v, g, cg_tol=1e-16, cg_max=5)
        assert len(history) <= 6


def separable_1d(n_pos=30, n_neg=50):
    X = np.concatenate([np.ones(n_pos), -np.ones(n_neg)]).reshape(-1, 1)
    y = np.array([1] * n_pos + [-1] * n_neg)
    return EmbeddedDataset(X, y)


class TestTrainBatch:
    def test_separable_reaches_perfect_auc(self):
        data = separable_1d()
        model = train_batch(data, BatchConfig(C=1.0))
        scores = data.features @ model.w
        assert auc(scores, data.y).auc == 1.0
        final = pairwise_objective(model.w, data, C=1.0)
        assert final < 1.0 * data.pos_idx.size * data.neg_idx.size

    def test_tiny_c_shrinks_weights(self):
        data = separable_1d()
        model = train_batch(data, BatchConfig(C=1e-8, grad_tol=1e-12))
        assert np.linalg.norm(model.w) <= 1e-3
        # the direction still ranks the separable data perfectly
        assert model.w[0] > 0
        assert auc(data.features @ model.w, data.y).auc == 1.0

    def test_objective_strictly_decreases(self):
        rng = np.random.default_rng(8)
        data = random_instance(rng, n_max=50, r_max=5)
        model = train_batch(data, BatchConfig(C=1.0))
        objs = model.diagnostics["objectives"]
        assert all(b < a for a, b in zip(objs, objs[1:]))

    def test_matches_grid_search_oracle(self):
        X = np.array(
            [
                [0.6, 0.1],
                [0.4, 0.5],
                [0.7, -0.2],
                [-0.5, 0.3],
                [-0.2, -0.4],
                [0.0, 0.0],
            ]
        )
        y = np.array([1, 1, 1, -1, -1, -1])
        data = EmbeddedDataset(X, y)
        C = 0.05
        model = train_batch(
            data, BatchConfig(C=C, grad_tol=1e-10, cg_tol=1e-8, max_outer=200)
        )
        f_solver = pairwise_objective(model.w, data, C)

        diffs = X[y == 1][:, None, :] - X[y == -1][None, :, :]
        diffs = diffs.reshape(-1, 2)
        grid = np.arange(-3.0, 3.0 + 1e-9, 1e-3)
        best = np.inf
        chunk = 2000
        for lo in range(0, grid.size, chunk):
            w0 = grid[lo : lo + chunk]
            W = np.stack(
                [np.repeat(w0, grid.size), np.tile(grid, w0.size)], axis=1
            )
            margins = 1.0 - W @ diffs.T
            np.maximum(margins, 0.0, out=margins)
            F = 0.5 * np.einsum("ij,ij->i", W, W) + C * np.sum(margins**2, axis=1)
            best = min(best, float(F.min()))
        assert abs(f_solver - best) <= 1e-6

    def test_convexity_midpoint(self):
        rng = np.random.default_rng(9)
        data = random_instance(rng, n_max=40, r_max=6)
        C = 0.7
        for _ in range(50):
            a = rng.standard_normal(data.r)
            b = rng.standard_normal(data.r)
            fa = pairwise_objective(a, data, C)
            fb = pairwise_objective(b, data, C)
            fm = pairwise_objective(0.5 * (a + b), data, C)
            assert fm <= 0.5 * (fa + fb) + 1e-12

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        data = random_instance(rng, n_max=60, r_max=6)
        a = train_batch(data, BatchConfig(C=0.5))
        b = train_batch(data, BatchConfig(C=0.5))
        np.testing.assert_array_equal(a.w, b.w)

    def test_default_grad_tol_relative_to_start(self):
        data = separable_1d(5, 5)
        model = train_batch(data, BatchConfig(C=1.0))
        assert model.diagnostics["converged"]
        assert model.diagnostics["grad_norms"][-1] <= model.hyperparameters["grad_tol"]

    def test_rejects_bad_config(self):
        with pytest.raises(ConfigError):
            BatchConfig(C=0.0)
        with pytest.raises(ConfigError):
            BatchConfig(C=1.0, grad_tol=-1.0)
        with pytest.raises(ConfigError):
            BatchConfig(C=1.0, max_outer=0)


class TestGradScaling:
    def test_near_linear_in_n(self):
        import time

        rng = np.random.default_rng(11)
        r = 8

        def timed(n):
            X = rng.standard_normal((n, r))
            y = np.where(rng.random(n) < 0.5, 1, -1)
            y[0], y[1] = 1, -1
            data = EmbeddedDataset(X, y)
            w = rng.standard_normal(r) * 0.1
            best = np.inf
            for _ in range(5):
                t0 = time.perf_counter()
                grad_fast(w, data, C=1.0)
                best = min(best, time.perf_counter() - t0)
            return best

        timed(4000)  # warm-up allocation paths
        t1 = timed(20000)
        t2 = timed(40000)
        assert t2 / t1 < 2.5
