import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from ideal_al.errors import InputShapeError, UsageError
from ideal_al.propagator import (
    build_training_batch,
    guess_label,
    guess_labels_batch,
    mix_pair,
    sample_lambda,
)


class TestGuessLabel:
    def test_identical_preds_unchanged(self):
        p = np.array([0.2, 0.8])
        out = guess_label([p, p, p], [1.0, 1.0, 0.5])
        assert np.allclose(out.distribution, p)

    def test_hand_weighted_average(self):
        # weight triple (1, 1, 0.5) over (1,0), (0,1), (1,0)
        out = guess_label([[1, 0], [0, 1], [1, 0]], [1.0, 1.0, 0.5])
        assert np.allclose(out.distribution, [0.6, 0.4])

    def test_single_pred_identity(self):
        out = guess_label([[0.3, 0.7]], [1.0])
        assert np.allclose(out.distribution, [0.3, 0.7])

    def test_all_zero_weights_rejected(self):
        with pytest.raises(UsageError):
            guess_label([[0.5, 0.5], [0.5, 0.5]], [0.0, 0.0])

    def test_weight_count_mismatch(self):
        with pytest.raises(UsageError):
            guess_label([[0.5, 0.5]], [1.0, 1.0])

    def test_permutation_invariance(self):
        preds = [[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]]
        weights = [1.0, 0.7, 0.3]
        a = guess_label(preds, weights).distribution
        perm = [2, 0, 1]
        b = guess_label([preds[i] for i in perm],
                        [weights[i] for i in perm]).distribution
        assert np.allclose(a, b)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(0)
        P_orig = rng.dirichlet(np.ones(3), size=5)
        P_aug = rng.dirichlet(np.ones(3), size=(5, 2))
        w = [1.0, 0.8, 0.2]
        batch = guess_labels_batch(P_orig, P_aug, w)
        for i in range(5):
            single = guess_label([P_orig[i], *P_aug[i]], w).distribution
            assert np.allclose(batch[i], single)


class TestSampleLambda:
    def test_fold_range(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            lam = sample_lambda(0.75, rng)
            assert 0.5 <= lam <= 1.0

    def test_invalid_alpha(self):
        with pytest.raises(UsageError):
            sample_lambda(0.0, np.random.default_rng(0))

    def test_mean_matches_quadrature_oracle(self):
        alpha = 0.75
        rng = np.random.default_rng(7)
        draws = np.array([sample_lambda(alpha, rng) for _ in range(100_000)])
        pdf = stats.beta(alpha, alpha).pdf
        analytic, _ = integrate.quad(lambda t: max(t, 1 - t) * pdf(t), 0, 1)
        assert abs(draws.mean() - analytic) < 0.01


class TestMixPair:
    def test_endpoint(self):
        out = mix_pair([1.0, 2.0], [1, 0], [3.0, 4.0], [0, 1], 1.0)
        assert np.allclose(out.x, [1.0, 2.0])
        assert np.allclose(out.y, [1, 0])

    def test_midpoint(self):
        out = mix_pair([0.0, 0.0], [1, 0], [0.0, 0.0], [0, 1], 0.5)
        assert np.allclose(out.y, [0.5, 0.5])

    def test_hand_values(self):
        out = mix_pair([2.0, 0.0], [1, 0], [0.0, 2.0], [0, 1], 0.7)
        assert np.allclose(out.x, [1.4, 0.6])

    def test_dim_mismatch(self):
        with pytest.raises(InputShapeError):
            mix_pair([1.0], [1, 0], [1.0, 2.0], [0, 1], 0.6)

    def test_lambda_out_of_range(self):
        with pytest.raises(UsageError):
            mix_pair([1.0], [1, 0], [2.0], [0, 1], 0.3)

    @given(lam=st.floats(min_value=0.5, max_value=1.0),
           y1=st.floats(min_value=0, max_value=1),
           y2=st.floats(min_value=0, max_value=1))
    @settings(max_examples=300, deadline=None)
    def test_convex_combination_bounds(self, lam, y1, y2):
        out = mix_pair([0.0], [y1, 1 - y1], [0.0], [y2, 1 - y2], lam)
        lo, hi = min(y1, y2), max(y1, y2)
        assert lo - 1e-12 <= out.y[0] <= hi + 1e-12


class TestBuildTrainingBatch:
    def _pairs(self, n, d=3, c=2, labeled=True, seed=0):
        rng = np.random.default_rng(seed)
        return [(rng.uniform(0, 1, d), rng.dirichlet(np.ones(c)))
                for _ in range(n)]

    def test_empty_labeled_rejected(self):
        with pytest.raises(UsageError):
            build_training_batch([], self._pairs(2), [], 0.75,
                                 np.random.default_rng(0))

    def test_only_labeled_all_ll(self):
        l_ex, u_ex = build_training_batch(self._pairs(4), [], [], 0.75,
                                          np.random.default_rng(0))
        assert len(u_ex) == 0
        assert len(l_ex) == 4
        assert all(ex.kind == "LL" for ex in l_ex)

    def test_counts_deterministic(self):
        labeled = self._pairs(4, seed=1)
        unlabeled = self._pairs(4, seed=2)
        augmented = self._pairs(8, seed=3)
        l_ex, u_ex = build_training_batch(labeled, unlabeled, augmented, 0.75,
                                          np.random.default_rng(5))
        assert len(l_ex) + len(u_ex) == 16
        assert len(l_ex) == 4 and len(u_ex) == 12
        l2, u2 = build_training_batch(labeled, unlabeled, augmented, 0.75,
                                      np.random.default_rng(5))
        for a, b in zip(l_ex + u_ex, l2 + u2):
            assert np.array_equal(a.x, b.x)
            assert np.array_equal(a.y, b.y)

    def test_targets_are_simplexes(self):
        rng = np.random.default_rng(9)
        for trial in range(50):
            l_ex, u_ex = build_training_batch(
                self._pairs(3, seed=trial), self._pairs(3, seed=trial + 100),
                self._pairs(3, seed=trial + 200), 0.75, rng)
            for ex in l_ex + u_ex:
                assert np.all(ex.y >= -1e-12)
                assert abs(ex.y.sum() - 1.0) < 1e-9
                assert 0.5 <= ex.lam <= 1.0

    def test_identical_inputs_idempotent(self):
        h = np.array([0.4, 0.6])
        y = np.array([0.5, 0.5])
        l_ex, u_ex = build_training_batch([(h, y)] * 3, [(h, y)] * 3, [], 0.75,
                                          np.random.default_rng(2))
        for ex in l_ex + u_ex:
            assert np.allclose(ex.x, h)
            assert np.allclose(ex.y, y)
