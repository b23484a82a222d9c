"""Classifier tests: label order, CNN wrapper, PCA/LDA with a high-precision
Bayes oracle."""

import mpmath
import numpy as np
import pytest

from emonet import classifiers, nn
from emonet.classifiers import (LABELS, EmotionScores, EmptyClass,
                                ClassTooSmall, DegenerateData, LdaModel)


def bayes_oracle(model, z):
    """Direct high-precision evaluation of pi_k f_k(z) / sum_l pi_l f_l(z)."""
    mpmath.mp.dps = 60
    d = model.covariance.shape[0]
    cov = mpmath.matrix(model.covariance.tolist())
    inv = cov ** -1
    det = mpmath.det(cov)
    norm = 1 / mpmath.sqrt((2 * mpmath.pi) ** d * det)
    weights = []
    for k in range(len(model.priors)):
        diff = mpmath.matrix([float(z[i] - model.class_means[k, i]) for i in range(d)])
        quad = (diff.T * inv * diff)[0, 0]
        weights.append(mpmath.mpf(float(model.priors[k])) * norm * mpmath.exp(-quad / 2))
    total = sum(weights)
    return np.array([float(w / total) for w in weights])


def random_lda_model(rng, k=4, d=3):
    means = rng.standard_normal((k, d)) * 2.0
    m = rng.standard_normal((d, d))
    cov = m @ m.T + 0.5 * np.eye(d)
    priors = rng.random(k) + 0.1
    priors /= priors.sum()
    return LdaModel(pca_mean=np.zeros(1), pca_basis=np.zeros((1, 1)),
                    class_means=means, covariance=cov, priors=priors)


class TestLabels:
    def test_fixed_order(self):
        assert LABELS == ("angry", "disgust", "scared", "happy",
                          "sad", "surprised", "neutral")

    def test_scores_argmax_tie_breaks_low(self):
        probs = np.full(7, 1 / 7)
        assert EmotionScores(probs=probs).argmax == 0

    def test_scores_shape_checked(self):
        with pytest.raises(ValueError):
            EmotionScores(probs=np.zeros(6))


class TestCnnWrapper:
    def test_zero_weight_model_uniform(self):
        m = nn.build_model(8, [nn.LayerSpec("dense", width=7),
                               nn.LayerSpec("softmax")], seed=0)
        for p in m.params:
            for key in p:
                p[key] = np.zeros_like(p[key])
        scores = classifiers.cnn_predict(m, np.zeros((8, 8), dtype=np.float32))
        np.testing.assert_allclose(scores.probs, 1 / 7, atol=1e-9)

    def test_scores_sum_to_one(self):
        m = nn.build_model(8, [nn.LayerSpec("dense", width=7),
                               nn.LayerSpec("softmax")], seed=1)
        rng = np.random.default_rng(0)
        for _ in range(10):
            s = classifiers.cnn_predict(m, rng.random((8, 8)).astype(np.float32))
            assert abs(s.probs.sum() - 1.0) < 1e-9

    def test_train_missing_class_rejected(self):
        x = np.zeros((10, 8, 8), dtype=np.float32)
        y = np.zeros(10, dtype=np.int64)  # only class 0 present
        with pytest.raises(EmptyClass) as exc:
            classifiers.cnn_train(x, y, epochs=1)
        assert "disgust" in str(exc.value)

    def test_train_epochs_validated(self):
        x = np.zeros((7, 8, 8), dtype=np.float32)
        y = np.arange(7, dtype=np.int64)
        with pytest.raises(ValueError):
            classifiers.cnn_train(x, y, epochs=0)

    def test_train_lr_zero_keeps_init(self):
        rng = np.random.default_rng(3)
        x = rng.random((14, 12, 12)).astype(np.float32)
        y = np.tile(np.arange(7), 2).astype(np.int64)
        layers = [nn.LayerSpec("dense", width=7), nn.LayerSpec("softmax")]
        m, _ = classifiers.cnn_train(x, y, epochs=1, lr=0.0, seed=5, layers=layers)
        init = nn.build_model(12, layers, seed=5)
        for pa, pb in zip(m.params, init.params):
            for key in pa:
                np.testing.assert_array_equal(pa[key], pb[key])

    def test_train_deterministic_per_seed(self):
        rng = np.random.default_rng(4)
        x = rng.random((21, 10, 10)).astype(np.float32)
        y = np.tile(np.arange(7), 3).astype(np.int64)
        layers = [nn.LayerSpec("conv", kernel_size=3, filters=2),
                  nn.LayerSpec("sigmoid"), nn.LayerSpec("dense", width=7),
                  nn.LayerSpec("softmax")]
        m1, h1 = classifiers.cnn_train(x, y, epochs=3, seed=9, layers=layers)
        m2, h2 = classifiers.cnn_train(x, y, epochs=3, seed=9, layers=layers)
        assert [h.mean_loss for h in h1] == [h.mean_loss for h in h2]
        for pa, pb in zip(m1.params, m2.params):
            for key in pa:
                np.testing.assert_array_equal(pa[key], pb[key])


class TestPca:
    def test_line_data_rank_one(self):
        rng = np.random.default_rng(0)
        t = rng.standard_normal(30)
        direction = np.array([3.0, 4.0]) / 5.0
        x = np.outer(t, direction)
        _, basis = classifiers.pca_fit(x, 1)
        cross = abs(float(basis[:, 0] @ direction))
        assert cross == pytest.approx(1.0, abs=1e-6)

    def test_complete_basis_zero_reconstruction_error(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((20, 5))
        mean, basis = classifiers.pca_fit(x, 5)
        z = (x - mean) @ basis
        back = z @ basis.T + mean
        np.testing.assert_allclose(back, x, atol=1e-6)

    def test_projected_variance_matches_2x2_closed_form(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((40, 2)) @ np.array([[2.0, 0.3], [0.3, 0.5]])
        mean, basis = classifiers.pca_fit(x, 2)
        xc = x - mean
        cov = xc.T @ xc / (len(x) - 1)
        tr = cov[0, 0] + cov[1, 1]
        det = cov[0, 0] * cov[1, 1] - cov[0, 1] ** 2
        disc = np.sqrt(tr * tr / 4 - det)
        expected = [tr / 2 + disc, tr / 2 - disc]  # descending
        proj_var = ((xc @ basis) ** 2).sum(axis=0) / (len(x) - 1)
        np.testing.assert_allclose(proj_var, expected, atol=1e-8)

    def test_basis_orthonormal(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((30, 6))
        _, basis = classifiers.pca_fit(x, 4)
        np.testing.assert_allclose(basis.T @ basis, np.eye(4), atol=1e-8)

    def test_degenerate_data_rejected(self):
        with pytest.raises(DegenerateData):
            classifiers.pca_fit(np.ones((5, 3)), 1)

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((25, 4))
        _, basis = classifiers.pca_fit(x, 3)
        for j in range(3):
            assert basis[np.argmax(np.abs(basis[:, j])), j] > 0


class TestLdaFit:
    def test_symmetric_clusters(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((50, 2)) * 0.1 + np.array([2.0, 0.0])
        b = -a
        z = np.vstack([a, b])
        y = np.array([0] * 50 + [1] * 50)
        means, _, priors = classifiers.lda_fit(z, y)
        np.testing.assert_allclose(means[0], -means[1], atol=1e-9)
        np.testing.assert_allclose(priors, [0.5, 0.5], atol=1e-12)

    def test_pooled_covariance_matches_summation_oracle(self):
        rng = np.random.default_rng(6)
        z = rng.standard_normal((60, 3))
        y = rng.integers(0, 3, size=60)
        y[:6] = [0, 0, 1, 1, 2, 2]  # guarantee 2 per class
        lam = 1e-4
        _, cov, _ = classifiers.lda_fit(z, y, lam=lam)
        # independent scalar-loop pooled covariance
        k = 3
        d = 3
        scatter = np.zeros((d, d))
        for c in range(k):
            zc = z[y == c]
            mu = zc.mean(axis=0)
            for row in zc:
                diff = row - mu
                for i in range(d):
                    for j in range(d):
                        scatter[i, j] += diff[i] * diff[j]
        expected = scatter / (len(z) - k) + lam * np.eye(d)
        np.testing.assert_allclose(cov, expected, atol=1e-10)

    def test_large_lambda_nearest_mean_limit(self):
        rng = np.random.default_rng(7)
        z = np.vstack([rng.standard_normal((20, 2)) + [5, 0],
                       rng.standard_normal((20, 2)) - [5, 0]])
        y = np.array([0] * 20 + [1] * 20)
        means, cov, priors = classifiers.lda_fit(z, y, lam=1e6)
        model = LdaModel(pca_mean=np.zeros(1), pca_basis=np.zeros((1, 1)),
                         class_means=means, covariance=cov, priors=priors)
        post = classifiers.lda_posterior(model, np.array([4.0, 0.0]))
        assert post[0] > 0.5  # closer to class 0 mean

    def test_class_too_small(self):
        z = np.random.default_rng(8).standard_normal((5, 2))
        y = np.array([0, 0, 0, 0, 1])
        with pytest.raises(ClassTooSmall):
            classifiers.lda_fit(z, y)


class TestLdaPosterior:
    def test_equidistant_equal_priors(self):
        model = LdaModel(pca_mean=np.zeros(1), pca_basis=np.zeros((1, 1)),
                         class_means=np.array([[1.0, 0.0], [-1.0, 0.0]]),
                         covariance=np.eye(2), priors=np.array([0.5, 0.5]))
        post = classifiers.lda_posterior(model, np.array([0.0, 3.0]))
        np.testing.assert_allclose(post, [0.5, 0.5], atol=1e-12)

    def test_dominance_at_class_mean(self):
        model = LdaModel(pca_mean=np.zeros(1), pca_basis=np.zeros((1, 1)),
                         class_means=np.array([[10.0, 0.0], [-10.0, 0.0]]),
                         covariance=np.eye(2), priors=np.array([0.5, 0.5]))
        post = classifiers.lda_posterior(model, np.array([10.0, 0.0]))
        assert post[0] > 0.99

    def test_matches_bayes_oracle_1000_draws(self):
        rng = np.random.default_rng(9)
        for trial in range(1000):
            model = random_lda_model(rng)
            z = rng.standard_normal(3) * 3.0
            post = classifiers.lda_posterior(model, z)
            assert abs(post.sum() - 1.0) < 1e-12
            np.testing.assert_allclose(post, bayes_oracle(model, z), atol=1e-10)

    def test_prior_scaling_invariance(self):
        rng = np.random.default_rng(10)
        model = random_lda_model(rng)
        z = rng.standard_normal(3)
        base = classifiers.lda_posterior(model, z)
        scaled = LdaModel(pca_mean=model.pca_mean, pca_basis=model.pca_basis,
                          class_means=model.class_means,
                          covariance=model.covariance,
                          priors=model.priors * 37.5)
        np.testing.assert_allclose(classifiers.lda_posterior(scaled, z),
                                   base, atol=1e-12)

    def test_no_underflow_far_from_means(self):
        model = LdaModel(pca_mean=np.zeros(1), pca_basis=np.zeros((1, 1)),
                         class_means=np.array([[0.0, 0.0], [1.0, 0.0]]),
                         covariance=np.eye(2) * 0.01, priors=np.array([0.5, 0.5]))
        post = classifiers.lda_posterior(model, np.array([1000.0, 1000.0]))
        assert np.all(np.isfinite(post)) and abs(post.sum() - 1.0) < 1e-12


class TestEvaluate:
    def test_constant_predictor_balanced_set(self):
        m = nn.build_model(8, [nn.LayerSpec("dense", width=7),
                               nn.LayerSpec("softmax")], seed=0)
        for p in m.params:
            for key in p:
                p[key] = np.zeros_like(p[key])
        m.params[0]["b"][0] = 10.0  # always predicts class 0
        x = np.random.default_rng(0).random((70, 8, 8)).astype(np.float32)
        y = np.tile(np.arange(7), 10).astype(np.int64)
        acc, confusion = classifiers.evaluate(m, x, y)
        assert acc == pytest.approx(1 / 7)
        assert confusion.sum() == 70
        assert confusion[:, 0].sum() == 70

    def test_confusion_rows_are_true_counts(self):
        m = nn.build_model(8, [nn.LayerSpec("dense", width=7),
                               nn.LayerSpec("softmax")], seed=2)
        x = np.random.default_rng(1).random((21, 8, 8)).astype(np.float32)
        y = np.repeat(np.arange(7), 3).astype(np.int64)
        _, confusion = classifiers.evaluate(m, x, y)
        np.testing.assert_array_equal(confusion.sum(axis=1), np.full(7, 3))

    def test_empty_dataset_rejected(self):
        m = nn.build_model(8, [nn.LayerSpec("dense", width=7),
                               nn.LayerSpec("softmax")], seed=0)
        with pytest.raises(ValueError):
            classifiers.evaluate(m, np.zeros((0, 8, 8)), np.zeros(0, dtype=np.int64))
