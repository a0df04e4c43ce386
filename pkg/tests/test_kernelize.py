import numpy as np
import pytest

from d4 import D4Config, LabeledDataset, LearnerSpec, d4_fit, d4_transform
from d4.errors import (
    DegenerateDirectionError,
    DimensionMismatchError,
    NonSymmetricKernelError,
)
from d4.kernelize import (
    STATUS_DEGENERATE,
    check_kernel,
    kernel_d4_apply,
    kernel_d4_fit,
    kernel_d4_step,
)
from d4.learners import linear_kernel, polynomial_kernel


def quadratic_feature_map(X, coef0=1.0):
    """Explicit features of the degree-2 polynomial kernel (x.z + c)^2.

    Oracle only: phi(x).phi(z) must equal the kernel value exactly.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    blocks = [X**2]
    for i in range(p):
        for j in range(i + 1, p):
            blocks.append(np.sqrt(2.0) * (X[:, i] * X[:, j])[:, None])
    blocks.append(np.sqrt(2.0 * coef0) * X)
    blocks.append(np.full((n, 1), coef0))
    return np.hstack([b if b.ndim == 2 else b[:, None] for b in blocks])


def labels_from_direction(rng, X, flip=0.1):
    v = rng.standard_normal(X.shape[1])
    y = np.where(X @ v >= 0, 1.0, -1.0)
    return y * np.where(rng.random(X.shape[0]) < 1.0 - flip, 1.0, -1.0)


class TestCheckKernel:
    def test_accepts_gram(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((10, 3))
        check_kernel(X @ X.T)

    def test_rejects_nonsymmetric(self):
        K = np.array([[1.0, 0.2], [0.1, 1.0]])
        with pytest.raises(NonSymmetricKernelError):
            check_kernel(K)

    def test_rejects_indefinite(self):
        K = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(NonSymmetricKernelError):
            check_kernel(K)


class TestKernelStep:
    def test_linear_kernel_matches_explicit_projection(self):
        # Primary correctness oracle: for K = X X^T and a direction
        # v = X^T alpha, the deflated kernel is the Gram matrix of the
        # explicitly projected rows.
        rng = np.random.default_rng(1)
        X = rng.standard_normal((30, 6))
        alpha = rng.standard_normal(30)
        K = X @ X.T
        v = X.T @ alpha
        omega = v / np.linalg.norm(v)
        X_proj = X - np.outer(X @ omega, omega)
        K_new = kernel_d4_step(K, alpha)
        np.testing.assert_allclose(K_new, X_proj @ X_proj.T, atol=1e-8)
        assert np.max(np.abs(K_new @ alpha)) <= 1e-8 * np.max(np.abs(K))

    def test_eigenvector_direction_drops_rank(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((8, 8))
        K = A @ A.T
        eigvals, eigvecs = np.linalg.eigh(K)
        alpha = eigvecs[:, -1]
        K_new = kernel_d4_step(K, alpha)
        expected = K - eigvals[-1] * np.outer(alpha, alpha)
        np.testing.assert_allclose(K_new, expected, atol=1e-8)
        assert np.linalg.matrix_rank(K_new, tol=1e-8) == np.linalg.matrix_rank(K) - 1

    def test_repeated_step_hits_degenerate_guard(self):
        # After one deflation the direction has zero feature-space norm;
        # a repeat is refused rather than renormalized into a new removal.
        rng = np.random.default_rng(3)
        X = rng.standard_normal((12, 4))
        K = X @ X.T
        alpha = rng.standard_normal(12)
        K1 = kernel_d4_step(K, alpha)
        assert np.max(np.abs(K1 @ alpha)) <= 1e-10 * np.max(np.abs(K))
        with pytest.raises(DegenerateDirectionError):
            kernel_d4_step(K1, alpha)

    def test_cross_block_update(self):
        rng = np.random.default_rng(4)
        Xtr = rng.standard_normal((20, 5))
        Xte = rng.standard_normal((7, 5))
        alpha = rng.standard_normal(20)
        v = Xtr.T @ alpha
        omega = v / np.linalg.norm(v)
        K, C = kernel_d4_step(Xtr @ Xtr.T, alpha, cross=Xte @ Xtr.T)
        Xtr_p = Xtr - np.outer(Xtr @ omega, omega)
        Xte_p = Xte - np.outer(Xte @ omega, omega)
        np.testing.assert_allclose(K, Xtr_p @ Xtr_p.T, atol=1e-8)
        np.testing.assert_allclose(C, Xte_p @ Xtr_p.T, atol=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            kernel_d4_step(np.eye(3), np.ones(4))

    def test_psd_and_trace_decrease(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((15, 6))
        K = X @ X.T
        alpha = rng.standard_normal(15)
        K_new = kernel_d4_step(K, alpha)
        s = K @ alpha
        expected_drop = float(s @ s) / float(alpha @ s)
        assert np.trace(K_new) == pytest.approx(np.trace(K) - expected_drop, rel=1e-10)
        assert np.linalg.eigvalsh(K_new)[0] >= -1e-8 * np.max(np.abs(K))


class TestKernelFit:
    def test_zero_iterations(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((10, 3))
        K = X @ X.T
        result = kernel_d4_fit(K, labels_from_direction(rng, X), iterations=0)
        assert result.iterations == 0
        np.testing.assert_array_equal(result.kernel, K)

    def test_linear_consistency_with_primal(self):
        # Step-by-step agreement between kernel-space removal on X X^T and
        # explicit removal on X with the matching ridge (no intercept).
        rng = np.random.default_rng(7)
        X = rng.standard_normal((60, 8))
        y = labels_from_direction(rng, X)
        alpha = 1.0
        result = kernel_d4_fit(X @ X.T, y, iterations=3, ridge_alpha=alpha)
        spec = LearnerSpec("ridge-ls", alpha, fit_intercept=False)
        model = d4_fit(
            LabeledDataset(X, y),
            D4Config(learner=spec, max_iterations=3),
        )
        K_cur = X @ X.T
        for k, dual in enumerate(result.directions, start=1):
            K_cur = kernel_d4_step(K_cur, dual)
            perp, _ = d4_transform(X, model, k)
            gram = perp @ perp.T
            denom = max(np.linalg.norm(gram), 1e-30)
            assert np.linalg.norm(K_cur - gram) / denom <= 1e-6
        np.testing.assert_allclose(K_cur, result.kernel, atol=1e-10)

    def test_directions_mutually_orthogonal_in_feature_space(self):
        # Each dual direction lives in the deflated feature space, so the
        # explicit vectors v_i = X_i^T alpha_i come from progressively
        # projected copies of X.
        rng = np.random.default_rng(8)
        X = rng.standard_normal((40, 6))
        y = labels_from_direction(rng, X)
        result = kernel_d4_fit(X @ X.T, y, iterations=4, ridge_alpha=0.5)
        X_cur = X.copy()
        vs = []
        for dual in result.directions:
            v = X_cur.T @ dual
            vs.append(v)
            omega = v / np.linalg.norm(v)
            X_cur = X_cur - np.outer(X_cur @ omega, omega)
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                cos = abs(vs[i] @ vs[j]) / (np.linalg.norm(vs[i]) * np.linalg.norm(vs[j]))
                assert cos <= 1e-6

    def test_polynomial_kernel_matches_quadratic_oracle(self):
        # Kernel-space removal on the degree-2 kernel agrees with primal
        # removal on the explicit quadratic feature map.
        rng = np.random.default_rng(9)
        X = rng.standard_normal((50, 4))
        y = labels_from_direction(rng, X)
        phi = quadratic_feature_map(X)
        K = polynomial_kernel(X, degree=2, coef0=1.0)
        np.testing.assert_allclose(K, phi @ phi.T, atol=1e-8)
        alpha = 1.0
        result = kernel_d4_fit(K, y, iterations=2, ridge_alpha=alpha)
        spec = LearnerSpec("ridge-ls", alpha, fit_intercept=False)
        model = d4_fit(LabeledDataset(phi, y), D4Config(learner=spec, max_iterations=2))
        K_cur = K
        for k, dual in enumerate(result.directions, start=1):
            K_cur = kernel_d4_step(K_cur, dual)
            perp, _ = d4_transform(phi, model, k)
            gram = perp @ perp.T
            denom = max(np.linalg.norm(gram), 1e-30)
            assert np.linalg.norm(K_cur - gram) / denom <= 1e-6

    def test_xor_probe_collapse(self):
        # Quadratic features separate XOR-style data; removing two implicit
        # directions destroys that separability.
        rng = np.random.default_rng(10)
        X = rng.standard_normal((600, 2))
        X = X[np.abs(X[:, 0] * X[:, 1]) > 0.15][:240]
        y = np.where(X[:, 0] * X[:, 1] >= 0, 1.0, -1.0)
        K = polynomial_kernel(X, degree=2, coef0=1.0)

        def probe_accuracy(K_fit):
            from d4.learners import classify, fit_kernel_ridge_probe

            coef = fit_kernel_ridge_probe(K_fit, y, 0.1)
            return float(np.mean(classify(K_fit @ coef) == y))

        assert probe_accuracy(K) >= 0.95
        result = kernel_d4_fit(K, y, iterations=2, ridge_alpha=0.1)
        assert probe_accuracy(result.kernel) <= 0.6

    def test_degenerate_stops_with_status(self):
        # A rank-one kernel runs out of feature space after one step.
        v = np.linspace(1.0, 2.0, 12)
        K = np.outer(v, v)
        y = np.where(v >= 1.5, 1.0, -1.0)
        result = kernel_d4_fit(K, y, iterations=5, ridge_alpha=1e-6)
        assert result.status == STATUS_DEGENERATE
        assert result.iterations < 5

    def test_apply_replays_fit(self):
        rng = np.random.default_rng(11)
        Xtr = rng.standard_normal((30, 5))
        Xte = rng.standard_normal((9, 5))
        y = labels_from_direction(rng, Xtr)
        K = Xtr @ Xtr.T
        result = kernel_d4_fit(K, y, iterations=3, ridge_alpha=1.0)
        K_replay, C_replay = kernel_d4_apply(K, result.directions, cross=Xte @ Xtr.T)
        np.testing.assert_allclose(K_replay, result.kernel, atol=1e-10)
        # Cross block consistency against the explicit projection.
        spec = LearnerSpec("ridge-ls", 1.0, fit_intercept=False)
        model = d4_fit(LabeledDataset(Xtr, y), D4Config(learner=spec, max_iterations=3))
        tr_p, _ = d4_transform(Xtr, model, 3)
        te_p, _ = d4_transform(Xte, model, 3)
        np.testing.assert_allclose(C_replay, te_p @ tr_p.T, atol=1e-6)
