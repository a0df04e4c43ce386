import numpy as np
import pytest

from d4 import (
    D4Config,
    D4Model,
    LabeledDataset,
    LearnerSpec,
    StoppingRule,
    d4_fit,
    d4_reduce,
    d4_transform,
    probe_trajectory,
)
from d4.core import STATUS_COMPLETED, STATUS_CONVERGED
from d4.errors import BasisFullError, DimensionMismatchError
from d4.learners import accuracy, classify, cv_accuracy, fit, majority_baseline
from d4.linalg import OrthonormalBasis

from conftest import random_orthonormal


def separated_data(rng, n, p, direction_index=0, separation=3.0, flip=0.0):
    X = rng.standard_normal((n, p))
    X[:, direction_index] += separation * np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y = np.where(X[:, direction_index] >= 0, 1.0, -1.0)
    if flip > 0:
        y *= np.where(rng.random(n) < 1.0 - flip, 1.0, -1.0)
    return LabeledDataset(X, y)


def model_from_vectors(p, vectors):
    return D4Model(basis=OrthonormalBasis(p, np.atleast_2d(vectors)))


class TestD4Fit:
    def test_one_dimensional_collapse(self):
        rng = np.random.default_rng(0)
        x = np.abs(rng.standard_normal(50)) + 0.5
        X = np.where(rng.random(50) < 0.5, x, -x)[:, None]
        y = np.where(X[:, 0] >= 0, 1.0, -1.0)
        data = LabeledDataset(X, y)
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 0.1), max_iterations=1))
        assert model.basis.size == 1
        np.testing.assert_allclose(np.abs(model.basis.vectors[0]), [1.0], atol=1e-12)
        perp, _ = d4_transform(X, model, 1)
        assert np.max(np.abs(perp)) <= 1e-10

    def test_recovers_generative_direction(self):
        rng = np.random.default_rng(1)
        data = separated_data(rng, 4000, 2, direction_index=0, separation=3.0)
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 1.0), max_iterations=1))
        angle = np.degrees(np.arccos(min(1.0, abs(model.basis.vectors[0][0]))))
        assert angle <= 5.0
        perp, _ = d4_transform(data.X, model, 1)
        probe = LearnerSpec("ridge-ls", 1.0)
        w, b = fit(probe, perp, data.y)
        acc = accuracy(classify(perp @ w + b), data.y)
        assert acc <= 0.55

    def test_diagnostics_align_with_basis(self):
        rng = np.random.default_rng(2)
        data = separated_data(rng, 500, 6, flip=0.05)
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 1.0), max_iterations=4))
        assert model.basis.size == 4
        assert len(model.diagnostics) == 4
        assert [d.iteration for d in model.diagnostics] == [1, 2, 3, 4]
        assert model.status == STATUS_COMPLETED

    def test_max_iterations_capped_by_dimension(self):
        rng = np.random.default_rng(3)
        data = separated_data(rng, 100, 4)
        with pytest.raises(BasisFullError):
            d4_fit(data, D4Config(max_iterations=5))

    def test_basis_orthonormal_after_full_run(self):
        rng = np.random.default_rng(4)
        data = separated_data(rng, 300, 8, flip=0.1)
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 1.0), max_iterations=8))
        model.basis.validate()
        assert model.basis.size == 8

    def test_probe_convergence_stops_early(self):
        rng = np.random.default_rng(5)
        data = separated_data(rng, 6000, 10, separation=4.0)
        config = D4Config(
            learner=LearnerSpec("ridge-ls", 1.0),
            max_iterations=10,
            stopping=StoppingRule(kind="probe-convergence", tolerance=0.03, patience=2),
            seed=7,
        )
        model = d4_fit(data, config)
        assert model.status == STATUS_CONVERGED
        assert model.basis.size < 10
        assert all(d.validation_metric is not None for d in model.diagnostics)

    def test_branch_equivalence_ridge(self):
        # Ridge is invariant to orthonormal reparameterization, so the
        # projector and full-rank branches find the same directions.
        rng = np.random.default_rng(6)
        data = separated_data(rng, 400, 7, flip=0.1)
        spec = LearnerSpec("ridge-ls", 1.0)
        proj = d4_fit(data, D4Config(learner=spec, max_iterations=4, mode="projector"))
        full = d4_fit(data, D4Config(learner=spec, max_iterations=4, mode="full-rank"))
        for v1, v2 in zip(proj.basis.vectors, full.basis.vectors):
            cosine = abs(float(v1 @ v2))
            assert np.arccos(min(1.0, cosine)) <= 1e-6

    def test_zero_linear_recoverability(self):
        rng = np.random.default_rng(7)
        data = separated_data(rng, 600, 9, flip=0.1)
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 1.0), max_iterations=5))
        perp, _ = d4_transform(data.X, model)
        w, _ = fit(LearnerSpec("ridge-ls", 1.0), perp, data.y)
        for v in model.basis.vectors:
            assert abs(w @ v) / np.linalg.norm(w) <= 1e-6

    def test_monotone_frobenius_and_full_collapse(self):
        rng = np.random.default_rng(8)
        data = separated_data(rng, 200, 6, flip=0.1)
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 1.0), max_iterations=6))
        norms = []
        for k in range(model.basis.size + 1):
            perp, _ = d4_transform(data.X, model, k)
            norms.append(np.linalg.norm(perp))
        assert all(norms[i + 1] <= norms[i] + 1e-9 for i in range(len(norms) - 1))
        assert norms[-1] <= 1e-6 * norms[0]

    def test_rank_drops_per_iteration(self):
        rng = np.random.default_rng(9)
        data = separated_data(rng, 50, 6, flip=0.1)
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 1.0), max_iterations=3))
        for k in range(4):
            perp, _ = d4_transform(data.X, model, k)
            assert np.linalg.matrix_rank(perp, tol=1e-8) == 6 - k


class TestTransform:
    def test_k_zero_identity(self, worked_matrix):
        model = model_from_vectors(3, [0.0, 0.0, 1.0])
        perp, par = d4_transform(worked_matrix, model, 0)
        np.testing.assert_array_equal(perp, worked_matrix)
        np.testing.assert_array_equal(par, np.zeros_like(worked_matrix))

    def test_worked_example(self, worked_matrix, worked_perp):
        model = model_from_vectors(3, [0.0, 0.0, 1.0])
        perp, par = d4_transform(worked_matrix, model, 1)
        np.testing.assert_array_equal(perp, worked_perp)
        np.testing.assert_array_equal(par, worked_matrix - worked_perp)

    def test_full_rank_collapse(self):
        rng = np.random.default_rng(10)
        X = rng.standard_normal((9, 4))
        model = D4Model(basis=OrthonormalBasis(4, random_orthonormal(rng, 4, 4)))
        perp, par = d4_transform(X, model, 4)
        assert np.max(np.abs(perp)) <= 1e-10
        np.testing.assert_allclose(par, X, atol=1e-10)

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((15, 5))
        model = D4Model(basis=OrthonormalBasis(5, random_orthonormal(rng, 5, 2)))
        perp, _ = d4_transform(X, model, 2)
        perp2, par2 = d4_transform(perp, model, 2)
        np.testing.assert_allclose(perp2, perp, atol=1e-12)
        assert np.max(np.abs(par2)) <= 1e-12

    def test_out_of_range_k(self, worked_matrix):
        model = model_from_vectors(3, [0.0, 0.0, 1.0])
        with pytest.raises(DimensionMismatchError):
            d4_transform(worked_matrix, model, 2)

    def test_wrong_width(self):
        model = model_from_vectors(3, [0.0, 0.0, 1.0])
        with pytest.raises(DimensionMismatchError):
            d4_transform(np.ones((2, 4)), model, 1)


class TestReduce:
    def test_k_zero_is_rotation(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((10, 5))
        model = D4Model(basis=OrthonormalBasis(5, random_orthonormal(rng, 5, 2)))
        out = d4_reduce(X, model, 0)
        assert out.shape == (10, 5)
        np.testing.assert_allclose(out @ out.T, X @ X.T, atol=1e-8)

    def test_worked_example_gram(self, worked_matrix):
        model = model_from_vectors(3, [0.0, 0.0, 1.0])
        out = d4_reduce(worked_matrix, model, 1)
        assert out.shape == (4, 2)
        perp, _ = d4_transform(worked_matrix, model, 1)
        np.testing.assert_allclose(out @ out.T, perp @ perp.T, atol=1e-8)

    def test_random_gram_equivalence(self):
        rng = np.random.default_rng(13)
        X = rng.standard_normal((20, 7))
        model = D4Model(basis=OrthonormalBasis(7, random_orthonormal(rng, 7, 2)))
        out = d4_reduce(X, model, 2)
        perp, _ = d4_transform(X, model, 2)
        assert out.shape == (20, 5)
        np.testing.assert_allclose(out @ out.T, perp @ perp.T, atol=1e-8)

    def test_full_removal_empty_width(self):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((6, 3))
        model = D4Model(basis=OrthonormalBasis(3, random_orthonormal(rng, 3, 3)))
        with pytest.raises(BasisFullError):
            d4_reduce(X, model, 3)
        out = d4_reduce(X, model, 3, allow_empty=True)
        assert out.shape == (6, 0)


class TestProbeTrajectory:
    def test_k_zero_equals_direct_probe(self):
        rng = np.random.default_rng(15)
        data = separated_data(rng, 400, 5, flip=0.1)
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 1.0), max_iterations=2))
        probe = LearnerSpec("ridge-ls", 1.0)
        points = probe_trajectory(data, model, probe)
        w, b = fit(probe, data.X, data.y)
        direct = accuracy(classify(data.X @ w + b), data.y)
        assert points[0].k == 0
        assert points[0].train_metric == pytest.approx(direct, abs=1e-12)
        assert len(points) == 3

    def test_separable_ends_near_baseline(self):
        rng = np.random.default_rng(16)
        data = separated_data(rng, 2000, 6, separation=4.0)
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 1.0), max_iterations=6))
        points = probe_trajectory(data, model, LearnerSpec("ridge-ls", 1.0))
        assert abs(points[-1].train_metric - majority_baseline(data.y)) <= 0.02

    def test_orthogonal_target_untouched(self):
        # Removing directions for one target leaves an orthogonal task's
        # probe nearly unchanged.
        rng = np.random.default_rng(17)
        n, p = 3000, 40
        X = rng.standard_normal((n, p))
        y_a = np.where(X[:, 0] >= 0, 1.0, -1.0)
        y_b = np.where(X[:, 1] >= 0, 1.0, -1.0)
        model = d4_fit(
            LabeledDataset(X, y_a),
            D4Config(learner=LearnerSpec("ridge-ls", 1.0), max_iterations=3),
        )
        probe = LearnerSpec("ridge-ls", 1.0)
        points = probe_trajectory(LabeledDataset(X, y_b), model, probe)
        metrics = [pt.train_metric for pt in points]
        assert max(metrics) - min(metrics) <= 0.03

    def test_heldout_metrics_reported(self):
        rng = np.random.default_rng(18)
        data = separated_data(rng, 500, 5, flip=0.1)
        heldout = separated_data(rng, 200, 5, flip=0.1)
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 1.0), max_iterations=2))
        points = probe_trajectory(data, model, LearnerSpec("ridge-ls", 1.0), heldout)
        assert all(pt.heldout_metric is not None for pt in points)


class TestRegressionTask:
    def test_mae_diagnostics(self):
        rng = np.random.default_rng(19)
        X = rng.standard_normal((300, 4))
        y = X @ np.array([2.0, 0.0, 0.0, 0.0]) + 0.1 * rng.standard_normal(300)
        data = LabeledDataset(X, y, task="regression")
        model = d4_fit(data, D4Config(learner=LearnerSpec("ridge-ls", 0.1), max_iterations=2))
        assert model.basis.size == 2
        # After removing the true direction the regression probe degrades
        # to roughly the spread of y.
        points = probe_trajectory(data, model, LearnerSpec("ridge-ls", 0.1))
        assert points[0].train_metric < 0.2
        assert points[-1].train_metric > 1.0
