"""Linear learners, clustering, and kernel probes.

Everything here is deterministic given its inputs (and seed, where one is
taken). The fitted weight vector w is what the removal loop consumes;
only its direction matters downstream, since decision functions have the
form h(x) = g(x^T w).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special

from .errors import (
    DegenerateDataError,
    DimensionMismatchError,
    EmptyClassError,
    NonConvergenceError,
    NonSymmetricKernelError,
    SingularSystemError,
)

LEARNER_KINDS = ("ridge-ls", "logistic")


@dataclass(frozen=True)
class LearnerSpec:
    """Choice and controls for the direction-fitting learner.

    kind: "ridge-ls" (least-squares ridge; an LS-SVM on +/-1 labels) or
        "logistic" (ridge-penalized logistic regression).
    regularization: alpha for ridge-ls, lambda for logistic; must be > 0.
    """

    kind: str = "ridge-ls"
    regularization: float = 1.0
    fit_intercept: bool = True
    max_iterations: int = 1000
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {LEARNER_KINDS}")
        if not self.regularization > 0:
            raise ValueError("regularization must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class LabeledDataset:
    """A feature matrix with aligned supervised targets.

    task is "binary" (y in {-1, +1}) or "regression" (real y).
    """

    X: np.ndarray
    y: np.ndarray
    task: str = "binary"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatchError(f"X must be 2-D, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DimensionMismatchError(
                f"y has length {y.shape if y.ndim != 1 else y.shape[0]}, X has {X.shape[0]} rows"
            )
        if self.task not in ("binary", "regression"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "binary" and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("binary targets must take values in {-1, +1}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _check_both_classes(y: np.ndarray) -> None:
    if not (np.any(y > 0) and np.any(y < 0)):
        raise EmptyClassError("classification fit requires both classes present")


def fit_ridge_ls(X, y, alpha: float, fit_intercept: bool = True):
    """Ridge solution w = (X^T X + alpha I)^{-1} X^T y, plus intercept.

    Minimizes ||X w - y||^2 + alpha ||w||^2. With +/-1 targets this is the
    least-squares SVM primal. When fit_intercept is set, columns and
    targets are mean-centered first and the intercept is recovered as
    ybar - xbar^T w; the intercept never enters the returned direction.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError("X and y disagree on the number of rows")
    if not alpha > 0:
        raise SingularSystemError("ridge regularization must be positive")
    if fit_intercept:
        x_mean = X.mean(axis=0)
        y_mean = float(y.mean())
        Xc = X - x_mean
        yc = y - y_mean
    else:
        x_mean = np.zeros(X.shape[1])
        y_mean = 0.0
        Xc, yc = X, y
    gram = Xc.T @ Xc
    gram[np.diag_indices_from(gram)] += alpha
    w = scipy.linalg.solve(gram, Xc.T @ yc, assume_a="pos")
    intercept = y_mean - float(x_mean @ w) if fit_intercept else 0.0
    return w, intercept


def _logistic_objective(X, y, w, b, lam):
    margins = y * (X @ w + b)
    # log(1 + exp(-m)) evaluated stably for large |m|
    loss = float(np.mean(np.logaddexp(0.0, -margins)))
    return loss + 0.5 * lam * float(w @ w)


def fit_logistic(
    X,
    y,
    lam: float,
    fit_intercept: bool = True,
    max_iterations: int = 1000,
    tolerance: float = 1e-8,
):
    """Ridge-penalized logistic regression by damped Newton iteration.

    Minimizes (1/n) sum_i log(1 + exp(-y_i (x_i^T w + b))) + (lam/2) ||w||^2,
    with the intercept unpenalized. Deterministic: full-batch Newton steps
    with objective-decrease backtracking, run until the gradient norm of
    the objective falls below `tolerance`.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError("X and y disagree on the number of rows")
    if not lam > 0:
        raise ValueError("logistic regularization must be positive")
    _check_both_classes(y)
    n, p = X.shape
    w = np.zeros(p)
    b = 0.0
    obj = _logistic_objective(X, y, w, b, lam)
    for _ in range(max_iterations):
        margins = y * (X @ w + b)
        s = scipy.special.expit(-margins)  # d loss_i / d margin_i, negated
        grad_w = -(X.T @ (y * s)) / n + lam * w
        grad_b = -float(np.sum(y * s)) / n if fit_intercept else 0.0
        grad_norm = float(np.sqrt(grad_w @ grad_w + grad_b * grad_b))
        if grad_norm <= tolerance:
            return w, b
        d = s * (1.0 - s)
        Xd = X * (d / n)[:, None]
        H = X.T @ Xd
        H[np.diag_indices_from(H)] += lam
        if fit_intercept:
            col = Xd.sum(axis=0)
            Hfull = np.empty((p + 1, p + 1))
            Hfull[:p, :p] = H
            Hfull[:p, p] = col
            Hfull[p, :p] = col
            Hfull[p, p] = max(float(d.sum()) / n, 1e-12)
            step = scipy.linalg.solve(Hfull, np.concatenate([grad_w, [grad_b]]), assume_a="pos")
            step_w, step_b = step[:p], float(step[p])
        else:
            step_w = scipy.linalg.solve(H, grad_w, assume_a="pos")
            step_b = 0.0
        # Backtrack until the objective decreases; Newton steps on this
        # strongly convex objective accept at t=1 except far from optimum.
        t = 1.0
        for _ in range(40):
            w_new = w - t * step_w
            b_new = b - t * step_b
            obj_new = _logistic_objective(X, y, w_new, b_new, lam)
            if obj_new <= obj:
                break
            t *= 0.5
        w, b, obj = w_new, b_new, obj_new
    raise NonConvergenceError(
        f"logistic fit did not reach gradient norm {tolerance:.1e} "
        f"in {max_iterations} iterations (reached {grad_norm:.3e})"
    )


def fit(spec: LearnerSpec, X, y):
    """Fit the learner described by spec; returns (w, intercept)."""
    if spec.kind == "ridge-ls":
        return fit_ridge_ls(X, y, spec.regularization, spec.fit_intercept)
    return fit_logistic(
        X,
        y,
        spec.regularization,
        fit_intercept=spec.fit_intercept,
        max_iterations=spec.max_iterations,
        tolerance=spec.tolerance,
    )


def predict_scores(X, w, intercept: float = 0.0) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    w = np.asarray(w, dtype=float)
    if X.shape[1] != w.shape[0]:
        raise DimensionMismatchError("weight length does not match feature count")
    return X @ w + intercept


def classify(scores) -> np.ndarray:
    """Sign thresholding to +/-1 labels; zero scores map to +1."""
    return np.where(np.asarray(scores, dtype=float) >= 0.0, 1.0, -1.0)


def accuracy(predicted, actual) -> float:
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape:
        raise DimensionMismatchError("prediction and target lengths differ")
    return float(np.mean(predicted == actual))


def mean_absolute_error(predicted, actual) -> float:
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if predicted.shape != actual.shape:
        raise DimensionMismatchError("prediction and target lengths differ")
    return float(np.mean(np.abs(predicted - actual)))


def majority_baseline(y) -> float:
    """Accuracy of always predicting the most frequent class."""
    y = np.asarray(y)
    frac = float(np.mean(y > 0))
    return max(frac, 1.0 - frac)


def kmeans2(points, seed: int, restarts: int = 10, max_sweeps: int = 100) -> np.ndarray:
    """Two-cluster Lloyd's algorithm with k-means++ seeding.

    Runs `restarts` seeded restarts and keeps the assignment with lowest
    within-cluster sum of squares. Deterministic given the seed.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] < 2:
        raise DimensionMismatchError("kmeans2 needs a 2-D array with at least two rows")
    if np.allclose(P, P[0], atol=0.0, rtol=0.0):
        raise DegenerateDataError("all points identical; no two-cluster structure")
    rng = np.random.default_rng(seed)
    n = P.shape[0]
    sq_norms = np.einsum("ij,ij->i", P, P)
    best_assign = None
    best_wcss = np.inf
    for _ in range(restarts):
        first = int(rng.integers(n))
        d2 = sq_norms + sq_norms[first] - 2.0 * (P @ P[first])
        d2 = np.maximum(d2, 0.0)
        total = float(d2.sum())
        if total <= 0.0:
            second = (first + 1) % n
        else:
            second = int(rng.choice(n, p=d2 / total))
        centers = np.stack([P[first], P[second]])
        assign = np.zeros(n, dtype=int)
        for _ in range(max_sweeps):
            dists = ((P[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_assign = np.argmin(dists, axis=1)
            for c in range(2):
                mask = new_assign == c
                if not np.any(mask):
                    # Re-seed an emptied cluster at the farthest point.
                    far = int(np.argmax(dists[np.arange(n), new_assign]))
                    new_assign[far] = c
                    mask = new_assign == c
                centers[c] = P[mask].mean(axis=0)
            if np.array_equal(new_assign, assign):
                break
            assign = new_assign
        wcss = 0.0
        for c in range(2):
            diff = P[assign == c] - centers[c]
            wcss += float(np.einsum("ij,ij->", diff, diff))
        if wcss < best_wcss - 1e-12:
            best_wcss = wcss
            best_assign = assign.copy()
    return best_assign


def cluster_label_accuracy(assignment, labels) -> float:
    """Best agreement between a {0,1} assignment and +/-1 labels.

    Maximized over the two cluster-to-label matchings, so the result is
    invariant to cluster naming and lives in [0.5, 1] for balanced data.
    """
    assignment = np.asarray(assignment)
    labels = np.asarray(labels)
    if assignment.shape != labels.shape:
        raise DimensionMismatchError("assignment and label lengths differ")
    agree = float(np.mean((assignment == 1) == (labels > 0)))
    return max(agree, 1.0 - agree)


def linear_kernel(A, B=None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = A if B is None else np.asarray(B, dtype=float)
    return A @ B.T


def polynomial_kernel(A, B=None, degree: int = 2, coef0: float = 1.0) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = A if B is None else np.asarray(B, dtype=float)
    return (A @ B.T + coef0) ** degree


def default_gamma(X) -> float:
    """The "scale" bandwidth heuristic: 1 / (p * mean feature variance)."""
    X = np.asarray(X, dtype=float)
    var = float(X.var(axis=0).mean())
    if var <= 0.0:
        return 1.0
    return 1.0 / (X.shape[1] * var)


def rbf_kernel(A, B=None, gamma: float | None = None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if gamma is None:
        gamma = default_gamma(A)
    B = A if B is None else np.asarray(B, dtype=float)
    a2 = np.einsum("ij,ij->i", A, A)
    b2 = np.einsum("ij,ij->i", B, B)
    d2 = a2[:, None] + b2[None, :] - 2.0 * (A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def fit_kernel_ridge_probe(K, y, alpha: float) -> np.ndarray:
    """Dual coefficients (K + alpha I)^{-1} y of a kernel ridge classifier.

    Held-out points are scored as K_cross @ coefficients and thresholded
    at zero.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DimensionMismatchError("kernel matrix must be square")
    if K.shape[0] != y.shape[0]:
        raise DimensionMismatchError("kernel size does not match target length")
    scale = max(1.0, float(np.max(np.abs(K))))
    if float(np.max(np.abs(K - K.T))) > 1e-10 * scale:
        raise NonSymmetricKernelError("kernel matrix is not symmetric")
    if not alpha > 0:
        raise SingularSystemError("kernel ridge regularization must be positive")
    A = K.copy()
    A[np.diag_indices_from(A)] += alpha
    return scipy.linalg.solve(A, y, assume_a="sym")


def stratified_fold_indices(y, folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified k-fold partition of indices by class sign."""
    y = np.asarray(y)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    for cls in (1, -1):
        idx = np.flatnonzero((y > 0) if cls == 1 else (y <= 0))
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            buckets[pos % folds].append(int(i))
    return [np.sort(np.array(b, dtype=int)) for b in buckets]


def cv_accuracy(X, y, spec: LearnerSpec, folds: int = 5, seed: int = 0) -> float:
    """Pooled stratified cross-validated accuracy of a linear probe."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_both_classes(y)
    hits = 0
    for test_idx in stratified_fold_indices(y, folds, seed):
        mask = np.ones(X.shape[0], dtype=bool)
        mask[test_idx] = False
        w, b = fit(spec, X[mask], y[mask])
        pred = classify(predict_scores(X[test_idx], w, b))
        hits += int(np.sum(pred == y[test_idx]))
    return hits / X.shape[0]


def kernel_cv_accuracy(
    X,
    y,
    kernel: str = "rbf",
    folds: int = 5,
    seed: int = 0,
    alpha: float = 1.0,
    gamma: float | None = None,
) -> float:
    """Pooled stratified CV accuracy of the kernel ridge probe."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_both_classes(y)
    if kernel not in ("rbf", "linear"):
        raise ValueError(f"unknown kernel {kernel!r}")
    if kernel == "rbf" and gamma is None:
        gamma = default_gamma(X)
    hits = 0
    for test_idx in stratified_fold_indices(y, folds, seed):
        mask = np.ones(X.shape[0], dtype=bool)
        mask[test_idx] = False
        Xtr, Xte = X[mask], X[test_idx]
        if kernel == "rbf":
            K = rbf_kernel(Xtr, gamma=gamma)
            Kx = rbf_kernel(Xte, Xtr, gamma=gamma)
        else:
            K = linear_kernel(Xtr)
            Kx = linear_kernel(Xte, Xtr)
        coef = fit_kernel_ridge_probe(K, y[mask], alpha)
        pred = classify(Kx @ coef)
        hits += int(np.sum(pred == y[test_idx]))
    return hits / X.shape[0]
