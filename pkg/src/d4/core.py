"""The iterative decision-direction removal loop.

Each iteration fits a linear learner on the current (projected) data,
normalizes the fitted weight vector into a unit direction, appends it to
an orthonormal basis, and projects the data onto the complement of that
basis. Two equivalent representations of the projected data are
supported: the projector branch keeps the original p columns (the matrix
becomes rank-deficient), while the full-rank branch rotates the data into
the p - i dimensional complement via an orthonormal completion and lifts
the fitted direction back up to p dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import learners
from .errors import (
    BasisFullError,
    DimensionMismatchError,
    LinearlyDependentError,
    ZeroVectorError,
)
from .linalg import OrthonormalBasis, as_feature_matrix, complete_basis

MODES = ("projector", "full-rank")

#: Loop termination statuses recorded on the fitted model.
STATUS_COMPLETED = "completed"
STATUS_CONVERGED = "converged"
STATUS_LINEARLY_DEPENDENT = "linearly-dependent"
STATUS_ZERO_VECTOR = "zero-vector"


@dataclass(frozen=True)
class StoppingRule:
    """Fixed iteration count, or stop once a held-out probe flatlines.

    Under "probe-convergence" a validation split is carved out of the
    training data; the loop stops once validation accuracy of the
    iteration's learner stays within `tolerance` of the majority baseline
    for `patience` consecutive iterations.
    """

    kind: str = "fixed"
    tolerance: float = 0.02
    patience: int = 2
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.kind not in ("fixed", "probe-convergence"):
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        if not self.tolerance > 0:
            raise ValueError("stopping tolerance must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation fraction must lie in (0, 1)")


@dataclass(frozen=True)
class D4Config:
    learner: learners.LearnerSpec = field(default_factory=learners.LearnerSpec)
    max_iterations: int = 1
    mode: str = "projector"
    stopping: StoppingRule = field(default_factory=StoppingRule)
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")


@dataclass(frozen=True)
class IterationDiagnostics:
    """Training metric of the learner fitted at one iteration.

    The metric is accuracy for binary tasks and mean absolute error for
    regression, measured on the representation the learner was fitted on.
    validation_metric is populated only under probe-convergence stopping.
    """

    iteration: int
    train_metric: float
    validation_metric: float | None = None


@dataclass(frozen=True)
class D4Model:
    basis: OrthonormalBasis
    diagnostics: tuple[IterationDiagnostics, ...] = ()
    status: str = STATUS_COMPLETED

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def iterations(self) -> int:
        return self.basis.size


@dataclass(frozen=True)
class ProbePoint:
    """Probe metrics after removing the first k directions."""

    k: int
    train_metric: float
    heldout_metric: float | None = None


def _metric(task: str, X, y, w, intercept) -> float:
    scores = learners.predict_scores(X, w, intercept)
    if task == "binary":
        return learners.accuracy(learners.classify(scores), y)
    return learners.mean_absolute_error(scores, y)


def d4_fit(data: learners.LabeledDataset, config: D4Config) -> D4Model:
    """Learn an ordered orthonormal basis of decision directions.

    Iterates up to config.max_iterations times (never more than p). The
    loop ends early, with a status recorded on the model, when the
    learner returns a numerically zero or linearly dependent direction,
    or when the probe-convergence rule fires.
    """
    X = as_feature_matrix(data.X)
    y = data.y
    p = X.shape[1]
    if config.max_iterations > p:
        raise BasisFullError(
            f"max_iterations={config.max_iterations} exceeds feature dimension {p}"
        )

    val_X = val_y = baseline = None
    if config.stopping.kind == "probe-convergence":
        if data.task != "binary":
            raise ValueError("probe-convergence stopping requires a binary task")
        rng = np.random.default_rng(config.seed)
        order = rng.permutation(X.shape[0])
        n_val = max(1, int(round(config.stopping.validation_fraction * X.shape[0])))
        if n_val >= X.shape[0]:
            raise ValueError("validation fraction leaves no training rows")
        val_idx, train_idx = order[:n_val], order[n_val:]
        val_X, val_y = X[val_idx], y[val_idx]
        X, y = X[train_idx], y[train_idx]
        learners._check_both_classes(y)
        baseline = learners.majority_baseline(val_y)

    basis = OrthonormalBasis.empty(p)
    diagnostics: list[IterationDiagnostics] = []
    status = STATUS_COMPLETED
    # Running projections of the train (and validation) rows onto the
    # complement of the accumulated basis, updated rank-one per iteration.
    X_cur = X.copy()
    val_cur = val_X.copy() if val_X is not None else None
    flat_streak = 0

    for i in range(1, config.max_iterations + 1):
        if config.mode == "projector":
            fit_input = X_cur
            try:
                w, intercept = learners.fit(config.learner, fit_input, y)
            except ZeroVectorError:
                status = STATUS_ZERO_VECTOR
                break
            direction = w
            eval_w = w
        else:
            completion = complete_basis(basis)
            fit_input = X @ completion
            try:
                w_tilde, intercept = learners.fit(config.learner, fit_input, y)
            except ZeroVectorError:
                status = STATUS_ZERO_VECTOR
                break
            direction = completion @ w_tilde
            eval_w = w_tilde

        train_metric = _metric(data.task, fit_input, y, eval_w, intercept)
        val_metric = None
        if val_cur is not None:
            val_input = val_cur if config.mode == "projector" else val_X @ completion
            val_metric = _metric("binary", val_input, val_y, eval_w, intercept)

        try:
            basis = basis.extended(direction)
        except ZeroVectorError:
            status = STATUS_ZERO_VECTOR
            break
        except LinearlyDependentError:
            status = STATUS_LINEARLY_DEPENDENT
            break

        diagnostics.append(IterationDiagnostics(i, train_metric, val_metric))

        new_dir = basis.vectors[-1]
        X_cur -= np.outer(X_cur @ new_dir, new_dir)
        if val_cur is not None:
            val_cur -= np.outer(val_cur @ new_dir, new_dir)

        if val_metric is not None:
            if abs(val_metric - baseline) <= config.stopping.tolerance:
                flat_streak += 1
                if flat_streak >= config.stopping.patience:
                    status = STATUS_CONVERGED
                    break
            else:
                flat_streak = 0

    return D4Model(basis=basis, diagnostics=tuple(diagnostics), status=status)


def d4_transform(X, model: D4Model, k: int | None = None):
    """Split X into (X_perp, X_par) using the first k removed directions.

    X_perp = X O^(k) has zero dot product with every removed direction;
    X_par = X - X_perp is the removed component. k defaults to the full
    basis.
    """
    A = as_feature_matrix(X)
    k = model.basis.size if k is None else int(k)
    if not 0 <= k <= model.basis.size:
        raise DimensionMismatchError(
            f"k={k} out of range for model with {model.basis.size} directions"
        )
    if A.shape[1] != model.basis.dim:
        raise DimensionMismatchError(
            f"matrix has {A.shape[1]} columns, model dimension is {model.basis.dim}"
        )
    if k == 0:
        return A.copy(), np.zeros_like(A)
    V = model.basis.vectors[:k]
    par = (A @ V.T) @ V
    return A - par, par


def d4_reduce(X, model: D4Model, k: int | None = None, allow_empty: bool = False) -> np.ndarray:
    """Rank-reduced n x (p - k) representation after removing k directions.

    Rotates rows into an orthonormal completion of the first k directions,
    so the Gram matrix matches that of d4_transform's X_perp. When k = p
    the output has zero width, which is only returned under allow_empty.
    """
    A = as_feature_matrix(X)
    k = model.basis.size if k is None else int(k)
    if not 0 <= k <= model.basis.size:
        raise DimensionMismatchError(
            f"k={k} out of range for model with {model.basis.size} directions"
        )
    if A.shape[1] != model.basis.dim:
        raise DimensionMismatchError(
            f"matrix has {A.shape[1]} columns, model dimension is {model.basis.dim}"
        )
    if k == model.basis.dim:
        if not allow_empty:
            raise BasisFullError("all directions removed; reduced representation is empty")
        return np.zeros((A.shape[0], 0))
    completion = complete_basis(model.basis.truncated(k))
    return A @ completion


def probe_trajectory(
    data: learners.LabeledDataset,
    model: D4Model,
    probe: learners.LearnerSpec,
    heldout: learners.LabeledDataset | None = None,
) -> tuple[ProbePoint, ...]:
    """Refit a probe after each removal depth k = 0 .. basis size.

    Reports the probe's training metric, and its metric on `heldout`
    (projected with the same directions) when provided. The k = 0 entry
    equals a direct probe on the raw data.
    """
    X = as_feature_matrix(data.X)
    if heldout is not None and heldout.task != data.task:
        raise ValueError("heldout task must match training task")
    points = []
    for k in range(model.basis.size + 1):
        Xk, _ = d4_transform(X, model, k)
        w, b = learners.fit(probe, Xk, data.y)
        train_metric = _metric(data.task, Xk, data.y, w, b)
        held_metric = None
        if heldout is not None:
            Hk, _ = d4_transform(heldout.X, model, k)
            held_metric = _metric(data.task, Hk, heldout.y, w, b)
        points.append(ProbePoint(k, train_metric, held_metric))
    return tuple(points)
