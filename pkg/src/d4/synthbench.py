"""Spurious-correlation benchmark with a train/test correlation reversal.

Two hidden orthogonal unit directions define two labelling tasks. Their
latent projections are correlated in the training distribution and
anti-correlated at test time, and the second (distractor) projection has
twice the spread, so a weight-penalized classifier for task one leans on
the distractor and collapses under the reversal. Removing the distractor
task's fitted direction before refitting restores generalization; the
benchmark table records accuracies and direction loadings before and
after that single removal step.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from . import learners
from .core import D4Config, d4_fit
from .errors import DimensionMismatchError

# Salts for fanning one user seed into independent, order-insensitive
# streams (directions, train sampling, test sampling).
_DIRECTION_SALT = 101
_TRAIN_SALT = 202
_TEST_SALT = 303


@dataclass(frozen=True)
class SynthConfig:
    """Generator parameters.

    corr is the latent correlation between the two task projections;
    std1/std2 their standard deviations; flip_prob the chance a label's
    sign is flipped (independently per instance and per task).
    """

    n: int = 100_000
    p: int = 300
    corr: float = 0.9
    std1: float = 1.0
    std2: float = 2.0
    flip_prob: float = 0.1
    seed: int = 12345

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if not abs(self.corr) < 1.0:
            raise ValueError("corr must lie strictly inside (-1, 1)")
        if not (self.std1 > 0 and self.std2 > 0):
            raise ValueError("standard deviations must be positive")
        if not 0.0 <= self.flip_prob < 0.5:
            raise ValueError("flip_prob must lie in [0, 0.5)")


@dataclass(frozen=True)
class SynthDataset:
    X: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    w_star_1: np.ndarray
    w_star_2: np.ndarray


def draw_directions(p: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two random orthogonal unit directions in R^p."""
    rng = np.random.default_rng([seed, _DIRECTION_SALT])
    q, _ = np.linalg.qr(rng.standard_normal((p, 2)))
    return q[:, 0].copy(), q[:, 1].copy()


def generate(
    config: SynthConfig,
    directions: tuple[np.ndarray, np.ndarray] | None = None,
    salt: int = _TRAIN_SALT,
) -> SynthDataset:
    """Sample a dataset from the generator.

    Latent projections (t1, t2) are bivariate normal with the configured
    stds and correlation; the remaining variation is standard normal
    confined to the orthogonal complement of the two hidden directions.
    Passing `directions` reuses hidden directions across datasets (the
    test set must share them with the training set).
    """
    if directions is None:
        w1, w2 = draw_directions(config.p, config.seed)
    else:
        w1 = np.asarray(directions[0], dtype=float)
        w2 = np.asarray(directions[1], dtype=float)
        if w1.shape != (config.p,) or w2.shape != (config.p,):
            raise DimensionMismatchError("directions do not match configured dimension")
    rng = np.random.default_rng([config.seed, salt])
    cov = np.array(
        [
            [config.std1**2, config.corr * config.std1 * config.std2],
            [config.corr * config.std1 * config.std2, config.std2**2],
        ]
    )
    t = rng.standard_normal((config.n, 2)) @ np.linalg.cholesky(cov).T
    Z = rng.standard_normal((config.n, config.p))
    Z -= np.outer(Z @ w1, w1)
    Z -= np.outer(Z @ w2, w2)
    X = Z
    X += np.outer(t[:, 0], w1)
    X += np.outer(t[:, 1], w2)
    eps1 = np.where(rng.random(config.n) < 1.0 - config.flip_prob, 1.0, -1.0)
    eps2 = np.where(rng.random(config.n) < 1.0 - config.flip_prob, 1.0, -1.0)
    y1 = eps1 * np.where(X @ w1 >= 0, 1.0, -1.0)
    y2 = eps2 * np.where(X @ w2 >= 0, 1.0, -1.0)
    return SynthDataset(X=X, y1=y1, y2=y2, w_star_1=w1, w_star_2=w2)


@dataclass(frozen=True)
class ExperimentRow:
    iteration: int
    target: str
    train_acc: float
    test_acc: float
    load_w1: float
    load_w2: float


@dataclass(frozen=True)
class ExperimentTable:
    rows: tuple[ExperimentRow, ...]

    def row(self, iteration: int, target: str) -> ExperimentRow:
        for r in self.rows:
            if r.iteration == iteration and r.target == target:
                return r
        raise KeyError(f"no row for iteration {iteration}, target {target}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iteration,target,train_acc,test_acc,load_w1,load_w2\n")
        for r in self.rows:
            buf.write(
                f"{r.iteration},{r.target},{r.train_acc!r},{r.test_acc!r},"
                f"{r.load_w1!r},{r.load_w2!r}\n"
            )
        return buf.getvalue()

    def format(self) -> str:
        lines = [
            f"{'iter':>4} {'target':>6} {'train_acc':>10} {'test_acc':>9} "
            f"{'load_w1':>8} {'load_w2':>8}"
        ]
        for r in self.rows:
            lines.append(
                f"{r.iteration:>4} {r.target:>6} {r.train_acc:>10.4f} {r.test_acc:>9.4f} "
                f"{r.load_w1:>+8.3f} {r.load_w2:>+8.3f}"
            )
        return "\n".join(lines)


def _loadings(w: np.ndarray, data: SynthDataset) -> tuple[float, float]:
    unit = w / np.linalg.norm(w)
    return float(unit @ data.w_star_1), float(unit @ data.w_star_2)


def run_experiment(
    train_config: SynthConfig,
    test_config: SynthConfig,
    learner: learners.LearnerSpec,
) -> ExperimentTable:
    """Fit both tasks before and after one removal step for task two.

    Iteration 0 reports classifiers trained on raw data. The removal step
    targets task two (the distractor with the stronger signal); its
    projection, learned on training data only, is applied to both splits
    before refitting at iteration 1. Loadings are cosines of the unit
    classifier weights against the hidden directions.
    """
    if train_config.p != test_config.p:
        raise DimensionMismatchError("train and test configurations must share p")
    if test_config.corr != -train_config.corr:
        raise ValueError("test correlation must be the negation of the train correlation")
    dirs = draw_directions(train_config.p, train_config.seed)
    train = generate(train_config, dirs, salt=_TRAIN_SALT)
    test = generate(test_config, dirs, salt=_TEST_SALT)

    rows: list[ExperimentRow] = []
    for name, y_tr, y_te in (("y1", train.y1, test.y1), ("y2", train.y2, test.y2)):
        w, b = learners.fit(learner, train.X, y_tr)
        tr = learners.accuracy(learners.classify(train.X @ w + b), y_tr)
        te = learners.accuracy(learners.classify(test.X @ w + b), y_te)
        l1, l2 = _loadings(w, train)
        rows.append(ExperimentRow(0, name, tr, te, l1, l2))

    model = d4_fit(
        learners.LabeledDataset(train.X, train.y2, task="binary"),
        D4Config(learner=learner, max_iterations=1, seed=train_config.seed),
    )
    omega = model.basis.vectors[0]
    Xtr = train.X - np.outer(train.X @ omega, omega)
    Xte = test.X - np.outer(test.X @ omega, omega)

    for name, y_tr, y_te in (("y1", train.y1, test.y1), ("y2", train.y2, test.y2)):
        w, b = learners.fit(learner, Xtr, y_tr)
        tr = learners.accuracy(learners.classify(Xtr @ w + b), y_tr)
        te = learners.accuracy(learners.classify(Xte @ w + b), y_te)
        l1, l2 = _loadings(w, train)
        rows.append(ExperimentRow(1, name, tr, te, l1, l2))
    return ExperimentTable(tuple(rows))


# The reference experiment used ridge logistic regression with a nominal
# lambda of 1 under an unspecified loss normalization. Against this
# library's objective, mean loss + (lambda/2) ||w||^2, the reported table
# is reproduced by lambda = 0.5 (see the benchmark docs for the
# calibration evidence), so the presets pin that value.
PRESET_LEARNER = learners.LearnerSpec(kind="logistic", regularization=0.5)

PRESETS: dict[str, SynthConfig] = {
    # Reference scale: n = 100000, p = 300.
    "table1": SynthConfig(seed=12345),
    # Desk scale: same n/p ratio so direction-estimation noise matches.
    "table1-small": SynthConfig(n=20_000, p=60, seed=0),
}


def preset_configs(name: str) -> tuple[SynthConfig, SynthConfig, learners.LearnerSpec]:
    """Train config, matching reversed-correlation test config, learner."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    train = PRESETS[name]
    test = replace(train, corr=-train.corr)
    return train, test, PRESET_LEARNER
