"""Debiasing pipeline and bias metrics for embedding sets.

Cosine-based metrics (the gender direction, neighbour bias, profession
neighbour counts, WEAT) operate on row-normalized vectors. Direction
fitting also runs on normalized vectors by default, while the learned
projection is applied to the raw stored vectors; the normalization state
of a set is tracked explicitly on :class:`EmbeddingSet`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .. import learners
from ..core import D4Config, D4Model, d4_fit, d4_transform
from ..errors import (
    EmptyClassError,
    EmptySetAfterLookupError,
    ZeroVarianceError,
)
from ..linalg import normalize
from .io import EmbeddingSet, GenderLexicon, WeatSpec


@dataclass(frozen=True)
class LexiconData:
    """Lexicon words resolved against a vocabulary.

    Labels are +1 for feminine and -1 for masculine words. Missing words
    are recorded, never fatal.
    """

    words: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    missing: tuple[str, ...]


def lexicon_lookup(emb: EmbeddingSet, lex: GenderLexicon, unit: bool = True) -> LexiconData:
    words: list[str] = []
    labels: list[float] = []
    missing: list[str] = []
    for label, group in ((-1.0, lex.masculine), (1.0, lex.feminine)):
        for word in group:
            if word in emb:
                words.append(word)
                labels.append(label)
            else:
                missing.append(word)
    if not any(l < 0 for l in labels) or not any(l > 0 for l in labels):
        raise EmptyClassError(
            "lexicon lookup left a class empty "
            f"({len(missing)} of {len(lex.masculine) + len(lex.feminine)} words missing)"
        )
    if missing:
        warnings.warn(
            f"{len(missing)} lexicon words missing from vocabulary", stacklevel=2
        )
    source = emb.unit_vectors() if unit else emb.vectors
    rows = np.array([source[emb.index(w)] for w in words])
    return LexiconData(tuple(words), rows, np.array(labels), tuple(missing))


def gender_direction(emb: EmbeddingSet, pair: tuple[str, str] = ("she", "he")) -> np.ndarray:
    """Unit difference of a definitional pair's normalized vectors."""
    unit = emb.unit_vectors()
    return normalize(unit[emb.index(pair[0])] - unit[emb.index(pair[1])])


def debias(
    emb: EmbeddingSet,
    lex: GenderLexicon,
    config: D4Config,
    normalize_fit: bool = True,
) -> tuple[EmbeddingSet, D4Model]:
    """Remove learned lexicon-separating directions from every vector.

    Directions are fitted on the lexicon words (feminine +1, masculine
    -1), on row-normalized vectors unless normalize_fit is off; the
    resulting projection is applied to the raw vectors of the whole
    vocabulary.
    """
    data = lexicon_lookup(emb, lex, unit=normalize_fit)
    model = d4_fit(learners.LabeledDataset(data.X, data.y, task="binary"), config)
    projected, _ = d4_transform(emb.vectors, model)
    return emb.with_vectors(projected, normalized=False), model


def bias_by_neighbour(
    emb: EmbeddingSet,
    direction,
    n_extreme: int = 500,
    seed: int = 0,
    top_n: int | None = None,
) -> float:
    """Cluster the most extreme words along a direction; score the split.

    Takes the n_extreme words from each end of the (cosine) projection
    onto the direction, clusters their vectors with two-means, and
    returns the best agreement between clusters and extreme-side labels.
    top_n restricts ranking to the first top_n vocabulary entries (useful
    when vocabulary order encodes frequency).
    """
    unit = emb.unit_vectors()
    if top_n is not None:
        unit = unit[:top_n]
    if unit.shape[0] < 2 * n_extreme:
        raise ValueError(
            f"need at least {2 * n_extreme} words to take {n_extreme} from each extreme"
        )
    direction = np.asarray(direction, dtype=float)
    dots = unit @ direction
    order = np.argsort(-dots, kind="stable")
    top = order[:n_extreme]
    bottom = order[-n_extreme:]
    points = np.vstack([unit[top], unit[bottom]])
    labels = np.concatenate([np.ones(n_extreme), -np.ones(n_extreme)])
    assignment = learners.kmeans2(points, seed=seed)
    return learners.cluster_label_accuracy(assignment, labels)


@dataclass(frozen=True)
class ProfessionRecord:
    word: str
    dot: float
    masculine_neighbours: int


@dataclass(frozen=True)
class ProfessionReport:
    records: tuple[ProfessionRecord, ...]
    missing: tuple[str, ...]


def profession_neighbour_counts(
    emb: EmbeddingSet,
    professions,
    direction,
    k: int = 100,
) -> ProfessionReport:
    """Count masculine-leaning professions among each profession's neighbours.

    A profession counts as masculine-leaning when its normalized vector
    has positive dot product with the direction. Neighbours are the k
    nearest professions by cosine distance, self excluded.
    """
    present = [w for w in professions if w in emb]
    missing = [w for w in professions if w not in emb]
    if not present:
        raise EmptySetAfterLookupError("no profession words found in vocabulary")
    if missing:
        warnings.warn(f"{len(missing)} profession words missing from vocabulary", stacklevel=2)
    unit = emb.unit_vectors()
    rows = np.array([unit[emb.index(w)] for w in present])
    direction = np.asarray(direction, dtype=float)
    dots = rows @ direction
    masc = dots > 0.0
    sims = rows @ rows.T
    m = len(present)
    k_eff = min(k, m - 1)
    records = []
    for i, word in enumerate(present):
        if k_eff <= 0:
            count = 0
        else:
            order = np.argsort(-sims[i], kind="stable")
            neighbours = [j for j in order if j != i][:k_eff]
            count = int(np.sum(masc[neighbours]))
        records.append(ProfessionRecord(word, float(dots[i]), count))
    return ProfessionReport(tuple(records), tuple(missing))


@dataclass(frozen=True)
class WeatResult:
    """Differential-association effect size between two target sets.

    s(w) = mean cos(w, A) - mean cos(w, B); the effect size standardizes
    the difference of mean s over X and Y by the (population) std of s
    over X union Y. Positive values mean X leans toward A.
    """

    effect_size: float
    mean_diff: float
    s_x: tuple[float, ...]
    s_y: tuple[float, ...]
    missing: tuple[str, ...]


def weat(emb: EmbeddingSet, spec: WeatSpec) -> WeatResult:
    unit = emb.unit_vectors()

    def resolve(words, label):
        rows = [unit[emb.index(w)] for w in words if w in emb]
        absent = [w for w in words if w not in emb]
        if not rows:
            raise EmptySetAfterLookupError(f"WEAT set {label} empty after vocabulary lookup")
        return np.array(rows), absent

    X, miss_x = resolve(spec.target_x, "target_x")
    Y, miss_y = resolve(spec.target_y, "target_y")
    A, miss_a = resolve(spec.attribute_a, "attribute_a")
    B, miss_b = resolve(spec.attribute_b, "attribute_b")
    missing = tuple(miss_x + miss_y + miss_a + miss_b)
    if missing:
        warnings.warn(f"{len(missing)} WEAT words missing from vocabulary", stacklevel=2)

    s_x = (X @ A.T).mean(axis=1) - (X @ B.T).mean(axis=1)
    s_y = (Y @ A.T).mean(axis=1) - (Y @ B.T).mean(axis=1)
    mean_diff = float(s_x.mean() - s_y.mean())
    spread = float(np.concatenate([s_x, s_y]).std())
    if spread < 1e-12:
        # All associations identical forces equal means; report a null
        # effect rather than 0/0.
        if abs(mean_diff) < 1e-12:
            return WeatResult(0.0, mean_diff, tuple(s_x), tuple(s_y), missing)
        raise ZeroVarianceError("WEAT associations have zero variance")
    return WeatResult(mean_diff / spread, mean_diff, tuple(s_x), tuple(s_y), missing)


def recoverability_probe(
    emb: EmbeddingSet,
    lex: GenderLexicon,
    kernel: str = "rbf",
    folds: int = 5,
    seed: int = 0,
    gamma: float | None = None,
    ridge_alpha: float = 1.0,
    unit: bool = True,
) -> float:
    """Cross-validated kernel probe accuracy on lexicon gender labels."""
    data = lexicon_lookup(emb, lex, unit=unit)
    return learners.kernel_cv_accuracy(
        data.X, data.y, kernel=kernel, folds=folds, seed=seed, alpha=ridge_alpha, gamma=gamma
    )


def linear_probe_cv(
    emb: EmbeddingSet,
    lex: GenderLexicon,
    folds: int = 5,
    seed: int = 0,
    alpha: float = 1.0,
    unit: bool = True,
) -> float:
    """Cross-validated linear (ridge) probe accuracy on lexicon labels."""
    data = lexicon_lookup(emb, lex, unit=unit)
    spec = learners.LearnerSpec(kind="ridge-ls", regularization=alpha)
    return learners.cv_accuracy(data.X, data.y, spec, folds=folds, seed=seed)


def probe_trajectory_cv(
    emb: EmbeddingSet,
    lex: GenderLexicon,
    model: D4Model,
    folds: int = 5,
    seed: int = 0,
    alpha: float = 1.0,
    unit: bool = True,
) -> tuple[float, ...]:
    """Linear probe CV accuracy after each removal depth k = 0 .. size."""
    data = lexicon_lookup(emb, lex, unit=unit)
    spec = learners.LearnerSpec(kind="ridge-ls", regularization=alpha)
    out = []
    for k in range(model.basis.size + 1):
        Xk, _ = d4_transform(data.X, model, k)
        out.append(learners.cv_accuracy(Xk, data.y, spec, folds=folds, seed=seed))
    return tuple(out)


def nearest_neighbours(emb: EmbeddingSet, word: str, k: int) -> tuple[str, ...]:
    """Top-k vocabulary words by cosine similarity, self excluded.

    Ties break toward the smaller vocabulary index.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    i = emb.index(word)
    if k == 0:
        return ()
    unit = emb.unit_vectors()
    sims = unit @ unit[i]
    sims[i] = -np.inf
    order = np.lexsort((np.arange(len(sims)), -sims))
    return tuple(emb.vocab[j] for j in order[:k])
