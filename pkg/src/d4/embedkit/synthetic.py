"""Planted-bias synthetic embeddings for tests and demos.

Two word groups sit at opposite offsets along a small hidden subspace of
bias directions (with per-word spread inside that subspace, so several
removal iterations are genuinely needed). Neutral words carry topic
cluster structure unrelated to the bias, mirroring how real vocabularies
organize by semantics; without it, two-means clustering of ranked
extremes degenerates to the selection axis itself. A block of sentinel
words is constructed exactly orthogonal to the span of all lexicon
vectors, so any direction fitted on the lexicon leaves them bit-for-bit
untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import EmbeddingSet, GenderLexicon


@dataclass(frozen=True)
class PlantedEmbedding:
    emb: EmbeddingSet
    lexicon: GenderLexicon
    bias_directions: np.ndarray  # (k, dim) orthonormal rows
    sentinel_words: tuple[str, ...]

    @property
    def bias_direction(self) -> np.ndarray:
        return self.bias_directions[0]


def make_planted_embedding(
    n_masculine: int = 200,
    n_feminine: int = 200,
    n_neutral: int = 900,
    n_sentinel: int = 100,
    dim: int = 450,
    bias_scales: tuple[float, ...] = (3.0,),
    bias_spread: float = 0.0,
    noise_scale: float = 0.1,
    n_topics: int = 12,
    topic_scale: float = 0.6,
    seed: int = 0,
) -> PlantedEmbedding:
    """Build the planted embedding, lexicon, and sentinel word list.

    Gendered word i gets the vector
        y_i * sum_j scales[j] b_j  +  spread * sum_j e_ij b_j  +  noise
    with y_i = +1 feminine / -1 masculine, orthonormal hidden directions
    b_j, and independent standard normal e_ij; a single-entry
    `bias_scales` plants a one-direction bias. Neutral words are assigned
    round-robin to `n_topics` topic centers carrying `topic_scale` of
    their norm. dim must exceed the lexicon size so the sentinel
    complement is non-empty. Neutral and sentinel vectors are scaled to
    the expected planted norm, keeping cosine geometry comparable.
    """
    n_lex = n_masculine + n_feminine
    if dim <= n_lex:
        raise ValueError(f"dim must exceed the lexicon size {n_lex} to carve out sentinels")
    if n_masculine < 1 or n_feminine < 1:
        raise ValueError("both planted groups must be non-empty")
    if not 0.0 <= topic_scale < 1.0:
        raise ValueError("topic_scale must lie in [0, 1)")
    if n_topics < 1:
        raise ValueError("n_topics must be >= 1")
    if bias_spread < 0:
        raise ValueError("bias_spread must be non-negative")
    scales = np.asarray(bias_scales, dtype=float)
    if scales.ndim != 1 or scales.size < 1 or np.any(scales <= 0):
        raise ValueError("bias_scales must be a non-empty tuple of positive reals")
    k = scales.size
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((dim, k)))
    bias = q.T.copy()  # (k, dim) orthonormal rows

    masc_words = ("he",) + tuple(f"masc{i:03d}" for i in range(1, n_masculine))
    fem_words = ("she",) + tuple(f"fem{i:03d}" for i in range(1, n_feminine))

    def planted(count: int, sign: float) -> np.ndarray:
        coeffs = sign * scales + bias_spread * rng.standard_normal((count, k))
        return coeffs @ bias + noise_scale * rng.standard_normal((count, dim))

    masc_vecs = planted(n_masculine, -1.0)
    fem_vecs = planted(n_feminine, +1.0)

    typical = np.sqrt(float(scales @ scales) + k * bias_spread**2 + dim * noise_scale**2)
    neutral_words = tuple(f"neut{i:04d}" for i in range(n_neutral))
    # Topic axes are built orthogonal to the bias span: topical structure
    # carries no gender signal.
    raw_topics = rng.standard_normal((dim, n_topics))
    raw_topics -= bias.T @ (bias @ raw_topics)
    topic_axes, _ = np.linalg.qr(raw_topics)
    assignments = np.arange(n_neutral) % n_topics
    ambient = np.sqrt(1.0 - topic_scale**2)
    neutral_vecs = typical * (
        topic_scale * topic_axes[:, assignments].T
        + (ambient / np.sqrt(dim)) * rng.standard_normal((n_neutral, dim))
    )

    lex_matrix = np.vstack([masc_vecs, fem_vecs])
    qq, _ = np.linalg.qr(lex_matrix.T, mode="complete")
    comp = qq[:, n_lex:]
    sentinel_words = tuple(f"sentinel{i:03d}" for i in range(n_sentinel))
    coeffs = rng.standard_normal((n_sentinel, comp.shape[1]))
    sentinel_vecs = (typical / np.sqrt(comp.shape[1])) * (coeffs @ comp.T)

    vocab = masc_words + fem_words + neutral_words + sentinel_words
    vectors = np.vstack([masc_vecs, fem_vecs, neutral_vecs, sentinel_vecs])
    emb = EmbeddingSet(vocab, vectors)
    lexicon = GenderLexicon(masc_words, fem_words, (("she", "he"),))
    return PlantedEmbedding(emb, lexicon, bias, sentinel_words)
